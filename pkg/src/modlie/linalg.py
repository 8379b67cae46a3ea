"""Exact dense linear algebra over a Field.

Matrices are numpy int64 arrays of packed field scalars.  Everything the
rest of the workbench does with ideals, tori and root spaces reduces to
the operations here: reduced row echelon form, kernels, canonical
subspaces and simultaneous eigenspaces of commuting operators.

Subspaces are kept in canonical RREF form, so two equal subspaces have
byte-identical basis matrices and equality is array comparison.
"""

from __future__ import annotations

import numpy as np

from modlie.field import Field


class LinalgError(ValueError):
    pass


def as_matrix(field, data):
    M = np.asarray(data, dtype=np.int64)
    if M.ndim == 1:
        M = M.reshape(1, -1)
    if field.k == 1:
        M = M % field.p
    return M


def fast_matmul_mod(A, B, p):
    """A @ B mod p, routed through BLAS when exactness allows.

    Entries must be reduced mod p; products fit float64 exactly whenever
    p^2 * inner_dim < 2^53, which covers every size this package touches.
    """
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    if A.size == 0 or B.size == 0:
        return np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
    if A.shape[1] * (p - 1) * (p - 1) < 2 ** 52 and A.shape[0] * B.shape[1] > 4096:
        C = np.rint(A.astype(np.float64) @ B.astype(np.float64)).astype(np.int64)
        return C % p
    return (A @ B) % p


class SpanBuilder:
    """Incrementally maintained canonical row space.

    Rows are reduced against the current basis in bulk (one matrix product)
    and only the survivors enter a small echelon merge, so feeding large row
    batches stays cheap.  `add` returns the number of new basis rows.
    """

    def __init__(self, field, ambient, rows=None):
        self.field = field
        self.ambient = ambient
        self.basis = np.zeros((0, ambient), dtype=np.int64)
        self.pivots = []
        self.last_added = np.zeros((0, ambient), dtype=np.int64)
        if rows is not None and len(rows):
            self.add(rows)

    @property
    def dim(self):
        return self.basis.shape[0]

    def reduce_rows(self, rows):
        rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
        if self.field.k == 1:
            rows = rows % self.field.p
        if self.dim == 0 or rows.shape[0] == 0:
            return rows
        if self.field.k == 1:
            coeff = rows[:, self.pivots]
            return (rows - fast_matmul_mod(coeff, self.basis, self.field.p)) \
                % self.field.p
        out = rows.copy()
        for t, pc in enumerate(self.pivots):
            f = out[:, pc].copy()
            nz = np.nonzero(f)[0]
            for r in nz:
                out[r] = self.field.vsub(out[r],
                                         self.field.vmul(self.basis[t],
                                                         np.int64(out[r, pc])))
        return out

    def add(self, rows, chunk=4096):
        rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
        added = 0
        fresh = []
        for start in range(0, rows.shape[0], chunk):
            block = self.reduce_rows(rows[start:start + chunk])
            block = block[block.any(axis=1)]
            if block.shape[0] == 0:
                continue
            # survivors vanish on existing pivot columns: echelonize just them
            R, rank, piv = rref(self.field, block)
            if rank == 0:
                continue
            R = R[:rank]
            if self.dim:
                # clear the new pivot columns out of the old rows
                if self.field.k == 1:
                    coeff = self.basis[:, piv]
                    self.basis = (self.basis
                                  - fast_matmul_mod(coeff, R, self.field.p)) \
                        % self.field.p
                else:
                    for t, pc in enumerate(piv):
                        f = self.basis[:, pc].copy()
                        for r in np.nonzero(f)[0]:
                            self.basis[r] = self.field.vsub(
                                self.basis[r],
                                self.field.vmul(R[t], np.int64(f[r])))
            allrows = np.concatenate([self.basis, R], axis=0)
            allpivs = list(self.pivots) + list(piv)
            order = np.argsort(allpivs, kind="stable")
            self.basis = allrows[order]
            self.pivots = [allpivs[i] for i in order]
            fresh.extend(list(R))
            added += rank
            if self.dim == self.ambient:
                break
        self.last_added = (np.array(fresh, dtype=np.int64)
                           if fresh else np.zeros((0, self.ambient), dtype=np.int64))
        return added

    def member(self, v):
        r = self.reduce_rows(np.atleast_2d(v))
        return not r.any()

    def subspace(self):
        return Subspace(self.field, self.ambient, self.basis, canonical=True)


def rref(field, M):
    """Reduced row echelon form.

    Returns (R, rank, pivot_columns).  Deterministic pivoting: leftmost
    column, first nonzero row.
    """
    M = as_matrix(field, M).copy()
    rows, cols = M.shape
    if rows == 0 or cols == 0:
        return M, 0, []
    row = 0
    pivots = []
    for col in range(cols):
        nz = np.nonzero(M[row:, col])[0]
        if len(nz) == 0:
            continue
        r = row + int(nz[0])
        if r != row:
            M[[row, r]] = M[[r, row]]
        pv = int(M[row, col])
        if pv != 1:
            M[row] = field.vmul(M[row], np.int64(field.inv(pv)))
        others = np.nonzero(M[:, col])[0]
        others = others[others != row]
        if len(others) > 0:
            if field.k == 1:
                M[others] = (M[others] - np.outer(M[others, col], M[row])) % field.p
            else:
                for rr in others:
                    f = int(M[rr, col])
                    M[rr] = field.vsub(M[rr], field.vmul(M[row], np.int64(f)))
        pivots.append(col)
        row += 1
        if row == rows:
            break
    return M, row, pivots


def kernel_matrix(field, M):
    """Canonical basis (rows) of the right null space of M."""
    M = as_matrix(field, M)
    rows, cols = M.shape
    R, rank, pivots = rref(field, M)
    free = [c for c in range(cols) if c not in pivots]
    if not free:
        return np.zeros((0, cols), dtype=np.int64)
    basis = np.zeros((len(free), cols), dtype=np.int64)
    for idx, fc in enumerate(free):
        basis[idx, fc] = 1
        for i, pc in enumerate(pivots):
            basis[idx, pc] = field.neg(int(R[i, fc]))
    B, _, _ = rref(field, basis)
    return B


def solve(field, A, b):
    """One solution x of A x = b, or None if inconsistent."""
    A = as_matrix(field, A)
    b = np.asarray(b, dtype=np.int64).reshape(-1)
    M = np.concatenate([A, b.reshape(-1, 1)], axis=1)
    R, rank, pivots = rref(field, M)
    n = A.shape[1]
    for i in range(rank):
        if pivots[i] == n:
            return None
    x = np.zeros(n, dtype=np.int64)
    for i, pc in enumerate(pivots):
        x[pc] = R[i, n]
    return x


def matrix_power(field, M, e):
    M = as_matrix(field, M)
    result = np.eye(M.shape[0], dtype=np.int64)
    base = M
    while e > 0:
        if e & 1:
            result = field.vmatmul(result, base)
        base = field.vmatmul(base, base)
        e >>= 1
    return result


def invert(field, M):
    M = as_matrix(field, M)
    n = M.shape[0]
    aug = np.concatenate([M, np.eye(n, dtype=np.int64)], axis=1)
    R, rank, pivots = rref(field, aug)
    if rank < n or pivots[:n] != list(range(n)):
        raise LinalgError("matrix not invertible")
    return R[:, n:]


class Subspace:
    """Canonical subspace of field^ambient: basis rows in RREF, no zero rows."""

    __slots__ = ("field", "ambient", "basis")

    def __init__(self, field, ambient, basis, canonical=False):
        self.field = field
        self.ambient = int(ambient)
        B = as_matrix(field, basis) if len(basis) else np.zeros((0, ambient), dtype=np.int64)
        if B.shape[1] != self.ambient:
            raise LinalgError(f"basis width {B.shape[1]} != ambient {self.ambient}")
        if not canonical:
            B, rank, _ = rref(field, B)
            B = B[:rank]
        self.basis = B
        self.basis.setflags(write=False)

    @classmethod
    def zero(cls, field, ambient):
        return cls(field, ambient, np.zeros((0, ambient), dtype=np.int64), canonical=True)

    @classmethod
    def full(cls, field, ambient):
        return cls(field, ambient, np.eye(ambient, dtype=np.int64), canonical=True)

    @property
    def dim(self):
        return self.basis.shape[0]

    def __eq__(self, other):
        return (isinstance(other, Subspace)
                and self.ambient == other.ambient
                and self.field == other.field
                and self.basis.shape == other.basis.shape
                and bool(np.array_equal(self.basis, other.basis)))

    def __hash__(self):
        return hash((self.ambient, self.basis.tobytes()))

    def __repr__(self):
        return f"Subspace(dim={self.dim}, ambient={self.ambient})"

    def _check_compat(self, other):
        if self.ambient != other.ambient or self.field != other.field:
            raise LinalgError("ambient space mismatch")

    def sum(self, other):
        self._check_compat(other)
        return Subspace(self.field, self.ambient,
                        np.concatenate([self.basis, other.basis], axis=0))

    def intersect(self, other):
        """Intersection via the kernel of the stacked system."""
        self._check_compat(other)
        if self.dim == 0 or other.dim == 0:
            return Subspace.zero(self.field, self.ambient)
        stacked = np.concatenate([self.basis.T, other.basis.T], axis=1)
        K = kernel_matrix(self.field, stacked)
        if K.shape[0] == 0:
            return Subspace.zero(self.field, self.ambient)
        coeffs = K[:, :self.dim]
        vecs = self.field.vmatmul(coeffs, self.basis)
        return Subspace(self.field, self.ambient, vecs)

    def contains(self, other):
        self._check_compat(other)
        return self.sum(other).dim == self.dim

    def member(self, vector):
        v = np.asarray(vector, dtype=np.int64).reshape(1, -1)
        if v.shape[1] != self.ambient:
            raise LinalgError("vector length mismatch")
        if self.field.k == 1:
            v = v % self.field.p
        if not v.any():
            return True
        stacked = np.concatenate([self.basis, v], axis=0)
        _, rank, _ = rref(self.field, stacked)
        return rank == self.dim

    def coords(self, vector):
        """Coordinates of `vector` in this basis, or None if not a member."""
        return solve(self.field, self.basis.T, vector)

    def complement_coords(self):
        """Indices of non-pivot coordinates: a canonical complement basis."""
        _, _, pivots = rref(self.field, self.basis)
        return [c for c in range(self.ambient) if c not in pivots]

    def change_field(self, big):
        """View this F_p subspace over an extension (packed encodings agree)."""
        if self.field.k != 1:
            raise LinalgError("change_field only from the prime field")
        return Subspace(big, self.ambient, self.basis.copy())


def subspace_from_vectors(field, ambient, vectors):
    if len(vectors) == 0:
        return Subspace.zero(field, ambient)
    return Subspace(field, ambient, np.array(vectors, dtype=np.int64))


def eigenspace(field, M, value, restrict_to=None):
    """Kernel of (M - value*I), optionally inside the row space `restrict_to`."""
    M = as_matrix(field, M)
    n = M.shape[0]
    shifted = M.copy()
    idx = np.arange(n)
    shifted[idx, idx] = field.vsub(shifted[idx, idx], np.int64(value))
    K = Subspace(field, n, kernel_matrix(field, shifted), canonical=True)
    if restrict_to is not None:
        K = K.intersect(restrict_to)
    return K


def commute(field, A, B):
    return bool(np.array_equal(field.vmatmul(A, B), field.vmatmul(B, A)))


def simultaneous_eigenspaces(field, ops, values):
    """Common eigenspaces of commuting operators.

    `ops` is a list of square matrices over `field` (checked pairwise
    commuting); `values` a list of scalar tuples.  Returns a dict mapping
    each tuple to the Subspace  intersection_i ker(ops_i - value_i).
    The empty operator family maps every (empty) tuple to the full space.
    """
    ops = [as_matrix(field, M) for M in ops]
    if len(ops) == 0:
        if any(len(t) != 0 for t in values):
            raise LinalgError("value tuple length mismatch")
        return {tuple(): Subspace.full(field, 0)}
    n = ops[0].shape[0]
    for M in ops:
        if M.shape != (n, n):
            raise LinalgError("operator size mismatch")
    for i in range(len(ops)):
        for j in range(i + 1, len(ops)):
            if not commute(field, ops[i], ops[j]):
                raise LinalgError("operators do not commute")
    out = {}
    for tup in values:
        if len(tup) != len(ops):
            raise LinalgError("value tuple length mismatch")
        space = Subspace.full(field, n)
        for M, lam in zip(ops, tup):
            space = eigenspace(field, M, int(lam), restrict_to=space)
            if space.dim == 0:
                break
        out[tuple(int(v) for v in tup)] = space
    return out
