"""Core operations on structure-constant presentations of Lie algebras.

A LieAlgebra is a dimension, a prime field, and a sparse antisymmetric
structure-constant table, optionally with a p-power table on basis
elements and a faithful matrix realization.  Everything downstream
(closures, radicals, minimal ideals, derivations, p-envelopes, centroids,
tensor splitting) works on this one representation.

Conventions:
  * vectors are numpy int64 coordinate arrays mod p;
  * sc stores only pairs i < j, antisymmetry is implicit;
  * the Jacobi identity is checked at construction, as the equivalent
    statement that ad is a homomorphism: ad([e_i,e_j]) = [ad e_i, ad e_j]
    for all pairs (sparse matrix identities, cheap even at dim ~250).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from modlie.dpa import DividedPowerAlgebra
from modlie.linalg import (
    SpanBuilder,
    Subspace,
    invert,
    kernel_matrix,
    matrix_power,
    rref,
    solve,
    subspace_from_vectors,
)

DENSE_CAP = 400


class LieAlgebraError(ValueError):
    pass


class LieAlgebra:
    """Lie algebra over GF(p) given by sparse structure constants.

    sc: dict {(i, j): ((k, c), ...)} for i < j, meaning [e_i, e_j] = sum c e_k.
    pmap: optional dict {i: coeff vector of e_i^{[p]}}.
    rep: optional stacked matrices (dim, m, m), a faithful realization with
         bracket = commutator; used for p-th powers of general elements.
    """

    def __init__(self, field, dim, sc, pmap=None, labels=None, rep=None,
                 check=True):
        if field.k != 1:
            raise LieAlgebraError("structure constants live over the prime field")
        self.field = field
        self.p = field.p
        self.dim = int(dim)
        self.sc = {}
        for (i, j), terms in sc.items():
            if i == j:
                continue
            if i > j:
                i, j = j, i
                terms = tuple((k, (-c) % self.p) for k, c in terms)
            terms = tuple((int(k), int(c) % self.p) for k, c in terms if c % self.p)
            if terms:
                self.sc[(int(i), int(j))] = terms
        self.labels = list(labels) if labels else None
        self.pmap = None
        if pmap is not None:
            self.pmap = {int(i): np.asarray(v, dtype=np.int64) % self.p
                         for i, v in pmap.items()}
        self.rep = None
        if rep is not None:
            self.rep = np.asarray(rep, dtype=np.int64) % self.p
        self._ads_sparse = None
        self._ad_stack = None
        self._ad_stack_T = None
        self._ad_tensor = None
        self._rep_solver = None
        self._center = None
        if check:
            self._check_jacobi()
            if self.pmap is not None:
                self._check_pmap()
            if self.rep is not None:
                self._check_rep()

    # -- tables ---------------------------------------------------------------

    def ads(self):
        if self._ads_sparse is None:
            mats = [sp.dok_matrix((self.dim, self.dim), dtype=np.int64)
                    for _ in range(self.dim)]
            for (i, j), terms in self.sc.items():
                for k, c in terms:
                    mats[i][k, j] = c
                    mats[j][k, i] = (-c) % self.p
            self._ads_sparse = [m.tocsr() for m in mats]
        return self._ads_sparse

    def ad(self, i):
        return self.ads()[i]

    def ad_dense(self, i):
        return self.ads()[i].toarray() % self.p

    def ad_stack(self, transpose=False):
        """Stacked sparse (dim*dim, dim): row block i holds ad(e_i)."""
        if transpose:
            if self._ad_stack_T is None:
                self._ad_stack_T = sp.vstack(
                    [m.T.tocsr() for m in self.ads()], format="csr")
            return self._ad_stack_T
        if self._ad_stack is None:
            self._ad_stack = sp.vstack(self.ads(), format="csr")
        return self._ad_stack

    def ad_tensor(self):
        """Dense stack of all ad(e_i) matrices (cached; moderate dims only)."""
        if self._ad_tensor is None:
            if self.dim > DENSE_CAP:
                raise LieAlgebraError("dimension above dense cap")
            T = np.zeros((self.dim, self.dim, self.dim), dtype=np.int64)
            for (i, j), terms in self.sc.items():
                for k, c in terms:
                    T[i, k, j] = c
                    T[j, k, i] = (-c) % self.p
            self._ad_tensor = T
        return self._ad_tensor

    def ad_matrix(self, v):
        """Dense matrix of ad(v)."""
        v = np.asarray(v, dtype=np.int64) % self.p
        nz = np.nonzero(v)[0]
        if len(nz) <= 3 and self._ad_tensor is None:
            M = np.zeros((self.dim, self.dim), dtype=np.int64)
            for i in nz:
                M += int(v[i]) * self.ads()[int(i)].toarray()
            return M % self.p
        return np.tensordot(v, self.ad_tensor(), axes=(0, 0)) % self.p

    # -- construction checks ----------------------------------------------------

    def _check_jacobi(self):
        ads = self.ads()
        p = self.p
        for i in range(self.dim):
            Ai = ads[i]
            for j in range(i + 1, self.dim):
                diff = Ai @ ads[j] - ads[j] @ Ai
                for k, c in self.sc.get((i, j), ()):
                    diff = diff - c * ads[k]
                if diff.nnz:
                    diff.data %= p
                    diff.eliminate_zeros()
                    if diff.nnz:
                        raise LieAlgebraError(
                            f"Jacobi identity fails at basis pair ({i}, {j})")

    def _check_pmap(self):
        for i, v in self.pmap.items():
            lhs = self.ad_matrix(v)
            rhs = matrix_power(self.field, self.ad_dense(i), self.p)
            if not np.array_equal(lhs, rhs % self.p):
                raise LieAlgebraError(f"p-map incompatible with ad at basis {i}")

    def _check_rep(self):
        if self.rep.shape[0] != self.dim:
            raise LieAlgebraError("rep size mismatch")
        flat = self.rep.reshape(self.dim, -1)
        _, rank, _ = rref(self.field, flat)
        if rank != self.dim:
            raise LieAlgebraError("rep not faithful")
        for (i, j), terms in self.sc.items():
            comm = (self.rep[i] @ self.rep[j] - self.rep[j] @ self.rep[i]) % self.p
            expect = np.zeros_like(comm)
            for k, c in terms:
                expect = (expect + c * self.rep[k]) % self.p
            if not np.array_equal(comm, expect):
                raise LieAlgebraError("rep does not realize the brackets")

    # -- brackets ---------------------------------------------------------------

    def bracket(self, u, v):
        u = np.asarray(u, dtype=np.int64) % self.p
        v = np.asarray(v, dtype=np.int64) % self.p
        if u.shape != (self.dim,) or v.shape != (self.dim,):
            raise LieAlgebraError("vector dimension mismatch")
        out = np.zeros(self.dim, dtype=np.int64)
        for i in np.nonzero(u)[0]:
            out += int(u[i]) * (self.ads()[int(i)] @ v)
        return out % self.p

    def bracket_rows(self, U, V):
        """All brackets [U_r, V_s], stacked as rows."""
        U = np.atleast_2d(np.asarray(U, dtype=np.int64)) % self.p
        V = np.atleast_2d(np.asarray(V, dtype=np.int64)) % self.p
        if U.shape[0] == 0 or V.shape[0] == 0:
            return np.zeros((0, self.dim), dtype=np.int64)
        out = []
        for u in U:
            M = self.ad_matrix(u)
            out.append((M @ V.T).T % self.p)
        return np.concatenate(out, axis=0)

    def bracket_span(self, A, B):
        rows = self.bracket_rows(self._basis_of(A), self._basis_of(B))
        return Subspace(self.field, self.dim, rows)

    def _basis_of(self, S):
        if isinstance(S, Subspace):
            return S.basis
        return np.atleast_2d(np.asarray(S, dtype=np.int64))

    def full_space(self):
        return Subspace.full(self.field, self.dim)

    def zero_space(self):
        return Subspace.zero(self.field, self.dim)

    def basis_vector(self, i):
        v = np.zeros(self.dim, dtype=np.int64)
        v[i] = 1
        return v

    def center(self):
        if self._center is None:
            self._center = centralizer(self, self.full_space())
        return self._center

    # -- p-powers ----------------------------------------------------------------

    def rep_matrices(self):
        """Faithful matrix realization: explicit rep if set, else ad (centerless)."""
        if self.rep is not None:
            return self.rep
        if self.center().dim != 0:
            raise LieAlgebraError("no faithful realization: center nonzero "
                                  "and no explicit rep provided")
        return np.stack([self.ad_dense(i) for i in range(self.dim)])

    def _get_rep_solver(self):
        if self._rep_solver is None:
            mats = self.rep_matrices()
            flat = mats.reshape(self.dim, -1) % self.p
            _, rank, pivots = rref(self.field, flat)
            if rank != self.dim:
                raise LieAlgebraError("rep span degenerate")
            T = invert(self.field, flat[:, pivots].T)
            self._rep_solver = (mats, flat, pivots, T)
        return self._rep_solver

    def element_matrix(self, v):
        mats, _, _, _ = self._get_rep_solver()
        v = np.asarray(v, dtype=np.int64) % self.p
        return np.tensordot(v, mats, axes=(0, 0)) % self.p

    def matrix_coords(self, M):
        """Coordinates of a matrix in the rep span, or None if outside."""
        _, flat, pivots, T = self._get_rep_solver()
        vec = M.reshape(-1) % self.p
        coords = (T @ vec[pivots]) % self.p
        if not np.array_equal((coords @ flat) % self.p, vec):
            return None
        return coords

    def p_power(self, v):
        """v^{[p]} computed inside the faithful matrix realization."""
        M = self.element_matrix(v)
        P = matrix_power(self.field, M, self.p)
        coords = self.matrix_coords(P)
        if coords is None:
            raise LieAlgebraError("p-th power leaves the algebra: not restricted")
        return coords

    def attach_pmap(self):
        """Compute and attach the canonical p-map (raises if not restrictable)."""
        self.pmap = {i: self.p_power(self.basis_vector(i)) for i in range(self.dim)}
        self._check_pmap()
        return self

    def is_restrictable(self):
        try:
            for i in range(self.dim):
                self.p_power(self.basis_vector(i))
            return True
        except LieAlgebraError:
            return False

    def is_abelian(self):
        return not self.sc

    def __repr__(self):
        return f"LieAlgebra(dim={self.dim}, p={self.p})"


class Homomorphism:
    """Linear map between Lie algebras, checked bracket-preserving on basis pairs."""

    def __init__(self, source, target, matrix, check=True):
        self.source = source
        self.target = target
        self.matrix = np.asarray(matrix, dtype=np.int64) % target.p
        if self.matrix.shape != (target.dim, source.dim):
            raise LieAlgebraError("homomorphism matrix shape mismatch")
        if check:
            self._verify()

    def _verify(self):
        M = self.matrix
        for i in range(self.source.dim):
            for j in range(i + 1, self.source.dim):
                lhs = (M @ self.source.bracket(self.source.basis_vector(i),
                                               self.source.basis_vector(j))) % self.target.p
                rhs = self.target.bracket(M[:, i], M[:, j])
                if not np.array_equal(lhs, rhs):
                    raise LieAlgebraError(f"not a homomorphism at pair ({i}, {j})")

    def apply(self, v):
        return (self.matrix @ (np.asarray(v, dtype=np.int64) % self.source.p)) % self.target.p

    def apply_space(self, S):
        if S.dim == 0:
            return Subspace.zero(self.target.field, self.target.dim)
        return Subspace(self.target.field, self.target.dim,
                        (S.basis @ self.matrix.T) % self.target.p)

    def preimage_space(self, S):
        if S.dim == self.target.dim:
            return Subspace.full(self.source.field, self.source.dim)
        comp = _complement_projector(self.target.field, S)
        K = kernel_matrix(self.source.field, (comp @ self.matrix) % self.target.p)
        return Subspace(self.source.field, self.source.dim, K, canonical=True)

    def compose(self, inner):
        return Homomorphism(inner.source, self.target,
                            (self.matrix @ inner.matrix) % self.target.p, check=False)


def _complement_projector(field, S):
    """Matrix whose kernel is exactly the subspace S."""
    if S.dim == 0:
        return np.eye(S.ambient, dtype=np.int64)
    return kernel_matrix(field, S.basis)


# ---------------------------------------------------------------------------
# closures, series, solvability
# ---------------------------------------------------------------------------

def _as_space(L, S):
    if isinstance(S, Subspace):
        return S
    return subspace_from_vectors(L.field, L.dim, np.atleast_2d(np.asarray(S)))


def subalgebra_closure(L, S):
    """Smallest bracket-closed subspace containing S."""
    cur = _as_space(L, S)
    while True:
        nxt = cur.sum(L.bracket_span(cur, cur))
        if nxt.dim == cur.dim:
            return cur
        cur = nxt


def ideal_closure(L, S):
    """Smallest ideal containing S."""
    cur = _as_space(L, S)
    if cur.dim == 0:
        return cur
    return spin(L, cur.basis)


def series(L, kind, I=None):
    """Derived or lower central series of the subalgebra I.

    Returns the strictly decreasing chain, last entry = stable term.
    """
    I = L.full_space() if I is None else _as_space(L, I)
    if subalgebra_closure(L, I).dim != I.dim:
        raise LieAlgebraError("series input is not a subalgebra")
    chain = [I]
    while True:
        cur = chain[-1]
        if kind == "derived":
            nxt = L.bracket_span(cur, cur)
        elif kind == "lower_central":
            nxt = L.bracket_span(I, cur)
        else:
            raise LieAlgebraError(f"unknown series kind {kind!r}")
        if nxt.dim == cur.dim:
            return chain
        chain.append(nxt)
        if nxt.dim == 0:
            return chain


def derived_stable(L, I=None):
    return series(L, "derived", I)[-1]


def is_solvable(L, I=None):
    return series(L, "derived", I)[-1].dim == 0


def is_solvable_space(L, S):
    """Solvability of a subspace via its derived chain (S need not be closed)."""
    cur = S
    while cur.dim:
        nxt = L.bracket_span(cur, cur)
        if nxt.dim >= cur.dim:
            return False
        cur = nxt
    return True


def is_nilpotent_action(L, A, V):
    """True iff V >= [A,V] >= [A,[A,V]] >= ... reaches zero (A acts on invariant V)."""
    A = _as_space(L, A)
    cur = _as_space(L, V)
    steps = 0
    while cur.dim > 0:
        nxt = L.bracket_span(A, cur)
        if not cur.contains(nxt):
            raise LieAlgebraError("target space is not invariant under the action")
        if nxt.dim == cur.dim:
            return False
        cur = nxt
        steps += 1
        if steps > L.dim + 1:
            return False
    return True


# ---------------------------------------------------------------------------
# centralizers and friends
# ---------------------------------------------------------------------------

def centralizer(L, S):
    """{x : [x, s] = 0 for all s in S}."""
    B = L._basis_of(S)
    if B.shape[0] == 0:
        return L.full_space()
    if B.shape[0] <= 8:
        mats = [L.ad_matrix(b) for b in B]
        stacked = np.concatenate(mats, axis=0)
        return Subspace(L.field, L.dim,
                        kernel_matrix(L.field, stacked), canonical=True)
    # large families: intersect kernels one at a time, stopping at zero
    cur = L.full_space()
    for b in B:
        K = Subspace(L.field, L.dim,
                     kernel_matrix(L.field, L.ad_matrix(b)), canonical=True)
        cur = cur.intersect(K)
        if cur.dim == 0:
            return cur
    return cur


def normalizer(L, S):
    """{x : [x, S] <= S} for a subspace S."""
    S = _as_space(L, S)
    if S.dim == 0 or S.dim == L.dim:
        return L.full_space()
    proj = _complement_projector(L.field, S)
    mats = [(proj @ L.ad_matrix(b)) % L.p for b in S.basis]
    stacked = np.concatenate(mats, axis=0)
    return Subspace(L.field, L.dim, kernel_matrix(L.field, stacked), canonical=True)


def center(L):
    return L.center()


# ---------------------------------------------------------------------------
# quotients and subalgebra restriction
# ---------------------------------------------------------------------------

def quotient(L, I, check_ideal=True):
    """(L/I, projection homomorphism).  I must be an ideal."""
    I = _as_space(L, I)
    if check_ideal and not I.contains(L.bracket_span(L.full_space(), I)):
        raise LieAlgebraError("quotient by a non-ideal")
    n, p = L.dim, L.p
    comp = I.complement_coords()
    q = len(comp)
    _, _, piv = rref(L.field, I.basis)
    P = np.zeros((q, n), dtype=np.int64)
    for r, c in enumerate(comp):
        P[r, c] = 1
        for t, pc in enumerate(piv):
            P[r, pc] = (P[r, pc] - I.basis[t, c]) % p
    sc = {}
    for a in range(q):
        ea = np.zeros(n, dtype=np.int64)
        ea[comp[a]] = 1
        for b in range(a + 1, q):
            eb = np.zeros(n, dtype=np.int64)
            eb[comp[b]] = 1
            w = (P @ L.bracket(ea, eb)) % p
            terms = tuple((int(k), int(w[k])) for k in np.nonzero(w)[0])
            if terms:
                sc[(a, b)] = terms
    Q = LieAlgebra(L.field, q, sc, check=False)
    return Q, Homomorphism(L, Q, P, check=False)


def subalgebra(L, S, check=True):
    """(structure on the bracket-closed subspace S, embedding homomorphism)."""
    S = _as_space(L, S)
    B = S.basis
    r = B.shape[0]
    _, _, piv = rref(L.field, B)
    sc = {}
    for a in range(r):
        for b in range(a + 1, r):
            w = L.bracket(B[a], B[b])
            coords = w[piv] % L.p  # RREF basis: member coords are pivot entries
            if check and not np.array_equal((coords @ B) % L.p, w):
                raise LieAlgebraError("subspace is not bracket-closed")
            terms = tuple((int(k), int(coords[k])) for k in np.nonzero(coords)[0])
            if terms:
                sc[(a, b)] = terms
    A = LieAlgebra(L.field, r, sc, check=False)
    return A, Homomorphism(A, L, B.T, check=check)


# ---------------------------------------------------------------------------
# module spinning and irreducibility certificates
# ---------------------------------------------------------------------------

def spin(L, vectors, transpose=False):
    """Smallest subspace containing `vectors` stable under every ad(e_i)
    (or every transposed action)."""
    V = np.atleast_2d(np.asarray(vectors, dtype=np.int64)) % L.p
    stack = L.ad_stack(transpose=transpose)
    sb = SpanBuilder(L.field, L.dim, V)
    frontier = list(sb.last_added)
    while frontier and sb.dim < L.dim:
        batch = np.array(frontier[:32], dtype=np.int64)
        frontier = frontier[32:]
        imgs = (stack @ batch.T) % L.p
        imgs = np.ascontiguousarray(imgs.T).reshape(-1, L.dim)
        if sb.add(imgs):
            frontier.extend(list(sb.last_added))
    return sb.subspace()


def _coords_in(field, U, vectors):
    """Coordinates of member vectors in the canonical basis of U."""
    _, _, piv = rref(field, U.basis)
    V = np.atleast_2d(vectors)
    return V[:, piv] % field.p


def _restricted_gens(L, U):
    """ad(e_i) restricted to the invariant subspace U, in U-coordinates."""
    B = U.basis
    _, _, piv = rref(L.field, B)
    gens = []
    for i in range(L.dim):
        img = (L.ads()[i] @ B.T) % L.p   # columns [e_i, b_s]
        gens.append(img[piv, :] % L.p)
    return [g for g in gens if g.any()] or [np.zeros((U.dim, U.dim), dtype=np.int64)]


def _spin_coords(field, gens, start, dim):
    sb = SpanBuilder(field, dim, np.atleast_2d(start))
    new = sb.last_added
    while new.shape[0] and sb.dim < dim:
        imgs = np.concatenate([((G @ new.T).T % field.p) for G in gens], axis=0)
        if not sb.add(imgs):
            break
        new = sb.last_added
    return sb.subspace()


def _random_combo(field, gens, rng):
    d = gens[0].shape[0]
    M = np.zeros((d, d), dtype=np.int64)
    for c, G in zip(rng.integers(0, field.p, size=len(gens)), gens):
        if c:
            M += int(c) * G
    return M % field.p


def _best_singular_shift(field, theta, dim):
    """(theta - lambda, kernel) minimizing positive nullity over scalar shifts.

    Scalar shifts keep every submodule invariant, so shifted elements remain
    valid for the spinning criterion while their kernels are far smaller.
    """
    best = None
    idx = np.arange(dim)
    for lam in range(field.p):
        M = theta.copy()
        M[idx, idx] = (M[idx, idx] - lam) % field.p
        K = kernel_matrix(field, M)
        if 0 < K.shape[0] < dim and (best is None or K.shape[0] < best[1].shape[0]):
            best = (M, K)
            if K.shape[0] == 1:
                break
    return best


def _kernel_lines(field, K, cap=5):
    """Projective representatives of the row space of K, or None above cap.

    Every line must be spun for the irreducibility certificate: a kernel
    vector hiding inside a proper submodule need not be a basis vector.
    """
    import itertools
    d = K.shape[0]
    if d > cap:
        return None
    p = field.p
    out = []
    for lead in range(d):
        for tail in itertools.product(range(p), repeat=d - lead - 1):
            coeff = np.zeros(d, dtype=np.int64)
            coeff[lead] = 1
            coeff[lead + 1:] = tail
            out.append((coeff @ K) % p)
    return out


def _norton_certificate(field, gens, dim, rng, tries=30):
    """Irreducibility of a coordinate module, by singular-element spinning.

    Returns (True, None) when certified irreducible, else (False, W) with W
    a proper nonzero invariant subspace.
    """
    if dim == 1:
        return True, None
    gens_t = None
    for _ in range(tries):
        cand = _best_singular_shift(field, _random_combo(field, gens, rng), dim)
        if cand is None:
            continue
        theta, K = cand
        lines = _kernel_lines(field, K)
        if lines is None:
            continue
        witness = None
        for w in lines:
            U = _spin_coords(field, gens, w, dim)
            if 0 < U.dim < dim:
                witness = U
                break
        if witness is not None:
            return False, witness
        if gens_t is None:
            gens_t = [G.T % field.p for G in gens]
        Kt = kernel_matrix(field, theta.T)
        Ud = _spin_coords(field, gens_t, Kt[0], dim)
        if Ud.dim < dim:
            W = Subspace(field, dim, kernel_matrix(field, Ud.basis), canonical=True)
            return False, W
        return True, None
    raise LieAlgebraError("no singular enveloping element found; "
                          "cannot certify irreducibility")


def find_minimal_submodule(L, start, rng):
    """A certified-minimal nonzero submodule of the adjoint module inside spin(start)."""
    U = spin(L, start)
    while True:
        gens = _restricted_gens(L, U)
        ok, W = _norton_certificate(L.field, gens, U.dim, rng)
        if ok:
            return U
        U = Subspace(L.field, L.dim, (W.basis @ U.basis) % L.p)


def minimal_ideals(L, seed=0):
    """All minimal nonzero ideals, by seeded spinning plus shrinking.

    The census is certified complete once the centralizer of the sum of the
    found ideals lies inside that sum: any further minimal ideal would
    bracket every found one into the (trivial) pairwise intersection, hence
    centralize the sum.
    """
    if L.dim == 0:
        return []
    rng = np.random.default_rng(seed)
    found = []
    total = L.zero_space()

    def try_start(v):
        nonlocal total
        if total.member(v):
            return False
        U = find_minimal_submodule(L, v, rng)
        if any(U == F for F in found):
            return False
        for F in found:
            if U.intersect(F).dim:
                raise LieAlgebraError("distinct minimal ideals intersect (bug)")
        found.append(U)
        total = total.sum(U)
        return True

    for i in range(L.dim):
        if total.dim == L.dim:
            break
        try_start(L.basis_vector(i))
    for _ in range(20):
        if total.dim == L.dim:
            break
        v = rng.integers(0, L.p, size=L.dim) % L.p
        if v.any():
            try_start(v)
    for _ in range(L.dim):
        Cz = centralizer(L, total)
        if total.contains(Cz):
            break
        progressed = False
        for v in Cz.basis:
            if not total.member(v):
                if try_start(v):
                    progressed = True
        if not progressed:
            break
    found.sort(key=lambda S: (S.dim, S.basis.tobytes()))
    return found


def is_simple(L, seed=0):
    """Nonabelian with irreducible adjoint module (certified)."""
    if L.dim <= 1 or L.is_abelian():
        return False
    if L.center().dim:
        return False
    rng = np.random.default_rng(seed)
    ok, _ = _norton_certificate_adjoint(L, rng)
    return ok


def _norton_certificate_adjoint(L, rng, tries=30):
    """Norton test on the full adjoint module using sparse spins."""
    n = L.dim
    if n == 1:
        return True, None
    for _ in range(tries):
        cand = None
        for _probe in range(6):
            v = rng.integers(0, L.p, size=n) % L.p
            probe = _best_singular_shift(L.field, L.ad_matrix(v), n)
            if probe is not None and (cand is None
                                      or probe[1].shape[0] < cand[1].shape[0]):
                cand = probe
            if cand is not None and cand[1].shape[0] <= 3:
                break
        if cand is None:
            continue
        theta, K = cand
        lines = _kernel_lines(L.field, K)
        if lines is None:
            continue
        witness = None
        for w in lines:
            U = spin(L, w)
            if 0 < U.dim < n:
                witness = U
                break
        if witness is not None:
            return False, witness
        Kt = kernel_matrix(L.field, theta.T)
        Ud = spin(L, Kt[0], transpose=True)
        if Ud.dim < n:
            W = Subspace(L.field, n, kernel_matrix(L.field, Ud.basis), canonical=True)
            return False, W
        return True, None
    raise LieAlgebraError("no singular enveloping element found on the adjoint module")


# ---------------------------------------------------------------------------
# solvable radical
# ---------------------------------------------------------------------------

def solvable_radical(L, seed=0):
    """Maximal solvable ideal.

    Recursion on one certified-minimal ideal I: if I is abelian the radical
    is the preimage of the radical of L/I; otherwise the radical meets I
    trivially, so it centralizes I and equals the radical of the strictly
    smaller ideal c_L(I).
    """
    rng = np.random.default_rng(seed)
    R = _radical_rec(L, rng, 0)
    if not is_solvable_space(L, R):
        raise LieAlgebraError("radical candidate not solvable (bug)")
    if not R.contains(L.bracket_span(L.full_space(), R)):
        raise LieAlgebraError("radical candidate not an ideal (bug)")
    return R


def _radical_rec(L, rng, depth):
    if depth > 300:
        raise LieAlgebraError("radical recursion too deep")
    if L.dim == 0:
        return L.zero_space()
    if is_solvable(L):
        return L.full_space()
    I = find_minimal_submodule(L, L.basis_vector(0), rng)
    if L.bracket_span(I, I).dim == 0:
        Q, proj = quotient(L, I, check_ideal=False)
        return proj.preimage_space(_radical_rec(Q, rng, depth + 1))
    Cz = centralizer(L, I)
    if Cz.dim == 0:
        return L.zero_space()
    Csub, emb = subalgebra(L, Cz, check=False)
    return emb.apply_space(_radical_rec(Csub, rng, depth + 1))


# ---------------------------------------------------------------------------
# equivariant solvers: derivations and centroid
# ---------------------------------------------------------------------------

def generating_set(L, rng=None, tries=8):
    """Small generating set, preferring two random generators."""
    if L.dim == 0:
        return []
    rng = rng if rng is not None else np.random.default_rng(0)
    for _ in range(tries):
        cand = rng.integers(0, L.p, size=(2, L.dim)) % L.p
        _, rk, _ = rref(L.field, cand)
        if rk < 2:
            continue
        if subalgebra_closure(L, cand).dim == L.dim:
            return [cand[0], cand[1]]
    gens = []
    span = L.zero_space()
    for i in range(L.dim):
        if not span.member(L.basis_vector(i)):
            gens.append(L.basis_vector(i))
            span = subalgebra_closure(
                L, subspace_from_vectors(L.field, L.dim, np.array(gens)))
            if span.dim == L.dim:
                break
    return gens


def _bracket_tree(L, gens):
    """Basis of L where each element is a generator or one bracket of earlier
    elements; alongside parameter matrices M_m with D(v_m) = M_m @ u for the
    stacked generator images u."""
    n, p = L.dim, L.p
    s = len(gens)
    vecs, mats, admats = [], [], []
    basis = L.zero_space()
    for a, g in enumerate(gens):
        if basis.member(g):
            raise LieAlgebraError("generators must be independent")
        M = np.zeros((n, s * n), dtype=np.int64)
        M[:, a * n:(a + 1) * n] = np.eye(n, dtype=np.int64)
        vecs.append(np.asarray(g, dtype=np.int64) % p)
        mats.append(M)
        admats.append(L.ad_matrix(g))
        basis = basis.sum(subspace_from_vectors(L.field, n, [g]))
    frontier = list(range(len(vecs)))
    while basis.dim < n:
        new_frontier = []
        for b in frontier:
            for a in range(len(vecs)):
                if a == b:
                    continue
                w = L.bracket(vecs[a], vecs[b])
                if not w.any() or basis.member(w):
                    continue
                Mw = (admats[a] @ mats[b] - admats[b] @ mats[a]) % p
                vecs.append(w)
                mats.append(Mw)
                admats.append(L.ad_matrix(w))
                new_frontier.append(len(vecs) - 1)
                basis = basis.sum(subspace_from_vectors(L.field, n, [w]))
                if basis.dim == n:
                    break
            if basis.dim == n:
                break
        if basis.dim < n and not new_frontier:
            raise LieAlgebraError("generating set does not generate")
        frontier = new_frontier
    return np.array(vecs, dtype=np.int64), mats, admats


class _ConstraintSystem:
    """Incremental RREF accumulator over GF(p)."""

    def __init__(self, field, ncols):
        self.field = field
        self.ncols = ncols
        self.rows = np.zeros((0, ncols), dtype=np.int64)

    @property
    def rank(self):
        return self.rows.shape[0]

    def add(self, block):
        block = block[block.any(axis=1)]
        if block.shape[0] == 0:
            return False
        stacked = np.concatenate([self.rows, block], axis=0)
        R, rank, _ = rref(self.field, stacked)
        grew = rank > self.rank
        self.rows = R[:rank]
        return grew

    def solutions(self):
        if self.rank == 0:
            return np.eye(self.ncols, dtype=np.int64)
        return kernel_matrix(self.field, self.rows)


def derivations(L, seed=0):
    """The full derivation algebra of L.

    A derivation is determined by its images on a generating set; the
    consistency constraints over all pairs of a bracket-spanning basis are
    exactly the Leibniz identities on a basis.  Constraints are consumed in
    a seeded order with early exit once only inner derivations survive, and
    every surviving solution is verified against all basis actions.

    Returns (Der as LieAlgebra with matrix rep and canonical p-map,
    the map x -> ad x as a Homomorphism into it).
    """
    n, p = L.dim, L.p
    if n == 0:
        raise LieAlgebraError("no derivations of the zero algebra")
    rng = np.random.default_rng(seed)
    gens = generating_set(L, rng)
    V, mats, admats = _bracket_tree(L, gens)
    ncols = len(gens) * n
    Tinv = invert(L.field, V.T)
    inner_rank_target = ncols - (n - L.center().dim)
    sys_ = _ConstraintSystem(L.field, ncols)
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    order = list(rng.permutation(len(pairs)))
    Mstack = np.array(mats)

    def consume(pos, budget, stop_rank):
        stable = 0
        while pos < len(order):
            a, b = pairs[order[pos]]
            pos += 1
            w = L.bracket(V[a], V[b])
            lam = (Tinv @ w) % p
            block = (admats[a] @ mats[b] - admats[b] @ mats[a]) % p
            for m in np.nonzero(lam)[0]:
                block = block - int(lam[m]) * mats[m]
            grew = sys_.add(block % p)
            stable = 0 if grew else stable + 1
            budget -= 1
            if sys_.rank >= stop_rank or stable > 40 or budget == 0:
                break
        return pos

    pos = consume(0, len(order), inner_rank_target)
    if sys_.rank == inner_rank_target:
        # only the inner derivations survive: certificate by dimension count
        ders = _assemble_operators(L, V, Mstack, sys_.solutions())
    elif n > 150:
        consume(pos, len(order), ncols)  # exhaustive: stream = full Leibniz system
        ders = _assemble_operators(L, V, Mstack, sys_.solutions())
    else:
        while True:
            sol = sys_.solutions()
            ders = _assemble_operators(L, V, Mstack, sol)
            if _verify_derivations(L, ders):
                break
            if pos >= len(order):
                raise LieAlgebraError("Leibniz verification failed on the full system")
            pos = consume(pos, 200, ncols)
    if ders.shape[0] == n - L.center().dim and L.center().dim == 0:
        inner = np.stack([L.ad_dense(i) for i in range(n)])
        if _span_equal(L.field, ders.reshape(ders.shape[0], -1),
                       inner.reshape(n, -1)):
            Der = LieAlgebra(L.field, n, L.sc, rep=inner, check=False)
            Der.attach_pmap()
            return Der, Homomorphism(L, Der, np.eye(n, dtype=np.int64), check=False)
    Der = matrix_lie_algebra(L.field, ders, attach_pmap=True)
    return Der, adjoint_hom(L, Der)


def _assemble_operators(L, V, Mstack, sol):
    p = L.p
    Vinv = invert(L.field, V)
    out = []
    for u in sol:
        images = np.tensordot(Mstack, u % p, axes=(2, 0)) % p  # (tree, n)
        D = (images.T @ Vinv.T) % p
        out.append(D)
    return np.array(out, dtype=np.int64) if out else np.zeros((0, L.dim, L.dim),
                                                              dtype=np.int64)


def _verify_derivations(L, ders):
    """True iff every operator satisfies Leibniz: [D, ad(e_i)] = ad(D e_i)."""
    p = L.p
    ADT = L.ad_tensor()
    for D in ders:
        lhs = (np.tensordot(D, ADT, axes=(1, 1)).transpose(1, 0, 2)
               - np.tensordot(ADT, D, axes=(2, 0))) % p
        rhs = np.tensordot(D, ADT, axes=(0, 0)) % p
        if not np.array_equal(lhs % p, rhs):
            return False
    return True


def _span_equal(field, A, B):
    RA, ra, _ = rref(field, A)
    RB, rb, _ = rref(field, B)
    return ra == rb and np.array_equal(RA[:ra], RB[:rb])


def matrix_lie_algebra(field, mats, attach_pmap=False, verify_coords=16):
    """LieAlgebra on a commutator-closed independent family of matrices.

    Structure constants come from sparse commutators; coordinates are
    extracted through the pivot transform of the flattened span, verified
    on a sample (the Jacobi check below catches global inconsistencies).
    """
    p = field.p
    mats = np.asarray(mats, dtype=np.int64) % p
    d = mats.shape[0]
    flat = mats.reshape(d, -1)
    R, rank, pivots = rref(field, flat)
    if rank != d:
        raise LieAlgebraError("matrix family not independent")
    T = invert(field, flat[:, pivots].T)
    sparse = [sp.csr_matrix(M) for M in mats]

    def coords(M, check):
        vec = np.asarray(M).reshape(-1) % p
        c = (T @ vec[pivots]) % p
        if check and not np.array_equal((c @ flat) % p, vec):
            raise LieAlgebraError("matrix outside the span (family not closed)")
        return c

    sc = {}
    count = 0
    for i in range(d):
        for j in range(i + 1, d):
            comm = sparse[i] @ sparse[j] - sparse[j] @ sparse[i]
            comm = np.asarray(comm.todense()) % p
            count += 1
            c = coords(comm, check=(count <= verify_coords or d <= 40))
            terms = tuple((int(k), int(c[k])) for k in np.nonzero(c)[0])
            if terms:
                sc[(i, j)] = terms
    pmap = None
    if attach_pmap:
        pmap = {i: coords(matrix_power(field, mats[i], p), check=True)
                for i in range(d)}
    return LieAlgebra(field, d, sc, pmap=pmap, rep=mats, check=True)


def adjoint_hom(L, Der):
    """The map x -> ad(x) into a derivation algebra with matrix rep."""
    flat = Der.rep.reshape(Der.dim, -1)
    cols = []
    for i in range(L.dim):
        c = solve(Der.field, flat.T, L.ad_dense(i).reshape(-1))
        if c is None:
            raise LieAlgebraError("ad image not inside the derivation algebra")
        cols.append(c)
    M = np.array(cols, dtype=np.int64).T % L.p
    return Homomorphism(L, Der, M, check=True)


# ---------------------------------------------------------------------------
# p-envelope
# ---------------------------------------------------------------------------

def p_envelope(L):
    """Smallest p-power-closed matrix algebra over the faithful image of L.

    Uses the rep matrices (the adjoint realization by default; p-th powers
    of derivations are derivations, so this is the envelope inside the full
    derivation algebra).  Returns (envelope, embedding).  When L is already
    closed the envelope shares L's structure constants.
    """
    field = L.field
    mats = L.rep_matrices() % L.p
    msize = mats.shape[1]
    span = Subspace(field, msize * msize, mats.reshape(L.dim, -1))
    if span.dim != L.dim:
        raise LieAlgebraError("faithful rep required for the envelope")
    all_mats = [m for m in mats]
    frontier = list(all_mats)
    grew_any = False
    while frontier:
        new = []
        for M in frontier:
            P = matrix_power(field, M, L.p)
            if not span.member(P.reshape(-1)):
                span = span.sum(subspace_from_vectors(field, P.size, [P.reshape(-1)]))
                all_mats.append(P)
                new.append(P)
                grew_any = True
        frontier = new
    if not grew_any:
        E = LieAlgebra(field, L.dim, L.sc, rep=mats, check=False)
        E.attach_pmap()
        return E, Homomorphism(L, E, np.eye(L.dim, dtype=np.int64), check=False)
    E = matrix_lie_algebra(field, np.array(all_mats, dtype=np.int64),
                           attach_pmap=True)
    flatE = E.rep.reshape(E.dim, -1)
    cols = [solve(field, flatE.T, M.reshape(-1)) for M in mats]
    emb = Homomorphism(L, E, np.array(cols, dtype=np.int64).T, check=False)
    return E, emb


# ---------------------------------------------------------------------------
# centroid and tensor factorization
# ---------------------------------------------------------------------------

class Centroid:
    """Operators commuting with every bracket action, as an associative algebra."""

    def __init__(self, field, matrices):
        self.field = field
        self.matrices = matrices
        self.dim = matrices.shape[0]
        flat = matrices.reshape(self.dim, -1) % field.p
        _, _, pivots = rref(field, flat)
        self._flat = flat
        self._pivots = pivots
        self._T = invert(field, flat[:, pivots].T)

    def coords(self, M):
        vec = np.asarray(M).reshape(-1) % self.field.p
        c = (self._T @ vec[self._pivots]) % self.field.p
        if not np.array_equal((c @ self._flat) % self.field.p, vec):
            raise LieAlgebraError("operator outside the centroid span")
        return c

    def element(self, coords):
        return np.tensordot(np.asarray(coords) % self.field.p, self.matrices,
                            axes=(0, 0)) % self.field.p

    def is_commutative(self):
        p = self.field.p
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                A, B = self.matrices[i], self.matrices[j]
                if not np.array_equal((A @ B) % p, (B @ A) % p):
                    return False
        return True

    def radical(self):
        """Nilpotent elements: kernel of c -> c^{p^e}, additive since commutative."""
        p = self.field.p
        e = 1
        while p ** e < max(self.matrices.shape[1], 2):
            e += 1
        rows = [self.coords(matrix_power(self.field, self.matrices[i], p ** e))
                for i in range(self.dim)]
        Phi = np.array(rows, dtype=np.int64).T % p   # columns = images of basis
        K = kernel_matrix(self.field, Phi)
        return Subspace(self.field, self.dim, K, canonical=True)

    def radical_nilpotency_index(self, rad=None):
        """Smallest t with rad^t = 0 as an operator space."""
        rad = self.radical() if rad is None else rad
        if rad.dim == 0:
            return 0
        p = self.field.p
        cur = [self.element(c) for c in rad.basis]
        t = 1
        while True:
            rows = []
            for A in cur:
                for c in rad.basis:
                    M = (A @ self.element(c)) % p
                    if M.any():
                        rows.append(M.reshape(-1))
            if not rows:
                return t + 1
            R, rank, _ = rref(self.field, np.array(rows, dtype=np.int64))
            cur = [R[i].reshape(cur[0].shape) for i in range(rank)]
            t += 1
            if t > self.dim + 2:
                raise LieAlgebraError("centroid radical fails to be nilpotent")


def centroid(L, seed=0):
    """The centroid of L, solved on module generators of the adjoint module."""
    n, p = L.dim, L.p
    rng = np.random.default_rng(seed)
    gens = []
    span = L.zero_space()
    for i in range(n):
        if not span.member(L.basis_vector(i)):
            gens.append(L.basis_vector(i))
            span = spin(L, np.array(gens))
            if span.dim == n:
                break
    s = len(gens)
    # spin tree: each element is [e_i, earlier]; C(v) = M_v @ u
    vecs, mats = [], []
    basis = L.zero_space()
    for a, g in enumerate(gens):
        M = np.zeros((n, s * n), dtype=np.int64)
        M[:, a * n:(a + 1) * n] = np.eye(n, dtype=np.int64)
        vecs.append(g)
        mats.append(M)
        basis = basis.sum(subspace_from_vectors(L.field, n, [g]))
    frontier = list(range(len(vecs)))
    sel, spansel = [], L.zero_space()
    while basis.dim < n:
        new_frontier = []
        for b in frontier:
            for i in range(n):
                w = (L.ads()[i] @ vecs[b]) % p
                if not w.any() or basis.member(w):
                    continue
                vecs.append(w)
                mats.append((L.ad_dense(i) @ mats[b]) % p)
                new_frontier.append(len(vecs) - 1)
                basis = basis.sum(subspace_from_vectors(L.field, n, [w]))
                if basis.dim == n:
                    break
            if basis.dim == n:
                break
        if basis.dim < n and not new_frontier:
            raise LieAlgebraError("adjoint module generators insufficient (bug)")
        frontier = new_frontier
    for idx in range(len(vecs)):
        if not spansel.member(vecs[idx]):
            sel.append(idx)
            spansel = spansel.sum(subspace_from_vectors(L.field, n, [vecs[idx]]))
    V = np.array([vecs[i] for i in sel], dtype=np.int64)
    Msel = [mats[i] for i in sel]
    Mstack = np.array(Msel)
    Tinv = invert(L.field, V.T)
    ncols = s * n
    sys_ = _ConstraintSystem(L.field, ncols)
    items = [(i, a) for i in range(n) for a in range(len(sel))]
    order = list(rng.permutation(len(items)))

    def consume(pos, budget):
        stable = 0
        while pos < len(order):
            i, a = items[order[pos]]
            pos += 1
            w = (L.ads()[i] @ V[a]) % p
            lam = (Tinv @ w) % p
            block = (L.ad_dense(i) @ Msel[a]) % p
            for m in np.nonzero(lam)[0]:
                block = block - int(lam[m]) * Msel[m]
            grew = sys_.add(block % p)
            stable = 0 if grew else stable + 1
            budget -= 1
            if sys_.rank >= ncols - 1 or stable > 40 or budget == 0:
                break
        return pos

    pos = consume(0, len(order))
    while True:
        sol = sys_.solutions()
        ops = _assemble_operators(L, V, Mstack, sol)
        if _verify_centroid(L, ops):
            break
        if pos >= len(order):
            raise LieAlgebraError("centroid verification failed on the full system")
        pos = consume(pos, 200)
    return Centroid(L.field, ops)


def _verify_centroid(L, ops):
    p = L.p
    for C in ops:
        for i in range(L.dim):
            Ai = L.ads()[i]
            if not np.array_equal(np.asarray(C @ Ai) % p, np.asarray(Ai @ C) % p):
                return False
    return True


def tensor_factorize(A, seed=0):
    """Split A as (S, m, iso) with A isomorphic to S (x) O(m;1).

    Requires a local commutative centroid of dimension p^m.  S is the
    quotient of A by rad(centroid).A; the isomorphism uses the canonical
    complement section and divided-power-normalized monomials in lifted
    radical generators, and is rejected (with diagnostics) if the section
    fails to close, which does not happen for split inputs.
    """
    p = A.p
    Z = centroid(A, seed=seed)
    if not Z.is_commutative():
        raise LieAlgebraError("centroid is not commutative")
    rad = Z.radical()
    if Z.dim != rad.dim + 1:
        raise LieAlgebraError("centroid is not local")
    m, q = 0, Z.dim
    while q > 1:
        if q % p:
            raise LieAlgebraError("centroid dimension is not a power of p")
        q //= p
        m += 1
    if m == 0:
        return A, 0, Homomorphism(A, A, np.eye(A.dim, dtype=np.int64), check=False)
    rad_mats = [Z.element(c) for c in rad.basis]
    # generators of the local algebra: lift a basis of rad / rad^2
    rad2_rows = [((Mi @ Mj) % p).reshape(-1) for Mi in rad_mats for Mj in rad_mats]
    span = Subspace(A.field, A.dim * A.dim, np.array(rad2_rows, dtype=np.int64)) \
        if rad2_rows else Subspace.zero(A.field, A.dim * A.dim)
    gens = []
    for Mr in rad_mats:
        v = Mr.reshape(-1)
        if not span.member(v):
            gens.append(Mr)
            span = span.sum(subspace_from_vectors(A.field, v.size, [v]))
        if len(gens) == m:
            break
    if len(gens) != m:
        raise LieAlgebraError("centroid radical is not m-generated")
    mA = Subspace(A.field, A.dim,
                  np.concatenate([Mr.T % p for Mr in rad_mats], axis=0))
    S, proj = quotient(A, mA)
    dpa = DividedPowerAlgebra(p, m, [1] * m)
    if S.dim * dpa.dim != A.dim:
        raise LieAlgebraError("tensor dimensions do not match")
    comp = mA.complement_coords()
    sect = np.zeros((A.dim, S.dim), dtype=np.int64)
    for r, c in enumerate(comp):
        sect[c, r] = 1

    def monomial_operator(a):
        M = np.eye(A.dim, dtype=np.int64)
        fact = 1
        for yi, ai in zip(gens, a):
            for _ in range(ai):
                M = (M @ yi) % p
            for t in range(1, ai + 1):
                fact = (fact * t) % p
        return (M * pow(fact, p - 2, p)) % p

    nO = dpa.dim
    iso_matrix = np.zeros((A.dim, S.dim * nO), dtype=np.int64)
    mono_ops = [monomial_operator(a) for a in dpa.monomials]
    for si in range(S.dim):
        for ai in range(nO):
            iso_matrix[:, si * nO + ai] = (mono_ops[ai] @ sect[:, si]) % p
    _, rk, _ = rref(A.field, iso_matrix)
    if rk != A.dim:
        raise LieAlgebraError("tensor factorization map is not bijective")
    T = tensor_with_dpa(S, dpa)
    iso = Homomorphism(T, A, iso_matrix, check=True)
    return S, m, iso


def tensor_with_dpa(S, dpa):
    """Structure constants of S (x) O: basis index si * dim(O) + monomial."""
    p = S.p
    nS, nO = S.dim, dpa.dim
    sc = {}
    brackets = {}
    for i in range(nS):
        for j in range(i + 1, nS):
            w = S.bracket(S.basis_vector(i), S.basis_vector(j))
            if w.any():
                brackets[(i, j)] = w
    for (i, j), w in brackets.items():
        nzw = np.nonzero(w)[0]
        for ai in range(nO):
            for bi in range(nO):
                coeff, cidx = dpa.mult_monomials(dpa.monomials[ai],
                                                 dpa.monomials[bi])
                if cidx is None:
                    continue
                a_idx = i * nO + ai
                b_idx = j * nO + bi
                terms = tuple((int(k) * nO + cidx, (int(w[k]) * coeff) % p)
                              for k in nzw if (int(w[k]) * coeff) % p)
                if not terms:
                    continue
                if a_idx < b_idx:
                    sc[(a_idx, b_idx)] = terms
                else:
                    sc[(b_idx, a_idx)] = tuple((t, (-c) % p) for t, c in terms)
    return LieAlgebra(S.field, nS * nO, sc, check=True)
