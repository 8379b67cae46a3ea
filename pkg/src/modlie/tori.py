"""Toral elements, maximal tori, root space decompositions, standardness.

A torus here is an abelian p-power-closed subalgebra of a restricted
algebra all of whose elements are semisimple, carried together with a
distinguished basis of toral elements (t^{[p]} = t).  Tori may require a
field extension to split; the working field is recorded and all root
values still land in the prime field.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from modlie.field import Field, make_field
from modlie.liealg import LieAlgebra, LieAlgebraError, centralizer, subalgebra
from modlie.linalg import (
    Subspace,
    kernel_matrix,
    rref,
    solve,
    subspace_from_vectors,
)


class ToralError(ValueError):
    pass


class NonSplitTorus(ToralError):
    """The torus does not split over the working field; escalate and retry."""


# ---------------------------------------------------------------------------
# matrix helpers over a (possibly extended) working field
# ---------------------------------------------------------------------------

def element_matrix_ext(L, v, work):
    """Matrix of the element with coordinate vector v over the working field."""
    mats = L.rep_matrices()
    v = np.asarray(v, dtype=np.int64)
    if work.k == 1:
        return np.tensordot(v % work.p, mats, axes=(0, 0)) % work.p
    out = np.zeros(mats.shape[1:], dtype=np.int64)
    for i in np.nonzero(v)[0]:
        out = work.vadd(out, work.vmul(np.int64(v[i]), mats[int(i)]))
    return out


def matrix_power_ext(work, M, e):
    out = np.eye(M.shape[0], dtype=np.int64)
    base = M
    while e > 0:
        if e & 1:
            out = work.vmatmul(out, base)
        base = work.vmatmul(base, base)
        e >>= 1
    return out


def matrix_coords_ext(L, M, work):
    """Coordinates of M in the rep span over the working field, or None."""
    _, flat, pivots, T = L._get_rep_solver()
    vec = M.reshape(-1)
    if work.k == 1:
        coords = (T @ vec[pivots]) % work.p
        if np.array_equal((coords @ flat) % work.p, vec % work.p):
            return coords
        return None
    coords = work.vmatmul(T, vec[pivots].reshape(-1, 1)).reshape(-1)
    recon = work.vmatmul(coords.reshape(1, -1), flat).reshape(-1)
    if np.array_equal(recon, vec):
        return coords
    return None


# ---------------------------------------------------------------------------
# Jordan pieces
# ---------------------------------------------------------------------------

def toral_decompose(L, v, work=None):
    """Semisimple and p-nilpotent parts of v inside the faithful realization.

    Iterates p-th powers of the matrix of v until the sequence cycles; the
    semisimple part is the cycle element at an exponent divisible by the
    period.  Checked: parts commute, the nilpotent part dies under p-powers,
    and both lie back in the algebra.
    """
    work = work or L.field
    M = element_matrix_ext(L, v, work)
    p = L.p
    powers = [M]
    seen = {M.tobytes(): 0}
    while True:
        nxt = matrix_power_ext(work, powers[-1], p)
        key = nxt.tobytes()
        if key in seen:
            a = seen[key]
            b = len(powers)
            break
        seen[key] = len(powers)
        powers.append(nxt)
    d = b - a
    if a == 0:
        s_mat = M
    else:
        m = a + ((-a) % d)
        s_mat = powers[m] if m < len(powers) else matrix_power_ext(
            work, M, p ** m)
    n_mat = (s_mat * 0 + (M - s_mat)) % work.p if work.k == 1 else work.vsub(M, s_mat)
    if work.k == 1:
        n_mat = (M - s_mat) % work.p
    # contract checks
    if not np.array_equal(work.vmatmul(s_mat, n_mat), work.vmatmul(n_mat, s_mat)):
        raise ToralError("Jordan parts fail to commute (bug)")
    steps = 1
    probe = n_mat
    while probe.any():
        probe = matrix_power_ext(work, probe, p)
        steps += 1
        if steps > int(np.ceil(np.log(max(M.shape[0], 2)) / np.log(p))) + 2:
            raise ToralError("nilpotent part fails to vanish (bug)")
    s = matrix_coords_ext(L, s_mat, work)
    if s is None:
        raise ToralError("semisimple part escapes the algebra (bug)")
    n = work.vsub(np.asarray(v, dtype=np.int64), s) if work.k > 1 else \
        (np.asarray(v, dtype=np.int64) - s) % p
    return s, n


def toral_candidates(L, s_coords, work):
    """Toral elements extracted from the Frobenius orbit of a semisimple part.

    For the orbit s, s^p, ..., s^{p^{d-1}} the combinations
    sum_i c^{p^i} s^{p^i} are toral for every scalar c; c runs over a basis
    of the working field plus 1.
    """
    p = L.p
    orbit = [np.asarray(s_coords, dtype=np.int64)]
    mats = [element_matrix_ext(L, orbit[0], work)]
    while True:
        nxt = matrix_power_ext(work, mats[-1], p)
        if np.array_equal(nxt, mats[0]):
            break
        mats.append(nxt)
        c = matrix_coords_ext(L, nxt, work)
        if c is None:
            raise ToralError("Frobenius orbit escapes the algebra (bug)")
        orbit.append(c)
        if len(orbit) > 64:
            raise ToralError("semisimple part fails to cycle (bug)")
    d = len(orbit)
    cs = [1]
    if work.k > 1:
        cs.extend(work.pack(tuple([0] * i + [1] + [0] * (work.k - 1 - i)))
                  for i in range(1, work.k))
    out = []
    for c in cs:
        t = np.zeros(L.dim, dtype=np.int64)
        cc = c
        for i in range(d):
            if work.k == 1:
                t = (t + cc * orbit[i]) % p
            else:
                t = work.vadd(t, work.vmul(np.int64(cc), orbit[i]))
            cc = work.frobenius(cc)
        if t.any():
            out.append(t)
    return out


def is_toral(L, t, work):
    M = element_matrix_ext(L, t, work)
    return np.array_equal(matrix_power_ext(work, M, L.p), M)


# ---------------------------------------------------------------------------
# Torus
# ---------------------------------------------------------------------------

@dataclass
class Torus:
    ambient: LieAlgebra
    toral_basis: np.ndarray          # (d, ambient.dim) over work
    work: Field
    certificate: dict = dc_field(default_factory=dict)

    @property
    def dim(self):
        return self.toral_basis.shape[0]

    def space(self):
        return Subspace(self.work, self.ambient.dim, self.toral_basis)

    def action_matrices(self, module="rep"):
        """Matrices of the toral basis acting on the chosen module."""
        if module == "rep":
            return [element_matrix_ext(self.ambient, t, self.work)
                    for t in self.toral_basis]
        if module == "adjoint":
            out = []
            for t in self.toral_basis:
                if self.work.k == 1:
                    out.append(self.ambient.ad_matrix(t))
                else:
                    M = np.zeros((self.ambient.dim, self.ambient.dim),
                                 dtype=np.int64)
                    for i in np.nonzero(t)[0]:
                        M = self.work.vadd(
                            M, self.work.vmul(np.int64(t[i]),
                                              self.ambient.ad_dense(int(i))))
                    out.append(M)
            return out
        raise ToralError(f"unknown module {module!r}")

    def verify(self):
        """Abelian, toral basis, p-closed span."""
        for t in self.toral_basis:
            if not is_toral(self.ambient, t, self.work):
                raise ToralError("basis element not toral")
        mats = self.action_matrices("rep")
        for i in range(len(mats)):
            for j in range(i + 1, len(mats)):
                if not np.array_equal(self.work.vmatmul(mats[i], mats[j]),
                                      self.work.vmatmul(mats[j], mats[i])):
                    raise ToralError("torus not abelian")
        return True


def centralizer_ext(L, vectors, work):
    """Centralizer of the given (working-field) vectors inside L (x) work."""
    if len(vectors) == 0:
        return Subspace.full(work, L.dim)
    mats = []
    for t in vectors:
        if work.k == 1:
            mats.append(L.ad_matrix(t))
        else:
            M = np.zeros((L.dim, L.dim), dtype=np.int64)
            for i in np.nonzero(t)[0]:
                M = work.vadd(M, work.vmul(np.int64(t[i]), L.ad_dense(int(i))))
            mats.append(M)
    stacked = np.concatenate(mats, axis=0)
    return Subspace(work, L.dim, kernel_matrix(work, stacked), canonical=True)


def maximal_torus(L, seed=0, escalate=(1,), candidates_per_round=40, restarts=3):
    """Greedy maximal torus of a restricted algebra with a faithful rep.

    Extends a torus by toral parts of semisimple parts of centralizer
    elements until no candidate from a deterministic spanning stream lands
    outside; that exhaustion is recorded as the maximality certificate.
    Distinct maximal tori can have different dimensions (a torus can be
    unextendable without having the top dimension), so several restarts
    with shuffled candidate streams are taken and the best kept.
    `escalate` lists field extension degrees to try in order.
    """
    chosen = None
    for k in escalate:
        work = make_field(L.p, k)
        for r in range(restarts):
            rng = np.random.default_rng(seed * 1009 + r)
            torus = _greedy_torus(L, work, rng, candidates_per_round,
                                  basis_first=(r == 0))
            if chosen is None or torus.dim > chosen.dim:
                chosen = torus
    chosen.verify()
    return chosen


def _greedy_torus(L, work, rng, per_round, basis_first=True):
    basis = []

    def in_span(t):
        if not basis:
            return not np.asarray(t).any()
        S = Subspace(work, L.dim, np.array(basis, dtype=np.int64))
        return S.member(t)

    rounds = 0
    certificate = {"stream_exhausted": False, "spanning_checked": 0}
    while True:
        rounds += 1
        if rounds > L.dim + 2:
            raise ToralError("torus search failed to stabilize")
        C = centralizer_ext(L, basis, work) if basis else Subspace.full(work, L.dim)
        extended = False
        for cand in _candidate_stream(C, work, rng, per_round, basis_first):
            try:
                s, _ = toral_decompose(L, cand, work)
            except ToralError:
                continue
            if not np.asarray(s).any():
                continue
            for t in toral_candidates(L, s, work):
                if not in_span(t):
                    basis.append(t)
                    extended = True
                    break
            if extended:
                break
        if not extended:
            # certificate pass: no toral element outside the span shows up
            # from the semisimple parts of a spanning set of the centralizer
            checked = 0
            fail = False
            for cand in _spanning_stream(C, work, rng):
                s, _ = toral_decompose(L, cand, work)
                if not np.asarray(s).any():
                    checked += 1
                    continue
                for t in toral_candidates(L, s, work):
                    if not in_span(t):
                        basis.append(t)
                        fail = True
                        break
                checked += 1
                if fail:
                    break
            certificate["spanning_checked"] = checked
            if not fail:
                certificate["stream_exhausted"] = True
                break
    tb = (np.array(basis, dtype=np.int64)
          if basis else np.zeros((0, L.dim), dtype=np.int64))
    return Torus(L, tb, work, certificate)


def _candidate_stream(C, work, rng, per_round, basis_first=True):
    n = C.dim
    if basis_first:
        for row in C.basis:
            yield row
        for i in range(min(n, 10)):
            for j in range(i + 1, min(n, 10)):
                yield work.vadd(C.basis[i], C.basis[j])
    for _ in range(per_round):
        coeff = rng.integers(0, work.q, size=n)
        v = np.zeros(C.ambient, dtype=np.int64)
        for i in np.nonzero(coeff)[0]:
            v = work.vadd(v, work.vmul(np.int64(coeff[i]), C.basis[int(i)]))
        if v.any():
            yield v


def _spanning_stream(C, work, rng):
    for row in C.basis:
        yield row
    for i in range(C.dim):
        for j in range(i + 1, C.dim):
            yield work.vadd(C.basis[i], C.basis[j])
    for _ in range(16):
        coeff = rng.integers(0, work.q, size=C.dim)
        v = np.zeros(C.ambient, dtype=np.int64)
        for i in np.nonzero(coeff)[0]:
            v = work.vadd(v, work.vmul(np.int64(coeff[i]), C.basis[int(i)]))
        if v.any():
            yield v


# ---------------------------------------------------------------------------
# root space decompositions
# ---------------------------------------------------------------------------

@dataclass
class RootDatum:
    torus: Torus
    module: str                      # "rep" (the algebra under the rep) or "adjoint"
    zero_space: Subspace
    roots: dict                      # tuple gamma -> Subspace
    target_dim: int

    def root_list(self):
        return sorted(self.roots.keys())

    def all_spaces(self):
        out = dict(self.roots)
        out[tuple([0] * self.torus.dim)] = self.zero_space
        return out

    def space_of(self, gamma):
        gamma = tuple(int(g) % self.torus.ambient.p for g in gamma)
        if not any(gamma):
            return self.zero_space
        return self.roots.get(gamma,
                              Subspace.zero(self.torus.work,
                                            self.zero_space.ambient))


def root_decomposition(torus, module="rep", target=None):
    """Simultaneous eigenspace decomposition of the module under the torus.

    Root values of toral elements lie in the prime field, so candidate
    tuples are enumerated over F_p.  Raises NonSplitTorus when the spaces
    fail to fill the module (the caller escalates the field).
    """
    L = torus.ambient
    work = torus.work
    p = L.p
    mats = torus.action_matrices(module)
    dim = mats[0].shape[0] if mats else (
        L.rep_matrices().shape[1] if module == "rep" else L.dim)
    full = Subspace.full(work, dim) if target is None else target
    layers = {tuple(): full}
    for M in mats:
        nxt = {}
        for prefix, S in layers.items():
            if S.dim == 0:
                continue
            rem = S.dim
            for lam in range(p):
                E = _eigen_in(work, M, lam, S)
                if E.dim:
                    nxt[prefix + (lam,)] = E
                    rem -= E.dim
                if rem == 0:
                    break
            if rem != 0:
                raise NonSplitTorus(
                    "torus action fails to split over the working field")
        layers = nxt
    d = torus.dim
    zero_key = tuple([0] * d)
    zero = layers.get(zero_key, Subspace.zero(work, dim))
    roots = {k: v for k, v in layers.items() if k != zero_key and v.dim}
    total = zero.dim + sum(S.dim for S in roots.values())
    if total != full.dim:
        raise NonSplitTorus("decomposition incomplete")
    return RootDatum(torus, module, zero, roots, full.dim)


def _eigen_in(work, M, lam, S):
    """ker(M - lam) intersected with the invariant subspace S, via restriction."""
    B = S.basis
    img = work.vmatmul(M, B.T).T if work.k > 1 else (M @ B.T).T % work.p
    # coordinates of images in the basis of S (S must be M-invariant)
    _, _, piv = rref(work, B)
    coords = img[:, piv]
    recon = work.vmatmul(coords, B) if work.k > 1 else (coords @ B) % work.p
    if not np.array_equal(recon, img):
        raise ToralError("module subspace not invariant under the torus")
    shifted = coords.T.copy()
    idx = np.arange(S.dim)
    if work.k == 1:
        shifted[idx, idx] = (shifted[idx, idx] - lam) % work.p
    else:
        shifted[idx, idx] = work.vsub(shifted[idx, idx], np.int64(lam))
    K = kernel_matrix(work, shifted)
    if K.shape[0] == 0:
        return Subspace.zero(work, S.ambient)
    vecs = work.vmatmul(K, B) if work.k > 1 else (K @ B) % work.p
    return Subspace(work, S.ambient, vecs)


def root_sum_closure_check(L, rd):
    """[L_a, L_b] <= L_{a+b} for every pair of root/zero spaces (rep module)."""
    if rd.module != "rep":
        raise ToralError("closure check is for the rep module")
    p = L.p
    spaces = rd.all_spaces()
    for ga, Sa in spaces.items():
        for gb, Sb in spaces.items():
            if Sa.dim == 0 or Sb.dim == 0:
                continue
            target_key = tuple((x + y) % p for x, y in zip(ga, gb))
            target = rd.all_spaces().get(target_key,
                                         Subspace.zero(rd.torus.work, Sa.ambient))
            prod = L.bracket_span(Sa, Sb)
            if not target.contains(prod):
                return False
    return True


# ---------------------------------------------------------------------------
# standardness and toral rank
# ---------------------------------------------------------------------------

def is_standard(torus, target_algebra=None, rd=None):
    """A torus is standard when the derived algebra of its centralizer in
    the underlying algebra acts nilpotently (the triangulability test)."""
    L = target_algebra if target_algebra is not None else torus.ambient
    if torus.work.k != 1:
        raise ToralError("standardness test implemented over the prime field")
    if rd is None:
        rd = root_decomposition(torus, module="rep")
    H = rd.zero_space
    from modlie.liealg import is_nilpotent_action
    H1 = L.bracket_span(H, H)
    if H1.dim == 0:
        return True
    return is_nilpotent_action(L, H1, L.full_space())


def toral_rank(L, seed=0, escalate=(1, 2)):
    """Maximal torus dimension in the p-envelope of the faithful image."""
    from modlie.liealg import p_envelope
    E, _ = p_envelope(L)
    T = maximal_torus(E, seed=seed, escalate=escalate)
    return T.dim
