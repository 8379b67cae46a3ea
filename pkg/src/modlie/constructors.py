"""Constructors for the concrete algebra families used by the workbench.

Everything is built from divided power algebras O(m;n) and explicit
derivation formulas, then validated structurally: Jacobi at construction,
stated dimension formulas, grading compatibility, and (in the tests)
simplicity and restrictedness.  Sign conventions for the contact and
exceptional brackets are fixed here once; they are validated only through
invariants (dimension, simplicity, grading depth), never by coordinate
comparison with outside sources.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from modlie.dpa import DividedPowerAlgebra
from modlie.field import make_field
from modlie.liealg import (
    Homomorphism,
    LieAlgebra,
    LieAlgebraError,
    tensor_with_dpa,
)
from modlie.linalg import (
    SpanBuilder,
    Subspace,
    invert,
    kernel_matrix,
    rref,
    subspace_from_vectors,
)


class ConstructionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# vector fields over O(m;n)
# ---------------------------------------------------------------------------

class VectorFieldSpace:
    """Coordinate space of derivations sum_i f_i d_i of O(m;n).

    A field is a flat vector of length m * dim(O): block i holds the
    O-coefficients of f_i.
    """

    def __init__(self, p, m, n):
        self.O = DividedPowerAlgebra(p, m, n)
        self.p = p
        self.m = m
        self.dim = m * self.O.dim
        self.D = [self.O.derivative_matrix(i) for i in range(m)]

    def block(self, u, i):
        nO = self.O.dim
        return u[i * nO:(i + 1) * nO]

    def monomial_field(self, i, a):
        """x^(a) d_i as a flat vector."""
        u = np.zeros(self.dim, dtype=np.int64)
        u[i * self.O.dim + self.O.index[tuple(a)]] = 1
        return u

    def apply(self, u, f):
        """u(f) for f an O-coefficient vector."""
        out = np.zeros(self.O.dim, dtype=np.int64)
        for i in range(self.m):
            out = (out + self.O.multiply(self.block(u, i), self.D[i] @ f % self.p)) % self.p
        return out

    def bracket(self, u, v):
        """[u, v] as vector fields."""
        out = np.zeros(self.dim, dtype=np.int64)
        nO = self.O.dim
        for j in range(self.m):
            gj = self.block(v, j)
            fj = self.block(u, j)
            out[j * nO:(j + 1) * nO] = (self.apply(u, gj) - self.apply(v, fj)) % self.p
        return out

    def to_terms(self, u):
        """Sparse term list [(block, monomial tuple, coeff)] of a field vector."""
        nO = self.O.dim
        out = []
        for idx in np.nonzero(u)[0]:
            out.append((int(idx) // nO, self.O.monomials[int(idx) % nO],
                        int(u[idx]) % self.p))
        return out

    def bracket_terms(self, tu, tv):
        """[u, v] from sparse term lists, returned as a dense field vector."""
        p = self.p
        nO = self.O.dim
        out = np.zeros(self.dim, dtype=np.int64)

        def accumulate(ti, tj, sign):
            # sign * f x^a d_i(x^b) d_j  for terms (i, a, c), (j, b, d)
            for (i, a, c) in ti:
                for (j, b, d) in tj:
                    if b[i] == 0:
                        continue
                    bshift = list(b)
                    bshift[i] -= 1
                    coeff, idx = self.O.mult_monomials(a, tuple(bshift))
                    if idx is not None:
                        out[j * nO + idx] = (out[j * nO + idx]
                                             + sign * c * d * coeff) % p

        accumulate(tu, tv, 1)
        accumulate(tv, tu, -1)
        return out % p

    def divergence(self, u):
        out = np.zeros(self.O.dim, dtype=np.int64)
        for i in range(self.m):
            out = (out + self.D[i] @ self.block(u, i)) % self.p
        return out % self.p

    def field_degree(self, u):
        """Degree if u is homogeneous (monomial degree - 1), else None."""
        degs = set()
        nO = self.O.dim
        for i in range(self.m):
            for a_idx in np.nonzero(self.block(u, i))[0]:
                degs.add(self.O.monomial_degree(a_idx) - 1)
        if len(degs) != 1:
            return None
        return degs.pop()


@dataclass
class GradedMeta:
    """An algebra with its natural grading and standard nonnegative part."""

    algebra: LieAlgebra
    degrees: list
    standard_zero: Subspace
    name: str = ""
    extras: dict = dc_field(default_factory=dict)

    def check_grading(self):
        degs = self.degrees
        for (i, j), terms in self.algebra.sc.items():
            for k, _ in terms:
                if degs[k] != degs[i] + degs[j]:
                    raise ConstructionError(
                        f"grading broken at [{i},{j}] -> {k}")
        return True

    def graded_component(self, d):
        rows = [self.algebra.basis_vector(i)
                for i in range(self.algebra.dim) if self.degrees[i] == d]
        return subspace_from_vectors(self.algebra.field, self.algebra.dim, rows)


def _nonneg_part(field, degrees):
    rows = [i for i, d in enumerate(degrees) if d >= 0]
    B = np.zeros((len(rows), len(degrees)), dtype=np.int64)
    for r, i in enumerate(rows):
        B[r, i] = 1
    return Subspace(field, len(degrees), B)


def algebra_from_fields(vf, fields, p, labels=None, check=True):
    """LieAlgebra on an independent family of vector fields.

    Structure constants come from the vector-field bracket; coordinates are
    extracted through the pivot transform and batch-verified exactly.
    """
    F = make_field(p)
    B = np.array(fields, dtype=np.int64) % p
    d = B.shape[0]
    _, rank, pivots = rref(F, B)
    if rank != d:
        raise ConstructionError("field family not independent")
    T = invert(F, B[:, pivots].T)
    terms = [vf.to_terms(B[i]) for i in range(d)]
    pair_list = []
    brs = []
    for i in range(d):
        for j in range(i + 1, d):
            w = vf.bracket_terms(terms[i], terms[j])
            if w.any():
                pair_list.append((i, j))
                brs.append(w)
    sc = {}
    if brs:
        W_all = np.array(brs, dtype=np.int64)
        coords_all = (W_all[:, pivots] @ T.T) % p
        if not np.array_equal((coords_all @ B) % p, W_all):
            raise ConstructionError("brackets leave the span of the family")
        for (i, j), coords in zip(pair_list, coords_all):
            terms = tuple((int(k), int(coords[k])) for k in np.nonzero(coords)[0])
            sc[(i, j)] = terms
    return LieAlgebra(F, d, sc, labels=labels, check=check)


def _mono_label(O, a_idx, suffix=""):
    a = O.monomials[a_idx]
    return "x^(" + ",".join(str(v) for v in a) + ")" + suffix


# ---------------------------------------------------------------------------
# named families
# ---------------------------------------------------------------------------

def make_O(p, m, n):
    return DividedPowerAlgebra(p, m, n)


def make_W(p, m, n):
    """General vector-field algebra W(m;n): all special derivations of O(m;n)."""
    vf = VectorFieldSpace(p, m, n)
    nO = vf.O.dim
    fields, labels, degrees = [], [], []
    for i in range(m):
        for a_idx in range(nO):
            fields.append(vf.monomial_field(i, vf.O.monomials[a_idx]))
            labels.append(_mono_label(vf.O, a_idx, f"d_{i + 1}"))
            degrees.append(vf.O.monomial_degree(a_idx) - 1)
    L = algebra_from_fields(vf, fields, p, labels=labels)
    meta = GradedMeta(L, degrees, _nonneg_part(L.field, degrees),
                      name=f"W({m};{tuple(vf.O.n)})",
                      extras={"vf": vf, "fields": np.array(fields)})
    meta.check_grading()
    return meta


def make_S1(p, m=3, n=1):
    """Derived algebra of the divergence-zero fields, for m >= 3.

    Basis chosen among the two-term fields d_j(f) d_i - d_i(f) d_j, which
    keeps the structure constants sparse; validated in the tests against
    the derived subalgebra of ker(div).
    """
    if m < 3:
        raise ConstructionError("need m >= 3 for this family")
    vf = VectorFieldSpace(p, m, n)
    nO = vf.O.dim
    cands = []
    for a_idx in range(nO):
        for i in range(m):
            for j in range(i + 1, m):
                f = np.zeros(nO, dtype=np.int64)
                f[a_idx] = 1
                u = np.zeros(vf.dim, dtype=np.int64)
                u[i * nO:(i + 1) * nO] = (vf.D[j] @ f) % p
                u[j * nO:(j + 1) * nO] = (-(vf.D[i] @ f)) % p
                if u.any():
                    deg = vf.O.monomial_degree(a_idx) - 2
                    cands.append((deg, a_idx, i, j, u))
    cands.sort(key=lambda t: (t[0], t[1], t[2], t[3]))
    F = make_field(p)
    fields, labels, degrees = [], [], []
    span = SpanBuilder(F, vf.dim)
    for deg, a_idx, i, j, u in cands:
        if span.add(u.reshape(1, -1)):
            fields.append(u)
            labels.append(f"D_{i + 1}{j + 1}({_mono_label(vf.O, a_idx)})")
            degrees.append(deg)
    L = algebra_from_fields(vf, fields, p, labels=labels)
    meta = GradedMeta(L, degrees, _nonneg_part(L.field, degrees),
                      name=f"S({m};{tuple(vf.O.n)})^(1)",
                      extras={"vf": vf, "fields": np.array(fields)})
    meta.check_grading()
    return meta


def hamiltonian_field(vf, f):
    """D_H(f) = (d_1 f) d_2 - (d_2 f) d_1 on two variables."""
    nO = vf.O.dim
    u = np.zeros(vf.dim, dtype=np.int64)
    u[nO:2 * nO] = (vf.D[0] @ f) % vf.p
    u[0:nO] = (-(vf.D[1] @ f)) % vf.p
    return u


def make_H2(p, n=(1, 1), variant="second_derived"):
    """Hamiltonian algebras on two variables.

    second_derived: D_H(x^(a)) for 0 < a < top, dim p^{|n|} - 2;
    first_derived:  D_H(x^(a)) for 0 < a <= top, dim p^{|n|} - 1;
    full:           the divergence-zero fields, adding the two top
                    one-variable fields, dim p^{|n|} + 1.
    """
    vf = VectorFieldSpace(p, 2, n)
    nO = vf.O.dim
    top = tuple(h - 1 for h in vf.O.heights)
    fields, labels, degrees = [], [], []
    for a_idx in range(nO):
        a = vf.O.monomials[a_idx]
        if sum(a) == 0:
            continue
        if variant == "second_derived" and a == top:
            continue
        u = hamiltonian_field(vf, np.eye(nO, dtype=np.int64)[a_idx])
        fields.append(u)
        labels.append(f"D_H({_mono_label(vf.O, a_idx)})")
        degrees.append(sum(a) - 2)
    if variant == "full":
        for (i, j) in ((0, 1), (1, 0)):
            a = [0, 0]
            a[i] = vf.O.heights[i] - 1
            u = vf.monomial_field(j, tuple(a))
            fields.append(u)
            labels.append(_mono_label(vf.O, vf.O.index[tuple(a)], f"d_{j + 1}"))
            degrees.append(sum(a) - 1)
    if variant not in ("second_derived", "first_derived", "full"):
        raise ConstructionError(f"unknown variant {variant!r}")
    L = algebra_from_fields(vf, fields, p, labels=labels)
    meta = GradedMeta(L, degrees, _nonneg_part(L.field, degrees),
                      name=f"H(2;{tuple(vf.O.n)})^({variant})",
                      extras={"vf": vf, "fields": np.array(fields)})
    if variant != "full":  # the top one-variable fields break homogeneity bookkeeping
        meta.check_grading()
    return meta


def contact_field(vf, f):
    """Contact derivation of O(3;1) attached to the function f.

    D(f) = (x_1 d_3 f - d_2 f) d_1 + (d_1 f + x_2 d_3 f) d_2
         + (2f - x_1 d_1 f - x_2 d_2 f) d_3.
    """
    p = vf.p
    nO = vf.O.dim
    x1 = np.zeros(nO, dtype=np.int64)
    x1[vf.O.index[(1, 0, 0)]] = 1
    x2 = np.zeros(nO, dtype=np.int64)
    x2[vf.O.index[(0, 1, 0)]] = 1
    d1f = (vf.D[0] @ f) % p
    d2f = (vf.D[1] @ f) % p
    d3f = (vf.D[2] @ f) % p
    u = np.zeros(vf.dim, dtype=np.int64)
    u[0:nO] = (vf.O.multiply(x1, d3f) - d2f) % p
    u[nO:2 * nO] = (d1f + vf.O.multiply(x2, d3f)) % p
    u[2 * nO:3 * nO] = (2 * f - vf.O.multiply(x1, d1f) - vf.O.multiply(x2, d2f)) % p
    return u


def make_K(p, m=3, n=1):
    """Contact algebra on three variables (desk scope: m = 3, n = 1)."""
    if m != 3 or n != 1:
        raise ConstructionError("contact construction implemented for m=3, n=1")
    vf = VectorFieldSpace(p, 3, (1, 1, 1))
    nO = vf.O.dim
    fields, labels, degrees = [], [], []
    for a_idx in range(nO):
        a = vf.O.monomials[a_idx]
        f = np.eye(nO, dtype=np.int64)[a_idx]
        fields.append(contact_field(vf, f))
        labels.append(f"D_K({_mono_label(vf.O, a_idx)})")
        degrees.append(a[0] + a[1] + 2 * a[2] - 2)
    L = algebra_from_fields(vf, fields, p, labels=labels)
    meta = GradedMeta(L, degrees, _nonneg_part(L.field, degrees),
                      name=f"K(3;1)", extras={"vf": vf, "fields": np.array(fields)})
    meta.check_grading()
    return meta


# ---------------------------------------------------------------------------
# the exceptional p = 5 algebra
# ---------------------------------------------------------------------------

def make_melikian(p=5):
    """The 125-dimensional exceptional simple restricted algebra at p = 5.

    Underlying space W (+) O (+) W-tilde over O(2;1), with the standard
    five bracket relations; graded with depth 3.
    """
    if p != 5:
        raise ConstructionError("p must be 5")
    vf = VectorFieldSpace(p, 2, (1, 1))
    nO = vf.O.dim          # 25
    nW = vf.dim            # 50
    dim = 2 * nW + nO      # 125
    OFF_W, OFF_O, OFF_T = 0, nW, nW + nO

    def wpart(u):
        return u[OFF_W:OFF_W + nW]

    def opart(u):
        return u[OFF_O:OFF_O + nO]

    def tpart(u):
        return u[OFF_T:OFF_T + nW]

    def build(w=None, o=None, t=None):
        u = np.zeros(dim, dtype=np.int64)
        if w is not None:
            u[OFF_W:OFF_W + nW] = w % p
        if o is not None:
            u[OFF_O:OFF_O + nO] = o % p
        if t is not None:
            u[OFF_T:OFF_T + nW] = t % p
        return u

    def bracket(u, v):
        Dw, Do, Dt = wpart(u), opart(u), tpart(u)
        Ew, Eo, Et = wpart(v), opart(v), tpart(v)
        w_out = np.zeros(nW, dtype=np.int64)
        o_out = np.zeros(nO, dtype=np.int64)
        t_out = np.zeros(nW, dtype=np.int64)
        # [W, W]
        if Dw.any() and Ew.any():
            w_out += vf.bracket(Dw, Ew)
        # [W, O] and [O, W]: D(f) - 2 div(D) f
        if Dw.any() and Eo.any():
            o_out += vf.apply(Dw, Eo) - 2 * vf.O.multiply(vf.divergence(Dw), Eo)
        if Ew.any() and Do.any():
            o_out -= vf.apply(Ew, Do) - 2 * vf.O.multiply(vf.divergence(Ew), Do)
        # [W, Wt] and [Wt, W]: [D,E]~ + 2 div(D) E~
        if Dw.any() and Et.any():
            t_out += vf.bracket(Dw, Et) + 2 * _scale_field(vf, vf.divergence(Dw), Et)
        if Ew.any() and Dt.any():
            t_out -= vf.bracket(Ew, Dt) + 2 * _scale_field(vf, vf.divergence(Ew), Dt)
        # [O, Wt] and [Wt, O]: f E (landing in W)
        if Do.any() and Et.any():
            w_out += _scale_field(vf, Do, Et)
        if Eo.any() and Dt.any():
            w_out -= _scale_field(vf, Eo, Dt)
        # [O, O] -> Wt
        if Do.any() and Eo.any():
            f, g = Do, Eo
            c1 = (vf.O.multiply(g, vf.D[1] @ f) - vf.O.multiply(f, vf.D[1] @ g)) % p
            c2 = (vf.O.multiply(f, vf.D[0] @ g) - vf.O.multiply(g, vf.D[0] @ f)) % p
            t_out += 2 * np.concatenate([c1, c2])
        # [Wt, Wt] -> O
        if Dt.any() and Et.any():
            f1, f2 = Dt[:nO], Dt[nO:]
            g1, g2 = Et[:nO], Et[nO:]
            o_out += vf.O.multiply(f1, g2) - vf.O.multiply(f2, g1)
        return build(w_out, o_out, t_out)

    sc = {}
    basis = np.eye(dim, dtype=np.int64)
    for i in range(dim):
        for j in range(i + 1, dim):
            w = bracket(basis[i], basis[j]) % p
            terms = tuple((int(k), int(w[k])) for k in np.nonzero(w)[0])
            if terms:
                sc[(i, j)] = terms
    labels = ([_mono_label(vf.O, a, f"d_{i + 1}") for i in range(2) for a in range(nO)]
              + [_mono_label(vf.O, a) for a in range(nO)]
              + [_mono_label(vf.O, a, f"dt_{i + 1}") for i in range(2) for a in range(nO)])
    F = make_field(p)
    L = LieAlgebra(F, dim, sc, labels=labels, check=True)
    degrees = []
    for i in range(2):
        for a in range(nO):
            degrees.append(3 * (vf.O.monomial_degree(a) - 1))
    for a in range(nO):
        degrees.append(3 * vf.O.monomial_degree(a) - 2)
    for i in range(2):
        for a in range(nO):
            degrees.append(3 * (vf.O.monomial_degree(a) - 1) + 2)
    meta = GradedMeta(L, degrees, _nonneg_part(F, degrees),
                      name="M(1,1)", extras={"vf": vf})
    meta.check_grading()
    return meta


def _scale_field(vf, f, u):
    """f * u for f in O and u a vector field (componentwise product)."""
    out = np.zeros(vf.dim, dtype=np.int64)
    nO = vf.O.dim
    for i in range(vf.m):
        out[i * nO:(i + 1) * nO] = vf.O.multiply(f, u[i * nO:(i + 1) * nO])
    return out


# ---------------------------------------------------------------------------
# classical matrix algebras
# ---------------------------------------------------------------------------

def make_classical(p, kind, n):
    """sl(n), gl(n), or psl(n) with the commutator bracket."""
    if n > 5:
        raise ConstructionError("matrix size capped at 5")
    F = make_field(p)
    units = []
    if kind in ("sl", "psl"):
        for i in range(n):
            for j in range(n):
                if i != j:
                    E = np.zeros((n, n), dtype=np.int64)
                    E[i, j] = 1
                    units.append(E)
        for i in range(n - 1):
            E = np.zeros((n, n), dtype=np.int64)
            E[i, i] = 1
            E[i + 1, i + 1] = -1 % p
            units.append(E)
    elif kind == "gl":
        for i in range(n):
            for j in range(n):
                E = np.zeros((n, n), dtype=np.int64)
                E[i, j] = 1
                units.append(E)
    else:
        raise ConstructionError(f"unknown kind {kind!r}")
    mats = np.array(units, dtype=np.int64)
    d = mats.shape[0]
    flat = mats.reshape(d, -1)
    _, rank, pivots = rref(F, flat)
    T = invert(F, flat[:, pivots].T)

    def coords(M):
        vec = M.reshape(-1) % p
        c = (T @ vec[pivots]) % p
        if not np.array_equal((c @ flat) % p, vec):
            raise ConstructionError("commutator leaves the span")
        return c

    sc = {}
    for i in range(d):
        for j in range(i + 1, d):
            comm = (mats[i] @ mats[j] - mats[j] @ mats[i]) % p
            c = coords(comm)
            terms = tuple((int(k), int(c[k])) for k in np.nonzero(c)[0])
            if terms:
                sc[(i, j)] = terms
    pmap = {i: coords(_int_matrix_power(mats[i], p, p)) for i in range(d)}
    L = LieAlgebra(F, d, sc, pmap=pmap, rep=mats, check=True)
    if kind == "psl":
        if n % p:
            return L
        from modlie.liealg import quotient, center
        Q, _ = quotient(L, L.center())
        return Q
    return L


def _int_matrix_power(M, e, p):
    out = np.eye(M.shape[0], dtype=np.int64)
    base = M % p
    while e:
        if e & 1:
            out = (out @ base) % p
        base = (base @ base) % p
        e >>= 1
    return out


# ---------------------------------------------------------------------------
# tensor constructions
# ---------------------------------------------------------------------------

@dataclass
class TensorAlgebra:
    """S (x) O(m;n) with embedding bookkeeping.  Basis index: si * dimO + ai."""

    algebra: LieAlgebra
    S: LieAlgebra
    dpa: DividedPowerAlgebra

    def embed_s(self, v):
        """s -> s (x) 1."""
        out = np.zeros(self.algebra.dim, dtype=np.int64)
        nO = self.dpa.dim
        unit = self.dpa.unit_index()
        for i in np.nonzero(np.asarray(v))[0]:
            out[int(i) * nO + unit] = v[i]
        return out % self.algebra.p


def make_tensor(S, m, n=1):
    """S (x) O(m;n) with bracket [x (x) f, y (x) g] = [x,y] (x) fg."""
    dpa = DividedPowerAlgebra(S.p, m, [n] * m if np.isscalar(n) else n)
    A = tensor_with_dpa(S, dpa)
    if A.dim > 1200:
        raise ConstructionError("tensor construction exceeds the size cap")
    return TensorAlgebra(A, S, dpa)


@dataclass
class TensorAmbient:
    """(Der S) (x) O(m;n)  semidirect  (identity (x) W(m;n)).

    Basis: (derivation index, monomial) blocks first, then the W(m;n)
    monomial fields.  pi2 projects onto the W factor.
    """

    algebra: LieAlgebra
    derS: LieAlgebra
    dpa: DividedPowerAlgebra
    vf: VectorFieldSpace
    pi2_matrix: np.ndarray
    socle_embed: np.ndarray  # columns: images of S (x) O basis (via ad on S)

    def pi2_space(self, space):
        M = (space.basis @ self.pi2_matrix.T) % self.algebra.p
        return Subspace(make_field(self.algebra.p), self.pi2_matrix.shape[0], M)


def make_tensor_ambient(S, m, n=1, der_pair=None):
    """Ambient derivation algebra of S (x) O(m;n) in split form."""
    from modlie.liealg import derivations
    p = S.p
    if der_pair is None:
        DerS, ad_hom = derivations(S)
    else:
        DerS, ad_hom = der_pair
    dpa = DividedPowerAlgebra(p, m, [n] * m if np.isscalar(n) else n)
    vf = VectorFieldSpace(p, m, [n] * m if np.isscalar(n) else n)
    nD, nO, nW = DerS.dim, dpa.dim, vf.dim
    dim = nD * nO + nW
    OFF_W = nD * nO

    sc = {}

    def add_terms(a, b, terms):
        if not terms:
            return
        if a > b:
            a, b = b, a
            terms = tuple((k, (-c) % p) for k, c in terms)
        if (a, b) in sc:
            merged = dict(sc[(a, b)])
            for k, c in terms:
                merged[k] = (merged.get(k, 0) + c) % p
            terms = tuple((k, c) for k, c in merged.items() if c)
        sc[(a, b)] = terms

    # [(d (x) f), (e (x) g)] = [d,e] (x) fg
    for i in range(nD):
        for j in range(i + 1, nD):
            w = DerS.bracket(DerS.basis_vector(i), DerS.basis_vector(j))
            nzw = np.nonzero(w)[0]
            if not len(nzw):
                continue
            for ai in range(nO):
                for bi in range(nO):
                    coeff, cidx = dpa.mult_monomials(dpa.monomials[ai],
                                                     dpa.monomials[bi])
                    if cidx is None:
                        continue
                    terms = tuple((int(k) * nO + cidx, (int(w[k]) * coeff) % p)
                                  for k in nzw if (int(w[k]) * coeff) % p)
                    add_terms(i * nO + ai, j * nO + bi, terms)
    # [id (x) w, d (x) f] = d (x) w(f)
    for wi in range(nW):
        wfield = np.zeros(nW, dtype=np.int64)
        wfield[wi] = 1
        for i in range(nD):
            for ai in range(nO):
                f = np.zeros(nO, dtype=np.int64)
                f[ai] = 1
                wf = vf.apply(wfield, f)
                terms = tuple((i * nO + int(c), int(wf[c]))
                              for c in np.nonzero(wf)[0])
                add_terms(OFF_W + wi, i * nO + ai, terms)
    # [id (x) w, id (x) w'] = id (x) [w, w']
    for wi in range(nW):
        for wj in range(wi + 1, nW):
            u = np.zeros(nW, dtype=np.int64)
            u[wi] = 1
            v = np.zeros(nW, dtype=np.int64)
            v[wj] = 1
            w = vf.bracket(u, v)
            terms = tuple((OFF_W + int(c), int(w[c])) for c in np.nonzero(w)[0])
            add_terms(OFF_W + wi, OFF_W + wj, terms)
    F = make_field(p)
    amb = LieAlgebra(F, dim, sc, check=True)
    pi2 = np.zeros((nW, dim), dtype=np.int64)
    for wi in range(nW):
        pi2[wi, OFF_W + wi] = 1
    # socle embedding: s (x) f -> (ad s) (x) f
    ad_cols = ad_hom.matrix  # DerS coords of ad(e_i)
    socle = np.zeros((dim, S.dim * nO), dtype=np.int64)
    for si in range(S.dim):
        for ai in range(nO):
            col = np.zeros(dim, dtype=np.int64)
            for di in np.nonzero(ad_cols[:, si])[0]:
                col[int(di) * nO + ai] = ad_cols[di, si]
            socle[:, si * nO + ai] = col
    return TensorAmbient(amb, DerS, dpa, vf, pi2, socle)
