"""Canonical fixtures shared by the test battery and verify-fixtures.

Everything here is deterministic: constructions, distinguished torus
choices, and the planted algebras used to exercise the two-section
buckets.  Heavy objects are cached per process.
"""

from __future__ import annotations

import functools

import numpy as np

from modlie import constructors as cons
from modlie.field import make_field
from modlie.liealg import (
    Homomorphism,
    LieAlgebra,
    adjoint_hom,
    derivations,
)
from modlie.linalg import Subspace
from modlie.sections import SectionEngine
from modlie.tori import Torus, root_decomposition


@functools.lru_cache(maxsize=None)
def witt11(p=5):
    meta = cons.make_W(p, 1, (1,))
    meta.algebra.attach_pmap()
    return meta


@functools.lru_cache(maxsize=None)
def witt12(p=5):
    return cons.make_W(p, 1, (2,))


@functools.lru_cache(maxsize=None)
def witt21(p=5):
    meta = cons.make_W(p, 2, (1, 1))
    meta.algebra.attach_pmap()
    return meta


@functools.lru_cache(maxsize=None)
def ham2(p=5, variant="second_derived"):
    meta = cons.make_H2(p, (1, 1), variant)
    if variant != "first_derived":
        try:
            meta.algebra.attach_pmap()
        except Exception:
            pass
    return meta


@functools.lru_cache(maxsize=None)
def ham221(p=5):
    return cons.make_H2(p, (2, 1), "second_derived")


@functools.lru_cache(maxsize=None)
def contact31(p=5):
    meta = cons.make_K(p)
    meta.algebra.attach_pmap()
    return meta


@functools.lru_cache(maxsize=None)
def melikian():
    meta = cons.make_melikian(5)
    meta.algebra.attach_pmap()
    return meta


@functools.lru_cache(maxsize=None)
def special31(p=5):
    return cons.make_S1(p)


@functools.lru_cache(maxsize=None)
def sl(n, p=5):
    return cons.make_classical(p, "sl", n)


@functools.lru_cache(maxsize=None)
def der_ham2(p=5):
    """(Der of the 23-dim Hamiltonian algebra, the adjoint embedding)."""
    H = ham2(p).algebra
    Der, ad = derivations(H)
    return Der, ad, H


# ---------------------------------------------------------------------------
# distinguished tori
# ---------------------------------------------------------------------------

def witt_field_vector(meta, coeff_by_monomial, block=0):
    """Coordinate vector of sum c_a x^(a) d_(block+1) in a W-type basis."""
    vf = meta.extras["vf"]
    v = np.zeros(meta.algebra.dim, dtype=np.int64)
    for a, c in coeff_by_monomial.items():
        v[block * vf.O.dim + vf.O.index[tuple(a)]] = c % meta.algebra.p
    return v


def witt11_torus_standard(p=5):
    meta = witt11(p)
    t = witt_field_vector(meta, {(1,): 1})
    T = Torus(meta.algebra, t.reshape(1, -1), make_field(p))
    T.verify()
    return T


def witt11_torus_improper(p=5):
    meta = witt11(p)
    t = witt_field_vector(meta, {(0,): 1, (1,): 1})
    T = Torus(meta.algebra, t.reshape(1, -1), make_field(p))
    T.verify()
    return T


def witt21_torus_standard(p=5):
    meta = witt21(p)
    t1 = witt_field_vector(meta, {(1, 0): 1}, block=0)
    t2 = witt_field_vector(meta, {(0, 1): 1}, block=1)
    T = Torus(meta.algebra, np.array([t1, t2]), make_field(p))
    T.verify()
    return T


def witt21_torus_improper(p=5):
    meta = witt21(p)
    t1 = witt_field_vector(meta, {(0, 0): 1, (1, 0): 1}, block=0)
    t2 = witt_field_vector(meta, {(0, 0): 1, (0, 1): 1}, block=1)
    T = Torus(meta.algebra, np.array([t1, t2]), make_field(p))
    T.verify()
    return T


def ham2_torus_standard(p=5):
    """F (x_1 d_1 - x_2 d_2) inside the 23-dim Hamiltonian algebra."""
    meta = ham2(p)
    vf = meta.extras["vf"]
    t = np.zeros(meta.algebra.dim, dtype=np.int64)
    # basis elements are D_H(x^(a)); x_1 d_1 - x_2 d_2 = D_H(-x^(1,1))
    labels = meta.algebra.labels
    idx = labels.index("D_H(x^(1,1))")
    t[idx] = (-1) % p
    T = Torus(meta.algebra, t.reshape(1, -1), make_field(p))
    T.verify()
    return T


def melikian_nonstandard_torus():
    """Two commuting torals in the vector-field part whose centralizer has a
    non-triangulable derived algebra."""
    meta = melikian()
    vf = cons.VectorFieldSpace(5, 2, (1, 1))
    nO = vf.O.dim
    t1 = np.zeros(125, dtype=np.int64)
    t1[0 * nO + vf.O.index[(0, 0)]] = 1
    t1[0 * nO + vf.O.index[(1, 0)]] = 1
    t2 = np.zeros(125, dtype=np.int64)
    t2[1 * nO + vf.O.index[(0, 0)]] = 1
    t2[1 * nO + vf.O.index[(0, 1)]] = 1
    T = Torus(meta.algebra, np.array([t1, t2]), make_field(5))
    T.verify()
    return T


def der_ham2_vector_field_coords(field_terms, p=5):
    """Coordinates in the derivation algebra of a vector field acting on the
    23-dim Hamiltonian algebra; field_terms = [(block, monomial, coeff)]."""
    Der, ad, H = der_ham2(p)
    meta = ham2(p)
    vf = meta.extras["vf"]
    hfields = meta.extras["fields"]
    w = np.zeros(vf.dim, dtype=np.int64)
    for block, mono, c in field_terms:
        w[block * vf.O.dim + vf.O.index[tuple(mono)]] = c % p
    # action matrix on the Hamiltonian basis
    from modlie.linalg import invert, rref
    terms_w = vf.to_terms(w)
    cols = []
    B = np.array(hfields, dtype=np.int64)
    F = make_field(p)
    _, _, piv = rref(F, B)
    Tr = invert(F, B[:, piv].T)
    for bfield in hfields:
        img = vf.bracket_terms(terms_w, vf.to_terms(bfield))
        coords = (Tr @ img[piv]) % p
        if not np.array_equal((coords @ B) % p, img):
            raise ValueError("vector field does not preserve the algebra")
        cols.append(coords)
    D = np.array(cols, dtype=np.int64).T % p
    coords = Der.matrix_coords(D)
    if coords is None:
        raise ValueError("action matrix is not a derivation (bug)")
    return coords


@functools.lru_cache(maxsize=None)
def der_ham2_torus(kind, p=5):
    """Tori T_0, T_1, T_2 in the derivation ambient: z_i d_i with
    z_i in {x_i, 1 + x_i} per `kind` in {(0,0), (1,0), (1,1)}."""
    Der, ad, H = der_ham2(p)
    shift1, shift2 = kind
    terms1 = [(0, (1, 0), 1)] + ([(0, (0, 0), 1)] if shift1 else [])
    terms2 = [(1, (0, 1), 1)] + ([(1, (0, 0), 1)] if shift2 else [])
    t1 = der_ham2_vector_field_coords(terms1, p)
    t2 = der_ham2_vector_field_coords(terms2, p)
    T = Torus(Der, np.array([t1, t2]), make_field(p))
    T.verify()
    return T


def der_ham2_engine(kind, p=5):
    Der, ad, H = der_ham2(p)
    T = der_ham2_torus(kind, p)
    return SectionEngine(Der, H, ad.matrix, T)


def engine_for(L, torus):
    return SectionEngine.for_restricted(L, torus)


# ---------------------------------------------------------------------------
# planted two-section inputs
# ---------------------------------------------------------------------------

def direct_sum(A, B):
    """A (+) B with injection bookkeeping."""
    p = A.p
    n = A.dim + B.dim
    sc = {}
    for (i, j), terms in A.sc.items():
        sc[(i, j)] = terms
    for (i, j), terms in B.sc.items():
        sc[(i + A.dim, j + A.dim)] = tuple((k + A.dim, c) for k, c in terms)
    pmap = None
    if A.pmap is not None and B.pmap is not None:
        pmap = {}
        for i, v in A.pmap.items():
            w = np.zeros(n, dtype=np.int64)
            w[:A.dim] = v
            pmap[i] = w
        for i, v in B.pmap.items():
            w = np.zeros(n, dtype=np.int64)
            w[A.dim:] = v
            pmap[i + A.dim] = w
    L = LieAlgebra(A.field, n, sc, pmap=pmap, check=False)
    return L


def solvable_rank1_block(p=5):
    """The nonnegative part of the 5-dim vector-field algebra, with its torus
    element marked: a solvable algebra carrying a one-dimensional torus."""
    meta = witt11(p)
    W = meta.algebra
    Z = meta.standard_zero
    from modlie.liealg import subalgebra
    B, emb = subalgebra(W, Z, check=True)
    B.attach_pmap()
    # torus vector: image of x d under the embedding
    t = emb.preimage_space(Subspace(
        make_field(p), W.dim,
        witt_field_vector(meta, {(1,): 1}).reshape(1, -1)))
    tvec = t.basis[0]
    return B, tvec


def planted_case1(p=5):
    """Solvable (+) solvable with a two-dimensional torus."""
    B1, t1 = solvable_rank1_block(p)
    L = direct_sum(B1, B1)
    L.attach_pmap()
    ta = np.zeros(L.dim, dtype=np.int64)
    ta[:B1.dim] = t1
    tb = np.zeros(L.dim, dtype=np.int64)
    tb[B1.dim:] = t1
    T = Torus(L, np.array([ta, tb]), make_field(p))
    T.verify()
    return SectionEngine.for_restricted(L, T)


def planted_case2(p=5):
    """Simple rank-one summand (+) solvable summand."""
    W = witt11(p).algebra
    B1, t1 = solvable_rank1_block(p)
    L = direct_sum(W, B1)
    L.attach_pmap()
    ta = np.zeros(L.dim, dtype=np.int64)
    ta[:W.dim] = witt_field_vector(witt11(p), {(1,): 1})
    tb = np.zeros(L.dim, dtype=np.int64)
    tb[W.dim:] = t1
    T = Torus(L, np.array([ta, tb]), make_field(p))
    T.verify()
    return SectionEngine.for_restricted(L, T)


def planted_case3(p=5):
    """Two simple rank-one summands."""
    W = witt11(p).algebra
    L = direct_sum(W, W)
    L.attach_pmap()
    ta = np.zeros(L.dim, dtype=np.int64)
    ta[:W.dim] = witt_field_vector(witt11(p), {(1,): 1})
    tb = np.zeros(L.dim, dtype=np.int64)
    tb[W.dim:] = witt_field_vector(witt11(p), {(1,): 1})
    T = Torus(L, np.array([ta, tb]), make_field(p))
    T.verify()
    return SectionEngine.for_restricted(L, T)


@functools.lru_cache(maxsize=None)
def planted_case5(p=5):
    """The split derivation ambient of sl(2) (x) O(1;1), with the torus
    spanned by a socle toral element and a vector-field toral element."""
    s = sl(2, p)
    amb = cons.make_tensor_ambient(s, 1)
    L = amb.algebra
    L.attach_pmap()
    # h (x) 1: socle embedding of the diagonal toral element
    hvec = np.zeros(s.dim, dtype=np.int64)
    # basis of sl(2) from make_classical: E_12, E_21, diag(1,-1)
    hvec[2] = 1
    t1 = np.zeros(L.dim, dtype=np.int64)
    col = amb.socle_embed[:, 2 * amb.dpa.dim + 0]
    t1 = col.copy()
    # identity (x) x d: the W-block monomial field index 1
    t2 = np.zeros(L.dim, dtype=np.int64)
    t2[amb.derS.dim * amb.dpa.dim + 1] = 1
    T = Torus(L, np.array([t1, t2]), make_field(p))
    T.verify()
    return SectionEngine.for_restricted(L, T), amb


def tensor_algebra(kind, m, p=5):
    """S (x) O(m;1) for the round-trip fixtures."""
    if kind == "sl2":
        S = sl(2, p)
    elif kind == "witt":
        S = witt11(p).algebra
    elif kind == "ham":
        S = ham2(p).algebra
    else:
        raise ValueError(kind)
    return cons.make_tensor(S, m, 1)
