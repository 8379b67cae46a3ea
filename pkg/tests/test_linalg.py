import itertools

import numpy as np
import pytest

from modlie.field import make_field
from modlie.linalg import (
    LinalgError,
    Subspace,
    invert,
    kernel_matrix,
    matrix_power,
    rref,
    simultaneous_eigenspaces,
    solve,
    subspace_from_vectors,
)

F5 = make_field(5)


def test_rref_identity_and_zero():
    I = np.eye(3, dtype=np.int64)
    R, rank, piv = rref(F5, I)
    assert np.array_equal(R, I) and rank == 3 and piv == [0, 1, 2]
    Z = np.zeros((2, 3), dtype=np.int64)
    R, rank, _ = rref(F5, Z)
    assert rank == 0 and not R.any()


def test_rref_hand_case():
    M = [[1, 2], [2, 4]]
    R, rank, _ = rref(F5, M)
    assert rank == 1
    assert np.array_equal(R, [[1, 2], [0, 0]])


def test_rref_idempotent_random():
    rng = np.random.default_rng(0)
    for _ in range(25):
        M = rng.integers(0, 5, size=(6, 9))
        R1, r1, _ = rref(F5, M)
        R2, r2, _ = rref(F5, R1)
        assert r1 == r2 and np.array_equal(R1, R2)


def test_kernel_hand_cases():
    assert kernel_matrix(F5, np.eye(3, dtype=np.int64)).shape[0] == 0
    K = kernel_matrix(F5, np.zeros((2, 3), dtype=np.int64))
    assert K.shape == (3, 3)
    # x + 2y = 0 over GF(5): span{(3, 1)} canonicalized to (1, 2)
    K = kernel_matrix(F5, [[1, 2]])
    assert K.shape == (1, 2)
    v = K[0]
    assert (v[0] + 2 * v[1]) % 5 == 0 and v.any()


def test_kernel_rank_nullity_and_annihilation():
    rng = np.random.default_rng(1)
    for _ in range(25):
        M = rng.integers(0, 5, size=(7, 10))
        K = kernel_matrix(F5, M)
        _, rank, _ = rref(F5, M)
        assert K.shape[0] == 10 - rank
        assert not ((M @ K.T) % 5).any()


def test_solve_and_invert():
    A = [[1, 2], [3, 4]]
    x = solve(F5, A, [1, 0])
    assert x is not None
    assert np.array_equal((np.array(A) @ x) % 5, [1, 0])
    Ainv = invert(F5, A)
    assert np.array_equal((np.array(A) @ Ainv) % 5, np.eye(2, dtype=np.int64))
    assert solve(F5, [[1, 2], [2, 4]], [0, 1]) is None


def test_matrix_power():
    M = np.array([[1, 1], [0, 1]], dtype=np.int64)
    P = matrix_power(F5, M, 5)
    assert np.array_equal(P, np.eye(2, dtype=np.int64))  # unipotent order 5


def test_subspace_canonical_uniqueness():
    rng = np.random.default_rng(2)
    for _ in range(20):
        B = rng.integers(0, 5, size=(4, 8))
        S1 = Subspace(F5, 8, B)
        # random invertible change of basis rows
        while True:
            C = rng.integers(0, 5, size=(4, 4))
            _, r, _ = rref(F5, C)
            if r == 4:
                break
        S2 = Subspace(F5, 8, (C @ B) % 5)
        assert S1 == S2


def test_subspace_ops_trivialities():
    A = subspace_from_vectors(F5, 2, [[1, 0]])
    zero = Subspace.zero(F5, 2)
    full = Subspace.full(F5, 2)
    assert A.sum(zero) == A
    assert A.intersect(full) == A
    e2 = subspace_from_vectors(F5, 2, [[0, 1]])
    assert A.intersect(e2).dim == 0
    assert full.contains(A) and not A.contains(full)
    assert A.member([2, 0]) and not A.member([1, 1])


def test_modular_law_dims_random_20dim():
    rng = np.random.default_rng(3)
    for _ in range(15):
        A = Subspace(F5, 20, rng.integers(0, 5, size=(7, 20)))
        B = Subspace(F5, 20, rng.integers(0, 5, size=(9, 20)))
        assert A.sum(B).dim + A.intersect(B).dim == A.dim + B.dim


def test_subspace_ambient_mismatch():
    A = Subspace.full(F5, 2)
    B = Subspace.full(F5, 3)
    with pytest.raises(LinalgError):
        A.sum(B)


def test_simultaneous_eigenspaces_diag():
    D = np.diag([0, 1, 1]).astype(np.int64)
    out = simultaneous_eigenspaces(F5, [D], [(0,), (1,)])
    assert out[(0,)].dim == 1 and out[(1,)].dim == 2


def test_simultaneous_eigenspaces_empty_family():
    out = simultaneous_eigenspaces(F5, [], [tuple()])
    assert out[tuple()].dim == 0  # full space of the 0-dim ambient


def test_simultaneous_eigenspaces_noncommuting_rejected():
    A = np.array([[0, 1], [0, 0]], dtype=np.int64)
    B = np.array([[0, 0], [1, 0]], dtype=np.int64)
    with pytest.raises(LinalgError):
        simultaneous_eigenspaces(F5, [A, B], [(0, 0)])


def test_eigenspace_completeness_for_commuting_semisimple():
    # two commuting diagonalizable operators: direct sum over value pairs fills
    D1 = np.diag([0, 1, 2, 3]).astype(np.int64)
    D2 = np.diag([1, 1, 4, 4]).astype(np.int64)
    pairs = list(itertools.product(range(5), repeat=2))
    spaces = simultaneous_eigenspaces(F5, [D1, D2], pairs)
    assert sum(S.dim for S in spaces.values()) == 4


def test_extension_field_rref_kernel():
    F25 = make_field(5, 2)
    g = F25.pack((0, 1))
    M = np.array([[1, g], [g, F25.mul(g, g)]], dtype=np.int64)  # rank 1
    R, rank, _ = rref(F25, M)
    assert rank == 1
    K = kernel_matrix(F25, M)
    assert K.shape[0] == 1
    # M @ K^T = 0 over GF(25)
    prod = F25.vmatmul(M, K.T)
    assert not prod.any()


def test_witt_adjoint_eigenspaces_from_bracket_formula():
    # ad(x d/dx) on the 5-dim algebra of derivations f d/dx over GF(5):
    # direct bracket computation gives [x d/dx, x^j d/dx] = (j-1) x^j d/dx,
    # so with basis x^j d/dx (j = 0..4) the adjoint matrix is diagonal.
    ad = np.diag([(j - 1) % 5 for j in range(5)]).astype(np.int64)
    out = simultaneous_eigenspaces(F5, [ad], [(v,) for v in range(5)])
    dims = {v[0]: S.dim for v, S in out.items()}
    assert dims == {0: 1, 1: 1, 2: 1, 3: 1, 4: 1}
