import itertools

import numpy as np
import pytest

from modlie.field import (
    FieldError,
    artin_schreier_xi,
    make_field,
    scalar_from_digits,
    scalar_to_digits,
)


def test_prime_field_basics():
    F = make_field(5)
    assert F.q == 5
    assert F.mul(3, 4) == 2          # 12 mod 5
    assert F.inv(2) == 3             # 2*3 = 6 = 1
    assert F.pow(2, -1) == 3
    assert F.sub(1, 3) == 3


def test_make_field_rejects_bad_args():
    with pytest.raises(FieldError):
        make_field(6)
    with pytest.raises(FieldError):
        make_field(5, 0)
    with pytest.raises(FieldError):
        make_field(5, 13)


def test_gf3125_element_count_and_group_order_sample():
    # enumerate all coefficient vectors; sample the multiplicative order law
    F = make_field(5, 5)
    assert F.q == 3125
    assert len(set(F.elements())) == 3125
    rng = np.random.default_rng(7)
    for v in rng.integers(1, F.q, size=12):
        assert F.pow(int(v), F.q - 1) == 1


def test_gf49_frobenius_order_two_exhaustive():
    F = make_field(7, 2)
    assert F.q == 49
    for a in F.elements():
        assert F.pow(a, 49) == a
        assert F.frobenius(F.frobenius(a)) == a


def test_gf25_frobenius_involution_and_fixed_points():
    F = make_field(5, 2)
    fixed = [a for a in F.elements() if F.frobenius(a) == a]
    assert len(fixed) == 5
    for a in F.elements():
        assert F.frobenius(F.frobenius(a)) == a


@pytest.mark.parametrize("p,k", [(5, 1), (5, 2), (7, 2)])
def test_field_axioms_exhaustive_small(p, k):
    F = make_field(p, k)
    elems = list(F.elements()) if F.q <= 49 else list(range(25))
    for a, b in itertools.product(elems, repeat=2):
        assert F.add(a, b) == F.add(b, a)
        assert F.mul(a, b) == F.mul(b, a)
    for a, b, c in itertools.islice(itertools.product(elems, repeat=3), 4000):
        assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
        assert F.mul(a, F.mul(b, c)) == F.mul(F.mul(a, b), c)


def test_field_axioms_randomized_large():
    F = make_field(5, 5)
    rng = np.random.default_rng(11)
    for _ in range(200):
        a, b, c = (int(v) for v in rng.integers(0, F.q, size=3))
        assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
        if a != 0:
            assert F.mul(a, F.inv(a)) == 1


def test_division_by_zero_raises():
    F = make_field(5, 2)
    with pytest.raises(ZeroDivisionError):
        F.inv(0)
    with pytest.raises(ZeroDivisionError):
        F.div(3, 0)


def test_frobenius_fixes_exactly_p_elements():
    for p, k in [(5, 2), (5, 3), (7, 2), (5, 5)]:
        F = make_field(p, k)
        if F.q <= 3200:
            count = sum(1 for a in F.elements() if F.frobenius(a) == a)
            assert count == p


# -- Artin-Schreier section --------------------------------------------------

def _xi_one_by_root_enumeration(p):
    # independent oracle: factor X^p - X - 1 over GF(p^p) by full enumeration
    F = make_field(p, p)
    roots = [z for z in F.elements() if F.sub(F.pow(z, p), z) == 1]
    assert len(roots) == p
    return min(roots), F


def test_xi_one_is_designated_root_p5():
    expected, F = _xi_one_by_root_enumeration(5)
    assert artin_schreier_xi(1, 5) == expected
    z = artin_schreier_xi(1, 5)
    assert F.sub(F.pow(z, 5), z) == 1


def test_xi_laws_exhaustive_p5_p7():
    for p in (5, 7):
        F = make_field(p, p)
        xi = {a: artin_schreier_xi(a, p) for a in range(p)}
        assert xi[0] == 0
        for a in range(p):
            assert F.sub(F.pow(xi[a], p), xi[a]) == a
            for b in range(p):
                assert F.add(xi[a], xi[b]) == xi[(a + b) % p]


def test_xi_2_squared_law():
    F = make_field(5, 5)
    z2 = artin_schreier_xi(2, 5)
    assert z2 == F.mul(2, artin_schreier_xi(1, 5))
    assert F.sub(F.pow(z2, 5), z2) == 2


def test_xi_rejects_non_prime_field_values():
    with pytest.raises(FieldError):
        artin_schreier_xi(9, 5)


# -- embeddings ----------------------------------------------------------------

def test_embed_prime_subfield_fixed():
    F5 = make_field(5)
    F25 = make_field(5, 2)
    emb = F5.embed_map(F25)
    assert emb(3) == 3
    F3125 = make_field(5, 5)
    assert F5.embed_map(F3125)(1) == 1


def test_embed_generator_to_designated_root():
    F25 = make_field(5, 2)
    F625 = make_field(5, 4)
    emb = F25.embed_map(F625)
    gen_img = emb(F25.pack((0, 1)))
    # modulus annihilates the image
    acc = 0
    xp = 1
    for c in F25.modulus:
        acc = F625.add(acc, F625.mul(int(c), xp))
        xp = F625.mul(xp, gen_img)
    assert acc == 0


def test_embed_ring_homomorphism_and_injective():
    F25 = make_field(5, 2)
    F625 = make_field(5, 4)
    emb = F25.embed_map(F625)
    images = {emb(a) for a in F25.elements()}
    assert len(images) == 25
    for a in F25.elements():
        for b in range(0, 25, 3):
            assert emb(F25.mul(a, b)) == F625.mul(emb(a), emb(b))
            assert emb(F25.add(a, b)) == F625.add(emb(a), emb(b))


def test_embed_requires_divisibility():
    F25 = make_field(5, 2)
    F125 = make_field(5, 3)
    with pytest.raises(FieldError):
        F25.embed_map(F125)
    with pytest.raises(FieldError):
        make_field(7).embed_map(F25)


# -- serialization ---------------------------------------------------------------

def test_scalar_digit_round_trip():
    F = make_field(5, 3)
    for v in [0, 1, 37, 124]:
        digits = scalar_to_digits(F, v)
        assert len(digits) == 3
        assert scalar_from_digits(F, digits) == v


def test_vectorized_ops_match_scalar():
    F = make_field(5, 2)
    rng = np.random.default_rng(3)
    A = rng.integers(0, F.q, size=(4, 4))
    B = rng.integers(0, F.q, size=(4, 4))
    vm = F.vmul(A, B)
    for i in range(4):
        for j in range(4):
            assert vm[i, j] == F.mul(int(A[i, j]), int(B[i, j]))
    M = F.vmatmul(A, B)
    for i in range(4):
        for j in range(4):
            acc = 0
            for t in range(4):
                acc = F.add(acc, F.mul(int(A[i, t]), int(B[t, j])))
            assert M[i, j] == acc
