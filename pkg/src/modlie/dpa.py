"""Divided power algebras O(m; n) over GF(p).

Basis monomials x^(a) with 0 <= a_i < p^{n_i}, multiplication
x^(a) * x^(b) = prod_i binom(a_i + b_i, a_i) * x^(a+b), zero on overflow.
The binomial factors are taken mod p (Lucas), which is what separates a
divided power algebra from a plain truncated polynomial ring once some
n_i > 1: e.g. at p = 5, x^(4) * x^(1) = binom(5,1) x^(5) = 0 in O(1;2)
even though x^(5) is a basis element there.
"""

from __future__ import annotations

import itertools

import numpy as np


def binom_mod_p(a, b, p):
    """binom(a, b) mod p via Lucas."""
    if b < 0 or b > a:
        return 0
    result = 1
    while a or b:
        ad, bd = a % p, b % p
        if bd > ad:
            return 0
        num = den = 1
        for t in range(bd):
            num = (num * ((ad - t) % p)) % p
            den = (den * (t + 1)) % p
        result = (result * num * pow(den, p - 2, p)) % p
        a //= p
        b //= p
    return result


class DividedPowerAlgebra:
    """O(m; n): truncated divided power algebra over GF(p)."""

    def __init__(self, p, m, n):
        n = tuple(int(v) for v in (n if hasattr(n, "__len__") else [n] * m))
        if m < 1 or len(n) != m or any(v < 1 for v in n):
            raise ValueError("need m >= 1 and per-variable heights n_i >= 1")
        self.p = int(p)
        self.m = int(m)
        self.n = n
        self.heights = tuple(p ** v for v in n)
        self.dim = int(np.prod(self.heights))
        if self.dim > 10 ** 4:
            raise ValueError(f"O({m};{n}) at p={p} exceeds the size cap")
        self.monomials = [tuple(a) for a in itertools.product(
            *[range(h) for h in self.heights])]
        self.index = {a: i for i, a in enumerate(self.monomials)}

    def unit_index(self):
        return self.index[(0,) * self.m]

    def mult_monomials(self, a, b):
        """(coefficient, monomial index) of x^(a) x^(b); coefficient may be 0."""
        c = tuple(ai + bi for ai, bi in zip(a, b))
        for ci, h in zip(c, self.heights):
            if ci >= h:
                return 0, None
        coeff = 1
        for ai, ci in zip(a, c):
            coeff = (coeff * binom_mod_p(ci, ai, self.p)) % self.p
            if coeff == 0:
                return 0, None
        return coeff, self.index[c]

    def multiply(self, u, v):
        """Product of coefficient vectors."""
        out = np.zeros(self.dim, dtype=np.int64)
        nz_u = np.nonzero(u)[0]
        nz_v = np.nonzero(v)[0]
        for i in nz_u:
            a = self.monomials[i]
            for j in nz_v:
                coeff, idx = self.mult_monomials(a, self.monomials[j])
                if idx is not None:
                    out[idx] = (out[idx] + int(u[i]) * int(v[j]) * coeff) % self.p
        return out

    def derivative_matrix(self, i):
        """Matrix of the special derivation lowering the i-th index: x^(a) -> x^(a - e_i)."""
        D = np.zeros((self.dim, self.dim), dtype=np.int64)
        for idx, a in enumerate(self.monomials):
            if a[i] > 0:
                lower = list(a)
                lower[i] -= 1
                D[self.index[tuple(lower)], idx] = 1
        return D

    def multiplication_matrix(self, u):
        """Matrix of multiplication by the coefficient vector u."""
        M = np.zeros((self.dim, self.dim), dtype=np.int64)
        for j, b in enumerate(self.monomials):
            col = np.zeros(self.dim, dtype=np.int64)
            for i in np.nonzero(u)[0]:
                coeff, idx = self.mult_monomials(self.monomials[i], b)
                if idx is not None:
                    col[idx] = (col[idx] + int(u[i]) * coeff) % self.p
            M[:, j] = col
        return M

    def monomial_degree(self, idx):
        return sum(self.monomials[idx])
