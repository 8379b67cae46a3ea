"""Exact arithmetic in GF(p^k) for small odd primes.

Elements of GF(p^k) are packed integers in [0, p^k): the element with
polynomial representation c_0 + c_1*X + ... + c_{k-1}*X^{k-1} is stored as
the integer c_0 + c_1*p + ... + c_{k-1}*p^{k-1}.  For k = 1 the packed
integer is the residue itself, so prime-field code pays no packing cost
and plain numpy arrays mod p are valid GF(p) data.

The defining modulus of GF(p^k) is chosen deterministically (smallest
packed encoding among monic irreducible degree-k polynomials), so
serialized scalars are portable between runs.
"""

from __future__ import annotations

import functools

import numpy as np


class FieldError(ValueError):
    pass


def is_prime(n):
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


# ---------------------------------------------------------------------------
# polynomial helpers over F_p (little-endian coefficient lists)
# ---------------------------------------------------------------------------

def _poly_trim(c):
    i = len(c)
    while i > 0 and c[i - 1] == 0:
        i -= 1
    return c[:i]


def _poly_mulmod(a, b, mod, p):
    """(a*b) mod `mod` over F_p; all little-endian tuples, mod monic."""
    if not a or not b:
        return ()
    prod = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                prod[i + j] = (prod[i + j] + ai * bj) % p
    return _poly_modred(prod, mod, p)


def _poly_modred(c, mod, p):
    c = list(c)
    dm = len(mod) - 1
    for i in range(len(c) - 1, dm - 1, -1):
        f = c[i] % p
        if f:
            for j in range(dm + 1):
                c[i - dm + j] = (c[i - dm + j] - f * mod[j]) % p
    return tuple(_poly_trim(tuple(v % p for v in c[:dm])))


def _poly_powmod(a, e, mod, p):
    result = (1,)
    base = _poly_modred(a, mod, p)
    while e > 0:
        if e & 1:
            result = _poly_mulmod(result, base, mod, p)
        base = _poly_mulmod(base, base, mod, p)
        e >>= 1
    return result


def _poly_gcd(a, b, p):
    a, b = tuple(_poly_trim(a)), tuple(_poly_trim(b))
    while b:
        # a mod b with b made monic on the fly
        lead_inv = pow(b[-1], p - 2, p)
        bm = tuple((x * lead_inv) % p for x in b)
        r = list(a)
        db = len(bm) - 1
        while len(_poly_trim(tuple(r))) - 1 >= db and _poly_trim(tuple(r)):
            r = list(_poly_trim(tuple(r)))
            if len(r) - 1 < db:
                break
            f = r[-1]
            shift = len(r) - 1 - db
            for j in range(db + 1):
                r[shift + j] = (r[shift + j] - f * bm[j]) % p
            r = list(_poly_trim(tuple(r)))
            if not r:
                break
        a, b = b, tuple(_poly_trim(tuple(r)))
    return a


def _is_irreducible(mod, p):
    """Rabin test: f (monic, degree k) irreducible over F_p."""
    k = len(mod) - 1
    if k == 1:
        return True
    x = (0, 1)
    # x^(p^k) == x mod f
    xp = _poly_powmod(x, p ** k, mod, p)
    if xp != _poly_modred(x, mod, p):
        return False
    for ell in set(_prime_factors(k)):
        xq = _poly_powmod(x, p ** (k // ell), mod, p)
        d = list(xq) if len(xq) >= 2 else list(xq) + [0] * (2 - len(xq))
        d[1] = (d[1] - 1) % p  # xq - x
        d = tuple(_poly_trim(tuple(d)))
        if len(_poly_gcd(mod, d, p)) > 1:
            return False
    return True


def _prime_factors(n):
    out = []
    d = 2
    while d * d <= n:
        while n % d == 0:
            out.append(d)
            n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


# ---------------------------------------------------------------------------
# Field
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def make_field(p, k=1):
    """GF(p^k) with the deterministic smallest-encoding irreducible modulus."""
    if not is_prime(p):
        raise FieldError(f"p = {p} is not prime")
    if not (1 <= k <= 12):
        raise FieldError(f"extension degree k = {k} out of range [1, 12]")
    return Field(p, k)


class Field:
    """Arithmetic context for GF(p^k) on packed-integer scalars.

    Scalar values are ints in [0, p^k).  Vectorized methods (prefix `v`)
    accept and return numpy int64 arrays of packed values; for k = 1 they
    reduce to plain arithmetic mod p.
    """

    def __init__(self, p, k):
        self.p = int(p)
        self.k = int(k)
        self.q = self.p ** self.k
        self.modulus = self._smallest_irreducible()
        self._pows = self.p ** np.arange(self.k, dtype=np.int64)
        # reduction matrix: row j = digits of x^(k+j) mod modulus, j < k-1
        self._red = self._reduction_matrix()
        self._frob_mat = None
        self._inv_table = None

    # -- construction helpers ------------------------------------------------

    def _smallest_irreducible(self):
        p, k = self.p, self.k
        if k == 1:
            return (0, 1)
        for enc in range(p ** k):
            mod = tuple(_unpack_int(enc, p, k)) + (1,)
            if _is_irreducible(mod, p):
                return mod
        raise FieldError("no irreducible modulus found")  # unreachable

    def _reduction_matrix(self):
        """Digits of x^(k), ..., x^(2k-2) modulo the modulus, as a matrix."""
        p, k = self.p, self.k
        if k == 1:
            return np.zeros((0, 1), dtype=np.int64)
        rows = []
        cur = _poly_modred(tuple([0] * k + [1]), self.modulus, p)
        rows.append(list(cur) + [0] * (k - len(cur)))
        x = (0, 1)
        for _ in range(k - 2):
            cur = _poly_mulmod(cur, x, self.modulus, p)
            rows.append(list(cur) + [0] * (k - len(cur)))
        return np.array(rows, dtype=np.int64)

    # -- packing -------------------------------------------------------------

    def pack(self, digits):
        return int(np.dot(np.asarray(digits, dtype=np.int64), self._pows))

    def unpack(self, value):
        return _unpack_int(int(value), self.p, self.k)

    def vunpack(self, arr):
        """Packed int64 array -> digit array with trailing axis k."""
        arr = np.asarray(arr, dtype=np.int64)
        out = np.empty(arr.shape + (self.k,), dtype=np.int64)
        rem = arr
        for i in range(self.k):
            out[..., i] = rem % self.p
            rem = rem // self.p
        return out

    def vpack(self, digits):
        digits = np.asarray(digits, dtype=np.int64) % self.p
        return digits @ self._pows

    # -- scalar arithmetic (packed ints) --------------------------------------

    def add(self, a, b):
        if self.k == 1:
            return (a + b) % self.p
        return int(self.vadd(np.int64(a), np.int64(b)))

    def sub(self, a, b):
        if self.k == 1:
            return (a - b) % self.p
        return int(self.vsub(np.int64(a), np.int64(b)))

    def neg(self, a):
        return self.sub(0, a)

    def mul(self, a, b):
        if self.k == 1:
            return (a * b) % self.p
        return int(self.vmul(np.int64(a), np.int64(b)))

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        return self.pow(a, self.q - 2)

    def div(self, a, b):
        if b == 0:
            raise ZeroDivisionError("division by zero")
        return self.mul(a, self.inv(b))

    def pow(self, a, e):
        e = int(e)
        if e < 0:
            return self.pow(self.inv(a), -e)
        result, base = 1, a
        while e > 0:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def frobenius(self, a):
        return self.pow(a, self.p)

    def frobenius_matrix(self):
        """k x k matrix of a -> a^p in the digit basis (F_p-linear)."""
        if self._frob_mat is None:
            cols = []
            for i in range(self.k):
                img = self.pow(self.pack([0] * i + [1] + [0] * (self.k - 1 - i)), self.p)
                cols.append(self.unpack(img))
            self._frob_mat = np.array(cols, dtype=np.int64).T % self.p
        return self._frob_mat

    def elements(self):
        return range(self.q)

    # -- vectorized arithmetic on packed arrays --------------------------------

    def vadd(self, a, b):
        if self.k == 1:
            return (np.asarray(a, dtype=np.int64) + np.asarray(b, dtype=np.int64)) % self.p
        return self.vpack(self.vunpack(a) + self.vunpack(b))

    def vsub(self, a, b):
        if self.k == 1:
            return (np.asarray(a, dtype=np.int64) - np.asarray(b, dtype=np.int64)) % self.p
        return self.vpack(self.vunpack(a) - self.vunpack(b))

    def vneg(self, a):
        return self.vsub(np.int64(0), a)

    def vmul(self, a, b):
        if self.k == 1:
            return (np.asarray(a, dtype=np.int64) * np.asarray(b, dtype=np.int64)) % self.p
        da, db = self.vunpack(a), self.vunpack(b)
        return self.vpack(self._digit_mul(da, db))

    def _digit_mul(self, da, db):
        """Convolution of digit arrays plus modulus reduction; trailing axis k."""
        k = self.k
        da, db = np.broadcast_arrays(da, db)
        conv = np.zeros(da.shape[:-1] + (2 * k - 1,), dtype=np.int64)
        for i in range(k):
            conv[..., i:i + k] += da[..., i:i + 1] * db
        conv %= self.p
        low = conv[..., :k].copy()
        if k > 1:
            low += conv[..., k:] @ self._red
        return low % self.p

    def vinv(self, a):
        """Elementwise inverse; zeros raise."""
        a = np.asarray(a, dtype=np.int64)
        if np.any(a == 0):
            raise ZeroDivisionError("inverse of zero")
        if self.k == 1:
            if self._inv_table is None:
                t = np.zeros(self.p, dtype=np.int64)
                for v in range(1, self.p):
                    t[v] = pow(v, self.p - 2, self.p)
                self._inv_table = t
            return self._inv_table[a]
        flat = a.reshape(-1)
        out = np.array([self.inv(int(v)) for v in flat], dtype=np.int64)
        return out.reshape(a.shape)

    def vmatmul(self, A, B):
        """Matrix product of packed matrices."""
        A = np.asarray(A, dtype=np.int64)
        B = np.asarray(B, dtype=np.int64)
        if self.k == 1:
            return (A @ B) % self.p
        da, db = self.vunpack(A), self.vunpack(B)
        k = self.k
        conv = np.zeros((A.shape[0], B.shape[1], 2 * k - 1), dtype=np.int64)
        for i in range(k):
            for j in range(k):
                conv[..., i + j] += da[..., i] @ db[..., j]
                conv[..., i + j] %= self.p
        low = conv[..., :k].copy()
        low += conv[..., k:] @ self._red
        return self.vpack(low)

    # -- embeddings ------------------------------------------------------------

    def embed_map(self, target):
        """Packed-int lookup maps self -> target along the fixed embedding.

        Returns a function on packed ints.  The generator of self maps to
        the root of self's modulus in target with the smallest packed
        encoding.  Requires self.k | target.k and equal characteristic.
        """
        if target.p != self.p:
            raise FieldError("characteristic mismatch")
        if target.k % self.k != 0:
            raise FieldError(f"no embedding GF({self.p}^{self.k}) -> GF({target.p}^{target.k})")
        if self.k == 1:
            return lambda v: int(v)
        if self.q > 5 ** 6:
            raise FieldError("embedding root search capped at source size 5^6")
        root = None
        for cand in range(target.q):
            if _eval_poly_packed(self.modulus, cand, target) == 0:
                root = cand
                break
        if root is None:
            raise FieldError("modulus has no root in target (internal error)")
        table = {}

        def emb(v):
            v = int(v)
            if v in table:
                return table[v]
            digits = self.unpack(v)
            acc, xp = 0, 1
            for d in digits:
                acc = target.add(acc, target.mul(int(d), xp))
                xp = target.mul(xp, root)
            table[v] = acc
            return acc

        return emb

    def artin_schreier_root(self):
        """The designated z in GF(p^p)-self with z^p - z = 1; requires k == p.

        Solves the F_p-linear system (Frob - I) z = 1 in the digit basis and
        picks the solution with the smallest packed encoding.
        """
        if self.k != self.p:
            raise FieldError("Artin-Schreier section lives in GF(p^p)")
        F = self.frobenius_matrix()
        A = (F - np.eye(self.k, dtype=np.int64)) % self.p
        rhs = np.zeros(self.k, dtype=np.int64)
        rhs[0] = 1
        sol = _solve_mod_p(A, rhs, self.p)
        if sol is None:
            raise FieldError("X^p - X - 1 unexpectedly split (internal error)")
        base = self.pack(sol)
        # solution set = base + F_p; smallest packed encoding wins
        cands = [self.add(base, c) for c in range(self.p)]
        return min(cands)

    # -- misc -----------------------------------------------------------------

    def describe(self):
        return {"p": self.p, "k": self.k, "modulus": [int(c) for c in self.modulus]}

    def __repr__(self):
        return f"GF({self.p}^{self.k})" if self.k > 1 else f"GF({self.p})"

    def __eq__(self, other):
        return isinstance(other, Field) and (self.p, self.k, self.modulus) == (
            other.p, other.k, other.modulus)

    def __hash__(self):
        return hash((self.p, self.k, self.modulus))


def _unpack_int(value, p, k):
    digits = []
    for _ in range(k):
        digits.append(value % p)
        value //= p
    return tuple(digits)


def _eval_poly_packed(coeffs, x, field):
    acc = 0
    for c in reversed(coeffs):
        acc = field.add(field.mul(acc, x), int(c) % field.p)
    return acc


def _solve_mod_p(A, b, p):
    """One solution of A x = b over F_p, or None."""
    A = np.asarray(A, dtype=np.int64) % p
    b = np.asarray(b, dtype=np.int64) % p
    m, n = A.shape
    M = np.concatenate([A, b.reshape(-1, 1)], axis=1)
    row = 0
    piv_cols = []
    for col in range(n):
        pivots = np.nonzero(M[row:, col])[0]
        if len(pivots) == 0:
            continue
        r = row + pivots[0]
        M[[row, r]] = M[[r, row]]
        M[row] = (M[row] * pow(int(M[row, col]), p - 2, p)) % p
        mask = np.nonzero(M[:, col])[0]
        for rr in mask:
            if rr != row:
                M[rr] = (M[rr] - M[rr, col] * M[row]) % p
        piv_cols.append(col)
        row += 1
        if row == m:
            break
    # consistency
    for rr in range(row, m):
        if M[rr, :n].max(initial=0) == 0 and M[rr, n] != 0:
            return None
    x = np.zeros(n, dtype=np.int64)
    for i, col in enumerate(piv_cols):
        x[col] = M[i, n]
    return x


# ---------------------------------------------------------------------------
# spec-level operations
# ---------------------------------------------------------------------------

def artin_schreier_xi(a, p):
    """xi(a) in GF(p^p) with xi(a)^p - xi(a) = a, F_p-linear in a.

    `a` must lie in the prime field (an int mod p).  xi(1) is the designated
    root of X^p - X - 1 and xi(a) = a * xi(1).
    """
    a = int(a)
    if not 0 <= a < p:
        raise FieldError("argument must be a prime-field residue")
    big = make_field(p, p)
    if a == 0:
        return 0
    return big.mul(a % p, big.artin_schreier_root())


def scalar_to_digits(field, value):
    """Serialize a packed scalar as its length-k digit list."""
    return [int(d) for d in field.unpack(value)]


def scalar_from_digits(field, digits):
    if len(digits) != field.k:
        raise FieldError("digit vector length mismatch")
    if any(not 0 <= d < field.p for d in digits):
        raise FieldError("digit out of range")
    return field.pack(digits)
