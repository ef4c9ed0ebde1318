"""Small prime-power fields F_q with table-based arithmetic.

Field elements are integers 0..q-1 encoding polynomial coefficient vectors
over F_p in base p, constant term least significant. Modulus polynomials are
found by deterministic ascending search (the lexicographically smallest monic
irreducible of the right degree), so every run of every build agrees on the
representation. Multiplication goes through discrete log tables, which is
comfortable at the configured field-size cap.
"""

from __future__ import annotations

import numpy as np
import sympy

from .errors import ResourceError, StructuralError
from .limits import cap

_POLY_MEMO: dict = {}


def _poly_trim(a):
    while len(a) > 1 and a[-1] == 0:
        a.pop()
    return a


def _poly_mulmod(a, b, f, p):
    """Product of little-endian coefficient lists, reduced mod (f, p); f monic."""
    res = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                res[i + j] = (res[i + j] + ai * bj) % p
    e = len(f) - 1
    for i in range(len(res) - 1, e - 1, -1):
        c = res[i]
        if c:
            for j in range(e + 1):
                res[i - e + j] = (res[i - e + j] - c * f[j]) % p
    return _poly_trim(res[: max(e, 1)] + [0] * max(0, e - len(res)))


def _poly_powmod(base, exp, f, p):
    acc, cur = [1], list(base)
    while exp:
        if exp & 1:
            acc = _poly_mulmod(acc, cur, f, p)
        cur = _poly_mulmod(cur, cur, f, p)
        exp >>= 1
    return acc


def _poly_gcd(a, b, p):
    a, b = list(a), list(b)
    while _poly_trim(list(b)) != [0]:
        # a mod b
        b = _poly_trim(b)
        inv_lead = pow(b[-1], -1, p)
        r = list(a)
        while len(_poly_trim(list(r))) >= len(b) and _poly_trim(list(r)) != [0]:
            r = _poly_trim(r)
            if len(r) < len(b):
                break
            c = (r[-1] * inv_lead) % p
            shift = len(r) - len(b)
            for j in range(len(b)):
                r[shift + j] = (r[shift + j] - c * b[j]) % p
            r = _poly_trim(r)
        a, b = b, r
    return _poly_trim(a)


def _poly_sub(a, b, p):
    n = max(len(a), len(b))
    a = list(a) + [0] * (n - len(a))
    b = list(b) + [0] * (n - len(b))
    return _poly_trim([(x - y) % p for x, y in zip(a, b)])


def _is_irreducible(f, p):
    """Rabin test: x^(p^e) == x mod f, and gcd(x^(p^(e/l)) - x, f) = 1 for prime l | e."""
    e = len(f) - 1
    x = [0, 1]
    xq = _poly_powmod(x, p**e, f, p)
    if _poly_sub(xq, x, p) != [0]:
        return False
    for ell in sympy.primefactors(e):
        xpk = _poly_powmod(x, p ** (e // ell), f, p)
        g = _poly_gcd(f, _poly_sub(xpk, x, p), p)
        if len(g) > 1:
            return False
    return True


def modulus_polynomial(p: int, e: int):
    """Lexicographically smallest monic irreducible of degree e over F_p."""
    if (p, e) in _POLY_MEMO:
        return _POLY_MEMO[(p, e)]
    if e == 1:
        poly = (0, 1)  # x itself; F_p needs no extension
    else:
        poly = None
        for k in range(p**e):
            coeffs, rem = [], k
            for _ in range(e):
                coeffs.append(rem % p)
                rem //= p
            f = coeffs + [1]
            if _is_irreducible(f, p):
                poly = tuple(f)
                break
        assert poly is not None, "no irreducible polynomial found (impossible)"
    _POLY_MEMO[(p, e)] = poly
    return poly


class PrimePowerField:
    """F_q for q = p^e, with log/antilog and trace tables."""

    def __init__(self, p: int, e: int):
        if not sympy.isprime(p):
            raise StructuralError(f"field characteristic {p} is not prime")
        if e < 1:
            raise StructuralError(f"field exponent must be >= 1, got {e}")
        q = p**e
        if q > cap("FIELD_SIZE_CAP"):
            raise ResourceError(
                f"field size {q} exceeds cap {cap('FIELD_SIZE_CAP')} "
                "(override with GROUPBIAS_FIELD_SIZE_CAP)"
            )
        self.p, self.e, self.q = p, e, q
        self.modulus = modulus_polynomial(p, e)
        # coefficient matrix: row z = base-p digits of z, constant term first
        digits = np.empty((q, e), dtype=np.int64)
        rem = np.arange(q, dtype=np.int64)
        for i in range(e):
            digits[:, i] = rem % p
            rem //= p
        self._digits = digits
        self._weights = p ** np.arange(e, dtype=np.int64)
        self._build_log_tables()
        self._build_trace_table()

    def _mul_scalar(self, a: int, b: int) -> int:
        pa = [int(x) for x in self._digits[a]]
        pb = [int(x) for x in self._digits[b]]
        prod = _poly_mulmod(pa, pb, list(self.modulus), self.p)
        prod = prod + [0] * (self.e - len(prod))
        return int(sum(c * w for c, w in zip(prod, self._weights)))

    def _build_log_tables(self):
        q = self.q
        self.log = np.full(q, -1, dtype=np.int64)
        self.alog = np.empty(q - 1, dtype=np.int64)
        for g in range(2, q) if q > 2 else [1]:
            cur, ok = 1, True
            powers = [1]
            for _ in range(q - 2):
                cur = self._mul_scalar(cur, g)
                if cur == 1:
                    ok = False
                    break
                powers.append(cur)
            if ok:
                self.generator = g
                for i, z in enumerate(powers):
                    self.alog[i] = z
                    self.log[z] = i
                return
        raise AssertionError("no multiplicative generator found (impossible)")

    def _build_trace_table(self):
        """trace(z) = sum of Frobenius images z^(p^j), landing in F_p."""
        q, p, e = self.q, self.p, self.e
        trace = np.zeros(q, dtype=np.int64)
        nz = np.arange(1, q, dtype=np.int64)
        logs = self.log[nz]
        acc = np.zeros((q - 1, e), dtype=np.int64)
        for j in range(e):
            frob = self.alog[(logs * pow(p, j, q - 1)) % (q - 1)]
            acc = (acc + self._digits[frob]) % p
        vals = acc @ self._weights
        assert np.all(vals < p), "trace left the prime subfield"
        trace[nz] = vals
        self.trace_table = trace

    def mul_vec(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        a, b = np.broadcast_arrays(a, b)
        out = np.zeros(a.shape, dtype=np.int64)
        nz = (a != 0) & (b != 0)
        out[nz] = self.alog[(self.log[a[nz]] + self.log[b[nz]]) % (self.q - 1)]
        return out

    def pow_vec(self, a, k: int):
        """a^k elementwise for k >= 1 (0^k = 0); use ones for k = 0."""
        if k < 1:
            raise StructuralError("pow_vec needs k >= 1")
        a = np.asarray(a, dtype=np.int64)
        out = np.zeros(a.shape, dtype=np.int64)
        nz = a != 0
        out[nz] = self.alog[(self.log[a[nz]] * (k % (self.q - 1) or (self.q - 1))) % (self.q - 1)]
        return out

    def add_vec(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        return ((self._digits[a] + self._digits[b]) % self.p) @ self._weights
