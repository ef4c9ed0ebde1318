import numpy as np
import pytest
import sympy
from sympy import GF, Poly

from groupbias import PrimePowerField, ResourceError, StructuralError

CASES = [(2, 2), (2, 3), (2, 5), (3, 2), (3, 3), (5, 2), (7, 2)]


def _sympy_poly(field, idx):
    digits = []
    x = int(idx)
    for _ in range(field.e):
        digits.append(x % field.p)
        x //= field.p
    # digits are little-endian; sympy wants leading coefficient first
    return Poly(list(reversed(digits)), sympy.Symbol("t"), domain=GF(field.p))


def _idx_of(field, poly):
    coeffs = [int(c) % field.p for c in poly.all_coeffs()]
    idx = 0
    for c in coeffs:
        idx = idx * field.p + c
    return idx


@pytest.mark.parametrize("p,e", CASES)
def test_modulus_is_monic_irreducible(p, e):
    F = PrimePowerField(p, e)
    # modulus is little-endian and includes the leading 1
    coeffs = [int(c) % p for c in reversed(F.modulus)]
    poly = Poly(coeffs, sympy.Symbol("t"), domain=GF(p))
    assert poly.degree() == e
    assert poly.is_irreducible
    # deterministic: a fresh instance picks the identical modulus
    assert PrimePowerField(p, e).modulus == F.modulus


@pytest.mark.parametrize("p,e", [(2, 3), (3, 2), (5, 2)])
def test_mul_matches_polynomial_arithmetic(p, e):
    F = PrimePowerField(p, e)
    q = F.q
    a = np.arange(q, dtype=np.int64)
    prod = F.mul_vec(a[:, None], a[None, :])
    modulus = Poly([int(c) % p for c in reversed(F.modulus)],
                   sympy.Symbol("t"), domain=GF(p))
    for i in range(q):
        pi = _sympy_poly(F, i)
        for j in range(q):
            expect = _idx_of(F, (pi * _sympy_poly(F, j)) % modulus)
            assert prod[i, j] == expect


@pytest.mark.parametrize("p,e", CASES)
def test_field_axioms_exhaustive(p, e):
    F = PrimePowerField(p, e)
    q = F.q
    a = np.arange(q, dtype=np.int64)
    add = F.add_vec(a[:, None], a[None, :])
    mul = F.mul_vec(a[:, None], a[None, :])
    assert np.array_equal(mul, mul.T)
    assert np.array_equal(add, add.T)
    assert np.array_equal(mul[1], a)
    assert np.all(mul[0] == 0)
    # distributivity on a full triple grid, vectorized
    i = a[:, None, None]
    j = a[None, :, None]
    k = a[None, None, :]
    assert np.array_equal(F.mul_vec(i, F.add_vec(j, k)),
                          F.add_vec(F.mul_vec(i, j), F.mul_vec(i, k)))
    # every nonzero element is invertible
    assert np.all(np.sort(mul[1:], axis=1)[:, 1:] >= 1)
    assert np.all((mul[1:] == 1).sum(axis=1) == 1)


@pytest.mark.parametrize("p,e", CASES)
def test_pow_and_generator(p, e):
    F = PrimePowerField(p, e)
    q = F.q
    a = np.arange(1, q, dtype=np.int64)
    powed = a.copy()
    for k in range(2, q):
        powed = F.mul_vec(powed, a)
        assert np.array_equal(F.pow_vec(a, k), powed)
    assert np.all(F.pow_vec(a, q - 1) == 1)
    # generator hits every nonzero element exactly once
    orbit = np.array([int(F.pow_vec(np.int64(F.generator), k)) for k in range(1, q)])
    assert np.array_equal(np.sort(orbit), a)
    assert np.array_equal(F.alog[F.log[a]], a)


@pytest.mark.parametrize("p,e", CASES)
def test_trace_properties(p, e):
    F = PrimePowerField(p, e)
    q = F.q
    a = np.arange(q, dtype=np.int64)
    tr = F.trace_table
    assert tr.shape == (q,)
    assert tr[0] == 0
    # additive and Frobenius-invariant
    assert np.array_equal(tr[F.add_vec(a[:, None], a[None, :])],
                          (tr[:, None] + tr[None, :]) % p)
    assert np.array_equal(tr[F.pow_vec(a, p)], tr)
    # balanced fibers: each value of Z_p hit q/p times
    assert np.array_equal(np.bincount(tr, minlength=p),
                          np.full(p, q // p))


def test_prime_degree_one():
    F = PrimePowerField(11, 1)
    a = np.arange(11, dtype=np.int64)
    assert np.array_equal(F.mul_vec(a[:, None], a[None, :]), (a[:, None] * a[None, :]) % 11)
    assert np.array_equal(F.add_vec(a, 5), (a + 5) % 11)


def test_field_validation():
    with pytest.raises(StructuralError):
        PrimePowerField(6, 2)
    with pytest.raises(StructuralError):
        PrimePowerField(2, 0)
    with pytest.raises(ResourceError):
        PrimePowerField(2, 11)
