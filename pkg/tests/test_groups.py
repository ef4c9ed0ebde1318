import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from groupbias import (
    AbelianVectorGroup,
    CyclicGroup,
    DihedralGroup,
    DirectProductGroup,
    QuotientGroup,
    StructuralError,
    SubgroupGroup,
    SymmetricGroup,
    UnitriangularGroup,
    derived_series,
    elementary_abelian_structure,
    parse_group,
    subgroup_closure,
)

DESCRIPTORS = [
    ("cyclic:6", 6),
    ("vec:2:3", 8),
    ("vec:6:2", 36),
    ("sym:3", 6),
    ("sym:4", 24),
    ("dihedral:4", 8),
    ("ut:2:3", 8),
    ("ut:3:3", 27),
    ("prod(cyclic:2,sym:3)", 12),
]


@pytest.mark.parametrize("desc,order", DESCRIPTORS)
def test_parse_and_order(desc, order):
    G = parse_group(desc)
    assert G.order == order
    assert parse_group(G.descriptor).order == order


@pytest.mark.parametrize("bad", ["cyclic", "vec:2", "frob:20", "cyclic:x", "prod(,cyclic:2)"])
def test_parse_rejects(bad):
    with pytest.raises(StructuralError):
        parse_group(bad)


@pytest.mark.parametrize("desc,_", DESCRIPTORS)
def test_identity_and_inverses(desc, _):
    G = parse_group(desc)
    xs = np.arange(G.order, dtype=np.int64)
    assert np.array_equal(G.mul_vec(0, xs), xs)
    assert np.array_equal(G.mul_vec(xs, 0), xs)
    inv = G.inv_vec(xs)
    assert np.all(G.mul_vec(xs, inv) == 0)
    assert np.all(G.mul_vec(inv, xs) == 0)
    assert G.inv(0) == 0


@pytest.mark.parametrize("desc,_", DESCRIPTORS)
def test_table_is_latin_square(desc, _):
    G = parse_group(desc)
    T = G.table()
    full = np.arange(G.order)
    for i in range(G.order):
        assert np.array_equal(np.sort(T[i]), full)
        assert np.array_equal(np.sort(T[:, i]), full)


@settings(max_examples=60, deadline=None)
@given(
    di=st.integers(0, len(DESCRIPTORS) - 1),
    data=st.data(),
)
def test_group_laws(di, data):
    G = parse_group(DESCRIPTORS[di][0])
    idx = st.integers(0, G.order - 1)
    a, b, c = data.draw(idx), data.draw(idx), data.draw(idx)
    assert G.mul(G.mul(a, b), c) == G.mul(a, G.mul(b, c))
    assert G.mul(a, G.inv(a)) == 0
    assert G.inv(G.inv(a)) == a
    # anti-homomorphism of inversion
    assert G.inv(G.mul(a, b)) == G.mul(G.inv(b), G.inv(a))


@settings(max_examples=40, deadline=None)
@given(
    di=st.integers(0, len(DESCRIPTORS) - 1),
    e=st.integers(-6, 40),
    data=st.data(),
)
def test_pow_matches_iteration(di, e, data):
    G = parse_group(DESCRIPTORS[di][0])
    g = data.draw(st.integers(0, G.order - 1))
    acc = 0
    for _ in range(e % _order_of(G, g) if e >= 0 else 0):
        acc = G.mul(acc, g)
    if e >= 0:
        assert G.pow(g, e) == acc
    else:
        assert G.pow(g, e) == G.inv(G.pow(g, -e))


def _order_of(G, g):
    t, x = 1, g
    while x != 0:
        x = G.mul(x, g)
        t += 1
    return t


def test_power_matrix_rows():
    G = parse_group("sym:4")
    P = G.power_matrix()
    assert P.shape == (G.order, G.order)
    assert np.all(P[0] == 0)
    assert np.array_equal(P[1], np.arange(G.order))
    xs = np.arange(G.order, dtype=np.int64)
    assert np.array_equal(P[5], G.pow_vec(xs, 5))


def test_composition_convention():
    # (f*g)(x) = f(g(x)): conjugating index maps match permutation action
    G = SymmetricGroup(3)
    perms = {i: _perm_of(G, i) for i in range(6)}
    for a in range(6):
        for b in range(6):
            c = G.mul(a, b)
            assert perms[c] == tuple(perms[a][perms[b][x]] for x in range(3))


def _perm_of(G, i):
    # one-line notation str(tuple(...)), e.g. "(1, 0, 2)"
    body = G.element_name(i).strip("()")
    return tuple(int(t) for t in body.split(","))


def test_abelian_flags():
    assert parse_group("vec:6:2").is_abelian()
    assert parse_group("cyclic:12").is_abelian()
    assert not parse_group("sym:3").is_abelian()
    assert not parse_group("dihedral:4").is_abelian()
    assert not parse_group("ut:3:3").is_abelian()


def test_vector_group_codec():
    G = AbelianVectorGroup(6, 3)
    idx = np.arange(G.order, dtype=np.int64)
    digits = G.decode(idx)
    assert digits.shape == (216, 3)
    assert np.array_equal(G.encode(digits), idx)
    s = G.mul_vec(idx[:50], idx[100:150])
    assert np.array_equal(G.decode(s), (digits[:50] + digits[100:150]) % 6)


def test_product_group_codec():
    A, B = CyclicGroup(4), SymmetricGroup(3)
    P = DirectProductGroup([A, B])
    assert P.order == 24
    idx = np.arange(24, dtype=np.int64)
    pa, pb = P.decode(idx)
    assert np.array_equal(P.encode([pa, pb]), idx)
    i = P.encode([np.int64(3), np.int64(5)])
    j = P.encode([np.int64(2), np.int64(1)])
    k = P.mul(int(i), int(j))
    ka, kb = P.decode(np.array([k]))
    assert ka[0] == A.mul(3, 2) and kb[0] == B.mul(5, 1)


def test_element_wrapper():
    G = DihedralGroup(5)
    g = G.element(3)
    assert (g * g.inverse()).index == 0
    assert (g ** 4).index == G.pow(3, 4)
    h = SymmetricGroup(3).element(1)
    with pytest.raises(StructuralError):
        g * h


def test_subgroup_closure_cyclic():
    G = CyclicGroup(12)
    H = subgroup_closure(G, [4])
    assert np.array_equal(H, np.array([0, 4, 8]))


def test_derived_series_sym4():
    G = SymmetricGroup(4)
    chain = derived_series(G)
    assert chain.solvable
    assert chain.length == 3
    sizes = [len(level) for level in chain.chain]
    assert sizes == [24, 12, 4, 1]


def test_derived_series_sym5_not_solvable():
    chain = derived_series(SymmetricGroup(5))
    assert not chain.solvable
    assert len(chain.chain[-1]) == 60


@pytest.mark.parametrize("desc,ell", [
    ("cyclic:7", 1), ("vec:3:2", 1), ("dihedral:4", 2), ("ut:2:3", 2),
    ("ut:3:3", 2), ("prod(cyclic:2,cyclic:3)", 1),
])
def test_derived_series_lengths(desc, ell):
    chain = derived_series(parse_group(desc))
    assert chain.solvable
    assert chain.length == ell


def test_subgroup_and_quotient_laws():
    G = SymmetricGroup(4)
    chain = derived_series(G)
    a4 = chain.chain[1]
    H = SubgroupGroup(G, a4)
    assert H.order == 12
    hs = np.arange(12, dtype=np.int64)
    prods = H.mul_vec(hs[:, None], hs[None, :])
    # closure inside the ambient group
    assert np.all(H.elements[prods] == G.mul_vec(a4[:, None], a4[None, :]))
    Q = QuotientGroup(G, a4)
    assert Q.order == 2
    xs = np.random.default_rng(0).integers(0, 24, size=40)
    ys = np.random.default_rng(1).integers(0, 24, size=40)
    lhs = Q.coset_of[G.mul_vec(xs, ys)]
    rhs = Q.mul_vec(Q.coset_of[xs], Q.coset_of[ys])
    assert np.array_equal(lhs, rhs)


def test_quotient_needs_normal_subgroup():
    G = SymmetricGroup(3)
    H = subgroup_closure(G, [_transposition_index(G)])
    assert len(H) == 2
    with pytest.raises(StructuralError):
        QuotientGroup(G, H)


def _transposition_index(G):
    for i in range(1, G.order):
        if G.mul(i, i) == 0:
            return i
    raise AssertionError


def test_elementary_abelian_structure():
    p, t, basis = elementary_abelian_structure(parse_group("vec:2:3"))
    assert (p, t) == (2, 3) and len(basis) == 3
    p, t, basis = elementary_abelian_structure(parse_group("vec:5:2"))
    assert (p, t) == (5, 2)
    assert elementary_abelian_structure(parse_group("cyclic:4")) is None
    assert elementary_abelian_structure(parse_group("cyclic:6")) is None
    assert elementary_abelian_structure(parse_group("sym:3")) is None
    # V4 inside sym:4 via the derived chain, seen as its own group
    G = SymmetricGroup(4)
    v4 = derived_series(G).chain[2]
    H = SubgroupGroup(G, v4)
    p, t, basis = elementary_abelian_structure(H)
    assert (p, t) == (2, 2)
