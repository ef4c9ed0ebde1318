import numpy as np
import pytest

from groupbias import (
    AbelianVectorGroup,
    BiasedSet,
    ResourceError,
    SearchBudgetError,
    StructuralError,
    aghp_construct,
    char_bias_exact,
    counted,
    crt_product,
    modulus_set,
    quotient_mod,
    random_biased_search,
)


def naive_char_bias(S):
    # independent oracle: loop characters one at a time, plain summation
    G = S.group
    m, n = G.modulus, G.dim
    vals, cnts = S.element_counts()
    D = G.decode(vals)
    w = cnts / cnts.sum()
    best = 0.0
    for k in range(1, m**n):
        kd = G.decode(np.array([k]))[0]
        phases = np.exp(2j * np.pi * (D @ kd % m) / m)
        best = max(best, abs(np.dot(w, phases)))
    return best


@pytest.mark.parametrize("m,n,k,seed", [
    (2, 6, 9, 0), (3, 4, 11, 1), (5, 3, 8, 2), (6, 3, 12, 3), (4, 3, 7, 4),
])
def test_char_bias_matches_naive(m, n, k, seed):
    G = AbelianVectorGroup(m, n)
    rng = np.random.default_rng(seed)
    vals = rng.integers(0, G.order, size=k, dtype=np.int64)
    S = BiasedSet(group=G, values=vals, claimed_bias=1.0, claim_kind="reference")
    assert char_bias_exact(S) == pytest.approx(naive_char_bias(S), abs=1e-12)


def test_char_bias_witness_and_extremes():
    G = AbelianVectorGroup(3, 3)
    full = BiasedSet(group=G, values=np.arange(27), claimed_bias=0.0)
    assert char_bias_exact(full) == pytest.approx(0.0, abs=1e-12)
    point = BiasedSet(group=G, values=np.array([5]), claimed_bias=1.0,
                      claim_kind="reference")
    bias, k = char_bias_exact(point, return_witness=True)
    assert bias == pytest.approx(1.0, abs=1e-12)
    assert 1 <= k < 27


def test_char_bias_counted_weighting():
    G = AbelianVectorGroup(2, 4)
    S = counted(G, [0, 3, 9], [2, 1, 1], claimed_bias=1.0, claim_kind="reference")
    assert char_bias_exact(S) == pytest.approx(naive_char_bias(S), abs=1e-12)


def test_char_enum_cap(monkeypatch):
    monkeypatch.setenv("GROUPBIAS_CHAR_ENUM_CAP", "10")
    G = AbelianVectorGroup(2, 4)
    S = BiasedSet(group=G, values=np.array([1]), claimed_bias=1.0,
                  claim_kind="reference")
    with pytest.raises(ResourceError):
        char_bias_exact(S)


@pytest.mark.parametrize("p,n,q", [(2, 5, 8), (2, 10, 32), (3, 4, 9), (5, 3, 25)])
def test_aghp_bound_holds(p, n, q):
    S = aghp_construct(p, n, q=q)
    assert S.size == q * q
    assert S.claimed_bias == pytest.approx((n - 1) / q)
    exact = char_bias_exact(S)
    assert exact <= S.claimed_bias + 1e-12


def test_aghp_delta_picks_field():
    # field sized so that n/q <= delta, giving claimed (n-1)/q < delta
    S = aghp_construct(2, 10, delta=0.3)
    assert S.provenance[0]["q"] == 64
    assert S.claimed_bias <= 0.3
    T = aghp_construct(3, 4, delta=0.5)
    assert T.provenance[0]["q"] == 9
    with pytest.raises(StructuralError):
        aghp_construct(4, 3, delta=0.1)
    with pytest.raises(StructuralError):
        aghp_construct(2, 3, q=24)
    with pytest.raises(StructuralError):
        aghp_construct(2, 3)


def test_crt_product_exact_bias():
    A = aghp_construct(2, 3, q=8)
    B = aghp_construct(3, 3, q=9)
    P = crt_product(A, B)
    assert P.group.descriptor == "vec:6:3"
    assert P.size == A.size * B.size
    ea, eb = char_bias_exact(A), char_bias_exact(B)
    # characters of the product split, so the exact bias is the max
    assert char_bias_exact(P) == pytest.approx(max(ea, eb), abs=1e-10)
    assert P.claimed_bias == pytest.approx(max(A.best_bias, B.best_bias))


def test_crt_product_validation():
    A = aghp_construct(2, 3, q=8)
    B = aghp_construct(2, 3, q=8)
    with pytest.raises(StructuralError):
        crt_product(A, B)
    C = aghp_construct(3, 2, q=9)
    with pytest.raises(StructuralError):
        crt_product(A, C)


def test_quotient_mod_structure_and_bias():
    A = aghp_construct(2, 3, q=8)
    B = aghp_construct(3, 3, q=9)
    P = crt_product(A, B)
    Q = quotient_mod(P, 3)
    assert Q.group.descriptor == "vec:3:3"
    assert Q.size == P.size
    # projection maps each element digitwise
    pd = P.group.decode(P.expanded()) % 3
    qd = Q.group.decode(Q.expanded())
    assert np.array_equal(np.sort(Q.group.encode(pd)), np.sort(Q.group.encode(qd)))
    assert char_bias_exact(Q) <= char_bias_exact(P) + 1e-12
    with pytest.raises(StructuralError):
        quotient_mod(P, 4)


def test_quotient_mod_full_modulus_is_identity():
    A = aghp_construct(5, 2, q=5)
    Q = quotient_mod(A, 5)
    va, ca = A.element_counts()
    vb, cb = Q.element_counts()
    assert np.array_equal(va, vb) and np.array_equal(ca, cb)


def test_random_search_deterministic():
    S1 = random_biased_search(2, 6, 0.5, seed=11)
    S2 = random_biased_search(2, 6, 0.5, seed=11)
    assert np.array_equal(S1.values, S2.values)
    assert S1.certified_bias == S2.certified_bias
    assert S1.certified_bias <= 0.5
    assert S1.certified_method == "character-enumeration"


def test_random_search_budget_error():
    with pytest.raises(SearchBudgetError) as ei:
        random_biased_search(2, 8, 0.01, budget=2, seed=0, size=4)
    best = ei.value.best
    assert best is not None
    assert best.certified_bias > 0.01


@pytest.mark.parametrize("m,n,delta", [(6, 2, 0.4), (4, 2, 0.45), (12, 2, 0.5), (7, 2, 0.3)])
def test_modulus_set_meets_target(m, n, delta):
    S = modulus_set(m, n, delta, seed=3)
    assert S.group.descriptor == f"vec:{m}:{n}"
    assert char_bias_exact(S) <= delta + 1e-9
    assert S.best_bias <= delta + 1e-12
