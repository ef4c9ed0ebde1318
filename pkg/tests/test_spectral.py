import numpy as np
import pytest

from groupbias import (
    AbelianVectorGroup,
    BiasedSet,
    CertificationError,
    CyclicGroup,
    ResourceError,
    StructuralError,
    SymmetricGroup,
    alon_roichman_sample,
    bias_from_cayley_file,
    bias_spectral,
    certify_set,
    char_bias_exact,
    counted,
    export_cayley,
    lemma3_projection_norm,
    mz_readonce_check,
    mz_set,
    parse_group,
    walk_matrix,
)
from conftest import random_multiset, whole_group_set


def test_whole_group_is_unbiased():
    for desc in ("cyclic:9", "sym:4", "dihedral:6"):
        G = parse_group(desc)
        assert bias_spectral(G, whole_group_set(G)) == pytest.approx(0.0, abs=1e-12)


def test_singleton_has_full_bias():
    G = CyclicGroup(5)
    S = BiasedSet(group=G, values=np.array([2]), claimed_bias=1.0,
                  claim_kind="reference")
    assert bias_spectral(G, S) == pytest.approx(1.0, abs=1e-12)


def test_walk_matrix_shape_and_stochasticity():
    G = SymmetricGroup(3)
    S = random_multiset(G, 7, seed=5)
    M = walk_matrix(G, S)
    assert M.shape == (6, 6)
    assert np.allclose(M.sum(axis=1), 1.0)
    assert np.all(M >= 0)
    with pytest.raises(StructuralError):
        walk_matrix(CyclicGroup(6), S)


@pytest.mark.parametrize("desc,k,seed", [
    ("vec:2:5", 9, 0), ("vec:3:3", 12, 1), ("cyclic:30", 8, 2), ("vec:6:2", 10, 3),
])
def test_spectral_agrees_with_characters(desc, k, seed):
    G = parse_group(desc)
    S = random_multiset(G, k, seed)
    assert bias_spectral(G, S) == pytest.approx(char_bias_exact(S), abs=1e-10)


def test_sym3_against_explicit_irreps():
    # permutation rep = trivial + standard; sign completes the list
    G = SymmetricGroup(3)
    perms = [tuple(int(t) for t in G.element_name(i).strip("()").split(","))
             for i in range(6)]
    for seed in range(4):
        S = random_multiset(G, 6, seed=100 + seed)
        vals, cnts = S.element_counts()
        w = cnts / cnts.sum()
        A = np.zeros((3, 3))
        sign_mean = 0.0
        for v, wt in zip(vals, w):
            P = np.zeros((3, 3))
            for x in range(3):
                P[perms[v][x], x] = 1.0
            A += wt * P
            sign_mean += wt * _sign(perms[v])
        Q = np.eye(3) - np.ones((3, 3)) / 3.0
        std = np.linalg.svd(Q @ A @ Q, compute_uv=False)[0]
        expect = max(std, abs(sign_mean))
        assert bias_spectral(G, S) == pytest.approx(expect, abs=1e-10)


def _sign(perm):
    s, seen = 1, set()
    for start in range(len(perm)):
        if start in seen:
            continue
        length, x = 0, start
        while x not in seen:
            seen.add(x)
            x = perm[x]
            length += 1
        if length % 2 == 0:
            s = -s
    return s


def test_symmetrized_never_larger():
    G = parse_group("dihedral:7")
    for seed in range(5):
        S = random_multiset(G, 5, seed=seed)
        sing = bias_spectral(G, S, mode="singular")
        symm = bias_spectral(G, S, mode="symmetrized")
        assert symm <= sing + 1e-12


def test_symmetric_multiset_modes_agree():
    G = CyclicGroup(11)
    S = counted(G, [2, 9], [1, 1], claimed_bias=1.0, claim_kind="reference")
    sing = bias_spectral(G, S, mode="singular")
    symm = bias_spectral(G, S, mode="symmetrized")
    assert sing == pytest.approx(symm, abs=1e-12)


def test_power_matches_dense():
    G = AbelianVectorGroup(3, 6)  # order 729
    S = random_multiset(G, 20, seed=9)
    d = bias_spectral(G, S, method="dense")
    p = bias_spectral(G, S, method="power")
    assert p == pytest.approx(d, abs=1e-6)
    ds = bias_spectral(G, S, mode="symmetrized", method="dense")
    ps = bias_spectral(G, S, mode="symmetrized", method="power")
    assert ps == pytest.approx(ds, abs=1e-6)


def test_dense_cap_enforced(monkeypatch):
    monkeypatch.setenv("GROUPBIAS_DENSE_VERIFY_CAP", "16")
    G = CyclicGroup(32)
    S = random_multiset(G, 6, seed=1)
    with pytest.raises(ResourceError):
        bias_spectral(G, S, method="dense")
    # auto falls back to the matrix-free path
    assert 0.0 <= bias_spectral(G, S) <= 1.0


def test_certify_set_enforces_bounds():
    G = CyclicGroup(64)
    S = random_multiset(G, 4, seed=2, claimed=0.01, kind="bound")
    with pytest.raises(CertificationError):
        certify_set(S)
    R = random_multiset(G, 4, seed=2, claimed=0.01, kind="reference")
    out = certify_set(R)
    assert out.certified_method == "dense-svd"
    assert out.certified_bias > 0.01


def test_certify_set_methods_label():
    G = AbelianVectorGroup(2, 6)
    S = random_multiset(G, 12, seed=4)
    a = certify_set(S, method="character")
    b = certify_set(S, method="dense")
    c = certify_set(S, method="power")
    assert a.certified_method == "character-enumeration"
    assert b.certified_method == "dense-svd"
    assert c.certified_method == "power-iteration"
    assert a.certified_bias == pytest.approx(b.certified_bias, abs=1e-9)
    assert c.certified_bias == pytest.approx(b.certified_bias, abs=1e-6)
    with pytest.raises(StructuralError):
        certify_set(S, method="oracle")


def _lemma3_brute(G):
    n = G.order
    M = np.zeros((n, n))
    rows = np.arange(n)
    for g in range(n):
        d, x, powers = 1, g, [0]
        while x != 0:
            powers.append(x)
            x = G.mul(x, g)
            d += 1
        # powers[1:] plus identity: d elements of <g>
        for h in powers[:d]:
            M[rows, G.mul_vec(np.int64(h), rows)] += 1.0 / (d * n)
    B = M - 1.0 / n
    return float(np.max(np.abs(np.linalg.eigvalsh((B + B.T) / 2))))


@pytest.mark.parametrize("desc", ["cyclic:6", "cyclic:12", "sym:3", "dihedral:4", "vec:2:3"])
def test_lemma3_matches_brute_force(desc):
    G = parse_group(desc)
    assert lemma3_projection_norm(G) == pytest.approx(_lemma3_brute(G), abs=1e-12)


def test_lemma3_totient_bound_cyclic():
    import sympy
    for m in (6, 8, 12, 30):
        G = CyclicGroup(m)
        bound = 1.0 - sympy.totient(m) / m
        assert lemma3_projection_norm(G) <= bound + 1e-12


def test_cayley_round_trip(tmp_path):
    G = parse_group("dihedral:5")
    S = random_multiset(G, 6, seed=8)
    path = tmp_path / "walk.edges"
    lines = export_cayley(G, S, str(path))
    assert lines == G.order * S.size
    assert bias_from_cayley_file(str(path)) == pytest.approx(
        bias_spectral(G, S), abs=1e-9)


def test_cayley_symmetrized_round_trip(tmp_path):
    G = parse_group("sym:3")
    S = random_multiset(G, 5, seed=3)
    path = tmp_path / "sym.edges"
    export_cayley(G, S, str(path), symmetrize=True)
    vals, cnts = S.element_counts()
    both = counted(G, np.concatenate([vals, G.inv_vec(vals)]),
                   np.concatenate([cnts, cnts]),
                   claimed_bias=1.0, claim_kind="reference")
    assert bias_from_cayley_file(str(path)) == pytest.approx(
        bias_spectral(G, both), abs=1e-9)


def test_cayley_file_rejects_tampering(tmp_path):
    G = CyclicGroup(8)
    S = random_multiset(G, 3, seed=1)
    path = tmp_path / "t.edges"
    export_cayley(G, S, str(path))
    text = path.read_text().splitlines()
    path.write_text("\n".join(text[:-1]) + "\n")
    with pytest.raises(StructuralError):
        bias_from_cayley_file(str(path))


def test_alon_roichman_sample_properties():
    G = parse_group("sym:4")
    S, measured = alon_roichman_sample(G, 40, seed=6)
    T, again = alon_roichman_sample(G, 40, seed=6)
    assert np.array_equal(S.values, T.values)
    assert measured == again
    assert S.size == 40
    assert S.certified_bias == pytest.approx(measured)
    assert S.claim_kind == "reference"


def test_mz_readonce_uniform_tuples():
    from groupbias import DirectProductGroup

    # the whole product group passes every mask exactly
    G = CyclicGroup(5)
    n = 2
    P = DirectProductGroup([G] * n)
    T = BiasedSet(group=P, values=np.arange(P.order), claimed_bias=0.0)
    assert mz_readonce_check(G, n, T) == pytest.approx(0.0, abs=1e-12)


def test_mz_tuples_meet_their_claim():
    # full exponent set: deviation is exactly the never-generates penalty
    # P[g^s = 0] - 1/m = (2m - 1)/m^2 - 1/m at the singleton masks
    G = CyclicGroup(5)
    E = AbelianVectorGroup(5, 2)
    S = BiasedSet(group=E, values=np.arange(E.order), claimed_bias=0.0)
    T = mz_set(G, 2, S)
    dev = mz_readonce_check(G, 2, T)
    assert dev == pytest.approx(9 / 25 - 1 / 5, abs=1e-12)
    assert dev <= T.claimed_bias + 1e-12
    assert T.claim_kind == "bound"


def test_mz_readonce_validates_shape():
    G = CyclicGroup(5)
    S = BiasedSet(group=AbelianVectorGroup(5, 2), values=np.arange(4),
                  claimed_bias=1.0, claim_kind="reference")
    T = mz_set(G, 2, S)
    with pytest.raises(StructuralError):
        mz_readonce_check(G, 3, T)
    with pytest.raises(StructuralError):
        mz_readonce_check(CyclicGroup(7), 2, T)
