"""Acceptance gate: twelve end-to-end criteria, one pass/fail line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines. Each
criterion states its own tolerance and wall-clock budget; the budgets are
generous on purpose so only a real regression trips them.
"""

import math
import time

import numpy as np
from sympy import totient

from groupbias.abelian import aghp_construct, char_bias_exact, crt_product
from groupbias.constructions import (amplify_step, claim6_bound, dup,
                                     direct_product_set, mz_set,
                                     plan_amplification, solvable_set,
                                     tensor_combine)
from groupbias.expanders import (certify_lambda, lps_graph,
                                 random_regular_bipartite)
from groupbias.groups import parse_group
from groupbias.harness import (operator_product_tail, rayleigh_operator_check,
                               rayleigh_vector_check)
from groupbias.sets import BiasedSet, counted
from groupbias.spectral import (alon_roichman_sample, bias_spectral,
                                certify_set, lemma3_projection_norm,
                                mz_readonce_check)


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


def _whole_group(G):
    return BiasedSet(group=G, values=np.arange(G.order, dtype=np.int64),
                     claimed_bias=0.0, claim_kind="bound")


def test_criterion_01_powering_soundness():
    t0 = time.perf_counter()
    S = aghp_construct(2, 10, q=32)
    bias = char_bias_exact(S)
    dt = time.perf_counter() - t0
    ok = (S.group.order == 1024 and S.claimed_bias == 9 / 32
          and bias <= 9 / 32 and dt < 5)
    _report(1, ok, f"exact bias {bias:.6g} <= 9/32 = 0.28125 over "
                   f"{S.group.order - 1} nontrivial characters ({dt:.1f}s)")


def test_criterion_02_ramanujan_certification():
    t0 = time.perf_counter()
    g = lps_graph(13, 5, certify="none")
    certify_lambda(g, method="power")
    dt = time.perf_counter() - t0
    bound = 2 * math.sqrt(5) / 6
    ok = (2 * g.side == 2184 and g.degree == 6
          and g.certified_lambda <= bound + 1e-6 and dt < 60)
    _report(2, ok, f"2184-vertex 6-regular, power-certified lambda "
                   f"{g.certified_lambda:.6f} <= {bound:.6f} + 1e-6 ({dt:.1f}s)")


def test_criterion_03_projection_norm_bound():
    t0 = time.perf_counter()
    worst_gap = math.inf
    for desc in ("cyclic:6", "sym:3", "dihedral:4", "cyclic:8", "sym:4",
                 "prod(cyclic:2,sym:3)"):
        G = parse_group(desc)
        norm = lemma3_projection_norm(G)
        bound = 1 - int(totient(G.order)) / G.order
        if norm > bound + 1e-9:
            _report(3, False, f"{desc}: norm {norm:.9f} > {bound:.9f} + 1e-9")
        worst_gap = min(worst_gap, bound - norm)
    dt = time.perf_counter() - t0
    ok = dt < 30
    _report(3, ok, f"all six groups within 1 - phi(|G|)/|G| + 1e-9, "
                   f"smallest margin {worst_gap:.3g} ({dt:.1f}s)")


def test_criterion_04_homogeneous_power_desk_instance():
    t0 = time.perf_counter()
    A = aghp_construct(2, 3, q=8)
    B = aghp_construct(3, 3, q=9)
    S = certify_set(crt_product(A, B), method="character")
    G = parse_group("sym:3")
    T = certify_set(mz_set(G, 3, S))
    dev = mz_readonce_check(G, 3, T)
    dt = time.perf_counter() - t0
    margin = 1 - T.certified_bias
    ok = (S.best_bias <= 0.3 and T.group.order == 216
          and T.certified_bias < 1 and margin >= 1e-3 and dt < 120)
    _report(4, ok, f"eps_S {S.best_bias:.4f} <= 0.3, certified "
                   f"{T.certified_bias:.4f} on the order-216 product, margin "
                   f"{margin:.4f}, read-once deviation {dev:.4f} ({dt:.1f}s)")


def test_criterion_05_one_amplification_round():
    t0 = time.perf_counter()
    G = parse_group("sym:4")
    S, _ = alon_roichman_sample(G, 600, seed=0)
    seed_ok = S.best_bias <= 0.1
    out = certify_set(amplify_step(S, eps=0.1))
    dt = time.perf_counter() - t0
    ok = (seed_ok and out.claimed_bias <= 5 * 0.1**2 + 1e-6
          and out.certified_bias <= 0.05 + 1e-6 and dt < 300)
    _report(5, ok, f"seed bias {S.best_bias:.4f} <= 0.1, amplified certified "
                   f"{out.certified_bias:.6f} <= 5(0.1)^2 + 1e-6 ({dt:.1f}s)")


def test_criterion_06_amplification_schedule():
    plan = plan_amplification(600, 0.002)
    eps = [st.eps_out for st in plan.steps]
    seq_ok = (len(eps) == 3 and eps[0] == 2**-2 / 5 and eps[1] == 2**-4 / 5
              and abs(eps[2] - 7.8125e-4) < 1e-12)
    growth_ok, c_max, size = True, 0.0, 600
    for st in plan.steps:
        factor = st.size_after / size
        growth_ok &= factor <= st.growth_c * st.eps_out**-5 * (1 + 1e-9)
        c_max, size = max(c_max, st.growth_c), st.size_after
    _report(6, seq_ok and growth_ok,
            f"steps {[f'{e:.6g}' for e in eps]} == [0.05, 0.0125, 7.8125e-4], "
            f"growth <= C eps^-5 with C <= {c_max:.3g}")


def test_criterion_07_unbalanced_product_bound():
    t0 = time.perf_counter()
    bound, terms = claim6_bound(0.25, 0.25, 1 / 5, 1 / 8)
    formula_ok = abs(terms[2] - 0.2375) < 1e-12 and bound == max(terms)

    S1 = certify_set(counted(parse_group("cyclic:3"), [0, 1, 2], [2, 1, 1],
                             claimed_bias=1.0, claim_kind="reference"))
    S2 = certify_set(dup(_whole_group(parse_group("sym:3")), 2))
    gamma = random_regular_bipartite(12, 12, 0.125, seed=0)
    T = certify_set(tensor_combine(S1, S2, gamma))
    dt = time.perf_counter() - t0
    ok = (formula_ok and gamma.certification == "exact-eigensolve"
          and T.certified_bias <= T.claimed_bias + 1e-6 and dt < 60)
    _report(7, ok, f"reference point gives 1/8 + 1/4(1/4 + 1/5) = "
                   f"{terms[2]:.4f}; real product on Z3 x S3 certified "
                   f"{T.certified_bias:.4f} <= bound {T.claimed_bias:.4f} "
                   f"+ 1e-6 ({dt:.1f}s)")


def test_criterion_08_product_group_end_to_end():
    t0 = time.perf_counter()
    groups = [parse_group(d) for d in ("cyclic:2", "cyclic:3", "sym:3",
                                       "cyclic:4")]
    out = direct_product_set(groups)
    dt = time.perf_counter() - t0
    d = max(e["degree"] for e in out.provenance if e.get("op") == "product-merge")
    size_bound = (5 * d) ** 2 * 6
    ok = (out.group.order == 144 and out.certified_bias is not None
          and out.certified_bias <= 0.5 and out.size <= size_bound
          and dt < 300)
    _report(8, ok, f"order-144 product certified {out.certified_bias:.4f} "
                   f"<= 1/2, size {out.size} <= (5*{d})^2*6 = {size_bound} "
                   f"({dt:.1f}s)")


def test_criterion_09_solvable_desk_instances():
    t0 = time.perf_counter()
    details = []
    ok = True
    for desc in ("dihedral:4", "ut:2:3"):
        S = solvable_set(parse_group(desc))
        root = S.provenance[-1]
        assert root["op"] == "solvable"
        alpha, ell = root["alpha"], root["ell"]
        ok &= alpha < 1 / (4 * max(1, math.ceil(math.log2(ell))))
        ok &= S.certified_bias is not None and S.certified_bias <= 0.5
        for e in S.provenance:
            if e.get("op") == "solvable-merge":
                level = min(1.0, max(e["eps_minus"], e["eps_plus"])
                            + 2 * e["alpha"])
                ok &= S.claimed_bias <= level + 1e-12
        details.append(f"{desc}: ell {ell}, alpha {alpha:.3f}, certified "
                       f"{S.certified_bias:.4f}")
    dt = time.perf_counter() - t0
    ok &= dt < 120
    _report(9, ok, "; ".join(details) + f" ({dt:.1f}s)")


def test_criterion_10_rayleigh_monte_carlo():
    t0 = time.perf_counter()
    g = lps_graph(13, 5)
    rv = rayleigh_vector_check(g, trials=1000, seed=0)
    ro = rayleigh_operator_check(g, trials=1000, seed=0)
    dt = time.perf_counter() - t0
    ok = (g.certification == "exact-eigensolve" and rv.violations == 0
          and ro.violations == 0 and dt < 120)
    _report(10, ok, f"vector/operator checks: 0 violations in "
                    f"{rv.trials}+{ro.trials} trials, max slacks "
                    f"{rv.max_slack:.2e}/{ro.max_slack:.2e} ({dt:.1f}s)")


def test_criterion_11_operator_tail_bound():
    t0 = time.perf_counter()
    r = operator_product_tail(60, 0.3, 4, trials=10000, seed=0)
    dt = time.perf_counter() - t0
    headline = next(e for e in r.parameters["sweep"]
                    if math.isclose(e["delta_shift"], 60 * 0.3 / 3))
    bound = r.parameters["headline_bound"]
    head_ok = r.empirical_tail <= bound + 3 * headline["se"]
    sweep_ok = all(e["ok"] and e["vector_ok"] for e in r.parameters["sweep"])
    ok = r.violations == 0 and head_ok and sweep_ok and dt < 180
    _report(11, ok, f"empirical tail {r.empirical_tail:.4f} <= "
                    f"dim e^(-k delta^2/13) = {bound:.3f} + 3 se"
                    f"{' (vacuous, reported)' if bound >= 1 else ''}; sweep "
                    f"clean over {len(r.parameters['sweep'])} points ({dt:.1f}s)")


def test_criterion_12_oracle_agreement():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(50):
        m = int(rng.integers(2, 13))
        nmax = int(math.log(4096) / math.log(m))
        n = int(rng.integers(1, nmax + 1))
        G = parse_group(f"vec:{m}:{n}")
        k = int(rng.integers(1, 13))
        S = counted(G, rng.integers(0, G.order, size=k, dtype=np.int64),
                    np.ones(k, dtype=np.int64), claimed_bias=1.0,
                    claim_kind="reference")
        worst = max(worst, abs(bias_spectral(G, S) - char_bias_exact(S)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and dt < 120
    _report(12, ok, f"50 abelian instances (order <= 4096): worst "
                    f"|spectral - character| = {worst:.3g} ({dt:.1f}s)")
