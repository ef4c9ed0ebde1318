"""The main constructions: exponent-driven tuples, amplification, products, towers.

Everything here reduces bias claims to three mechanisms. Tiling a side of a
bipartite expander with copies of a set S costs at most the uncovered
fraction on top of S's bias. A (side, side, degree, lambda)-graph whose two
sides carry sets of per-side bias a and b yields, over the edge products,
bias at most lambda + a*b. And duplication changes nothing but the size
ratio bookkeeping. Each construction records its arithmetic in provenance
and certifies the result spectrally whenever the group order is within the
dense cap, so claims and measurements travel together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import sympy

from .abelian import aghp_construct
from .errors import (CertificationError, ResourceError, SearchBudgetError,
                     StructuralError)
from .expanders import (BipartiteExpander, find_primes, lps_graph,
                        random_regular_bipartite)
from .groups import (AbelianVectorGroup, CyclicGroup, DirectProductGroup,
                     FiniteGroup, QuotientGroup, SubgroupGroup, derived_series,
                     elementary_abelian_structure)
from .limits import SOUNDNESS_TOL, cap
from .sets import BiasedSet, counted
from .spectral import certify_set


@dataclass(frozen=True)
class TilingMap:
    """How one side of a graph was covered by consecutive blocks of a set."""

    side: str
    n_vertices: int
    set_size: int
    uncovered: int

    @property
    def slack(self) -> float:
        return self.uncovered / self.n_vertices


def tile_side(S: BiasedSet, n_vertices: int, side: str):
    """Assign stored set positions blockwise; vertex j gets S[j mod |S|].

    Returns (element index array, TilingMap). The uncovered tail past the
    last full block is what the slack term in every bias claim pays for.
    """
    if n_vertices < 1:
        raise StructuralError("cannot tile an empty side")
    pos = np.arange(n_vertices, dtype=np.int64) % S.size
    elems = S.gather_stored(pos)
    uncovered = n_vertices % S.size if S.size <= n_vertices else n_vertices
    return elems, TilingMap(side=side, n_vertices=n_vertices,
                            set_size=S.size, uncovered=uncovered)


def edge_products(G: FiniteGroup, graph: BipartiteExpander,
                  u_elems: np.ndarray, v_elems: np.ndarray):
    """Multiset {u_elem * v_elem} over all graph edges, as (values, counts).

    Exact integer aggregation: per-chunk bincounts in float64 stay integral
    far below 2^53.
    """
    order = G.order
    acc = np.zeros(order, dtype=np.float64)
    if graph.perms is not None:
        for perm in graph.perms:
            prod = G.mul_vec(u_elems, v_elems[perm])
            acc += np.bincount(prod, minlength=order)
        total = graph.side * graph.degree
    else:
        N = graph.side
        rows_per = max(1, 8_000_000 // max(1, N))
        for lo in range(0, N, rows_per):
            hi = min(lo + rows_per, N)
            prod = G.mul_vec(u_elems[lo:hi, None], v_elems[None, :])
            w = graph.counts[lo:hi].astype(np.float64)
            acc += np.bincount(prod.ravel(), weights=w.ravel(), minlength=order)
        total = int(graph.counts.sum(dtype=np.int64))
    vals = np.nonzero(acc)[0]
    cnts = np.rint(acc[vals]).astype(np.int64)
    if int(cnts.sum()) != total:
        raise CertificationError("edge product aggregation lost mass")
    return vals, cnts


def _maybe_certify(S: BiasedSet) -> BiasedSet:
    if S.group.order <= cap("DENSE_VERIFY_CAP"):
        return certify_set(S)
    return S


def _graph_lambda(graph: BipartiteExpander) -> float:
    return graph.best_lambda


def mz_set(G: FiniteGroup, n: int, S: BiasedSet) -> BiasedSet:
    """The tuple set T_S: for g in G and s in S, the tuple (g^s_1, ..., g^s_n).

    S supplies exponent vectors over Z_m^n with m = |G|. The masked-product
    test (mz_readonce_check) is the property this set is for; the bias claim
    on the n-fold product group combines the never-generates penalty
    1 - phi(m)/m with S's bias. That combination is a theorem for cyclic G,
    so the claim is enforceable there and recorded as reference otherwise.
    """
    if n < 1:
        raise StructuralError("need n >= 1 coordinates")
    m = G.order
    sg = S.group
    if not isinstance(sg, AbelianVectorGroup) or sg.modulus != m or sg.dim != n:
        raise StructuralError(f"exponent set must live over vec:{m}:{n}")
    if S.size * m > cap("SERIALIZE_CAP"):
        raise ResourceError(f"tuple set of size {S.size * m} exceeds the cap")
    digits = sg.decode(S.expanded())  # (N, n) exponents
    P = G.power_matrix()  # P[t, g] = g^t
    prod_group = DirectProductGroup([G] * n)
    N = digits.shape[0]
    vals = np.empty(m * N, dtype=np.int64)
    for gi in range(m):
        parts = [P[digits[:, i], gi] for i in range(n)]
        vals[gi * N:(gi + 1) * N] = prod_group.encode(parts)
    eps_s = S.best_bias
    phi = int(sympy.totient(m))
    claimed = min(1.0, (1.0 - phi / m) + eps_s)
    kind = "bound" if isinstance(G, CyclicGroup) else "reference"
    return BiasedSet(
        group=prod_group,
        values=vals,
        claimed_bias=claimed,
        claim_kind=kind,
        seed=S.seed,
        provenance=S.provenance + [{
            "op": "mz-tuples", "group": G.descriptor, "n": n,
            "phi_over_m": phi / m, "eps_s": eps_s, "input": S.digest(),
        }],
    )


def amplify_step(S: BiasedSet, eps: float | None = None,
                 graph_certify: str = "auto") -> BiasedSet:
    """One squaring step: bias eps in, bias 5 eps^2 claimed out.

    Both sides of an algebraic expander with lambda <= eps^2 and side at
    least |S| ceil(1/eps) are tiled with S; the output is the edge-product
    multiset. Per side the tiling costs at most eps slack, so the claim is
    lambda + (2 eps)^2 <= 5 eps^2.
    """
    eps_in = float(eps) if eps is not None else S.best_bias
    if not (0 < eps_in < 1):
        raise StructuralError("amplification needs a bias bound in (0, 1)")
    if S.best_bias > eps_in + SOUNDNESS_TOL:
        raise StructuralError(
            f"set carries bias {S.best_bias:.6g}, worse than the step input {eps_in}"
        )
    min_side = S.size * math.ceil(1.0 / eps_in)
    p, q = find_primes(min_side, eps_in * eps_in)
    while p == q:
        q = int(sympy.nextprime(q))
        while q % 4 != 1:
            q = int(sympy.nextprime(q))
    graph = lps_graph(p, q, certify=graph_certify)
    lam = _graph_lambda(graph)
    u_elems, tu = tile_side(S, graph.side, "U")
    v_elems, tv = tile_side(S, graph.side, "V")
    if tu.slack > eps_in or tv.slack > eps_in:
        raise StructuralError("tiling slack exceeded the step bias; side too small")
    vals, cnts = edge_products(S.group, graph, u_elems, v_elems)
    formula = lam + (eps_in + tu.slack) * (eps_in + tv.slack)
    claimed = min(1.0, 5.0 * eps_in * eps_in)
    if formula > claimed + 1e-12:
        raise CertificationError("step arithmetic exceeded the 5 eps^2 budget")
    new_size = graph.side * graph.degree
    return counted(
        S.group, vals, cnts,
        claimed_bias=claimed,
        claim_kind="bound",
        seed=S.seed,
        provenance=S.provenance + [{
            "op": "amplify-step", "eps_in": eps_in, "p": p, "q": q,
            "side": graph.side, "degree": graph.degree,
            "lambda_used": lam,
            "lambda_certified": graph.certified_lambda is not None,
            "slack_u": tu.slack, "slack_v": tv.slack,
            "formula": formula, "claimed": claimed,
            "growth_c": new_size * eps_in**5 / S.size,
            "input": S.digest(),
        }],
    )


@dataclass(frozen=True)
class StepPlan:
    t: int
    eps_in: float
    eps_out: float
    p: int
    q: int
    side: int
    degree: int
    size_after: int
    growth_c: float


@dataclass(frozen=True)
class AmplificationPlan:
    initial_size: int
    target_eps: float
    steps: list = field(default_factory=list)

    @property
    def total_steps(self) -> int:
        return len(self.steps)

    @property
    def final_size(self) -> int:
        return self.steps[-1].size_after if self.steps else self.initial_size


def plan_amplification(initial_size: int, target_eps: float,
                       eps0: float = 0.1) -> AmplificationPlan:
    """Pure arithmetic of the doubly-exponential schedule eps_t = 2^-2^t / 5.

    No graphs are constructed, so the prime searches run uncapped; the plan
    reports per-step primes, sizes, and the growth constant c_t with
    size_after = c_t * size_before * eps_in^-5. Starting bias is eps0 = 1/10
    = 2^-2^0 / 5, and the step count comes out to
    ceil(log2 log2 (1 / (5 target))).
    """
    if initial_size < 1:
        raise StructuralError("initial size must be positive")
    if not (0 < target_eps < 1):
        raise StructuralError("target bias must lie in (0, 1)")
    if not math.isclose(eps0, 0.1):
        raise StructuralError("the schedule starts at bias 1/10")
    steps = []
    size, eps_prev, t = initial_size, eps0, 0
    while eps_prev > target_eps:
        t += 1
        eps_t = 2.0 ** -(2**t) / 5.0
        min_side = size * math.ceil(1.0 / eps_prev)
        p, q = find_primes(min_side, eps_prev * eps_prev, unbounded=True)
        while p == q:
            q = int(sympy.nextprime(q))
            while q % 4 != 1:
                q = int(sympy.nextprime(q))
        side = p * (p * p - 1) // 2
        new_size = side * (q + 1)
        steps.append(StepPlan(
            t=t, eps_in=eps_prev, eps_out=eps_t, p=p, q=q,
            side=side, degree=q + 1, size_after=new_size,
            growth_c=new_size * eps_prev**5 / size,
        ))
        size, eps_prev = new_size, eps_t
    return AmplificationPlan(initial_size=initial_size, target_eps=target_eps,
                             steps=steps)


def amplify(S: BiasedSet, target_eps: float) -> BiasedSet:
    """Run squaring steps until the scheduled bias is at or below target_eps.

    The input must already be 1/10-biased. Targets at or above 1/10 return
    the set unchanged with a provenance note. Resource caps make deep
    schedules fail loudly rather than thrash.
    """
    if not (0 < target_eps < 1):
        raise StructuralError("target bias must lie in (0, 1)")
    if target_eps >= 0.1:
        return S.with_provenance(
            {"op": "amplify", "note": f"target {target_eps} is not below 1/10"}
        )
    if S.best_bias > 0.1 + SOUNDNESS_TOL:
        raise StructuralError(
            f"amplification starts from bias 1/10; set carries {S.best_bias:.6g}"
        )
    cur, eps_cur, t = S, 0.1, 0
    while eps_cur > target_eps:
        t += 1
        cur = amplify_step(cur, eps=eps_cur)
        eps_cur = 2.0 ** -(2**t) / 5.0
        cur = _maybe_certify(cur)
    return cur


def bridge_constant_gap(S: BiasedSet, alpha: float = 0.05, target: float = 0.1,
                        max_rounds: int = 60) -> BiasedSet:
    """Contract any bias strictly below 1 down to `target` by repeated squaring
    against fixed-lambda graphs.

    One round with tiling slack alpha per side and graph value lambda maps
    bias e to (e + alpha)^2 + lambda, a contraction toward a small fixed
    point whenever alpha and lambda are small enough against the current
    bias. Rounds iterate on the certified bias when the group is small
    enough to certify, which converges much faster than the worst case.
    """
    eps = S.best_bias
    if not (0 < target < 1):
        raise StructuralError("target must lie in (0, 1)")
    if eps >= 1.0:
        raise StructuralError("bridging needs a starting bias strictly below 1")
    if not (0 < alpha < 0.5):
        raise StructuralError("alpha must lie in (0, 1/2)")
    cur = S
    for round_no in range(max_rounds):
        if eps <= target:
            return cur
        min_side = math.ceil(cur.size / alpha)
        p, q = find_primes(min_side, alpha)
        while p == q:
            q = int(sympy.nextprime(q))
            while q % 4 != 1:
                q = int(sympy.nextprime(q))
        graph = lps_graph(p, q)
        lam = _graph_lambda(graph)
        next_claim = (eps + alpha) ** 2 + lam
        if next_claim >= eps:
            raise StructuralError(
                f"no contraction at bias {eps:.4g} with alpha {alpha} "
                f"and lambda {lam:.4g}; decrease alpha"
            )
        u_elems, tu = tile_side(cur, graph.side, "U")
        v_elems, tv = tile_side(cur, graph.side, "V")
        vals, cnts = edge_products(cur.group, graph, u_elems, v_elems)
        cur = counted(
            cur.group, vals, cnts,
            claimed_bias=min(1.0, next_claim),
            claim_kind="bound",
            seed=cur.seed,
            provenance=cur.provenance + [{
                "op": "bridge-round", "round": round_no, "eps_in": eps,
                "alpha": alpha, "p": p, "q": q, "lambda_used": lam,
                "slack_u": tu.slack, "slack_v": tv.slack,
                "claimed": next_claim, "input": cur.digest(),
            }],
        )
        cur = _maybe_certify(cur)
        eps = cur.best_bias
    raise CertificationError(
        f"bridging did not reach {target} in {max_rounds} rounds (at {eps:.4g})"
    )


def claim6_bound(eps1: float, eps2: float, ratio: float, lam: float):
    """The unbalanced-product bound and its three constituent terms."""
    t1 = eps2
    t2 = eps1 + ratio
    t3 = lam + eps2 * (eps1 + ratio)
    return max(t1, t2, t3), (t1, t2, t3)


def dup(S: BiasedSet, times: int) -> BiasedSet:
    """The multiset with every multiplicity scaled; bias is unchanged."""
    if times < 1:
        raise StructuralError("duplication factor must be >= 1")
    if S.counts is not None:
        values, counts = S.values, S.counts * times
    elif S.size * times <= cap("SERIALIZE_CAP"):
        values, counts = np.tile(S.values, times), None
    else:
        v, c = S.element_counts()
        values, counts = v, c * times
    return BiasedSet(
        group=S.group, values=values, counts=counts,
        claimed_bias=S.claimed_bias, claim_kind=S.claim_kind,
        certified_bias=S.certified_bias, certified_method=S.certified_method,
        seed=S.seed,
        provenance=S.provenance + [{"op": "dup", "times": times, "input": S.digest()}],
    )


def _tensor_edges(small: BiasedSet, big: BiasedSet, graph: BipartiteExpander,
                  small_first: bool, pair_group: DirectProductGroup) -> np.ndarray:
    """Pair elements over edges, U tiled by `small`, V in bijection with `big`.

    Output order is U-major over explicit edges; the pair components are
    assembled in pair_group's factor order regardless of which side holds
    which input.
    """
    side = graph.side
    if big.size != side:
        raise StructuralError("V side must be in bijection with the larger set")
    u_elems, _ = tile_side(small, side, "U")
    v_elems = big.gather_stored(np.arange(side, dtype=np.int64))
    u, v, mult = graph.edge_triples()
    se, be = u_elems[u], v_elems[v]
    parts = [se, be] if small_first else [be, se]
    pair_vals = pair_group.encode(parts)
    if int(mult.sum()) > 67_108_864:
        raise ResourceError("tensor edge expansion too large to materialize")
    return np.repeat(pair_vals, mult)


def tensor_combine(S1: BiasedSet, S2: BiasedSet, gamma: BipartiteExpander) -> BiasedSet:
    """Biased set over G1 x G2 from sets over the factors and one expander.

    Requires |S1| <= |S2| and gamma.side == |S2|. The claim is
    max(eps2, eps1 + |S1|/|S2|, lambda + eps2 (eps1 + |S1|/|S2|)); all three
    terms are recorded in provenance.
    """
    if S1.size > S2.size:
        raise StructuralError("S1 must be the smaller set; swap the arguments")
    if gamma.side != S2.size:
        raise StructuralError(
            f"graph side {gamma.side} must equal |S2| = {S2.size}"
        )
    lam = _graph_lambda(gamma)
    eps1, eps2 = S1.best_bias, S2.best_bias
    ratio = S1.size / S2.size
    claimed, terms = claim6_bound(eps1, eps2, ratio, lam)
    pair_group = DirectProductGroup([S1.group, S2.group])
    values = _tensor_edges(S1, S2, gamma, True, pair_group)
    return BiasedSet(
        group=pair_group,
        values=values,
        claimed_bias=min(1.0, claimed),
        claim_kind="bound",
        seed=S1.seed if S1.seed is not None else S2.seed,
        provenance=[{
            "op": "tensor", "inputs": [S1.digest(), S2.digest()],
            "eps1": eps1, "eps2": eps2, "ratio": ratio, "lambda": lam,
            "lambda_certified": gamma.certified_lambda is not None,
            "terms": list(terms), "graph": gamma.kind,
            "side": gamma.side, "degree": gamma.degree,
        }],
    )


def _expander_for_side(side: int, lam_target: float, seed: int,
                       degree: int | None = None) -> BipartiteExpander:
    """Random expander at the requested lambda; degree defaults to
    ceil(5 / lambda^2), a cushion above the Ramanujan-threshold 4."""
    if degree is None:
        degree = math.ceil(5.0 / (lam_target * lam_target))
    if degree % side == 0 or degree >= side * 64:
        degree = side * max(1, math.ceil(degree / side))
        return random_regular_bipartite(side, degree, lam_target, seed=seed)
    last_err = None
    for factor, budget in ((1.0, 3), (1.3, 3), (1.8, 4)):
        d = math.ceil(degree * factor)
        try:
            return random_regular_bipartite(side, d, lam_target, seed=seed,
                                            budget=budget)
        except SearchBudgetError as err:
            last_err = err
    raise last_err


def direct_product_set(groups, lam_target: float = 0.125, seed: int = 0,
                       dup_factor: int = 5, degree: int | None = None) -> BiasedSet:
    """Constant-bias set over a direct product by balanced recursion.

    Each merge duplicates the larger child dup_factor times (forcing the
    size ratio to 1/dup_factor), pairs it with the smaller child across a
    lambda <= lam_target expander, and certifies when the product order is
    within the dense cap. Leaves are whole groups, bias zero. With the
    default degree d and n factors, the final size is at most
    (dup_factor * d)^ceil(log2 n) * max group order.
    """
    groups = list(groups)
    if not groups:
        raise StructuralError("need at least one factor group")
    if degree is None:
        degree = math.ceil(5.0 / (lam_target * lam_target))
    levels = []

    def build(lo: int, hi: int) -> BiasedSet:
        if hi - lo == 1:
            G = groups[lo]
            leaf = BiasedSet(
                group=G, values=np.arange(G.order, dtype=np.int64),
                claimed_bias=0.0, claim_kind="bound", seed=seed,
                provenance=[{"op": "whole-group", "group": G.descriptor}],
            )
            return _maybe_certify(leaf)
        mid = lo + (hi - lo + 1) // 2
        SA = build(lo, mid)
        SB = build(mid, hi)
        small, big, small_first = (SA, SB, True) if SA.size <= SB.size else (SB, SA, False)
        big_d = dup(big, dup_factor)
        side = big_d.size
        graph = _expander_for_side(side, lam_target, seed + 7 * len(levels), degree)
        lam = _graph_lambda(graph)
        eps1, eps2 = small.best_bias, big_d.best_bias
        ratio = small.size / big_d.size
        claimed, terms = claim6_bound(eps1, eps2, ratio, lam)
        # the slice pair in original factor order: A first
        pair_group = DirectProductGroup([SA.group, SB.group])
        values = _tensor_edges(small, big_d, graph, small_first, pair_group)
        out = counted(
            pair_group, values, np.ones(values.size, dtype=np.int64),
            claimed_bias=min(1.0, claimed), claim_kind="bound", seed=seed,
            provenance=[{
                "op": "product-merge", "slice": [lo, hi],
                "inputs": [SA.digest(), SB.digest()],
                "eps_small": eps1, "eps_big": eps2, "ratio": ratio,
                "lambda": lam, "terms": list(terms),
                "side": side, "degree": graph.degree, "kind": graph.kind,
            }],
        )
        out = _maybe_certify(out)
        levels.append({"slice": [lo, hi], "claimed": out.claimed_bias,
                       "certified": out.certified_bias, "size": out.size})
        return out

    result = build(0, len(groups))
    return result.with_provenance({"op": "direct-product", "levels": levels,
                                   "n_factors": len(groups)})


def _leaf_set(Q: FiniteGroup, alpha: float, leaf_mode: str, seed: int) -> BiasedSet:
    """Alpha-biased set on an abelian section: the whole group, or the
    deterministic construction mapped through an elementary-abelian basis."""
    if leaf_mode not in ("auto", "full", "aghp"):
        raise StructuralError(f"unknown leaf mode {leaf_mode!r}")
    if leaf_mode == "full" or (leaf_mode == "auto" and Q.order <= 512):
        leaf = BiasedSet(
            group=Q, values=np.arange(Q.order, dtype=np.int64),
            claimed_bias=0.0, claim_kind="bound", seed=seed,
            provenance=[{"op": "leaf-full", "group": Q.descriptor}],
        )
        return _maybe_certify(leaf)
    struct = elementary_abelian_structure(Q)
    if struct is None:
        raise StructuralError(
            f"abelian section {Q.descriptor} (order {Q.order}) is not "
            "elementary abelian; unsupported factor shape"
        )
    p, t, basis = struct
    inner = aghp_construct(p, t, delta=alpha)
    digits = inner.group.decode(inner.values)  # (N, t) exponents mod p
    acc = np.zeros(inner.values.size, dtype=np.int64)
    for i, b in enumerate(basis):
        pow_table = np.array([Q.pow(b, e) for e in range(p)], dtype=np.int64)
        acc = Q.mul_vec(acc, pow_table[digits[:, i]])
    if inner.claimed_bias > alpha:
        raise CertificationError("leaf construction missed its bias target")
    leaf = BiasedSet(
        group=Q, values=acc,
        claimed_bias=inner.claimed_bias, claim_kind="bound", seed=seed,
        provenance=[{"op": "leaf-aghp", "group": Q.descriptor, "p": p, "t": t,
                     "q": inner.provenance[0]["q"], "alpha": alpha}],
    )
    return _maybe_certify(leaf)


def solvable_set(G: FiniteGroup, target_eps: float | None = None,
                 leaf_mode: str = "auto", seed: int = 0,
                 alpha: float | None = None) -> BiasedSet:
    """Constant-bias set over a solvable group by derived-series splitting.

    The derived chain of length ell splits at k = ceil(ell/2) into a
    subgroup walk (U side) and a lifted quotient walk (V side); each level
    pays its children's worse bias plus 2 alpha, with alpha sized against
    the split depth L = max(1, ceil(log2 ell)) so the root claim stays
    at alpha (2L + 1) < 1/2. target_eps, when given, bridges to 1/10 and
    then amplifies.
    """
    series = derived_series(G)
    if not series.solvable:
        raise StructuralError(f"{G.descriptor} is not solvable")
    ell = series.length
    if ell == 0:
        return BiasedSet(group=G, values=np.zeros(1, dtype=np.int64),
                         claimed_bias=0.0, claim_kind="bound",
                         provenance=[{"op": "trivial-group"}])
    L = max(1, math.ceil(math.log2(ell)))
    if alpha is None:
        alpha = 0.9 / (2 * (2 * L + 1))
    ledger = []

    def build(Q: FiniteGroup, depth: int) -> BiasedSet:
        chain = derived_series(Q)
        if not chain.solvable:
            raise StructuralError("section lost solvability (impossible)")
        lq = chain.length
        if lq == 0:
            return BiasedSet(group=Q, values=np.zeros(1, dtype=np.int64),
                             claimed_bias=0.0, claim_kind="bound",
                             provenance=[{"op": "trivial-group"}])
        if lq == 1:
            return _leaf_set(Q, alpha, leaf_mode, seed)
        k = (lq + 1) // 2
        h_elems = chain.chain[k]
        H = SubgroupGroup(Q, h_elems)
        Splus_q = QuotientGroup(Q, h_elems)
        S_minus = build(H, depth + 1)
        S_plus = build(Splus_q, depth + 1)
        # move both walks into Q's own indices
        minus_vals = H.elements[S_minus.expanded()]
        plus_vals = Splus_q.reps[S_plus.expanded()]
        eps_minus, eps_plus = S_minus.best_bias, S_plus.best_bias
        side = math.ceil(max(minus_vals.size, plus_vals.size) / alpha)
        graph = _expander_for_side(side, alpha, seed + 13 * depth)
        lam = _graph_lambda(graph)
        u_pos = np.arange(side, dtype=np.int64) % minus_vals.size
        v_pos = np.arange(side, dtype=np.int64) % plus_vals.size
        u_elems = minus_vals[u_pos]
        v_elems = plus_vals[v_pos]
        slack_u = (side % minus_vals.size) / side
        slack_v = (side % plus_vals.size) / side
        vals, cnts = edge_products(Q, graph, u_elems, v_elems)
        claimed = min(1.0, max(eps_minus, eps_plus) + 2 * alpha)
        out = counted(
            Q, vals, cnts, claimed_bias=claimed, claim_kind="bound", seed=seed,
            provenance=[{
                "op": "solvable-merge", "depth": depth, "ell": lq, "k": k,
                "subgroup_order": H.order, "quotient_order": Splus_q.order,
                "eps_minus": eps_minus, "eps_plus": eps_plus,
                "alpha": alpha, "lambda": lam,
                "slack_u": slack_u, "slack_v": slack_v,
                "side": side, "degree": graph.degree,
            }],
        )
        out = _maybe_certify(out)
        ledger.append({"depth": depth, "ell": lq, "k": k,
                       "claimed": out.claimed_bias,
                       "certified": out.certified_bias, "size": out.size})
        return out

    S = build(G, 0)
    S = S.with_provenance({
        "op": "solvable", "group": G.descriptor, "ell": ell, "L": L,
        "alpha": alpha, "root_budget": alpha * (2 * L + 1), "levels": ledger,
    })
    if target_eps is None or S.best_bias <= target_eps:
        return S
    S = bridge_constant_gap(S, alpha=0.05, target=max(0.1, target_eps))
    if target_eps < 0.1:
        S = amplify(S, target_eps)
    return S
