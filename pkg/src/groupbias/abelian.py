"""Biased sets over abelian groups Z_m^n, plus the exact character oracle.

The deterministic construction works over a prime field extension: pick the
smallest q = p^e with q >= n/delta, take all pairs (x, y) in F_q^2, and read
coordinate i of a point as Tr(x^i * y). Distinct points disagree on some
coordinate pattern because the difference is a degree-(n-1) polynomial in x,
which is where the (n-1)/q bias bound comes from. We keep all q^2 pairs, so
the set is quadratic in q rather than linear; this is recorded in provenance
as a size deviation and is immaterial at the scales this library targets.

Character sums here are exact in the combinatorial sense: every character is
enumerated and the empirical mean of its values over the multiset is summed
in fixed chunk order with compensated accumulation.
"""

from __future__ import annotations

import math

import numpy as np
import sympy

from .errors import ResourceError, SearchBudgetError, StructuralError
from .fields import PrimePowerField
from .groups import AbelianVectorGroup, CyclicGroup
from .limits import cap
from .sets import BiasedSet


def _vector_group_view(S: BiasedSet):
    """(modulus, dimension, decode) for the abelian groups the oracle supports."""
    g = S.group
    if isinstance(g, AbelianVectorGroup):
        return g.modulus, g.dim, g.decode
    if isinstance(g, CyclicGroup):
        return g.order, 1, lambda idx: np.asarray(idx, dtype=np.int64).reshape(-1, 1)
    raise StructuralError(
        f"character oracle needs cyclic:m or vec:m:n, got {g.descriptor}; "
        "use the spectral verifier for other groups"
    )


def aghp_construct(p: int, n: int, delta: float | None = None, q: int | None = None) -> BiasedSet:
    """Delta-biased set over Z_p^n via the trace-of-powers pairing.

    Args:
        p: prime modulus of the target group.
        n: dimension; coordinates are indexed 0..n-1.
        delta: target bias; together with n it chooses the field size.
        q: explicit field size p^e, overriding the delta-driven choice.

    Returns:
        A counts-free BiasedSet of size q^2 with claimed bias (n-1)/q.
    """
    if not sympy.isprime(p):
        raise StructuralError(f"modulus {p} must be prime here; compose via crt_product")
    if n < 1:
        raise StructuralError("dimension must be >= 1")
    if q is None:
        if delta is None or not (0 < delta <= 1):
            raise StructuralError("need a target bias in (0, 1] or an explicit q")
        e = 1
        while p**e * delta < n:
            e += 1
    else:
        e = round(math.log(q, p))
        if p**e != q:
            raise StructuralError(f"q = {q} is not a power of p = {p}")
    F = PrimePowerField(p, e)
    q = F.q
    if q * q > cap("SERIALIZE_CAP"):
        raise ResourceError(f"set size q^2 = {q * q} exceeds the serialization cap")

    xs = np.arange(q, dtype=np.int64)
    trace = F.trace_table
    digits = np.empty((q * q, n), dtype=np.int64)
    # pair (x, y) sits at index x*q + y
    digits[:, 0] = trace[np.tile(xs, q)]  # x^0 * y = y for every x
    xi = np.ones(q, dtype=np.int64)
    for i in range(1, n):
        xi = F.mul_vec(xi, xs)  # x^i, with 0^i = 0
        prod = F.mul_vec(xi[:, None], xs[None, :])  # row x, column y
        digits[:, i] = trace[prod.ravel()]

    group = AbelianVectorGroup(p, n)
    values = group.encode(digits)
    claimed = (n - 1) / q
    return BiasedSet(
        group=group,
        values=values,
        claimed_bias=claimed,
        claim_kind="bound",
        provenance=[{
            "op": "aghp",
            "p": p, "n": n, "q": q, "delta": delta,
            "note": "full q^2 point set kept; quadratic size instead of the optimal linear",
        }],
    )


def crt_product(S1: BiasedSet, S2: BiasedSet) -> BiasedSet:
    """Combine sets over Z_m1^n and Z_m2^n (coprime moduli) into one over Z_(m1 m2)^n.

    Bias against any character of the product splits through the CRT isomorphism,
    so the result inherits max of the two claims. Stored order is S1-major.
    """
    m1, n1, dec1 = _vector_group_view(S1)
    m2, n2, dec2 = _vector_group_view(S2)
    if n1 != n2:
        raise StructuralError(f"dimension mismatch: {n1} vs {n2}")
    if math.gcd(m1, m2) != 1:
        raise StructuralError(f"moduli {m1} and {m2} are not coprime")
    if S1.size * S2.size > cap("SERIALIZE_CAP"):
        raise ResourceError(f"product size {S1.size * S2.size} exceeds the serialization cap")

    d1 = dec1(S1.expanded())
    d2 = dec2(S2.expanded())
    m = m1 * m2
    c1 = (m2 * sympy.mod_inverse(m2, m1)) % m
    c2 = (m1 * sympy.mod_inverse(m1, m2)) % m
    big1 = np.repeat(d1, S2.size, axis=0)
    big2 = np.tile(d2, (S1.size, 1))
    digits = (big1 * c1 + big2 * c2) % m
    group = AbelianVectorGroup(m, n1)
    claimed = max(S1.best_bias, S2.best_bias)
    return BiasedSet(
        group=group,
        values=group.encode(digits),
        claimed_bias=float(claimed),
        claim_kind="bound",
        provenance=[{
            "op": "crt",
            "moduli": [m1, m2],
            "inputs": [S1.digest(), S2.digest()],
            "claims": [S1.best_bias, S2.best_bias],
        }],
    )


def quotient_mod(S: BiasedSet, d: int) -> BiasedSet:
    """Push a set over Z_m^n down to Z_d^n for d | m; bias cannot increase."""
    m, n, dec = _vector_group_view(S)
    if d < 2 or m % d != 0:
        raise StructuralError(f"{d} does not divide the modulus {m}")
    digits = dec(S.values) % d
    group = AbelianVectorGroup(d, n)
    vals = group.encode(digits)
    if S.counts is None:
        values, counts = vals, None
    else:
        # counted input: re-aggregate under the projection
        uniq, inv = np.unique(vals, return_inverse=True)
        agg = np.zeros(uniq.size, dtype=np.int64)
        np.add.at(agg, inv, S.counts)
        values, counts = uniq, agg
    return BiasedSet(
        group=group,
        values=values,
        counts=counts,
        claimed_bias=S.best_bias,
        claim_kind=S.claim_kind,
        provenance=S.provenance + [{"op": "quotient-mod", "d": d, "input": S.digest()}],
        seed=S.seed,
    )


def char_bias_exact(S: BiasedSet, return_witness: bool = False):
    """Maximum |empirical character mean| over all nontrivial characters.

    Enumerates every character chi_k, k = 1..m^n - 1, where chi_k pairs the
    digit vectors of k and of a set element through exp(2 pi i <k, s> / m).
    Sums run in fixed chunks with Kahan compensation, so the result is a
    reproducible exact-arithmetic-order evaluation, not a sampled estimate.
    """
    m, n, dec = _vector_group_view(S)
    order = S.group.order
    if order - 1 > cap("CHAR_ENUM_CAP"):
        raise ResourceError(
            f"{order - 1} characters exceed the enumeration cap; "
            "use the spectral verifier instead"
        )
    values, counts = S.element_counts()
    D = dec(values)  # (N, n) digit matrix
    w = counts.astype(np.float64) / S.size
    omega = np.exp(2j * np.pi * np.arange(m) / m)

    best = -1.0
    best_k = -1
    N = D.shape[0]
    char_chunk = max(1, 33_554_432 // max(1, N))
    elem_chunk = 65536
    for lo in range(1, order, char_chunk):
        ks = np.arange(lo, min(lo + char_chunk, order), dtype=np.int64)
        K = dec(ks)  # (C, n)
        acc = np.zeros(ks.size, dtype=np.complex128)
        comp = np.zeros(ks.size, dtype=np.complex128)
        for elo in range(0, N, elem_chunk):
            Dm = D[elo:elo + elem_chunk]
            part = omega[(K @ Dm.T) % m] @ w[elo:elo + elem_chunk]
            y = part - comp
            t = acc + y
            comp = (t - acc) - y
            acc = t
        mags = np.abs(acc)
        i = int(np.argmax(mags))
        if mags[i] > best:
            best = float(mags[i])
            best_k = int(ks[i])
    best = min(best, 1.0)
    if return_witness:
        return best, best_k
    return best


def random_biased_search(
    m: int, n: int, eps: float, budget: int = 50, seed: int = 0, size: int | None = None
) -> BiasedSet:
    """Randomized fallback: sample without replacement until the oracle certfies eps.

    The sample size k = ceil(8 ln(m^n) / eps^2) makes a uniform multiset work
    with overwhelming probability; we cap k at the group order, where the
    uniform set is exactly unbiased. Raises SearchBudgetError carrying the
    best attempt if the budget runs out.
    """
    if m < 2 or n < 1:
        raise StructuralError("need modulus >= 2 and dimension >= 1")
    if not (0 < eps < 1):
        raise StructuralError("target bias must lie in (0, 1)")
    order = m**n
    if order - 1 > cap("CHAR_ENUM_CAP"):
        raise ResourceError("group too large for the character oracle")
    k = size if size is not None else min(math.ceil(8 * n * math.log(m) / eps**2), order)
    k = max(1, min(k, order))
    group = AbelianVectorGroup(m, n)
    rng = np.random.default_rng(seed)
    best = None
    best_bias = 2.0
    for attempt in range(budget):
        vals = rng.choice(order, size=k, replace=False).astype(np.int64)
        cand = BiasedSet(
            group=group,
            values=vals,
            claimed_bias=eps,
            claim_kind="bound",
            seed=seed,
            provenance=[{"op": "random-search", "m": m, "n": n, "eps": eps,
                         "attempt": attempt, "seed": seed, "k": k}],
        )
        b = char_bias_exact(cand)
        if b < best_bias:
            best_bias = b
            best = cand.with_certificate(b, "character-enumeration")
        if b <= eps:
            return best
    raise SearchBudgetError(
        f"no sample of size {k} reached bias {eps} in {budget} attempts "
        f"(best {best_bias:.6f})",
        best=best,
    )


def modulus_set(m: int, n: int, delta: float, seed: int = 0) -> BiasedSet:
    """Delta-biased set over Z_m^n for general m >= 2.

    Prime factors go through the deterministic construction; prime-power
    factors p^e with e >= 2 fall back to the randomized search; the pieces
    meet through crt_product in ascending prime order.
    """
    if m < 2:
        raise StructuralError("modulus must be >= 2")
    parts = []
    for p, e in sorted(sympy.factorint(m).items()):
        if e == 1:
            parts.append(aghp_construct(p, n, delta=delta))
        else:
            parts.append(random_biased_search(p**e, n, delta, seed=seed))
    out = parts[0]
    for nxt in parts[1:]:
        out = crt_product(out, nxt)
    return out
