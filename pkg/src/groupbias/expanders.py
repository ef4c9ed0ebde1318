"""Bipartite expander graphs: explicit algebraic builds and certified lambda.

The explicit family is built from sums of four squares. For primes p, q
congruent to 1 mod 4, each of the q+1 integer quadruples (a, b, c, d) with
a^2 + b^2 + c^2 + d^2 = q, a positive odd and b, c, d even, becomes the
2x2 matrix [[a+ib, c+id], [-c+id, a-ib]] over F_p, i a fixed square root
of -1. These generate a degree-(q+1) Cayley multigraph on a projective
matrix group: on all of PGL(2, p) when q is a non-residue mod p (the graph
is then bipartite between residue and non-residue determinant classes),
and on PSL(2, p) when q is a residue (non-bipartite; we pass to the
bipartite double). Either way each side has p(p^2-1)/2 vertices and the
second singular value is claimed at most 2 sqrt(q)/(q+1).

That claim is proven in the regime where q is small relative to p; the
builds here also use large q against small p, where the bound is inherited
from the same spectral argument. Above the dense cap the claim is recorded
as-is, below it certification is exact, and every downstream bias bound is
re-certified on the group side regardless.

Graphs are stored as dense per-side multiplicity matrices, which is the
right shape at the scales the caps allow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
import scipy.sparse.linalg
import sympy
from sympy.ntheory import sqrt_mod

from .errors import (CertificationError, ResourceError, SearchBudgetError,
                     StructuralError)
from .limits import POWER_MAX_ITER, POWER_RESIDUAL, cap

_LANCZOS_SEED = 24781


@dataclass
class BipartiteExpander:
    """Biregular bipartite multigraph, stored one of two ways.

    Dense storage keeps a (side, side) multiplicity matrix `counts` (U rows,
    V columns). Matching storage keeps `perms`, a (degree, side) array of
    permutations, one perfect matching per row; it is the only shape that
    scales to the largest sides the recursive product construction needs.
    Exactly one of the two is set.
    """

    side: int
    degree: int
    kind: str
    claimed_lambda: float | None
    counts: np.ndarray | None = None
    perms: np.ndarray | None = None
    certified_lambda: float | None = None
    certification: str | None = None
    residual: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.counts is None) == (self.perms is None):
            raise StructuralError("exactly one of counts/perms must be given")
        self._iperms = None

    @property
    def best_lambda(self) -> float:
        if self.certified_lambda is not None:
            return self.certified_lambda
        if self.claimed_lambda is not None:
            return self.claimed_lambda
        raise StructuralError("graph carries no lambda at all")

    def counts_matrix(self) -> np.ndarray:
        if self.counts is not None:
            return self.counts
        if self.side > cap("EXPANDER_DENSE_CAP") * 4:
            raise ResourceError(f"side {self.side} too large to densify")
        counts = np.zeros((self.side, self.side), dtype=np.uint16)
        rows = np.arange(self.side)
        for perm in self.perms:
            counts[rows, perm] += 1
        return counts

    def edge_triples(self):
        """(u, v, multiplicity) arrays sorted by (u, v)."""
        if self.counts is not None:
            u, v = np.nonzero(self.counts)
            return u, v, self.counts[u, v].astype(np.int64)
        d, n = self.perms.shape
        keys = np.repeat(np.arange(n, dtype=np.int64), d) * n
        keys += self.perms.T.reshape(-1)  # row-major by u, then matching index
        uniq, mult = np.unique(keys, return_counts=True)
        return uniq // n, uniq % n, mult.astype(np.int64)

    def _inverse_perms(self) -> np.ndarray:
        if self._iperms is None:
            self._iperms = np.argsort(self.perms, axis=1).astype(self.perms.dtype)
        return self._iperms

    def matvec(self, z: np.ndarray) -> np.ndarray:
        """(T z)[u] = mean over edges at u of z[v], T = counts/degree."""
        if self.perms is not None:
            out = np.zeros(self.side)
            for perm in self.perms:
                out += z[perm]
            return out / self.degree
        return _chunked_matvec(self.counts, z) / self.degree

    def rmatvec(self, z: np.ndarray) -> np.ndarray:
        if self.perms is not None:
            out = np.zeros(self.side)
            for iperm in self._inverse_perms():
                out += z[iperm]
            return out / self.degree
        return _chunked_matvec(self.counts.T, z) / self.degree


def _chunked_matvec(mat, z, rows_per=1024):
    n = mat.shape[0]
    out = np.empty(n)
    for lo in range(0, n, rows_per):
        hi = min(lo + rows_per, n)
        out[lo:hi] = mat[lo:hi].astype(np.float64) @ z
    return out


def _require_prime_1mod4(x: int, name: str):
    if not sympy.isprime(x):
        raise StructuralError(f"{name} = {x} is not prime")
    if x % 4 != 1:
        raise StructuralError(f"{name} = {x} must be 1 mod 4")


def quaternion_solutions(q: int) -> np.ndarray:
    """All (a, b, c, d) with a^2+b^2+c^2+d^2 = q, a > 0 odd, b, c, d even.

    Returned lexicographically sorted; there are exactly q + 1 of them for
    prime q = 1 mod 4.
    """
    r = math.isqrt(q)
    rows = []
    evens = np.arange(-r - (r % 2), r + 1, 2, dtype=np.int64)
    for a in range(1, r + 1, 2):
        rem_a = q - a * a
        if rem_a < 0:
            break
        bb, cc = np.meshgrid(evens, evens, indexing="ij")
        rem = rem_a - bb * bb - cc * cc
        ok = rem >= 0
        t = np.zeros_like(rem)
        t[ok] = np.rint(np.sqrt(rem[ok].astype(np.float64))).astype(np.int64)
        good = ok & (t * t == rem) & (t % 2 == 0)
        b_hit, c_hit, t_hit = bb[good], cc[good], t[good]
        pos = t_hit > 0
        rows.append(np.stack([np.full(b_hit.size, a), b_hit, c_hit, t_hit], axis=1))
        if pos.any():
            rows.append(np.stack([np.full(pos.sum(), a), b_hit[pos], c_hit[pos], -t_hit[pos]], axis=1))
    sols = np.concatenate(rows, axis=0)
    order = np.lexsort((sols[:, 3], sols[:, 2], sols[:, 1], sols[:, 0]))
    sols = sols[order]
    if sols.shape[0] != q + 1:
        raise StructuralError(f"expected {q + 1} quadruples for q = {q}, found {sols.shape[0]}")
    return sols


def _pgl2_enumeration(p: int):
    """Canonical representatives of PGL(2, p): first nonzero entry scaled to 1.

    Returns (entries, code_to_idx, det_residue) where entries is (N, 4) with
    rows (a, b, c, d) for [[a, b], [c, d]], code_to_idx inverts the base-p
    packing of rows, and det_residue flags square determinants.
    """
    if p**4 > 2_000_000_000:
        raise ResourceError(f"p = {p} too large to tabulate projective matrices")
    ar = np.arange(p, dtype=np.int64)
    # a = 1: b, c, d free with d != b c
    b, c, d = np.meshgrid(ar, ar, ar, indexing="ij")
    keep = d != (b * c) % p
    blk1 = np.stack([np.ones(keep.sum(), dtype=np.int64),
                     b[keep], c[keep], d[keep]], axis=1)
    # a = 0, b = 1: c nonzero, d free
    c2, d2 = np.meshgrid(ar[1:], ar, indexing="ij")
    blk2 = np.stack([np.zeros(c2.size, dtype=np.int64),
                     np.ones(c2.size, dtype=np.int64),
                     c2.ravel(), d2.ravel()], axis=1)
    entries = np.concatenate([blk1, blk2], axis=0)
    n_full = p * (p * p - 1)
    if entries.shape[0] != n_full:
        raise StructuralError("projective enumeration miscounted")
    codes = ((entries[:, 0] * p + entries[:, 1]) * p + entries[:, 2]) * p + entries[:, 3]
    code_to_idx = np.full(p**4, -1, dtype=np.int64)
    code_to_idx[codes] = np.arange(n_full)
    dets = (entries[:, 0] * entries[:, 3] - entries[:, 1] * entries[:, 2]) % p
    sq = np.zeros(p, dtype=bool)
    sq[(ar * ar) % p] = True
    det_residue = sq[dets]
    return entries, code_to_idx, det_residue


def _canonicalize_codes(a, b, c, d, p, inv_table):
    """Scale each matrix so its first nonzero entry is 1, then pack base p."""
    s = inv_table[np.where(a != 0, a, b)]
    a = (a * s) % p
    b = (b * s) % p
    c = (c * s) % p
    d = (d * s) % p
    return ((a * p + b) * p + c) * p + d


def lps_graph(p: int, q: int, certify: str = "auto") -> BipartiteExpander:
    """Degree-(q+1) algebraic expander with per-side p(p^2-1)/2 vertices.

    certify: "auto" runs the exact eigensolver when the side fits the dense
    cap and otherwise leaves only the claim; "dense"/"power" force a path;
    "none" skips certification.
    """
    _require_prime_1mod4(p, "p")
    _require_prime_1mod4(q, "q")
    if p == q:
        raise StructuralError("p and q must differ")
    side = p * (p * p - 1) // 2
    if side > cap("EXPANDER_SIDE_CAP"):
        raise ResourceError(
            f"side {side} exceeds cap {cap('EXPANDER_SIDE_CAP')} "
            "(override with GROUPBIAS_EXPANDER_SIDE_CAP)"
        )
    if certify == "auto":
        certify = "dense" if side <= cap("EXPANDER_DENSE_CAP") else "none"
    i_unit = int(sqrt_mod(p - 1, p))
    sols = quaternion_solutions(q)
    g00 = (sols[:, 0] + i_unit * sols[:, 1]) % p
    g01 = (sols[:, 2] + i_unit * sols[:, 3]) % p
    g10 = (-sols[:, 2] + i_unit * sols[:, 3]) % p
    g11 = (sols[:, 0] - i_unit * sols[:, 1]) % p

    entries, code_to_idx, det_residue = _pgl2_enumeration(p)
    inv_table = np.array([0] + [pow(x, -1, p) for x in range(1, p)], dtype=np.int64)
    legendre = int(sympy.legendre_symbol(q, p))
    deg = q + 1
    claimed = 2.0 * math.sqrt(q) / (q + 1)

    if legendre == -1:
        # generators swap determinant classes: bipartite on the full projective group
        u_mask = det_residue
        u_of = np.cumsum(u_mask) - 1
        v_of = np.cumsum(~u_mask) - 1
        if u_mask.sum() != side or (~u_mask).sum() != side:
            raise StructuralError("determinant classes are unbalanced")
        xa, xb = entries[u_mask, 0], entries[u_mask, 1]
        xc, xd = entries[u_mask, 2], entries[u_mask, 3]
        counts = np.zeros((side, side), dtype=np.uint16)
        urange = np.arange(side)
        chunk = max(1, 4_000_000 // side)
        for lo in range(0, deg, chunk):
            hi = min(lo + chunk, deg)
            pa = (xa[None, :] * g00[lo:hi, None] + xb[None, :] * g10[lo:hi, None]) % p
            pb = (xa[None, :] * g01[lo:hi, None] + xb[None, :] * g11[lo:hi, None]) % p
            pc = (xc[None, :] * g00[lo:hi, None] + xd[None, :] * g10[lo:hi, None]) % p
            pd = (xc[None, :] * g01[lo:hi, None] + xd[None, :] * g11[lo:hi, None]) % p
            codes = _canonicalize_codes(pa, pb, pc, pd, p, inv_table)
            targets = code_to_idx[codes]
            if np.any(u_mask[targets]):
                raise StructuralError("generator failed to swap determinant classes")
            for row in range(hi - lo):
                # one generator is a bijection on vertices: no duplicate pairs
                counts[urange, v_of[targets[row]]] += 1
        kind = "lps-bipartite"
    else:
        # generators preserve the residue class: Cayley graph on it, then double
        u_mask = det_residue
        if u_mask.sum() != side:
            raise StructuralError("residue class has unexpected size")
        sub_of = np.cumsum(u_mask) - 1
        xa, xb = entries[u_mask, 0], entries[u_mask, 1]
        xc, xd = entries[u_mask, 2], entries[u_mask, 3]
        adj = np.zeros((side, side), dtype=np.uint16)
        urange = np.arange(side)
        chunk = max(1, 4_000_000 // side)
        for lo in range(0, deg, chunk):
            hi = min(lo + chunk, deg)
            pa = (xa[None, :] * g00[lo:hi, None] + xb[None, :] * g10[lo:hi, None]) % p
            pb = (xa[None, :] * g01[lo:hi, None] + xb[None, :] * g11[lo:hi, None]) % p
            pc = (xc[None, :] * g00[lo:hi, None] + xd[None, :] * g10[lo:hi, None]) % p
            pd = (xc[None, :] * g01[lo:hi, None] + xd[None, :] * g11[lo:hi, None]) % p
            codes = _canonicalize_codes(pa, pb, pc, pd, p, inv_table)
            targets = code_to_idx[codes]
            if np.any(~u_mask[targets]):
                raise StructuralError("generator left the residue class")
            for row in range(hi - lo):
                adj[urange, sub_of[targets[row]]] += 1
        if np.any(adj != adj.T):
            raise StructuralError("undirected multigraph came out asymmetric")
        graph = double_cover(adj)
        graph.kind = "lps-double-cover"
        graph.claimed_lambda = claimed
        graph.meta.update({"p": p, "q": q, "legendre": legendre, "i": i_unit})
        if certify != "none":
            certify_lambda(graph, method=certify)
        return graph

    graph = BipartiteExpander(
        side=side, degree=deg, counts=counts, kind=kind,
        claimed_lambda=claimed,
        meta={"p": p, "q": q, "legendre": legendre, "i": i_unit},
    )
    _validate_regular(graph)
    if certify != "none":
        certify_lambda(graph, method=certify)
    return graph


def double_cover(adj: np.ndarray) -> BipartiteExpander:
    """Bipartite double of a connected non-bipartite regular multigraph.

    The biadjacency of the double is the adjacency itself; its second
    singular value equals the two-sided spectral radius of the base walk,
    and non-bipartiteness keeps it below 1.
    """
    adj = np.asarray(adj)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
        raise StructuralError("adjacency must be square")
    if np.any(adj != adj.T):
        raise StructuralError("adjacency must be symmetric")
    deg = int(adj[0].sum())
    if np.any(adj.sum(axis=1) != deg):
        raise StructuralError("base graph is not regular")
    if not _connected_square(adj):
        raise StructuralError("base graph is disconnected")
    if _is_bipartite_square(adj):
        raise StructuralError("base graph is bipartite; its double would disconnect")
    return BipartiteExpander(
        side=adj.shape[0], degree=deg,
        counts=adj.astype(np.uint16), kind="double-cover",
        claimed_lambda=None,
    )


def _connected_square(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    if n == 0:
        return False
    if adj.min() > 0:
        return True
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    frontier = np.array([0])
    while frontier.size:
        reach = (adj[frontier] > 0).any(axis=0)
        new = reach & ~seen
        seen |= new
        frontier = np.nonzero(new)[0]
    return bool(seen.all())


def _is_bipartite_square(adj: np.ndarray) -> bool:
    if np.any(np.diag(adj) > 0):
        return False  # self-loop: odd cycle
    n = adj.shape[0]
    color = np.full(n, -1, dtype=np.int8)
    color[0] = 0
    frontier = np.array([0])
    while frontier.size:
        nxt = []
        for col in (0, 1):
            rows = frontier[color[frontier] == col]
            if rows.size == 0:
                continue
            reach = (adj[rows] > 0).any(axis=0)
            clash = reach & (color == col)
            if clash.any():
                return False
            new = reach & (color == -1)
            color[new] = 1 - col
            nxt.append(np.nonzero(new)[0])
        frontier = np.concatenate(nxt) if nxt else np.array([], dtype=np.int64)
    return True


def _connected_bipartite(graph: BipartiteExpander) -> bool:
    n = graph.side
    if graph.counts is not None and graph.counts.min() > 0:
        return True
    seen_u = np.zeros(n, dtype=bool)
    seen_v = np.zeros(n, dtype=bool)
    seen_u[0] = True
    frontier_u = np.array([0])
    frontier_v = np.array([], dtype=np.int64)

    def u_to_v(front):
        if graph.counts is not None:
            return (graph.counts[front] > 0).any(axis=0)
        reach = np.zeros(n, dtype=bool)
        for perm in graph.perms:
            reach[perm[front]] = True
        return reach

    def v_to_u(front):
        if graph.counts is not None:
            return (graph.counts[:, front] > 0).any(axis=1)
        reach = np.zeros(n, dtype=bool)
        for iperm in graph._inverse_perms():
            reach[iperm[front]] = True
        return reach

    while frontier_u.size or frontier_v.size:
        if frontier_u.size:
            new = u_to_v(frontier_u) & ~seen_v
            seen_v |= new
            frontier_v = np.nonzero(new)[0]
        else:
            frontier_v = np.array([], dtype=np.int64)
        if frontier_v.size:
            new = v_to_u(frontier_v) & ~seen_u
            seen_u |= new
            frontier_u = np.nonzero(new)[0]
        else:
            frontier_u = np.array([], dtype=np.int64)
    return bool(seen_u.all() and seen_v.all())


def _validate_regular(graph: BipartiteExpander):
    if graph.perms is not None:
        d, n = graph.perms.shape
        if n != graph.side or d != graph.degree:
            raise StructuralError("matching array shape disagrees with side/degree")
        idx = np.arange(n)
        for perm in graph.perms:
            if not np.array_equal(np.sort(perm), idx):
                raise StructuralError("matching row is not a permutation")
        return
    rs = graph.counts.sum(axis=1, dtype=np.int64)
    cs = graph.counts.sum(axis=0, dtype=np.int64)
    if np.any(rs != graph.degree) or np.any(cs != graph.degree):
        raise StructuralError("graph is not biregular of the declared degree")


def certify_lambda(graph: BipartiteExpander, method: str = "auto", seed: int = 0):
    """Compute and store the certified second singular value of counts/degree.

    Dense path: full SVD, exact up to floating point. Power path: Lanczos
    iteration on the deflated T^T T (sparse matvecs when the graph is
    sparse), reporting theta + residual; the residual is stored on the
    graph. Regularity and connectivity are verified first.

    Returns the graph, mutated in place.
    """
    _validate_regular(graph)
    if not _connected_bipartite(graph):
        raise StructuralError("bipartite graph is disconnected")
    n, d = graph.side, graph.degree
    if method == "auto":
        method = "dense" if n <= cap("EXPANDER_DENSE_CAP") else "power"
    if method == "dense":
        if n > cap("EXPANDER_DENSE_CAP"):
            raise ResourceError(f"side {n} exceeds the dense certification cap")
        sv = np.linalg.svd(graph.counts_matrix().astype(np.float64) / d,
                           compute_uv=False)
        if abs(sv[0] - 1.0) > 1e-9:
            raise CertificationError(f"top singular value {sv[0]} is not 1")
        lam = float(min(1.0, sv[1])) if n > 1 else 0.0
        graph.certified_lambda = lam
        graph.certification = "exact-eigensolve"
        graph.residual = 0.0
        return graph
    if method != "power":
        raise StructuralError(f"unknown certification method {method!r}")

    if graph.counts is not None and np.all(graph.counts == graph.counts.flat[0]):
        # uniform biadjacency: the deflated operator is identically zero
        graph.certified_lambda = 0.0
        graph.certification = "exact-structure"
        graph.residual = 0.0
        return graph

    if graph.counts is not None and np.count_nonzero(graph.counts) / (n * n) <= 0.05:
        T = scipy.sparse.csr_matrix(graph.counts.astype(np.float64) / d)
        Tt = T.T.tocsr()
        mv = T.dot
        rmv = Tt.dot
    else:
        mv = graph.matvec
        rmv = graph.rmatvec

    def apply_m2(y):
        y = y - y.mean()
        w = rmv(mv(y))
        return w - w.mean()

    rng = np.random.default_rng(_LANCZOS_SEED + seed)
    v0 = rng.standard_normal(n)
    v0 -= v0.mean()
    op = scipy.sparse.linalg.LinearOperator((n, n), matvec=apply_m2)
    try:
        vals, vecs = scipy.sparse.linalg.eigsh(
            op, k=1, which="LA", v0=v0, tol=1e-13, maxiter=50 * n
        )
        y = vecs[:, 0]
    except scipy.sparse.linalg.ArpackNoConvergence:
        y = v0 / np.linalg.norm(v0)
    # polish and certify with an explicit residual
    theta, resid = 0.0, np.inf
    for _ in range(POWER_MAX_ITER):
        y = y - y.mean()
        nrm = np.linalg.norm(y)
        if nrm < 1e-300:
            theta, resid = 0.0, 0.0
            break
        y /= nrm
        w = apply_m2(y)
        theta = float(y @ w)
        resid = float(np.linalg.norm(w - theta * y))
        if resid <= POWER_RESIDUAL:
            break
        wn = np.linalg.norm(w)
        if wn < 1e-300:
            theta, resid = 0.0, 0.0
            break
        y = w / wn
    if resid > POWER_RESIDUAL:
        raise CertificationError(
            f"power iteration stalled at residual {resid:.3e} for side {n}"
        )
    lam = float(min(1.0, math.sqrt(max(0.0, theta + resid))))
    graph.certified_lambda = lam
    graph.certification = "power-iteration"
    graph.residual = resid
    return graph


def random_regular_bipartite(side: int, degree: int, target_lambda: float,
                             seed: int = 0, budget: int = 8) -> BipartiteExpander:
    """Union of `degree` uniform perfect matchings, retried until certified.

    When degree is a multiple of side, the uniform complete multigraph is
    returned instead: it has lambda exactly 0 and no randomness is needed.
    Raises SearchBudgetError (carrying the best attempt) when no sample
    certifies at or below target_lambda within the budget.
    """
    if side < 1 or degree < 1:
        raise StructuralError("side and degree must be positive")
    if degree >= 65535:
        raise ResourceError("degree too large for the multiplicity dtype")
    if not (0 <= target_lambda <= 1):
        raise StructuralError("target lambda must lie in [0, 1]")
    if degree % side == 0:
        if side > 4 * cap("EXPANDER_DENSE_CAP"):
            raise ResourceError(f"complete multigraph on side {side} is too large")
        counts = np.full((side, side), degree // side, dtype=np.uint16)
        graph = BipartiteExpander(side=side, degree=degree, counts=counts,
                                  kind="complete", claimed_lambda=0.0,
                                  meta={"seed": None})
        return certify_lambda(graph, method="auto" if side <= cap("EXPANDER_DENSE_CAP")
                              else "power")
    rng = np.random.default_rng(seed)
    dense_store = side <= cap("EXPANDER_DENSE_CAP")
    best = None
    for attempt in range(budget):
        if dense_store:
            counts = np.zeros((side, side), dtype=np.uint16)
            rows = np.arange(side)
            for _ in range(degree):
                counts[rows, rng.permutation(side)] += 1
            graph = BipartiteExpander(side=side, degree=degree, counts=counts,
                                      kind="random-matchings",
                                      claimed_lambda=target_lambda,
                                      meta={"seed": seed, "attempt": attempt})
        else:
            perms = np.empty((degree, side), dtype=np.int32)
            for j in range(degree):
                perms[j] = rng.permutation(side)
            graph = BipartiteExpander(side=side, degree=degree, perms=perms,
                                      kind="random-matchings",
                                      claimed_lambda=target_lambda,
                                      meta={"seed": seed, "attempt": attempt})
        try:
            certify_lambda(graph)
        except (StructuralError, CertificationError):
            continue  # disconnected or degenerate sample: resample
        if best is None or graph.certified_lambda < best.certified_lambda:
            best = graph
        if graph.certified_lambda <= target_lambda:
            return graph
    raise SearchBudgetError(
        f"no degree-{degree} sample on side {side} certified lambda <= "
        f"{target_lambda} in {budget} attempts "
        f"(best {best.certified_lambda if best else float('nan'):.6f})",
        best=best,
    )


def find_primes(min_side: int, max_lambda: float, unbounded: bool = False):
    """Smallest admissible (p, q), both prime and 1 mod 4, with
    p(p^2-1)/2 >= min_side and 2 sqrt(q)/(q+1) <= max_lambda.

    The two are chosen independently; callers that need p != q bump one.
    `unbounded` lifts the prime search cap for planning arithmetic that never
    constructs the graph.
    """
    if min_side < 1:
        raise StructuralError("min_side must be >= 1")
    if not (0 < max_lambda <= 1):
        raise StructuralError("max_lambda must lie in (0, 1]")
    # 4q <= lambda^2 (q+1)^2, in exact integer arithmetic for huge plans
    lam_num, lam_den = float(max_lambda).as_integer_ratio()
    # start below the analytic threshold; every admissible value exceeds it
    p = max(2, int(round((2 * min_side) ** (1 / 3))) - 2) if min_side < 10**15 else \
        sympy.integer_nthroot(2 * min_side, 3)[0] - 2
    while True:
        p = int(sympy.nextprime(p))
        if not unbounded and p > cap("PRIME_SEARCH_CAP"):
            raise ResourceError("prime search for p exceeded the cap")
        if p % 4 == 1 and p * (p * p - 1) // 2 >= min_side:
            break
    # the q threshold sits in [4/lambda^2 - 2.2, 4/lambda^2] once lambda <= 0.1,
    # so a fixed offset below the ratio cannot skip an admissible prime
    q_approx = 4 * lam_den * lam_den // (lam_num * lam_num)
    q = 2 if q_approx < 10**6 else q_approx - 8
    while True:
        q = int(sympy.nextprime(q))
        if not unbounded and q > cap("PRIME_SEARCH_CAP"):
            raise ResourceError("prime search for q exceeded the cap")
        if q % 4 == 1 and 4 * q * lam_den * lam_den <= lam_num * lam_num * (q + 1) ** 2:
            break
    return p, q


def write_expander(graph: BipartiteExpander, path: str) -> int:
    """Edge list with header "bipartite <side> <degree> <lambda>"; u v per line,
    multiplicities as repeated lines, sorted by (u, v). Returns line count."""
    total = graph.side * graph.degree
    if total > cap("EDGE_FILE_CAP"):
        raise ResourceError(f"{total} edges exceed the edge file cap")
    lam = graph.best_lambda
    u, v, m = graph.edge_triples()
    with open(path, "w") as fh:
        fh.write(f"bipartite {graph.side} {graph.degree} {lam:.12g}\n")
        uu = np.repeat(u, m)
        vv = np.repeat(v, m)
        fh.write("\n".join(f"{a} {b}" for a, b in zip(uu, vv)))
        fh.write("\n")
    return total


def read_expander(path: str) -> BipartiteExpander:
    """Rebuild a graph from an edge file. The header lambda is recorded as a
    claim only; certification must be re-run to trust it."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "bipartite":
            raise StructuralError("not a bipartite edge file")
        side, degree = int(header[1]), int(header[2])
        lam = float(header[3])
        if side * degree > cap("EDGE_FILE_CAP"):
            raise ResourceError("edge file too large")
        counts = np.zeros((side, side), dtype=np.uint16)
        n_lines = 0
        for line in fh:
            if not line.strip():
                continue
            a, b = line.split()
            counts[int(a), int(b)] += 1
            n_lines += 1
    if n_lines != side * degree:
        raise StructuralError(f"expected {side * degree} edges, found {n_lines}")
    graph = BipartiteExpander(side=side, degree=degree, counts=counts,
                              kind="file", claimed_lambda=lam)
    _validate_regular(graph)
    return graph
