"""Spectral certification of bias via the regular representation.

The walk matrix of a multiset S over G is M[x, y] = w(s : y = s x), the
left-multiplication random walk. Its restriction to the complement of the
all-ones vector has operator norm exactly the bias of S: the regular
representation contains every irreducible, so no separate per-irrep check
is needed. Sets are generally not closed under inverses, hence the norm is
a largest singular value, not an eigenvalue; a symmetrized eigenvalue mode
exists for callers who explicitly want the Hermitian part.

Two certification paths: exact dense SVD up to the dense cap, and power
iteration on R^T R (with the ones direction deflated) above it. The power
path reports theta + residual, which upper-bounds the dominant eigenvalue
once the iterate has converged to it; convergence is assumed for generic
starts and is cross-checked against the dense path in the test suite.
"""

from __future__ import annotations

import numpy as np

from .errors import CertificationError, ResourceError, StructuralError
from .groups import DirectProductGroup, FiniteGroup
from .limits import POWER_MAX_ITER, POWER_RESIDUAL, SOUNDNESS_TOL, cap
from .sets import BiasedSet

_POWER_SEED = 46337


class WalkOperator:
    """Matrix-free M and M^T applications for a weighted element multiset."""

    def __init__(self, group: FiniteGroup, values, counts=None):
        values = np.asarray(values, dtype=np.int64)
        if counts is None:
            values, counts = np.unique(values, return_counts=True)
        else:
            counts = np.asarray(counts, dtype=np.int64)
        self.group = group
        self.values = values
        self.weights = counts.astype(np.float64) / counts.sum()
        self._perms = None
        self._iperms = None

    def _ensure_perms(self):
        if self._perms is not None:
            return
        n, k = self.group.order, self.values.size
        if n * k > 268_435_456:
            raise ResourceError(f"walk permutations need {n * k} entries; too large")
        idx = np.arange(n, dtype=np.int64)
        self._perms = self.group.mul_vec(self.values[:, None], idx[None, :])
        inv_vals = self.group.inv_vec(self.values)
        self._iperms = self.group.mul_vec(inv_vals[:, None], idx[None, :])

    def dense(self) -> np.ndarray:
        n = self.group.order
        if n > cap("DENSE_VERIFY_CAP"):
            raise ResourceError(f"order {n} exceeds the dense cap")
        self._ensure_perms()
        M = np.zeros((n, n))
        rows = np.arange(n)
        for perm, w in zip(self._perms, self.weights):
            M[rows, perm] += w
        return M

    def matvec(self, z: np.ndarray) -> np.ndarray:
        """(M z)[x] = sum_s w_s z[s x]."""
        self._ensure_perms()
        out = np.zeros_like(z, dtype=np.float64)
        for perm, w in zip(self._perms, self.weights):
            out += w * z[perm]
        return out

    def rmatvec(self, z: np.ndarray) -> np.ndarray:
        """(M^T z)[y] = sum_s w_s z[s^-1 y]."""
        self._ensure_perms()
        out = np.zeros_like(z, dtype=np.float64)
        for iperm, w in zip(self._iperms, self.weights):
            out += w * z[iperm]
        return out


def walk_matrix(G: FiniteGroup, S: BiasedSet) -> np.ndarray:
    if S.group.descriptor != G.descriptor:
        raise StructuralError("set and group disagree")
    vals, cnts = S.element_counts()
    return WalkOperator(G, vals, cnts).dense()


def _power_extreme(apply_B, n: int, label: str) -> float:
    """theta + residual for the dominant eigenvalue of symmetric PSD B restricted
    to the complement of the ones vector. apply_B must already deflate."""
    rng = np.random.default_rng(_POWER_SEED)
    y = rng.standard_normal(n)
    y -= y.mean()
    norm = np.linalg.norm(y)
    if norm == 0:
        return 0.0
    y /= norm
    for _ in range(POWER_MAX_ITER):
        w = apply_B(y)
        theta = float(y @ w)
        resid = float(np.linalg.norm(w - theta * y))
        if resid <= POWER_RESIDUAL:
            return max(0.0, theta + resid)
        wn = np.linalg.norm(w)
        if wn < 1e-300:
            return 0.0  # operator annihilates the complement
        y = w / wn
        y -= y.mean()
        n2 = np.linalg.norm(y)
        if n2 < 1e-300:
            return 0.0
        y /= n2
    raise CertificationError(f"power iteration did not converge for {label}")


def bias_spectral(G: FiniteGroup, S: BiasedSet, mode: str = "singular",
                  method: str = "auto") -> float:
    """Bias of S as the norm of the walk matrix off the constants.

    mode "singular" is the true bias. mode "symmetrized" measures the
    Hermitian part (M + M^T)/2 instead, the quantity that governs lazy
    two-sided walks; it is never larger. method forces the dense or the
    matrix-free path; "auto" picks by group order.
    """
    if mode not in ("singular", "symmetrized"):
        raise StructuralError(f"unknown mode {mode!r}")
    if method not in ("auto", "dense", "power"):
        raise StructuralError(f"unknown method {method!r}")
    n = G.order
    if n == 1:
        return 0.0
    vals, cnts = S.element_counts()
    op = WalkOperator(G, vals, cnts)
    use_dense = (n <= cap("DENSE_VERIFY_CAP")) if method == "auto" else method == "dense"
    if use_dense:
        if n > cap("DENSE_VERIFY_CAP"):
            raise ResourceError(f"order {n} exceeds the dense cap")
        R = op.dense() - 1.0 / n
        if mode == "singular":
            return float(min(1.0, np.linalg.svd(R, compute_uv=False)[0]))
        H = (R + R.T) / 2.0
        return float(min(1.0, np.max(np.abs(np.linalg.eigvalsh(H)))))
    if n > cap("ITER_VERIFY_CAP"):
        raise ResourceError(
            f"order {n} exceeds the iterative cap {cap('ITER_VERIFY_CAP')}"
        )

    def R_apply(z):
        return op.matvec(z) - z.mean()

    def RT_apply(z):
        return op.rmatvec(z) - z.mean()

    if mode == "singular":
        def B(y):
            w = RT_apply(R_apply(y))
            return w - w.mean()
        val = _power_extreme(B, n, "R^T R")
    else:
        def H(y):
            return (R_apply(y) + RT_apply(y)) / 2.0

        def B(y):
            w = H(H(y))
            return w - w.mean()
        val = _power_extreme(B, n, "H^2")
    return float(min(1.0, np.sqrt(val)))


def certify_set(S: BiasedSet, mode: str = "singular", method: str = "auto") -> BiasedSet:
    """Certify a set's bias and enforce its claim.

    method "auto" picks dense SVD or power iteration by group order;
    "dense"/"power" force that path; "character" routes through the exact
    character oracle (abelian only). A "bound" claim that fails by more
    than the soundness tolerance raises CertificationError. "reference"
    claims are informational and never gate.
    """
    if method == "character":
        from .abelian import char_bias_exact

        bias = char_bias_exact(S)
        tag = "character-enumeration"
    elif method in ("auto", "dense", "power"):
        bias = bias_spectral(S.group, S, mode=mode, method=method)
        dense = (S.group.order <= cap("DENSE_VERIFY_CAP")
                 if method == "auto" else method == "dense")
        tag = "dense-svd" if dense else "power-iteration"
        if mode == "symmetrized":
            tag += "-symmetrized"
    else:
        raise StructuralError(f"unknown method {method!r}")
    if S.claim_kind == "bound" and bias > S.claimed_bias + SOUNDNESS_TOL:
        raise CertificationError(
            f"claimed bias {S.claimed_bias:.9g} but certified {bias:.9g} "
            f"(method {tag})"
        )
    return S.with_certificate(bias, tag)


def lemma3_projection_norm(G: FiniteGroup) -> float:
    """Norm, off the constants, of the average over g of the projection onto
    powers of g. Equals the probability that a uniform pair (g, t) lands in
    each element's fiber; the totient bound 1 - phi(n)/n caps it for cyclic
    groups and the test suite checks that inequality family.
    """
    n = G.order
    if n == 1:
        return 0.0
    if n > cap("DENSE_VERIFY_CAP"):
        raise ResourceError(f"order {n} exceeds the dense cap")
    P = G.power_matrix()  # P[t, g] = g^t
    w = np.bincount(P.ravel(), minlength=n).astype(np.float64) / (n * n)
    M = np.zeros((n, n))
    rows = np.arange(n)
    for h in np.nonzero(w)[0]:
        M[rows, G.mul_vec(np.int64(h), rows)] += w[h]
    B = M - 1.0 / n
    skew = np.max(np.abs(B - B.T))
    assert skew < 1e-12, "projection average should be symmetric"
    return float(np.max(np.abs(np.linalg.eigvalsh((B + B.T) / 2.0))))


def mz_readonce_check(G: FiniteGroup, n: int, T: BiasedSet,
                      samples: int | None = None, seed: int = 0) -> float:
    """Max total-variation-style deviation of masked subproducts of T from uniform.

    For a mask I of coordinates, folds the I-coordinates of every tuple in T
    through G's multiplication in index order and compares the resulting
    distribution on G to uniform in sup norm. Enumerates all 2^n - 1 masks
    when feasible, otherwise samples them.
    """
    pg = T.group
    if not isinstance(pg, DirectProductGroup) or len(pg.factors) != n:
        raise StructuralError(f"expected a set over a {n}-fold product group")
    for f in pg.factors:
        if f.descriptor != G.descriptor:
            raise StructuralError("product factors must all equal the base group")
    values, counts = T.element_counts()
    parts = pg.decode(values)  # list of n coordinate arrays
    w = counts.astype(np.float64)
    total_masks = (1 << n) - 1
    if samples is None or total_masks <= samples:
        masks = np.arange(1, total_masks + 1, dtype=np.int64)
    else:
        rng = np.random.default_rng(seed)
        masks = rng.integers(1, total_masks + 1, size=samples, dtype=np.int64)
    gorder = G.order
    worst = 0.0
    for mask in masks:
        acc = None
        for i in range(n):
            if (int(mask) >> i) & 1:
                col = parts[i]
                acc = col if acc is None else G.mul_vec(acc, col)
        dist = np.bincount(acc, weights=w, minlength=gorder) / T.size
        dev = float(np.max(np.abs(dist - 1.0 / gorder)))
        worst = max(worst, dev)
    return worst


def alon_roichman_sample(G: FiniteGroup, k: int, seed: int = 0):
    """k i.i.d. uniform elements; returns the set and its measured bias."""
    if k < 1:
        raise StructuralError("sample size must be >= 1")
    rng = np.random.default_rng(seed)
    vals = rng.integers(0, G.order, size=k, dtype=np.int64)
    S = BiasedSet(
        group=G,
        values=vals,
        claimed_bias=1.0,
        claim_kind="reference",
        seed=seed,
        provenance=[{"op": "alon-roichman-sample", "k": k, "seed": seed}],
    )
    measured = bias_spectral(G, S)
    S = S.with_certificate(measured, "dense-svd" if G.order <= cap("DENSE_VERIFY_CAP")
                           else "power-iteration")
    return S, measured


def export_cayley(G: FiniteGroup, S: BiasedSet, path: str, symmetrize: bool = False) -> int:
    """Write the directed Cayley edge list x -> s x, one line per edge.

    Header line: "cayley <order> <multiset size>". With symmetrize, edges for
    S and S^-1 both appear (the undirected double), and the header size
    reflects the doubled multiset. Returns the number of edge lines.
    """
    vals, cnts = S.element_counts()
    if symmetrize:
        iv = G.inv_vec(vals)
        vals = np.concatenate([vals, iv])
        cnts = np.concatenate([cnts, cnts])
    size = int(cnts.sum())
    n = G.order
    if n * size > cap("EDGE_FILE_CAP"):
        raise ResourceError(f"{n * size} edges exceed the edge file cap")
    xs = np.arange(n, dtype=np.int64)
    with open(path, "w") as fh:
        fh.write(f"cayley {n} {size}\n")
        for s, c in zip(vals, cnts):
            ys = G.mul_vec(np.int64(s), xs)
            block = "\n".join(f"{x} {y}" for x, y in zip(xs, ys))
            for _ in range(int(c)):
                fh.write(block + "\n")
    return n * size


def bias_from_cayley_file(path: str) -> float:
    """Recompute bias from an exported edge list; the round-trip oracle."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != "cayley":
            raise StructuralError("not a cayley edge file")
        n, size = int(header[1]), int(header[2])
        if n > cap("DENSE_VERIFY_CAP"):
            raise ResourceError(f"order {n} exceeds the dense cap")
        M = np.zeros((n, n))
        count = 0
        for line in fh:
            if not line.strip():
                continue
            x, y = line.split()
            M[int(x), int(y)] += 1.0
            count += 1
    if count != n * size:
        raise StructuralError(f"expected {n * size} edges, found {count}")
    row_sums = M.sum(axis=1)
    if not np.all(row_sums == size):
        raise StructuralError("edge list is not out-regular")
    R = M / size - 1.0 / n
    return float(min(1.0, np.linalg.svd(R, compute_uv=False)[0]))
