"""Randomized stress tests for the inequality families the constructions lean on.

Three families are exercised: bilinear expander-mixing bounds on vectors
(exact-mean and sloppy-mean versions), their operator and tensor analogues
for matrix-valued assignments, and the scalar tail bounds (operator product
norms, and the supermartingale tail). Every check draws adversarial-ish
random instances, evaluates both sides, and counts violations beyond a
tolerance; probabilistic bounds get a three-standard-error cushion and
points whose bound is vacuous (at or above 1) are flagged rather than
asserted.

A report never hides a failure: `violations` is the count, `max_slack` the
worst margin, and `passed` just says violations == 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import StructuralError
from .expanders import BipartiteExpander
from .limits import LEMMA_TOL


@dataclass
class HarnessReport:
    check: str
    trials: int
    violations: int
    max_slack: float
    seed: int
    empirical_tail: float | None = None
    parameters: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_payload(self) -> dict:
        return {
            "kind": "harness-report",
            "check": self.check,
            "trials": self.trials,
            "violations": self.violations,
            "max_slack": self.max_slack,
            "empirical_tail": self.empirical_tail,
            "passed": self.passed,
            "seed": self.seed,
            "parameters": self.parameters,
        }


def _require_exact(graph: BipartiteExpander) -> float:
    if graph.certification != "exact-eigensolve":
        raise StructuralError(
            "harness checks need an exactly certified graph; run the dense "
            "certifier first"
        )
    return graph.certified_lambda


def edge_mean_vector(graph: BipartiteExpander, XU: np.ndarray, XV: np.ndarray) -> complex:
    """E over edges of <x_u, y_v>, with the U side conjugated."""
    C = graph.counts_matrix().astype(np.float64)
    total = graph.side * graph.degree
    return complex(np.sum(np.conj(XU) * (C @ XV)) / total)


def edge_mean_operator(graph: BipartiteExpander, XU: np.ndarray, XV: np.ndarray,
                       tensor: bool = False) -> np.ndarray:
    """E over edges of X_u Y_v (or X_u tensor Y_v), matrices stacked on axis 0."""
    C = graph.counts_matrix().astype(np.float64)
    n, dim = XU.shape[0], XU.shape[1]
    total = graph.side * graph.degree
    # T1[v] = sum_u C[u, v] X_u, via one flat matmul
    T1 = (C.T @ XU.reshape(n, dim * dim)).reshape(n, dim, dim)
    if tensor:
        out = np.einsum("vij,vkl->ikjl", T1, XV).reshape(dim * dim, dim * dim)
    else:
        out = np.einsum("vij,vjk->ik", T1, XV)
    return out / total


def _opnorm(M: np.ndarray) -> float:
    return float(np.linalg.svd(M, compute_uv=False)[0])


def rayleigh_vector_check(graph: BipartiteExpander, trials: int = 1000,
                          seed: int = 0, dim: int = 8) -> HarnessReport:
    """Bilinear edge means against lambda, for complex vector assignments.

    Two inequalities per trial: the mean-zero form
        |E_edges <x_u, y_v>| <= lambda * E_{U union V} |x|^2,
    and the sloppy form that charges the side means eps_U, eps_V instead of
    subtracting them:
        |E_edges <x_u, y_v>| <= lambda (E|x|^2 - eps_U^2/2 - eps_V^2/2)
                                + eps_U eps_V.
    """
    lam = _require_exact(graph)
    n, d = graph.side, graph.degree
    C = graph.counts_matrix().astype(np.float64)
    total = n * d
    violations = 0
    v_zero = v_sloppy = 0
    max_slack = -math.inf
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        Z = (rng.standard_normal((2 * n, dim)) + 1j * rng.standard_normal((2 * n, dim)))
        Z /= math.sqrt(2 * dim)
        XU, XV = Z[:n], Z[n:]
        # mean-zero form
        XU0 = XU - XU.mean(axis=0)
        XV0 = XV - XV.mean(axis=0)
        lhs0 = abs(np.sum(np.conj(XU0) * (C @ XV0)) / total)
        rhs0 = lam * (np.sum(np.abs(XU0) ** 2) + np.sum(np.abs(XV0) ** 2)) / (2 * n)
        slack0 = lhs0 - rhs0
        # sloppy form
        mu = XU.mean(axis=0)
        mv = XV.mean(axis=0)
        eps_u = float(np.linalg.norm(mu))
        eps_v = float(np.linalg.norm(mv))
        lhs1 = abs(np.sum(np.conj(XU) * (C @ XV)) / total)
        energy = (np.sum(np.abs(XU) ** 2) + np.sum(np.abs(XV) ** 2)) / (2 * n)
        rhs1 = lam * (energy - eps_u**2 / 2 - eps_v**2 / 2) + eps_u * eps_v
        slack1 = lhs1 - rhs1
        if slack0 > LEMMA_TOL:
            v_zero += 1
        if slack1 > LEMMA_TOL:
            v_sloppy += 1
        max_slack = max(max_slack, slack0, slack1)
    violations = v_zero + v_sloppy
    return HarnessReport(
        check="rayleigh-vector", trials=trials, violations=violations,
        max_slack=max_slack, seed=seed,
        parameters={"side": n, "degree": d, "lambda": lam, "dim": dim,
                    "tolerance": LEMMA_TOL,
                    "violations_zero_mean": v_zero,
                    "violations_sloppy": v_sloppy},
    )


def _random_contractions(rng, n: int, dim: int, kind: str) -> np.ndarray:
    """A stack of n complex dim x dim matrices of operator norm <= 1."""
    Z = rng.standard_normal((n, dim, dim)) + 1j * rng.standard_normal((n, dim, dim))
    if kind == "haar":
        Q, R = np.linalg.qr(Z)
        ph = np.diagonal(R, axis1=1, axis2=2).copy()
        ph /= np.abs(ph)
        U = Q * ph[:, None, :]
        scale = rng.uniform(0.5, 1.0, size=n)
        return U * scale[:, None, None]
    # normalized Gaussian: divide by the top singular value, then shrink
    smax = np.linalg.svd(Z, compute_uv=False)[:, 0]
    scale = rng.uniform(0.0, 1.0, size=n)
    return Z * (scale / smax)[:, None, None]


def rayleigh_operator_check(graph: BipartiteExpander, trials: int = 200,
                            seed: int = 0, dim: int = 8,
                            tensor: bool = True) -> HarnessReport:
    """Operator-valued edge means: for contractions X_u, Y_v,
        ||E_edges X_u Y_v|| <= lambda + (1 - lambda) eps_U eps_V,
    where eps_U = ||E_u X_u||, eps_V = ||E_v Y_v||; the same right side also
    dominates the tensor mean ||E_edges X_u (x) Y_v||. Trials alternate
    scaled Haar unitaries with norm-clipped Gaussian matrices.
    """
    lam = _require_exact(graph)
    n, d = graph.side, graph.degree
    C = graph.counts_matrix().astype(np.float64)
    total = n * d
    violations = 0
    v_prod = v_tens = 0
    max_slack = -math.inf
    for t in range(trials):
        rng = np.random.default_rng([seed + 1, t])
        kind = "haar" if t % 2 == 0 else "gaussian"
        XU = _random_contractions(rng, n, dim, kind)
        XV = _random_contractions(rng, n, dim, kind)
        eps_u = _opnorm(XU.mean(axis=0))
        eps_v = _opnorm(XV.mean(axis=0))
        rhs = lam + (1 - lam) * eps_u * eps_v
        # T1[v] = sum_u C[u,v] X_u, shared by the product and tensor forms
        T1 = (C.T @ XU.reshape(n, dim * dim)).reshape(n, dim, dim)
        lhs_p = _opnorm(np.einsum("vij,vjk->ik", T1, XV) / total)
        slack_p = lhs_p - rhs
        if slack_p > LEMMA_TOL:
            v_prod += 1
        max_slack = max(max_slack, slack_p)
        if tensor:
            mean_t = np.einsum("vij,vkl->ikjl", T1, XV).reshape(dim * dim, -1)
            lhs_t = _opnorm(mean_t / total)
            slack_t = lhs_t - rhs
            if slack_t > LEMMA_TOL:
                v_tens += 1
            max_slack = max(max_slack, slack_t)
    violations = v_prod + v_tens
    return HarnessReport(
        check="rayleigh-operator", trials=trials, violations=violations,
        max_slack=max_slack, seed=seed,
        parameters={"side": n, "degree": d, "lambda": lam, "dim": dim,
                    "tensor": tensor, "tolerance": LEMMA_TOL,
                    "violations_product": v_prod,
                    "violations_tensor": v_tens},
    )


def operator_product_tail(k: int, delta: float, dim: int, trials: int = 10000,
                          seed: int = 0, deltas=None) -> HarnessReport:
    """Tail of ||P_k ... P_1|| for i.i.d. PSD contractions with E P = (1-delta) I.

    Each P is U D U* for Haar U and the fixed diagonal D with a single unit
    eigenvalue, chosen so the mean is exact. The sweep checks, for shifts
    Delta in [0, k delta / 2],
        Pr[||product|| >= sqrt(dim) e^{-k delta/2 + Delta}]
            <= dim e^{-Delta^2 / (2 k ln 2)},
    and the headline point Delta = k delta / 3 also against the rounded
    form dim e^{-k delta^2 / 13}. Vacuous bounds (>= 1) are reported but
    not asserted; at desk-scale k the operator form is usually vacuous
    throughout, so each sweep point also checks the per-vector tail the
    operator bound is unioned from,
        Pr[||product e_1|| >= e^{-k delta/2 + Delta}]
            <= e^{-Delta^2 / (2 k ln 2)},
    which has no dimension prefactor and bites at every Delta > 0.
    """
    if k < 1 or dim < 1:
        raise StructuralError("need k >= 1 and dim >= 1")
    if not (0 < delta < 1):
        raise StructuralError("delta must lie in (0, 1)")
    if dim > 1:
        v = (dim * (1 - delta) - 1) / (dim - 1)
        if v < 0:
            raise StructuralError(
                f"delta {delta} too large for dim {dim}: the mean is not "
                "reachable with a unit top eigenvalue"
            )
        D = np.concatenate([[1.0], np.full(dim - 1, v)])
    else:
        D = np.array([1.0 - delta])
    rng = np.random.default_rng(seed)
    norms = np.empty(trials)
    vnorms = np.empty(trials)
    chunk = max(1, min(trials, 4_194_304 // max(1, k * dim * dim)))
    for lo in range(0, trials, chunk):
        hi = min(lo + chunk, trials)
        c = hi - lo
        if dim == 1:
            norms[lo:hi] = (1 - delta) ** k
            vnorms[lo:hi] = (1 - delta) ** k
            continue
        Z = (rng.standard_normal((c * k, dim, dim))
             + 1j * rng.standard_normal((c * k, dim, dim)))
        Q, R = np.linalg.qr(Z)
        ph = np.diagonal(R, axis1=1, axis2=2).copy()
        ph /= np.abs(ph)
        U = (Q * ph[:, None, :]).reshape(c, k, dim, dim)
        P = (U * D[None, None, None, :]) @ np.conj(np.swapaxes(U, -1, -2))
        M = P[:, 0]
        for i in range(1, k):
            M = P[:, i] @ M
        norms[lo:hi] = np.linalg.svd(M, compute_uv=False)[:, 0]
        vnorms[lo:hi] = np.linalg.norm(M[:, :, 0], axis=1)

    if deltas is None:
        deltas = sorted(set(np.linspace(0.0, k * delta / 2, 7).tolist()
                            + [k * delta / 3]))
    headline = k * delta / 3
    sweep = []
    violations = 0
    max_slack = -math.inf
    emp_headline = None
    for dd in deltas:
        decay = math.exp(-dd * dd / (2 * k * math.log(2)))
        thresh = math.sqrt(dim) * math.exp(-k * delta / 2 + dd)
        bound = dim * decay
        emp = float(np.mean(norms >= thresh))
        se = math.sqrt(max(emp * (1 - emp), 1e-12) / trials)
        vacuous = bound >= 1.0
        ok = vacuous or emp <= bound + 3 * se
        # per-vector form: no dimension factor on either side
        v_thresh = math.exp(-k * delta / 2 + dd)
        v_emp = float(np.mean(vnorms >= v_thresh))
        v_se = math.sqrt(max(v_emp * (1 - v_emp), 1e-12) / trials)
        v_vacuous = decay >= 1.0
        v_ok = v_vacuous or v_emp <= decay + 3 * v_se
        if not ok:
            violations += 1
        if not v_ok:
            violations += 1
        if not vacuous:
            max_slack = max(max_slack, emp - bound)
        if not v_vacuous:
            max_slack = max(max_slack, v_emp - decay)
        sweep.append({"delta_shift": float(dd), "threshold": thresh,
                      "bound": bound, "empirical": emp, "se": se,
                      "vacuous": vacuous, "ok": bool(ok),
                      "vector_threshold": v_thresh, "vector_bound": decay,
                      "vector_empirical": v_emp, "vector_vacuous": v_vacuous,
                      "vector_ok": bool(v_ok)})
        if math.isclose(dd, headline):
            emp_headline = emp
            rounded = dim * math.exp(-k * delta * delta / 13)
            if not (rounded >= 1.0) and emp > rounded + 3 * se:
                violations += 1
    if max_slack == -math.inf:
        max_slack = 0.0
    return HarnessReport(
        check="operator-tail", trials=trials, violations=violations,
        max_slack=max_slack, seed=seed, empirical_tail=emp_headline,
        parameters={"k": k, "delta": delta, "dim": dim,
                    "headline_threshold": math.sqrt(dim) * math.exp(-k * delta / 6),
                    "headline_bound": dim * math.exp(-k * delta * delta / 13),
                    "sweep": sweep},
    )


def azuma_supermartingale_check(T: int, alpha, eps, trials: int = 20000,
                                seed: int = 0, lambdas=None,
                                mode: str = "bernoulli") -> HarnessReport:
    """Supermartingale tail: increments in [-alpha_i, 0] with mean -eps_i give
        Pr[X_T >= -sum eps + lam] <= exp(-lam^2 / (2 sum alpha)),
    valid for alpha_i <= 1 (the quadratic variation is then dominated by
    sum alpha). Bernoulli mode takes the extreme two-point increments;
    uniform mode draws from [-alpha_i, 0] and needs eps_i <= alpha_i / 2.
    """
    alpha = np.broadcast_to(np.asarray(alpha, dtype=np.float64), (T,)).copy()
    eps = np.broadcast_to(np.asarray(eps, dtype=np.float64), (T,)).copy()
    if np.any(alpha < 0) or np.any(alpha > 1):
        raise StructuralError("every alpha_i must lie in [0, 1]")
    if np.any(eps < 0) or np.any(eps > alpha):
        raise StructuralError("need 0 <= eps_i <= alpha_i")
    rng = np.random.default_rng(seed)
    if mode == "bernoulli":
        p = np.divide(eps, alpha, out=np.zeros(T), where=alpha > 0)
        hits = rng.random((trials, T)) < p
        X = -(hits * alpha).sum(axis=1)
    elif mode == "uniform":
        if np.any(eps > alpha / 2):
            raise StructuralError("uniform mode needs eps_i <= alpha_i / 2")
        scale = np.divide(2 * eps, alpha, out=np.zeros(T), where=alpha > 0)
        X = -(rng.random((trials, T)) * alpha * scale).sum(axis=1)
    else:
        raise StructuralError(f"unknown increment mode {mode!r}")
    drift = eps.sum()
    var_budget = alpha.sum()
    if lambdas is None:
        lambdas = np.linspace(0.0, 3.0 * math.sqrt(max(var_budget, 1e-12)), 7)
    sweep = []
    violations = 0
    max_slack = -math.inf
    for lam in lambdas:
        bound = math.exp(-lam * lam / (2 * var_budget)) if var_budget > 0 else (
            1.0 if lam <= 0 else 0.0)
        emp = float(np.mean(X >= -drift + lam))
        se = math.sqrt(max(emp * (1 - emp), 1e-12) / trials)
        vacuous = bound >= 1.0
        ok = vacuous or emp <= bound + 3 * se
        if not ok:
            violations += 1
        if not vacuous:
            max_slack = max(max_slack, emp - bound)
        sweep.append({"lambda": float(lam), "bound": bound, "empirical": emp,
                      "se": se, "vacuous": vacuous, "ok": bool(ok)})
    if max_slack == -math.inf:
        max_slack = 0.0
    return HarnessReport(
        check="azuma", trials=trials, violations=violations,
        max_slack=max_slack, seed=seed,
        parameters={"T": T, "sum_alpha": float(var_budget),
                    "sum_eps": float(drift), "mode": mode, "sweep": sweep},
    )
