"""Command-line front end.

Subcommands cover the full pipeline: `build` runs a construction and writes
a certificate, `verify` recomputes the bias of any certificate, `expander`
builds or certifies graphs, `export` dumps Cayley edge lists, `harness`
runs the Monte-Carlo inequality checks, `baseline` draws the random
comparison set. Every emitted certificate embeds the full run
configuration (argv, parameters, seed, caps, tolerances) so artifacts are
reproducible byte for byte from the same invocation.

Exit codes: 0 success, 1 certification failure or exhausted search budget,
2 structural error (bad inputs), 3 resource error (a cap was hit).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field

from . import limits
from .abelian import char_bias_exact, modulus_set
from .constructions import (amplify, amplify_step, direct_product_set,
                            plan_amplification, solvable_set, tensor_combine)
from .errors import (CertificationError, GroupBiasError, ResourceError,
                     StructuralError)
from .expanders import (certify_lambda, lps_graph, random_regular_bipartite,
                        read_expander, write_expander)
from .groups import parse_group
from .harness import (azuma_supermartingale_check, operator_product_tail,
                      rayleigh_operator_check, rayleigh_vector_check)
from .sets import BiasedSet, canonical_json
from .spectral import alon_roichman_sample, certify_set, export_cayley


@dataclass
class RunConfig:
    """Everything needed to reproduce a run, embedded in each artifact."""

    argv: list
    subcommand: str
    params: dict
    seed: int | None = None

    caps: dict = field(default_factory=lambda: {
        name: limits.cap(name) for name in sorted(limits._DEFAULTS)
    })
    tolerances: dict = field(default_factory=lambda: {
        "certification": limits.CERT_TOL,
        "soundness": limits.SOUNDNESS_TOL,
        "lemma": limits.LEMMA_TOL,
        "power_residual": limits.POWER_RESIDUAL,
    })

    def payload(self) -> dict:
        return {
            "argv": self.argv,
            "subcommand": self.subcommand,
            "params": self.params,
            "seed": self.seed,
            "caps": self.caps,
            "tolerances": self.tolerances,
        }


def _emit(args, payload: dict, summary: str) -> None:
    text = canonical_json(payload)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    if getattr(args, "json", False):
        print(text)
    else:
        print(summary)
        if args.out:
            print(f"wrote {args.out}")


def _set_summary(S: BiasedSet, label: str) -> str:
    cert = ("uncertified" if S.certified_bias is None
            else f"certified {S.certified_bias:.6g} ({S.certified_method})")
    return (f"{label}: group {S.group.descriptor} order {S.group.order}, "
            f"size {S.size}, claimed {S.claimed_bias:.6g} "
            f"[{S.claim_kind}], {cert}")


def _graph_payload(g, run: dict | None = None) -> dict:
    return {
        "kind": "expander",
        "graph_kind": g.kind,
        "side": g.side,
        "degree": g.degree,
        "claimed_lambda": g.claimed_lambda,
        "certified_lambda": g.certified_lambda,
        "certification": g.certification,
        "residual": g.residual,
        "run": run,
    }


def _graph_summary(g, label: str) -> str:
    lam = ("uncertified" if g.certified_lambda is None
           else f"certified {g.certified_lambda:.6g} ({g.certification})")
    claimed = "none" if g.claimed_lambda is None else f"{g.claimed_lambda:.6g}"
    return (f"{label}: {g.kind}, side {g.side}, degree {g.degree}, "
            f"claimed lambda {claimed}, {lam}")


def _load_set(path: str) -> BiasedSet:
    with open(path) as fh:
        return BiasedSet.from_json(fh.read())


def _maybe_certify_arg(S: BiasedSet, args) -> BiasedSet:
    if getattr(args, "certify", False):
        return certify_set(S)
    return S


# ---------------------------------------------------------------- build

def _cmd_build_aghp(args, run):
    from .abelian import aghp_construct
    S = aghp_construct(args.p, args.n, delta=args.delta, q=args.q)
    S = _maybe_certify_arg(S, args)
    _emit(args, S.to_payload(run), _set_summary(S, "aghp"))
    return 0


def _cmd_build_mz(args, run):
    from .constructions import mz_set
    G = parse_group(args.group)
    if args.set:
        S = _load_set(args.set)
    else:
        S = modulus_set(G.order, args.n, args.delta, seed=args.seed)
        S = certify_set(S, method="character")
    T = mz_set(G, args.n, S)
    T = _maybe_certify_arg(T, args)
    _emit(args, T.to_payload(run), _set_summary(T, "mz"))
    return 0


def _cmd_build_amplify(args, run):
    S = _load_set(args.infile)
    if args.plan_only:
        plan = plan_amplification(S.size, args.target_eps)
        payload = {"kind": "amplification-plan", "run": run,
                   "steps": [{"t": st.t, "eps_in": st.eps_in,
                              "eps_out": st.eps_out,
                              "p": st.p, "q": st.q, "side": st.side,
                              "degree": st.degree,
                              "size_after": st.size_after,
                              "growth_c": st.growth_c}
                             for st in plan.steps]}
        _emit(args, payload,
              f"plan: {plan.total_steps} steps, final size {plan.final_size}")
        return 0
    if args.single_step:
        out = amplify_step(S, eps=args.eps)
    else:
        out = amplify(S, args.target_eps)
    _emit(args, out.to_payload(run), _set_summary(out, "amplified"))
    return 0


def _cmd_build_tensor(args, run):
    S1 = _load_set(args.in1)
    S2 = _load_set(args.in2)
    if S2.size < S1.size:
        S1, S2 = S2, S1
    if args.graph:
        gamma = read_expander(args.graph)
        gamma = certify_lambda(gamma)
    else:
        degree = args.degree or max(3, math.ceil(5 / args.lam**2))
        gamma = random_regular_bipartite(S2.size, degree, args.lam,
                                         seed=args.seed)
    out = tensor_combine(S1, S2, gamma)
    out = _maybe_certify_arg(out, args)
    _emit(args, out.to_payload(run), _set_summary(out, "tensor"))
    return 0


def _cmd_build_direct(args, run):
    groups = [parse_group(d.strip()) for d in args.groups.split(",")]
    out = direct_product_set(groups, lam_target=args.lam, seed=args.seed,
                             degree=args.degree)
    out = _maybe_certify_arg(out, args)
    _emit(args, out.to_payload(run), _set_summary(out, "direct-product"))
    return 0


def _cmd_build_solvable(args, run):
    G = parse_group(args.group)
    out = solvable_set(G, target_eps=args.target_eps,
                       leaf_mode=args.leaf_mode, seed=args.seed,
                       alpha=args.alpha)
    out = _maybe_certify_arg(out, args)
    _emit(args, out.to_payload(run), _set_summary(out, "solvable"))
    return 0


# ---------------------------------------------------------------- verify

def _cmd_verify(args, run):
    S = _load_set(args.infile)
    S = certify_set(S, mode=args.mode, method=args.method)
    _emit(args, S.to_payload(run), _set_summary(S, "verified"))
    return 0


# ---------------------------------------------------------------- expander

def _cmd_expander_lps(args, run):
    g = lps_graph(args.p, args.q, certify=args.certify)
    if args.edges:
        write_expander(g, args.edges)
    _emit(args, _graph_payload(g, run), _graph_summary(g, "lps"))
    return 0


def _cmd_expander_random(args, run):
    g = random_regular_bipartite(args.side, args.degree, args.target_lambda,
                                 seed=args.seed, budget=args.budget)
    if args.edges:
        write_expander(g, args.edges)
    _emit(args, _graph_payload(g, run), _graph_summary(g, "random"))
    return 0


def _cmd_expander_certify(args, run):
    g = read_expander(args.infile)
    certify_lambda(g, method=args.method, seed=args.seed)
    claimed = g.claimed_lambda
    if claimed is not None and g.certified_lambda > claimed + limits.SOUNDNESS_TOL:
        raise CertificationError(
            f"certified lambda {g.certified_lambda:.6g} exceeds the file's "
            f"claim {claimed:.6g}"
        )
    _emit(args, _graph_payload(g, run), _graph_summary(g, "certified"))
    return 0


# ---------------------------------------------------------------- export

def _cmd_export(args, run):
    S = _load_set(args.infile)
    edges = export_cayley(S.group, S, args.edges, symmetrize=args.symmetrize)
    payload = {"kind": "export", "edges": edges, "path": args.edges,
               "digest": S.digest(), "run": run}
    _emit(args, payload, f"export: {edges} edges -> {args.edges}")
    return 0


# ---------------------------------------------------------------- harness

def _harness_graph(args):
    if args.graph:
        g = read_expander(args.graph)
    else:
        g = lps_graph(args.p, args.q, certify="none")
    return certify_lambda(g, method="dense")


def _cmd_harness_rayleigh(args, run):
    g = _harness_graph(args)
    reports = []
    if args.which in ("vector", "both"):
        reports.append(rayleigh_vector_check(g, trials=args.trials,
                                             seed=args.seed, dim=args.dim))
    if args.which in ("operator", "both"):
        reports.append(rayleigh_operator_check(g, trials=args.trials,
                                               seed=args.seed, dim=args.dim))
    payload = {"kind": "harness", "reports": [r.to_payload() for r in reports],
               "run": run}
    lines = [f"{r.check}: trials {r.trials}, violations {r.violations}, "
             f"max slack {r.max_slack:.3e}" for r in reports]
    _emit(args, payload, "\n".join(lines))
    return 0 if all(r.passed for r in reports) else 1


def _cmd_harness_tail(args, run):
    r = operator_product_tail(args.k, args.delta, args.dim,
                              trials=args.trials, seed=args.seed)
    payload = {"kind": "harness", "reports": [r.to_payload()], "run": run}
    _emit(args, payload,
          f"{r.check}: trials {r.trials}, violations {r.violations}, "
          f"empirical tail {r.empirical_tail}")
    return 0 if r.passed else 1


def _parse_schedule(text: str, T: int):
    parts = [float(x) for x in text.split(",")]
    if len(parts) == 1:
        return parts[0]
    if len(parts) != T:
        raise StructuralError(f"schedule has {len(parts)} entries, need {T}")
    return parts


def _cmd_harness_azuma(args, run):
    alpha = _parse_schedule(args.alpha, args.T)
    eps = _parse_schedule(args.eps, args.T)
    r = azuma_supermartingale_check(args.T, alpha, eps, trials=args.trials,
                                    seed=args.seed, mode=args.mode)
    payload = {"kind": "harness", "reports": [r.to_payload()], "run": run}
    _emit(args, payload,
          f"{r.check}: trials {r.trials}, violations {r.violations}, "
          f"max slack {r.max_slack:.3e}")
    return 0 if r.passed else 1


# ---------------------------------------------------------------- baseline

def _cmd_baseline_ar(args, run):
    G = parse_group(args.group)
    S, measured = alon_roichman_sample(G, args.k, seed=args.seed)
    _emit(args, S.to_payload(run),
          f"alon-roichman: group {G.descriptor}, k {args.k}, "
          f"measured bias {measured:.6g}")
    return 0


# ---------------------------------------------------------------- parser

def _add_common(p, seed=True):
    p.add_argument("--out", "-o", default=None, help="write the JSON artifact here")
    p.add_argument("--json", action="store_true", help="print the artifact JSON to stdout")
    if seed:
        p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="groupbias",
        description="Small-bias generator sets over finite groups, with certificates.",
    )
    ap.add_argument("--threads", type=int, default=None,
                    help="cap BLAS/LAPACK worker threads")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="run a construction").add_subparsers(
        dest="construction", required=True)

    p = b.add_parser("aghp", help="powering construction over vec:p:n")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--q", type=int, help="field size (prime power, >= p)")
    g.add_argument("--delta", type=float, help="target bias; q chosen as the least power of p with n/q <= delta")
    p.add_argument("--certify", action="store_true")
    _add_common(p, seed=False)
    p.set_defaults(fn=_cmd_build_aghp)

    p = b.add_parser("mz", help="homogeneous-power set over G^n from a set over Z_|G|^n")
    p.add_argument("--group", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, default=0.3)
    p.add_argument("--set", default=None, help="reuse an abelian certificate instead of building one")
    p.add_argument("--certify", action="store_true")
    _add_common(p)
    p.set_defaults(fn=_cmd_build_mz)

    p = b.add_parser("amplify", help="derandomized squaring until the target bias")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--target-eps", type=float, default=None)
    p.add_argument("--single-step", action="store_true")
    p.add_argument("--eps", type=float, default=None,
                   help="bias to assume for the single step (>= the certified bias)")
    p.add_argument("--plan-only", action="store_true",
                   help="print the step schedule without building anything")
    _add_common(p, seed=False)
    p.set_defaults(fn=_cmd_build_amplify)

    p = b.add_parser("tensor", help="combine two sets along an expander")
    p.add_argument("--in1", required=True)
    p.add_argument("--in2", required=True)
    p.add_argument("--graph", default=None, help="edge-list file for the expander")
    p.add_argument("--lam", type=float, default=0.125)
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--certify", action="store_true")
    _add_common(p)
    p.set_defaults(fn=_cmd_build_tensor)

    p = b.add_parser("direct", help="recursive product construction")
    p.add_argument("--groups", required=True,
                   help="comma-separated descriptors, e.g. cyclic:2,sym:3")
    p.add_argument("--lam", type=float, default=0.125)
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--certify", action="store_true")
    _add_common(p)
    p.set_defaults(fn=_cmd_build_direct)

    p = b.add_parser("solvable", help="derived-series construction")
    p.add_argument("--group", required=True)
    p.add_argument("--target-eps", type=float, default=None)
    p.add_argument("--leaf-mode", choices=("auto", "full", "aghp"), default="auto")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--certify", action="store_true")
    _add_common(p)
    p.set_defaults(fn=_cmd_build_solvable)

    p = sub.add_parser("verify", help="recompute the bias of a certificate")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--mode", choices=("singular", "symmetrized"), default="singular")
    p.add_argument("--method", choices=("auto", "dense", "power", "character"),
                   default="auto")
    _add_common(p, seed=False)
    p.set_defaults(fn=_cmd_verify)

    e = sub.add_parser("expander", help="build or certify bipartite expanders")
    es = e.add_subparsers(dest="expander_cmd", required=True)

    p = es.add_parser("lps", help="explicit Ramanujan graph")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--certify", choices=("auto", "dense", "power", "none"),
                   default="auto")
    p.add_argument("--edges", default=None, help="also write the edge list here")
    _add_common(p, seed=False)
    p.set_defaults(fn=_cmd_expander_lps)

    p = es.add_parser("random", help="certified random biregular graph")
    p.add_argument("--side", type=int, required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--target-lambda", type=float, required=True)
    p.add_argument("--budget", type=int, default=8)
    p.add_argument("--edges", default=None)
    _add_common(p)
    p.set_defaults(fn=_cmd_expander_random)

    p = es.add_parser("certify", help="certify an edge-list file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--method", choices=("auto", "dense", "power"), default="auto")
    _add_common(p)
    p.set_defaults(fn=_cmd_expander_certify)

    p = sub.add_parser("export", help="write the Cayley edge list of a certificate")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--symmetrize", action="store_true")
    _add_common(p, seed=False)
    p.set_defaults(fn=_cmd_export)

    h = sub.add_parser("harness", help="Monte-Carlo inequality checks").add_subparsers(
        dest="harness_cmd", required=True)

    p = h.add_parser("rayleigh", help="bilinear and operator expander bounds")
    p.add_argument("--graph", default=None, help="edge-list file; default builds lps --p/--q")
    p.add_argument("--p", type=int, default=13)
    p.add_argument("--q", type=int, default=5)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--which", choices=("vector", "operator", "both"), default="both")
    _add_common(p)
    p.set_defaults(fn=_cmd_harness_rayleigh)

    p = h.add_parser("tail", help="operator-product tail bound")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--trials", type=int, default=10000)
    _add_common(p)
    p.set_defaults(fn=_cmd_harness_tail)

    p = h.add_parser("azuma", help="supermartingale tail bound")
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--alpha", required=True, help="scalar or comma list, length T")
    p.add_argument("--eps", required=True, help="scalar or comma list, length T")
    p.add_argument("--trials", type=int, default=20000)
    p.add_argument("--mode", choices=("bernoulli", "uniform"), default="bernoulli")
    _add_common(p)
    p.set_defaults(fn=_cmd_harness_azuma)

    bl = sub.add_parser("baseline", help="random-sampling comparison").add_subparsers(
        dest="baseline_cmd", required=True)
    p = bl.add_parser("alon-roichman", help="random generator multiset, certified")
    p.add_argument("--group", required=True)
    p.add_argument("--k", type=int, required=True)
    _add_common(p)
    p.set_defaults(fn=_cmd_baseline_ar)

    return ap


def _run_config(args, argv) -> dict:
    skip = {"fn", "command", "construction", "expander_cmd", "harness_cmd",
            "baseline_cmd", "json", "out", "threads"}
    params = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    sub = ".".join(x for x in (args.command,
                               getattr(args, "construction", None),
                               getattr(args, "expander_cmd", None),
                               getattr(args, "harness_cmd", None),
                               getattr(args, "baseline_cmd", None)) if x)
    return RunConfig(argv=list(argv), subcommand=sub, params=params,
                     seed=getattr(args, "seed", None)).payload()


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    run = _run_config(args, argv)

    def dispatch():
        try:
            return args.fn(args, run)
        except CertificationError as exc:  # includes SearchBudgetError
            print(f"certification failure: {exc}", file=sys.stderr)
            return 1
        except StructuralError as exc:
            print(f"structural error: {exc}", file=sys.stderr)
            return 2
        except ResourceError as exc:
            print(f"resource error: {exc}", file=sys.stderr)
            return 3
        except GroupBiasError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        except FileNotFoundError as exc:
            print(f"structural error: {exc}", file=sys.stderr)
            return 2

    if args.threads is not None:
        import threadpoolctl
        with threadpoolctl.threadpool_limits(limits=args.threads):
            return dispatch()
    return dispatch()


if __name__ == "__main__":
    sys.exit(main())
