"""Benchmark command line: single runs, parameter sweeps, certification suites.

    devsplit run   --problem skew2d --algo tunable --e 0.4 --out trace.csv
    devsplit sweep --param e --values 0,0.1,...,1.0 --out sweep.csv --svg fig.svg
    devsplit verify --suite lyapunov --trials 200 --seed 0

Exit codes: 0 success, 2 bad configuration, 3 not converged within max-iter,
1 verification violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .engine import ParallelDeviations, ZeroDeviations, run as engine_run
from .errors import ConfigurationError, DevsplitError
from .problems import load_problem
from .records import StoppingRule, SweepResult, Trace, write_sweep_csv, write_trace_csv
from .schedules import Schedule, constant_growth, power_growth, schedule_from_json
from .variants import VariantConfig, halpern_problem, run_variant
from .verify import SUITES

ALGO_KIND = {
    "fb": "tunable_e",
    "parallel": "parallel_x_form",
    "constant-kappa": "constant_kappa",
    "tunable": "tunable_e",
    "accel-fb": "accelerated_fb",
    "halpern": "halpern",
}


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", default="skew2d",
                   help="'skew2d' or '@file.json' (default: skew2d)")
    p.add_argument("--algo", default="tunable",
                   choices=["fb", "general", "parallel", "constant-kappa",
                            "tunable", "accel-fb", "halpern"])
    p.add_argument("--e", type=float, default=None, help="rate-tuning exponent in [0, 1]")
    p.add_argument("--kappa", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=None, help="step size (default 0.1)")
    p.add_argument("--beta-bar", type=float, default=None,
                   help="cocoercivity margin (default 0.001)")
    p.add_argument("--lambda0", type=float, default=None)
    p.add_argument("--schedule", default=None,
                   help="JSON schedule file for --algo general; explicit flags override")
    p.add_argument("--x0", default="3,3", help="comma-separated start point")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--tol-kind", default="dist", choices=["dist", "fpres"])
    p.add_argument("--max-iter", type=int, default=50_000_000)
    p.add_argument("--trace-stride", type=int, default=1)
    p.add_argument("--out", default=None, help="trace CSV path")
    p.add_argument("--svg", default=None, help="figure path (SVG)")
    p.add_argument("--svg-mode", default="distance", choices=["distance", "trajectory"])
    p.add_argument("--diagnostics", default="off", choices=["on", "off"])


def _parse_x0(text: str, dim: int) -> np.ndarray:
    vals = [float(tok) for tok in text.split(",") if tok.strip() != ""]
    if len(vals) != dim:
        raise ConfigurationError(f"--x0 has {len(vals)} entries, problem dimension is {dim}")
    return np.asarray(vals)


def _resolved_scalars(args):
    gamma = 0.1 if args.gamma is None else args.gamma
    beta_bar = 0.001 if args.beta_bar is None else args.beta_bar
    e = 0.0 if args.e is None else args.e
    return gamma, beta_bar, e


def _variant_config(args, algo: str) -> VariantConfig:
    kind = ALGO_KIND[algo]
    gamma, beta_bar, e = _resolved_scalars(args)
    if algo == "fb":
        e = 0.0
    growth = None
    if algo == "parallel" and e > 0.0:
        growth = power_growth(e)
    return VariantConfig(kind=kind, gamma=gamma, beta_bar=beta_bar,
                         e=e, kappa=args.kappa, lambda0=args.lambda0,
                         growth=growth)


def _engine_setup(args, algo: str, problem):
    """Schedule + deviation policy of the equivalent general-loop run."""
    gamma, beta_bar, e = _resolved_scalars(args)
    if algo == "general":
        if getattr(args, "schedule", None):
            with open(args.schedule) as fh:
                base = schedule_from_json(json.load(fh))
            sched = Schedule(
                lambda0=base.lambda0 if args.lambda0 is None else args.lambda0,
                growth=power_growth(args.e) if args.e is not None else base.growth,
                gamma=base.gamma if args.gamma is None else args.gamma,
                beta_bar=base.beta_bar if args.beta_bar is None else args.beta_bar,
                eps=base.eps, eps0=base.eps0, eps1=base.eps1)
        else:
            lam0 = 1.0 if args.lambda0 is None else args.lambda0
            growth = power_growth(e) if e > 0.0 else constant_growth()
            sched = Schedule(lambda0=lam0, growth=growth, gamma=gamma,
                             beta_bar=beta_bar)
        return problem, sched, ZeroDeviations()
    if algo == "halpern":
        problem = halpern_problem(problem, gamma)
        cfg = VariantConfig(kind="tunable_e", gamma=2.0 / problem.C.beta,
                            beta_bar=problem.C.beta, e=1.0)
    else:
        cfg = _variant_config(args, algo)
    sched = cfg.schedule()
    if algo == "fb":
        return problem, sched, ZeroDeviations()
    if cfg.kind in ("tunable_e", "accelerated_fb"):
        lam0 = cfg.resolved_lambda0()
        growth = cfg.resolved_growth()
        kappa = lambda n: (lam0 * growth(n + 1) - lam0) / (lam0 * growth(n + 1))
    else:
        kappa = cfg.kappa_fn()
    return problem, sched, ParallelDeviations(kappa, sched)


def _single_run(args, problem, algo: str, trace: Trace | None):
    stop = StoppingRule(max_iter=args.max_iter, tol=args.tol, kind=args.tol_kind)
    x0 = _parse_x0(args.x0, problem.dim)
    if args.diagnostics == "on" or algo == "general":
        problem, sched, policy = _engine_setup(args, algo, problem)
        return engine_run(problem, sched, policy, x0, stop, trace=trace,
                          diagnostics=args.diagnostics == "on", algo=algo)
    cfg = _variant_config(args, algo)
    return run_variant(cfg, problem, x0, stop, trace=trace)


def cmd_run(args) -> int:
    problem = load_problem(args.problem)
    trace = Trace(stride=max(args.trace_stride, 1)) if (args.out or args.svg) else None
    rec = _single_run(args, problem, args.algo, trace)
    status = "converged" if rec.converged else "not converged"
    print(f"{args.algo} on {problem.name}: {rec.iterations} iterations ({status})")
    if rec.final_dist is not None:
        print(f"final distance to solution: {rec.final_dist:.6e}")
    if args.out:
        write_trace_csv(rec, args.out)
        print(f"trace written to {args.out}")
    if args.svg:
        from .report import export_svg
        export_svg([(args.algo, rec.trace)], args.svg_mode, args.svg)
        print(f"figure written to {args.svg}")
    return 0 if rec.converged or args.tol is None else 3


def cmd_sweep(args) -> int:
    problem = load_problem(args.problem)
    values = [float(tok) for tok in args.values.split(",") if tok.strip() != ""]
    if not values:
        raise ConfigurationError("--values is empty")
    algo = args.algo
    if algo == "tunable" and args.param == "kappa":
        algo = "constant-kappa"
    if args.param == "e" and algo not in ("tunable", "fb"):
        raise ConfigurationError("an 'e' sweep needs --algo tunable")

    def one(value: float):
        import copy
        a = copy.copy(args)
        if args.param == "e":
            a.e = value
        else:
            a.kappa = value
        trace = None
        rec = _single_run(a, problem, algo, None)
        if args.svg:
            stride = args.trace_stride if args.trace_stride > 1 else max(
                1, rec.iterations // 4000)
            trace = Trace(stride=stride)
            rec = _single_run(a, problem, algo, trace)
        return value, rec, trace

    threads = max(1, int(os.environ.get("DEVSPLIT_THREADS", "1")))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(one, values))
    else:
        outs = [one(v) for v in values]

    outs.sort(key=lambda t: t[0])
    result = SweepResult(param_name=args.param,
                         rows=[(v, rec.iterations, rec.converged) for v, rec, _ in outs])
    print(f"{args.param:>8}  iterations  converged")
    for v, iters, conv in result.rows:
        print(f"{v:8.3g}  {iters:10d}  {'yes' if conv else 'NO'}")
    if args.out:
        write_sweep_csv(result, args.out)
        print(f"sweep written to {args.out}")
    if args.svg:
        from .report import export_svg
        labelled = [(f"{args.param}={v:g}", tr) for v, _, tr in outs if tr is not None]
        export_svg(labelled, args.svg_mode, args.svg)
        print(f"figure written to {args.svg}")
    return 0


def cmd_verify(args) -> int:
    suite = SUITES[args.suite]
    kwargs = {"seed": args.seed}
    if args.suite in ("lyapunov", "identities"):
        kwargs["trials"] = args.trials
        if args.dim is not None:
            kwargs["dim_range"] = (args.dim, args.dim)
    report = suite(**kwargs)
    print(report)
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="devsplit", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one algorithm to its stopping rule")
    _add_run_flags(p_run)
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="one run per parameter value")
    _add_run_flags(p_sweep)
    p_sweep.add_argument("--param", required=True, choices=["e", "kappa"])
    p_sweep.add_argument("--values", required=True, help="comma-separated parameter values")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_ver = sub.add_parser("verify", help="randomized certification suites")
    p_ver.add_argument("--suite", required=True, choices=sorted(SUITES))
    p_ver.add_argument("--trials", type=int, default=200)
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--dim", type=int, default=None)
    p_ver.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except DevsplitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
