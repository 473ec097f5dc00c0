"""Command line entry point: ``copopt {run,sweep,slope,check,cop}``."""
from __future__ import annotations

import argparse
import re
import sys
from pathlib import Path

import numpy as np

from . import bench, checks
from .cop import cop
from .errors import ContractError
from .optimizers import ALGORITHMS, DEFAULT_CLAMP, run_optimizer
from .oracle import PRESETS, EvaluationCounter, RandomStream, simple_regret, squared_gap_regret

EXIT_CONTRACT = 2
EXIT_IO = 3

_RANGE = re.compile(r"^2\^(\d+)\.\.2\^(\d+)$")


def parse_budget(text: str) -> int:
    text = text.strip()
    if text.startswith("2^"):
        return 2 ** int(text[2:])
    return int(text)


def parse_budgets(text: str) -> list[int]:
    """``"1024,4096"`` or the dyadic range ``"2^10..2^18"``."""
    m = _RANGE.match(text.strip())
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if hi < lo:
            raise argparse.ArgumentTypeError(f"empty budget range {text!r}")
        return [2**k for k in range(lo, hi + 1)]
    try:
        return [parse_budget(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad budget list {text!r}") from None


def _point(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(",")])


def _add_problem_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algo", choices=ALGORITHMS, default="copquad")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--noise-std", type=float, default=1.0, help="noise std D (sphere runs always use 1)")
    p.add_argument("--c", type=float, default=None, help="eigenvalue lower bound (default 0.1*D)")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fixed-problem", action="store_true", help="one problem shared by all runs")
    p.add_argument("--problem-file", type=Path, help="load the (fixed) problem from a key = value file")
    p.add_argument("--problem-preset", choices=sorted(PRESETS), help="named fixed problem")
    p.add_argument("--paper-literal-budget", action="store_true")
    p.add_argument("--clamp-bound", type=float, default=DEFAULT_CLAMP)
    p.add_argument("--kw-gain", type=float, default=1.0)
    p.add_argument("--kw-span", type=float, default=1.0)


def _config(args, budgets, runs=1) -> bench.SweepConfig:
    problem_text = args.problem_file.read_text() if args.problem_file else None
    return bench.SweepConfig(
        algo=args.algo, dim=args.dim, noise_std=args.noise_std, c=args.c, epsilon=args.epsilon,
        budgets=budgets, runs=runs, seed=args.seed, fixed_problem=args.fixed_problem,
        problem_preset=args.problem_preset, problem_text=problem_text,
        paper_literal_budget=args.paper_literal_budget, clamp_bound=args.clamp_bound,
        kw_gain=args.kw_gain, kw_span=args.kw_span,
    )


def cmd_run(args) -> int:
    config = _config(args, [args.budget])
    rec = bench.run_single(config, args.budget, args.run_index)
    for col in bench.RECORD_COLUMNS:
        print(f"{col} = {getattr(rec, col)}")
    if args.verbose:
        problem = config.make_problem(args.run_index)
        stream = RandomStream(config.seed, (bench._OPTIMIZER_TAG, args.budget, args.run_index))
        res = run_optimizer(problem, args.budget, stream, config.algo,
                            paper_literal_budget=config.paper_literal_budget,
                            clamp_bound=config.clamp_bound,
                            kw_gain=config.kw_gain, kw_span=config.kw_span)
        print(f"x_hat = {np.array2string(res.x_hat, precision=6)}")
        print(f"x_star = {np.array2string(problem.x_star, precision=6)}")
        print(f"regret (F gap) = {simple_regret(problem, res.x_hat):.6e}")
        print(f"regret (squared F gap) = {squared_gap_regret(problem, res.x_hat):.6e}")
    return 0


def cmd_sweep(args) -> int:
    if args.manifest:
        config = bench.load_manifest(args.manifest)
    else:
        config = _config(args, args.budgets, args.runs)
    try:
        records = bench.sweep(config, workers=args.workers, progress=not args.quiet)
    except bench.SweepError as exc:
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            bench.write_records_csv(exc.records, Path(args.out) / "records.partial.csv")
        raise exc.cause
    summaries = bench.aggregate(records)
    if args.out:
        paths = bench.write_outputs(records, summaries, config, args.out)
        print(f"wrote {', '.join(str(p) for p in paths.values())}", file=sys.stderr)
    print(",".join(bench.SUMMARY_COLUMNS))
    for s in summaries:
        print(f"{s.budget},{s.mean:.6e},{s.median:.6e},{s.q10:.6e},{s.q90:.6e},{s.n_runs}")
    if len(summaries) >= 3:
        for stat in ("median", "mean"):
            try:
                fit = bench.fit_loglog_slope(summaries, stat)
            except ContractError as exc:
                print(f"slope({stat}): {exc}")
            else:
                print(f"slope({stat}) = {fit.slope:.4f}")
    return 0


def cmd_slope(args) -> int:
    summaries = bench.read_summary_csv(args.summary)
    fit = bench.fit_loglog_slope(summaries, args.statistic)
    print(f"slope = {fit.slope:.6f}")
    print(f"intercept = {fit.intercept:.6f}")
    print(f"residual_norm = {fit.residual_norm:.6e}")
    if fit.excluded:
        print(f"excluded budgets = {','.join(map(str, fit.excluded))}")
    return 0


def cmd_check(args) -> int:
    names = args.names or list(checks.CHECKS)
    failed = 0
    for name in names:
        if name not in checks.CHECKS:
            raise ContractError(f"unknown check {name!r}; known: {', '.join(checks.CHECKS)}")
        ok, detail = checks.CHECKS[name]()
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return 1 if failed else 0


def cmd_cop(args) -> int:
    config = _config(args, [2 * args.K])
    problem = config.make_problem(0)
    x, y = _point(args.x), _point(args.y)
    counter = EvaluationCounter(2 * args.K)
    f = cop(args.K, x, y, problem, RandomStream(args.seed, (99,)), counter)
    print(f"x = {args.x}  y = {args.y}  K = {args.K}  f = {f.value:.17g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="copopt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one optimizer run, printed as a record")
    _add_problem_options(p)
    p.add_argument("--budget", type=parse_budget, required=True)
    p.add_argument("--run-index", type=int, default=0)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="budget grid x repeated runs")
    _add_problem_options(p)
    p.add_argument("--budgets", type=parse_budgets, default=parse_budgets("2^10..2^18"))
    p.add_argument("--runs", type=int, default=50)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path)
    p.add_argument("--manifest", type=Path, help="replay the configuration stored in a manifest.json")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("slope", help="log-log slope of a summary CSV")
    p.add_argument("summary", type=Path)
    p.add_argument("--statistic", choices=("median", "mean", "q10", "q90"), default="median")
    p.set_defaults(func=cmd_slope)

    p = sub.add_parser("check", help="built-in property checks")
    p.add_argument("names", nargs="*", help=f"subset of: {', '.join(checks.CHECKS)}")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("cop", help="debug: one COP frequency")
    _add_problem_options(p)
    p.add_argument("--x", required=True, help="comma-separated point")
    p.add_argument("--y", required=True, help="comma-separated point")
    p.add_argument("--K", type=int, default=50)
    p.set_defaults(func=cmd_cop)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
