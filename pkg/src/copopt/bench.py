"""Seeded budget sweeps, regret aggregation and log-log slope fits."""
from __future__ import annotations

import csv
import json
import math
import sys
from concurrent.futures import FIRST_EXCEPTION, ProcessPoolExecutor, wait
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ContractError
from .optimizers import ALGORITHMS, DEFAULT_CLAMP, run_optimizer
from .oracle import (
    PRESETS,
    RandomStream,
    SphereProblem,
    generate_problem,
    load_problem,
    random_sphere_optimum,
    simple_regret,
)

RECORD_COLUMNS = (
    "algo", "dim", "noise_std", "seed", "run", "budget",
    "regret", "consumed", "singular_branch", "projection_hit",
)
SUMMARY_COLUMNS = ("budget", "mean", "median", "q10", "q90", "n_runs")

# stream-id prefixes; optimizer noise is keyed by (budget, run), problems by run only
_OPTIMIZER_TAG = 0
_PROBLEM_TAG = 1
_FIXED_PROBLEM_TAG = 2


class SweepError(RuntimeError):
    """A run failed; ``records`` holds everything that finished before it."""

    def __init__(self, cause: BaseException, records: list):
        super().__init__(str(cause))
        self.cause = cause
        self.records = records


@dataclass
class SweepConfig:
    algo: str = "copquad"
    dim: int = 2
    noise_std: float = 1.0
    c: float | None = None  # default 0.1 * noise_std
    epsilon: float = 0.1
    budgets: list[int] = field(default_factory=lambda: [2**k for k in range(10, 19)])
    runs: int = 50
    seed: int = 0
    fixed_problem: bool = False
    problem_preset: str | None = None
    problem_text: str | None = None
    paper_literal_budget: bool = False
    clamp_bound: float = DEFAULT_CLAMP
    kw_gain: float = 1.0
    kw_span: float = 1.0

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise ContractError(f"unknown algorithm {self.algo!r}; choose from {', '.join(ALGORITHMS)}")
        self.budgets = [int(b) for b in self.budgets]
        if not self.budgets or any(b2 <= b1 for b1, b2 in zip(self.budgets, self.budgets[1:])):
            raise ContractError(f"budget grid must be non-empty and strictly increasing: {self.budgets}")
        if self.runs < 1:
            raise ContractError(f"runs must be >= 1, got {self.runs}")
        if self.algo == "cops1" and self.dim != 1:
            raise ContractError("cops1 runs in dimension 1")
        if self.problem_preset is not None and self.problem_preset not in PRESETS:
            raise ContractError(f"unknown problem preset {self.problem_preset!r}; known: {', '.join(PRESETS)}")

    def make_problem(self, run: int):
        """The problem for ``run`` (the same object for every run in fixed mode)."""
        if self.problem_text is not None:
            return load_problem(self.problem_text)
        if self.problem_preset is not None:
            return PRESETS[self.problem_preset](self.noise_std)
        key = (_FIXED_PROBLEM_TAG,) if self.fixed_problem else (_PROBLEM_TAG, run)
        stream = RandomStream(self.seed, key)
        if self.algo in ("cops1", "cops"):
            return SphereProblem(random_sphere_optimum(self.dim, stream))
        c = 0.1 * self.noise_std if self.c is None else self.c
        return generate_problem(self.dim, self.noise_std, c, self.epsilon, stream)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> SweepConfig:
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


@dataclass(frozen=True)
class ExperimentRecord:
    algo: str
    dim: int
    noise_std: float
    seed: int
    run: int
    budget: int
    regret: float
    consumed: int
    singular_branch: bool
    projection_hit: bool


@dataclass(frozen=True)
class RegretSummary:
    budget: int
    mean: float
    median: float
    q10: float
    q90: float
    n_runs: int


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual_norm: float
    excluded: tuple[int, ...] = ()


def run_single(config: SweepConfig, budget: int, run: int) -> ExperimentRecord:
    problem = config.make_problem(run)
    stream = RandomStream(config.seed, (_OPTIMIZER_TAG, budget, run))
    try:
        result = run_optimizer(
            problem, budget, stream, config.algo,
            paper_literal_budget=config.paper_literal_budget,
            clamp_bound=config.clamp_bound,
            kw_gain=config.kw_gain,
            kw_span=config.kw_span,
        )
    except ContractError as exc:
        raise ContractError(f"{config.algo}, budget {budget}, run {run}: {exc}") from exc
    return ExperimentRecord(
        algo=config.algo,
        dim=problem.dim,
        noise_std=problem.noise_std,
        seed=config.seed,
        run=run,
        budget=budget,
        regret=simple_regret(problem, result.x_hat),
        consumed=result.consumed,
        singular_branch=bool(result.diagnostics["singular_branch"]),
        projection_hit=bool(result.diagnostics["projection_hit"]),
    )


def _run_task(args):
    config, budget, run = args
    return run_single(config, budget, run)


def _report(done: int, total: int):
    print(f"[sweep] {done}/{total} runs", file=sys.stderr, flush=True)


def sweep(config: SweepConfig, workers: int = 1, progress: bool = True) -> list[ExperimentRecord]:
    """All ``(budget, run)`` records, sorted by budget then run index."""
    tasks = [(config, b, r) for b in config.budgets for r in range(config.runs)]
    total = len(tasks)
    step = max(1, total // 20)
    records: list[ExperimentRecord] = []

    def collect(rec):
        records.append(rec)
        if progress and (len(records) % step == 0 or len(records) == total):
            _report(len(records), total)

    def ordered():
        return sorted(records, key=lambda r: (r.budget, r.run))

    if workers <= 1:
        for task in tasks:
            try:
                collect(_run_task(task))
            except Exception as exc:
                raise SweepError(exc, ordered()) from exc
        return ordered()

    with ProcessPoolExecutor(max_workers=workers) as pool:
        pending = {pool.submit(_run_task, t) for t in tasks}
        while pending:
            done, pending = wait(pending, return_when=FIRST_EXCEPTION)
            failed = [fut for fut in done if fut.exception() is not None]
            for fut in done:
                if fut.exception() is None:
                    collect(fut.result())
            if failed:
                for fut in pending:
                    fut.cancel()
                exc = failed[0].exception()
                raise SweepError(exc, ordered()) from exc
    return ordered()


def aggregate(records) -> list[RegretSummary]:
    """Per-budget mean, median and 10%/90% quantiles (linear interpolation)."""
    groups: dict[int, list[float]] = {}
    for rec in records:
        groups.setdefault(rec.budget, []).append(rec.regret)
    if not groups:
        raise ContractError("cannot aggregate an empty record list")
    out = []
    for budget in sorted(groups):
        values = np.asarray(groups[budget], dtype=float)
        q10, med, q90 = np.quantile(values, [0.1, 0.5, 0.9], method="linear")
        out.append(RegretSummary(budget, float(values.mean()), float(med), float(q10), float(q90), values.size))
    return out


def fit_loglog_slope(summaries, statistic: str = "median") -> SlopeFit:
    """Least-squares fit of ``log(statistic)`` against ``log(budget)``.

    Budgets whose statistic is not positive are left out and listed in
    ``excluded``.
    """
    if statistic not in ("mean", "median", "q10", "q90"):
        raise ContractError(f"unknown statistic {statistic!r}")
    xs, ys, excluded = [], [], []
    for s in summaries:
        v = getattr(s, statistic)
        if v > 0 and math.isfinite(v):
            xs.append(math.log(s.budget))
            ys.append(math.log(v))
        else:
            excluded.append(s.budget)
    if len(xs) < 3:
        raise ContractError(f"need >= 3 budgets with positive {statistic}; excluded {excluded}")
    design = np.column_stack([xs, np.ones(len(xs))])
    coef, *_ = np.linalg.lstsq(design, np.asarray(ys), rcond=None)
    residual = float(np.linalg.norm(design @ coef - ys))
    return SlopeFit(float(coef[0]), float(coef[1]), residual, tuple(excluded))


# -- files ----------------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_records_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        for rec in records:
            w.writerow([_cell(getattr(rec, col)) for col in RECORD_COLUMNS])


def write_summary_csv(summaries, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for s in summaries:
            w.writerow([_cell(getattr(s, col)) for col in SUMMARY_COLUMNS])


def read_records_csv(path) -> list[ExperimentRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        ExperimentRecord(
            algo=r["algo"], dim=int(r["dim"]), noise_std=float(r["noise_std"]),
            seed=int(r["seed"]), run=int(r["run"]), budget=int(r["budget"]),
            regret=float(r["regret"]), consumed=int(r["consumed"]),
            singular_branch=r["singular_branch"] == "1", projection_hit=r["projection_hit"] == "1",
        )
        for r in rows
    ]


def read_summary_csv(path) -> list[RegretSummary]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SUMMARY_COLUMNS:
            raise ContractError(f"{path}: expected columns {','.join(SUMMARY_COLUMNS)}")
        return [
            RegretSummary(int(r["budget"]), float(r["mean"]), float(r["median"]),
                          float(r["q10"]), float(r["q90"]), int(r["n_runs"]))
            for r in reader
        ]


PLOT_SCRIPT = '''\
"""Log-log regret curves from summary.csv (generated by copopt sweep)."""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent
src = Path(sys.argv[1]) if len(sys.argv) > 1 else here / "summary.csv"
with open(src, newline="") as fh:
    rows = list(csv.DictReader(fh))
budgets = [int(r["budget"]) for r in rows]
fig, ax = plt.subplots(figsize=(5, 4))
for key, style in (("mean", "-o"), ("median", "-s"), ("q10", "--"), ("q90", "--")):
    ax.loglog(budgets, [float(r[key]) for r in rows], style, label=key)
ax.set_xlabel("evaluations N")
ax.set_ylabel("simple regret")
ax.set_title({title!r})
ax.grid(True, which="both", alpha=0.3)
ax.legend()
fig.tight_layout()
fig.savefig(here / "regret.png", dpi=150)
'''


def write_manifest(config: SweepConfig, path) -> None:
    from . import __version__

    payload = {"copopt_version": __version__, "config": config.to_dict()}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_manifest(path) -> SweepConfig:
    try:
        payload = json.loads(Path(path).read_text())
        return SweepConfig.from_dict(payload["config"])
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ContractError(f"{path}: not a sweep manifest ({exc})") from None


def write_outputs(records, summaries, config: SweepConfig, out_dir) -> dict[str, Path]:
    """Write records.csv, summary.csv, manifest.json and plot_regret.py into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "records": out / "records.csv",
        "summary": out / "summary.csv",
        "manifest": out / "manifest.json",
        "plot": out / "plot_regret.py",
    }
    write_records_csv(records, paths["records"])
    write_summary_csv(summaries, paths["summary"])
    write_manifest(config, paths["manifest"])
    title = f"{config.algo}, d={config.dim}, D={config.noise_std:g}, {config.runs} runs"
    paths["plot"].write_text(PLOT_SCRIPT.format(title=title))
    return paths
