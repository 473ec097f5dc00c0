"""Comparison-based optimizers (COPS1, COPS, COPQUAD) and a finite-difference baseline.

All optimizers draw noise from a :class:`~copopt.oracle.RandomStream` and
charge an :class:`~copopt.oracle.EvaluationCounter`; every COP call gets its
own child stream so results do not depend on evaluation order elsewhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import _kernels
from .cop import FrequencyEstimate, cop
from .errors import ContractError
from .normal import clamped_quantile
from .oracle import EvaluationCounter, RandomStream, restrict_to_axis, sample_noisy

ALGORITHMS = ("cops1", "cops", "copquad", "copquad-widening", "kw")

SQRT2 = math.sqrt(2.0)
SQRT8 = math.sqrt(8.0)
DEFAULT_CLAMP = 5.0
SINGULAR_REL_TOL = 1e-9


# -- budget plans -------------------------------------------------------------

@dataclass(frozen=True)
class BudgetPlan:
    algorithm: str
    budget: int
    samples_per_point: int
    n_calls: int

    @property
    def consumed(self) -> int:
        return 2 * self.samples_per_point * self.n_calls

    @property
    def leftover(self) -> int:
        # negative only for the literal COPQUAD divisor, which can overspend
        return self.budget - self.consumed


def copquad_calls(d: int) -> int:
    return 2 * d + d * (d - 1) // 2


def plan_budget(algorithm: str, d: int, N: int, paper_literal: bool = False) -> BudgetPlan:
    """Sample counts per COP call for ``algorithm`` with total budget ``N``.

    * cops1: one call with ``K = N / 2``; ``N`` must be even.
    * cops: per-axis budget is the largest even integer ``<= N / d``
      (literal: ``N / 2d``, itself rounded down to even).
    * copquad: ``K = floor(N / (d (d + 3)))`` so that ``2 K`` evaluations for
      each of the ``2d + d(d-1)/2`` calls fit in ``N``
      (literal: ``floor(N / (d (d + 3) - 2))``, which may exceed ``N``).
    * kw: ``floor(N / 2d)`` iterations of a two-point difference per axis.
    """
    if d < 1:
        raise ContractError(f"dimension must be >= 1, got {d}")
    if N < 1:
        raise ContractError(f"budget must be positive, got {N}")
    if algorithm == "cops1":
        if d != 1:
            raise ContractError(f"cops1 is one-dimensional, got d={d}")
        if N < 2 or N % 2:
            raise ContractError(f"cops1 needs an even budget >= 2, got {N}")
        return BudgetPlan(algorithm, N, N // 2, 1)
    if algorithm == "cops":
        if N < 2 * d:
            raise ContractError(f"cops needs a budget >= 2d = {2 * d}, got {N}")
        per_axis = N // (2 * d) if paper_literal else N // d
        per_axis -= per_axis % 2
        if per_axis < 2:
            raise ContractError(f"cops budget {N} leaves fewer than 2 evaluations per axis")
        return BudgetPlan(algorithm, N, per_axis // 2, d)
    if algorithm in ("copquad", "copquad-widening"):
        divisor = d * (d + 3) - (2 if paper_literal else 0)
        K = N // divisor
        if K < 1:
            raise ContractError(f"{algorithm} needs a budget >= {divisor} in dimension {d}, got {N}")
        return BudgetPlan(algorithm, N, K, copquad_calls(d))
    if algorithm == "kw":
        iterations = N // (2 * d)
        if iterations < 1:
            raise ContractError(f"kw needs a budget >= 2d = {2 * d}, got {N}")
        return BudgetPlan(algorithm, N, 1, iterations * d)
    raise ContractError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")


# -- clamp schedule -----------------------------------------------------------

@dataclass(frozen=True)
class WideningSchedule:
    mode: str = "fixed"
    base: float = DEFAULT_CLAMP

    def __post_init__(self):
        if self.mode not in ("fixed", "slow-growth"):
            raise ContractError(f"unknown widening mode {self.mode!r}")
        if not (self.base > 0 and math.isfinite(self.base)):
            raise ContractError(f"clamp base must be positive, got {self.base}")


def widening_bound(N: int, schedule: WideningSchedule = WideningSchedule()) -> float:
    """Clamp half-width for budget ``N``: ``base`` or ``base + ln(1 + ln(1 + ln(1 + N)))``."""
    if N < 1:
        raise ContractError(f"budget must be >= 1, got {N}")
    if schedule.mode == "fixed":
        return schedule.base
    return schedule.base + math.log1p(math.log1p(math.log1p(N)))


# -- COPS1 / COPS -------------------------------------------------------------

def cops1(oracle_1d, N: int, stream: RandomStream, counter: EvaluationCounter | None = None) -> float:
    """One COP between +1 and -1, inverted through the normal quantile.

    Returns ``clip(quantile(f) / sqrt(8), -1, 1)``.
    """
    plan = plan_budget("cops1", 1, N)
    if counter is None:
        counter = EvaluationCounter(N)
    f = cop(plan.samples_per_point, [1.0], [-1.0], oracle_1d, stream.child(0), counter)
    return clamped_quantile(f.value, 1.0, SQRT8)


def cops(
    oracle,
    N: int,
    stream: RandomStream,
    counter: EvaluationCounter | None = None,
    paper_literal: bool = False,
) -> np.ndarray:
    """COPS1 on each axis restriction in turn."""
    d = oracle.dim
    plan = plan_budget("cops", d, N, paper_literal)
    if counter is None:
        counter = EvaluationCounter(N)
    per_axis = 2 * plan.samples_per_point
    return np.array([
        cops1(restrict_to_axis(oracle, i), per_axis, stream.child(i), counter)
        for i in range(d)
    ])


# -- COPQUAD --------------------------------------------------------------------

def quadratic_design(d: int) -> list[tuple[tuple, np.ndarray, np.ndarray]]:
    """The compared pairs, in call order, as ``(label, x, y)``.

    Labels: ``("sym", i)`` for (-e_i, e_i), ``("axis", i)`` for (0, e_i),
    ``("cross", i, j)`` for (0, e_i + e_j) with ``i < j``.
    """
    eye = np.eye(d)
    zero = np.zeros(d)
    pairs = []
    for i in range(d):
        pairs.append((("sym", i), -eye[i], eye[i]))
        pairs.append((("axis", i), zero, eye[i]))
    for i in range(d):
        for j in range(i + 1, d):
            pairs.append((("cross", i, j), zero, eye[i] + eye[j]))
    return pairs


@dataclass(frozen=True, eq=False)
class ModelEstimate:
    """Clamped estimates of ``A / D`` and ``B / D``."""

    A_hat: np.ndarray
    B_hat: np.ndarray
    bound: float


@dataclass(frozen=True, eq=False)
class ModelSolution:
    x_hat: np.ndarray
    unprojected: np.ndarray
    singular: bool
    projected: bool


def fit_model_from_frequencies(freqs: Mapping, bound: float = DEFAULT_CLAMP) -> ModelEstimate:
    """Invert COP frequencies into ``(A_hat, B_hat)``.

    ``freqs`` maps the labels of :func:`quadratic_design` to frequencies
    (floats or :class:`FrequencyEstimate`). The dimension is taken from the
    ``("sym", i)`` labels.
    """
    def get(label):
        try:
            v = freqs[label]
        except KeyError:
            raise ContractError(f"missing frequency for pair {label}") from None
        return v.value if isinstance(v, FrequencyEstimate) else float(v)

    d = sum(1 for label in freqs if label[0] == "sym")
    if d == 0:
        raise ContractError("no ('sym', i) frequencies given")
    B_hat = np.empty(d)
    A_hat = np.empty((d, d))
    for i in range(d):
        B_hat[i] = clamped_quantile(get(("sym", i)), bound, SQRT2)
        theta = clamped_quantile(get(("axis", i)), bound, 1.0 / SQRT2)
        A_hat[i, i] = theta - B_hat[i]
    for i in range(d):
        for j in range(i + 1, d):
            theta = clamped_quantile(get(("cross", i, j)), bound, 1.0 / SQRT2)
            A_hat[i, j] = 0.5 * (theta - B_hat[i] - A_hat[i, i] - B_hat[j] - A_hat[j, j])
            A_hat[j, i] = A_hat[i, j]
    return ModelEstimate(A_hat, B_hat, bound)


def solve_model(model: ModelEstimate, projection_radius: float = 1.0) -> ModelSolution:
    """Minimizer of the fitted model, origin if ``A_hat`` is singular, projected on the ball."""
    rhs = -np.asarray(model.B_hat, dtype=np.float64)
    x, singular = _kernels.solve_pivoted(
        np.ascontiguousarray(2.0 * np.asarray(model.A_hat, dtype=np.float64)), rhs, SINGULAR_REL_TOL
    )
    x = np.asarray(x, dtype=float)
    singular = bool(singular)
    unprojected = x.copy()
    norm = float(np.linalg.norm(x))
    projected = norm > projection_radius
    if projected:
        x = x * (projection_radius / norm)
    return ModelSolution(x, unprojected, singular, projected)


@dataclass(frozen=True, eq=False)
class CopquadResult:
    x_hat: np.ndarray
    model: ModelEstimate
    solution: ModelSolution
    frequencies: dict = field(repr=False)


def copquad_detailed(
    oracle,
    N: int,
    stream: RandomStream,
    schedule: WideningSchedule = WideningSchedule(),
    counter: EvaluationCounter | None = None,
    paper_literal: bool = False,
) -> CopquadResult:
    d = oracle.dim
    plan = plan_budget("copquad", d, N, paper_literal)
    if counter is None:
        counter = EvaluationCounter(max(N, plan.consumed))
    K = plan.samples_per_point
    freqs = {}
    for call, (label, x, y) in enumerate(quadratic_design(d)):
        freqs[label] = cop(K, x, y, oracle, stream.child(call), counter, pair_label=label)
    model = fit_model_from_frequencies(freqs, widening_bound(N, schedule))
    solution = solve_model(model)
    return CopquadResult(solution.x_hat, model, solution, freqs)


def copquad(
    oracle,
    N: int,
    stream: RandomStream,
    schedule: WideningSchedule = WideningSchedule(),
    counter: EvaluationCounter | None = None,
    paper_literal: bool = False,
) -> np.ndarray:
    return copquad_detailed(oracle, N, stream, schedule, counter, paper_literal).x_hat


# -- finite-difference baseline -------------------------------------------------

def kw_baseline(
    oracle,
    N: int,
    stream: RandomStream,
    a: float = 1.0,
    c: float = 1.0,
    counter: EvaluationCounter | None = None,
    radius: float = 1.0,
) -> np.ndarray:
    """Projected Kiefer-Wolfowitz descent with gains ``a/n`` and spans ``c/n**0.25``.

    Starts at the origin; iterates are kept in the ball of ``radius``.
    """
    d = oracle.dim
    plan = plan_budget("kw", d, N)
    if counter is None:
        counter = EvaluationCounter(N)
    iterations = plan.n_calls // d
    noise_stream = stream.child(0)
    eye = np.eye(d)
    x = np.zeros(d)
    for n in range(1, iterations + 1):
        span = c / n**0.25
        grad = np.empty(d)
        for i in range(d):
            up = sample_noisy(oracle, x + span * eye[i], 1, noise_stream, counter)[0]
            down = sample_noisy(oracle, x - span * eye[i], 1, noise_stream, counter)[0]
            grad[i] = (up - down) / (2.0 * span)
        x = x - (a / n) * grad
        norm = np.linalg.norm(x)
        if norm > radius:
            x *= radius / norm
    return x


# -- library entry point ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OptimizerResult:
    x_hat: np.ndarray
    consumed: int
    plan: BudgetPlan
    diagnostics: dict


def run_optimizer(
    problem,
    budget: int,
    seed: int | RandomStream,
    algorithm: str,
    *,
    paper_literal_budget: bool = False,
    clamp_bound: float = DEFAULT_CLAMP,
    kw_gain: float = 1.0,
    kw_span: float = 1.0,
) -> OptimizerResult:
    """Run ``algorithm`` on ``problem`` and check the evaluation ledger.

    ``diagnostics`` always has ``singular_branch`` and ``projection_hit``;
    COPQUAD runs add the fitted ``model``.
    """
    stream = seed if isinstance(seed, RandomStream) else RandomStream(seed)
    d = problem.dim
    plan = plan_budget(algorithm, d, budget, paper_literal_budget)
    counter = EvaluationCounter(max(budget, plan.consumed))
    diagnostics = {"singular_branch": False, "projection_hit": False}
    if algorithm == "cops1":
        x_hat = np.array([cops1(problem, budget, stream, counter)])
    elif algorithm == "cops":
        x_hat = cops(problem, budget, stream, counter, paper_literal_budget)
    elif algorithm in ("copquad", "copquad-widening"):
        mode = "slow-growth" if algorithm == "copquad-widening" else "fixed"
        res = copquad_detailed(
            problem, budget, stream, WideningSchedule(mode, clamp_bound), counter, paper_literal_budget
        )
        x_hat = res.x_hat
        diagnostics.update(
            singular_branch=res.solution.singular,
            projection_hit=res.solution.projected,
            model=res.model,
        )
    elif algorithm == "kw":
        x_hat = kw_baseline(problem, budget, stream, kw_gain, kw_span, counter)
    else:
        raise ContractError(f"unknown algorithm {algorithm!r}")
    if counter.consumed != plan.consumed:
        raise AssertionError(f"{algorithm} consumed {counter.consumed} evaluations, plan says {plan.consumed}")
    return OptimizerResult(x_hat, counter.consumed, plan, diagnostics)
