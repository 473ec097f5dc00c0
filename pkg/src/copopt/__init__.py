"""Comparison-based optimization of noisy quadratics at the O(1/N) simple-regret rate."""
from ._accel import USE_NUMBA
from .bench import (
    ExperimentRecord,
    RegretSummary,
    SweepConfig,
    aggregate,
    fit_loglog_slope,
    run_single,
    sweep,
    write_outputs,
)
from .cop import FrequencyEstimate, cop, pairwise_win_fraction
from .errors import BudgetError, ContractError, DomainError, GenerationInfeasible, InvariantError
from .normal import clamped_quantile, std_normal_cdf, std_normal_quantile
from .optimizers import (
    ModelEstimate,
    WideningSchedule,
    copquad,
    cops,
    cops1,
    fit_model_from_frequencies,
    kw_baseline,
    run_optimizer,
    solve_model,
    widening_bound,
)
from .oracle import (
    EvaluationCounter,
    NoisyQuadraticProblem,
    RandomStream,
    SphereProblem,
    evaluate_noisy,
    evaluate_true,
    generate_problem,
    optimum,
    restrict_to_axis,
    simple_regret,
)

__version__ = "0.1.0"
