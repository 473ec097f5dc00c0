import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _oracles import analytic_frequencies, loglog_slope
from copopt.errors import ContractError
from copopt.optimizers import (
    ModelEstimate,
    WideningSchedule,
    copquad,
    copquad_detailed,
    cops,
    cops1,
    fit_model_from_frequencies,
    kw_baseline,
    plan_budget,
    quadratic_design,
    run_optimizer,
    solve_model,
    widening_bound,
)
from copopt.oracle import (
    EvaluationCounter,
    NoisyQuadraticProblem,
    RandomStream,
    SphereProblem,
    generate_problem,
    random_sphere_optimum,
    simple_regret,
)


# -- COPS1 ----------------------------------------------------------------------

def test_cops1_symmetric_optimum():
    sphere = SphereProblem(np.array([0.0]))
    xs = [cops1(sphere, 2**14, RandomStream(r)) for r in range(50)]
    assert np.median(np.abs(xs)) <= 0.05


def test_cops1_saturates_on_noiseless_oracle():
    sphere = SphereProblem(np.array([0.4]), noise_std=0.0)  # F(1) < F(-1) on every sample: f = 1
    assert cops1(sphere, 20, RandomStream(0)) == 1.0
    assert cops1(SphereProblem(np.array([-0.4]), 0.0), 20, RandomStream(0)) == -1.0


@pytest.mark.parametrize("N", [0, 1, 7, 101])
def test_cops1_budget_contract(N):
    with pytest.raises(ContractError):
        cops1(SphereProblem(np.array([0.0])), N, RandomStream(0))


def test_cops1_consumes_budget_and_stays_in_interval():
    sphere = SphereProblem(np.array([0.9]))
    for r in range(30):
        counter = EvaluationCounter(64)
        x = cops1(sphere, 64, RandomStream(r), counter)
        assert counter.consumed == 64
        assert -1.0 <= x <= 1.0


def test_cops1_rate():
    sphere = SphereProblem(np.array([0.5]))
    budgets = [2**k for k in range(8, 17)]
    medians = [np.median([simple_regret(sphere, [cops1(sphere, N, RandomStream(r, N))]) for r in range(50)])
               for N in budgets]
    assert -1.3 <= loglog_slope(budgets, medians) <= -0.7


# -- COPS -----------------------------------------------------------------------

def test_cops_origin():
    sphere = SphereProblem(np.zeros(3))
    sq = [float(np.sum(cops(sphere, 3 * 2**12, RandomStream(r)) ** 2)) for r in range(50)]
    assert np.median(sq) <= 0.01


def test_cops_rate_d2():
    sphere = SphereProblem(np.array([0.3, -0.4]))
    budgets = [2**k for k in range(8, 17)]
    medians = [np.median([simple_regret(sphere, cops(sphere, N, RandomStream(r, N))) for r in range(50)])
               for N in budgets]
    assert abs(loglog_slope(budgets, medians) + 1) <= 0.3


def test_cops_budget_contract():
    with pytest.raises(ContractError):
        cops(SphereProblem(np.zeros(3)), 5, RandomStream(0))


@pytest.mark.parametrize("d,N", [(1, 10), (2, 10), (3, 100), (4, 2**12 + 3)])
def test_cops_spends_largest_even_share(d, N):
    counter = EvaluationCounter(N)
    cops(SphereProblem(np.zeros(d)), N, RandomStream(0), counter)
    per_axis = (N // d) - (N // d) % 2
    assert counter.consumed == d * per_axis <= N


def test_cops_literal_budget_spends_half():
    counter = EvaluationCounter(2**12)
    cops(SphereProblem(np.zeros(2)), 2**12, RandomStream(0), counter, paper_literal=True)
    assert counter.consumed == 2**11


# -- model fitting ----------------------------------------------------------------

def test_fit_all_half_is_zero_model():
    freqs = {label: 0.5 for label, _, _ in quadratic_design(3)}
    model = fit_model_from_frequencies(freqs, 5.0)
    assert np.array_equal(model.B_hat, np.zeros(3))
    assert np.array_equal(model.A_hat, np.zeros((3, 3)))


@pytest.mark.parametrize("d", [1, 2, 3, 5])
def test_fit_recovers_exact_frequencies(d):
    for seed in range(10):
        problem = generate_problem(d, 1.0, 0.1, 0.1, RandomStream(seed, d))
        model = fit_model_from_frequencies(analytic_frequencies(problem), 5.0)
        assert np.linalg.norm(model.A_hat - problem.A / problem.D) <= 1e-9
        assert np.linalg.norm(model.B_hat - problem.B / problem.D) <= 1e-9


@settings(max_examples=100)
@given(st.integers(1, 5).flatmap(lambda d: st.lists(st.floats(0, 1), min_size=2 * d + d * (d - 1) // 2,
                                                     max_size=2 * d + d * (d - 1) // 2)))
def test_fit_model_symmetric_and_bounded(values):
    n = len(values)
    d = next(k for k in range(1, 6) if 2 * k + k * (k - 1) // 2 == n)
    freqs = {label: v for (label, _, _), v in zip(quadratic_design(d), values)}
    model = fit_model_from_frequencies(freqs, 5.0)
    assert np.array_equal(model.A_hat, model.A_hat.T)
    assert np.all(np.abs(model.B_hat) <= 5.0)


def test_fit_missing_label():
    freqs = {label: 0.5 for label, _, _ in quadratic_design(2)}
    del freqs[("cross", 0, 1)]
    with pytest.raises(ContractError):
        fit_model_from_frequencies(freqs)


# -- solve ----------------------------------------------------------------------

def test_solve_identity():
    sol = solve_model(ModelEstimate(np.eye(2), np.array([-2.0, 0.0]), 5.0))
    assert np.allclose(sol.unprojected, [1.0, 0.0], atol=1e-15)
    assert np.linalg.norm(sol.x_hat) == pytest.approx(1.0)
    assert not sol.singular


def test_solve_singular_gives_origin():
    sol = solve_model(ModelEstimate(np.zeros((2, 2)), np.array([1.0, 2.0]), 5.0))
    assert sol.singular
    assert np.array_equal(sol.x_hat, np.zeros(2))


def test_solve_projects_radially():
    sol = solve_model(ModelEstimate(np.eye(2), np.array([-4.0, 0.0]), 5.0))
    assert np.allclose(sol.unprojected, [2.0, 0.0])
    assert np.allclose(sol.x_hat, [1.0, 0.0])
    assert sol.projected


def test_solve_matches_numpy_on_random_models():
    rng = np.random.default_rng(1)
    for _ in range(200):
        d = int(rng.integers(1, 7))
        m = rng.standard_normal((d, d))
        a = m + m.T + d * np.eye(d)
        b = rng.standard_normal(d)
        sol = solve_model(ModelEstimate(a, b, 5.0), projection_radius=np.inf)
        assert np.allclose(sol.x_hat, -0.5 * np.linalg.solve(a, b), rtol=1e-10, atol=1e-12)


def test_solve_relative_pivot_threshold():
    eps = 1e-10
    sol = solve_model(ModelEstimate(np.array([[1.0, 1.0], [1.0, 1.0 + eps]]), np.array([1.0, 1.0]), 5.0))
    assert sol.singular


# -- COPQUAD ----------------------------------------------------------------------

def test_copquad_symmetric_bowl():
    problem = NoisyQuadraticProblem(np.eye(2), np.zeros(2), 0.0, 1.0)
    norms = [np.linalg.norm(copquad(problem, 10**5, RandomStream(r))) for r in range(50)]
    assert np.median(norms) <= 0.05


@pytest.mark.parametrize("d", [1, 2, 3, 5])
def test_copquad_consumption_and_ball(d):
    problem = generate_problem(d, 1.0, 0.1, 0.1, RandomStream(d))
    for N in [d * (d + 3), 1000, 4097]:
        counter = EvaluationCounter(N)
        x = copquad(problem, N, RandomStream(N), counter=counter)
        K = N // (d * (d + 3))
        assert counter.consumed == 2 * K * (2 * d + d * (d - 1) // 2) <= N
        assert np.linalg.norm(x) <= 1 + 1e-12


def test_copquad_budget_too_small():
    problem = generate_problem(2, 1.0, 0.1, 0.1, RandomStream(0))
    with pytest.raises(ContractError):
        copquad(problem, 9, RandomStream(0))


def test_copquad_literal_budget_can_overspend():
    problem = generate_problem(2, 1.0, 0.1, 0.1, RandomStream(0))
    res = run_optimizer(problem, 800, 3, "copquad", paper_literal_budget=True)
    assert res.plan.samples_per_point == 800 // 8
    assert res.consumed == 1000


def test_copquad_deterministic():
    problem = generate_problem(3, 1.0, 0.1, 0.1, RandomStream(0))
    a = copquad(problem, 5000, RandomStream(42))
    b = copquad(problem, 5000, RandomStream(42))
    assert a.tobytes() == b.tobytes()


def test_copquad_model_is_clamped():
    # tiny noise: every frequency is 0 or 1, so every theta saturates
    problem = NoisyQuadraticProblem(np.eye(2), np.array([0.3, -0.2]), 0.0, 1e-6)
    res = copquad_detailed(problem, 1000, RandomStream(0))
    assert np.all(np.abs(res.model.B_hat) <= 5.0)
    assert res.model.bound == 5.0


def test_copquad_uses_widening_bound():
    problem = generate_problem(2, 1.0, 0.1, 0.1, RandomStream(0))
    res = copquad_detailed(problem, 2**12, RandomStream(0), WideningSchedule("slow-growth"))
    assert res.model.bound == widening_bound(2**12, WideningSchedule("slow-growth"))


# -- widening -----------------------------------------------------------------------

def test_widening_fixed():
    for N in [1, 10, 10**9]:
        assert widening_bound(N, WideningSchedule()) == 5.0


def test_widening_slow_growth_formula_and_monotone():
    sched = WideningSchedule("slow-growth")
    assert widening_bound(1, sched) == 5.0 + math.log(1 + math.log(1 + math.log(2)))
    vals = [widening_bound(10**k, sched) for k in range(1, 10)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert all(v >= 5.0 for v in vals)


def test_widening_rejects_bad_mode():
    with pytest.raises(ContractError):
        WideningSchedule("fast")


# -- baseline -------------------------------------------------------------------

def test_kw_noiseless_sphere():
    sphere = SphereProblem(np.array([0.37]), noise_std=0.0)
    x = kw_baseline(sphere, 2000, RandomStream(0))
    assert abs(x[0] - 0.37) <= 0.05


def test_kw_noisy_smoke():
    sphere = SphereProblem(np.array([0.3, -0.4]))
    for N in [2**8, 2**10, 2**12]:
        counter = EvaluationCounter(N)
        x = kw_baseline(sphere, N, RandomStream(N), counter=counter)
        assert np.all(np.isfinite(x))
        assert counter.consumed == 2 * 2 * (N // 4) <= N


# -- entry point / ledger -----------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["cops", "copquad", "copquad-widening", "kw"]), st.integers(1, 4), st.integers(20, 3000))
def test_budget_ledger(algo, d, N):
    if algo in ("cops", "kw"):
        problem = SphereProblem(np.zeros(d))
    else:
        problem = generate_problem(d, 1.0, 0.1, 0.1, RandomStream(d))
    try:
        plan = plan_budget(algo, d, N)
    except ContractError:
        return
    res = run_optimizer(problem, N, 0, algo)
    assert res.consumed == plan.consumed == 2 * plan.samples_per_point * plan.n_calls
    assert res.consumed <= N


def test_run_optimizer_cops1_and_determinism():
    sphere = SphereProblem(np.array([random_sphere_optimum(1, RandomStream(1))[0]]))
    a = run_optimizer(sphere, 1000, 5, "cops1")
    b = run_optimizer(sphere, 1000, 5, "cops1")
    assert a.x_hat.tobytes() == b.x_hat.tobytes()
    assert a.consumed == 1000


def test_run_optimizer_reports_diagnostics():
    problem = generate_problem(2, 1.0, 0.1, 0.1, RandomStream(0))
    res = run_optimizer(problem, 2000, 1, "copquad")
    assert set(res.diagnostics) >= {"singular_branch", "projection_hit", "model"}


def test_run_optimizer_unknown_algorithm():
    with pytest.raises(ContractError):
        run_optimizer(SphereProblem(np.zeros(1)), 100, 0, "nelder-mead")
