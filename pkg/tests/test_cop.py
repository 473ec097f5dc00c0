import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from copopt.cop import (
    FrequencyEstimate,
    cop,
    cop_repeated,
    pairwise_win_fraction,
    pairwise_win_fraction_bruteforce,
)
from copopt.errors import BudgetError, ContractError
from copopt.normal import std_normal_cdf
from copopt.oracle import EvaluationCounter, RandomStream, SphereProblem, generate_problem


def brute_wins(xs, ys):
    return sum(1 for a in xs for b in ys if a < b)


def variance_se(f):
    """Standard error of the sample variance of ``f``."""
    m4 = np.mean((f - f.mean()) ** 4)
    return math.sqrt(max(m4 - f.var() ** 2, 0.0) / f.size)


def test_all_pairs_won():
    est = pairwise_win_fraction([0.0, 0.0], [1.0, 1.0])
    assert est.value == 1.0
    assert est.wins == 4 and est.samples_per_point == 2


def test_ties_lose():
    assert pairwise_win_fraction([2.5] * 3, [2.5] * 3).value == 0.0


def test_random_instances_match_bruteforce():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        k = int(rng.integers(1, 65))
        xs = np.round(rng.standard_normal(k), int(rng.integers(0, 3)))
        ys = np.round(rng.standard_normal(k), int(rng.integers(0, 3)))
        assert pairwise_win_fraction(xs, ys).wins == brute_wins(xs, ys)


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=40).flatmap(
    lambda xs: st.tuples(st.just(xs), st.lists(st.integers(-5, 5), min_size=len(xs), max_size=len(xs)))))
def test_kernel_equivalence_with_ties(pair):
    xs, ys = (np.array(v, dtype=float) for v in pair)
    fast = pairwise_win_fraction(xs, ys)
    assert fast.wins == brute_wins(xs, ys) == pairwise_win_fraction_bruteforce(xs, ys).wins
    assert fast.value == fast.wins / len(xs) ** 2


def test_value_times_k_squared_is_integer():
    est = pairwise_win_fraction(np.arange(7.0), np.arange(7.0)[::-1] + 0.5)
    assert est.value * 49 == est.wins
    assert 0 <= est.wins <= 49


def test_length_mismatch():
    with pytest.raises(ContractError):
        pairwise_win_fraction([1.0, 2.0], [1.0])
    with pytest.raises(ContractError):
        pairwise_win_fraction([], [])


def test_cop_consumes_exactly_2k():
    sphere = SphereProblem(np.array([0.2]))
    counter = EvaluationCounter(100)
    est = cop(30, [1.0], [-1.0], sphere, RandomStream(0), counter)
    assert counter.consumed == 60
    assert isinstance(est, FrequencyEstimate) and est.samples_per_point == 30


def test_cop_insufficient_budget():
    sphere = SphereProblem(np.array([0.2]))
    counter = EvaluationCounter(59)
    with pytest.raises(BudgetError):
        cop(30, [1.0], [-1.0], sphere, RandomStream(0), counter)
    assert counter.consumed == 0


@pytest.mark.parametrize("x_star", [0.0, 0.25])
def test_cop_mean_on_sphere(x_star):
    sphere = SphereProblem(np.array([x_star]))
    K, M = 50, 10_000
    stream = RandomStream(123, int(x_star * 100))
    f = np.array([cop(K, [1.0], [-1.0], sphere, stream.child(m), EvaluationCounter(2 * K)).value for m in range(M)])
    expected = std_normal_cdf(math.sqrt(8) * x_star)
    assert abs(f.mean() - expected) <= 3 * f.std(ddof=1) / math.sqrt(M)


@pytest.mark.parametrize("x_star", [0.0, 0.5, -0.9])
def test_cop_variance_bound_on_sphere(x_star):
    K = 50
    f = cop_repeated(K, [1.0], [-1.0], SphereProblem(np.array([x_star])), RandomStream(5), 10_000)
    assert f.var(ddof=1) <= 1 / (2 * K) * 1.1


@pytest.mark.parametrize("K", [10, 50, 200])
def test_variance_law(K):
    problem = generate_problem(2, 1.0, 0.1, 0.1, RandomStream(K))
    f = cop_repeated(K, [0.0, 0.0], [1.0, 0.0], problem, RandomStream(K, 1), 10_000)
    assert f.var(ddof=1) <= 1 / (2 * K) + 3 * variance_se(f)


def test_mean_law_on_quadratics():
    rng = np.random.default_rng(2)
    for n in range(5):
        D = float(rng.choice([0.5, 1.0, 10.0]))
        problem = generate_problem(2, D, 0.1 * D, 0.1, RandomStream(n))
        x, y = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
        delta = problem.value(y) - problem.value(x)
        f = cop_repeated(50, x, y, problem, RandomStream(n, 7), 10_000)
        expected = std_normal_cdf(delta / (math.sqrt(2) * D))
        assert abs(f.mean() - expected) <= 4 * f.std(ddof=1) / math.sqrt(f.size)


def test_swap_antisymmetry_on_shared_samples():
    rng = np.random.default_rng(8)
    for _ in range(100):
        k = int(rng.integers(1, 80))
        xs, ys = rng.standard_normal(k), rng.standard_normal(k) + 0.3
        assert pairwise_win_fraction(xs, ys).value + pairwise_win_fraction(ys, xs).value == 1.0


def test_cop_repeated_matches_single_kernel():
    sphere = SphereProblem(np.array([0.1]))
    f = cop_repeated(17, [1.0], [-1.0], sphere, RandomStream(3), 5)
    s = RandomStream(3)
    fx = sphere.value([1.0]) + s.normal((5, 17))
    fy = sphere.value([-1.0]) + s.normal((5, 17))
    assert np.array_equal(f, [pairwise_win_fraction(a, b).value for a, b in zip(fx, fy)])
