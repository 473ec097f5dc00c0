"""Self-checks behind ``copopt check``.

Each check returns ``(passed, detail)``; none needs scipy.
"""
from __future__ import annotations

import math

import numpy as np

from .cop import cop_repeated, pairwise_win_fraction, pairwise_win_fraction_bruteforce
from .normal import std_normal_cdf, std_normal_quantile
from .oracle import RandomStream, SphereProblem


def kernel_equivalence(instances: int = 1000, max_k: int = 64, seed: int = 0):
    rng = np.random.default_rng(seed)
    for n in range(instances):
        k = int(rng.integers(1, max_k + 1))
        # coarse rounding makes ties common, which is where kernels disagree if anything does
        xs = np.round(rng.standard_normal(k), int(rng.integers(0, 3)))
        ys = np.round(rng.standard_normal(k), int(rng.integers(0, 3)))
        fast = pairwise_win_fraction(xs, ys).wins
        slow = pairwise_win_fraction_bruteforce(xs, ys).wins
        if fast != slow:
            return False, f"instance {n} (K={k}): sorted kernel {fast} != brute force {slow}"
    return True, f"{instances} instances, K <= {max_k}, all identical"


def cdf_round_trip(points: int = 10_001, resolvable: float = 5.5):
    """p -> x -> p on (0, 1), and x -> p -> x where binary64 resolves Phi(x).

    Above |x| ~ 5.7 the spacing of doubles near 1 alone exceeds the 1e-8
    tolerance, so the x-space round trip is only checked on ``|x| <= resolvable``.
    """
    xs = np.linspace(-8.0, 8.0, points)
    ps = np.linspace(0.0, 1.0, points)[1:-1]
    err_p = max(abs(std_normal_cdf(std_normal_quantile(p)) - p) for p in ps)
    err_x = max(abs(std_normal_quantile(std_normal_cdf(x)) - x) for x in xs if abs(x) <= resolvable)
    ok = err_p <= 1e-9 and err_x <= 1e-8
    return ok, f"max |Phi(q(p)) - p| = {err_p:.2e}, max |q(Phi(x)) - x| (|x| <= {resolvable}) = {err_x:.2e}"


def variance_law(ks=(10, 50, 200), repeats: int = 10_000, seed: int = 0):
    """Empirical Var(f) against 1/(2K) for the pair (1, -1) on the unit-noise sphere."""
    problem = SphereProblem(np.array([0.25]))
    details = []
    ok = True
    for k in ks:
        f = cop_repeated(k, [1.0], [-1.0], problem, RandomStream(seed, (k,)), repeats)
        var = f.var(ddof=1)
        # standard error of the sample variance, from the fourth central moment
        m4 = np.mean((f - f.mean()) ** 4)
        se = math.sqrt(max(m4 - var**2, 0.0) / repeats)
        bound = 1.0 / (2 * k)
        ok &= var <= bound + 3 * se
        details.append(f"K={k}: var={var:.3e} <= {bound:.3e}")
    return bool(ok), "; ".join(details)


CHECKS = {
    "kernel-equivalence": kernel_equivalence,
    "cdf-round-trip": cdf_round_trip,
    "variance-law": variance_law,
}
