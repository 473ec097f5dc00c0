"""The comparison procedure: how often do noisy samples of x beat those of y?"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from . import _kernels
from .errors import BudgetError, ContractError
from .oracle import EvaluationCounter, RandomStream, sample_noisy


@dataclass(frozen=True)
class FrequencyEstimate:
    """Fraction ``wins / K**2`` of sample pairs in which x beat y."""

    wins: int
    samples_per_point: int
    pair_label: Any = None

    @property
    def value(self) -> float:
        return self.wins / self.samples_per_point**2

    def __float__(self):
        return self.value


def _as_samples(values) -> np.ndarray:
    return np.ascontiguousarray(values, dtype=np.float64).reshape(-1)


def pairwise_win_fraction(samples_x, samples_y, pair_label=None) -> FrequencyEstimate:
    """Count pairs ``(i, j)`` with ``samples_x[i] < samples_y[j]`` in O(K log K).

    Ties count as losses.
    """
    xs = _as_samples(samples_x)
    ys = _as_samples(samples_y)
    if xs.size == 0 or xs.size != ys.size:
        raise ContractError(f"need two non-empty sample lists of equal length, got {xs.size} and {ys.size}")
    return FrequencyEstimate(int(_kernels.count_wins(xs, ys)), xs.size, pair_label)


def pairwise_win_fraction_bruteforce(samples_x, samples_y) -> FrequencyEstimate:
    """The O(K^2) double loop, kept as a reference for the fast kernel."""
    xs = _as_samples(samples_x)
    ys = _as_samples(samples_y)
    if xs.size == 0 or xs.size != ys.size:
        raise ContractError(f"need two non-empty sample lists of equal length, got {xs.size} and {ys.size}")
    return FrequencyEstimate(int(_kernels.count_wins_bruteforce(xs, ys)), xs.size)


def cop(
    K: int,
    x,
    y,
    oracle,
    stream: RandomStream,
    counter: EvaluationCounter,
    pair_label=None,
) -> FrequencyEstimate:
    """Evaluate ``x`` and ``y`` K times each and return the win fraction of x.

    Consumes exactly ``2 K`` evaluations from ``counter``.
    """
    if K < 1:
        raise ContractError(f"K must be a positive integer, got {K}")
    if counter.remaining < 2 * K:
        raise BudgetError(f"COP with K={K} needs {2 * K} evaluations, {counter.remaining} left")
    fx = sample_noisy(oracle, x, K, stream, counter)
    fy = sample_noisy(oracle, y, K, stream, counter)
    return pairwise_win_fraction(fx, fy, pair_label)


def cop_repeated(K: int, x, y, oracle, stream: RandomStream, repeats: int) -> np.ndarray:
    """``repeats`` independent COP frequencies for the same pair, vectorized.

    Statistical checks only; no budget accounting.
    """
    fx = oracle.value(np.asarray(x, dtype=float)) + oracle.noise_std * stream.normal((repeats, K))
    fy = oracle.value(np.asarray(y, dtype=float)) + oracle.noise_std * stream.normal((repeats, K))
    return _kernels.count_wins_rows(fx, fy) / float(K * K)
