"""Standard normal CDF, quantile and the clamped quantile used by the estimators."""
import math

from .errors import DomainError

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

# Acklam's rational approximation of the normal quantile (relative error < 1.2e-9).
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549671010286008e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425
_NEWTON_STEPS = 2


def std_normal_pdf(x: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def std_normal_cdf(x: float) -> float:
    """P(Z < x) for a standard normal Z, via the complementary error function."""
    if not math.isfinite(x):
        raise DomainError(f"std_normal_cdf needs a finite argument, got {x!r}")
    return 0.5 * math.erfc(-x / _SQRT2)


def _acklam_lower(p: float) -> float:
    # valid for 0 < p <= 0.5
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        return num / den
    q = p - 0.5
    r = q * q
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    return num / den


def _quantile_lower(p: float) -> float:
    x = _acklam_lower(p)
    for _ in range(_NEWTON_STEPS):
        dens = std_normal_pdf(x)
        if dens == 0.0:
            break
        x -= (0.5 * math.erfc(-x / _SQRT2) - p) / dens
    return x


def std_normal_quantile(p: float) -> float:
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1).

    Callers that may hold a frequency of exactly 0 or 1 should use
    :func:`clamped_quantile` instead.
    """
    if not (0.0 < p < 1.0):
        raise DomainError(f"std_normal_quantile needs 0 < p < 1, got {p!r}")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return _quantile_lower(p)
    return -_quantile_lower(1.0 - p)


def clamped_quantile(f: float, bound: float, scale: float) -> float:
    """``clip(std_normal_quantile(f) / scale, -bound, bound)``, total on [0, 1].

    ``f <= 0`` and ``f >= 1`` saturate at ``-bound`` and ``+bound``.
    """
    if not (bound > 0.0 and math.isfinite(bound)):
        raise DomainError(f"clamp bound must be positive and finite, got {bound!r}")
    if not scale > 0.0:
        raise DomainError(f"scale must be positive, got {scale!r}")
    if f <= 0.0:
        return -bound
    if f >= 1.0:
        return bound
    value = std_normal_quantile(f) / scale
    return min(bound, max(-bound, value))
