"""Scalar special functions used by the closed-form layer.

Exponential integral, truncated exponential series, and Gamma-law
helpers.  Everything here is a pure function of floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import special

__all__ = [
    "EULER_GAMMA",
    "GammaParams",
    "exp_integral_ei",
    "exp_e1_scaled",
    "trunc_exp_taylor",
    "lower_incomplete_gamma",
    "gamma_cdf",
    "gamma_pdf",
]

EULER_GAMMA = 0.57721566490153286060651209008240243

_SERIES_LIMIT = 40.0
_EPS = 1e-17
_MAX_ITER = 10_000


@dataclass(frozen=True)
class GammaParams:
    """Shape/rate parameterisation of a Gamma law."""

    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise ValueError(f"shape must be positive and finite, got {self.shape!r}")
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError(f"rate must be positive and finite, got {self.rate!r}")

    @property
    def mean(self) -> float:
        return self.shape / self.rate


def _ei_series(x: float) -> float:
    # Ei(x) = gamma + ln|x| + sum_{k>=1} x^k / (k k!)
    term = 1.0
    total = 0.0
    for k in range(1, _MAX_ITER):
        term *= x / k
        inc = term / k
        total += inc
        if abs(inc) <= _EPS * abs(total):
            break
    return EULER_GAMMA + math.log(abs(x)) + total


def _ei_asymptotic(x: float) -> float:
    # e^x / x * sum k!/x^k, truncated at the smallest term
    total = 1.0
    term = 1.0
    for k in range(1, int(x) + 1):
        new = term * k / x
        if new > term:
            break
        term = new
        total += term
        if term < _EPS * total:
            break
    return math.exp(x) / x * total


def _e1_scaled_cf(x: float) -> float:
    """e^x E1(x) for x >= 1 by modified Lentz on the continued fraction."""
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise ArithmeticError(f"E1 continued fraction did not converge at x={x}")


def _e1(x: float) -> float:
    if x <= 1.0:
        return -_ei_series(-x)
    return math.exp(-x) * _e1_scaled_cf(x)


def exp_integral_ei(x: float) -> float:
    """Exponential integral Ei(x) for real, nonzero x.

    Positive arguments use the power series up to x = 40 and the
    asymptotic expansion beyond.  Negative arguments are evaluated as
    ``-E1(-x)``; the alternating series loses every digit there past
    |x| ~ 2, so E1 switches to its continued fraction.

    Raises
    ------
    ValueError
        At x = 0 (logarithmic singularity) or for non-finite input.
    """
    x = float(x)
    if x == 0.0:
        raise ValueError("Ei(x) is singular at x = 0")
    if math.isnan(x):
        raise ValueError("Ei(nan) is undefined")
    if x == math.inf:
        return math.inf
    if x == -math.inf:
        return 0.0
    if x > 0:
        if x <= _SERIES_LIMIT:
            return _ei_series(x)
        return _ei_asymptotic(x)
    return -_e1(-x)


def exp_e1_scaled(x: float) -> float:
    """``exp(x) * E1(x) = -exp(x) * Ei(-x)`` for x > 0, without overflow.

    Returns 0 at x = inf, which is the limit the ergodic-rate formulas
    need when an interference term vanishes.
    """
    x = float(x)
    if not x > 0:
        raise ValueError(f"exp_e1_scaled needs x > 0, got {x}")
    if x == math.inf:
        return 0.0
    if x <= 1.0:
        return math.exp(x) * _e1(x)
    return _e1_scaled_cf(x)


def trunc_exp_taylor(n: int, x):
    """Partial sum ``sum_{k=0}^{n} x**k / k!`` (degree-n convention).

    Works for floats and for mpmath numbers alike, since it only uses
    arithmetic.
    """
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    term = x ** 0
    total = term
    for k in range(1, n + 1):
        term = term * x / k
        total = total + term
    return total


def lower_incomplete_gamma(a: float, x: float) -> float:
    """gamma(a, x) = integral_0^x t^(a-1) e^(-t) dt."""
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    if x == 0:
        return 0.0
    return float(special.gammainc(a, x) * special.gamma(a))


def gamma_cdf(p: GammaParams, x: float) -> float:
    """CDF of a Gamma(shape, rate) law at x."""
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    if x == 0:
        return 0.0
    return float(special.gammainc(p.shape, p.rate * x))


def gamma_pdf(p: GammaParams, x: float) -> float:
    if x < 0:
        return 0.0
    if x == 0:
        if p.shape == 1:
            return p.rate
        return 0.0 if p.shape > 1 else math.inf
    log_pdf = p.shape * math.log(p.rate) + (p.shape - 1) * math.log(x) - p.rate * x - math.lgamma(p.shape)
    return math.exp(log_pdf)
