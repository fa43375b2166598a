"""Closed-form outage probabilities and ergodic rates, with quadrature oracles.

Gains are modelled as independent Gamma variables:

* common signal       ~ Gamma(1, phi / (zeta alpha))
* common interference ~ Gamma(U, phi / (zeta chi beta))
* private signal      ~ Gamma(1, phi / (zeta beta))
* private interference~ Gamma(1, phi / (zeta chi alpha))

and ``phi`` normalizes the projected covariance.  The closed forms
follow from these laws.  The ``*_quadrature`` functions integrate the
same laws numerically and never call the closed forms, so each pair
checks the algebra independently.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath
import numpy as np
from scipy import integrate

from . import specialfn
from .precoder import GroupPrecoder
from .specialfn import GammaParams

__all__ = [
    "GainLaw",
    "QuadratureError",
    "phi_parameter",
    "gain_laws",
    "outage_common",
    "outage_private",
    "outage_total",
    "outage_common_quadrature",
    "outage_private_quadrature",
    "cdf_common",
    "cdf_private",
    "cdf_min_common",
    "ergodic_common",
    "ergodic_common_user",
    "ergodic_private",
    "ergodic_private_user",
    "ergodic_by_quadrature",
    "ergodic_common_quadrature",
    "ergodic_private_quadrature",
]

_LN2 = math.log(2.0)
_SINGULAR_OFFSET = 1e-9


class QuadratureError(ArithmeticError):
    pass


@dataclass(frozen=True)
class GainLaw:
    """Gamma laws of the four SINR gain terms for one user.

    The interference laws are ``None`` when ``chi == 0``: the term is
    then identically zero.
    """

    common_signal: GammaParams
    common_interference: GammaParams | None
    private_signal: GammaParams
    private_interference: GammaParams | None
    phi: float


def phi_parameter(f: GroupPrecoder | np.ndarray, covariance: np.ndarray, projected_dim: int | None = None,
                  *, printed: bool = False) -> float:
    """Rate normalizer of the gain laws.

    By default ``phi = (M_bar/2) / tr(F^H R F)``: the unit-norm beams
    live in ``M_bar/2`` dimensions, so ``E{|h^H F c|^2} = zeta tr(F^H R F)
    / (M_bar/2)``.  ``printed=True`` uses ``M_bar`` in the numerator,
    which is twice as large.
    """
    fmat = f.f if isinstance(f, GroupPrecoder) else np.asarray(f)
    if projected_dim is None:
        projected_dim = f.projected_dim if isinstance(f, GroupPrecoder) else 2 * fmat.shape[1]
    tr = float(np.real(np.trace(fmat.conj().T @ covariance @ fmat)))
    if not tr > 0:
        raise ArithmeticError(f"tr(F^H R F) = {tr:.3e}: the projection removes the whole covariance")
    num = projected_dim if printed else projected_dim / 2
    return num / tr


def gain_laws(zeta: float, alpha: float, beta: float, chi: float, users: int, phi: float) -> GainLaw:
    return GainLaw(
        common_signal=GammaParams(1.0, phi / (zeta * alpha)),
        common_interference=GammaParams(float(users), phi / (zeta * chi * beta)) if chi > 0 else None,
        private_signal=GammaParams(1.0, phi / (zeta * beta)),
        private_interference=GammaParams(1.0, phi / (zeta * chi * alpha)) if chi > 0 else None,
        phi=phi,
    )


# --------------------------------------------------------------------------
# outage probability
# --------------------------------------------------------------------------

def _surv_common(z, zeta, alpha, beta, chi, users, phi, rho):
    z = np.asarray(z, dtype=float)
    return (alpha / (alpha + chi * beta * z)) ** users * np.exp(-phi * z / (rho * zeta * alpha))


def _surv_private(z, zeta, alpha, beta, chi, phi, rho):
    z = np.asarray(z, dtype=float)
    return beta / (chi * alpha * z + beta) * np.exp(-phi * z / (rho * zeta * beta))


def cdf_common(z, zeta, alpha, beta, chi, users, phi, rho):
    """CDF of one user's common-message SINR."""
    return 1 - _surv_common(z, zeta, alpha, beta, chi, users, phi, rho)


def cdf_private(z, zeta, alpha, beta, chi, phi, rho):
    return 1 - _surv_private(z, zeta, alpha, beta, chi, phi, rho)


def outage_common(zeta, alpha, beta, chi, users, phi, rho, rate):
    """Probability that the common message of one user is below ``rate``."""
    tau = 2.0 ** rate - 1.0
    return float(cdf_common(tau, zeta, alpha, beta, chi, users, phi, rho))


def outage_private(zeta, alpha, beta, chi, phi, rho, rate):
    tau = 2.0 ** rate - 1.0
    return float(cdf_private(tau, zeta, alpha, beta, chi, phi, rho))


def outage_total(pc, pp):
    """Union of two independent outage events."""
    return pc + pp - pc * pp


def _outage_from_laws(signal: GammaParams, interference: GammaParams | None, tau: float, noise_var: float) -> float:
    """Pr{X < tau (Y + noise)} for independent Gamma X, Y by nested quadrature.

    Outer integral over the interference density, inner one over the
    signal density; neither uses the incomplete-Gamma closed form.
    """

    def inner(y):
        upper = tau * (y + noise_var)
        if upper <= 0:
            return 0.0
        val, _ = integrate.quad(lambda x: specialfn.gamma_pdf(signal, x), 0.0, upper,
                                epsabs=1e-14, epsrel=1e-12, limit=200)
        return val

    if interference is None:
        return inner(0.0)
    mode = max((interference.shape - 1) / interference.rate, 0.0)
    scale = interference.shape / interference.rate
    breaks = [0.0, mode + scale, mode + 10 * scale, mode + 40 * scale]
    total = 0.0
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        val, _ = integrate.quad(lambda y: inner(y) * specialfn.gamma_pdf(interference, y), lo, hi,
                                epsabs=1e-15, epsrel=1e-12, limit=200)
        total += val
    tail, _ = integrate.quad(lambda y: inner(y) * specialfn.gamma_pdf(interference, y), breaks[-1], np.inf,
                             epsabs=1e-16, limit=200)
    return total + tail


def outage_common_quadrature(zeta, alpha, beta, chi, users, phi, rho, rate) -> float:
    """Common-message outage as a double integral over the joint gain density."""
    laws = gain_laws(zeta, alpha, beta, chi, users, phi)
    return _outage_from_laws(laws.common_signal, laws.common_interference, 2.0 ** rate - 1.0, 1.0 / rho)


def outage_private_quadrature(zeta, alpha, beta, chi, phi, rho, rate) -> float:
    laws = gain_laws(zeta, alpha, beta, chi, 1, phi)
    return _outage_from_laws(laws.private_signal, laws.private_interference, 2.0 ** rate - 1.0, 1.0 / rho)


# --------------------------------------------------------------------------
# ergodic rates
# --------------------------------------------------------------------------

def cdf_min_common(z, zetas: Sequence[float], alpha, betas, chi, phi, rho):
    """CDF of the smallest common-message SINR across the group's users.

    Product of the per-user survival functions; with equal private
    powers this is ``1 - alpha^(U^2) (alpha + chi beta z)^(-U^2)
    exp(-z phi sum(1/zeta) / (rho alpha))``.
    """
    return 1 - _surv_min_common(z, zetas, alpha, betas, chi, phi, rho)


def _surv_min_common(z, zetas, alpha, betas, chi, phi, rho):
    zetas = np.asarray(zetas, dtype=float)
    betas = np.broadcast_to(np.asarray(betas, dtype=float), zetas.shape)
    surv = np.ones_like(np.asarray(z, dtype=float))
    for zeta, beta in zip(zetas, betas):
        surv = surv * _surv_common(z, zeta, alpha, beta, chi, zetas.size, phi, rho)
    return surv


def ergodic_by_quadrature(survival: Callable[[float], float], max_z: float = np.inf, *,
                          tail_tol: float = 1e-10) -> float:
    """``integral_0^inf S(z) / ((1 + z) ln 2) dz`` for a SINR survival function ``S``.

    This is ``E{log2(1 + Z)}`` written by parts.  Pass the survival
    function itself rather than ``1 - cdf``: the subtraction leaves a
    roundoff floor that the tail integral cannot resolve.  When
    ``max_z`` is finite the survival there must be negligible, otherwise
    the truncated integral would silently drop a heavy tail.
    """
    def integrand(z):
        return survival(z) / (1.0 + z)

    if np.isfinite(max_z):
        surv_end = survival(max_z)
        if surv_end > tail_tol:
            raise QuadratureError(
                f"survival function is {surv_end:.3e} at max_z={max_z}; the tail is not integrable "
                f"to tolerance {tail_tol:.1e}")
        edges = np.unique(np.concatenate([[0.0], np.geomspace(1e-3, max_z, 40)]))
    else:
        edges = np.concatenate([[0.0], np.geomspace(1e-3, 1e8, 45)])
    total = 0.0
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, e = integrate.quad(integrand, lo, hi, epsabs=1e-16, epsrel=1e-12, limit=200)
        total += val
        err += e
    if not np.isfinite(max_z):
        surv_end = survival(edges[-1])
        if surv_end > tail_tol:
            raise QuadratureError(f"survival function is {surv_end:.3e} at z={edges[-1]:.1e}; tail not integrable")
        val, e = integrate.quad(integrand, edges[-1], np.inf, limit=200)
        total += val
        err += e
    if not np.isfinite(total) or err > 1e-9 * max(abs(total), 1e-300) + 1e-13:
        raise QuadratureError(f"rate integral did not converge: value {total}, error estimate {err:.3e}")
    return total / _LN2


def ergodic_common_quadrature(zetas, alpha, betas, chi, phi, rho) -> float:
    """Group common-message sum-rate by quadrature of the min-SINR CDF."""
    zetas = np.asarray(zetas, dtype=float)
    per_user = ergodic_by_quadrature(lambda z: float(_surv_min_common(z, zetas, alpha, betas, chi, phi, rho)))
    return zetas.size * per_user


def ergodic_private_quadrature(zetas, alpha, betas, chi, phi, rho) -> float:
    zetas = np.asarray(zetas, dtype=float)
    betas = np.broadcast_to(np.asarray(betas, dtype=float), zetas.shape)
    return sum(ergodic_by_quadrature(lambda z, zt=zt, b=b: float(_surv_private(z, zt, alpha, b, chi, phi, rho)))
               for zt, b in zip(zetas, betas))


def _near(a: float, b: float, rel: float = 1e-12) -> bool:
    return abs(a - b) <= rel * max(abs(a), abs(b))


def _avg_offsets(fn, value: float, name: str):
    warnings.warn(f"{name} on a removable singularity; averaging +/- relative offset {_SINGULAR_OFFSET}",
                  RuntimeWarning, stacklevel=3)
    return 0.5 * (fn(value * (1 + _SINGULAR_OFFSET)) + fn(value * (1 - _SINGULAR_OFFSET)))


def _common_user_term(a, b, n, prec_bits):
    """Closed form of ``integral_0^inf e^(-a z) / ((1 + z)(1 + b z)^n) dz``.

    ``a = phi sum(1/zeta) / (rho alpha)``, ``b = chi beta / alpha`` and
    ``n = U^2``.  For small ``b`` the bracketed terms cancel to many
    digits, so the expression is evaluated in extended precision.
    """
    with mpmath.workprec(prec_bits):
        a = mpmath.mpf(a)
        b = mpmath.mpf(b)
        c = a
        q = -a / b
        d = a * (b - 1) / b
        s = mpmath.mpf(0)
        for m in range(1, n):
            inner = mpmath.fsum(mpmath.factorial(m - k - 1) * q ** k for k in range(m))
            s += (-(b - 1)) ** m / mpmath.factorial(m) * inner
        bracket = (mpmath.ei(-c)
                   - specialfn.trunc_exp_taylor(n - 1, d) * mpmath.exp(-d) * mpmath.ei(q)
                   + mpmath.exp(-c) * s)
        value = (-1) ** (n - 1) * (1 / (b - 1)) ** n * mpmath.exp(c) * bracket
        return value


def _common_user_closed(a: float, b: float, n: int) -> float:
    # enough bits to absorb the cancellation, then confirm with a wider run
    scale = max(1.0, abs(a * (b - 1) / b) if b > 0 else 1.0)
    bits = 64 + int(3.33 * (n * math.log10(scale + 1) + n * abs(math.log10(abs(b - 1)))) + 3.33 * 20)
    v1 = _common_user_term(a, b, n, bits)
    v2 = _common_user_term(a, b, n, bits + 64)
    if abs(v1 - v2) > 1e-15 * abs(v2):
        v2 = _common_user_term(a, b, n, 4 * bits)
    return float(v2)


def ergodic_common_user(zetas, alpha, beta_u, chi, phi, rho) -> float:
    """One user's share of the common-message ergodic sum-rate.

    The group common rate is credited once per user, so the group value
    is the sum of this over users.
    """
    zetas = np.asarray(zetas, dtype=float)
    n = zetas.size ** 2
    a = phi * float(np.sum(1.0 / zetas)) / (rho * alpha)
    if chi == 0:
        return specialfn.exp_e1_scaled(a) / _LN2
    b = chi * beta_u / alpha
    if _near(b, 1.0):
        return _avg_offsets(lambda bb: _common_user_closed(a, bb, n) / _LN2, b, "ergodic_common")
    return _common_user_closed(a, b, n) / _LN2


def ergodic_common(zetas, alpha, betas, chi, phi, rho) -> float:
    """Common-message ergodic sum-rate of a group, in bpcu."""
    zetas = np.asarray(zetas, dtype=float)
    betas = np.broadcast_to(np.asarray(betas, dtype=float), zetas.shape)
    return float(sum(ergodic_common_user(zetas, alpha, b, chi, phi, rho) for b in betas))


def _private_user_closed(zeta, alpha, beta, chi, phi, rho) -> float:
    s_sig = phi / (rho * zeta * beta)
    s_int = phi / (rho * zeta * chi * alpha)
    if abs(beta - chi * alpha) > 1e-4 * beta:
        # e^s Ei(-s) = -exp_e1_scaled(s)
        bracket = -specialfn.exp_e1_scaled(s_int) + specialfn.exp_e1_scaled(s_sig)
        return beta / (_LN2 * (beta - chi * alpha)) * bracket
    # the bracket cancels to O(beta - chi alpha) here
    with mpmath.workprec(160):
        num = mpmath.mpf(phi) / (mpmath.mpf(rho) * mpmath.mpf(zeta))
        s1 = num / (mpmath.mpf(chi) * mpmath.mpf(alpha))
        s2 = num / mpmath.mpf(beta)
        bracket = -mpmath.exp(s1) * mpmath.e1(s1) + mpmath.exp(s2) * mpmath.e1(s2)
        den = mpmath.mpf(beta) - mpmath.mpf(chi) * mpmath.mpf(alpha)
        return float(mpmath.mpf(beta) / (den * mpmath.log(2)) * bracket)


def ergodic_private_user(zeta, alpha, beta, chi, phi, rho) -> float:
    """One user's private-message ergodic rate."""
    if chi == 0:
        return specialfn.exp_e1_scaled(phi / (rho * zeta * beta)) / _LN2
    if _near(beta, chi * alpha):
        return _avg_offsets(lambda bb: _private_user_closed(zeta, alpha, bb, chi, phi, rho), beta,
                            "ergodic_private")
    return _private_user_closed(zeta, alpha, beta, chi, phi, rho)


def ergodic_private(zetas, alpha, betas, chi, phi, rho) -> float:
    """Private-message ergodic sum-rate of a group, in bpcu."""
    zetas = np.asarray(zetas, dtype=float)
    betas = np.broadcast_to(np.asarray(betas, dtype=float), zetas.shape)
    return float(sum(ergodic_private_user(zt, alpha, b, chi, phi, rho) for zt, b in zip(zetas, betas)))
