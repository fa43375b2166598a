"""Per-realization SINRs and rates.

The proposed scheme sends the common message on the vertical
polarization and the private messages on the horizontal one, so no
receiver runs SIC.  Baselines (single-polarized RSMA, single- and
dual-polarized NOMA, TDMA) are evaluated with a residual-SIC factor
``xi``: after cancelling a component of power P, ``xi * P`` remains as
interference.

All gain helpers accept effective channels ``e = F^H h`` with shape
``(..., U, d)`` so the same code serves one realization or a batch.
Channels already include ``sqrt(zeta)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import ChannelRealization, ConfigurationError
from .precoder import GroupPrecoder, PrecoderSet

__all__ = [
    "PowerAllocation",
    "RateTargets",
    "SinrReport",
    "dp_rsma_gains",
    "dp_rsma_sinrs",
    "dp_rsma_sinrs_from_gains",
    "outage_indicator",
    "dp_rsma_rates",
    "sp_rsma_sinrs",
    "noma_decode_sinrs",
    "noma_sinrs",
    "noma_outage",
    "oma_rate",
    "oma_outage",
    "outage_sum_rate",
    "received_signal",
    "received_signal_simplified",
]

_BUDGET_TOL = 1e-12


@dataclass(frozen=True)
class PowerAllocation:
    common_alpha: float = 0.7
    private_betas: tuple = (0.1, 0.1, 0.1)
    noma_powers: tuple = (5 / 8, 2 / 8, 1 / 8)
    sic_error: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "private_betas", tuple(float(b) for b in self.private_betas))
        object.__setattr__(self, "noma_powers", tuple(float(a) for a in self.noma_powers))
        if not 0 < self.common_alpha < 1:
            raise ConfigurationError(f"common_alpha must lie in (0, 1), got {self.common_alpha}")
        if any(b < 0 for b in self.private_betas) or any(a < 0 for a in self.noma_powers):
            raise ConfigurationError("power coefficients must be nonnegative")
        if self.common_alpha + sum(self.private_betas) > 1 + _BUDGET_TOL:
            raise ConfigurationError(
                f"RSMA power budget exceeded: alpha + sum(beta) = "
                f"{self.common_alpha + sum(self.private_betas)} > 1")
        if sum(self.noma_powers) > 1 + _BUDGET_TOL:
            raise ConfigurationError(f"NOMA power budget exceeded: {sum(self.noma_powers)} > 1")
        if self.sic_error < 0:
            raise ConfigurationError(f"sic_error must be >= 0, got {self.sic_error}")

    @property
    def betas(self) -> np.ndarray:
        return np.asarray(self.private_betas)


@dataclass(frozen=True)
class RateTargets:
    """Target rates in bits per channel use."""

    common_rate: float
    private_rates: tuple

    def __post_init__(self):
        object.__setattr__(self, "private_rates", tuple(float(r) for r in self.private_rates))
        if self.common_rate < 0 or any(r < 0 for r in self.private_rates):
            raise ConfigurationError("target rates must be nonnegative")

    @property
    def tau_common(self) -> float:
        return 2.0 ** self.common_rate - 1.0

    @property
    def tau_private(self) -> np.ndarray:
        return 2.0 ** np.asarray(self.private_rates) - 1.0

    @property
    def per_user(self) -> np.ndarray:
        """Targets used by non-RSMA schemes: common plus private rate."""
        return self.common_rate + np.asarray(self.private_rates)


@dataclass(frozen=True, eq=False)
class SinrReport:
    """SINRs of the proposed scheme together with their four gain terms.

    ``common_signal``/``common_interference`` are the numerator and the
    cross-polar part of the denominator of the common SINR; likewise for
    the private SINR.
    """

    common_sinr: np.ndarray
    private_sinr: np.ndarray
    snr: float
    common_signal: np.ndarray | None = None
    common_interference: np.ndarray | None = None
    private_signal: np.ndarray | None = None
    private_interference: np.ndarray | None = None


def _abs2_inner(e: np.ndarray, v: np.ndarray) -> np.ndarray:
    """|e^H v|^2 along the last axis."""
    return np.abs(np.einsum("...i,...i->...", e.conj(), v)) ** 2


def dp_rsma_gains(e_vv, e_vh, e_hv, e_hh, common, private, alpha, betas, chi):
    """Numerator and cross-polar terms of the two SINRs.

    Parameters
    ----------
    e_vv, e_vh, e_hv, e_hh : ndarray, shape (..., U, d)
        Effective sub-channels ``F^H h_ij``.
    common : ndarray, shape (..., d)
    private : ndarray, shape (..., U, d)
    alpha : float
    betas : array_like, shape (U,)
    chi : float

    Returns
    -------
    tuple of ndarray, each shape (..., U)
        ``(common_signal, common_interference, private_signal,
        private_interference)``.
    """
    betas = np.asarray(betas, dtype=float)
    c = np.asarray(common)[..., None, :]
    cs = alpha * _abs2_inner(e_vv, c)
    pi = chi * alpha * _abs2_inner(e_vh, c)
    # |e_hv,u^H p_n|^2 for all (u, n)
    cross = np.abs(np.einsum("...ui,...ni->...un", np.conj(e_hv), private)) ** 2
    ci = chi * cross @ betas
    ps = betas * _abs2_inner(e_hh, private)
    return cs, ci, ps, pi


def dp_rsma_sinrs_from_gains(cs, ci, ps, pi, noise_var: float):
    return cs / (ci + noise_var), ps / (pi + noise_var)


def dp_rsma_sinrs(channels: Sequence[ChannelRealization], f: GroupPrecoder, pre: PrecoderSet,
                  pa: PowerAllocation, noise_var: float) -> SinrReport:
    """SINRs of the SIC-free dual-polarized scheme for one group."""
    fh = f.f.conj().T
    stack = {k: np.stack([fh @ getattr(ch, f"h_{k}") for ch in channels]) for k in ("vv", "vh", "hv", "hh")}
    chi = channels[0].ixpd
    cs, ci, ps, pi = dp_rsma_gains(stack["vv"], stack["vh"], stack["hv"], stack["hh"],
                                   pre.common, pre.private, pa.common_alpha, pa.betas, chi)
    gc, gp = dp_rsma_sinrs_from_gains(cs, ci, ps, pi, noise_var)
    return SinrReport(common_sinr=gc, private_sinr=gp, snr=1.0 / noise_var,
                      common_signal=cs, common_interference=ci,
                      private_signal=ps, private_interference=pi)


def outage_indicator(report: SinrReport, targets: RateTargets) -> np.ndarray:
    """Per-user outage: either message falls strictly below its target rate."""
    rc = np.log2(1 + np.asarray(report.common_sinr))
    rp = np.log2(1 + np.asarray(report.private_sinr))
    return (rc < targets.common_rate) | (rp < np.asarray(targets.private_rates))


def dp_rsma_rates(report: SinrReport):
    """Common rate decodable by all users and the per-user private rates.

    Returns ``(common, private, per_user_total)``.  Each user is credited
    with the group common rate plus its private rate, so the group sum is
    ``U * min_l log2(1 + gc_l) + sum_u log2(1 + gp_u)``.
    """
    common = np.log2(1 + np.asarray(report.common_sinr)).min(axis=-1)
    private = np.log2(1 + np.asarray(report.private_sinr))
    return common, private, common[..., None] + private


def sp_rsma_sinrs(effective: np.ndarray, common: np.ndarray, private: np.ndarray,
                  pa: PowerAllocation, noise_var: float) -> SinrReport:
    """Single-polarized RSMA with SIC of the common message.

    ``effective`` holds ``F^H h`` per user, shape (..., U, d).  The
    common message sees every private stream as interference; after
    cancelling it, ``xi * alpha * |e^H c|^2`` remains for the private one.
    """
    betas = pa.betas
    alpha = pa.common_alpha
    cs = alpha * _abs2_inner(effective, np.asarray(common)[..., None, :])
    cross = np.abs(np.einsum("...ui,...ni->...un", effective.conj(), private)) ** 2 * betas
    own = np.diagonal(cross, axis1=-2, axis2=-1)
    ci = cross.sum(axis=-1)
    gc = cs / (ci + noise_var)
    gp = own / (pa.sic_error * cs + (ci - own) + noise_var)
    return SinrReport(common_sinr=gc, private_sinr=gp, snr=1.0 / noise_var,
                      common_signal=cs, common_interference=ci,
                      private_signal=own, private_interference=pa.sic_error * cs + (ci - own))


def noma_decode_sinrs(gain: np.ndarray, powers, sic_error: float, noise_var,
                      order=None, extra_interference=0.0) -> np.ndarray:
    """SINR of user ``u`` when decoding the message of user ``k``.

    Parameters
    ----------
    gain : ndarray, shape (..., U)
        Beamformed channel gain of each user (one shared beam).
    powers : array_like, shape (U,)
        Power coefficient of each user's message.
    sic_error : float
        Residual fraction of every cancelled message.
    noise_var : float or ndarray
    order : array_like, optional
        Decoding order, weakest user first.  Defaults to ``range(U)``.
    extra_interference : float or ndarray, shape (..., U)
        Additional interference power at each user (cross-polar leakage).

    Returns
    -------
    ndarray, shape (..., U, U)
        Entry ``[u, k]`` is the SINR for message k at user u; ``inf``
        where user u does not need message k (k decoded after u).
    """
    powers = np.asarray(powers, dtype=float)
    n = powers.size
    order = np.arange(n) if order is None else np.asarray(order)
    pos = np.empty(n, dtype=int)
    pos[order] = np.arange(n)
    later = pos[None, :] > pos[:, None]  # [k, j]: j decoded after k
    earlier = pos[None, :] < pos[:, None]
    residual = (later * powers).sum(axis=1) + sic_error * (earlier * powers).sum(axis=1)  # per k
    g = np.asarray(gain)[..., :, None]  # (..., u, 1)
    extra = np.asarray(extra_interference)
    if extra.ndim:
        extra = extra[..., :, None]
    sinr = g * powers / (g * residual + extra + noise_var)
    needed = pos[None, :] <= pos[:, None]  # [u, k]
    return np.where(needed, sinr, np.inf)


def noma_sinrs(gain: np.ndarray, powers, sic_error: float, noise_var, order=None,
               extra_interference=0.0) -> np.ndarray:
    """Own-message SINR of each user under power-domain NOMA."""
    full = noma_decode_sinrs(gain, powers, sic_error, noise_var, order, extra_interference)
    return np.diagonal(full, axis1=-2, axis2=-1).copy()


def noma_outage(decode_sinrs: np.ndarray, rates) -> np.ndarray:
    """User in outage if any message it must decode falls below its rate."""
    tau = 2.0 ** np.asarray(rates, dtype=float) - 1.0
    return np.any(decode_sinrs < tau, axis=-1)


def oma_rate(gain: np.ndarray, noise_var) -> np.ndarray:
    """TDMA: each user alone for a 1/U fraction of time at full power.

    ``gain`` is ``|h^H F p|^2`` with the user's own matched beam,
    shape (..., U).
    """
    g = np.asarray(gain)
    return np.log2(1 + g / noise_var) / g.shape[-1]


def oma_outage(gain: np.ndarray, noise_var, rates) -> np.ndarray:
    return oma_rate(gain, noise_var) < np.asarray(rates)


def outage_sum_rate(outage_prob, rates) -> float:
    """Throughput ``sum_u R_u (1 - P_out,u)``."""
    return float(np.sum(np.asarray(rates) * (1 - np.asarray(outage_prob))))


def received_signal(h: np.ndarray, group_precoders: Sequence[GroupPrecoder], precoder_sets: Sequence[PrecoderSet],
                    powers: Sequence[PowerAllocation], common_symbols, private_symbols, noise=None) -> np.ndarray:
    """Two-branch received signal with every group's transmission.

    ``h`` is the user's ``(M, 2)`` channel matrix; ``private_symbols[m]``
    holds group m's U private symbols.
    """
    x = np.zeros(h.shape[0], dtype=complex)
    for m, (gp, ps, pa) in enumerate(zip(group_precoders, precoder_sets, powers)):
        inner = np.concatenate([
            ps.common * np.sqrt(pa.common_alpha) * common_symbols[m],
            (ps.private.T * np.sqrt(pa.betas)) @ np.asarray(private_symbols[m]),
        ])
        x += gp.k @ inner
    y = h.conj().T @ x
    if noise is not None:
        y = y + noise
    return y


def received_signal_simplified(ch: ChannelRealization, f: GroupPrecoder, pre: PrecoderSet, u: int,
                               pa: PowerAllocation, common_symbol, private_symbols, noise=None) -> np.ndarray:
    """Two-term form left after group nulling and private null-steering."""
    fh = f.f.conj().T
    s = np.sqrt(ch.ixpd)
    a = np.sqrt(pa.common_alpha)
    b = np.sqrt(pa.betas)
    v = (fh @ ch.h_vv).conj() @ pre.common * a * common_symbol \
        + s * (fh @ ch.h_hv).conj() @ (pre.private.T @ (b * np.asarray(private_symbols)))
    h = (fh @ ch.h_hh).conj() @ pre.private[u] * b[u] * private_symbols[u] \
        + s * (fh @ ch.h_vh).conj() @ pre.common * a * common_symbol
    y = np.array([v, h])
    if noise is not None:
        y = y + noise
    return y
