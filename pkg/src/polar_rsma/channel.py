"""Spatially correlated dual-polarized channel model.

One-ring covariance per polarization, its reduced eigen-structure, the
distance-based large-scale gain, and per-user draws of the four
polarization sub-channels

    H = sqrt(zeta) * [[h_vv, sqrt(chi) h_vh], [sqrt(chi) h_hv, h_hh]]

with every ``h_ij = U diag(sqrt(lambda)) g_ij`` and ``g_ij ~ CN(0, I)``.
Both polarizations share one spatial covariance, so only an
``(M/2, M/2)`` matrix is synthesized per group.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = [
    "OneRingSpec",
    "GroupModel",
    "UserLink",
    "ChannelRealization",
    "QuadratureError",
    "ConfigurationError",
    "one_ring_covariance",
    "eigen_structure",
    "rank_cap",
    "large_scale_gain",
    "standard_complex_normal",
    "sample_channel",
    "subspace_overlap",
]

GEOMETRIES = ("uca", "ula")


class ConfigurationError(ValueError):
    """A scenario parameter violates a dimensional or physical constraint."""


class QuadratureError(ArithmeticError):
    """The one-ring angular integral failed to converge."""


@dataclass(frozen=True)
class OneRingSpec:
    """One-ring scattering description for one polarization of one group.

    ``spacing_wavelengths`` is the distance between neighbouring
    elements.  For the circular array it is the chord between adjacent
    elements, which fixes the radius.
    """

    antennas: int
    azimuth_deg: float
    angular_spread_deg: float = 10.0
    spacing_wavelengths: float = 0.5
    geometry: str = "uca"

    def __post_init__(self):
        if self.antennas < 2:
            raise ConfigurationError(f"antennas must be >= 2, got {self.antennas}")
        if not 0 < self.angular_spread_deg < 90:
            raise ConfigurationError(
                f"angular_spread_deg must lie in (0, 90), got {self.angular_spread_deg}")
        if not self.spacing_wavelengths > 0:
            raise ConfigurationError(
                f"spacing_wavelengths must be positive, got {self.spacing_wavelengths}")
        if self.geometry not in GEOMETRIES:
            raise ConfigurationError(f"geometry must be one of {GEOMETRIES}, got {self.geometry!r}")


@dataclass(frozen=True, eq=False)
class GroupModel:
    covariance: np.ndarray
    eigvecs: np.ndarray
    eigvals: np.ndarray
    full_rank: int
    reduced_rank: int
    azimuth_deg: float = float("nan")

    @property
    def antennas(self) -> int:
        return self.covariance.shape[0]

    @property
    def factor(self) -> np.ndarray:
        """``U diag(sqrt(lambda))``, mapping fast fading to the array."""
        return self.eigvecs * np.sqrt(self.eigvals)


@dataclass(frozen=True)
class UserLink:
    large_scale_gain: float
    distance_m: float = float("nan")

    def __post_init__(self):
        if not self.large_scale_gain > 0:
            raise ConfigurationError(f"large_scale_gain must be positive, got {self.large_scale_gain}")


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One user's four polarization sub-channels.

    The sub-channels already carry ``sqrt(zeta)``; the cross-polar
    ``sqrt(chi)`` is applied only when the full matrix is assembled.
    """

    h_vv: np.ndarray
    h_vh: np.ndarray
    h_hv: np.ndarray
    h_hh: np.ndarray
    ixpd: float
    large_scale_gain: float = 1.0
    fading: dict = field(default_factory=dict, repr=False)

    def matrix(self) -> np.ndarray:
        """The ``(M, 2)`` dual-polarized channel matrix."""
        s = np.sqrt(self.ixpd)
        top = np.stack([self.h_vv, s * self.h_vh], axis=-1)
        bottom = np.stack([s * self.h_hv, self.h_hh], axis=-1)
        return np.concatenate([top, bottom], axis=-2)


def _steering_phase(spec: OneRingSpec, angles: np.ndarray) -> np.ndarray:
    """Phase (radians) of every element for each arrival angle, shape (N, n)."""
    n = np.arange(spec.antennas)
    if spec.geometry == "ula":
        return 2 * np.pi * spec.spacing_wavelengths * n[:, None] * np.sin(angles)[None, :]
    # chord between neighbours equals the spacing
    radius = spec.spacing_wavelengths / (2 * np.sin(np.pi / spec.antennas))
    psi = 2 * np.pi * n / spec.antennas
    return 2 * np.pi * radius * np.cos(angles[None, :] - psi[:, None])


def _ring_average(spec: OneRingSpec, nodes: int) -> np.ndarray:
    x, w = leggauss(nodes)
    half = np.deg2rad(spec.angular_spread_deg)
    angles = np.deg2rad(spec.azimuth_deg) + half * x
    a = np.exp(1j * _steering_phase(spec, angles))
    return (a * (w / 2)) @ a.conj().T


def one_ring_covariance(spec: OneRingSpec, *, tol: float = 1e-12, max_nodes: int = 1 << 14) -> np.ndarray:
    """Spatial covariance of a one-ring scatterer around the user.

    ``R[m, p]`` is the uniform average over ``omega in [-spread, spread]``
    of ``a_m(theta + omega) * conj(a_p(theta + omega))``, evaluated by
    Gauss-Legendre quadrature.  The node count doubles until two
    successive estimates agree to ``tol``.
    """
    nodes = 128
    prev = _ring_average(spec, nodes)
    while True:
        nodes *= 2
        cur = _ring_average(spec, nodes)
        err = np.max(np.abs(cur - prev))
        if err <= tol:
            break
        if nodes >= max_nodes:
            raise QuadratureError(
                f"one-ring quadrature not converged: max |dR| = {err:.3e} with {nodes} nodes "
                f"(antennas={spec.antennas}, spread={spec.angular_spread_deg} deg)")
        prev = cur
    r = 0.5 * (cur + cur.conj().T)
    np.fill_diagonal(r, 1.0)
    return r


def rank_cap(antennas: int, projected: int, groups: int) -> int:
    """Largest eigen-rank per group that leaves room for the projection.

    ``antennas`` and ``projected`` are per-polarization sizes (M/2 and
    M_bar/2 for the dual-polarized array).
    """
    if groups <= 1:
        return antennas
    return (antennas - projected) // (groups - 1)


def eigen_structure(covariance: np.ndarray, energy_threshold: float = 1e-9, rank_cap: int | None = None,
                    azimuth_deg: float = float("nan")) -> GroupModel:
    """Keep the dominant eigenpairs of a covariance matrix.

    ``energy_threshold`` is relative to the largest eigenvalue: the full
    rank counts eigenvalues above ``energy_threshold * max``.  The kept
    rank is ``min(full_rank, rank_cap)``.
    """
    if not 0 < energy_threshold < 1:
        raise ConfigurationError(f"energy_threshold must lie in (0, 1), got {energy_threshold}")
    cov = np.asarray(covariance)
    if rank_cap is None:
        rank_cap = cov.shape[0]
    if rank_cap < 1:
        raise ConfigurationError(f"rank_cap must be >= 1, got {rank_cap}")
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    full = int(np.sum(vals > vals[0] * energy_threshold))
    kept = min(full, rank_cap)
    return GroupModel(
        covariance=cov,
        eigvecs=vecs[:, :kept].copy(),
        eigvals=vals[:kept].copy(),
        full_rank=full,
        reduced_rank=kept,
        azimuth_deg=azimuth_deg,
    )


def large_scale_gain(array_gain: float, distance_m: float, pathloss_exp: float) -> float:
    """zeta = array_gain * distance ** -pathloss_exp."""
    if not distance_m > 0:
        raise ConfigurationError(f"distance must be positive, got {distance_m}")
    if not array_gain > 0:
        raise ConfigurationError(f"array gain must be positive, got {array_gain}")
    return float(array_gain * distance_m ** (-pathloss_exp))


def standard_complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0, 1) samples."""
    z = rng.standard_normal((*np.atleast_1d(shape), 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def sample_channel(group: GroupModel, user: UserLink, ixpd: float,
                   rng: np.random.Generator) -> ChannelRealization:
    """Draw the four polarization sub-channels of one user."""
    if not 0 <= ixpd <= 1:
        raise ConfigurationError(f"ixpd must lie in [0, 1], got {ixpd}")
    factor = np.sqrt(user.large_scale_gain) * group.factor
    fading = {k: standard_complex_normal(rng, group.reduced_rank) for k in ("vv", "vh", "hv", "hh")}
    return ChannelRealization(
        h_vv=factor @ fading["vv"],
        h_vh=factor @ fading["vh"],
        h_hv=factor @ fading["hv"],
        h_hh=factor @ fading["hh"],
        ixpd=float(ixpd),
        large_scale_gain=user.large_scale_gain,
        fading=fading,
    )


def subspace_overlap(u1: np.ndarray, u2: np.ndarray) -> float:
    """``||U1^H U2||_F^2 / rank(U1)``; 0 for orthogonal subspaces, 1 for nested."""
    return float(np.linalg.norm(u1.conj().T @ u2) ** 2 / u1.shape[1])
