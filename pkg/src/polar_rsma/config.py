"""System configuration and its flat ``key = value`` file format.

Every key is optional; absent keys fall back to the reference scenario
(100 antennas in four groups of three users, six projected dimensions).
List values are comma separated.  ``#`` starts a comment.

    m_total = 100
    chi = 0.001
    user_distances_m = 200, 170, 140
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .channel import GEOMETRIES, ConfigurationError
from .phy import PowerAllocation, RateTargets

__all__ = ["SystemConfig", "ConfigParseError", "load_config", "parse_config", "default_azimuths"]


class ConfigParseError(ConfigurationError):
    """Malformed configuration text; carries the offending line number."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        prefix = f"line {lineno}: " if lineno is not None else ""
        super().__init__(prefix + message)


def default_azimuths(groups: int) -> tuple:
    """Group centres 160 degrees apart starting at 30, wrapped to [0, 360)."""
    return tuple(float((30 + 160 * g) % 360) for g in range(groups))


@dataclass(frozen=True)
class SystemConfig:
    """Everything that fixes one deployment, apart from SNR and iXPD sweeps.

    ``m_total`` counts antenna elements over both polarizations and
    ``projected_dim`` is the total projected dimension, so each
    polarization sees ``m_total // 2`` and ``projected_dim // 2``.
    The single-polarized baselines use ``m_total`` co-polarized elements
    and ``projected_dim`` projected dimensions.

    ``geometry`` defaults to a circular array: a linear one cannot tell
    ``theta`` from ``180 - theta``, which puts two of the default groups
    on the same covariance.  ``precoder_basis = "dominant"`` keeps the
    null-space directions carrying most of the group's energy; ``"svd"``
    keeps whichever columns the decomposition returns first.
    """

    m_total: int = 100
    groups: int = 4
    users_per_group: int = 3
    projected_dim: int = 6
    chi: float = 0.0
    snr_db: float = 20.0
    group_azimuths_deg: tuple = ()
    user_distances_m: tuple = (200.0, 170.0, 140.0)
    array_gain: float = 4e4
    pathloss_exp: float = 2.5
    powers: PowerAllocation = field(default_factory=PowerAllocation)
    targets: RateTargets = field(default_factory=lambda: RateTargets(0.5, (0.1, 0.5, 1.2)))
    angular_spread_deg: float = 10.0
    spacing_wavelengths: float = 0.5
    geometry: str = "uca"
    energy_threshold: float = 1e-9
    precoder_basis: str = "dominant"
    reported_group: int = 0

    def __post_init__(self):
        if not self.group_azimuths_deg:
            object.__setattr__(self, "group_azimuths_deg", default_azimuths(self.groups))
        object.__setattr__(self, "group_azimuths_deg", tuple(float(a) for a in self.group_azimuths_deg))
        object.__setattr__(self, "user_distances_m", tuple(float(d) for d in self.user_distances_m))
        self._check()

    def _check(self):
        m, mb, u, g = self.m_total, self.projected_dim, self.users_per_group, self.groups
        if m < 4 or m % 2:
            raise ConfigurationError(f"m_total must be an even integer >= 4, got {m}")
        if mb < 2 or mb % 2:
            raise ConfigurationError(f"projected_dim must be an even integer >= 2, got {mb}")
        if g < 1 or u < 1:
            raise ConfigurationError("groups and users_per_group must be >= 1")
        if not mb // 2 > u - 1:
            raise ConfigurationError(
                f"constraint projected_dim/2 > users_per_group − 1 violated: {mb // 2} <= {u - 1}")
        if not mb // 2 <= m // 2:
            raise ConfigurationError(
                f"constraint projected_dim/2 <= m_total/2 violated: {mb // 2} > {m // 2}")
        if not 0 <= self.chi <= 1:
            raise ConfigurationError(f"chi must lie in [0, 1], got {self.chi}")
        if len(self.group_azimuths_deg) != g:
            raise ConfigurationError(f"group_azimuths_deg has {len(self.group_azimuths_deg)} entries, expected {g}")
        for name, values in [("user_distances_m", self.user_distances_m),
                             ("private_betas", self.powers.private_betas),
                             ("noma_powers", self.powers.noma_powers),
                             ("private_rates", self.targets.private_rates)]:
            if len(values) != u:
                raise ConfigurationError(f"{name} has {len(values)} entries, expected users_per_group = {u}")
        if any(d <= 0 for d in self.user_distances_m):
            raise ConfigurationError("user distances must be positive")
        if not 0 <= self.reported_group < g:
            raise ConfigurationError(f"reported_group must lie in [0, {g}), got {self.reported_group}")
        if self.geometry not in GEOMETRIES:
            raise ConfigurationError(f"geometry must be one of {GEOMETRIES}, got {self.geometry!r}")
        if self.precoder_basis not in ("svd", "dominant"):
            raise ConfigurationError(f"precoder_basis must be 'svd' or 'dominant', got {self.precoder_basis!r}")

    @property
    def noise_var(self) -> float:
        return 10.0 ** (-self.snr_db / 10.0)

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)


def _floats(text: str) -> tuple:
    return tuple(float(t) for t in text.replace(";", ",").split(",") if t.strip())


# key -> (target, converter); target "cfg" is a SystemConfig field
_KEYS = {
    "m_total": ("cfg", int),
    "groups": ("cfg", int),
    "users_per_group": ("cfg", int),
    "projected_dim": ("cfg", int),
    "chi": ("cfg", float),
    "snr_db": ("cfg", float),
    "group_azimuths_deg": ("cfg", _floats),
    "user_distances_m": ("cfg", _floats),
    "array_gain": ("cfg", float),
    "pathloss_exp": ("cfg", float),
    "angular_spread_deg": ("cfg", float),
    "spacing_wavelengths": ("cfg", float),
    "geometry": ("cfg", str),
    "energy_threshold": ("cfg", float),
    "precoder_basis": ("cfg", str),
    "reported_group": ("cfg", int),
    "common_alpha": ("powers", float),
    "private_betas": ("powers", _floats),
    "noma_powers": ("powers", _floats),
    "sic_error": ("powers", float),
    "common_rate": ("targets", float),
    "private_rates": ("targets", _floats),
}


def parse_config(text: str) -> SystemConfig:
    """Build a validated config from ``key = value`` lines."""
    values = {"cfg": {}, "powers": {}, "targets": {}}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            key, sep, value = line.partition(":")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if key not in _KEYS:
            raise ConfigParseError(f"unknown key {key!r}", lineno)
        target, conv = _KEYS[key]
        if key in values[target]:
            raise ConfigParseError(f"duplicate key {key!r}", lineno)
        try:
            values[target][key] = conv(value)
        except ValueError as exc:
            raise ConfigParseError(f"bad value for {key!r}: {value!r} ({exc})", lineno) from None

    cfg = values["cfg"]
    users = cfg.get("users_per_group", SystemConfig.users_per_group)
    if "groups" in cfg and "group_azimuths_deg" not in cfg:
        cfg["group_azimuths_deg"] = default_azimuths(cfg["groups"])

    pw = values["powers"]
    alpha = pw.get("common_alpha", PowerAllocation.common_alpha)
    if "private_betas" not in pw and ("common_alpha" in pw or users != len(PowerAllocation().private_betas)):
        pw["private_betas"] = ((1 - alpha) / users,) * users
    tg = values["targets"]
    tg.setdefault("common_rate", 0.5)
    tg.setdefault("private_rates", (0.1, 0.5, 1.2))
    return SystemConfig(powers=PowerAllocation(**pw), targets=RateTargets(**tg), **cfg)


def load_config(path, *, check_geometry: bool = True) -> SystemConfig:
    """Read and validate a configuration file.

    With ``check_geometry`` the per-group covariances are built as well,
    so rank-dependent constraints (room left in every null space) are
    reported here rather than at the first simulation.
    """
    text = Path(path).read_text()
    cfg = parse_config(text)
    if check_geometry:
        from .montecarlo import build_scenario
        build_scenario(cfg)
    return cfg
