"""Monte Carlo estimation and parameter sweeps.

Covariances and outer precoders depend only on the geometry, so a
:class:`Scenario` is built once per configuration.  Each trial then
redraws small-scale fading and the random beams.  Trials run in fixed
size chunks, every chunk on its own child of a seed derived from the
sweep point, so results do not depend on threading or on the order in
which points are visited.

Supported schemes:

``dp-rsma``
    The SIC-free dual-polarized scheme.
``sp-rsma``
    Single-polarized RSMA on ``m_total`` co-polarized elements; the
    common message is cancelled before private decoding, leaving
    ``xi`` of its power.
``sp-noma``
    Single-polarized power-domain NOMA on one random beam, SIC in order
    of increasing large-scale gain.
``dp-noma``
    The NOMA superposition repeated on each polarization at half power,
    every message split into two equal-rate halves; cross-polar leakage
    is treated as noise.
``oma``
    Single-polarized TDMA with a matched beam for the scheduled user.
"""

from __future__ import annotations

import csv
import functools
import io
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analytic, phy
from .channel import (ConfigurationError, GroupModel, OneRingSpec, eigen_structure, large_scale_gain,
                      one_ring_covariance, rank_cap, standard_complex_normal)
from .config import SystemConfig
from .precoder import GroupPrecoder, common_precoder_batch, group_precoder, private_precoders_batch

__all__ = [
    "SCHEMES",
    "Scenario",
    "SweepPoint",
    "SweepSpec",
    "PointResult",
    "ResultRow",
    "ResultTable",
    "build_scenario",
    "analytic_point",
    "point_seed",
    "simulate_point",
    "estimate_outage",
    "estimate_ergodic",
    "run_sweep",
    "CSV_COLUMNS",
]

SCHEMES = ("dp-rsma", "sp-rsma", "sp-noma", "dp-noma", "oma")
CSV_COLUMNS = ("scheme", "snr_db", "chi", "xi", "user", "outage_mc", "outage_se", "outage_cf",
               "erg_mc", "erg_se", "erg_cf")
CHUNK = 16384
_DUAL, _SINGLE = 0, 1


@dataclass(frozen=True, eq=False)
class Scenario:
    """Fading-independent quantities of one configuration.

    ``dual_map`` and ``single_map`` send an i.i.d. fading vector straight
    to the effective (projected) channel of the reported group: the
    effective channel of user ``u`` is ``sqrt(zeta_u) * map @ g``.
    """

    config: SystemConfig
    dual_groups: tuple
    dual_precoder: GroupPrecoder
    single_groups: tuple
    single_precoder: GroupPrecoder
    zetas: np.ndarray
    phi: float
    dual_map: np.ndarray
    single_map: np.ndarray
    noma_order: np.ndarray

    @property
    def group(self) -> GroupModel:
        return self.dual_groups[self.config.reported_group]


def _groups(cfg: SystemConfig, antennas: int, projected_half: int) -> tuple:
    cap = rank_cap(antennas, projected_half, cfg.groups)
    if cap < 1:
        raise ConfigurationError(
            f"no room for interfering groups: (antennas - projected)/(G - 1) = "
            f"({antennas} - {projected_half})/{cfg.groups - 1} < 1")
    models = []
    for az in cfg.group_azimuths_deg:
        spec = OneRingSpec(antennas=antennas, azimuth_deg=az % 360, angular_spread_deg=cfg.angular_spread_deg,
                           spacing_wavelengths=cfg.spacing_wavelengths, geometry=cfg.geometry)
        cov = one_ring_covariance(spec)
        models.append(eigen_structure(cov, cfg.energy_threshold, cap, azimuth_deg=az))
    return tuple(models)


def _outer(cfg: SystemConfig, groups: tuple, projected_dim: int) -> GroupPrecoder:
    g = cfg.reported_group
    own = groups[g]
    if own.reduced_rank < projected_dim // 2:
        raise ConfigurationError(
            f"M_bar/2 <= r_bar_g violated: {projected_dim // 2} > {own.reduced_rank} "
            f"(group at {own.azimuth_deg} deg)")
    others = groups[:g] + groups[g + 1:]
    return group_precoder(own, others, projected_dim, basis=cfg.precoder_basis)


@functools.lru_cache(maxsize=16)
def build_scenario(cfg: SystemConfig) -> Scenario:
    """Covariances, eigen-structures and outer precoders of ``cfg``.

    Raises ``ConfigurationError`` naming the violated dimension
    constraint when the null spaces are too small.
    """
    half, mb_half = cfg.m_total // 2, cfg.projected_dim // 2
    dual = _groups(cfg, half, mb_half)
    f_dual = _outer(cfg, dual, cfg.projected_dim)
    single = _groups(cfg, cfg.m_total, cfg.projected_dim)
    f_single = _outer(cfg, single, 2 * cfg.projected_dim)
    zetas = np.array([large_scale_gain(cfg.array_gain, d, cfg.pathloss_exp) for d in cfg.user_distances_m])
    own = dual[cfg.reported_group]
    return Scenario(
        config=cfg,
        dual_groups=dual,
        dual_precoder=f_dual,
        single_groups=single,
        single_precoder=f_single,
        zetas=zetas,
        phi=analytic.phi_parameter(f_dual, own.covariance),
        dual_map=f_dual.f.conj().T @ own.factor,
        single_map=f_single.f.conj().T @ single[cfg.reported_group].factor,
        noma_order=np.argsort(zetas, kind="stable"),
    )


@dataclass(frozen=True)
class SweepPoint:
    scheme: str
    snr_db: float
    chi: float
    xi: float = 0.0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not 0 <= self.chi <= 1:
            raise ConfigurationError(f"chi must lie in [0, 1], got {self.chi}")
        if self.xi < 0:
            raise ConfigurationError(f"xi must be >= 0, got {self.xi}")


def _float_key(x: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", float(x) + 0.0))[0]


def point_seed(master_seed: int, point: SweepPoint, family: int) -> np.random.SeedSequence:
    """Seed of one sweep point.

    Keyed on ``(snr_db, chi)`` and the polarization family only.  The SIC
    residual is not part of the key, so a scheme sees identical draws at
    every ``xi``; schemes of the same family share their fading draws.
    """
    return np.random.SeedSequence(int(master_seed) & (2**64 - 1),
                                  spawn_key=(_float_key(point.snr_db), _float_key(point.chi), family))


# --------------------------------------------------------------------------
# per-chunk evaluation; each returns (outage (B, U), rate (B, U), common (B,))
# --------------------------------------------------------------------------

def _dual_fading(sc: Scenario, rng, n):
    g = standard_complex_normal(rng, (n, 4, sc.zetas.size, sc.dual_map.shape[1]))
    e = np.sqrt(sc.zetas)[:, None] * (g @ sc.dual_map.T)
    return e[:, 0], e[:, 1], e[:, 2], e[:, 3]


def _single_fading(sc: Scenario, rng, n):
    g = standard_complex_normal(rng, (n, sc.zetas.size, sc.single_map.shape[1]))
    return np.sqrt(sc.zetas)[:, None] * (g @ sc.single_map.T)


def _rsma_outputs(report: phy.SinrReport, targets: phy.RateTargets):
    common, private, per_user = phy.dp_rsma_rates(report)
    out = phy.outage_indicator(report, targets)
    return out, per_user, common


def _chunk_dp_rsma(sc, pt, rng, n):
    e_vv, e_vh, e_hv, e_hh = _dual_fading(sc, rng, n)
    d = sc.dual_map.shape[0]
    c = common_precoder_batch(d, rng, n)
    p = private_precoders_batch(e_hh)
    pa = sc.config.powers
    cs, ci, ps, pi = phy.dp_rsma_gains(e_vv, e_vh, e_hv, e_hh, c, p, pa.common_alpha, pa.betas, pt.chi)
    gc, gp = phy.dp_rsma_sinrs_from_gains(cs, ci, ps, pi, _noise(pt))
    return _rsma_outputs(phy.SinrReport(gc, gp, 1 / _noise(pt)), sc.config.targets)


def _chunk_sp_rsma(sc, pt, rng, n):
    e = _single_fading(sc, rng, n)
    c = common_precoder_batch(e.shape[-1], rng, n)
    p = private_precoders_batch(e)
    pa = phy.PowerAllocation(sc.config.powers.common_alpha, sc.config.powers.private_betas,
                             sc.config.powers.noma_powers, pt.xi)
    return _rsma_outputs(phy.sp_rsma_sinrs(e, c, p, pa, _noise(pt)), sc.config.targets)


def _noma_rates(decode, rates):
    """Own-message rate (limited by every user that must decode it) and outage."""
    achievable = np.log2(1 + decode).min(axis=-2)
    return achievable, phy.noma_outage(decode, rates)


def _chunk_sp_noma(sc, pt, rng, n):
    e = _single_fading(sc, rng, n)
    w = common_precoder_batch(e.shape[-1], rng, n)
    gain = np.abs(np.einsum("bud,bd->bu", e.conj(), w)) ** 2
    decode = phy.noma_decode_sinrs(gain, sc.config.powers.noma_powers, pt.xi, _noise(pt), sc.noma_order)
    rate, out = _noma_rates(decode, sc.config.targets.per_user)
    return out, rate, np.zeros(n)


def _chunk_dp_noma(sc, pt, rng, n):
    e_vv, e_vh, e_hv, e_hh = _dual_fading(sc, rng, n)
    d = sc.dual_map.shape[0]
    w_v = common_precoder_batch(d, rng, n)
    w_h = common_precoder_batch(d, rng, n)
    half = 0.5 * np.asarray(sc.config.powers.noma_powers)
    leak = pt.chi * half.sum()
    rate = 0.0
    out = np.zeros((n, sc.zetas.size), dtype=bool)
    for own, own_w, cross, cross_w in ((e_vv, w_v, e_hv, w_h), (e_hh, w_h, e_vh, w_v)):
        gain = np.abs(np.einsum("bud,bd->bu", own.conj(), own_w)) ** 2
        extra = leak * np.abs(np.einsum("bud,bd->bu", cross.conj(), cross_w)) ** 2
        decode = phy.noma_decode_sinrs(gain, half, pt.xi, _noise(pt), sc.noma_order, extra)
        r, o = _noma_rates(decode, sc.config.targets.per_user / 2)
        rate = rate + r
        out |= o
    return out, rate, np.zeros(n)


def _chunk_oma(sc, pt, rng, n):
    e = _single_fading(sc, rng, n)
    gain = np.sum(np.abs(e) ** 2, axis=-1)
    rate = phy.oma_rate(gain, _noise(pt))
    return rate < sc.config.targets.per_user, rate, np.zeros(n)


_CHUNK_FN = {
    "dp-rsma": (_chunk_dp_rsma, _DUAL),
    "dp-noma": (_chunk_dp_noma, _DUAL),
    "sp-rsma": (_chunk_sp_rsma, _SINGLE),
    "sp-noma": (_chunk_sp_noma, _SINGLE),
    "oma": (_chunk_oma, _SINGLE),
}


def _noise(pt: SweepPoint) -> float:
    return 10.0 ** (-pt.snr_db / 10.0)


# --------------------------------------------------------------------------
# estimators
# --------------------------------------------------------------------------

@dataclass
class _Moments:
    """Running mean and centered sum of squares, merged chunk by chunk."""

    n: int = 0
    mean: np.ndarray | float = 0.0
    m2: np.ndarray | float = 0.0

    def add(self, x: np.ndarray):
        k = x.shape[0]
        mu = x.mean(axis=0)
        m2 = ((x - mu) ** 2).sum(axis=0)
        if self.n == 0:
            self.n, self.mean, self.m2 = k, mu, m2
            return
        tot = self.n + k
        delta = mu - self.mean
        self.mean = self.mean + delta * (k / tot)
        self.m2 = self.m2 + m2 + delta ** 2 * (self.n * k / tot)
        self.n = tot

    def stderr(self):
        if self.n < 2:
            return np.full_like(np.asarray(self.mean, dtype=float), np.nan)
        return np.sqrt(self.m2 / (self.n - 1) / self.n)


@dataclass(frozen=True, eq=False)
class PointResult:
    """Per-user and group statistics of one sweep point.

    ``rate`` is what each user is credited with: for the RSMA schemes the
    group common rate plus the user's private rate.  ``group_*`` refer to
    the group sum ``sum_u rate_u``, whose common part is ``U`` times the
    smallest common rate.
    """

    point: SweepPoint
    trials: int
    outage: np.ndarray
    outage_stderr: np.ndarray
    rate: np.ndarray
    rate_stderr: np.ndarray
    group_rate: float
    group_rate_stderr: float
    common_rate: float
    common_rate_stderr: float

    @property
    def private_rate(self) -> float:
        """Group rate minus its common part (zero common part for NOMA/OMA)."""
        return self.group_rate - self.common_rate

    def outage_sum_rate(self, targets) -> float:
        return phy.outage_sum_rate(self.outage, targets)


def simulate_point(scenario: Scenario, point: SweepPoint, trials: int, seed: int,
                   chunk: int = CHUNK) -> PointResult:
    """Outage and rate statistics of one scheme at one operating point."""
    if trials < 1:
        raise ConfigurationError(f"trials must be >= 1, got {trials}")
    fn, family = _CHUNK_FN[point.scheme]
    sizes = [chunk] * (trials // chunk) + ([trials % chunk] if trials % chunk else [])
    children = point_seed(seed, point, family).spawn(len(sizes))
    users = scenario.zetas.size
    acc = _Moments()
    for size, child in zip(sizes, children):
        rng = np.random.Generator(np.random.PCG64(child))
        out, rate, common = fn(scenario, point, rng, size)
        group = rate.sum(axis=-1)
        acc.add(np.column_stack([out.astype(float), rate, group, users * common]))
    mean, se = np.asarray(acc.mean), acc.stderr()
    p = mean[:users]
    return PointResult(
        point=point,
        trials=trials,
        outage=p,
        outage_stderr=np.sqrt(p * (1 - p) / trials),
        rate=mean[users:2 * users],
        rate_stderr=se[users:2 * users],
        group_rate=float(mean[2 * users]),
        group_rate_stderr=float(se[2 * users]),
        common_rate=float(mean[2 * users + 1]),
        common_rate_stderr=float(se[2 * users + 1]),
    )


def _as_scenario(config) -> Scenario:
    return config if isinstance(config, Scenario) else build_scenario(config)


def estimate_outage(config, point: SweepPoint, trials: int, seed: int):
    """Per-user outage probability and its binomial standard error.

    ``config`` is a :class:`SystemConfig` or an already built
    :class:`Scenario`.
    """
    if trials < 100:
        raise ConfigurationError(f"outage estimation needs trials >= 100, got {trials}")
    res = simulate_point(_as_scenario(config), point, trials, seed)
    return res.outage, res.outage_stderr


def estimate_ergodic(config, point: SweepPoint, trials: int, seed: int):
    """Group ergodic rates ``(common, private, total)`` as (mean, stderr) pairs."""
    if trials < 100:
        raise ConfigurationError(f"ergodic estimation needs trials >= 100, got {trials}")
    res = simulate_point(_as_scenario(config), point, trials, seed)
    private_se = _private_stderr(res)
    return ((res.common_rate, res.common_rate_stderr),
            (res.private_rate, private_se),
            (res.group_rate, res.group_rate_stderr))


def _private_stderr(res: PointResult) -> float:
    # common and private parts are nearly independent (different polarizations)
    return float(math.sqrt(max(res.group_rate_stderr ** 2 - res.common_rate_stderr ** 2, 0.0)))


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    snr_grid_db: tuple
    chi_grid: tuple = (0.0,)
    xi_grid: tuple = (0.0,)
    trials: int = 10_000
    master_seed: int = 0
    schemes: tuple = ("dp-rsma",)

    def __post_init__(self):
        for name in ("snr_grid_db", "chi_grid", "xi_grid", "schemes"):
            value = tuple(getattr(self, name))
            if not value:
                raise ConfigurationError(f"{name} must be nonempty")
            object.__setattr__(self, name, value)
        if self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")
        if any(not 0 <= c <= 1 for c in self.chi_grid):
            raise ConfigurationError("chi values must lie in [0, 1]")
        if any(x < 0 for x in self.xi_grid):
            raise ConfigurationError("xi values must be >= 0")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigurationError(f"unknown scheme {s!r}; expected one of {SCHEMES}")

    def points(self) -> list:
        return [SweepPoint(s, snr, chi, xi) for s in self.schemes for snr in self.snr_grid_db
                for chi in self.chi_grid for xi in self.xi_grid]


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    snr_db: float
    chi: float
    xi: float
    user: int
    outage_estimate: float
    outage_stderr: float
    ergodic_estimate: float
    ergodic_stderr: float
    analytic_outage: float = math.nan
    analytic_ergodic: float = math.nan
    error: str = ""

    def csv_values(self) -> tuple:
        return (self.scheme, self.snr_db, self.chi, self.xi, self.user, self.outage_estimate,
                self.outage_stderr, self.analytic_outage, self.ergodic_estimate, self.ergodic_stderr,
                self.analytic_ergodic)


@dataclass
class ResultTable:
    """Per-user rows plus the group-level result of every point."""

    rows: list = field(default_factory=list)
    points: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    def select(self, **where) -> list:
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in where.items())]

    def to_csv(self, stream=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row.csv_values()])
        text = buf.getvalue()
        if stream is not None:
            stream.write(text)
        return text


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.9g}"


def analytic_point(scenario: Scenario, snr_db: float, chi: float):
    """Closed-form per-user outage and ergodic rate of the dual-polarized scheme."""
    cfg = scenario.config
    rho = 10.0 ** (snr_db / 10.0)
    alpha, betas = cfg.powers.common_alpha, cfg.powers.betas
    users = scenario.zetas.size
    t = cfg.targets
    out, erg = [], []
    for zeta, beta, rp in zip(scenario.zetas, betas, t.private_rates):
        pc = analytic.outage_common(zeta, alpha, beta, chi, users, scenario.phi, rho, t.common_rate)
        pp = analytic.outage_private(zeta, alpha, beta, chi, scenario.phi, rho, rp)
        out.append(analytic.outage_total(pc, pp))
        erg.append(analytic.ergodic_common_user(scenario.zetas, alpha, beta, chi, scenario.phi, rho)
                   + analytic.ergodic_private_user(zeta, alpha, beta, chi, scenario.phi, rho))
    return np.array(out), np.array(erg)


def _threads() -> int:
    env = os.environ.get("POLAR_RSMA_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigurationError(f"POLAR_RSMA_THREADS must be a positive integer, got {env!r}") from None
        if n < 1:
            raise ConfigurationError(f"POLAR_RSMA_THREADS must be a positive integer, got {env!r}")
        return n
    return os.cpu_count() or 1


def run_sweep(spec: SweepSpec, config) -> ResultTable:
    """Evaluate every grid point of ``spec`` for every scheme.

    A point that fails (for instance an infeasible precoder) yields rows
    of NaN carrying the error text; the rest of the sweep continues.
    """
    scenario = _as_scenario(config)
    points = spec.points()
    users = scenario.zetas.size

    def work(pt):
        try:
            res = simulate_point(scenario, pt, spec.trials, spec.master_seed)
            cf = analytic_point(scenario, pt.snr_db, pt.chi) if pt.scheme == "dp-rsma" else None
            return pt, res, cf, ""
        except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            return pt, None, None, f"{type(exc).__name__}: {exc}"

    workers = max(1, min(_threads(), len(points)))
    if workers == 1:
        outcomes = [work(p) for p in points]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(work, points))

    table = ResultTable()
    for pt, res, cf, err in outcomes:
        if err:
            table.errors[pt] = err
            for u in range(users):
                table.rows.append(ResultRow(pt.scheme, pt.snr_db, pt.chi, pt.xi, u + 1,
                                            math.nan, math.nan, math.nan, math.nan, error=err))
            continue
        table.points[pt] = res
        for u in range(users):
            table.rows.append(ResultRow(
                pt.scheme, pt.snr_db, pt.chi, pt.xi, u + 1,
                float(res.outage[u]), float(res.outage_stderr[u]),
                float(res.rate[u]), float(res.rate_stderr[u]),
                float(cf[0][u]) if cf is not None else math.nan,
                float(cf[1][u]) if cf is not None else math.nan,
            ))
    return table
