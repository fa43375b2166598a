"""Structural self-checks run by ``polar-rsma validate``.

Each check returns a :class:`Check` with the measured figure and its
threshold.  Together they cover the closed forms against their
quadrature oracles, the precoder isolation properties, the equivalence
of the full and simplified received-signal models, and the Gamma shape
of the two signal gains.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import analytic, phy
from .channel import UserLink, sample_channel, standard_complex_normal
from .config import SystemConfig
from .montecarlo import _dual_fading, build_scenario
from .precoder import PrecoderSet, common_precoder, common_precoder_batch, group_precoder, private_precoders, \
    private_precoders_batch

__all__ = ["Check", "run_all", "closed_form_checks", "precoder_checks", "signal_model_check", "gamma_fit_check"]


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.threshold)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.value:.3e} (limit {self.threshold:.1e})"


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def closed_form_checks(points: int = 4, seed: int = 0) -> list:
    """Worst relative gap between closed forms and quadrature on random parameters."""
    rng = np.random.default_rng(seed)
    out_gap = erg_gap = 0.0
    for _ in range(points):
        zetas = 10 ** rng.uniform(-1.5, -0.5, 3)
        alpha = rng.uniform(0.4, 0.8)
        beta = (1 - alpha) / 3
        chi = 10 ** rng.uniform(-3, -0.5)
        phi = rng.uniform(0.1, 1.0)
        rho = 10 ** rng.uniform(0, 3)
        rate = rng.uniform(0.1, 2.0)
        z = zetas[0]
        out_gap = max(out_gap,
                      _rel(analytic.outage_common(z, alpha, beta, chi, 3, phi, rho, rate),
                           analytic.outage_common_quadrature(z, alpha, beta, chi, 3, phi, rho, rate)),
                      _rel(analytic.outage_private(z, alpha, beta, chi, phi, rho, rate),
                           analytic.outage_private_quadrature(z, alpha, beta, chi, phi, rho, rate)))
        erg_gap = max(erg_gap,
                      _rel(analytic.ergodic_common(zetas, alpha, beta, chi, phi, rho),
                           analytic.ergodic_common_quadrature(zetas, alpha, beta, chi, phi, rho)),
                      _rel(analytic.ergodic_private(zetas, alpha, beta, chi, phi, rho),
                           analytic.ergodic_private_quadrature(zetas, alpha, beta, chi, phi, rho)))
    return [Check("outage closed form vs double integral", out_gap, 1e-8),
            Check("ergodic closed form vs quadrature", erg_gap, 1e-6)]


def precoder_checks(cfg: SystemConfig, draws: int = 200, seed: int = 0) -> list:
    sc = build_scenario(cfg)
    groups = sc.dual_groups
    ortho = isolation = 0.0
    for g, own in enumerate(groups):
        others = groups[:g] + groups[g + 1:]
        f = group_precoder(own, others, cfg.projected_dim, basis=cfg.precoder_basis).f
        ortho = max(ortho, np.max(np.abs(f.conj().T @ f - np.eye(f.shape[1]))))
        for o in others:
            isolation = max(isolation, np.max(np.abs(o.eigvecs.conj().T @ f)))

    rng = np.random.default_rng(seed)
    e = _dual_fading(sc, rng, draws)[3]
    p = private_precoders_batch(e)
    inner = np.abs(np.einsum("bki,bui->buk", e.conj(), p))  # [b, u, k] = |e_k^H p_u|
    norms = np.linalg.norm(e, axis=-1)[:, None, :]
    mask = ~np.eye(e.shape[1], dtype=bool)
    private = np.max((inner / norms)[:, mask])
    return [Check("outer precoder orthonormality", ortho, 1e-10),
            Check("inter-group isolation |U_g'^H F_g|", isolation, 1e-10),
            Check("private isolation |h^H F p| / |h|", private, 1e-9)]


def signal_model_check(cfg: SystemConfig, draws: int = 20, seed: int = 0) -> Check:
    """Full multi-group received signal against the two-term simplified form."""
    sc = build_scenario(cfg)
    groups = sc.dual_groups
    d = cfg.projected_dim // 2
    f_all = [group_precoder(own, groups[:g] + groups[g + 1:], cfg.projected_dim, basis=cfg.precoder_basis)
             for g, own in enumerate(groups)]
    rng = np.random.default_rng(seed)
    users = sc.zetas.size
    worst = 0.0
    pa = cfg.powers
    for _ in range(draws):
        chans = [sample_channel(sc.group, UserLink(z), max(cfg.chi, 1e-3), rng) for z in sc.zetas]
        sets, commons, privates = [], [], []
        for g in range(len(groups)):
            # other groups' users only matter through their precoders
            if g == cfg.reported_group:
                eff = np.stack([f_all[g].f.conj().T @ ch.h_hh for ch in chans])
            else:
                eff = standard_complex_normal(rng, (users, d))
            sets.append(PrecoderSet(common_precoder(d, rng), private_precoders(f_all[g], eff)))
            commons.append(standard_complex_normal(rng, 1)[0])
            privates.append(standard_complex_normal(rng, users))
        g0 = cfg.reported_group
        for u, ch in enumerate(chans):
            full = phy.received_signal(ch.matrix(), f_all, sets, [pa] * len(groups), commons, privates)
            simple = phy.received_signal_simplified(ch, f_all[g0], sets[g0], u, pa, commons[g0], privates[g0])
            worst = max(worst, float(np.max(np.abs(full - simple)) / np.max(np.abs(simple))))
    return Check("full vs simplified received signal", worst, 1e-10)


def gamma_fit_check(cfg: SystemConfig, samples: int = 100_000, seed: int = 0) -> list:
    """KS distance between the signal gains and their maximum-likelihood Gamma fit."""
    sc = build_scenario(cfg)
    rng = np.random.default_rng(seed)
    e_vv, e_vh, e_hv, e_hh = _dual_fading(sc, rng, samples)
    d = sc.dual_map.shape[0]
    c = common_precoder_batch(d, rng, samples)
    p = private_precoders_batch(e_hh)
    cs, _, ps, _ = phy.dp_rsma_gains(e_vv, e_vh, e_hv, e_hh, c, p, cfg.powers.common_alpha,
                                     cfg.powers.betas, 0.0)
    checks = []
    for name, x in (("common", cs[:, 0]), ("private", ps[:, 0])):
        shape, _, scale = stats.gamma.fit(x, floc=0)
        ks = stats.kstest(x, "gamma", args=(shape, 0, scale)).statistic
        checks.append(Check(f"Gamma fit KS distance, {name} gain", float(ks), 0.05))
    return checks


def run_all(cfg: SystemConfig | None = None) -> list:
    cfg = cfg or SystemConfig()
    return [*closed_form_checks(), *precoder_checks(cfg), signal_model_check(cfg), *gamma_fit_check(cfg)]
