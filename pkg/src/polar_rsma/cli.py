"""Command-line front end.

    polar-rsma simulate|analytic|sweep|validate [--config PATH] [--preset NAME]
               [--seed N] [--trials N] [--out PATH]

Results go to standard output as CSV unless ``--out`` is given.  Any
failure exits with status 1 and a single ``error: <kind>: <message>``
line on standard error.  ``POLAR_RSMA_THREADS`` caps the number of
worker threads used by sweeps.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import analytic
from .channel import ConfigurationError
from .config import SystemConfig, load_config
from .montecarlo import SCHEMES, ResultTable, SweepSpec, build_scenario, run_sweep
from .phy import RateTargets
from .validation import run_all

__all__ = ["PRESETS", "Preset", "main", "cmd_simulate", "cmd_analytic", "cmd_sweep", "cmd_validate",
           "load_config", "SystemConfig"]

_SNR_GRID = tuple(float(s) for s in range(0, 31, 2))
_TARGETS_OUTAGE = RateTargets(0.5, (0.1, 0.5, 1.2))
_TARGETS_SUM = RateTargets(0.5, (0.1, 1.0, 2.0))


@dataclass(frozen=True)
class Preset:
    """Sweep grid plus the configuration fields it pins."""

    snr_grid_db: tuple
    chi_grid: tuple
    xi_grid: tuple
    schemes: tuple
    targets: RateTargets
    trials: int = 100_000


PRESETS = {
    "fig2a": Preset(_SNR_GRID, (0.0,), (0.0,), ("dp-rsma",), _TARGETS_OUTAGE),
    "fig2b": Preset(_SNR_GRID, (0.01, 0.1), (0.0,), ("dp-rsma",), _TARGETS_OUTAGE),
    "fig4a": Preset(_SNR_GRID, (0.001,), (0.0, 0.1), SCHEMES, _TARGETS_SUM),
    "fig4b": Preset((24.0,), (0.001,), tuple(round(0.1 * k, 1) for k in range(11)), SCHEMES, _TARGETS_SUM),
    "fig5a": Preset(_SNR_GRID, (0.001, 0.01, 0.1), (0.0,), ("dp-rsma",), _TARGETS_OUTAGE),
    "fig5b": Preset(_SNR_GRID, (0.001,), (0.0, 0.1), SCHEMES, _TARGETS_OUTAGE),
}


def _config(args) -> SystemConfig:
    cfg = load_config(args.config) if args.config else SystemConfig()
    if args.preset:
        cfg = cfg.replace(targets=PRESETS[args.preset].targets)
    return cfg


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def cmd_simulate(args) -> int:
    """Monte Carlo at the configured operating point, every scheme by default."""
    cfg = _config(args)
    chi = cfg.chi if args.chi is None else args.chi
    snr = cfg.snr_db if args.snr_db is None else args.snr_db
    schemes = tuple(args.scheme) if args.scheme else SCHEMES
    spec = SweepSpec((snr,), (chi,), (cfg.powers.sic_error if args.xi is None else args.xi,),
                     args.trials or 100_000, args.seed, schemes)
    return _emit(run_sweep(spec, cfg), args.out)


def analytic_values(cfg: SystemConfig, snr_db: float, chi: float):
    """Per-user common and private outage plus the group common and private ergodic rates."""
    sc = build_scenario(cfg)
    rho = 10.0 ** (snr_db / 10.0)
    alpha, betas, t = cfg.powers.common_alpha, cfg.powers.betas, cfg.targets
    users = sc.zetas.size
    pc = [analytic.outage_common(z, alpha, b, chi, users, sc.phi, rho, t.common_rate)
          for z, b in zip(sc.zetas, betas)]
    pp = [analytic.outage_private(z, alpha, b, chi, sc.phi, rho, r)
          for z, b, r in zip(sc.zetas, betas, t.private_rates)]
    cc = analytic.ergodic_common(sc.zetas, alpha, betas, chi, sc.phi, rho)
    cp = analytic.ergodic_private(sc.zetas, alpha, betas, chi, sc.phi, rho)
    return pc, pp, cc, cp


def cmd_analytic(args) -> int:
    cfg = _config(args)
    snr = cfg.snr_db if args.snr_db is None else args.snr_db
    chi = cfg.chi if args.chi is None else args.chi
    pc, pp, cc, cp = analytic_values(cfg, snr, chi)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("quantity", "user", "value"))
    for u, v in enumerate(pc, start=1):
        w.writerow(("outage_common", u, f"{v:.9g}"))
    for u, v in enumerate(pp, start=1):
        w.writerow(("outage_private", u, f"{v:.9g}"))
    w.writerow(("ergodic_common", "all", f"{cc:.9g}"))
    w.writerow(("ergodic_private", "all", f"{cp:.9g}"))
    with _output(args.out) as fh:
        fh.write(buf.getvalue())
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    if args.preset:
        p = PRESETS[args.preset]
        spec = SweepSpec(p.snr_grid_db, p.chi_grid, p.xi_grid, args.trials or p.trials, args.seed, p.schemes)
    else:
        spec = SweepSpec(_SNR_GRID, (cfg.chi,), (cfg.powers.sic_error,), args.trials or 100_000, args.seed,
                         tuple(args.scheme) if args.scheme else ("dp-rsma",))
    return _emit(run_sweep(spec, cfg), args.out)


def _emit(table: ResultTable, out) -> int:
    with _output(out) as fh:
        table.to_csv(fh)
    for pt, err in table.errors.items():
        print(f"error: point {pt.scheme} snr_db={pt.snr_db} chi={pt.chi} xi={pt.xi}: {err}", file=sys.stderr)
    return 1 if table.errors else 0


def cmd_validate(args) -> int:
    cfg = load_config(args.config) if args.config else SystemConfig()
    checks = run_all(cfg)
    with _output(args.out) as fh:
        for c in checks:
            print(c.line(), file=fh)
    return 0 if all(c.passed for c in checks) else 1


_COMMANDS = {"simulate": cmd_simulate, "analytic": cmd_analytic, "sweep": cmd_sweep, "validate": cmd_validate}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polar-rsma", description="Dual-polarized RSMA link-level simulator.")
    ap.add_argument("command", choices=sorted(_COMMANDS))
    ap.add_argument("--config", metavar="PATH", help="key = value configuration file")
    ap.add_argument("--preset", choices=sorted(PRESETS))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--out", metavar="PATH")
    ap.add_argument("--snr-db", type=float, default=None, help="override the configured SNR")
    ap.add_argument("--chi", type=float, default=None, help="override the configured iXPD")
    ap.add_argument("--xi", type=float, default=None, help="override the configured SIC residual")
    ap.add_argument("--scheme", action="append", choices=SCHEMES)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigurationError, ArithmeticError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
