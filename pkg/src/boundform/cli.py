"""Command-line front end: ``boundform <subcommand> CONFIG``.

Subcommands write CSV artifacts plus ``manifest.json`` into the configured
output directory. Exit codes: 0 ok, 2 configuration error, 3 numerical error.
"""
from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import EnsembleParams, RunConfig, ScanParams, load_config
from .coupling import compute_coupling
from .eigen import build_basis
from .ensemble import EnsembleSpec, run_ensemble
from .errors import BoundFormError, NumericalError
from .evolution import evolve, run_single_pulse
from .observables import final_distribution, uncertainty_product, write_summary_csv
from .perturbation import first_order_amplitudes, validity_report, write_validity_csv
from .pulses import GaussianTrain, StochasticSquareTrain, realize

SUBCOMMANDS = ("eigen", "evolve", "ensemble", "perturb", "report")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _path(cfg: RunConfig, name: str) -> Path:
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    return out / f"{cfg.output.prefix}{name}"


def _require_schedule(cfg: RunConfig, kind=None):
    if cfg.schedule is None:
        raise BoundFormError("this subcommand needs a [schedule] block")
    if kind is not None and not isinstance(cfg.schedule, kind):
        raise BoundFormError(f"this subcommand needs a schedule of type {kind.__name__}")
    return cfg.schedule


def _basis(cfg: RunConfig):
    return build_basis(cfg.well, cfg.grid_points)


def _eigen(cfg, artifacts, seeds):
    basis = _basis(cfg)
    path = _path(cfg, "basis.csv")
    psi = basis.to_csv(path, include_psi=cfg.output.write_psi)
    artifacts.append(path)
    if psi:
        artifacts.append(Path(psi))


def _evolve(cfg, artifacts, seeds):
    sched = _require_schedule(cfg)
    basis = _basis(cfg)
    if isinstance(sched, StochasticSquareTrain):
        sched = realize(sched)
        seeds.append(sched.seed)
        amp_path = _path(cfg, "amplitudes.csv")
        sched.to_csv(amp_path)
        artifacts.append(amp_path)
    M = compute_coupling(basis, sched.profile)
    run = cfg.run
    traj = evolve(basis, M, sched, run.initial_index, run.t_end, run.dt, run.sample_every)
    p = _path(cfg, "trajectory.csv")
    traj.to_csv(p)
    artifacts.append(p)
    # the summary records the post-pulse drift instead of enforcing it
    if isinstance(sched, GaussianTrain):
        margin = max(min(10.0 * sched.sigma_t, run.t_end - sched.last_pulse_time), 0.0)
    else:
        margin = sched.window
    summaries = [final_distribution(traj, margin, include_initial=inc, drift_tol=np.inf) for inc in (True, False)]
    if isinstance(sched, GaussianTrain):
        summaries = [replace(s, sigma_t=sched.sigma_t, uncertainty_product=uncertainty_product(s.energy_std, sched.sigma_t))
                     for s in summaries]
    p = _path(cfg, "distribution.csv")
    summaries[0].to_csv(p)
    artifacts.append(p)
    p = _path(cfg, "summary.csv")
    write_summary_csv(p, summaries)
    artifacts.append(p)


def _ensemble(cfg, artifacts, seeds):
    sched = _require_schedule(cfg, StochasticSquareTrain)
    params = cfg.ensemble or EnsembleParams()
    basis = _basis(cfg)
    M = compute_coupling(basis, sched.profile)
    spec = EnsembleSpec(sched, params.n_realizations)
    seeds.extend(spec.member_seeds())
    run = cfg.run
    res = run_ensemble(basis, M, spec, run.initial_index, run.t_end, run.dt, batch_size=params.batch_size)
    p = _path(cfg, "ensemble.csv")
    res.to_csv(p)
    artifacts.append(p)
    p = _path(cfg, "ensemble_manifest.json")
    res.write_manifest(p, spec, t_end=run.t_end, dt=run.dt, batch_size=params.batch_size)
    artifacts.append(p)


def _perturb(cfg, artifacts, seeds):
    sched = _require_schedule(cfg)
    basis = _basis(cfg)
    if isinstance(sched, StochasticSquareTrain):
        sched = realize(sched)
        seeds.append(sched.seed)
    M = compute_coupling(basis, sched.profile)
    run = cfg.run
    t_final = run.t_end
    pert = first_order_amplitudes(basis, M, sched, run.initial_index, t_final, run.dt)
    p = _path(cfg, "perturbative.csv")
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "energy_MeV", "re_c1", "im_c1", "probability"])
        for n, (e, c, q) in enumerate(zip(basis.energies, pert.c1, pert.probabilities)):
            w.writerow([n, f"{e:.12g}", f"{c.real:.12g}", f"{c.imag:.12g}", f"{q:.12g}"])
        w.writerow([])
        w.writerow(["N", f"{pert.norm_constant_N:.12g}"])
    artifacts.append(p)
    if cfg.scan is not None:
        rows = validity_report(basis, cfg.scan.points(), run.initial_index, run.dt, cfg.scan.n_compare,
                               exact=cfg.scan.exact)
        p = _path(cfg, "validity.csv")
        write_validity_csv(p, rows)
        artifacts.append(p)


def _report(cfg, artifacts, seeds):
    scan = cfg.scan or ScanParams()
    basis = _basis(cfg)
    run = cfg.run
    summaries, meta = [], []
    peaks_rows = []
    for V, sigma_t, sigma_x in scan.points():
        sched, _, traj = run_single_pulse(basis, V, sigma_t, sigma_x, run.initial_index, run.dt,
                                          sample_every=run.sample_every)
        for inc in (True, False):
            s = final_distribution(traj, schedule=sched, include_initial=inc)
            summaries.append(s)
            meta.append((V, sigma_t, sigma_x, sched.centers[0]))
            if inc:
                p = _path(cfg, f"distribution_V{V:g}_st{sigma_t:g}_sx{sigma_x:g}.csv")
                s.to_csv(p)
                artifacts.append(p)
                e_init = basis.energies[run.initial_index]
                for n in s.peaks():
                    peaks_rows.append((V, sigma_t, sigma_x, int(n), basis.energies[n], basis.energies[n] - e_init))
    p = _path(cfg, "uncertainty.csv")
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        head = ["V_MeV", "sigma_x_fm", "sigma_t_fm", "t0_fm"] + list(summaries[0].summary_row()) + ["bound_ok_2x"]
        w.writerow(head)
        for (V, st, sx, t0), s in zip(meta, summaries):
            row = s.summary_row()
            vals = [V, sx, st, t0] + list(row.values()) + [int(s.uncertainty_product_2x >= 0.5)]
            w.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in vals])
    artifacts.append(p)
    p = _path(cfg, "peaks.csv")
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["V_MeV", "sigma_t_fm", "sigma_x_fm", "n", "energy_MeV", "excitation_energy_MeV"])
        for r in peaks_rows:
            w.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in r])
    artifacts.append(p)


_DISPATCH = {"eigen": _eigen, "evolve": _evolve, "ensemble": _ensemble, "perturb": _perturb, "report": _report}


def _write_manifest(cfg: RunConfig, subcommand, artifacts, seeds, wall, status, error=None):
    payload = {
        "subcommand": subcommand,
        "status": status,
        "config_sha256": cfg.config_hash,
        "config": cfg.text,
        "seeds": seeds[:1] + seeds[-1:] if len(seeds) > 2 else seeds,
        "n_seeds": len(seeds),
        "artifacts": [str(a) for a in artifacts],
        "versions": {"boundform": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "wall_time_s": round(wall, 3),
    }
    if error:
        payload["error"] = error
    with open(_path(cfg, "manifest.json"), "w") as fh:
        json.dump(payload, fh, indent=2)


def run_scenario(config: RunConfig, subcommand: str) -> int:
    """Execute one subcommand; returns the process exit status."""
    if subcommand not in _DISPATCH:
        print(f"error: unknown subcommand {subcommand!r}; choose from {', '.join(SUBCOMMANDS)}", file=sys.stderr)
        return EXIT_CONFIG
    artifacts, seeds = [], []
    start = time.perf_counter()
    try:
        _DISPATCH[subcommand](config, artifacts, seeds)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _write_manifest(config, subcommand, artifacts, seeds, time.perf_counter() - start, "failed", str(exc))
        return EXIT_NUMERICAL
    except BoundFormError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _write_manifest(config, subcommand, artifacts, seeds, time.perf_counter() - start, "failed", str(exc))
        return EXIT_CONFIG
    _write_manifest(config, subcommand, artifacts, seeds, time.perf_counter() - start, "ok")
    return EXIT_OK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="boundform", description="Bound-state formation in driven square wells")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("config", help="run configuration file")
    ap.add_argument("--output", help="override [output] directory")
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except BoundFormError as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.output:
        cfg = replace(cfg, output=replace(cfg.output, directory=args.output))
    return run_scenario(cfg, args.subcommand)


if __name__ == "__main__":
    sys.exit(main())
