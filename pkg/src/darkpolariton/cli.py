"""Batch scenarios that write deterministic CSV tables.

Every run writes its tables into ``--out`` together with ``manifest.json``
(package version, SHA-256 of the effective configuration and of every
emitted file). Headers carry units: lengths in ``L0``, times in ``L0/c``,
velocities in ``c``; field amplitudes are in the arbitrary units of the
input pulse.

Exit status: 0 success, 2 configuration error, 3 numerical failure,
4 pulse overflow of the grid.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from . import __version__
from .adiabatic import displacement, transport_many, transport_retarded
from .bloch import Scenario, adiabatic_initial_state, integrate, storage_retrieval_fidelity
from .config import RunConfig, load_config
from .errors import ConfigError, PolaritonError, UndefinedResidualError, DegenerateControlError
from .medium import group_velocity, mixing_angle, omega_at, theta_at
from .oracle import (
    SystemSpec,
    collective_matter_state,
    commutator_expectation,
    dark_residual,
    dark_state,
    evolve_transfer,
    ramp_schedule,
    round_trip_schedule,
)
from .polariton import PolaritonProfile, to_polariton
from .validity import adiabaticity_figure, intensity_ratio_residual, storage_bound, z_max

__all__ = [
    "main",
    "run_fig2",
    "run_propagate",
    "run_store_retrieve",
    "run_validity",
    "run_oracle",
    "run_sweep",
]


# -- output helpers --------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out: Path, command: str, cfg: RunConfig, files) -> Path:
    manifest = {
        "command": command,
        "version": __version__,
        "config_sha256": cfg.sha256,
        "files": {p.name: _sha256(p) for p in sorted(files, key=lambda p: p.name)},
    }
    path = out / "manifest.json"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _record_indices(cfg: RunConfig):
    n_t = cfg.grid.n_t
    idx = list(range(0, n_t + 1, cfg.scenario.record_every))
    if idx[-1] != n_t:
        idx.append(n_t)
    return idx


def _initial_profile(cfg: RunConfig) -> PolaritonProfile:
    z = cfg.grid.z
    sc = cfg.scenario
    return PolaritonProfile(cfg.grid.t_min, z, sc.amplitude * np.exp(-((z - sc.center) / sc.width) ** 2))


def _initial_state(cfg: RunConfig):
    """Adiabatic field state whose probe envelope has peak ``amplitude``."""
    theta0 = theta_at(cfg.schedule, cfg.params, cfg.grid.t_min, cfg.grid.z)
    cos0 = np.cos(np.asarray(theta0))
    if np.any(cos0 <= 0):
        raise ConfigError("control is off at t_min; the probe cannot start inside the medium")
    prof = _initial_profile(cfg)
    prof = PolaritonProfile(prof.t, prof.z, prof.psi / cos0)
    return adiabatic_initial_state(prof, cfg.schedule, cfg.params)


def _bloch_trajectory(cfg: RunConfig):
    scenario = Scenario(cfg.params, cfg.schedule, cfg.grid, _initial_state(cfg),
                        record_every=cfg.scenario.record_every,
                        allow_strong_probe=cfg.scenario.allow_strong_probe)
    method = "split" if cfg.schedule.retarded else cfg.scenario.method
    return integrate(scenario, method)


def _bloch_rows(traj):
    for s in traj.snapshots:
        for j in range(s.z.size):
            yield (s.t, s.z[j], s.E[j].real, s.E[j].imag, s.sigma_ba[j].real, s.sigma_ba[j].imag,
                   s.sigma_bc[j].real, s.sigma_bc[j].imag)


BLOCH_HEADER = ["t [L0/c]", "z [L0]", "re_E [a.u.]", "im_E [a.u.]", "re_S_a [a.u.]", "im_S_a [a.u.]",
                "re_S [a.u.]", "im_S [a.u.]"]


def _adiabatic_profiles(cfg: RunConfig):
    times = cfg.grid.t[_record_indices(cfg)]
    return transport_many(_initial_profile(cfg), cfg.schedule, cfg.params, times)


# -- scenarios -------------------------------------------------------------

def run_fig2(cfg: RunConfig, out, full_bloch: bool = False) -> dict:
    """Stop-and-restart transport: control schedule, polariton surface and its components."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    params, schedule = cfg.params, cfg.schedule
    if schedule.retarded:
        raise ConfigError("fig2 needs a non-retarded schedule")
    t = cfg.grid.t
    omega = np.atleast_1d(omega_at(schedule, params, t))
    theta = np.atleast_1d(mixing_angle(omega, params))
    G = params.g_root_N
    cot = omega / G if G > 0 else np.full(t.shape, math.inf)
    files = [_write_csv(out / "schedule.csv", ["t [L0/c]", "cot_theta [1]", "theta [rad]", "v_g [c]"],
                        zip(t, cot, theta, group_velocity(theta, params)))]

    profiles = _adiabatic_profiles(cfg)
    files.append(_write_csv(out / "polariton.csv", ["t [L0/c]", "z [L0]", "abs_psi [a.u.]"],
                            ((p.t, zj, abs(v)) for p in profiles for zj, v in zip(p.z, p.psi))))

    comp_rows = []
    e_peaks = []
    for p in profiles:
        th = float(theta_at(schedule, params, p.t))
        E = math.cos(th) * p.psi
        S = -math.sin(th) * p.psi
        e_peaks.append(float(np.max(np.abs(E))))
        comp_rows.extend((p.t, zj, e.real, e.imag, abs(s)) for zj, e, s in zip(p.z, E, S))
    files.append(_write_csv(out / "components.csv",
                            ["t [L0/c]", "z [L0]", "re_E [a.u.]", "im_E [a.u.]", "abs_sigma_cb [a.u.]"],
                            comp_rows))

    summary = {
        "displacement": displacement(schedule, params, t[0], t[-1]),
        "min_E_peak_ratio": min(e_peaks) / e_peaks[0] if e_peaks[0] > 0 else math.nan,
        "min_group_velocity": float(np.min(group_velocity(theta, params))),
    }
    if full_bloch:
        traj = _bloch_trajectory(cfg)
        files.append(_write_csv(out / "bloch.csv", BLOCH_HEADER, _bloch_rows(traj)))
        summary["bloch_max_deviation"] = _max_deviation(traj, profiles, cfg)
    files.append(_write_csv(out / "summary.csv", ["quantity", "value"], sorted(summary.items())))
    _write_manifest(out, "fig2", cfg, files)
    return summary


def _max_deviation(traj, profiles, cfg):
    """Largest relative L2 distance between integrated and adiabatic polariton profiles."""
    worst = 0.0
    for snap, prof in zip(traj.snapshots, profiles):
        theta = theta_at(cfg.schedule, cfg.params, snap.t, snap.z)
        psi = to_polariton(snap, theta).psi
        ref = np.sqrt(np.trapezoid(np.abs(prof.psi) ** 2, prof.z))
        worst = max(worst, float(np.sqrt(np.trapezoid(np.abs(psi - prof.psi) ** 2, prof.z)) / ref))
    return worst


def run_propagate(cfg: RunConfig, out, full_bloch: bool = False) -> dict:
    """Adiabatic transport of the configured pulse, optionally checked against the full equations."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    summary = {}
    if cfg.schedule.retarded:
        z = cfg.grid.z
        omega0 = np.asarray(omega_at(cfg.schedule, cfg.params, cfg.grid.t_min, z))
        if np.any(omega0 <= 0):
            raise DegenerateControlError("retarded transport needs Omega > 0 across the initial grid")
        init = _initial_profile(cfg)
        ratio0 = PolaritonProfile(init.t, z, init.psi * np.cos(theta_at(cfg.schedule, cfg.params, init.t, z))
                                  / omega0)
        times = cfg.grid.t[_record_indices(cfg)]
        sol = transport_retarded(ratio0, cfg.schedule, cfg.params, cfg.grid, times)
        rows = []
        for ti, ratio in zip(sol.t, sol.ratio):
            E = ratio * np.asarray(omega_at(cfg.schedule, cfg.params, ti, z))
            rows.extend((ti, zj, e.real, e.imag) for zj, e in zip(z, E))
        files.append(_write_csv(out / "field.csv", ["t [L0/c]", "z [L0]", "re_E [a.u.]", "im_E [a.u.]"], rows))
    else:
        profiles = _adiabatic_profiles(cfg)
        files.append(_write_csv(out / "polariton.csv",
                                ["t [L0/c]", "z [L0]", "re_psi [a.u.]", "im_psi [a.u.]"],
                                ((p.t, zj, v.real, v.imag) for p in profiles for zj, v in zip(p.z, p.psi))))
        summary["displacement"] = displacement(cfg.schedule, cfg.params, cfg.grid.t_min, cfg.grid.t_max)
    if full_bloch:
        traj = _bloch_trajectory(cfg)
        files.append(_write_csv(out / "bloch.csv", BLOCH_HEADER, _bloch_rows(traj)))
        if not cfg.schedule.retarded:
            summary["bloch_max_deviation"] = _max_deviation(traj, profiles, cfg)
    files.append(_write_csv(out / "summary.csv", ["quantity", "value"], sorted(summary.items())))
    _write_manifest(out, "propagate", cfg, files)
    return summary


def _store_report(cfg: RunConfig) -> dict:
    params, schedule = cfg.params, cfg.schedule
    traj = _bloch_trajectory(cfg)
    first, last = traj.initial, traj.final
    fid = storage_retrieval_fidelity(first.E, last.E, first.z)
    t0, t1 = cfg.grid.t_min, cfg.grid.t_max
    report = {
        "fidelity": fid.fidelity,
        "energy_ratio": fid.energy_ratio,
        "excitation_ratio": traj.excitation[-1] / traj.excitation[0],
        "measured_shift": fid.shift,
        "adiabaticity_figure": adiabaticity_figure(params, cfg.scenario.width).value,
        "adiabaticity_flag": adiabaticity_figure(params, cfg.scenario.width).flag,
    }
    if not schedule.retarded:
        report["predicted_shift"] = displacement(schedule, params, t0, t1)
        if params.gamma_bc > 0:
            sin_sq = quad(lambda tau: math.sin(float(theta_at(schedule, params, tau))) ** 2, t0, t1,
                          limit=500, points=[p for p in schedule.breakpoints() if t0 < p < t1][:100] or None)[0]
            report["predicted_energy_ratio"] = math.exp(-2.0 * params.gamma_bc * sin_sq)
        else:
            report["predicted_energy_ratio"] = 1.0
    return report


_REPORT_UNITS = {
    "fidelity": "1", "energy_ratio": "1", "excitation_ratio": "1", "measured_shift": "L0",
    "predicted_shift": "L0", "predicted_energy_ratio": "1", "adiabaticity_figure": "1",
    "adiabaticity_flag": "",
}


def run_store_retrieve(cfg: RunConfig, out) -> dict:
    """Full Maxwell-Bloch run through the configured schedule with a fidelity report."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    report = _store_report(cfg)
    path = _write_csv(out / "report.csv", ["quantity", "value", "unit"],
                      ((k, v, _REPORT_UNITS[k]) for k, v in sorted(report.items())))
    _write_manifest(out, "store", cfg, [path])
    return report


def run_validity(cfg: RunConfig, out) -> dict:
    """Tabulate validity bounds and intensity-ratio residuals along a full integration."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    params, width = cfg.params, cfg.scenario.width
    fig = adiabaticity_figure(params, width)
    bound = storage_bound(params, cfg.scenario.excitations)
    rows = [
        ("z_max", z_max(params, width), "L0", ""),
        ("adiabaticity_figure", fig.value, "1", fig.flag),
        ("storage_bound", bound.hard, "L0/c", ""),
        ("usable_storage_time", bound.usable, "L0/c", ""),
    ]
    files = [_write_csv(out / "validity.csv", ["quantity", "value", "unit", "flag"], rows)]
    traj = _bloch_trajectory(cfg)
    res_rows = []
    residuals = []
    for snap in traj.snapshots:
        omega = omega_at(cfg.schedule, params, snap.t, snap.z)
        try:
            value, status = intensity_ratio_residual(snap, omega, params), "ok"
            residuals.append(value)
        except (UndefinedResidualError, DegenerateControlError) as exc:
            value, status = math.nan, type(exc).__name__
        res_rows.append((snap.t, value, status))
    files.append(_write_csv(out / "residuals.csv", ["t [L0/c]", "residual [1]", "status"], res_rows))
    _write_manifest(out, "validity", cfg, files)
    return {
        "z_max": rows[0][1],
        "adiabaticity_figure": fig.value,
        "flag": fig.flag,
        "storage_bound": bound.hard,
        "max_residual": max(residuals) if residuals else math.nan,
    }


def _ramp_specs(N, n, g, oc):
    G = g * math.sqrt(N)
    omega0 = oc.ramp_factor * G
    slow, fast = oc.slow_time / G, oc.fast_time / G
    return {
        "slow": (SystemSpec(N, n, g, ramp_schedule(omega0, 0.0, slow)), slow),
        "round_trip": (SystemSpec(N, n, g, round_trip_schedule(omega0, slow)), 2.0 * slow),
        "fast": (SystemSpec(N, n, g, ramp_schedule(omega0, 0.0, fast)), fast),
    }


def _transfer(N, n, g, oc, kind):
    spec, duration = _ramp_specs(N, n, g, oc)[kind]
    psi0 = dark_state(spec, float(spec.theta(0.0)), n)
    result = evolve_transfer(spec, psi0, duration, oc.steps)
    target = psi0 if kind == "round_trip" else collective_matter_state(spec, n)
    return duration, result, result.final.fidelity(target)


def run_oracle(cfg: RunConfig, out) -> dict:
    """Dark-state residuals, commutators and light-matter transfer on the exact small system."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    oc = cfg.oracle
    res_rows, transfer_rows, trace_rows = [], [], []
    for N in oc.atoms:
        G = oc.g * math.sqrt(N)
        for n in oc.excitations:
            if n > N:
                continue
            spec = SystemSpec(N, n, oc.g)
            for deg in oc.angles_deg:
                theta = math.radians(deg)
                omega = math.inf if deg == 0 else (0.0 if deg == 90 else G / math.tan(theta))
                res_rows.append((N, n, deg, omega, dark_residual(spec, theta, n, omega),
                                 commutator_expectation(spec, theta)))
            for kind in ("slow", "round_trip", "fast"):
                duration, result, fidelity = _transfer(N, n, oc.g, oc, kind)
                transfer_rows.append((N, n, kind, duration, fidelity, result.norm_drift,
                                      result.excitation_drift))
                trace_rows.extend((N, n, kind, t, f) for t, f in zip(result.times, result.fidelity))
    files = [
        _write_csv(out / "residuals.csv", ["N", "n", "theta [deg]", "omega [1/(L0/c)]", "residual [1/(L0/c)]",
                                           "commutator [1]"], res_rows),
        _write_csv(out / "transfer.csv", ["N", "n", "ramp", "duration [L0/c]", "fidelity [1]",
                                          "norm_drift [1]", "excitation_drift [1]"], transfer_rows),
        _write_csv(out / "traces.csv", ["N", "n", "ramp", "t [L0/c]", "dark_state_fidelity [1]"], trace_rows),
    ]
    _write_manifest(out, "oracle", cfg, files)
    return {
        "max_residual": max((r[4] for r in res_rows), default=math.nan),
        "max_commutator_error": max((abs(r[5] - 1.0) for r in res_rows), default=math.nan),
        "transfer": {(r[0], r[1], r[2]): r[4] for r in transfer_rows},
    }


def _sweep_point(cfg: RunConfig, value: float):
    parameter = cfg.sweep.parameter
    if parameter == "ramp_time":
        oc = cfg.oracle
        if not oc.atoms or not oc.excitations:
            raise ConfigError("ramp_time sweep needs [oracle] atoms and excitations")
        oc = replace(oc, slow_time=value)
        N, n = oc.atoms[0], oc.excitations[0]
        duration, result, fidelity = _transfer(N, n, oc.g, oc, "slow")
        return value, value, fidelity, result.norm[-1] ** 2
    if parameter == "g_root_N":
        cfg = replace(cfg, params=replace(cfg.params, g_root_N=value))
    elif parameter == "pulse_width":
        cfg = replace(cfg, scenario=replace(cfg.scenario, width=value))
    else:
        cfg = replace(cfg, params=replace(cfg.params, gamma_bc=value))
    report = _store_report(cfg)
    return value, report["adiabaticity_figure"], report["fidelity"], report["energy_ratio"]


def run_sweep(cfg: RunConfig, out, workers: int = 1) -> list:
    """Repeat a scenario over ``[sweep] values``; rows come back in grid order."""
    out = Path(out)
    values = cfg.sweep.values
    if not values:
        raise ConfigError("[sweep] values is empty; nothing to sweep")
    if workers < 1:
        raise ConfigError(f"--workers must be >= 1, got {workers}")
    out.mkdir(parents=True, exist_ok=True)
    if workers == 1:
        rows = [_sweep_point(cfg, v) for v in values]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, [cfg] * len(values), values))
    figure_label = "ramp_time [1/(g sqrt(N))]" if cfg.sweep.parameter == "ramp_time" else "adiabaticity_figure [1]"
    path = _write_csv(out / "sweep.csv", [cfg.sweep.parameter, figure_label, "fidelity [1]", "energy_ratio [1]"],
                      rows)
    _write_manifest(out, "sweep", cfg, [path])
    return rows


# -- entry point -----------------------------------------------------------

def _parser():
    parser = argparse.ArgumentParser(
        prog="darkpolariton",
        description="Dark-state polariton scenarios with deterministic CSV output.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "fig2": "stop-and-restart transport surface",
        "propagate": "adiabatic transport of the configured pulse",
        "store": "full storage/retrieval run with fidelity report",
        "validity": "validity bounds and intensity-ratio residuals",
        "oracle": "exact small-system checks",
        "sweep": "repeat a scenario over one parameter",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="INI configuration file (defaults apply to missing keys)")
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--full-bloch", action="store_true",
                       help="also integrate the full equations for comparison")
        p.add_argument("--workers", type=int, default=1, help="worker processes for sweeps")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = Path(args.out)
        if args.command == "fig2":
            result = run_fig2(cfg, out, args.full_bloch)
        elif args.command == "propagate":
            result = run_propagate(cfg, out, args.full_bloch)
        elif args.command == "store":
            result = run_store_retrieve(cfg, out)
        elif args.command == "validity":
            result = run_validity(cfg, out)
        elif args.command == "oracle":
            result = run_oracle(cfg, out)
        else:
            result = run_sweep(cfg, out, args.workers)
    except PolaritonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    if isinstance(result, dict):
        for key, value in result.items():
            if not isinstance(value, dict):
                print(f"{key}: {_fmt(value)}")
    else:
        print(f"{len(result)} rows written to {Path(args.out) / 'sweep.csv'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
