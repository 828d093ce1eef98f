"""Scenario-driven batch front end.

Usage: rydfm <subcommand> --config <path> [--seed N] [--out DIR]

Subcommands: scan, fmscan, atcal, servo, noise, allan, matched,
sensitivity.  Every output is CSV (or key-value text) with '#' header
lines carrying the config hash and seed; numeric bodies are byte-identical
across reruns of the same configuration.  The output directory resolves
as --out, then $RYDFM_OUT, then the scenario [output] dir.

Exit codes: 0 success, 2 configuration error, 3 numeric failure, 4 I/O.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import tempfile
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, analysis, fm, noise, pipelines, servo, spectroscopy
from .errors import CONFIG_ERRORS, NUMERIC_ERRORS
from .scenario import Scenario, load_scenario

SUBCOMMANDS = ("scan", "fmscan", "atcal", "servo", "noise", "allan", "matched", "sensitivity")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


@dataclass
class RunManifest:
    config_hash: str
    seed: int
    versions: dict
    started: str
    finished: str
    outputs: list[str]


def _fmt(value: float) -> str:
    return f"{value:.12e}"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: Path, header: dict, columns: list[str], rows: np.ndarray) -> None:
    lines = [f"# {key} = {value}" for key, value in header.items()]
    lines.append("# columns: " + ",".join(columns))
    for row in np.atleast_2d(rows):
        lines.append(",".join(_fmt(float(x)) for x in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _header(scn: Scenario, seed: int) -> dict:
    return {"config_hash": scn.config_hash(), "seed": seed}


def _out_path(outdir: Path, name: str) -> Path:
    return outdir / name


# --- subcommand implementations ----------------------------------------------

def run_scan(scn: Scenario, seed: int, outdir: Path) -> list[Path]:
    spec = spectroscopy.scan_probe(scn.system, scn.drive, scn.scan.probe_grid_rad_s())
    path = _out_path(outdir, "spectrum.csv")
    write_csv(
        path,
        _header(scn, seed),
        ["detuning_hz", "re_chi", "im_chi", "power_transmission", "phase_rad"],
        spectroscopy.spectrum_rows(spec),
    )
    return [path]


def run_fmscan(scn: Scenario, seed: int, outdir: Path) -> list[Path]:
    grid = scn.scan.probe_grid_rad_s()
    ram = scn.ram if scn.apply_ram else None
    inphase, quadrature = pipelines.fm_probe_scan(scn.system, scn.drive, scn.fm, grid, ram=ram)
    rows = np.column_stack([grid / (2 * math.pi), inphase, quadrature])
    path = _out_path(outdir, "fm_spectrum.csv")
    write_csv(path, _header(scn, seed), ["detuning_hz", "signal_inphase", "signal_quadrature"], rows)
    return [path]


def run_atcal(scn: Scenario, seed: int, outdir: Path) -> list[Path]:
    fields = scn.scan.field_grid()
    grid = scn.scan.probe_grid_rad_s()
    results = pipelines.at_calibration(scn.system, scn.drive, fields, grid)
    rows = []
    for e_rf, at in results:
        split_linear = spectroscopy.splitting_from_field(e_rf, scn.system.mu_rf)
        split_sim = at.split_hz if at.split_hz is not None else float("nan")
        rows.append([e_rf, split_sim, split_linear, 1.0 if at.confidence == "resolved" else 0.0])
    path = _out_path(outdir, "at_calibration.csv")
    write_csv(
        path,
        _header(scn, seed),
        ["e_rf_v_per_m", "split_sim_hz", "split_linear_hz", "resolved"],
        np.asarray(rows),
    )
    return [path]


def _drift_from_opts(opts, seed: int):
    if opts.drift_model == "constant":
        return servo.constant_drift(opts.drift_value)
    if opts.drift_model == "ramp":
        return servo.ramp_drift(opts.drift_rate, opts.drift_value)
    if opts.drift_model == "sinusoid":
        return servo.sinusoid_drift(opts.drift_amp, opts.drift_freq_hz)
    return servo.random_walk_drift(opts.drift_step_std, seed)


def run_servo(scn: Scenario, seed: int, outdir: Path) -> list[Path]:
    drift = _drift_from_opts(scn.servo, seed)
    header = _header(scn, seed)
    outputs = []
    traces = {}
    for label, lock in (("locked", True), ("unlocked", False)):
        trace = servo.run_servo(drift, scn.gains, scn.servo.duration_s, ram=scn.ram, lock=lock)
        traces[label] = trace
        rows = np.column_stack([trace.time, trace.dphi_n, trace.dphi_dc, trace.error])
        path = _out_path(outdir, f"servo_trace_{label}.csv")
        write_csv(path, header, ["time_s", "dphi_n_rad", "dphi_dc_rad", "error"], rows)
        outputs.append(path)
    for label, trace in traces.items():
        ts = noise.TimeSeries(dt=scn.gains.dt, values=trace.error, seed=seed, kind="composite")
        taus = analysis.octave_taus(ts)
        result = analysis.allan_deviation(ts, taus)
        rows = np.column_stack([result.taus, result.sigma_y, result.counts])
        path = _out_path(outdir, f"servo_allan_{label}.csv")
        write_csv(path, header, ["tau_s", "sigma_y", "n_bins"], rows)
        outputs.append(path)
    return outputs


def _make_series(scn: Scenario, seed: int) -> noise.TimeSeries:
    opts = scn.noise
    if opts.kind == "shot":
        return noise.shot_noise_series(opts.shot_current_a, opts.dt, opts.n_samples, seed)
    if opts.kind == "composite":
        return noise.gen_composite(opts.budget, opts.n_samples, opts.dt, seed)
    return noise.gen_powerlaw(opts.kind, opts.coefficient, opts.n_samples, opts.dt, seed)


def run_noise(scn: Scenario, seed: int, outdir: Path) -> list[Path]:
    series = _make_series(scn, seed)
    header = _header(scn, seed) | {"kind": series.kind, "dt_s": series.dt}
    rows = np.column_stack([series.time, series.values])
    path = _out_path(outdir, "timeseries.csv")
    write_csv(path, header, ["time_s", "value"], rows)
    return [path]


def run_allan(scn: Scenario, seed: int, outdir: Path) -> list[Path]:
    series = _make_series(scn, seed)
    taus = analysis.octave_taus(series)
    result = analysis.allan_deviation(series, taus)
    header = _header(scn, seed) | {"kind": series.kind, "estimator": result.estimator}
    path = _out_path(outdir, "allan.csv")
    write_csv(
        path,
        header,
        ["tau_s", "sigma_y", "n_bins"],
        np.column_stack([result.taus, result.sigma_y, result.counts]),
    )
    outputs = [path]
    labels = analysis.classify_noise(result)
    lines = [f"# {key} = {value}" for key, value in header.items()]
    lines.append("# columns: tau_lo_s,tau_hi_s,slope,label,ambiguous")
    for lab in labels:
        lines.append(
            f"{_fmt(lab.tau_lo)},{_fmt(lab.tau_hi)},{_fmt(lab.slope)},{lab.label},{int(lab.ambiguous)}"
        )
    cpath = _out_path(outdir, "allan_classification.csv")
    _atomic_write(cpath, "\n".join(lines) + "\n")
    outputs.append(cpath)
    return outputs


def run_matched(scn: Scenario, seed: int, outdir: Path) -> list[Path]:
    grid_hz = np.arange(scn.scan.start_hz, scn.scan.stop_hz + scn.scan.step_hz / 2, scn.scan.step_hz)
    drive = pipelines.drive_at_field(scn.system, scn.drive, scn.scan.e_operating)
    signal = pipelines.rf_detuning_scan(scn.system, drive, scn.fm, 2 * math.pi * grid_hz)
    if scn.scan.line_noise_rms > 0:
        rng = np.random.default_rng(seed)
        signal = signal + rng.normal(0.0, scn.scan.line_noise_rms, signal.size)
    kernel = analysis.LorentzParams(amplitude=1.0, sigma=scn.scan.kernel_hwhm_hz, nu_c=0.0)
    filtered = analysis.matched_filter(grid_hz, signal, kernel)
    in_valid = np.zeros(grid_hz.size)
    in_valid[filtered.valid] = 1.0
    rows = np.column_stack([grid_hz, signal, filtered.values, in_valid])
    path = _out_path(outdir, "matched.csv")
    write_csv(path, _header(scn, seed), ["freq_hz", "raw", "filtered", "in_valid_region"], rows)
    return [path]


def run_sensitivity(scn: Scenario, seed: int, outdir: Path) -> list[Path]:
    report = analysis.sensitivity_estimate(
        scn.system, scn.drive, scn.fm, scn.detector, scn.scan.e_operating
    )
    header = _header(scn, seed)
    lines = [f"# {key} = {value}" for key, value in header.items()]
    lines += [
        f"responsivity_a_per_v_m = {_fmt(report.responsivity)}",
        f"noise_floor_a_per_sqrt_hz = {_fmt(report.noise_floor)}",
        f"e_min_v_per_m_sqrt_hz = {_fmt(report.e_min)}",
        f"e_min_uv_per_cm_sqrt_hz = {_fmt(report.e_min * 1e4)}",
        f"projection_limit_v_per_m_sqrt_hz = {_fmt(report.projection_limit_value)}",
        f"e_operating_v_per_m = {_fmt(scn.scan.e_operating)}",
    ]
    path = _out_path(outdir, "sensitivity.txt")
    _atomic_write(path, "\n".join(lines) + "\n")
    return [path]


_RUNNERS = {
    "scan": run_scan,
    "fmscan": run_fmscan,
    "atcal": run_atcal,
    "servo": run_servo,
    "noise": run_noise,
    "allan": run_allan,
    "matched": run_matched,
    "sensitivity": run_sensitivity,
}


def run(subcommand: str, scn: Scenario, seed: int, outdir: Path) -> RunManifest:
    """Execute one subcommand and write its manifest."""
    started = datetime.now(timezone.utc).isoformat()
    outputs = _RUNNERS[subcommand](scn, seed, outdir)
    finished = datetime.now(timezone.utc).isoformat()
    manifest = RunManifest(
        config_hash=scn.config_hash(),
        seed=seed,
        versions={"rydfm": __version__, "numpy": np.__version__},
        started=started,
        finished=finished,
        outputs=[str(p) for p in outputs],
    )
    lines = [
        f"config_hash = {manifest.config_hash}",
        f"seed = {manifest.seed}",
        f"versions = {manifest.versions}",
        f"started = {manifest.started}",
        f"finished = {manifest.finished}",
    ] + [f"output = {p}" for p in manifest.outputs]
    _atomic_write(outdir / f"manifest_{subcommand}.txt", "\n".join(lines) + "\n")
    return manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rydfm",
        description="Rydberg RF electrometry simulator with FM readout",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run the {name} pipeline")
        p.add_argument("--config", default=None, help="scenario file (defaults when omitted)")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--out", default=None, help="output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scn = load_scenario(args.config)
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    seed = args.seed if args.seed is not None else scn.noise.seed
    outdir = Path(args.out or os.environ.get("RYDFM_OUT") or scn.output.dir)
    try:
        run(args.subcommand, scn, seed, outdir)
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
