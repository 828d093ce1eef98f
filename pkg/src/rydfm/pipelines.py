"""Composite signal-chain evaluations used by the CLI and analysis layers."""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from .constants import HBAR
from .fm import FmConfig, RamParams, apply_ram, dc_power, demodulate, propagate, sidebands
from .quantum import FieldDrive, LadderSystem, susceptibility
from .spectroscopy import AtResult, MediumSpectrum, at_splitting, scan_probe


def drive_at_field(sys: LadderSystem, drive: FieldDrive, e_rf: float) -> FieldDrive:
    """Operating point with the RF Rabi frequency set by a field amplitude."""
    return replace(drive, omega_rf=sys.mu_rf * e_rf / HBAR)


def sideband_spectrum(
    sys: LadderSystem,
    drive: FieldDrive,
    cfg: FmConfig,
    carrier_detuning: float,
    *,
    mesh_drive: FieldDrive | None = None,
) -> MediumSpectrum:
    """Medium response sampled exactly at the carrier and sideband detunings.

    `mesh_drive`, when given, fixes the velocity quadrature layout (used to
    keep finite differences over the drive smooth).
    """
    offsets = np.arange(-cfg.n_max, cfg.n_max + 1) * cfg.omega_m
    grid = carrier_detuning + offsets
    base = mesh_drive if mesh_drive is not None else drive
    chi = np.array(
        [
            susceptibility(sys, replace(drive, delta_p=float(d)), mesh_like=replace(base, delta_p=float(d)))
            for d in grid
        ]
    )
    half_optical = 0.5 * sys.k_probe * sys.cell_length
    return MediumSpectrum(
        grid=grid,
        chi=chi,
        amp_transmission=np.exp(-half_optical * chi.imag),
        phase=half_optical * chi.real,
    )


def fm_response(
    sys: LadderSystem,
    drive: FieldDrive,
    cfg: FmConfig,
    carrier_detuning: float,
    *,
    lo_phase: float | None = None,
    ram: RamParams | None = None,
    mesh_drive: FieldDrive | None = None,
) -> tuple[float, float]:
    """Demodulated FM signal and relative DC power at one carrier detuning."""
    spec = sideband_spectrum(sys, drive, cfg, carrier_detuning, mesh_drive=mesh_drive)
    sb = sidebands(cfg.beta, cfg.n_max, omega_m=cfg.omega_m)
    if ram is not None:
        sb = apply_ram(sb, ram)
    prop = propagate(sb, spec, carrier_detuning)
    phase = cfg.lo_phase if lo_phase is None else lo_phase
    return demodulate(prop, phase), dc_power(prop)


def fm_probe_scan(
    sys: LadderSystem,
    drive: FieldDrive,
    cfg: FmConfig,
    carrier_grid: np.ndarray,
    *,
    ram: RamParams | None = None,
    refine: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """In-phase and quadrature FM spectra over a carrier-detuning grid.

    The medium is evaluated once on the carrier grid extended by
    n_max * omega_m on both sides with the same step; sidebands then sample
    it by linear interpolation.
    """
    carrier_grid = np.asarray(carrier_grid, dtype=float)
    step = float(np.median(np.diff(carrier_grid)))
    pad = int(np.ceil(cfg.n_max * cfg.omega_m / step)) + 1
    extended = np.concatenate([
        carrier_grid[0] + step * np.arange(-pad, 0),
        carrier_grid,
        carrier_grid[-1] + step * np.arange(1, pad + 1),
    ])
    spec = scan_probe(sys, drive, extended, refine=refine)
    sb = sidebands(cfg.beta, cfg.n_max, omega_m=cfg.omega_m)
    if ram is not None:
        sb = apply_ram(sb, ram)
    inphase = np.empty(carrier_grid.size)
    quadrature = np.empty(carrier_grid.size)
    for i, d in enumerate(carrier_grid):
        prop = propagate(sb, spec, float(d))
        inphase[i] = demodulate(prop, 0.0)
        quadrature[i] = demodulate(prop, np.pi / 2)
    return inphase, quadrature


def rf_detuning_scan(
    sys: LadderSystem,
    drive: FieldDrive,
    cfg: FmConfig,
    rf_grid: np.ndarray,
    *,
    lo_phase: float | None = None,
) -> np.ndarray:
    """Demodulated FM signal versus RF detuning at a fixed probe carrier.

    The velocity mesh is laid out once from the undetuned drive so the
    scanned line is not polluted by quadrature-layout changes.
    """
    out = np.empty(np.asarray(rf_grid).size)
    for i, d_rf in enumerate(np.asarray(rf_grid, dtype=float)):
        signal, _ = fm_response(
            sys,
            replace(drive, delta_rf=float(d_rf)),
            cfg,
            drive.delta_p,
            lo_phase=lo_phase,
            mesh_drive=drive,
        )
        out[i] = signal
    return out


def at_calibration(
    sys: LadderSystem,
    drive: FieldDrive,
    fields: np.ndarray,
    grid: np.ndarray,
    *,
    refine: int = 1,
) -> list[tuple[float, AtResult]]:
    """AT splitting extracted from a probe scan at each RF field amplitude."""
    results = []
    for e_rf in np.asarray(fields, dtype=float):
        spec = scan_probe(sys, drive_at_field(sys, drive, float(e_rf)), grid, refine=refine)
        results.append((float(e_rf), at_splitting(spec)))
    return results
