"""Probe transmission spectra, AT-splitting extraction and field conversion."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import find_peaks, peak_widths

from .constants import C_LIGHT, EPS0, HBAR, H_PLANCK
from .errors import DomainError, InvariantViolation
from .quantum import FieldDrive, LadderSystem, susceptibility


@dataclass
class MediumSpectrum:
    """Complex susceptibility and single-pass response on a detuning grid.

    `grid` holds probe detunings in rad/s, strictly increasing.
    `amp_transmission` is the field-amplitude transmission t(Delta); the
    power transmission is t**2.  `phase` is the single-pass phase shift in
    radians.
    """

    grid: np.ndarray
    chi: np.ndarray
    amp_transmission: np.ndarray
    phase: np.ndarray

    def __post_init__(self) -> None:
        self.grid = np.asarray(self.grid, dtype=float)
        self.chi = np.asarray(self.chi, dtype=complex)
        self.amp_transmission = np.asarray(self.amp_transmission, dtype=float)
        self.phase = np.asarray(self.phase, dtype=float)
        n = self.grid.size
        if n == 0:
            raise InvariantViolation("spectrum grid is empty")
        if not (self.chi.size == self.amp_transmission.size == self.phase.size == n):
            raise InvariantViolation("spectrum arrays have unequal lengths")
        if n > 1 and not np.all(np.diff(self.grid) > 0):
            raise InvariantViolation("spectrum grid must be strictly increasing")
        if np.any(self.amp_transmission <= 0) or np.any(self.amp_transmission > 1 + 1e-12):
            raise InvariantViolation("amplitude transmission must satisfy 0 < t <= 1")

    @property
    def power_transmission(self) -> np.ndarray:
        return self.amp_transmission ** 2


@dataclass
class AtResult:
    """Autler-Townes splitting of one scan.

    `split_hz` is None when the two highest transmission maxima are closer
    than one single-peak FWHM (or fewer than two maxima exist).
    """

    split_hz: float | None
    peak_locations: tuple[float, float] | None  # rad/s detunings
    confidence: str  # "resolved" | "unresolved"

    def __post_init__(self) -> None:
        if self.confidence not in ("resolved", "unresolved"):
            raise InvariantViolation("confidence must be 'resolved' or 'unresolved'")
        if self.confidence == "unresolved" and self.split_hz is not None:
            raise InvariantViolation("unresolved result must not carry a splitting")
        if self.split_hz is not None and self.split_hz < 0:
            raise InvariantViolation("split_hz must be >= 0")


def scan_probe(
    sys: LadderSystem, drive: FieldDrive, grid: np.ndarray, *, refine: int = 1
) -> MediumSpectrum:
    """Probe-detuning scan of the Doppler-averaged medium response.

    For each detuning Delta on `grid` (rad/s) the field-amplitude
    transmission is exp(-k_p L Im chi / 2) and the phase shift is
    k_p L Re chi / 2 over the cell length L.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise InvariantViolation("scan grid is empty")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise InvariantViolation("scan grid must be strictly increasing")
    chi = np.array(
        [susceptibility(sys, replace(drive, delta_p=float(d)), refine=refine) for d in grid]
    )
    half_optical = 0.5 * sys.k_probe * sys.cell_length
    amp = np.exp(-half_optical * chi.imag)
    phase = half_optical * chi.real
    return MediumSpectrum(grid=grid, chi=chi, amp_transmission=amp, phase=phase)


def _parabolic_refine(x: np.ndarray, y: np.ndarray, i: int) -> float:
    """Sub-step peak location from a 3-point parabola around index i."""
    if i == 0 or i == x.size - 1:
        return float(x[i])
    denom = y[i - 1] - 2 * y[i] + y[i + 1]
    if denom == 0:
        return float(x[i])
    shift = 0.5 * (y[i - 1] - y[i + 1]) / denom
    step = 0.5 * (x[i + 1] - x[i - 1])
    return float(x[i] + shift * step)


def at_splitting(spec: MediumSpectrum) -> AtResult:
    """Detect the AT doublet in a transmission spectrum.

    The two highest local transmission maxima are refined by 3-point
    parabolic interpolation.  The result is unresolved when fewer than two
    maxima exist or their separation is below one FWHM of a single peak.
    """
    t = spec.amp_transmission
    span = float(t.max() - t.min())
    if span <= 0:
        return AtResult(None, None, "unresolved")
    peaks, _ = find_peaks(t, prominence=1e-6 * span)
    if peaks.size < 2:
        return AtResult(None, None, "unresolved")
    order = np.argsort(t[peaks])[::-1][:2]
    chosen = np.sort(peaks[order])
    widths_samples = peak_widths(t, chosen, rel_height=0.5)[0]
    step = float(np.median(np.diff(spec.grid)))
    fwhm = float(widths_samples.max() * step)
    locations = tuple(sorted(_parabolic_refine(spec.grid, t, i) for i in chosen))
    separation = locations[1] - locations[0]
    if separation <= fwhm:
        return AtResult(None, None, "unresolved")
    return AtResult(separation / (2 * np.pi), locations, "resolved")


def field_from_splitting(split_hz: float, mu_rf: float) -> float:
    """RF field amplitude (V/m) from an AT splitting via E = h * split / mu."""
    if mu_rf <= 0:
        raise DomainError("mu_rf must be positive")
    if split_hz < 0:
        raise InvariantViolation("split_hz must be >= 0")
    return H_PLANCK * split_hz / mu_rf


def splitting_from_field(e_field: float, mu_rf: float) -> float:
    """AT splitting (Hz) produced by an RF field, split = mu * E / h."""
    if mu_rf <= 0:
        raise DomainError("mu_rf must be positive")
    return mu_rf * e_field / H_PLANCK


def rabi_from_power(power: float, beam_diameter: float, dipole: float) -> float:
    """Peak Rabi frequency (rad/s) of a Gaussian beam of given total power.

    Uses the peak-intensity convention I0 = 2 P / (pi w^2) with the 1/e^2
    radius w = diameter / 2, i.e. E_peak = sqrt(4 P / (pi w^2 c eps0)).
    """
    if power < 0:
        raise InvariantViolation("power must be >= 0")
    if beam_diameter <= 0:
        raise InvariantViolation("beam_diameter must be > 0")
    radius = beam_diameter / 2
    e_peak = np.sqrt(4 * power / (np.pi * radius ** 2 * C_LIGHT * EPS0))
    return abs(dipole) * e_peak / HBAR


def spectrum_rows(spec: MediumSpectrum) -> np.ndarray:
    """Rows (detuning_hz, re_chi, im_chi, power_transmission, phase_rad)."""
    return np.column_stack([
        spec.grid / (2 * np.pi),
        spec.chi.real,
        spec.chi.imag,
        spec.power_transmission,
        spec.phase,
    ])
