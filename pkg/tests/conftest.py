import math

import numpy as np
import pytest

from rydfm.quantum import FieldDrive, LadderSystem
from rydfm.spectroscopy import MediumSpectrum

TWO_PI = 2 * math.pi


@pytest.fixture
def cold_system():
    """Doppler-free dilute system for fast deterministic scans."""
    return LadderSystem(temperature=1e-9, n_atoms=1e13)


@pytest.fixture
def warm_system():
    return LadderSystem()


@pytest.fixture
def default_drive():
    return FieldDrive(omega_p=TWO_PI * 6.7e6, omega_c=TWO_PI * 7.0e6, delta_c=TWO_PI * 1e6)


def bessel_series(n: int, x: float, terms: int = 40) -> float:
    """Independent J_n(x) by direct series summation."""
    total = 0.0
    for k in range(terms):
        total += (-1) ** k * (x / 2) ** (n + 2 * k) / (math.factorial(k) * math.factorial(n + k))
    return total


def symmetric_medium(depth=2e-2, hwhm=TWO_PI * 8e6, span=TWO_PI * 120e6, n=4001, optical=3e5):
    """Synthetic symmetric absorber: Im chi even, Re chi odd."""
    grid = np.linspace(-span, span, n)
    chi = 1j * depth / (hwhm - 1j * grid)
    t = np.exp(-optical * chi.imag)
    phase = optical * chi.real
    return MediumSpectrum(grid=grid, chi=chi, amp_transmission=t, phase=phase)


def asymmetric_medium(span=TWO_PI * 120e6, n=4001):
    """Two unequal absorption lines; breaks every symmetry."""
    grid = np.linspace(-span, span, n)
    chi = 1j * 2.5e-2 / (TWO_PI * 7e6 - 1j * (grid - TWO_PI * 9e6))
    chi = chi + 1j * 1.1e-2 / (TWO_PI * 4e6 - 1j * (grid + TWO_PI * 16e6))
    t = np.exp(-3e5 * chi.imag)
    phase = 3e5 * chi.real
    return MediumSpectrum(grid=grid, chi=chi, amp_transmission=t, phase=phase)
