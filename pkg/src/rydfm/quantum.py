"""Steady state of the RF-dressed four-level cesium ladder.

Basis ordering is |1> = 6S1/2, |2> = 6P3/2, |3> = 52D5/2, |4> = 53P3/2.
All rates, Rabi frequencies and detunings are angular (rad/s).

Rotating-frame conventions
--------------------------
The Hamiltonian diagonal holds the negatives of the cumulative detunings
(0, d2, d3, d4) with d2 = delta_p, d3 = d2 + delta_c, d4 = d3 + delta_rf.
For an atom with velocity v along the probe axis the probe detuning is
Doppler-shifted by -k_p*v and the counter-propagating coupling by +k_c*v.
The RF Doppler shift (k_rf/k_p ~ 1e-5) is neglected.  Off-diagonal
couplings are -Omega/2 on the (1,2), (2,3) and (3,4) bonds.

Dissipation is Lindblad form with decays Gamma2: |2>->|1>,
Gamma3: |3>->|2> and a closing channel Gamma4: |4>->|1> (the real
branching of 53P3/2 differs; the closure keeps the generator
trace-preserving without extra levels).  An extra pure-dephasing rate
gamma_deph = 1/T2 damps every coherence involving |3> or |4>.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import A0, CS_MASS, E_CHARGE, EPS0, HBAR, KB
from .errors import (
    InvariantViolation,
    NonConvergenceError,
    SingularSystemError,
)

# Velocities below this are treated as a zero-temperature (delta-function)
# Maxwell distribution.
V_THERMAL_FLOOR = 1e-3

_TRACE_IDX = np.array([0, 5, 10, 15])  # row-major vec positions of rho_ii
_RHO21_IDX = 4                          # row-major vec position of rho[1, 0]


def cs_vapor_density(temperature: float) -> float:
    """Cs number density (m^-3) from the Taylor-Langmuir vapor-pressure fit.

    Solid phase below the 301.6 K melting point, liquid phase above;
    pressure in torr is 10**(2.881 + 4.711 - 3999/T) respectively
    10**(2.881 + 4.165 - 3830/T).
    """
    if temperature <= 0:
        raise InvariantViolation("temperature must be positive for vapor density")
    if temperature < 301.6:
        log_p_torr = 2.881 + 4.711 - 3999.0 / temperature
    else:
        log_p_torr = 2.881 + 4.165 - 3830.0 / temperature
    pressure_pa = 133.322 * 10.0 ** log_p_torr
    return pressure_pa / (KB * temperature)


@dataclass
class LadderSystem:
    """Atomic constants of the four-level ladder."""

    lambda_probe: float = 852e-9
    lambda_coupling: float = 509e-9
    gamma2: float = 2 * math.pi * 5.22e6   # 6P3/2 decay, rad/s
    # Rydberg population relaxation is transit-dominated: crossing the
    # 0.16 mm coupling beam at the mean thermal speed takes ~0.7 us
    gamma3: float = 1.4e6
    gamma4: float = 1.4e6
    gamma_deph: float = 2.0e6              # 1/T2 with T2 = 0.5 us, rad/s
    mu12: float = 3.797e-29                # probe dipole, C m (~4.48 e a0)
    mu_rf: float = 1745 * E_CHARGE * A0    # RF dipole, C m
    n_atoms: float | None = None           # vapor density override, m^-3
    temperature: float = 294.0
    atom_mass: float = CS_MASS
    cell_length: float = 0.03

    def __post_init__(self) -> None:
        if self.n_atoms is None:
            self.n_atoms = cs_vapor_density(self.temperature)
            if self.n_atoms == 0.0:
                raise InvariantViolation(
                    f"vapor-pressure fit underflows at T = {self.temperature} K; "
                    "pass n_atoms explicitly"
                )
        for name in ("gamma2", "gamma3", "gamma4", "gamma_deph", "n_atoms"):
            if getattr(self, name) < 0:
                raise InvariantViolation(f"{name} must be >= 0")
        for name in ("lambda_probe", "lambda_coupling", "cell_length"):
            if getattr(self, name) <= 0:
                raise InvariantViolation(f"{name} must be > 0")
        if self.atom_mass <= 0 or self.temperature < 0:
            raise InvariantViolation("atom_mass must be > 0 and temperature >= 0")

    @property
    def k_probe(self) -> float:
        return 2 * math.pi / self.lambda_probe

    @property
    def k_coupling(self) -> float:
        return 2 * math.pi / self.lambda_coupling

    @property
    def v_thermal(self) -> float:
        """1-D Maxwell-Boltzmann velocity sigma, sqrt(kB T / m)."""
        return math.sqrt(KB * self.temperature / self.atom_mass)


@dataclass
class FieldDrive:
    """Rabi frequencies and detunings of one operating point (rad/s)."""

    omega_p: float = 0.0
    omega_c: float = 0.0
    omega_rf: float = 0.0
    delta_p: float = 0.0
    delta_c: float = 0.0
    delta_rf: float = 0.0

    def __post_init__(self) -> None:
        for name in ("omega_p", "omega_c", "omega_rf"):
            if getattr(self, name) < 0:
                raise InvariantViolation(f"{name} must be >= 0")


@dataclass
class DensityMatrix:
    """4x4 steady-state density matrix with physicality checks."""

    matrix: np.ndarray

    HERMITICITY_TOL = 1e-10
    TRACE_TOL = 1e-10
    EIGENVALUE_FLOOR = -1e-8

    def __post_init__(self) -> None:
        rho = np.asarray(self.matrix, dtype=complex)
        if rho.shape != (4, 4):
            raise InvariantViolation("density matrix must be 4x4")
        self.matrix = rho
        self.validate()

    def validate(self) -> None:
        rho = self.matrix
        if np.max(np.abs(rho - rho.conj().T)) > self.HERMITICITY_TOL:
            raise InvariantViolation("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > self.TRACE_TOL or abs(np.trace(rho).imag) > self.TRACE_TOL:
            raise InvariantViolation("density matrix trace is not 1")
        eigs = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
        if eigs.min() < self.EIGENVALUE_FLOOR:
            raise InvariantViolation("density matrix has a negative eigenvalue")

    @property
    def rho21(self) -> complex:
        """Probe-transition coherence <2|rho|1>."""
        return complex(self.matrix[1, 0])

    def population(self, level: int) -> float:
        """Population of |level> with 1-based labels."""
        return float(self.matrix[level - 1, level - 1].real)


def build_hamiltonian(sys: LadderSystem, drive: FieldDrive, v: float = 0.0) -> np.ndarray:
    """Rotating-frame Hamiltonian (rad/s) for one velocity class.

    Parameters
    ----------
    sys, drive : system constants and field amplitudes/detunings.
    v : velocity component along the probe propagation axis, m/s.

    Returns
    -------
    4x4 complex Hermitian array.
    """
    d2 = drive.delta_p - sys.k_probe * v
    d3 = d2 + drive.delta_c + sys.k_coupling * v
    d4 = d3 + drive.delta_rf
    h = np.zeros((4, 4), dtype=complex)
    h[1, 1] = -d2
    h[2, 2] = -d3
    h[3, 3] = -d4
    h[0, 1] = h[1, 0] = -drive.omega_p / 2
    h[1, 2] = h[2, 1] = -drive.omega_c / 2
    h[2, 3] = h[3, 2] = -drive.omega_rf / 2
    return h


def _collapse_operators(sys: LadderSystem) -> list[np.ndarray]:
    ops = []
    for rate, target, source in ((sys.gamma2, 0, 1), (sys.gamma3, 1, 2), (sys.gamma4, 0, 3)):
        c = np.zeros((4, 4))
        c[target, source] = math.sqrt(rate)
        ops.append(c)
    return ops


def _dephasing_diagonal(sys: LadderSystem) -> np.ndarray:
    """Vec-space diagonal damping every coherence involving |3> or |4>."""
    damp = np.zeros(16)
    for i in range(4):
        for j in range(4):
            if i != j and (i >= 2 or j >= 2):
                damp[4 * i + j] = -sys.gamma_deph
    return damp


def _dissipator(sys: LadderSystem) -> np.ndarray:
    """Lindblad dissipator as a 16x16 superoperator (row-major vec)."""
    eye = np.eye(4)
    d = np.zeros((16, 16), dtype=complex)
    for c in _collapse_operators(sys):
        cdc = c.T @ c
        d += np.kron(c, c)                      # C rho C^dag  (C is real)
        d -= 0.5 * np.kron(cdc, eye)
        d -= 0.5 * np.kron(eye, cdc.T)
    d += np.diag(_dephasing_diagonal(sys)).astype(complex)
    return d


def build_liouvillian(h: np.ndarray, sys: LadderSystem) -> np.ndarray:
    """16x16 generator L with d vec(rho)/dt = L vec(rho), row-major vec."""
    eye = np.eye(4)
    commutator = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    return commutator + _dissipator(sys)


def steady_state(liouvillian: np.ndarray) -> DensityMatrix:
    """Solve L rho = 0 with the trace constraint replacing one redundant row.

    Raises
    ------
    SingularSystemError
        If the system is degenerate (e.g. all rates zero) or the residual
        of the normalized system exceeds 1e-10.
    """
    lam = np.asarray(liouvillian, dtype=complex)
    scale = np.max(np.abs(lam))
    if scale == 0.0:
        raise SingularSystemError("Liouvillian is identically zero")
    lam_n = lam / scale
    a = lam_n.copy()
    a[0, :] = 0.0
    a[0, _TRACE_IDX] = 1.0
    b = np.zeros(16, dtype=complex)
    b[0] = 1.0
    try:
        vec = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"steady-state system is singular: {exc}") from exc
    residual = np.linalg.norm(lam_n @ vec)
    if residual > 1e-10:
        raise SingularSystemError(
            f"steady-state residual {residual:.3e} exceeds 1e-10; "
            "parameters are degenerate or near-degenerate"
        )
    return DensityMatrix(vec.reshape(4, 4))


def _steady_rho21_many(sys: LadderSystem, drive: FieldDrive, velocities: np.ndarray) -> np.ndarray:
    """rho21 of the steady state for a stack of velocity classes.

    Only the Hamiltonian diagonal depends on v, so the velocity enters the
    Liouvillian as a purely diagonal vec-space term; everything else is
    assembled once and broadcast.
    """
    v = np.asarray(velocities, dtype=float)
    base = build_liouvillian(build_hamiltonian(sys, drive, 0.0), sys)

    # H_ii(v) = H_ii(0) + slope_i * v; the v = 0 part is already in `base`
    slope = np.array([0.0, sys.k_probe, sys.k_probe - sys.k_coupling, sys.k_probe - sys.k_coupling])
    h_diag_v = slope[None, :] * v[:, None]
    delta = -1j * (h_diag_v[:, :, None] - h_diag_v[:, None, :])  # (V,4,4)

    lam = np.broadcast_to(base, (v.size, 16, 16)).copy()
    idx = np.arange(16)
    lam[:, idx, idx] += delta.reshape(v.size, 16)

    scale = max(np.max(np.abs(lam)), np.max(np.abs(base)))
    if scale == 0.0:
        raise SingularSystemError("Liouvillian is identically zero")
    lam /= scale

    a = lam.copy()
    a[:, 0, :] = 0.0
    a[:, 0, _TRACE_IDX] = 1.0
    b = np.zeros(16, dtype=complex)
    b[0] = 1.0
    try:
        vec = np.linalg.solve(a, np.broadcast_to(b, (v.size, 16))[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"steady-state system is singular: {exc}") from exc
    residual = np.linalg.norm(np.einsum("nij,nj->ni", lam, vec), axis=1)
    worst = float(residual.max())
    if worst > 1e-10:
        raise SingularSystemError(
            f"steady-state residual {worst:.3e} exceeds 1e-10 on the velocity stack"
        )
    return vec[:, _RHO21_IDX]


# --- Doppler averaging -------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _panel_quadrature(edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Composite 8-point Gauss-Legendre nodes/weights on consecutive panels."""
    lo = edges[:-1]
    hi = edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


def velocity_quadrature(
    sys: LadderSystem, drive: FieldDrive, refine: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """Maxwell-weighted velocity nodes resolving the spectral features.

    The mesh is a composite Gauss-Legendre rule on three regions: an inner
    window containing every one- and two-photon resonance velocity, panelled
    finely enough to resolve the narrowest (power-broadened) linewidth, and
    two outer regions covering the rest of +-6.5 thermal sigmas where the
    integrand varies only on the Doppler scale.  `refine` multiplies the
    panel counts; doubling it is the convergence check used by
    :func:`doppler_average`.

    Returns (velocities, weights) with the Maxwell PDF folded into the
    weights, so sum(w * f(v)) approximates the thermal average of f.
    """
    vth = sys.v_thermal
    kp = sys.k_probe
    dk = abs(sys.k_probe - sys.k_coupling)
    v_max = 6.5 * vth

    broad = math.sqrt(
        sys.gamma2 ** 2
        + 2 * (drive.omega_p ** 2 + drive.omega_c ** 2 + drive.omega_rf ** 2)
    )
    c2 = abs(drive.delta_p)
    c3 = abs(drive.delta_p + drive.delta_c)
    c4 = abs(drive.delta_p + drive.delta_c + drive.delta_rf)
    span = (c2 + 8 * broad) / kp
    if dk > 0:
        span = max(span, (max(c3, c4) + 8 * broad) / dk)
    w_inner = min(v_max, max(span, 0.3 * vth))

    # Narrowest velocity-space features: the one-photon line (width
    # ~Gamma2 plus probe power broadening) maps through k_p, the two-photon
    # line (dephasing plus coupling/probe power broadening; the RF splits
    # rather than broadens it) through |k_p - k_c|.
    res = w_inner / 8
    g1ph = sys.gamma2 + 2 * drive.omega_p
    if g1ph > 0:
        res = min(res, g1ph / (4 * kp))
    if dk > 0:
        g2ph = (
            sys.gamma_deph
            + 0.5 * (sys.gamma3 + sys.gamma4)
            + (drive.omega_c ** 2 + drive.omega_p ** 2) / (2 * max(sys.gamma2, 1e-30))
        )
        if 0 < g2ph < math.inf:
            res = min(res, g2ph / (4 * dk))
    res = max(res, w_inner / 4000)  # cost cap; the doubling check guards accuracy

    n_inner = max(4, int(math.ceil(2 * w_inner / (8 * res)))) * refine
    inner_edges = np.linspace(-w_inner, w_inner, n_inner + 1)
    nodes, weights = _panel_quadrature(inner_edges)

    if w_inner < v_max:
        n_outer = max(2, int(math.ceil((v_max - w_inner) / (0.4 * vth)))) * refine
        for lo, hi in ((-v_max, -w_inner), (w_inner, v_max)):
            edges = np.linspace(lo, hi, n_outer + 1)
            n_o, w_o = _panel_quadrature(edges)
            nodes = np.concatenate([nodes, n_o])
            weights = np.concatenate([weights, w_o])

    pdf = np.exp(-0.5 * (nodes / vth) ** 2) / (math.sqrt(2 * math.pi) * vth)
    return nodes, weights * pdf


def doppler_average(
    sys: LadderSystem,
    drive: FieldDrive,
    f,
    *,
    refine: int = 1,
    max_refine: int = 16,
    rel_tol: float = 1e-3,
    vectorized: bool = False,
    mesh_drive: FieldDrive | None = None,
) -> complex:
    """Maxwell-Boltzmann average of a per-velocity evaluator.

    The quadrature is evaluated at successively doubled mesh densities
    starting from `refine` until two consecutive levels agree to `rel_tol`
    relative; the finest result is returned.  If agreement is not reached
    by `max_refine` a :class:`NonConvergenceError` is raised.

    Parameters
    ----------
    f : callable
        Maps a velocity (m/s) to a complex value.  With ``vectorized=True``
        it receives the full node array and must return an array.
    mesh_drive : FieldDrive, optional
        Drive whose resonances size the velocity mesh; defaults to `drive`.
        Fixing it keeps finite differences over the drive smooth.
    """
    if sys.temperature < 0:
        raise InvariantViolation("temperature must be >= 0")
    if sys.v_thermal < V_THERMAL_FLOOR:
        value = f(np.array([0.0]))[0] if vectorized else f(0.0)
        return complex(value)
    layout = mesh_drive if mesh_drive is not None else drive

    def evaluate(level: int) -> tuple[complex, float]:
        nodes, weights = velocity_quadrature(sys, layout, refine=level)
        if vectorized:
            values = np.asarray(f(nodes))
        else:
            values = np.array([f(v) for v in nodes])
        return complex(np.sum(weights * values)), float(np.max(np.abs(values)))

    level = refine
    coarse, _ = evaluate(level)
    change = math.inf
    while 2 * level <= 2 * max_refine:
        fine, f_scale = evaluate(2 * level)
        denom = max(abs(fine), 1e-9 * f_scale, 1e-300)
        change = abs(fine - coarse) / denom
        if change <= rel_tol:
            return fine
        level *= 2
        coarse = fine
    raise NonConvergenceError(
        f"Doppler quadrature changed by {change:.3e} relative on the last "
        f"node doubling (tolerance {rel_tol:g}, refine cap {max_refine})"
    )


def susceptibility(
    sys: LadderSystem,
    drive: FieldDrive,
    *,
    refine: int = 1,
    mesh_like: FieldDrive | None = None,
) -> complex:
    """Complex probe susceptibility at one operating point.

    chi = 2 n mu12^2 <rho21> / (eps0 hbar Omega_p) with <rho21> the
    Doppler-averaged probe coherence of the full nonlinear steady state.
    """
    if drive.omega_p <= 0:
        raise InvariantViolation("susceptibility requires omega_p > 0")
    rho21 = doppler_average(
        sys,
        drive,
        lambda v: _steady_rho21_many(sys, drive, v),
        vectorized=True,
        refine=refine,
        mesh_drive=mesh_like,
    )
    chi = 2 * sys.n_atoms * sys.mu12 ** 2 * rho21 / (EPS0 * HBAR * drive.omega_p)
    if chi.imag < -1e-12 * max(1.0, abs(chi)):
        raise InvariantViolation(
            f"negative probe absorption Im chi = {chi.imag:.3e}; passive medium violated"
        )
    return chi
