"""Steady-state amplitude hierarchy and the feedback-optimal drive.

With C000 = 1 and the ordering |C000| >> first-order >> second-order
amplitudes, the stationary equations close level by level: a 2x2 system for
(C100, C010), C001 = 0, and a 6x6 system for the two-quanta amplitudes.

The closed-form optimum picks the phase so that the compensating drive
E = -i (Omega mu) Delta_m e^{i phi} / g_mc is real and positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Detunings, SystemParams, compute_detunings, wrap_phase

SQRT2 = math.sqrt(2.0)

# Unknown ordering of the hierarchy system (C000 is pinned to 1).
HIERARCHY_LABELS = ("100", "010", "001", "110", "101", "011", "200", "020", "002")

IMAG_TOL = 1e-9
HIERARCHY_RATIO = 0.1


class SingularSteadyState(ValueError):
    def __init__(self, message: str, determinant: complex):
        super().__init__(message)
        self.determinant = determinant


class DegenerateDetuning(ValueError):
    """Delta_r = Delta_i = 0: the optimal phase is unconstrained."""


class WrongBranch(ValueError):
    """The phase gives a negative drive; shift it by pi."""


class InvalidPhase(ValueError):
    """The phase leaves an imaginary part on E."""


class ScanFailure(RuntimeError):
    def __init__(self, message: str, bounds: tuple[float, float]):
        super().__init__(message)
        self.bounds = bounds


@dataclass(frozen=True)
class SteadyAmplitudes:
    c100: complex
    c010: complex
    c001: complex
    c110: complex
    c101: complex
    c011: complex
    c200: complex
    c020: complex
    c002: complex
    residual: float
    hierarchy_warning: bool = False
    phonon_indeterminate: bool = False

    def vector(self) -> np.ndarray:
        """Amplitudes in hierarchy order (C100 ... C002)."""
        return np.array([getattr(self, "c" + lab) for lab in HIERARCHY_LABELS])

    def state(self) -> np.ndarray:
        """Full 10-component state with C000 = 1."""
        return np.concatenate([[1.0 + 0j], self.vector()])


@dataclass(frozen=True)
class OptimalDrive:
    phi_star: float
    e_star: float


def _phase_residual(det: Detunings, phi: float) -> float:
    return det.delta_r * math.cos(phi) + det.delta_i * math.sin(phi)


def optimal_phase(det: Detunings) -> float:
    """Phase with tan(phi) = -Delta_r / Delta_i on the branch giving E > 0."""
    if det.delta_r == 0 and det.delta_i == 0:
        raise DegenerateDetuning("Delta_r = Delta_i = 0: phase is unconstrained")
    phi = math.atan2(-det.delta_r, det.delta_i)
    if det.delta_r * math.sin(phi) - det.delta_i * math.cos(phi) < 0:
        phi = wrap_phase(phi + math.pi)
    return phi


def optimal_E(params: SystemParams, det: Detunings, phi: float) -> float:
    """Real drive strength (Omega mu / g_mc)(Delta_r sin phi - Delta_i cos phi).

    The imaginary part must vanish for the given phase; a negative value
    means the other branch (phi + pi) should have been used.
    """
    g = float(params.g_mc)
    if not g > 0:
        raise ValueError("g_mc must be positive")
    scale = float(params.feedback_amp) / g
    re = scale * (det.delta_r * math.sin(phi) - det.delta_i * math.cos(phi))
    im = scale * abs(_phase_residual(det, phi))
    if im > IMAG_TOL * abs(re) and im > 0:
        raise InvalidPhase(f"phase {phi!r} leaves Im E = {im:.3e} (Re E = {re:.3e})")
    if re < 0:
        raise WrongBranch(f"phase {phi!r} gives E = {re:.3e} < 0; use phi + pi")
    return re


def complex_E(params: SystemParams, det: Detunings, phi: float) -> complex:
    """Unconstrained drive -i (Omega mu) Delta_m e^{i phi} / g_mc."""
    return -1j * float(params.feedback_amp) * det.delta_m * complex(math.cos(phi), math.sin(phi)) / float(params.g_mc)


def optimal_drive(params: SystemParams, det: Detunings | None = None) -> OptimalDrive:
    det = det or compute_detunings(params)
    phi = optimal_phase(det)
    return OptimalDrive(phi, optimal_E(params, det, phi))


def hierarchy_system(params: SystemParams, det: Detunings) -> tuple[np.ndarray, np.ndarray]:
    """The truncated stationary equations as A x = b over HIERARCHY_LABELS.

    Higher-order feedback into the first-order rows is dropped, exactly as
    the hierarchy assumption prescribes; C001 obeys Delta_d C001 = 0.
    """
    dc, dm, dd = det.delta_c, det.delta_m, det.delta_mech
    g = float(params.g_mc)
    gmd = float(params.g_md)
    E = float(params.drive_E)
    a = float(params.feedback_amp) * complex(math.cos(params.phi), math.sin(params.phi))
    ix = {lab: k for k, lab in enumerate(HIERARCHY_LABELS)}
    A = np.zeros((9, 9), dtype=complex)
    b = np.zeros(9, dtype=complex)

    def row(r, **coef):
        for lab, v in coef.items():
            A[ix[r], ix[lab[1:]]] += v

    row("100", c100=dc, c010=g)
    b[ix["100"]] = -a
    row("010", c100=g, c010=dm)
    b[ix["010"]] = -1j * E
    row("001", c001=dd)
    row("110", c100=1j * E, c010=a, c110=dc + dm, c200=g * SQRT2, c020=g * SQRT2)
    row("101", c001=a, c101=dc + dd, c011=g)
    row("011", c010=gmd, c001=1j * E, c101=g, c011=dm + dd)
    row("200", c100=a * SQRT2, c110=g * SQRT2, c200=2 * dc)
    row("020", c010=1j * E * SQRT2, c110=g * SQRT2, c020=2 * dm)
    row("002", c002=2 * dd)
    return A, b


def relative_residual(A: np.ndarray, b: np.ndarray, x: np.ndarray) -> float:
    """max |A x - b| scaled by the largest term magnitude in any row."""
    r = np.abs(A @ x - b)
    scale = np.max(np.abs(A) @ np.abs(x) + np.abs(b))
    if scale == 0:
        return 0.0
    return float(np.max(r) / scale)


def steady_amplitudes(params: SystemParams, det: Detunings | None = None) -> SteadyAmplitudes:
    det = det or compute_detunings(params)
    dc, dm, dd = det.delta_c, det.delta_m, det.delta_mech
    g = float(params.g_mc)
    gmd = float(params.g_md)
    E = float(params.drive_E)
    a = float(params.feedback_amp) * complex(math.cos(params.phi), math.sin(params.phi))

    d1 = dc * dm - g * g
    if abs(d1) <= 1e-14 * max(abs(dc * dm), g * g, 1e-300):
        raise SingularSteadyState(f"first-order block is singular (det = {d1!r})", d1)
    c100 = (-a * dm + 1j * E * g) / d1
    c010 = (-1j * E * dc + a * g) / d1

    indeterminate = dd == 0
    c001 = 0j

    # Second order: (C110, C101, C011, C200, C020, C002)
    B = np.array(
        [
            [dc + dm, 0, 0, g * SQRT2, g * SQRT2, 0],
            [0, dc + dd, g, 0, 0, 0],
            [0, g, dm + dd, 0, 0, 0],
            [g * SQRT2, 0, 0, 2 * dc, 0, 0],
            [g * SQRT2, 0, 0, 0, 2 * dm, 0],
            [0, 0, 0, 0, 0, 2 * dd],
        ],
        dtype=complex,
    )
    src = -np.array(
        [
            1j * E * c100 + a * c010,
            a * c001,
            gmd * c010 + 1j * E * c001,
            a * SQRT2 * c100,
            1j * E * SQRT2 * c010,
            0,
        ],
        dtype=complex,
    )
    if indeterminate:
        # C002 decouples and is free; pin it to zero and solve the rest.
        sub = B[:5, :5]
        d2 = np.linalg.det(sub)
        if d2 == 0:
            raise SingularSteadyState("second-order block is singular", complex(d2))
        x = np.append(np.linalg.solve(sub, src[:5]), 0j)
    else:
        d2 = np.linalg.det(B)
        if d2 == 0 or np.linalg.cond(B) > 1e14:
            raise SingularSteadyState(f"second-order block is singular (det = {d2!r})", complex(d2))
        x = np.linalg.solve(B, src)

    c110, c101, c011, c200, c020, c002 = (complex(v) for v in x)
    vec = np.array([c100, c010, c001, c110, c101, c011, c200, c020, c002])
    A9, b9 = hierarchy_system(params, det)
    res = relative_residual(A9, b9, vec)

    first = max(abs(c100), abs(c010))
    second = max(abs(c110), abs(c200), abs(c020))
    warn = second > HIERARCHY_RATIO * first if second > 0 else False

    return SteadyAmplitudes(
        c100, c010, c001, c110, c101, c011, c200, c020, c002,
        residual=res, hierarchy_warning=bool(warn), phonon_indeterminate=bool(indeterminate),
    )


def _c200_abs(params: SystemParams, det: Detunings, phi: float, E: float) -> float:
    return abs(steady_amplitudes(params.replace(drive_E=E, phi=phi), det).c200)


def c200_root_check(
    params: SystemParams,
    det: Detunings | None = None,
    phi: float | None = None,
    bracket: tuple[float, float] | None = None,
    n_scan: int = 201,
    rel_tol: float = 1e-10,
) -> tuple[float, float]:
    """Real E minimising |C200| of the steady hierarchy at fixed phase.

    Scans ``bracket`` (default [0, 10 E*]) then refines with golden-section
    search. Returns ``(e_root, gap)`` where gap is |e_root - E*| / E* with E*
    the closed-form optimum at ``phi``.
    """
    det = det or compute_detunings(params)
    if phi is None:
        phi = optimal_phase(det)
    e_formula = optimal_E(params, det, phi)
    if bracket is None:
        if e_formula == 0:
            return 0.0, 0.0
        bracket = (0.0, 10.0 * e_formula)
    lo, hi = map(float, bracket)
    grid = np.linspace(lo, hi, n_scan)
    vals = np.array([_c200_abs(params, det, phi, E) for E in grid])
    k = int(np.argmin(vals))
    if k == 0 or k == n_scan - 1:
        raise ScanFailure(
            f"|C200| has no interior minimum in E in [{lo:.6g}, {hi:.6g}] rad/s", (lo, hi)
        )
    a, b = grid[k - 1], grid[k + 1]
    invphi = (math.sqrt(5) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = _c200_abs(params, det, phi, c)
    fd = _c200_abs(params, det, phi, d)
    while (b - a) > rel_tol * max(abs(a), abs(b), 1e-300):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = _c200_abs(params, det, phi, c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = _c200_abs(params, det, phi, d)
    e_root = 0.5 * (a + b)
    gap = abs(e_root - e_formula) / e_formula if e_formula != 0 else abs(e_root)
    return e_root, gap
