"""Parameter sweeps over the pump frequency (and optionally the magnon
frequency), one quasi-steady g2 evaluation per grid point."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .generator import build_generator
from .integrator import RadauConfig, expm, radau_evolve, radau_uniform, Trajectory
from .model import SystemParams, TWO_PI, compute_detunings, vacuum_state
from .observables import g2_series, g2_zero, log10_floor, photon_number_series, window_mean
from .steady import DegenerateDetuning, SingularSteadyState, optimal_drive, steady_amplitudes

MODES = ("optimal-feedback", "no-feedback", "constant-drive")
# uniform: constant-step Radau IIA with the step picked from the spectrum
# adaptive: embedded-error Radau IIA (slow when the magnon is far detuned)
# exact: matrix exponential per sample interval
METHODS = ("uniform", "adaptive", "exact")

DEFAULT_SAMPLES = 200
STEADY_RTOL = 1e-4
DEFAULT_CONSTANT_E = TWO_PI * 1e5

CSV_COLUMNS = (
    "omega0_hz", "omega_m_over_omega_c", "mode", "phi_used_rad", "E_used_hz",
    "g2_final", "g2_avg", "log10_g2_avg", "n_photon", "steady_reached",
    "hierarchy_warning", "error",
)


def default_horizon(params: SystemParams) -> float:
    return 20.0 / float(params.kappa_c)


def omega0_grid(base: SystemParams, n: int = 201, span: str = "model") -> np.ndarray:
    """Pump frequencies around the cavity, in units of the mechanical frequency.

    ``span="model"`` covers [wc - 2 w_mech, wc + 2 w_mech]; ``"results"``
    covers [wc - 2 w_mech, wc + 3 w_mech].
    """
    hi = {"model": 2.0, "results": 3.0}[span]
    offsets = np.linspace(-2.0, hi, n)
    return float(base.omega_c) + offsets * float(base.omega_mech)


def omega_m_ratios(n: int = 101, lo: float = 0.5, hi: float = 3.0) -> np.ndarray:
    return np.linspace(lo, hi, n)


@dataclass(frozen=True)
class SweepSpec:
    omega0_grid: tuple
    mode: str = "optimal-feedback"
    omega_m_grid: tuple | None = None
    constant_phi: float = math.pi
    constant_E: float = DEFAULT_CONSTANT_E
    base: SystemParams = field(default_factory=SystemParams)
    integrator: RadauConfig = field(default_factory=RadauConfig)
    horizon: float | None = None
    samples: int = DEFAULT_SAMPLES
    workers: int = 1
    method: str = "uniform"

    def __post_init__(self):
        object.__setattr__(self, "omega0_grid", tuple(float(w) for w in self.omega0_grid))
        if self.omega_m_grid is not None:
            object.__setattr__(self, "omega_m_grid", tuple(float(r) for r in self.omega_m_grid))
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.samples < 2:
            raise ValueError("samples must be >= 2")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        for name in ("omega0_grid", "omega_m_grid"):
            g = getattr(self, name)
            if g is None:
                continue
            if not g:
                raise ValueError(f"{name} must be non-empty")
            if any(b <= a for a, b in zip(g, g[1:])):
                raise ValueError(f"{name} must be strictly increasing")
        if self.mode != "optimal-feedback" and not (self.constant_E >= 0 and math.isfinite(self.constant_E)):
            raise ValueError("constant_E must be finite and >= 0")

    @property
    def horizon_s(self) -> float:
        return self.horizon if self.horizon is not None else default_horizon(self.base)


@dataclass(frozen=True)
class SweepRecord:
    omega0: float
    omega_m: float
    mode: str
    phi_used: float
    E_used: float
    g2_final: float
    g2_avg: float
    log10_g2_avg: float
    n_photon: float
    steady_reached: bool
    hierarchy_warning: bool
    error: str = ""
    omega_c: float = math.nan

    def csv_row(self) -> list[str]:
        return [
            _fmt(self.omega0 / TWO_PI),
            _fmt(self.omega_m / self.omega_c),
            self.mode,
            _fmt(self.phi_used),
            _fmt(self.E_used / TWO_PI),
            _fmt(self.g2_final),
            _fmt(self.g2_avg),
            _fmt(self.log10_g2_avg),
            _fmt(self.n_photon),
            "true" if self.steady_reached else "false",
            "true" if self.hierarchy_warning else "false",
            self.error,
        ]


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass
class SteadyRun:
    state: np.ndarray
    steady_reached: bool
    g2_final: float
    g2_avg: float
    n_photon: float
    horizon: float
    times: np.ndarray
    g2_samples: np.ndarray

    def __iter__(self):
        # unpacks as (state, steady_reached)
        return iter((self.state, self.steady_reached))


def _settled(values: np.ndarray) -> bool:
    n = len(values)
    w = max(1, n // 10)
    last = window_mean(values[n - w:])
    prev = window_mean(values[n - 2 * w:n - w])
    if math.isnan(last) and math.isnan(prev):
        return True
    if math.isnan(last) or math.isnan(prev):
        return False
    denom = max(abs(last), abs(prev))
    return denom == 0 or abs(last - prev) / denom < STEADY_RTOL


def _windows_steady(states: np.ndarray) -> tuple[bool, float, np.ndarray]:
    """Compare means over the last two 10% windows of the samples.

    Both g2 and the photon number must settle: at very short times g2
    approaches a constant while the populations are still growing.
    Returns (steady, g2 mean over the last window, g2 series).
    """
    g2 = g2_series(states)
    steady = _settled(g2) and _settled(photon_number_series(states))
    w = max(1, len(g2) // 10)
    return steady, window_mean(g2[len(g2) - w:]), g2


def _segment(gen, y0, t_start, t_end, samples, cfg, method, duration) -> Trajectory:
    dt = (t_end - t_start) / samples
    if method == "uniform":
        return radau_uniform(gen, y0, t_end, samples, cfg.rel_tol, t_start=t_start, duration=duration)
    if method == "adaptive":
        return radau_evolve(gen, y0, t_end - t_start, cfg, sample_every=dt, t_start=t_start)
    step = expm(gen.rhs_matrix * dt)
    states = [np.asarray(y0, dtype=complex)]
    for _ in range(samples):
        states.append(step @ states[-1])
    times = t_start + dt * np.arange(samples + 1)
    return Trajectory(times, np.array(states), {})


def evolve_to_steady(
    params: SystemParams,
    cfg: RadauConfig | None = None,
    horizon: float | None = None,
    samples: int = DEFAULT_SAMPLES,
    method: str = "uniform",
) -> SteadyRun:
    """Integrate from the vacuum until g2 and the photon number settle.

    The horizon is doubled once (continuing the same run) if the last two
    10% windows disagree by more than ``STEADY_RTOL``.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    cfg = cfg or RadauConfig()
    horizon = horizon if horizon is not None else default_horizon(params)
    gen = build_generator(params)
    traj = _segment(gen, vacuum_state(), 0.0, horizon, samples, cfg, method, horizon)
    times, states = traj.times, traj.states
    steady, avg, g2 = _windows_steady(states[1:])
    used = horizon
    if not steady:
        more = _segment(gen, states[-1], horizon, 2 * horizon, samples, cfg, method, horizon)
        times = np.concatenate([times, more.times[1:]])
        states = np.vstack([states, more.states[1:]])
        steady, avg, g2 = _windows_steady(states[1:])
        used = 2 * horizon
    final = states[-1]
    stats = g2_zero(final)
    return SteadyRun(final, steady, stats.g2, avg, stats.n_photon, used, times, g2)


def point_params(spec: SweepSpec, omega0: float, ratio: float | None) -> tuple[SystemParams, float]:
    """Parameters for one grid point; returns (params, phi_used)."""
    p = spec.base.replace(omega_drive=omega0)
    if ratio is not None:
        p = p.replace(omega_m=ratio * float(spec.base.omega_c))
    if spec.mode == "optimal-feedback":
        od = optimal_drive(p)
        return p.replace(phi=od.phi_star, drive_E=od.e_star), od.phi_star
    if spec.mode == "constant-drive":
        p = p.replace(phi=spec.constant_phi, drive_E=spec.constant_E)
        return p, p.phi
    return p.replace(feedback_amp=0.0, drive_E=spec.constant_E), math.nan


def run_point(spec: SweepSpec, omega0: float, ratio: float | None = None) -> SweepRecord:
    """One grid point. Failures are captured in the record, never raised."""
    omega_c = float(spec.base.omega_c)
    omega_m = ratio * omega_c if ratio is not None else float(spec.base.omega_m)
    nan = math.nan
    phi_used = E_used = nan
    try:
        p, phi_used = point_params(spec, omega0, ratio)
        E_used = float(p.drive_E)
        try:
            warn = steady_amplitudes(p).hierarchy_warning
        except SingularSteadyState:
            warn = False
        run = evolve_to_steady(p, spec.integrator, spec.horizon_s, spec.samples, spec.method)
    except (ArithmeticError, ValueError, RuntimeError, DegenerateDetuning) as exc:
        return SweepRecord(omega0, omega_m, spec.mode, phi_used, E_used, nan, nan, nan, nan,
                           False, False, f"{type(exc).__name__}: {exc}", omega_c)
    return SweepRecord(
        omega0, omega_m, spec.mode, phi_used, E_used,
        run.g2_final, run.g2_avg, log10_floor(run.g2_avg), run.n_photon,
        run.steady_reached, warn, "", omega_c,
    )


def _task(args):
    spec, omega0, ratio = args
    return run_point(spec, omega0, ratio)


def _map_points(spec: SweepSpec, tasks: list) -> list[SweepRecord]:
    if spec.workers <= 1 or len(tasks) <= 1:
        return [_task(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * spec.workers))
    with ProcessPoolExecutor(max_workers=spec.workers) as pool:
        return list(pool.map(_task, tasks, chunksize=chunk))


def sweep_1d(spec: SweepSpec) -> list[SweepRecord]:
    if spec.omega_m_grid is not None:
        raise ValueError("sweep_1d takes no omega_m_grid; use sweep_2d")
    return _map_points(spec, [(spec, w, None) for w in spec.omega0_grid])


def sweep_2d(spec: SweepSpec) -> list[list[SweepRecord]]:
    """Rows follow omega_m_grid (ratios to omega_c), columns omega0_grid."""
    if spec.omega_m_grid is None:
        raise ValueError("sweep_2d needs omega_m_grid")
    tasks = [(spec, w, r) for r in spec.omega_m_grid for w in spec.omega0_grid]
    flat = _map_points(spec, tasks)
    n = len(spec.omega0_grid)
    return [flat[i * n:(i + 1) * n] for i in range(len(spec.omega_m_grid))]


@dataclass(frozen=True)
class LocusPoint:
    omega0: float
    phi_star: float
    e_star: float
    degenerate: bool = False


def phase_drive_locus(base: SystemParams, omega0_grid) -> list[LocusPoint]:
    out = []
    for w in omega0_grid:
        p = base.replace(omega_drive=float(w))
        try:
            od = optimal_drive(p, compute_detunings(p))
            out.append(LocusPoint(float(w), od.phi_star, od.e_star))
        except DegenerateDetuning:
            out.append(LocusPoint(float(w), math.nan, math.nan, True))
    return out


def compare_optimal_vs_constant(
    base: SystemParams,
    omega0_grid,
    constant_phi: float = math.pi,
    constant_E: float = DEFAULT_CONSTANT_E,
    **spec_kwargs,
) -> list[tuple[SweepRecord, SweepRecord]]:
    """Optimal-feedback and constant-drive sweeps on the same grid, paired."""
    opt = sweep_1d(SweepSpec(omega0_grid, "optimal-feedback", base=base, **spec_kwargs))
    const = sweep_1d(SweepSpec(omega0_grid, "constant-drive", base=base, constant_phi=constant_phi,
                               constant_E=constant_E, **spec_kwargs))
    return list(zip(opt, const))


def records_csv(records) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in records:
        lines.append(",".join(_csv_escape(v) for v in r.csv_row()))
    return "\n".join(lines) + "\n"


def _csv_escape(v: str) -> str:
    if any(ch in v for ch in ',"\n'):
        return '"' + v.replace('"', '""') + '"'
    return v


def matrix_csv(grid: list[list[SweepRecord]]) -> str:
    """log10_g2_avg surface: first row holds omega0 in Hz, first column the
    omega_m / omega_c ratio."""
    head = ["omega_m_over_omega_c\\omega0_hz"] + [_fmt(r.omega0 / TWO_PI) for r in grid[0]]
    lines = [",".join(head)]
    for row in grid:
        ratio = row[0].omega_m / row[0].omega_c
        lines.append(",".join([_fmt(ratio)] + [_fmt(r.log10_g2_avg) for r in row]))
    return "\n".join(lines) + "\n"


def locus_csv(points: list[LocusPoint]) -> str:
    lines = ["phi_rad,E_hz,omega0_hz,degenerate"]
    for p in points:
        lines.append(",".join([_fmt(p.phi_star), _fmt(p.e_star / TWO_PI), _fmt(p.omega0 / TWO_PI),
                               "true" if p.degenerate else "false"]))
    return "\n".join(lines) + "\n"


def paired_csv(pairs) -> str:
    lines = ["omega0_hz,phi_opt_rad,E_opt_hz,log10_g2_avg_optimal,phi_const_rad,E_const_hz,log10_g2_avg_constant"]
    for a, b in pairs:
        lines.append(",".join([
            _fmt(a.omega0 / TWO_PI), _fmt(a.phi_used), _fmt(a.E_used / TWO_PI), _fmt(a.log10_g2_avg),
            _fmt(b.phi_used), _fmt(b.E_used / TWO_PI), _fmt(b.log10_g2_avg),
        ]))
    return "\n".join(lines) + "\n"
