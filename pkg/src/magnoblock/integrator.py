"""Time evolution of the amplitude vector.

``radau_evolve`` is an adaptive 3-stage Radau IIA (order 5) integrator
specialised to the linear system y' = J y with J = -i M. Because the
right-hand side is linear, the stage equations

    Z = h (A kron J) (1 kron y + Z)

are solved by one LU factorisation of I - h A kron J per step size, and
the resulting step map y -> y + Z_3 and error map are plain 10x10
matrices that are reused for as long as h stays the same.

``radau_uniform`` applies the same step map with a constant step picked in
advance from the spectrum; sweeps use it because the adaptive controller
needs millions of steps when the magnon mode is far detuned.

``expm_propagate`` is the exact propagator exp(-i M t) used as the oracle.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import numba

from .generator import Generator
from .model import DIM, as_state

log = logging.getLogger(__name__)

_S6 = math.sqrt(6.0)

RADAU_C = np.array([(4 - _S6) / 10, (4 + _S6) / 10, 1.0])
RADAU_A = np.array(
    [
        [(88 - 7 * _S6) / 360, (296 - 169 * _S6) / 1800, (-2 + 3 * _S6) / 225],
        [(296 + 169 * _S6) / 1800, (88 + 7 * _S6) / 360, (-2 - 3 * _S6) / 225],
        [(16 - _S6) / 36, (16 + _S6) / 36, 1 / 9],
    ]
)
RADAU_B = RADAU_A[-1].copy()

# Real eigenvalue of A^-1 and the embedded error weights on the stage
# increments (Hairer & Wanner, IV.8).
MU_REAL = 3 + 3 ** (2 / 3) - 3 ** (1 / 3)
ERR_WEIGHTS = np.array([-13 - 7 * _S6, -13 + 7 * _S6, -1.0]) / 3

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


class IntegrationError(RuntimeError):
    """Base class for failures inside the time integrator."""

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


class StepSizeUnderflow(IntegrationError):
    pass


class MaxStepsExceeded(IntegrationError):
    pass


class NonFiniteState(IntegrationError):
    pass


class NotStiffError(ValueError):
    pass


@dataclass(frozen=True)
class RadauConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    h_init: float = 1e-11
    h_min: float = 1e-22
    h_max: float = 1.0
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not (0 < self.h_min <= self.h_init <= self.h_max):
            raise ValueError("need 0 < h_min <= h_init <= h_max")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    step_stats: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


@numba.njit(cache=True)
def _step_maps(J, h):
    """Step, error and error-refinement maps of one Radau IIA step of size h."""
    n = J.shape[0]
    A = RADAU_A.astype(np.complex128)
    big = np.eye(3 * n, dtype=np.complex128) - h * np.kron(A, J)
    # Z = (I - h A kron J)^-1 h (c kron J) y; solving against the matrix
    # right-hand side yields the stage map for every y at once.
    rhs = h * np.kron(RADAU_C.astype(np.complex128).reshape(3, 1), J)
    Z = np.linalg.solve(big, rhs)
    step = np.eye(n, dtype=np.complex128) + Z[2 * n:]
    ze = ERR_WEIGHTS[0] * Z[:n] + ERR_WEIGHTS[1] * Z[n:2 * n] + ERR_WEIGHTS[2] * Z[2 * n:]
    err_mat = MU_REAL * np.eye(n, dtype=np.complex128) - h * J
    hJ = h * J
    err = np.linalg.solve(err_mat, hJ + ze)
    refine = np.linalg.solve(err_mat, hJ)
    return step, err, refine


@numba.njit(cache=True)
def _round_key(h):
    # Step sizes agreeing to ~12 significant digits share one factorisation;
    # the induced time mismatch is far below any tolerance in use.
    e = np.floor(np.log10(h))
    scale = 10.0 ** (11.0 - e)
    return np.round(h * scale) / scale


@numba.njit(cache=True)
def _apply(P, Q, y, y_new, err):
    n = y.shape[0]
    for a in range(n):
        s1 = 0j
        s2 = 0j
        for b in range(n):
            s1 += P[a, b] * y[b]
            s2 += Q[a, b] * y[b]
        y_new[a] = s1
        err[a] = s2


@numba.njit(cache=True)
def _rms_scaled(err, y, y_new, rtol, atol):
    s = 0.0
    for k in range(err.shape[0]):
        a2 = y[k].real ** 2 + y[k].imag ** 2
        b2 = y_new[k].real ** 2 + y_new[k].imag ** 2
        sc = atol + rtol * np.sqrt(max(a2, b2))
        r = abs(err[k]) / sc  # ratio first, so tiny tolerances cannot underflow sc * sc
        s += r * r
    return np.sqrt(s / err.shape[0])


# status codes returned by the compiled kernel
_OK, _UNDERFLOW, _MAXSTEPS, _NONFINITE = 0, 1, 2, 3


@numba.njit(cache=True)
def _adaptive_kernel(J, y0, targets, h_init, rtol, atol, h_min, h_max, max_steps, cache_size):
    n = J.shape[0]
    out = np.empty((targets.shape[0], n), dtype=np.complex128)
    keys = np.full(cache_size, -1.0)
    Ps = np.empty((cache_size, n, n), dtype=np.complex128)
    Qs = np.empty((cache_size, n, n), dtype=np.complex128)
    Rs = np.empty((cache_size, n, n), dtype=np.complex128)
    slot_next = 0
    n_fact = 0
    last_h = -1.0
    last_slot = -1

    y = y0.copy()
    y_new = np.empty_like(y)
    err = np.empty_like(y)
    tmp = np.empty_like(y)
    t = 0.0
    h_nom = min(h_init, h_max)
    accepted = 0
    rejected = 0
    first = True
    prev_rejected = False
    for i in range(targets.shape[0]):
        target = targets[i]
        while t < target:
            rem = target - t
            n_sub = max(1, int(np.ceil(rem / h_nom * (1 - 1e-12))))
            h = rem / n_sub
            if h < h_min:
                return out, t, accepted, rejected, n_fact, _UNDERFLOW
            if accepted + rejected >= max_steps:
                return out, t, accepted, rejected, n_fact, _MAXSTEPS
            if h == last_h:
                slot = last_slot
            else:
                key = _round_key(h)
                slot = -1
                for k in range(cache_size):
                    if keys[k] == key:
                        slot = k
                        break
            if slot < 0:
                slot = slot_next
                slot_next = (slot_next + 1) % cache_size
                P, Q, R = _step_maps(J, key)
                Ps[slot] = P
                Qs[slot] = Q
                Rs[slot] = R
                keys[slot] = key
                n_fact += 1
            last_h = h
            last_slot = slot
            _apply(Ps[slot], Qs[slot], y, y_new, err)
            err_norm = _rms_scaled(err, y, y_new, rtol, atol)
            if err_norm > 1 and (first or prev_rejected):
                _apply(Rs[slot], Rs[slot], err, tmp, tmp)
                err += tmp
                err_norm = _rms_scaled(err, y, y_new, rtol, atol)
            if np.isnan(err_norm):
                return out, t, accepted, rejected, n_fact, _NONFINITE
            if err_norm <= 1:
                for k in range(n):
                    if not np.isfinite(y_new[k].real) or not np.isfinite(y_new[k].imag):
                        return out, t, accepted, rejected, n_fact, _NONFINITE
                t = target if n_sub == 1 else t + h
                y, y_new = y_new, y
                accepted += 1
                first = False
                prev_rejected = False
                if err_norm == 0:
                    factor = MAX_FACTOR
                else:
                    factor = min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * err_norm ** -0.25))
                if not (1.0 <= factor <= 1.2):
                    h_nom = h * factor
                h_nom = min(h_nom, h_max)
            else:
                rejected += 1
                prev_rejected = True
                h_nom = h * max(MIN_FACTOR, SAFETY * err_norm ** -0.25)
        out[i, :] = y
    return out, t, accepted, rejected, n_fact, _OK


def _sample_targets(t_end: float, sample_every: float | None) -> np.ndarray:
    if sample_every is None:
        return np.array([t_end])
    if not sample_every > 0:
        raise ValueError("sample_every must be positive")
    n = int(math.floor(t_end / sample_every * (1 + 1e-12)))
    targets = [k * sample_every for k in range(1, n + 1)]
    if targets and abs(t_end - targets[-1]) <= 1e-9 * sample_every:
        targets[-1] = t_end
    else:
        targets.append(t_end)
    return np.array(targets)


def radau_evolve(
    gen: Generator,
    initial,
    t_end: float,
    cfg: RadauConfig | None = None,
    sample_every: float | None = None,
    t_start: float = 0.0,
) -> Trajectory:
    """Adaptive Radau IIA integration over ``t_end`` seconds.

    The trajectory holds the initial state, every multiple of
    ``sample_every`` and the final time, all offset by ``t_start``. Steps
    are shortened to land exactly on sample times.
    """
    cfg = cfg or RadauConfig()
    y0 = as_state(initial)
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    targets = _sample_targets(float(t_end), sample_every)
    out, t_reached, acc, rej, n_fact, status = _adaptive_kernel(
        np.ascontiguousarray(gen.rhs_matrix), y0.copy(), targets,
        cfg.h_init, cfg.rel_tol, cfg.abs_tol, cfg.h_min, cfg.h_max, cfg.max_steps, 16,
    )
    when = t_start + t_reached
    if status == _UNDERFLOW:
        raise StepSizeUnderflow(f"step size fell below h_min={cfg.h_min:g} s at t = {when:.6e} s", when)
    if status == _MAXSTEPS:
        raise MaxStepsExceeded(f"exceeded max_steps={cfg.max_steps} at t = {when:.6e} s", when)
    if status == _NONFINITE:
        raise NonFiniteState(f"non-finite amplitude at t = {when:.6e} s", when)
    times = np.concatenate([[t_start], t_start + targets])
    states = np.vstack([y0[None, :], out])
    stats = {"accepted": int(acc), "rejected": int(rej), "factorizations": int(n_fact)}
    return Trajectory(times, states, stats)


def radau_fixed_step(gen: Generator, initial, t_end: float, h: float) -> np.ndarray:
    """Constant-step Radau IIA; ``h`` must divide ``t_end``."""
    if not h > 0:
        raise ValueError("h must be positive")
    n = int(round(t_end / h))
    if n < 1 or abs(n * h - t_end) > 1e-9 * h * max(1, n):
        raise ValueError(f"h={h!r} does not divide t_end={t_end!r}")
    P, _, _ = _step_maps(np.ascontiguousarray(gen.rhs_matrix), float(h))
    y = as_state(initial).copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n):
            y = P @ y
    if not np.all(np.isfinite(y)):
        raise NonFiniteState("non-finite amplitude", time=t_end)
    return y


def radau_stability(z):
    """Stability function of 3-stage Radau IIA, the (2,3) Pade approximant of e^z."""
    z = np.asarray(z, dtype=complex)
    return (1 + 2 * z / 5 + z * z / 20) / (1 - 3 * z / 5 + 3 * z * z / 20 - z**3 / 60)


def _local_error(z: np.ndarray) -> np.ndarray:
    # Below |z| = 0.1 the direct difference is dominated by rounding, so use
    # the leading term |z|^6 / 7200 of e^z - R(z).
    a = np.abs(z)
    out = np.abs(radau_stability(z) - np.exp(z))
    small = a < 0.1
    out[small] = a[small] ** 6 / 7200
    return out


def uniform_step(eigenvalues, interval: float, duration: float, rel_tol: float) -> tuple[float, int]:
    """Largest h = interval / n whose per-step error over the spectrum stays
    below rel_tol * h / duration, so n steps per interval cost at most
    rel_tol over ``duration`` in every eigendirection."""
    lam = np.asarray(eigenvalues, dtype=complex)

    def ok(h):
        return float(np.max(_local_error(h * lam))) <= rel_tol * h / duration

    if ok(interval):
        return interval, 1
    lo, hi = math.log(interval) - 80.0, math.log(interval)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if ok(math.exp(mid)):
            lo = mid
        else:
            hi = mid
    n = math.ceil(interval / math.exp(lo))
    return interval / n, n


def radau_uniform(
    gen: Generator,
    initial,
    t_end: float,
    samples: int,
    rel_tol: float = 1e-8,
    t_start: float = 0.0,
    duration: float | None = None,
) -> Trajectory:
    """Constant-step Radau IIA on an evenly sampled grid.

    The step is chosen a priori from the eigenvalues of -i M (see
    ``uniform_step``) instead of by the embedded estimate. Every sample
    interval is then n identical steps, applied as the n-th power of the
    step map, so the cost does not grow with the number of steps. The result
    equals what n * samples explicit Radau steps would give, up to rounding.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not t_end > t_start:
        raise ValueError("t_end must exceed t_start")
    y0 = as_state(initial)
    J = np.ascontiguousarray(gen.rhs_matrix)
    dt = (t_end - t_start) / samples
    h, n = uniform_step(np.linalg.eigvals(J), dt, duration or (t_end - t_start), rel_tol)
    P, _, _ = _step_maps(J, h)
    P_dt = np.linalg.matrix_power(P, n)
    states = np.empty((samples + 1, DIM), dtype=complex)
    states[0] = y0
    for k in range(samples):
        states[k + 1] = P_dt @ states[k]
    times = t_start + dt * np.arange(samples + 1)
    times[-1] = t_end
    if not np.all(np.isfinite(states)):
        bad = int(np.argmax(~np.all(np.isfinite(states), axis=1)))
        raise NonFiniteState(f"non-finite amplitude at t = {times[bad]:.6e} s", float(times[bad]))
    return Trajectory(times, states, {"steps": n * samples, "h": h})


# Pade coefficients b_0..b_13 and the theta_m bounds from Higham (2005).
_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
)
_PADE_LOW = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
}
_THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1,
          7: 9.504178996162932e-1, 9: 2.097847961257068e0}
_THETA13 = 5.371920351148152e0


def expm(A: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Pade core."""
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    ident = np.eye(n, dtype=complex)
    norm1 = np.linalg.norm(A, 1)
    if norm1 == 0:
        return ident
    for m in (3, 5, 7, 9):
        if norm1 <= _THETA[m]:
            b = _PADE_LOW[m]
            A2 = A @ A
            powers = [ident, A2]
            while len(powers) <= m // 2:
                powers.append(powers[-1] @ A2)
            U = A @ sum(b[2 * k + 1] * powers[k] for k in range(m // 2 + 1))
            V = sum(b[2 * k] * powers[k] for k in range(m // 2 + 1))
            return np.linalg.solve(V - U, V + U)

    s = max(0, int(math.ceil(math.log2(norm1 / _THETA13))))
    A = A / 2.0**s
    b = _PADE13
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A2 @ A4
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
             + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
         + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
    X = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        X = X @ X
    return X


def expm_propagate(gen: Generator, initial, t: float) -> np.ndarray:
    """exp(-i M t) applied to ``initial``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    y = as_state(initial)
    if t == 0:
        return y.copy()
    return expm(gen.rhs_matrix * t) @ y


def stiffness_ratio(gen: Generator, notice_below: float = 1e3) -> float:
    """max |Re l| / min |Re l| over eigenvalues l of -i M with Re l != 0."""
    lam = np.linalg.eigvals(gen.rhs_matrix)
    re = np.abs(lam.real)
    tol = 1e-11 * max(1.0, float(np.max(np.abs(lam))))
    nz = re[re > tol]
    if nz.size == 0:
        raise NotStiffError("not stiff by this measure: all eigenvalues are purely imaginary")
    ratio = float(nz.max() / nz.min())
    if ratio < notice_below:
        log.info("stiffness ratio %.3g is below %.3g", ratio, notice_below)
    return ratio


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """t_s, re/im of the ten amplitudes, norm2: 22 columns."""
    from .model import BASIS

    header = ["t_s"]
    for b in BASIS:
        header += [f"re_C{b.label}", f"im_C{b.label}"]
    header.append("norm2")
    lines = [",".join(header)]
    for t, c in zip(traj.times, traj.states):
        row = [repr(float(t))]
        for z in c:
            row += [repr(float(z.real)), repr(float(z.imag))]
        row.append(repr(float(np.sum(np.abs(c) ** 2))))
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
