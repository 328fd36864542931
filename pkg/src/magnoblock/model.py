"""Physical parameters, complex detunings and the truncated three-mode basis.

All frequencies are stored as angular frequencies (rad/s) with hbar = 1.
Parameters are usually quoted as omega / 2 pi in Hz; the only place that
multiplies by 2 pi is :meth:`AngularFrequency.from_hz`.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi


class AngularFrequency(float):
    """A float in rad/s that remembers the Hz value it was built from.

    Arithmetic returns plain floats, so these can be used anywhere a number
    is expected.
    """

    __slots__ = ("_hz",)

    def __new__(cls, value: float, hz: float | None = None):
        obj = super().__new__(cls, value)
        obj._hz = hz
        return obj

    @classmethod
    def from_hz(cls, hz: float) -> "AngularFrequency":
        hz = float(hz)
        return cls(TWO_PI * hz, hz)

    @property
    def hz(self) -> float:
        if self._hz is not None:
            return self._hz
        return float(self) / TWO_PI

    def __getnewargs__(self):
        return (float(self), self._hz)

    def __repr__(self) -> str:
        return f"AngularFrequency.from_hz({self.hz!r})"


def wrap_phase(phi: float) -> float:
    """Reduce an angle to (-pi, pi]."""
    if not math.isfinite(phi):
        return phi
    r = math.remainder(phi, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


def _hz(value: float) -> AngularFrequency:
    return AngularFrequency.from_hz(value)


# Frequency-valued fields of SystemParams; config files give these in Hz
# under the key "<name>_hz".
FREQUENCY_FIELDS = (
    "omega_c",
    "omega_m",
    "omega_mech",
    "kappa_c",
    "kappa_m",
    "kappa_mech",
    "g_mc",
    "g_md",
    "omega_drive",
    "drive_E",
    "feedback_amp",
)


@dataclass(frozen=True)
class SystemParams:
    """Rates, couplings and drive settings of the feedback-driven system.

    Defaults are the reference values of the cavity magnomechanical model,
    with the pump resonant with the cavity, the feedback amplitude
    ``Omega*mu = 2 pi x 1 kHz`` and a magnon drive ``E = 2 pi x 100 kHz``.
    ``omega_mech`` is the mechanical mode frequency and ``kappa_mech`` its
    decay (often written gamma_d). ``temperature`` is recorded only.
    """

    omega_c: float = _hz(10e9)
    omega_m: float = _hz(10e9)
    omega_mech: float = _hz(10e6)
    kappa_c: float = _hz(1e6)
    kappa_m: float = _hz(1e6)
    kappa_mech: float = _hz(100.0)
    g_mc: float = _hz(3.2e6)
    g_md: float = _hz(3.2e6)
    omega_drive: float = _hz(10e9)
    drive_E: float = _hz(1e5)
    feedback_amp: float = _hz(1e3)
    phi: float = math.pi
    temperature: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "phi", wrap_phase(float(self.phi)))

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_hz(cls, values: dict) -> "SystemParams":
        """Build from a mapping with ``<field>_hz`` keys, ``phi`` and
        ``temperature_k``. Missing keys keep their defaults."""
        kwargs = {}
        for name in FREQUENCY_FIELDS:
            key = name + "_hz"
            if key in values:
                kwargs[name] = AngularFrequency.from_hz(values[key])
        if "phi" in values:
            kwargs["phi"] = float(values["phi"])
        if "temperature_k" in values:
            kwargs["temperature"] = float(values["temperature_k"])
        return cls(**kwargs)

    def to_hz(self) -> dict:
        out = {}
        for name in FREQUENCY_FIELDS:
            v = getattr(self, name)
            out[name + "_hz"] = v.hz if isinstance(v, AngularFrequency) else float(v) / TWO_PI
        out["phi"] = self.phi
        out["temperature_k"] = self.temperature
        return out


def validate_params(params: SystemParams) -> list[str]:
    """Return a list of human-readable invariant violations (empty if valid)."""
    problems = []
    for name in FREQUENCY_FIELDS:
        v = float(getattr(params, name))
        if not math.isfinite(v):
            problems.append(f"{name}: must be finite (got {v!r})")
        elif v < 0:
            problems.append(f"{name}: must be >= 0 (got {v!r})")
    if not math.isfinite(params.phi):
        problems.append(f"phi: must be finite (got {params.phi!r})")
    elif not (-math.pi < params.phi <= math.pi):
        problems.append(f"phi: must lie in (-pi, pi] (got {params.phi!r})")
    t = params.temperature
    if not math.isfinite(t) or t < 0:
        problems.append(f"temperature: must be finite and >= 0 (got {t!r})")
    return problems


@dataclass(frozen=True)
class Detunings:
    delta_c: complex
    delta_m: complex
    delta_mech: complex
    delta_r: float
    delta_i: float


def compute_detunings(params: SystemParams) -> Detunings:
    """Complex detunings in the frame rotating at the pump frequency."""
    w0 = float(params.omega_drive)
    dc = complex(float(params.omega_c) - w0, -0.5 * float(params.kappa_c))
    dm = complex(float(params.omega_m) - w0, -0.5 * float(params.kappa_m))
    dd = complex(float(params.omega_mech), -0.5 * float(params.kappa_mech))
    return Detunings(delta_c=dc, delta_m=dm, delta_mech=dd, delta_r=dm.real, delta_i=-dm.imag)


class BasisIndex(NamedTuple):
    n_photon: int
    n_magnon: int
    n_phonon: int
    flat: int

    @property
    def label(self) -> str:
        return f"{self.n_photon}{self.n_magnon}{self.n_phonon}"


# Order of the kets in the truncated wavefunction; flat index = position.
BASIS = tuple(
    BasisIndex(*t, i)
    for i, t in enumerate(
        [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0),
         (1, 0, 1), (0, 1, 1), (2, 0, 0), (0, 2, 0), (0, 0, 2)]
    )
)
DIM = len(BASIS)
_LOOKUP = {b[:3]: b for b in BASIS}

# Occupation numbers per flat index, handy for vectorised bookkeeping.
N_PHOTON = np.array([b.n_photon for b in BASIS])
N_MAGNON = np.array([b.n_magnon for b in BASIS])
N_PHONON = np.array([b.n_phonon for b in BASIS])


def basis_index(n_photon: int, n_magnon: int, n_phonon: int) -> BasisIndex:
    try:
        return _LOOKUP[(n_photon, n_magnon, n_phonon)]
    except KeyError:
        raise ValueError(
            f"occupation |{n_photon}{n_magnon}{n_phonon}> is outside the truncated basis"
        ) from None


def vacuum_state() -> np.ndarray:
    """Initial state: all amplitude in |000>."""
    c = np.zeros(DIM, dtype=complex)
    c[0] = 1.0
    return c


def as_state(amplitudes) -> np.ndarray:
    c = np.asarray(amplitudes, dtype=complex)
    if c.shape != (DIM,):
        raise ValueError(f"state must have shape ({DIM},), got {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("state contains non-finite amplitudes")
    return c
