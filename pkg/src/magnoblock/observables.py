"""Photon statistics of a truncated state."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import basis_index

LOG_FLOOR = 1e-16

_C100 = basis_index(1, 0, 0).flat
_C110 = basis_index(1, 1, 0).flat
_C101 = basis_index(1, 0, 1).flat
_C200 = basis_index(2, 0, 0).flat
_C010 = basis_index(0, 1, 0).flat
_C011 = basis_index(0, 1, 1).flat
_C020 = basis_index(0, 2, 0).flat


@dataclass(frozen=True)
class PhotonStats:
    """``g2`` and ``log10_g2`` are NaN when the photon number is zero."""

    n_photon: float
    g2: float
    log10_g2: float

    @property
    def defined(self) -> bool:
        return not math.isnan(self.g2)


def _abs2(z: complex) -> float:
    return z.real * z.real + z.imag * z.imag


def g2_zero(state) -> PhotonStats:
    """Equal-time g2 = 2|C200|^2 / (|C100|^2 + |C110|^2 + |C101|^2 + 2|C200|^2)^2."""
    c = np.asarray(state, dtype=complex)
    p200 = _abs2(c[_C200])
    n = _abs2(c[_C100]) + _abs2(c[_C110]) + _abs2(c[_C101]) + 2 * p200
    if n == 0:
        return PhotonStats(0.0, math.nan, math.nan)
    g2 = 2 * p200 / (n * n)
    return PhotonStats(n, g2, math.log10(max(g2, LOG_FLOOR)))


def photon_number_series(states: np.ndarray) -> np.ndarray:
    s = np.asarray(states)
    return (np.abs(s[:, _C100]) ** 2 + np.abs(s[:, _C110]) ** 2 + np.abs(s[:, _C101]) ** 2
            + 2 * np.abs(s[:, _C200]) ** 2)


def g2_series(states: np.ndarray) -> np.ndarray:
    """g2 for each row of a (n_samples, 10) array; NaN where undefined."""
    s = np.asarray(states)
    p200 = np.abs(s[:, _C200]) ** 2
    n = photon_number_series(s)
    out = np.full(len(s), np.nan)
    ok = n > 0
    out[ok] = 2 * p200[ok] / n[ok] ** 2
    return out


def window_mean(values: np.ndarray) -> float:
    """Mean over defined entries, NaN if none are defined."""
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    return float(v.mean()) if v.size else math.nan


def log10_floor(g2: float) -> float:
    if math.isnan(g2):
        return math.nan
    return math.log10(max(g2, LOG_FLOOR))


def magnon_number(state) -> float:
    c = np.asarray(state, dtype=complex)
    return _abs2(c[_C010]) + _abs2(c[_C110]) + _abs2(c[_C011]) + 2 * _abs2(c[_C020])
