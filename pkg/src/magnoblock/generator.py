"""Dense 10x10 generator M of the amplitude equations dC/dt = -i M C."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .model import DIM, SystemParams, basis_index, compute_detunings

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class Generator:
    entries: np.ndarray
    params_fingerprint: str

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def rhs_matrix(self) -> np.ndarray:
        """J = -i M, the matrix of the linear right-hand side."""
        return -1j * self.entries


def params_fingerprint(params: SystemParams) -> str:
    blob = json.dumps(params.to_hz(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _ix(label: str) -> int:
    return basis_index(*(int(ch) for ch in label)).flat


def build_generator(params: SystemParams) -> Generator:
    """Effective non-Hermitian Hamiltonian (divided by hbar) on the
    truncated basis, term for term as in the coefficient equations.

    Row a, column b holds the coefficient of C_b in i dC_a/dt.
    """
    det = compute_detunings(params)
    dc, dm, dd = det.delta_c, det.delta_m, det.delta_mech
    g = float(params.g_mc)
    gmd = float(params.g_md)
    E = float(params.drive_E)
    om = float(params.feedback_amp)
    # e^{+i phi} built once and conjugated so that the lossless part is
    # exactly Hermitian.
    up = om * complex(math.cos(params.phi), math.sin(params.phi))
    dn = up.conjugate()

    M = np.zeros((DIM, DIM), dtype=complex)

    def put(row, col, value):
        M[_ix(row), _ix(col)] += value

    put("000", "100", dn)
    put("000", "010", -1j * E)

    put("100", "000", up)
    put("100", "100", dc)
    put("100", "010", g)
    put("100", "110", -1j * E)
    put("100", "200", dn * SQRT2)

    put("010", "000", 1j * E)
    put("010", "100", g)
    put("010", "010", dm)
    put("010", "110", dn)
    put("010", "011", gmd)
    put("010", "020", -1j * E * SQRT2)

    put("001", "001", dd)
    put("001", "101", dn)
    put("001", "011", -1j * E)

    put("110", "100", 1j * E)
    put("110", "010", up)
    put("110", "110", dc + dm)
    put("110", "200", g * SQRT2)
    put("110", "020", g * SQRT2)

    put("101", "001", up)
    put("101", "101", dc + dd)
    put("101", "011", g)

    put("011", "010", gmd)
    put("011", "001", 1j * E)
    put("011", "101", g)
    put("011", "011", dm + dd)

    put("200", "100", up * SQRT2)
    put("200", "110", g * SQRT2)
    put("200", "200", 2 * dc)

    put("020", "010", 1j * E * SQRT2)
    put("020", "110", g * SQRT2)
    put("020", "020", 2 * dm)

    put("002", "002", 2 * dd)

    return Generator(M, params_fingerprint(params))


def lossless_part(gen: Generator) -> Generator:
    """Drop the decay (-i kappa/2) contributions, which only sit on the
    diagonal. The result is Hermitian."""
    M = np.array(gen.entries)
    idx = np.diag_indices(DIM)
    M[idx] = M[idx].real
    return Generator(M, gen.params_fingerprint)


def write_generator_csv(gen: Generator, path) -> None:
    """Dump all 100 entries as (row, col, re, im)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col", "re", "im"])
        for a in range(DIM):
            for b in range(DIM):
                z = gen.entries[a, b]
                w.writerow([a, b, repr(float(z.real)), repr(float(z.imag))])
