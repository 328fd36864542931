"""Photon blockade in a feedback-driven cavity magnomechanical system.

Three bosonic modes (cavity photon, magnon, phonon) are truncated to ten
amplitudes and evolved under a non-Hermitian effective Hamiltonian. The
package computes the feedback-optimal drive, integrates the amplitudes with
Radau IIA, and maps the photon g2(0) over pump and magnon frequencies.
"""

__version__ = "0.1.0"

from .model import AngularFrequency, SystemParams, compute_detunings, validate_params  # noqa: E402
from .generator import build_generator  # noqa: E402
from .integrator import RadauConfig, expm_propagate, radau_evolve, radau_uniform  # noqa: E402
from .steady import optimal_drive, steady_amplitudes  # noqa: E402
from .observables import g2_zero  # noqa: E402
from .sweep import SweepSpec, evolve_to_steady, sweep_1d, sweep_2d  # noqa: E402

__all__ = [
    "AngularFrequency", "SystemParams", "compute_detunings", "validate_params",
    "build_generator", "RadauConfig", "expm_propagate", "radau_evolve", "radau_uniform",
    "optimal_drive", "steady_amplitudes", "g2_zero",
    "SweepSpec", "evolve_to_steady", "sweep_1d", "sweep_2d",
]
