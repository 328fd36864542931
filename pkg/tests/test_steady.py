import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import assume, given, settings, strategies as st

from magnoblock.generator import build_generator
from magnoblock.model import AngularFrequency, Detunings, SystemParams, basis_index, compute_detunings
from magnoblock.steady import (
    DegenerateDetuning,
    InvalidPhase,
    ScanFailure,
    SingularSteadyState,
    WrongBranch,
    c200_root_check,
    complex_E,
    hierarchy_system,
    optimal_drive,
    optimal_E,
    optimal_phase,
    relative_residual,
    steady_amplitudes,
)

from .strategies import admissible_params

TWO_PI = 2 * math.pi
LABELS = ("100", "010", "001", "110", "101", "011", "200", "020", "002")
FIRST = {"100", "010"}


def flat(label):
    return basis_index(*(int(ch) for ch in label)).flat


def generator_oracle(p: SystemParams) -> np.ndarray:
    """Stationary rows of the amplitude equations with C000 = 1, keeping in
    the first-order rows only the couplings to C000 and first-order terms."""
    M = build_generator(p).entries
    A = np.zeros((9, 9), dtype=complex)
    b = np.zeros(9, dtype=complex)
    for i, r in enumerate(LABELS):
        for j, c in enumerate(LABELS):
            if r in FIRST and c not in FIRST:
                continue
            if r == "001" and c != "001":
                continue
            A[i, j] = M[flat(r), flat(c)]
        b[i] = -M[flat(r), flat("000")]
    return scipy.linalg.solve(A, b)


def det_from(dr, di) -> Detunings:
    return Detunings(complex(0, -1), complex(dr, -di), complex(1, -1), dr, di)


# optimal phase


def test_phase_resonant_branch_is_pi():
    assert optimal_phase(det_from(0.0, 1.0)) == math.pi


def test_phase_equal_magnitudes():
    phi = optimal_phase(det_from(2.0, 2.0))
    assert phi == pytest.approx(3 * math.pi / 4, abs=1e-15)


def test_phase_default_lower_sideband():
    p = SystemParams()
    det = compute_detunings(p.replace(omega_drive=float(p.omega_c) - float(p.omega_mech)))
    phi = optimal_phase(det)
    assert math.tan(phi) == pytest.approx(-20.0, rel=1e-12)
    assert abs(det.delta_r * math.cos(phi) + det.delta_i * math.sin(phi)) / abs(det.delta_m) < 1e-12


def test_phase_degenerate():
    with pytest.raises(DegenerateDetuning):
        optimal_phase(det_from(0.0, 0.0))


@given(st.floats(-1e9, 1e9), st.floats(0, 1e8))
def test_phase_constraint_and_branch(dr, di):
    assume(dr != 0 or di != 0)
    det = det_from(dr, di)
    phi = optimal_phase(det)
    assert -math.pi < phi <= math.pi
    assert abs(dr * math.cos(phi) + di * math.sin(phi)) / abs(det.delta_m) < 1e-12
    assert optimal_E(SystemParams(), det, phi) >= 0


@given(st.floats(-1e9, 1e9), st.floats(1, 1e8))
def test_phase_odd_in_detuning(dr, di):
    # tan(a) = -tan(b)  <=>  a + b is a multiple of pi
    a, b = optimal_phase(det_from(dr, di)), optimal_phase(det_from(-dr, di))
    assert abs(math.sin(a + b)) < 1e-12


# optimal drive


def test_E_on_resonance_matches_derived_value():
    p = SystemParams()
    od = optimal_drive(p)
    expected = float(p.feedback_amp) * float(p.kappa_m) / (2 * float(p.g_mc))
    assert od.e_star == pytest.approx(expected, rel=1e-12)
    assert od.e_star == pytest.approx(TWO_PI * 156.25, rel=1e-12)


def test_E_zero_without_feedback():
    p = SystemParams().replace(feedback_amp=0.0)
    det = compute_detunings(p.replace(omega_drive=float(p.omega_c) + 3e7))
    assert optimal_drive(p, det).e_star == 0


def test_E_linear_in_feedback():
    p = SystemParams().replace(omega_drive=float(SystemParams().omega_c) + 4e7)
    det = compute_detunings(p)
    phi = optimal_phase(det)
    e1 = optimal_E(p, det, phi)
    e2 = optimal_E(p.replace(feedback_amp=2 * float(p.feedback_amp)), det, phi)
    assert e2 == pytest.approx(2 * e1, rel=1e-14)


def test_E_wrong_branch_and_invalid_phase():
    p = SystemParams()
    det = compute_detunings(p)
    with pytest.raises(WrongBranch):
        optimal_E(p, det, 0.0)
    with pytest.raises(InvalidPhase):
        optimal_E(p, det, 1.0)


def test_complex_E_real_at_optimum():
    p = SystemParams()
    det = compute_detunings(p.replace(omega_drive=float(p.omega_c) - 1.5e7))
    od = optimal_drive(p, det)
    z = complex_E(p, det, od.phi_star)
    assert z.real == pytest.approx(od.e_star, rel=1e-12)
    assert abs(z.imag) <= 1e-9 * z.real


# steady hierarchy


def test_vacuum_without_drives():
    s = steady_amplitudes(SystemParams().replace(drive_E=0.0, feedback_amp=0.0))
    assert np.all(s.vector() == 0)
    assert s.residual == 0


def test_decoupled_first_order():
    p = SystemParams().replace(g_mc=0.0, phi=0.3, omega_drive=float(SystemParams().omega_c) + 2e6)
    det = compute_detunings(p)
    s = steady_amplitudes(p)
    a = float(p.feedback_amp) * complex(math.cos(p.phi), math.sin(p.phi))
    assert s.c100 == pytest.approx(-a / det.delta_c, rel=1e-14)
    assert s.c010 == pytest.approx(-1j * float(p.drive_E) / det.delta_m, rel=1e-14)


def test_phonon_amplitudes_zero():
    s = steady_amplitudes(SystemParams())
    assert s.c001 == 0 and s.c002 == 0 and not s.phonon_indeterminate


def test_phonon_indeterminate_when_undamped_and_static():
    p = SystemParams().replace(omega_mech=0.0, kappa_mech=0.0)
    s = steady_amplitudes(p)
    assert s.phonon_indeterminate and s.c002 == 0


@settings(max_examples=60)
@given(admissible_params())
def test_matches_generator_oracle(p):
    try:
        s = steady_amplitudes(p)
    except SingularSteadyState:
        assume(False)
    ref = generator_oracle(p)
    scale = np.max(np.abs(ref))
    assume(scale > 0)
    assert np.max(np.abs(s.vector() - ref)) <= 1e-8 * scale


@settings(max_examples=60)
@given(admissible_params())
def test_residual_small(p):
    try:
        s = steady_amplitudes(p)
    except SingularSteadyState:
        assume(False)
    assert s.residual < 1e-10
    A, b = hierarchy_system(p, compute_detunings(p))
    assert relative_residual(A, b, s.vector()) == s.residual


def test_two_photon_amplitude_nulled_at_optimum():
    p = SystemParams()
    p = p.replace(omega_drive=float(p.omega_c) - float(p.omega_mech))
    od = optimal_drive(p)
    s = steady_amplitudes(p.replace(phi=od.phi_star, drive_E=od.e_star))
    assert abs(s.c200) / max(abs(s.c100), abs(s.c010)) ** 2 < 1e-3


@given(st.floats(-2.0, 3.0))
def test_optimum_nulls_one_photon_amplitude_too(x):
    # The closed-form drive cancels C100 itself, which also removes the
    # sources of C200 at this order.
    p = SystemParams()
    p = p.replace(omega_drive=float(p.omega_c) + x * float(p.omega_mech))
    od = optimal_drive(p)
    s = steady_amplitudes(p.replace(phi=od.phi_star, drive_E=od.e_star))
    assert abs(s.c100) <= 1e-9 * abs(s.c010)


def test_hierarchy_warning_for_strong_drive():
    p = SystemParams().replace(drive_E=AngularFrequency.from_hz(5e6))
    assert steady_amplitudes(p).hierarchy_warning
    assert not steady_amplitudes(SystemParams()).hierarchy_warning


def test_singular_first_order_block():
    # Delta_c = Delta_m = g_mc exactly, so Delta_c Delta_m - g_mc^2 = 0
    p = SystemParams(omega_c=3.0, omega_m=3.0, omega_drive=1.0, g_mc=2.0, kappa_c=0.0, kappa_m=0.0)
    with pytest.raises(SingularSteadyState) as info:
        steady_amplitudes(p)
    assert info.value.determinant == 0


# root check


def test_root_check_without_feedback():
    assert c200_root_check(SystemParams().replace(feedback_amp=0.0)) == (0.0, 0.0)


def test_root_check_on_resonance():
    e_root, gap = c200_root_check(SystemParams())
    assert e_root == pytest.approx(TWO_PI * 156.25, rel=1e-7)
    assert gap < 1e-7


def test_root_check_bad_bracket():
    p = SystemParams()
    e = optimal_drive(p).e_star
    with pytest.raises(ScanFailure) as info:
        c200_root_check(p, bracket=(2 * e, 3 * e))
    assert info.value.bounds == (2 * e, 3 * e)
