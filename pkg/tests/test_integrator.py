import logging
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from magnoblock.generator import Generator, build_generator, lossless_part
from magnoblock.integrator import (
    RADAU_A,
    RADAU_B,
    RADAU_C,
    MaxStepsExceeded,
    NonFiniteState,
    NotStiffError,
    RadauConfig,
    StepSizeUnderflow,
    expm,
    expm_propagate,
    radau_evolve,
    radau_fixed_step,
    radau_stability,
    radau_uniform,
    stiffness_ratio,
    uniform_step,
    write_trajectory_csv,
)
from magnoblock.model import DIM, SystemParams, vacuum_state
from magnoblock.steady import optimal_drive

from .strategies import admissible_params

TWO_PI = 2 * math.pi
DELTA = TWO_PI * 1e6 - 1j * TWO_PI * 0.5e6


def diag_gen(values) -> Generator:
    return Generator(np.diag(np.asarray(values, dtype=complex)), "test")


def e(k):
    v = np.zeros(DIM, dtype=complex)
    v[k] = 1
    return v


# tableau


def test_tableau_row_sums_and_stiff_accuracy():
    assert np.allclose(RADAU_A.sum(axis=1), RADAU_C, atol=1e-15)
    assert np.array_equal(RADAU_A[-1], RADAU_B)
    assert RADAU_C[-1] == 1.0


def test_tableau_simplifying_conditions():
    # B(5) and C(3) hold for 3-stage Radau IIA.
    for q in range(1, 6):
        assert RADAU_B @ RADAU_C ** (q - 1) == pytest.approx(1 / q, abs=1e-15)
    for q in range(1, 4):
        assert np.allclose(RADAU_A @ RADAU_C ** (q - 1), RADAU_C**q / q, atol=1e-15)


def test_stability_function_matches_step_map():
    z = np.array([-0.3 + 2j, -5.0, 0.1j, -1e3 + 1e3j])
    for zi in z:
        y = radau_fixed_step(diag_gen([zi * 1j] + [0] * 9), e(0), 1.0, 1.0)
        assert y[0] == pytest.approx(radau_stability(zi), rel=1e-13)
    assert abs(radau_stability(-1e12)) < 1e-11  # L-stable


# adaptive integrator


def test_scalar_closed_form():
    t = 1e-6
    traj = radau_evolve(diag_gen([DELTA] * DIM), e(1), t)
    exact = np.exp(-1j * DELTA * t)
    assert traj.final[1] == pytest.approx(exact, rel=1e-8)
    assert abs(traj.final[1]) == pytest.approx(math.exp(-math.pi * 1e6 * t), rel=1e-8)


def test_zero_generator_is_identity():
    y0 = np.arange(DIM) + 1j
    traj = radau_evolve(diag_gen(np.zeros(DIM)), y0, 3.7e-3)
    assert np.array_equal(traj.final, y0)


def test_samples_and_final_time():
    gen = build_generator(SystemParams())
    t_end = 20 / float(SystemParams().kappa_c)
    traj = radau_evolve(gen, vacuum_state(), t_end, sample_every=t_end / 200)
    assert len(traj.times) == 201 == len(traj.states)
    assert traj.times[-1] == t_end
    assert np.all(np.diff(traj.times) > 0)
    assert traj.step_stats["accepted"] > 0


def test_optimal_drive_point_matches_oracle():
    p = SystemParams()
    p = p.replace(omega_drive=float(p.omega_c) - float(p.omega_mech))
    od = optimal_drive(p)
    gen = build_generator(p.replace(phi=od.phi_star, drive_E=od.e_star))
    t_end = 20 / float(p.kappa_c)
    y = radau_evolve(gen, vacuum_state(), t_end).final
    assert np.max(np.abs(y - expm_propagate(gen, vacuum_state(), t_end))) <= 1e-7


def test_deterministic():
    gen = build_generator(SystemParams(phi=0.3))
    a = radau_evolve(gen, vacuum_state(), 1e-6, sample_every=1e-8)
    b = radau_evolve(gen, vacuum_state(), 1e-6, sample_every=1e-8)
    assert np.array_equal(a.states, b.states) and np.array_equal(a.times, b.times)


def test_restart_continues_clock():
    gen = build_generator(SystemParams())
    traj = radau_evolve(gen, vacuum_state(), 1e-7, sample_every=5e-8, t_start=2e-7)
    assert traj.times[0] == 2e-7 and traj.times[-1] == pytest.approx(3e-7, rel=1e-15)


def test_max_steps_reported_with_time():
    gen = build_generator(SystemParams())
    with pytest.raises(MaxStepsExceeded) as info:
        radau_evolve(gen, vacuum_state(), 1e-5, RadauConfig(max_steps=5))
    assert 0 < info.value.time < 1e-5
    assert "max_steps=5" in str(info.value)


def test_underflow_reported():
    gen = build_generator(SystemParams())
    cfg = RadauConfig(rel_tol=1e-300, abs_tol=1e-300, h_min=1e-12, h_init=1e-12)
    with pytest.raises(StepSizeUnderflow) as info:
        radau_evolve(gen, vacuum_state(), 1e-6, cfg)
    assert info.value.time >= 0


def test_non_finite_detected():
    gen = diag_gen([1e3j] * DIM)  # dC/dt = +1e3 C overflows near t = 0.7
    with pytest.raises(NonFiniteState):
        radau_fixed_step(gen, e(0), 10.0, 1e-3)


@pytest.mark.parametrize("kwargs", [dict(rel_tol=0), dict(abs_tol=-1), dict(h_min=1.0, h_init=0.5),
                                    dict(max_steps=0)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        RadauConfig(**kwargs)


def test_rejects_bad_inputs():
    gen = build_generator(SystemParams())
    with pytest.raises(ValueError):
        radau_evolve(gen, vacuum_state(), 0.0)
    with pytest.raises(ValueError):
        radau_evolve(gen, np.full(DIM, np.nan), 1e-6)


# fixed step and convergence


def test_fixed_step_scalar_ratio():
    gen = diag_gen([DELTA] * DIM)
    t = 1e-6
    exact = np.exp(-1j * DELTA * t)
    errs = [abs(radau_fixed_step(gen, e(2), t, t / n)[2] - exact) for n in (4, 8)]
    assert 24 <= errs[0] / errs[1] <= 40


def test_fixed_step_default_generator_ratio():
    gen = build_generator(SystemParams())
    t = 100e-9
    ref = expm_propagate(gen, vacuum_state(), t)
    e1 = np.max(np.abs(radau_fixed_step(gen, vacuum_state(), t, 1e-9) - ref))
    e2 = np.max(np.abs(radau_fixed_step(gen, vacuum_state(), t, 0.5e-9) - ref))
    assert 24 <= e1 / e2 <= 40


def test_single_step_zero_generator():
    y0 = np.ones(DIM, dtype=complex)
    assert np.array_equal(radau_fixed_step(diag_gen(np.zeros(DIM)), y0, 1.0, 1.0), y0)


def test_fixed_step_must_divide():
    with pytest.raises(ValueError):
        radau_fixed_step(build_generator(SystemParams()), vacuum_state(), 1.0, 0.3)


# uniform-step sampling


def test_uniform_step_divides_interval():
    lam = np.linalg.eigvals(build_generator(SystemParams()).rhs_matrix)
    h, n = uniform_step(lam, 1e-8, 3e-6, 1e-8)
    assert n >= 1 and h * n == pytest.approx(1e-8, rel=1e-14)


def test_uniform_step_no_dynamics():
    assert uniform_step(np.zeros(DIM), 1e-3, 1.0, 1e-8) == (1e-3, 1)


@settings(max_examples=30)
@given(admissible_params(), st.floats(0.5, 3.0))
def test_uniform_matches_oracle(p, ratio):
    p = p.replace(omega_m=ratio * float(p.omega_c))
    gen = build_generator(p)
    t_end = 20 / float(p.kappa_c)
    traj = radau_uniform(gen, vacuum_state(), t_end, 50)
    ref = expm_propagate(gen, vacuum_state(), t_end)
    assert np.max(np.abs(traj.final - ref)) <= 1e-7


def test_uniform_equals_explicit_steps():
    gen = build_generator(SystemParams())
    t = 20e-9
    traj = radau_uniform(gen, vacuum_state(), t, 1)
    h = traj.step_stats["h"]
    y = radau_fixed_step(gen, vacuum_state(), t, h)
    assert np.max(np.abs(traj.final - y)) <= 1e-13


# exact propagator


def test_expm_zero_time_returns_input():
    y0 = np.arange(DIM) * (1 + 1j)
    out = expm_propagate(build_generator(SystemParams()), y0, 0.0)
    assert np.array_equal(out, y0)


def test_expm_diagonal_closed_form():
    d = np.array([DELTA * k for k in range(DIM)])
    out = expm_propagate(diag_gen(d), np.ones(DIM), 2e-7)
    assert np.allclose(out, np.exp(-1j * d * 2e-7), rtol=1e-13, atol=0)


def test_expm_semigroup():
    gen = build_generator(SystemParams(phi=0.5))
    v = vacuum_state()
    a = expm_propagate(gen, v, 100e-9)
    b = expm_propagate(gen, expm_propagate(gen, v, 50e-9), 50e-9)
    assert np.max(np.abs(a - b)) <= 1e-11


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.floats(-6, 1.5))
def test_expm_matches_scipy(seed, log_scale):
    rng = np.random.default_rng(seed)
    A = (rng.standard_normal((DIM, DIM)) + 1j * rng.standard_normal((DIM, DIM))) * 10**log_scale
    ours, ref = expm(A), scipy.linalg.expm(A)
    assert np.max(np.abs(ours - ref)) <= 1e-11 * max(1.0, np.max(np.abs(ref)))


def test_expm_negative_time():
    with pytest.raises(ValueError):
        expm_propagate(build_generator(SystemParams()), vacuum_state(), -1.0)


# stiffness


def test_stiffness_lossless_not_stiff():
    with pytest.raises(NotStiffError):
        stiffness_ratio(lossless_part(build_generator(SystemParams())))


def test_stiffness_decoupled():
    # The full ten-state spectrum holds 2 kappa_c (|200>) and kappa_mech/2
    # (|001>), so the ratio is 2e4 rather than the single-excitation 1e4.
    p = SystemParams().replace(g_mc=0.0, g_md=0.0, drive_E=0.0, feedback_amp=0.0, kappa_m=0.0)
    assert stiffness_ratio(build_generator(p)) == pytest.approx(2e4, rel=1e-9)


# Frozen from scipy.linalg.eigvals of the Fock-space oracle matrix.
DEFAULT_STIFFNESS = 9995.264517531426


def test_stiffness_default_baseline():
    r = stiffness_ratio(build_generator(SystemParams()))
    assert r > 1e3
    assert r == pytest.approx(DEFAULT_STIFFNESS, rel=1e-6)


def test_stiffness_notice(caplog):
    k = float(SystemParams().kappa_c)
    p = SystemParams().replace(g_mc=0.0, g_md=0.0, drive_E=0.0, feedback_amp=0.0, kappa_m=k, kappa_mech=k)
    with caplog.at_level(logging.INFO, logger="magnoblock.integrator"):
        r = stiffness_ratio(build_generator(p))
    assert r < 1e3
    assert "below" in caplog.text


# export


def test_trajectory_csv(tmp_path):
    traj = radau_evolve(build_generator(SystemParams()), vacuum_state(), 1e-7, sample_every=1e-8)
    path = tmp_path / "t.csv"
    write_trajectory_csv(traj, path)
    lines = path.read_text().splitlines()
    head = lines[0].split(",")
    assert head[0] == "t_s" and head[-1] == "norm2" and len(head) == 22
    assert len(lines) == 1 + len(traj.times)
    last = [float(x) for x in lines[-1].split(",")]
    assert last[-1] == pytest.approx(np.sum(np.abs(traj.final) ** 2), rel=1e-15)
