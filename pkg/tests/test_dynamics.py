import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as npst

from spingate.dynamics import (PiecewiseField, TimeGrid, propagate,
                               propagate_batch, propagate_costate,
                               propagate_state, instantaneous_spectrum,
                               step_propagator)
from spingate.hilbert import SIGMA_X, basis_state
from spingate.model import build_drift, default_spec, hamiltonian_at


def smooth_field(grid, amp=1.0, freq=1.0, phase=0.0):
    t = grid.midpoints()
    values = amp * np.sin(np.pi * t / grid.t_f) ** 2 * np.cos(freq * t + phase)
    return PiecewiseField(grid=grid, values=values)


def test_grid_basics():
    grid = TimeGrid(t_f=25.0, steps=500)
    assert grid.dt == pytest.approx(0.05)
    assert len(grid.times()) == 501
    assert len(grid.midpoints()) == 500
    assert grid.midpoints()[0] == pytest.approx(0.025)
    with pytest.raises(ValueError):
        TimeGrid(t_f=0.0, steps=10)
    with pytest.raises(ValueError):
        TimeGrid(t_f=1.0, steps=0)


def test_grid_with_max_dt():
    grid = TimeGrid.with_max_dt(25.0)
    assert grid.dt <= 0.05


def test_field_validation():
    grid = TimeGrid(1.0, 10)
    with pytest.raises(ValueError):
        PiecewiseField(grid, np.zeros(9))
    with pytest.raises(ValueError):
        PiecewiseField(grid, np.full(10, np.nan))
    with pytest.raises(ValueError):
        PiecewiseField(grid, np.full(10, 5.0), amplitude_bound=4.0)
    field = PiecewiseField(grid, np.full(10, 2.0), amplitude_bound=4.0)
    assert field.max_amplitude == 2.0
    assert field.fluence() == pytest.approx(4.0 * 1.0)


def test_step_propagator_free_period():
    h = np.diag([0.5, -0.5]).astype(complex)
    u = step_propagator(h, 2 * np.pi)
    assert np.allclose(u, -np.eye(2), atol=1e-12)


def test_step_propagator_zero_time():
    h = np.diag([0.5, -0.5]).astype(complex)
    assert np.allclose(step_propagator(h, 0.0), np.eye(2))


def test_step_propagator_half_sigma_x():
    # closed form: exp(-i pi sigma_x / 2) = -i sigma_x
    u = step_propagator(SIGMA_X / 2, np.pi)
    assert np.allclose(u, -1j * SIGMA_X, atol=1e-12)


def test_step_propagator_rejects_non_hermitian():
    with pytest.raises(ValueError):
        step_propagator(np.array([[0.0, 1.0], [0.0, 0.0]]), 0.1)


def test_free_qubit_closed_form():
    spec = default_spec(0, 0.0)
    grid = TimeGrid(t_f=7.3, steps=200)
    traj = propagate(spec, PiecewiseField.zero(grid))
    expected = np.diag([np.exp(-1j * 7.3 / 2), np.exp(1j * 7.3 / 2)])
    assert np.allclose(traj.final, expected, atol=1e-10)


def test_uncoupled_propagator_factorizes():
    # oracle: tensor product of single-particle propagators
    spec = default_spec(2, 0.0)
    grid = TimeGrid(t_f=11.0, steps=300)
    traj = propagate(spec, PiecewiseField.zero(grid))
    factors = [np.diag([np.exp(-1j * w * grid.t_f / 2),
                        np.exp(1j * w * grid.t_f / 2)]) for w in spec.omegas]
    expected = np.kron(np.kron(factors[0], factors[1]), factors[2])
    assert np.allclose(traj.final, expected, atol=1e-10)


@settings(max_examples=15)
@given(amp=st.floats(-3, 3), freq=st.floats(0.3, 2.0), n=st.integers(0, 2))
def test_propagation_unitary(amp, freq, n):
    spec = default_spec(n, 0.02, 0.01)
    grid = TimeGrid(t_f=8.0, steps=160)
    traj = propagate(spec, smooth_field(grid, amp, freq), keep_trajectory=True)
    assert traj.unitarity_defect() < 1e-10


def test_trajectory_starts_at_identity():
    spec = default_spec(1, 0.02)
    grid = TimeGrid(t_f=5.0, steps=100)
    traj = propagate(spec, smooth_field(grid), keep_trajectory=True)
    assert np.array_equal(traj.unitaries[0], np.eye(4))
    assert np.allclose(traj.unitaries[-1], traj.final)


def test_composition_of_segments():
    spec = default_spec(1, 0.02)
    grid = TimeGrid(t_f=10.0, steps=200)
    field = smooth_field(grid, amp=1.5)
    full = propagate(spec, field).final

    half_a = PiecewiseField(TimeGrid(5.0, 100), field.values[:100])
    ua = propagate(spec, half_a).final
    # second half: same step Hamiltonians, applied after the first segment
    half_b = PiecewiseField(TimeGrid(5.0, 100), field.values[100:])
    ub = propagate(spec, half_b).final
    assert np.linalg.norm(ub @ ua - full) < 1e-10


def test_batch_matches_sequential():
    spec = default_spec(1, 0.02)
    grid = TimeGrid(t_f=6.0, steps=120)
    rng = np.random.default_rng(5)
    values = rng.normal(0.0, 1.0, (4, 120))
    finals = propagate_batch(spec, grid, values)
    for k in range(4):
        ref = propagate(spec, PiecewiseField(grid, values[k])).final
        assert np.linalg.norm(finals[k] - ref) < 1e-12


def test_step_halving_second_order():
    spec = default_spec(1, 0.02)
    t_f = 10.0

    def final(steps):
        grid = TimeGrid(t_f, steps)
        return propagate(spec, smooth_field(grid, amp=2.0)).final

    d1 = np.linalg.norm(final(100) - final(200))
    d2 = np.linalg.norm(final(200) - final(400))
    assert 2.5 < d1 / d2 < 6.0  # ratio -> 4 for an O(dt^2) scheme


def test_costate_closed_form():
    # closed form: B(t_k) = b_final U(t_f) U(t_k)^dag
    spec = default_spec(1, 0.02)
    grid = TimeGrid(t_f=4.0, steps=80)
    field = smooth_field(grid, amp=1.0)
    traj = propagate(spec, field, keep_trajectory=True)
    rng = np.random.default_rng(2)
    b_final = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    bs = propagate_costate(spec, field, b_final)
    for k in range(0, 81, 16):
        expected = b_final @ traj.final @ traj.unitaries[k].conj().T
        assert np.linalg.norm(bs[k] - expected) < 1e-10


def test_costate_pairing_conserved():
    spec = default_spec(2, 0.02, 0.0175)
    grid = TimeGrid(t_f=8.0, steps=160)
    field = smooth_field(grid, amp=2.0)
    traj = propagate(spec, field, keep_trajectory=True)
    rng = np.random.default_rng(3)
    b_final = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    bs = propagate_costate(spec, field, b_final)
    traces = np.array([np.trace(bs[k] @ traj.unitaries[k])
                       for k in range(161)])
    drift = np.max(np.abs(traces - traces[-1])) / np.abs(traces[-1])
    assert drift < 1e-8


def test_spectrum_constant_without_field():
    spec = default_spec(1, 0.02)
    grid = TimeGrid(t_f=3.0, steps=60)
    spectrum = instantaneous_spectrum(spec, PiecewiseField.zero(grid))
    drift_eigs = np.linalg.eigvalsh(build_drift(spec))
    assert np.allclose(spectrum, drift_eigs[None, :], atol=1e-12)


def test_spectrum_driven_qubit_closed_form():
    spec = default_spec(0, 0.0)
    grid = TimeGrid(t_f=1.0, steps=3)
    field = PiecewiseField(grid, np.full(3, 2.0))
    spectrum = instantaneous_spectrum(spec, field)
    assert np.allclose(spectrum, [[-np.sqrt(5) / 2, np.sqrt(5) / 2]] * 3)


def test_spectrum_even_in_field_sign():
    spec = default_spec(0, 0.0)
    grid = TimeGrid(t_f=1.0, steps=5)
    c = np.linspace(-2, 2, 5)
    plus = instantaneous_spectrum(spec, PiecewiseField(grid, c))
    minus = instantaneous_spectrum(spec, PiecewiseField(grid, -c))
    assert np.allclose(plus, minus, atol=1e-12)


def test_propagate_state_matches_trajectory():
    spec = default_spec(1, 0.02)
    grid = TimeGrid(t_f=5.0, steps=100)
    field = smooth_field(grid, amp=1.2)
    traj = propagate(spec, field, keep_trajectory=True)
    psi0 = basis_state("-+")
    states = propagate_state(spec, field, psi0)
    assert np.allclose(states[0], psi0)
    assert np.linalg.norm(states[-1] - traj.final @ psi0) < 1e-12
    assert np.linalg.norm(states[50] - traj.unitaries[50] @ psi0) < 1e-12
