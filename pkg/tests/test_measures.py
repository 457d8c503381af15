import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_unitary
from spingate.dynamics import PiecewiseField, TimeGrid
from spingate.hilbert import basis_state
from spingate.measures import (GateTarget, entropy_trace, gate_distance,
                               gate_distance_bruteforce, hadamard,
                               initial_state, norm_factor, overlap_matrix,
                               reduced_density, von_neumann_entropy)
from spingate.model import default_spec


def overlap_by_loops(u, g, n):
    """Independent oracle: the defining four-index sum, written out."""
    d_env = 2 ** n
    q = np.zeros((d_env, d_env), dtype=complex)
    for v in range(d_env):
        for w in range(d_env):
            for r in range(2):
                for s in range(2):
                    q[v, w] += np.conj(g[r, s]) * u[r * d_env + v,
                                                    s * d_env + w]
    return q


def test_target_requires_unitary():
    with pytest.raises(ValueError):
        GateTarget(matrix=np.array([[1.0, 0.0], [0.0, 0.5]]))
    with pytest.raises(ValueError):
        GateTarget(matrix=np.eye(3))


def test_norm_factor():
    assert norm_factor(1) == pytest.approx(2 ** -1.5)
    assert norm_factor(2) == pytest.approx(0.25)


@pytest.mark.parametrize("n", [1, 2])
def test_overlap_matches_loop_oracle(n):
    u = random_unitary(2 ** (n + 1), seed=n)
    target = hadamard()
    got = overlap_matrix(u, target, n)
    assert np.allclose(got, overlap_by_loops(u, target.matrix, n), atol=1e-13)


@pytest.mark.parametrize("n", [0, 1, 2])
def test_overlap_of_exact_gate_is_twice_identity(n):
    target = hadamard()
    u = np.kron(target.matrix, np.eye(2 ** n))
    q = overlap_matrix(u, target, n)
    assert np.allclose(q, 2 * np.eye(2 ** n), atol=1e-12)


def test_overlap_of_gate_with_environment_action():
    target = hadamard()
    phi = random_unitary(4, seed=11)
    q = overlap_matrix(np.kron(target.matrix, phi), target, 2)
    assert np.allclose(q, 2 * phi, atol=1e-12)


def test_overlap_of_identity_against_traceless_target_vanishes():
    # tr(hadamard) = 0, so contracting the identity evolution gives Q = 0
    q = overlap_matrix(np.eye(4, dtype=complex), hadamard(), 1)
    assert np.allclose(q, 0.0, atol=1e-14)
    assert np.allclose(overlap_by_loops(np.eye(4), hadamard().matrix, 1), 0.0)


def test_overlap_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        overlap_matrix(np.eye(4), hadamard(), 2)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_distance_zero_for_perfect_gate(n):
    target = hadamard()
    phi = random_unitary(2 ** n, seed=n + 3)
    result = gate_distance(np.kron(target.matrix, phi), target, n)
    assert result.distance < 1e-10
    assert result.fidelity == pytest.approx(1.0, abs=1e-10)


def test_distance_fidelity_sum_exact():
    u = random_unitary(4, seed=1)
    result = gate_distance(u, hadamard(), 1)
    assert result.fidelity + result.distance == 1.0
    assert 0.0 <= result.distance <= 1.0


def test_distance_of_identity_to_hadamard_is_maximal():
    # both computation routes agree that a traceless target puts the
    # identity evolution at the far end of the measure
    closed = gate_distance(np.eye(4, dtype=complex), hadamard(), 1).distance
    brute = gate_distance_bruteforce(np.eye(4, dtype=complex), hadamard(), 1)
    assert closed == pytest.approx(1.0, abs=1e-12)
    assert brute == pytest.approx(1.0, abs=1e-6)


def test_bruteforce_zero_for_perfect_gate():
    target = hadamard()
    phi = random_unitary(2, seed=9)
    value = gate_distance_bruteforce(np.kron(target.matrix, phi), target, 1)
    assert value < 1e-6


@pytest.mark.parametrize("n,count", [(1, 5), (2, 2)])
def test_bruteforce_agrees_with_closed_form(n, count):
    target = hadamard()
    for k in range(count):
        u = random_unitary(2 ** (n + 1), seed=100 + k)
        closed = gate_distance(u, target, n).distance
        brute = gate_distance_bruteforce(u, target, n, seed=k)
        assert abs(closed - brute) < 1e-5


def test_bruteforce_rejects_large_environment():
    with pytest.raises(ValueError):
        gate_distance_bruteforce(np.eye(16, dtype=complex), hadamard(), 3)


@pytest.mark.parametrize("side", ["left", "right"])
def test_distance_invariant_under_environment_unitaries(side):
    target = hadamard()
    u = random_unitary(8, seed=21)
    base = gate_distance(u, target, 2).distance
    for k in range(5):
        phi = np.kron(np.eye(2), random_unitary(4, seed=30 + k))
        moved = phi @ u if side == "left" else u @ phi
        assert abs(gate_distance(moved, target, 2).distance - base) < 1e-10


def test_initial_state_layout():
    psi = initial_state(2)
    assert np.array_equal(psi, basis_state("-++"))


def test_reduced_density_product_state():
    rho = reduced_density(basis_state("-+"), 1)
    assert np.allclose(rho, np.diag([0.0, 1.0]))


def test_reduced_density_bell_state():
    psi = (basis_state("++") + basis_state("--")) / np.sqrt(2)
    rho = reduced_density(psi, 1)
    assert np.allclose(rho, np.eye(2) / 2)


@given(seed=st.integers(0, 10 ** 6), n=st.integers(1, 3))
def test_reduced_density_is_a_state(seed, n):
    rng = np.random.default_rng(seed)
    d = 2 ** (n + 1)
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    psi /= np.linalg.norm(psi)
    rho = reduced_density(psi, n)
    assert np.linalg.norm(rho - rho.conj().T) < 1e-12
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
    eigs = np.linalg.eigvalsh(rho)
    assert np.all(eigs > -1e-10)
    assert np.all(eigs < 1 + 1e-10)


def test_entropy_reference_values():
    assert von_neumann_entropy(np.diag([1.0, 0.0])) == 0.0
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(np.log(2))
    assert von_neumann_entropy(np.diag([0.9, 0.1])) == pytest.approx(
        -(0.9 * np.log(0.9) + 0.1 * np.log(0.1)))
    assert von_neumann_entropy(np.diag([0.9, 0.1])) == pytest.approx(
        0.325083, abs=1e-6)


def test_entropy_rejects_bad_inputs():
    with pytest.raises(ValueError):
        von_neumann_entropy(np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        von_neumann_entropy(np.array([[0.5, 1.0], [0.0, 0.5]]))
    with pytest.raises(ValueError):
        von_neumann_entropy(np.diag([0.6, 0.6]))
    # tiny negatives from roundoff are clamped instead
    rho = np.diag([1.0 + 5e-11, -5e-11])
    assert von_neumann_entropy(rho) >= 0.0


def test_entropy_invariant_under_environment_unitary():
    rng = np.random.default_rng(7)
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi /= np.linalg.norm(psi)
    before = von_neumann_entropy(reduced_density(psi, 2))
    phi = np.kron(np.eye(2), random_unitary(4, seed=50))
    after = von_neumann_entropy(reduced_density(phi @ psi, 2))
    assert abs(before - after) < 1e-10


def test_entropy_trace_closed_system_stays_pure():
    spec = default_spec(1, 0.0)
    grid = TimeGrid(t_f=6.0, steps=120)
    t = grid.midpoints()
    field = PiecewiseField(grid, 1.5 * np.cos(t))
    times, entropies = entropy_trace(spec, field)
    assert len(times) == 121
    assert np.all(entropies < 1e-10)


def test_entropy_trace_grows_under_coupling():
    spec = default_spec(1, 0.02)
    grid = TimeGrid(t_f=30.0, steps=600)
    _, entropies = entropy_trace(spec, PiecewiseField.zero(grid))
    assert entropies[0] == pytest.approx(0.0, abs=1e-12)
    assert entropies[-1] > 1e-3
