"""Gate distance, fidelity, and decoherence diagnostics.

The distance between the achieved composite-system evolution U and a 2x2
target gate g is the minimum of lambda_n * ||U - g (x) Phi||_Fr over all
environment unitaries Phi, with lambda_n = 2**(-(n+2)/2).  It evaluates in
closed form through the nuclear norm of the 2**n x 2**n contraction

    Q[v, v'] = sum_{r, r'} conj(g[r, r']) * U[(r, v), (r', v')]

as  distance = sqrt(1 - ||Q||_* / 2**(n+1)),  and is independent of any
initial state.  ``gate_distance_bruteforce`` performs the minimization over
Phi directly and serves as an independent check of the closed form.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .dynamics import PiecewiseField, propagate_state
from .hilbert import basis_state, is_hermitian, is_unitary
from .model import SystemSpec

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
HADAMARD.setflags(write=False)


@dataclass(frozen=True, eq=False)
class GateTarget:
    """A 2x2 unitary target transformation."""

    matrix: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("target must be a 2x2 matrix")
        if not is_unitary(m, tol=1e-12):
            raise ValueError("target must be unitary to 1e-12")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def hadamard() -> GateTarget:
    return GateTarget(matrix=HADAMARD, name="hadamard")


@dataclass(frozen=True, eq=False)
class DistanceResult:
    """Distance in [0, 1], its complement fidelity, and the pieces they
    were computed from."""

    distance: float
    fidelity: float
    nuclear_norm: float
    overlap: np.ndarray


def norm_factor(n: int) -> float:
    """Normalization lambda_n placing the distance in [0, 1]."""
    return 2.0 ** (-(n + 2) / 2.0)


def _check_dim(u: np.ndarray, n: int) -> None:
    d = 2 ** (n + 1)
    if u.shape != (d, d):
        raise ValueError(f"operator must be {d} x {d} for n={n}, got {u.shape}")


def overlap_matrix(u: np.ndarray, target: GateTarget, n: int) -> np.ndarray:
    """Contraction of U against the target over the qubit indices.

    Index layout follows the package basis convention: row = r * 2**n + v,
    column = r' * 2**n + v' with r, r' the qubit indices.
    """
    _check_dim(u, n)
    d_env = 2 ** n
    u4 = u.reshape(2, d_env, 2, d_env)
    return np.einsum("rs,rvsw->vw", target.matrix.conj(), u4)


def gate_distance(u: np.ndarray, target: GateTarget, n: int) -> DistanceResult:
    """Closed-form environment-minimized gate distance and fidelity.

    The SVD of the overlap matrix yields both the nuclear norm and the
    minimizing environment unitary W V^dag.  The value is evaluated as the
    explicit residual lambda_n * ||U - g (x) W V^dag||, which equals
    sqrt(max(0, 1 - N / 2**(n+1))) exactly in real arithmetic but avoids the
    catastrophic cancellation of that form near perfect gates (where the
    square root would amplify an eps-size error in N to ~1e-8).
    """
    q = overlap_matrix(u, target, n)
    w, s, vh = np.linalg.svd(q)
    nuclear = float(s.sum())
    residual = u - np.kron(target.matrix, w @ vh)
    distance = min(1.0, float(norm_factor(n) * np.linalg.norm(residual)))
    return DistanceResult(distance=distance, fidelity=1.0 - distance,
                          nuclear_norm=nuclear, overlap=q)


def _hermitian_from_params(theta: np.ndarray, d: int) -> np.ndarray:
    a = np.zeros((d, d), dtype=complex)
    idx = d
    a[np.diag_indices(d)] = theta[:d]
    for i in range(d):
        for j in range(i + 1, d):
            a[i, j] = theta[idx] + 1j * theta[idx + 1]
            a[j, i] = theta[idx] - 1j * theta[idx + 1]
            idx += 2
    return a


def _unitary_from_params(theta: np.ndarray, d: int) -> np.ndarray:
    lam, v = np.linalg.eigh(_hermitian_from_params(theta, d))
    return (v * np.exp(1j * lam)) @ v.conj().T


def gate_distance_bruteforce(u: np.ndarray, target: GateTarget, n: int,
                             starts: int = 8, seed: int = 0) -> float:
    """Direct minimization of lambda_n * ||U - g (x) Phi||_Fr over Phi.

    Multi-start local search over the 4**n-parameter chart
    Phi = exp(i * Hermitian(theta)).  Intended as an independent oracle for
    the closed form, so it never touches the nuclear-norm path; n <= 2.
    """
    if n > 2:
        raise ValueError("brute-force distance is limited to n <= 2")
    _check_dim(u, n)
    d_env = 2 ** n
    g = target.matrix

    def frob2(theta: np.ndarray) -> float:
        phi = _unitary_from_params(theta, d_env)
        diff = u - np.kron(g, phi)
        return float(np.linalg.norm(diff) ** 2)

    rng = np.random.default_rng(seed)
    best = np.inf
    converged = False
    for s in range(starts):
        theta0 = (np.zeros(d_env * d_env) if s == 0
                  else rng.uniform(-np.pi, np.pi, d_env * d_env))
        res = minimize(frob2, theta0, method="L-BFGS-B")
        converged = converged or res.success
        best = min(best, float(res.fun))
    if not converged:
        raise RuntimeError("no brute-force start converged")
    return norm_factor(n) * float(np.sqrt(max(best, 0.0)))


def initial_state(n: int) -> np.ndarray:
    """Reference state |->_0 (x) |+>^n used for entropy diagnostics."""
    return basis_state("-" + "+" * n)


def reduced_density(state: np.ndarray, n: int) -> np.ndarray:
    """Qubit density matrix: partial trace of |state><state| over the
    environment slots."""
    d = 2 ** (n + 1)
    state = np.asarray(state, dtype=complex)
    if state.shape != (d,):
        raise ValueError(f"state must have shape ({d},) for n={n}")
    r = state.reshape(2, 2 ** n)
    return r @ r.conj().T


def von_neumann_entropy(rho: np.ndarray) -> float:
    """-trace(rho ln rho) with 0 * ln 0 := 0.

    Requires a Hermitian, unit-trace, positive-semidefinite input;
    eigenvalues below -1e-10 are rejected, small negatives are clamped.
    """
    rho = np.asarray(rho, dtype=complex)
    if not is_hermitian(rho, tol=1e-10):
        raise ValueError("density matrix must be Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-8:
        raise ValueError("density matrix must have unit trace")
    lam = np.linalg.eigvalsh(rho)
    if np.any(lam < -1e-10):
        raise ValueError(f"density matrix has negative eigenvalue {lam.min()}")
    lam = np.clip(lam, 0.0, 1.0)
    lam = lam[lam > 0.0]
    return float(-np.sum(lam * np.log(lam)))


def entropy_trace(spec: SystemSpec,
                  field: PiecewiseField) -> tuple[np.ndarray, np.ndarray]:
    """Qubit entropy along the evolution of the reference initial state.

    Returns (times, entropies), both of length steps + 1.
    """
    states = propagate_state(spec, field, initial_state(spec.n))
    entropies = np.empty(states.shape[0])
    for k, psi in enumerate(states):
        entropies[k] = von_neumann_entropy(reduced_density(psi, spec.n))
    return field.grid.times(), entropies
