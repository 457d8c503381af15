"""System description and Hamiltonian assembly.

The controlled system is one driven qubit exchange-coupled to n two-level
environmental particles:

    H(c) = sum_i omega_i S_iz  -  c * mu * S_0x  -  sum_{i<j} gamma_ij S_i . S_j

in units where the qubit frequency omega_0 = 1 (one free-evolution period
is 2*pi).  Couplings are isotropic Heisenberg exchange.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import embed_spin_op

# Transition frequencies of the environmental particles, in units of the
# qubit frequency.  Close to (but distinct from) 1 to enhance the
# qubit-environment interaction.
ENVIRONMENT_FREQUENCIES = (0.99841, 1.00159, 0.96007, 1.04159, 0.87597, 1.14159)

# Exact dynamics plus iterative optimization become intractable beyond this.
MAX_ENVIRONMENT_PARTICLES = 6


@dataclass(frozen=True)
class CouplingRule:
    """Uniform coupling pattern: gamma between the qubit and every
    environmental particle, gamma_prime between every environment pair."""

    gamma: float
    gamma_prime: float = 0.0

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")

    def matrix(self, n: int) -> np.ndarray:
        """Symmetric (n+1) x (n+1) coupling matrix with zero diagonal."""
        g = np.zeros((n + 1, n + 1))
        g[0, 1:] = g[1:, 0] = self.gamma
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                g[i, j] = g[j, i] = self.gamma_prime
        return g


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """Immutable description of the composite system.

    n          -- number of environmental particles (0..6)
    omegas     -- n+1 transition frequencies (qubit first), units of omega_0
    mu         -- dipole moment multiplying the control field (default 1)
    couplings  -- symmetric (n+1) x (n+1) exchange matrix, zero diagonal
    """

    n: int
    omegas: np.ndarray
    couplings: np.ndarray
    mu: float = 1.0

    def __post_init__(self):
        if not 0 <= self.n <= MAX_ENVIRONMENT_PARTICLES:
            raise ValueError(
                f"n must be in 0..{MAX_ENVIRONMENT_PARTICLES}, got {self.n}")
        omegas = np.asarray(self.omegas, dtype=float)
        couplings = np.asarray(self.couplings, dtype=float)
        if omegas.shape != (self.n + 1,):
            raise ValueError(f"omegas must have shape ({self.n + 1},)")
        if np.any(omegas <= 0):
            raise ValueError("omegas must be strictly positive")
        if couplings.shape != (self.n + 1, self.n + 1):
            raise ValueError(f"couplings must be ({self.n + 1}, {self.n + 1})")
        if not np.all(np.isfinite(couplings)):
            raise ValueError("couplings must be finite")
        if np.any(couplings != couplings.T):
            raise ValueError("couplings must be symmetric")
        if np.any(np.diag(couplings) != 0):
            raise ValueError("couplings must have zero diagonal")
        omegas.setflags(write=False)
        couplings.setflags(write=False)
        object.__setattr__(self, "omegas", omegas)
        object.__setattr__(self, "couplings", couplings)

    @property
    def dim(self) -> int:
        return 2 ** (self.n + 1)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "omegas": [float(w) for w in self.omegas],
            "mu": float(self.mu),
            "couplings": [[float(g) for g in row] for row in self.couplings],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SystemSpec":
        return cls(n=int(d["n"]), omegas=np.array(d["omegas"], dtype=float),
                   couplings=np.array(d["couplings"], dtype=float),
                   mu=float(d.get("mu", 1.0)))


def default_spec(n: int, gamma: float, gamma_prime: float = 0.0,
                 mu: float = 1.0) -> SystemSpec:
    """System with the canonical frequency set and uniform couplings."""
    if not 0 <= n <= MAX_ENVIRONMENT_PARTICLES:
        raise ValueError(
            f"n must be in 0..{MAX_ENVIRONMENT_PARTICLES}, got {n}")
    omegas = np.array((1.0,) + ENVIRONMENT_FREQUENCIES[:n])
    return SystemSpec(n=n, omegas=omegas,
                      couplings=CouplingRule(gamma, gamma_prime).matrix(n),
                      mu=mu)


def free_precession(spec: SystemSpec) -> np.ndarray:
    """Sum of the single-particle precession terms omega_i * S_iz."""
    n = spec.n
    h = np.zeros((spec.dim, spec.dim), dtype=complex)
    for i in range(n + 1):
        h += spec.omegas[i] * embed_spin_op("z", i, n)
    return h


def pair_order(n: int) -> list[tuple[int, int]]:
    """Upper-triangle pair ordering (0,1)..(0,n), (1,2)..(n-1,n)."""
    return [(i, j) for i in range(n + 1) for j in range(i + 1, n + 1)]


def exchange_pair_ops(n: int) -> np.ndarray:
    """Isotropic exchange operators S_i . S_j for every pair, stacked in
    ``pair_order`` order; shape (n*(n+1)/2, d, d)."""
    d = 2 ** (n + 1)
    pairs = pair_order(n)
    out = np.zeros((len(pairs), d, d), dtype=complex)
    for k, (i, j) in enumerate(pairs):
        for axis in "xyz":
            out[k] += embed_spin_op(axis, i, n) @ embed_spin_op(axis, j, n)
    return out


def build_drift(spec: SystemSpec) -> np.ndarray:
    """Field-free Hamiltonian: free precession minus exchange couplings."""
    h = free_precession(spec)
    gammas = np.array([spec.couplings[i, j] for i, j in pair_order(spec.n)])
    if np.any(gammas != 0.0):
        h = h - np.einsum("p,pij->ij", gammas, exchange_pair_ops(spec.n))
    return h


def build_control_op(spec: SystemSpec) -> np.ndarray:
    """Control operator mu * S_0x; enters the Hamiltonian as -c(t) * mu * S_0x."""
    return spec.mu * embed_spin_op("x", 0, spec.n)


def hamiltonian_at(spec: SystemSpec, c: float) -> np.ndarray:
    """Full Hamiltonian at control value c."""
    return build_drift(spec) - c * build_control_op(spec)


@dataclass(frozen=True)
class LieClosure:
    """Result of the Lie-algebra rank iteration.

    ``closed`` distinguishes a genuinely closed algebra from one that was
    still growing when ``max_depth`` was reached.
    """

    dim: int
    closed: bool
    depth: int


def _vectorize(a: np.ndarray) -> np.ndarray:
    return np.concatenate([a.real.ravel(), a.imag.ravel()])


def controllability_dim(spec: SystemSpec, max_depth: int = 16) -> LieClosure:
    """Dimension of the real Lie algebra generated by the drift and control.

    Generates repeated commutators of {i*H_drift, i*mu*S_0x}, tracking the
    dimension of their real span over anti-Hermitian matrices until the
    algebra closes or ``max_depth`` bracket levels have been taken.  The
    system is completely controllable up to a global phase iff
    dim >= 4**(n+1) - 1.  Restricted to n <= 2: the workspace grows as
    16**(n+1).
    """
    if spec.n > 2:
        raise ValueError("controllability check is limited to n <= 2")
    d = spec.dim
    max_dim = d * d  # su(d) + identity direction; generators here are traceless
    generators = [1j * build_drift(spec), 1j * build_control_op(spec)]

    basis_mats: list[np.ndarray] = []
    basis_vecs: list[np.ndarray] = []

    def try_add(a: np.ndarray) -> bool:
        norm = np.linalg.norm(a)
        if norm < 1e-14:
            return False
        v = _vectorize(a / norm)
        for u in basis_vecs:  # modified Gram-Schmidt, two passes
            v -= np.dot(u, v) * u
        for u in basis_vecs:
            v -= np.dot(u, v) * u
        residual = np.linalg.norm(v)
        if residual <= 1e-10:
            return False
        basis_vecs.append(v / residual)
        basis_mats.append(a / norm)
        return True

    frontier = [g for g in generators if try_add(g)]
    depth = 0
    while frontier and depth < max_depth and len(basis_vecs) < max_dim:
        depth += 1
        new: list[np.ndarray] = []
        for a in frontier:
            for b in list(basis_mats):
                comm = a @ b - b @ a
                if try_add(comm):
                    new.append(basis_mats[-1])
        frontier = new
    closed = not frontier or len(basis_vecs) >= max_dim
    return LieClosure(dim=len(basis_vecs), closed=closed, depth=depth)


def is_fully_controllable(spec: SystemSpec, max_depth: int = 16) -> bool:
    """True iff the algebra closes at full dimension (global phase excluded)."""
    closure = controllability_dim(spec, max_depth=max_depth)
    if not closure.closed:
        raise RuntimeError(
            f"Lie closure did not converge within depth {max_depth}")
    return closure.dim >= 4 ** (spec.n + 1) - 1
