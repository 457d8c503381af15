"""Operator algebra for a qubit plus n environmental spin-1/2 particles.

Composite-basis convention used throughout the package: the qubit occupies
tensor slot 0 (leftmost, most significant), so a composite basis index is
qubit_index * 2**n + environment_index.  The local S_z eigenbasis is
|+> = (1, 0) and |-> = (0, 1), matching S_z = diag(+1/2, -1/2).
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from numpy import kron  # noqa: F401  (re-exported; standard Kronecker product)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

_PAULI = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}
for _m in (SIGMA_X, SIGMA_Y, SIGMA_Z, IDENTITY_2):
    _m.setflags(write=False)


def spin_operator(axis: str) -> np.ndarray:
    """Single-particle spin-1/2 operator S_axis = sigma_axis / 2."""
    try:
        return _PAULI[axis] / 2.0
    except KeyError:
        raise ValueError(f"axis must be one of 'x', 'y', 'z', got {axis!r}") from None


def embed_spin_op(axis: str, particle: int, n: int) -> np.ndarray:
    """Spin operator of one particle embedded in the (n+1)-particle space.

    Returns I x ... x (sigma_axis/2) x ... x I with the half-Pauli at tensor
    slot ``particle`` (slot 0 = qubit = leftmost factor).  Result has
    dimension 2**(n+1).
    """
    if not 0 <= particle <= n:
        raise ValueError(f"particle index {particle} out of range for n={n}")
    op = spin_operator(axis)
    out = np.array([[1.0]], dtype=complex)
    for slot in range(n + 1):
        out = np.kron(out, op if slot == particle else IDENTITY_2)
    return out


def _local_vector(label) -> np.ndarray:
    if label in ("+", 1, +1):
        return np.array([1.0, 0.0], dtype=complex)
    if label in ("-", -1):
        return np.array([0.0, 1.0], dtype=complex)
    raise ValueError(f"basis label must be '+'/'-' (or +1/-1), got {label!r}")


def basis_state(labels: str | Sequence) -> np.ndarray:
    """Tensor product of local S_z eigenvectors, one label per particle.

    ``labels`` is a string like "-++" or a sequence of '+'/'-'/+1/-1, with
    the first entry at slot 0 (the qubit).
    """
    if len(labels) == 0:
        raise ValueError("at least one particle label is required")
    out = np.array([1.0], dtype=complex)
    for label in labels:
        out = np.kron(out, _local_vector(label))
    return out


def is_hermitian(a: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(a - a.conj().T)) <= tol)


def is_unitary(a: np.ndarray, tol: float = 1e-10) -> bool:
    d = a.shape[0]
    return bool(np.linalg.norm(a.conj().T @ a - np.eye(d)) <= tol)
