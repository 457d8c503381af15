"""Exact propagation of the composite system under piecewise-constant control.

Each time step applies the exact propagator exp(-i * H_k * dt) obtained from
a spectral decomposition of the (Hermitian) step Hamiltonian, so unitarity
holds to machine precision and the discrete objective has an exact gradient.
The field value c_k applies on [t_k, t_{k+1}); synthesized analytic fields
are sampled at interval midpoints.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import is_hermitian
from .model import SystemSpec, build_control_op, build_drift

# Canonical runs keep the gate duration at or below one uncontrolled
# decoherence timescale; see the config validation in the CLI.
MAX_GATE_DURATION = 60.0

# Cap on the number of complex matrix entries held per eigh/matmul batch.
_BATCH_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of ``steps`` intervals on [0, t_f]."""

    t_f: float
    steps: int

    def __post_init__(self):
        if self.t_f <= 0:
            raise ValueError("t_f must be positive")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")

    @property
    def dt(self) -> float:
        return self.t_f / self.steps

    def times(self) -> np.ndarray:
        """Grid points t_0 .. t_M (length steps + 1)."""
        return np.linspace(0.0, self.t_f, self.steps + 1)

    def midpoints(self) -> np.ndarray:
        """Interval midpoints (length steps); sampling points for fields."""
        return (np.arange(self.steps) + 0.5) * self.dt

    @classmethod
    def with_max_dt(cls, t_f: float, dt_max: float = 0.05) -> "TimeGrid":
        return cls(t_f=t_f, steps=max(1, int(np.ceil(t_f / dt_max))))


@dataclass(frozen=True, eq=False)
class PiecewiseField:
    """Piecewise-constant control amplitudes c_k on a time grid."""

    grid: TimeGrid
    values: np.ndarray
    amplitude_bound: float | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.steps,):
            raise ValueError(
                f"values must have shape ({self.grid.steps},), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        if self.amplitude_bound is not None and np.any(
                np.abs(values) > self.amplitude_bound):
            raise ValueError(
                f"|values| exceed amplitude bound {self.amplitude_bound}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zero(cls, grid: TimeGrid) -> "PiecewiseField":
        return cls(grid=grid, values=np.zeros(grid.steps))

    @property
    def max_amplitude(self) -> float:
        return float(np.max(np.abs(self.values)))

    def fluence(self) -> float:
        """Time-integrated squared amplitude, sum_k c_k^2 * dt."""
        return float(np.sum(self.values ** 2) * self.grid.dt)

    def with_values(self, values: np.ndarray) -> "PiecewiseField":
        return PiecewiseField(grid=self.grid, values=values,
                              amplitude_bound=self.amplitude_bound)


@dataclass(frozen=True, eq=False)
class UnitaryTrajectory:
    """Propagators U(t_k) of one run; ``unitaries`` is None unless the full
    trajectory was requested."""

    grid: TimeGrid
    final: np.ndarray
    unitaries: np.ndarray | None = None

    def unitarity_defect(self) -> float:
        """Largest Frobenius deviation of U^dag U from the identity."""
        us = self.unitaries if self.unitaries is not None else self.final[None]
        d = us.shape[-1]
        eye = np.eye(d)
        return float(max(np.linalg.norm(u.conj().T @ u - eye) for u in us))


def step_propagator(h: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i * h * dt) for Hermitian h, via spectral decomposition."""
    if not is_hermitian(h, tol=1e-10):
        raise ValueError("step Hamiltonian must be Hermitian")
    lam, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * dt * lam)) @ v.conj().T


def _chunk(dim: int) -> int:
    return max(8, _BATCH_ELEMENTS // (dim * dim))


def _step_propagators(h0: np.ndarray, x: np.ndarray, values: np.ndarray,
                      dt: float, with_eig: bool = False):
    """Propagators (and optionally eigensystems) for a block of steps."""
    hs = h0[None, :, :] - values[:, None, None] * x[None, :, :]
    lam, v = np.linalg.eigh(hs)
    phases = np.exp(-1j * dt * lam)
    props = (v * phases[:, None, :]) @ v.conj().transpose(0, 2, 1)
    if with_eig:
        return props, lam, v
    return props


def propagate(spec: SystemSpec, field: PiecewiseField,
              keep_trajectory: bool = False) -> UnitaryTrajectory:
    """Evolve U(0) = I through every step of the field."""
    grid = field.grid
    h0 = build_drift(spec)
    x = build_control_op(spec)
    d = spec.dim
    u = np.eye(d, dtype=complex)
    traj = None
    if keep_trajectory:
        traj = np.empty((grid.steps + 1, d, d), dtype=complex)
        traj[0] = u
    chunk = _chunk(d)
    for start in range(0, grid.steps, chunk):
        stop = min(start + chunk, grid.steps)
        props = _step_propagators(h0, x, field.values[start:stop], grid.dt)
        for k in range(stop - start):
            u = props[k] @ u
            if keep_trajectory:
                traj[start + k + 1] = u
    return UnitaryTrajectory(grid=grid, final=u, unitaries=traj)


def _pairwise_product(props: np.ndarray) -> np.ndarray:
    """Ordered product P_{M-1} ... P_0 along the second-to-last batch axis."""
    a = props
    while a.shape[-3] > 1:
        if a.shape[-3] % 2:
            a = np.concatenate([a[..., 1:-1:2, :, :] @ a[..., 0:-1:2, :, :],
                                a[..., -1:, :, :]], axis=-3)
        else:
            a = a[..., 1::2, :, :] @ a[..., 0::2, :, :]
    return a[..., 0, :, :]


def propagate_batch(spec: SystemSpec, grid: TimeGrid,
                    values: np.ndarray) -> np.ndarray:
    """Final-time propagators for a batch of fields, shape (B, M) -> (B, d, d).

    Uses a pairwise product reduction, so the floating-point association
    differs from ``propagate`` by rounding only.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[1] != grid.steps:
        raise ValueError(f"values must have shape (B, {grid.steps})")
    h0 = build_drift(spec)
    x = build_control_op(spec)
    d = spec.dim
    nbatch = values.shape[0]
    out = np.empty((nbatch, d, d), dtype=complex)
    rows = max(1, _chunk(d) // grid.steps)
    for start in range(0, nbatch, rows):
        stop = min(start + rows, nbatch)
        block = values[start:stop]
        hs = h0[None, None] - block[:, :, None, None] * x[None, None]
        lam, v = np.linalg.eigh(hs)
        phases = np.exp(-1j * grid.dt * lam)
        props = (v * phases[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)
        out[start:stop] = _pairwise_product(props)
    return out


def propagate_drift_batch(h0s: np.ndarray, x: np.ndarray, grid: TimeGrid,
                          values: np.ndarray) -> np.ndarray:
    """Final-time propagators of one field across many drift Hamiltonians.

    ``h0s`` has shape (B, d, d); returns shape (B, d, d).  Used for
    ensemble evaluations where the couplings vary but the field does not.
    """
    h0s = np.asarray(h0s, dtype=complex)
    nbatch, d = h0s.shape[0], h0s.shape[-1]
    out = np.empty((nbatch, d, d), dtype=complex)
    rows = max(1, _chunk(d) // grid.steps)
    for start in range(0, nbatch, rows):
        stop = min(start + rows, nbatch)
        hs = h0s[start:stop, None] - values[None, :, None, None] * x[None, None]
        lam, v = np.linalg.eigh(hs)
        phases = np.exp(-1j * grid.dt * lam)
        props = (v * phases[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)
        out[start:stop] = _pairwise_product(props)
    return out


def propagate_state(spec: SystemSpec, field: PiecewiseField,
                    psi0: np.ndarray) -> np.ndarray:
    """State trajectory psi(t_k), shape (M+1, d), without storing unitaries."""
    grid = field.grid
    h0 = build_drift(spec)
    x = build_control_op(spec)
    d = spec.dim
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (d,):
        raise ValueError(f"state must have shape ({d},)")
    out = np.empty((grid.steps + 1, d), dtype=complex)
    out[0] = psi0
    chunk = _chunk(d)
    psi = psi0
    for start in range(0, grid.steps, chunk):
        stop = min(start + chunk, grid.steps)
        props = _step_propagators(h0, x, field.values[start:stop], grid.dt)
        for k in range(stop - start):
            psi = props[k] @ psi
            out[start + k + 1] = psi
    return out


def propagate_costate(spec: SystemSpec, field: PiecewiseField,
                      b_final: np.ndarray) -> np.ndarray:
    """Backward trajectory of the costate, B(t_k) = B(t_{k+1}) P_k.

    Integrates the time-reversed equation dB/dt = i B H from ``b_final`` at
    t_f, using the same per-step Hamiltonians as ``propagate``; equivalently
    B(t_k) = b_final U(t_f) U(t_k)^dag.  Returns shape (M+1, d, d).
    """
    grid = field.grid
    h0 = build_drift(spec)
    x = build_control_op(spec)
    d = spec.dim
    b_final = np.asarray(b_final, dtype=complex)
    if b_final.shape != (d, d):
        raise ValueError(f"b_final must have shape ({d}, {d})")
    out = np.empty((grid.steps + 1, d, d), dtype=complex)
    out[grid.steps] = b_final
    chunk = _chunk(d)
    for start in range(grid.steps, 0, -chunk):
        begin = max(0, start - chunk)
        props = _step_propagators(h0, x, field.values[begin:start], grid.dt)
        for k in range(start - 1, begin - 1, -1):
            out[k] = out[k + 1] @ props[k - begin]
    return out


def instantaneous_spectrum(spec: SystemSpec,
                           field: PiecewiseField) -> np.ndarray:
    """Eigenvalues of H(c_k) for every step, ascending; shape (M, d).

    Visualizes the control-induced (dynamic Stark) shifts of the levels.
    """
    h0 = build_drift(spec)
    x = build_control_op(spec)
    hs = h0[None] - field.values[:, None, None] * x[None]
    return np.linalg.eigvalsh(hs)
