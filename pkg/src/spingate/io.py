"""Deterministic file output and field/trajectory (de)serialization.

JSON artifacts are written with sorted keys and no timestamps, so re-running
a command with the same config and seed reproduces them byte for byte.
CSV files carry a header row and full-double-precision scientific notation.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dynamics import PiecewiseField, TimeGrid, UnitaryTrajectory


class GridMismatchError(ValueError):
    """A field file does not match the configured time grid."""


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17e}"


def write_json(path, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    Path(path).write_text(text + "\n")


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def save_field(path, field: PiecewiseField) -> None:
    """Field CSV: one row per step, columns (t, control) with t the interval
    midpoint."""
    write_csv(path, ["t", "control"],
              zip(field.grid.midpoints(), field.values))


def load_field(path, grid: TimeGrid) -> PiecewiseField:
    """Read a field CSV and check it against ``grid`` (same step count and
    midpoints to 1e-9)."""
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0].split(",")[:2] != ["t", "control"]:
        raise GridMismatchError(f"{path}: not a field file (bad header)")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    if data.shape[0] != grid.steps:
        raise GridMismatchError(
            f"{path}: {data.shape[0]} steps, grid expects {grid.steps}")
    if np.max(np.abs(data[:, 0] - grid.midpoints())) > 1e-9:
        raise GridMismatchError(f"{path}: sample times do not match the grid")
    return PiecewiseField(grid=grid, values=data[:, 1])


def save_trajectory(path, traj: UnitaryTrajectory) -> None:
    """Write a full trajectory; ``.npz`` stores arrays, anything else gets a
    CSV with one row per grid point: t then the flattened matrix as
    re/im column pairs."""
    if traj.unitaries is None:
        raise ValueError("trajectory was propagated without keep_trajectory")
    path = Path(path)
    times = traj.grid.times()
    if path.suffix == ".npz":
        np.savez(path, times=times, unitaries=traj.unitaries)
        return
    d = traj.unitaries.shape[-1]
    header = ["t"]
    for i in range(d):
        for j in range(d):
            header += [f"u{i}{j}_re", f"u{i}{j}_im"]
    rows = []
    for t, u in zip(times, traj.unitaries):
        flat = u.ravel()
        row = [t]
        for z in flat:
            row += [z.real, z.imag]
        rows.append(row)
    write_csv(path, header, rows)


def save_entropy_trace(path, times: np.ndarray, controlled: np.ndarray,
                       uncontrolled: np.ndarray) -> None:
    write_csv(path, ["t", "s_controlled", "s_uncontrolled"],
              zip(times, controlled, uncontrolled))


def save_histogram(path, edges: np.ndarray, counts: np.ndarray) -> None:
    write_csv(path, ["bin_left", "bin_right", "count"],
              zip(edges[:-1], edges[1:], counts))
