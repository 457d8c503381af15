"""Monte Carlo robustness of a fixed control field to coupling variations.

Each ensemble member redraws every qubit-environment coupling from
Normal(gamma_mean, gamma_sd) and every environment-pair coupling from
Normal(ratio * gamma_mean, ratio * gamma_sd); couplings whose mean and
spread are both zero stay exactly zero.  Draws are keyed by
(seed, draw_index), so any evaluation schedule reproduces the same
ensemble.  Reported standard deviations are population (1/L) values.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import PiecewiseField, propagate_drift_batch
from .measures import (GateTarget, gate_distance, initial_state,
                       reduced_density, von_neumann_entropy)
from .model import (SystemSpec, build_control_op, exchange_pair_ops,
                    free_precession)

_DRAW_CHUNK = 128


@dataclass(frozen=True)
class EnsembleConfig:
    size: int
    gamma_mean: float = 0.02
    gamma_sd: float | None = None   # None -> gamma_mean / 8
    ratio: float = 0.0              # environment couplings: ratio * gamma_mean
    seed: int = 0

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("ensemble size must be >= 1")
        if self.gamma_sd is not None and self.gamma_sd < 0:
            raise ValueError("gamma_sd must be >= 0")
        if self.ratio < 0:
            raise ValueError("ratio must be >= 0")

    @property
    def qubit_sd(self) -> float:
        return self.gamma_mean / 8.0 if self.gamma_sd is None else self.gamma_sd

    @property
    def env_mean(self) -> float:
        return self.ratio * self.gamma_mean

    @property
    def env_sd(self) -> float:
        return self.ratio * self.qubit_sd

    def to_dict(self) -> dict:
        return {"size": self.size, "gamma_mean": self.gamma_mean,
                "gamma_sd": self.qubit_sd, "ratio": self.ratio,
                "seed": self.seed}


@dataclass(frozen=True, eq=False)
class EnsembleReport:
    """Per-draw results plus their population statistics.

    ``couplings`` holds each draw's upper-triangle coupling values in the
    order (0,1)..(0,n), (1,2)..(n-1,n).
    """

    couplings: np.ndarray   # (L, n*(n+1)/2)
    fidelities: np.ndarray  # (L,)
    entropies: np.ndarray   # (L,)
    f_mean: float
    f_sd: float
    s_mean: float
    s_sd: float

    def validate(self, tol: float = 1e-12) -> None:
        for got, values in ((self.f_mean, self.fidelities),
                            (self.s_mean, self.entropies)):
            mean, _ = mean_sd(values)
            if abs(mean - got) > tol:
                raise AssertionError("stored mean does not match samples")
        for got, values in ((self.f_sd, self.fidelities),
                            (self.s_sd, self.entropies)):
            _, sd = mean_sd(values)
            if abs(sd - got) > tol:
                raise AssertionError("stored sd does not match samples")

    def to_dict(self) -> dict:
        return {
            "f_mean": self.f_mean, "f_sd": self.f_sd,
            "s_mean": self.s_mean, "s_sd": self.s_sd,
            "couplings": [[float(g) for g in row] for row in self.couplings],
            "fidelities": [float(f) for f in self.fidelities],
            "entropies": [float(s) for s in self.entropies],
        }


def _draw_values(n: int, config: EnsembleConfig, draw_index: int) -> np.ndarray:
    """Upper-triangle coupling draws for one ensemble member."""
    rng = np.random.default_rng([config.seed, draw_index])
    out = np.empty(n * (n + 1) // 2)
    pos = 0
    for _ in range(n):  # qubit-environment couplings
        out[pos] = (config.gamma_mean if config.qubit_sd == 0.0
                    else rng.normal(config.gamma_mean, config.qubit_sd))
        pos += 1
    for _ in range(n * (n - 1) // 2):  # environment pairs
        if config.env_mean == 0.0 and config.env_sd == 0.0:
            out[pos] = 0.0  # zero couplings stay exactly zero
        else:
            out[pos] = rng.normal(config.env_mean, config.env_sd)
        pos += 1
    return out


def _couplings_matrix(n: int, flat: np.ndarray) -> np.ndarray:
    g = np.zeros((n + 1, n + 1))
    pos = 0
    for j in range(1, n + 1):
        g[0, j] = g[j, 0] = flat[pos]
        pos += 1
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            g[i, j] = g[j, i] = flat[pos]
            pos += 1
    return g


def sample_couplings(base: SystemSpec, config: EnsembleConfig,
                     draw_index: int) -> SystemSpec:
    """One ensemble member: ``base`` with redrawn coupling strengths."""
    flat = _draw_values(base.n, config, draw_index)
    return SystemSpec(n=base.n, omegas=base.omegas,
                      couplings=_couplings_matrix(base.n, flat), mu=base.mu)


def mean_sd(values) -> tuple[float, float]:
    """Mean and population (1/L) standard deviation."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("statistics of an empty sequence are undefined")
    mean = float(values.mean())
    return mean, float(np.sqrt(np.mean((values - mean) ** 2)))


def histogram(values, bins: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform-bin histogram spanning [min, max]; counts sum to len(values)."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins)
    return edges, counts


def _evaluate_chunk(field: PiecewiseField, base: SystemSpec,
                    target: GateTarget, config: EnsembleConfig,
                    start: int, stop: int):
    n = base.n
    flats = np.array([_draw_values(n, config, p) for p in range(start, stop)])
    # the drift varies across draws only through the coupling coefficients
    free = free_precession(base)
    pairs = exchange_pair_ops(n)
    h0s = free[None] - np.einsum("bp,pij->bij", flats, pairs)
    finals = propagate_drift_batch(h0s, build_control_op(base), field.grid,
                                   field.values)
    psi0 = initial_state(n)
    fids = np.empty(stop - start)
    ents = np.empty(stop - start)
    for k, u_final in enumerate(finals):
        fids[k] = gate_distance(u_final, target, n).fidelity
        ents[k] = von_neumann_entropy(reduced_density(u_final @ psi0, n))
    return flats, fids, ents


def evaluate_ensemble(field: PiecewiseField, base: SystemSpec,
                      target: GateTarget, config: EnsembleConfig,
                      workers: int = 1) -> EnsembleReport:
    """Propagate the fixed field through every drawn system and aggregate
    fidelity and final-time entropy statistics."""
    ranges = [(s, min(s + _DRAW_CHUNK, config.size))
              for s in range(0, config.size, _DRAW_CHUNK)]
    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pieces = list(pool.map(
                lambda r: _evaluate_chunk(field, base, target, config, *r),
                ranges))
    else:
        pieces = [_evaluate_chunk(field, base, target, config, *r)
                  for r in ranges]
    couplings = np.concatenate([p[0] for p in pieces])
    fidelities = np.concatenate([p[1] for p in pieces])
    entropies = np.concatenate([p[2] for p in pieces])
    f_mean, f_sd = mean_sd(fidelities)
    s_mean, s_sd = mean_sd(entropies)
    return EnsembleReport(couplings=couplings, fidelities=fidelities,
                          entropies=entropies, f_mean=f_mean, f_sd=f_sd,
                          s_mean=s_mean, s_sd=s_sd)
