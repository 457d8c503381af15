"""Genetic-algorithm search over spectrally parameterized control fields.

A field is a sum of cosine components under a smooth envelope,

    C(t) = f(t) * sum_l  A_l * cos(w_l * t + theta_l),

and an individual's genome is the flat list of (A_l, w_l, theta_l).  Fitness
is the gate fidelity after exact propagation.  Every random decision is
drawn from a generator seeded by (seed, generation, slot), so results are
independent of evaluation order or batching.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import PiecewiseField, TimeGrid, propagate_batch
from .measures import GateTarget, gate_distance
from .model import SystemSpec


def _envelope_sin2(t: np.ndarray, t_f: float) -> np.ndarray:
    return np.sin(np.pi * t / t_f) ** 2


def _envelope_flat(t: np.ndarray, t_f: float) -> np.ndarray:
    return np.ones_like(t)


# sin2 keeps C(0) = C(t_f) = 0 so pulses switch on and off smoothly
ENVELOPES = {"sin2": _envelope_sin2, "flat": _envelope_flat}


@dataclass(frozen=True)
class FieldComponent:
    amplitude: float
    frequency: float
    phase: float


@dataclass(frozen=True, eq=False)
class ParamField:
    """Envelope times a sum of cosine components, tied to a time grid."""

    components: tuple[FieldComponent, ...]
    envelope: str
    grid: TimeGrid

    def __post_init__(self):
        if len(self.components) < 1:
            raise ValueError("at least one spectral component is required")
        if self.envelope not in ENVELOPES:
            raise ValueError(f"unknown envelope {self.envelope!r}; "
                             f"choose from {sorted(ENVELOPES)}")
        for c in self.components:
            if c.frequency <= 0:
                raise ValueError("component frequencies must be positive")

    def sample(self, t: np.ndarray) -> np.ndarray:
        env = ENVELOPES[self.envelope](t, self.grid.t_f)
        total = np.zeros_like(t)
        for c in self.components:
            total += c.amplitude * np.cos(c.frequency * t + c.phase)
        return env * total

    def to_dict(self) -> dict:
        return {
            "envelope": self.envelope,
            "grid": {"t_f": self.grid.t_f, "steps": self.grid.steps},
            "components": [
                {"amplitude": c.amplitude, "frequency": c.frequency,
                 "phase": c.phase} for c in self.components],
        }


def synthesize(pf: ParamField) -> PiecewiseField:
    """Sample the analytic field at interval midpoints onto its grid."""
    return PiecewiseField(grid=pf.grid, values=pf.sample(pf.grid.midpoints()))


@dataclass(frozen=True)
class FieldBounds:
    """Per-gene bounds: amplitudes in [0, amp_max], frequencies in
    [freq_min, freq_max] (a band around the qubit resonance), phases in
    [0, 2*pi)."""

    amp_max: float = 4.0
    freq_min: float = 0.5
    freq_max: float = 2.0

    def __post_init__(self):
        if self.amp_max <= 0 or self.freq_min <= 0:
            raise ValueError("bounds must be positive")
        if self.freq_max <= self.freq_min:
            raise ValueError("freq_max must exceed freq_min")

    def low(self) -> np.ndarray:
        return np.array([0.0, self.freq_min, 0.0])

    def high(self) -> np.ndarray:
        return np.array([self.amp_max, self.freq_max, 2.0 * np.pi])


@dataclass(frozen=True)
class GaConfig:
    population: int = 250
    generations: int = 100
    tournament_size: int = 3
    crossover_rate: float = 0.9
    mutation_rate: float = 0.15
    mutation_scale: float = 0.2
    mutation_decay: float = 0.985
    elitism: int = 2
    components: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        for name in ("crossover_rate", "mutation_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.mutation_scale < 0:
            raise ValueError("mutation_scale must be >= 0")
        if not 0.0 < self.mutation_decay <= 1.0:
            raise ValueError("mutation_decay must be in (0, 1]")
        if not 0 <= self.elitism < self.population:
            raise ValueError("elitism must be in [0, population)")
        if self.components < 1:
            raise ValueError("components must be >= 1")


@dataclass(frozen=True, eq=False)
class GaResult:
    best: ParamField
    best_fidelity: float
    history: np.ndarray  # best population fidelity per generation, length generations + 1


def _genome_to_field(genome: np.ndarray, envelope: str,
                     grid: TimeGrid) -> ParamField:
    comps = tuple(FieldComponent(amplitude=float(a), frequency=float(w),
                                 phase=float(p)) for a, w, p in genome)
    return ParamField(components=comps, envelope=envelope, grid=grid)


def _fitness(spec: SystemSpec, target: GateTarget, grid: TimeGrid,
             envelope: str, genomes: np.ndarray) -> np.ndarray:
    tmid = grid.midpoints()
    env = ENVELOPES[envelope](tmid, grid.t_f)
    amp, freq, phase = genomes[:, :, 0], genomes[:, :, 1], genomes[:, :, 2]
    fields = env[None, :] * np.einsum(
        "bl,blt->bt", amp,
        np.cos(freq[:, :, None] * tmid[None, None, :] + phase[:, :, None]))
    finals = propagate_batch(spec, grid, fields)
    return np.array([gate_distance(u, target, spec.n).fidelity
                     for u in finals])


def ga_optimize(spec: SystemSpec, target: GateTarget, grid: TimeGrid,
                config: GaConfig, bounds: FieldBounds = FieldBounds(),
                envelope: str = "sin2") -> GaResult:
    """Evolve field genomes toward maximum gate fidelity.

    Tournament selection, uniform crossover, per-gene Gaussian mutation
    (width ``mutation_scale`` times the gene range, annealed by
    ``mutation_decay`` each generation), and elitism.  With elitism >= 1 the
    per-generation best-fitness history is nondecreasing.
    """
    if envelope not in ENVELOPES:
        raise ValueError(f"unknown envelope {envelope!r}")
    pop, ncomp = config.population, config.components
    lo, hi = bounds.low(), bounds.high()

    genomes = np.empty((pop, ncomp, 3))
    for i in range(pop):
        rng = np.random.default_rng([config.seed, 0, i])
        genomes[i] = rng.uniform(lo, hi, (ncomp, 3))
    fitness = _fitness(spec, target, grid, envelope, genomes)
    history = [float(fitness.max())]

    for gen in range(config.generations):
        scale = config.mutation_scale * (hi - lo) * config.mutation_decay ** gen
        order = np.argsort(-fitness, kind="stable")
        offspring = np.empty_like(genomes)
        offspring[:config.elitism] = genomes[order[:config.elitism]]
        for slot in range(config.elitism, pop):
            rng = np.random.default_rng([config.seed, gen + 1, slot])
            picks = rng.integers(0, pop, config.tournament_size)
            parent_a = picks[np.argmax(fitness[picks])]
            picks = rng.integers(0, pop, config.tournament_size)
            parent_b = picks[np.argmax(fitness[picks])]
            child = genomes[parent_a].copy()
            if rng.random() < config.crossover_rate:
                take = rng.random((ncomp, 3)) < 0.5
                child[take] = genomes[parent_b][take]
            mutate = rng.random((ncomp, 3)) < config.mutation_rate
            child += np.where(mutate, rng.normal(0.0, 1.0, (ncomp, 3)) * scale,
                              0.0)
            offspring[slot] = np.clip(child, lo, hi)
        genomes = offspring
        fitness = _fitness(spec, target, grid, envelope, genomes)
        history.append(float(fitness.max()))

    best_idx = int(np.argmax(fitness))
    return GaResult(best=_genome_to_field(genomes[best_idx], envelope, grid),
                    best_fidelity=float(fitness[best_idx]),
                    history=np.array(history))
