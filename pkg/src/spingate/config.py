"""Run configuration: one YAML file describes system, grid, target,
optimizer stages, and ensemble settings.

Validation is strict: unknown keys are rejected and every error message
carries the dotted path of the offending entry.
"""
from __future__ import annotations

from dataclasses import dataclass, fields as dc_fields
from pathlib import Path

import numpy as np
import yaml

from .dynamics import MAX_GATE_DURATION, TimeGrid
from .ga import ENVELOPES, FieldBounds, GaConfig
from .gradient import GradConfig
from .measures import GateTarget, hadamard
from .model import SystemSpec, build_control_op, build_drift, default_spec
from .robustness import EnsembleConfig


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _require_keys(d: dict, allowed: set[str], path: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{path}.{sorted(unknown)[0]}", "unknown key")


_MISSING = object()


def _get(d: dict, key: str, path: str, kind, default=_MISSING):
    if key not in d:
        if default is _MISSING:
            raise ConfigError(f"{path}.{key}", "required key is missing")
        return default
    value = d[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ConfigError(f"{path}.{key}",
                          f"expected {kind.__name__}, got {type(value).__name__}")
    return value


@dataclass(frozen=True)
class SystemBlock:
    n: int
    gamma: float
    gamma_prime: float = 0.0
    mu: float = 1.0
    frequencies: tuple | None = None

    @classmethod
    def from_dict(cls, d: dict, path: str = "system") -> "SystemBlock":
        _require_keys(d, {"n", "gamma", "gamma_prime", "mu", "frequencies"},
                      path)
        freqs = d.get("frequencies")
        if freqs is not None:
            if (not isinstance(freqs, list)
                    or not all(isinstance(f, (int, float)) for f in freqs)):
                raise ConfigError(f"{path}.frequencies",
                                  "expected a list of numbers")
            freqs = tuple(float(f) for f in freqs)
        return cls(n=_get(d, "n", path, int),
                   gamma=_get(d, "gamma", path, float),
                   gamma_prime=_get(d, "gamma_prime", path, float, 0.0),
                   mu=_get(d, "mu", path, float, 1.0),
                   frequencies=freqs)

    def build(self, path: str = "system") -> SystemSpec:
        try:
            spec = default_spec(self.n, self.gamma, self.gamma_prime,
                                mu=self.mu)
            if self.frequencies is not None:
                omegas = np.array(self.frequencies, dtype=float)
                spec = SystemSpec(n=self.n, omegas=omegas,
                                  couplings=spec.couplings, mu=self.mu)
            return spec
        except ValueError as err:
            raise ConfigError(path, str(err)) from None


@dataclass(frozen=True)
class GridBlock:
    t_f: float
    steps: int | None = None  # None -> smallest count keeping dt <= 0.05

    @classmethod
    def from_dict(cls, d: dict, path: str = "grid") -> "GridBlock":
        _require_keys(d, {"t_f", "steps"}, path)
        return cls(t_f=_get(d, "t_f", path, float),
                   steps=_get(d, "steps", path, int, None))

    def build(self, path: str = "grid") -> TimeGrid:
        if not 0 < self.t_f <= MAX_GATE_DURATION:
            raise ConfigError(f"{path}.t_f",
                              f"must be in (0, {MAX_GATE_DURATION}]")
        if self.steps is None:
            return TimeGrid.with_max_dt(self.t_f)
        try:
            return TimeGrid(t_f=self.t_f, steps=self.steps)
        except ValueError as err:
            raise ConfigError(f"{path}.steps", str(err)) from None


@dataclass(frozen=True)
class TargetBlock:
    gate: str = "hadamard"
    matrix: tuple | None = None

    @classmethod
    def from_dict(cls, d: dict, path: str = "target") -> "TargetBlock":
        _require_keys(d, {"gate", "matrix"}, path)
        matrix = d.get("matrix")
        if matrix is not None:
            matrix = tuple(tuple(row) for row in matrix)
        return cls(gate=_get(d, "gate", path, str, "hadamard"), matrix=matrix)

    def build(self, path: str = "target") -> GateTarget:
        if self.matrix is not None:
            try:
                m = np.array([[complex(v) for v in row] for row in self.matrix])
                return GateTarget(matrix=m, name=self.gate)
            except ValueError as err:
                raise ConfigError(f"{path}.matrix", str(err)) from None
        if self.gate == "hadamard":
            return hadamard()
        if self.gate == "identity":
            return GateTarget(matrix=np.eye(2, dtype=complex), name="identity")
        raise ConfigError(f"{path}.gate",
                          f"unknown gate {self.gate!r} and no matrix given")


def _dataclass_from_dict(cls, d: dict, path: str):
    names = {f.name for f in dc_fields(cls)}
    _require_keys(d, names, path)
    try:
        return cls(**d)
    except (TypeError, ValueError) as err:
        raise ConfigError(path, str(err)) from None


@dataclass(frozen=True)
class OptimizerBlock:
    stages: tuple[str, ...]
    ga: GaConfig
    gradient: GradConfig
    bounds: FieldBounds

    @classmethod
    def from_dict(cls, d: dict, path: str = "optimizer") -> "OptimizerBlock":
        _require_keys(d, {"stages", "ga", "gradient", "bounds"}, path)
        stages = d.get("stages", ["ga", "gradient"])
        if (not isinstance(stages, list) or not stages
                or any(s not in ("ga", "gradient") for s in stages)):
            raise ConfigError(f"{path}.stages",
                              "must be a non-empty list drawn from "
                              "['ga', 'gradient']")
        if "seed" in d.get("ga", {}):
            raise ConfigError(f"{path}.ga.seed",
                              "set the top-level seed instead")
        ga = _dataclass_from_dict(GaConfig, d.get("ga", {}), f"{path}.ga")
        grad = _dataclass_from_dict(GradConfig, d.get("gradient", {}),
                                    f"{path}.gradient")
        bounds = _dataclass_from_dict(FieldBounds, d.get("bounds", {}),
                                      f"{path}.bounds")
        return cls(stages=tuple(stages), ga=ga, gradient=grad, bounds=bounds)


@dataclass(frozen=True)
class EnsembleBlock:
    size: int = 1000
    gamma_mean: float = 0.02
    gamma_sd: float | None = None
    ratio: float = 0.0
    bins: int = 40

    @classmethod
    def from_dict(cls, d: dict, path: str = "ensemble") -> "EnsembleBlock":
        _require_keys(d, {"size", "gamma_mean", "gamma_sd", "ratio", "bins"},
                      path)
        block = cls(size=_get(d, "size", path, int, 1000),
                    gamma_mean=_get(d, "gamma_mean", path, float, 0.02),
                    gamma_sd=_get(d, "gamma_sd", path, float, None),
                    ratio=_get(d, "ratio", path, float, 0.0),
                    bins=_get(d, "bins", path, int, 40))
        if block.bins < 1:
            raise ConfigError(f"{path}.bins", "must be >= 1")
        return block

    def build(self, seed: int, path: str = "ensemble") -> EnsembleConfig:
        try:
            return EnsembleConfig(size=self.size, gamma_mean=self.gamma_mean,
                                  gamma_sd=self.gamma_sd, ratio=self.ratio,
                                  seed=seed)
        except ValueError as err:
            raise ConfigError(path, str(err)) from None


@dataclass(frozen=True)
class RunConfig:
    system: SystemBlock
    grid: GridBlock
    target: TargetBlock
    optimizer: OptimizerBlock
    ensemble: EnsembleBlock
    seed: int = 0
    envelope: str = "sin2"

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("<root>", "config must be a mapping")
        _require_keys(d, {"system", "grid", "target", "optimizer", "ensemble",
                          "seed", "envelope"}, "<root>")
        if "system" not in d:
            raise ConfigError("system", "required block is missing")
        if "grid" not in d:
            raise ConfigError("grid", "required block is missing")
        seed = _get(d, "seed", "<root>", int, 0)
        envelope = _get(d, "envelope", "<root>", str, "sin2")
        if envelope not in ENVELOPES:
            raise ConfigError("envelope",
                              f"unknown envelope {envelope!r}; choose from "
                              f"{sorted(ENVELOPES)}")
        cfg = cls(
            system=SystemBlock.from_dict(d["system"]),
            grid=GridBlock.from_dict(d["grid"]),
            target=TargetBlock.from_dict(d.get("target", {})),
            optimizer=OptimizerBlock.from_dict(d.get("optimizer", {})),
            ensemble=EnsembleBlock.from_dict(d.get("ensemble", {})),
            seed=seed,
            envelope=envelope,
        )
        cfg.resolve()  # validate eagerly, before any command runs
        return cfg

    def resolve(self):
        """(spec, grid, target) with the grid resolution guard applied."""
        spec = self.system.build()
        grid = self.grid.build()
        target = self.target.build()
        # dt * ||H||_2 <= 0.5 with the field at the amplitude bound
        hmax = (np.linalg.norm(build_drift(spec), 2)
                + self.optimizer.bounds.amp_max
                * np.linalg.norm(build_control_op(spec), 2))
        if grid.dt * hmax > 0.5:
            raise ConfigError(
                "grid.steps",
                f"dt={grid.dt:.4g} too coarse: dt * ||H|| = "
                f"{grid.dt * hmax:.3g} exceeds 0.5")
        return spec, grid, target

    def to_dict(self) -> dict:
        d = {
            "system": {"n": self.system.n, "gamma": self.system.gamma,
                       "gamma_prime": self.system.gamma_prime,
                       "mu": self.system.mu},
            "grid": {"t_f": self.grid.t_f, "steps": self.grid.steps},
            "target": {"gate": self.target.gate},
            "optimizer": {
                "stages": list(self.optimizer.stages),
                # the GA seed is injected from the top-level seed at run time
                "ga": {k: v for k, v in vars(self.optimizer.ga).items()
                       if k != "seed"},
                "gradient": vars(self.optimizer.gradient).copy(),
                "bounds": vars(self.optimizer.bounds).copy(),
            },
            "ensemble": {"size": self.ensemble.size,
                         "gamma_mean": self.ensemble.gamma_mean,
                         "gamma_sd": self.ensemble.gamma_sd,
                         "ratio": self.ensemble.ratio,
                         "bins": self.ensemble.bins},
            "seed": self.seed,
            "envelope": self.envelope,
        }
        if self.system.frequencies is not None:
            d["system"]["frequencies"] = list(self.system.frequencies)
        if self.target.matrix is not None:
            d["target"]["matrix"] = [[str(v) for v in row]
                                     for row in self.target.matrix]
        return d


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ConfigError("<root>", f"invalid YAML: {err}") from None
    return RunConfig.from_dict(raw)
