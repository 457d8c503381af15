"""spingate: exact simulation and optimal control of a single qubit coupled
to a small bath of two-level particles.

The package builds the composite-system Hamiltonian, propagates it exactly
under piecewise-constant control fields, measures gate quality with an
environment-minimized distance (and qubit decoherence with the von Neumann
entropy), and shapes pulses with a genetic algorithm chained into an
adjoint-gradient refinement.  A Monte Carlo layer quantifies robustness to
randomly varied coupling strengths.
"""
from .dynamics import (PiecewiseField, TimeGrid, UnitaryTrajectory,
                       instantaneous_spectrum, propagate, propagate_batch,
                       propagate_costate, propagate_state, step_propagator)
from .ga import (ENVELOPES, FieldBounds, FieldComponent, GaConfig, GaResult,
                 ParamField, ga_optimize, synthesize)
from .gradient import (GradConfig, OptimReport, objective, objective_gradient,
                       optimize)
from .hilbert import basis_state, embed_spin_op, kron
from .measures import (DistanceResult, GateTarget, entropy_trace,
                       gate_distance, gate_distance_bruteforce, hadamard,
                       initial_state, overlap_matrix, reduced_density,
                       von_neumann_entropy)
from .model import (ENVIRONMENT_FREQUENCIES, CouplingRule, LieClosure,
                    SystemSpec, build_control_op, build_drift,
                    controllability_dim, default_spec, hamiltonian_at,
                    is_fully_controllable)
from .robustness import (EnsembleConfig, EnsembleReport, evaluate_ensemble,
                         histogram, mean_sd, sample_couplings)

__all__ = [
    "CouplingRule", "DistanceResult", "ENVELOPES", "ENVIRONMENT_FREQUENCIES",
    "EnsembleConfig", "EnsembleReport", "FieldBounds", "FieldComponent",
    "GaConfig", "GaResult", "GateTarget", "GradConfig", "LieClosure",
    "OptimReport", "ParamField", "PiecewiseField", "SystemSpec", "TimeGrid",
    "UnitaryTrajectory", "basis_state", "build_control_op", "build_drift",
    "controllability_dim", "default_spec", "embed_spin_op", "entropy_trace",
    "evaluate_ensemble", "ga_optimize", "gate_distance",
    "gate_distance_bruteforce", "hadamard", "hamiltonian_at", "histogram",
    "initial_state", "instantaneous_spectrum", "is_fully_controllable",
    "kron", "mean_sd", "objective", "objective_gradient", "optimize",
    "overlap_matrix", "propagate", "propagate_batch", "propagate_costate",
    "propagate_state", "reduced_density", "sample_couplings",
    "step_propagator", "synthesize", "von_neumann_entropy",
]

__version__ = "0.1.0"
