"""Optimal probabilistic and deterministic covariant state estimation."""

from .covariant import (
    CovariantPOVM,
    FidelityResult,
    OperatorPair,
    build_M,
    build_rank_one_povm,
    conditional_fidelity,
    optimal_fidelity,
    success_probability,
)
from .conjugate import ConjugateModel, certify_deterministic
from .equatorial import EquatorialModel
from .simulate import SimulationConfig, SimulationReport, run_simulation

__version__ = "0.1.0"
