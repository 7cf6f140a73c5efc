"""Bound-state formation and dissociation in a driven 1D square well."""

__version__ = "0.1.0"

from .coupling import CouplingMatrix, compute_coupling
from .eigen import EigenState, Parity, SpectralBasis, build_basis, build_state, evaluate_psi, solve_eigenvalues
from .ensemble import EnsembleResult, EnsembleSpec, mean_energy_curve, run_ensemble
from .evolution import Trajectory, evolve, evolve_oracle, rhs
from .model import HBAR_C, UNITS, UnitSystem, WellConfig, static_potential
from .observables import (DistributionSummary, energy_spread, final_distribution, mean_energy,
                          uncertainty_product)
from .perturbation import (PerturbativeResult, first_order_amplitudes, gaussian_transition_probability,
                           validity_report)
from .pulses import (GaussianTrain, SpatialProfile, StochasticSquareTrain, potential_at, realize,
                     time_signal)

__all__ = [
    "CouplingMatrix", "compute_coupling", "EigenState", "Parity", "SpectralBasis", "build_basis", "build_state",
    "evaluate_psi", "solve_eigenvalues", "EnsembleResult", "EnsembleSpec", "mean_energy_curve", "run_ensemble",
    "Trajectory", "evolve", "evolve_oracle", "rhs", "HBAR_C", "UNITS", "UnitSystem", "WellConfig",
    "static_potential", "DistributionSummary", "energy_spread", "final_distribution", "mean_energy",
    "uncertainty_product", "PerturbativeResult", "first_order_amplitudes", "gaussian_transition_probability",
    "validity_report", "GaussianTrain", "SpatialProfile", "StochasticSquareTrain", "potential_at", "realize",
    "time_signal",
]
