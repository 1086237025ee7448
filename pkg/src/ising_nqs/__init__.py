"""RBM quantum states for the 2D Heisenberg antiferromagnet, mapped onto
classical Ising models, with magnetization-conserving Metropolis sampling,
emulated stochastic-Ising-machine dynamics, and autocorrelation-based
sampling-advantage analysis."""

from .errors import (
    ChainTooShortError,
    EnumerationSizeError,
    ExclusionThresholdError,
    IntervalSelectionError,
    IsingNqsError,
    NumericalError,
    StuckChainError,
)
from .heisenberg import SquareLattice, build_lattice, local_energy, local_energy_batch, magnetization, neel_state
from .rbm import RbmModel, load_model, log_psi, log_psi_batch, random_model, save_model
from .ising import IsingModel, export_ising, ising_energy, local_field, map_rbm_to_ising
from .samplers import ChainConfig, SpinChain, chain_rng, filter_magnetization_zero, run_chain, run_chains
from .autocorr import integrated_autocorr_time, multi_chain_tau, select_mh_interval, select_sim_interval
from .estimators import EnergyEstimate, ErrorCurve, baseline_energy, fit_inverse_sqrt, relative_error_curve
from .trainer import TrainConfig, TrainHistory, train
from .advantage import BUILTIN_PROFILES, HardwareProfile, check_advantage, iso_accuracy_ratio, project_runtime
from .oracle import exact_ground_energy, exact_variational_energy, ground_energy_from_bonds
from .analysis import analyze_model, measure_tau_mh, measure_tau_sim

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_PROFILES",
    "ChainConfig",
    "ChainTooShortError",
    "EnergyEstimate",
    "EnumerationSizeError",
    "ErrorCurve",
    "ExclusionThresholdError",
    "HardwareProfile",
    "IntervalSelectionError",
    "IsingModel",
    "IsingNqsError",
    "NumericalError",
    "RbmModel",
    "SpinChain",
    "SquareLattice",
    "StuckChainError",
    "TrainConfig",
    "TrainHistory",
    "analyze_model",
    "baseline_energy",
    "build_lattice",
    "chain_rng",
    "check_advantage",
    "exact_ground_energy",
    "exact_variational_energy",
    "export_ising",
    "filter_magnetization_zero",
    "fit_inverse_sqrt",
    "ground_energy_from_bonds",
    "integrated_autocorr_time",
    "iso_accuracy_ratio",
    "ising_energy",
    "load_model",
    "local_energy",
    "local_energy_batch",
    "local_field",
    "log_psi",
    "log_psi_batch",
    "magnetization",
    "map_rbm_to_ising",
    "measure_tau_mh",
    "measure_tau_sim",
    "multi_chain_tau",
    "neel_state",
    "project_runtime",
    "random_model",
    "relative_error_curve",
    "run_chain",
    "run_chains",
    "save_model",
    "select_mh_interval",
    "select_sim_interval",
    "train",
    "__version__",
]
