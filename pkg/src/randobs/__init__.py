"""Ensemble Kalman filtering of chaotic systems under fixed, randomized and
Poisson-switched partial observations, with a UCB1 learner for the number of
observed components."""

from randobs.dynamics import DriftModel, DiffusionConfig, BlowUpError, drift, rk4_step, euler_maruyama_step
from randobs.localization import LocalizationSpec, build_phi, cyclic_distance, gaspari_cohn, localize, diag_pseudo_inverse
from randobs.observation import ObservationOperator, PoissonSwitcher, sample_subset_uniform
from randobs.rng import stream

__all__ = [
    "BlowUpError",
    "DiffusionConfig",
    "DriftModel",
    "LocalizationSpec",
    "ObservationOperator",
    "PoissonSwitcher",
    "build_phi",
    "cyclic_distance",
    "diag_pseudo_inverse",
    "drift",
    "euler_maruyama_step",
    "gaspari_cohn",
    "localize",
    "rk4_step",
    "sample_subset_uniform",
    "stream",
]

__version__ = "0.1.0"
