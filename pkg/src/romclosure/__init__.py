"""Reinforcement-learned eddy-viscosity closures for POD-Galerkin models of Burgers flow."""
from .env import ClosureEnv, EnvConfig
from .estimator import ClosureDiscovery
from .evaluate import gp_trajectory, make_table, rmse_field, true_projection_trajectory
from .exceptions import (
    ConfigurationError,
    DivergenceError,
    DomainError,
    RankError,
    RomClosureError,
    UsageError,
)
from .fom import Grid, SnapshotSet, TimeMesh, exact_solution, generate_snapshots, inner_product
from .galerkin import GalerkinROM, build_tensors, integrate
from .pod import POD, PodBasis, compute_pod, project, reconstruct, ric
from .ppo import PpoConfig, load_checkpoint, train

__version__ = "0.1.0"

__all__ = [
    "ClosureDiscovery",
    "ClosureEnv",
    "ConfigurationError",
    "DivergenceError",
    "DomainError",
    "EnvConfig",
    "GalerkinROM",
    "Grid",
    "POD",
    "PodBasis",
    "PpoConfig",
    "RankError",
    "RomClosureError",
    "SnapshotSet",
    "TimeMesh",
    "UsageError",
    "build_tensors",
    "compute_pod",
    "exact_solution",
    "generate_snapshots",
    "gp_trajectory",
    "inner_product",
    "integrate",
    "load_checkpoint",
    "make_table",
    "project",
    "reconstruct",
    "ric",
    "rmse_field",
    "train",
    "true_projection_trajectory",
]
