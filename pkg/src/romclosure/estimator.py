"""Scikit-learn style wrapper around the full closure-discovery pipeline."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .env import MODES, ClosureEnv, EnvConfig
from .evaluate import rmse_field, rollout_policy, true_projection_trajectory
from .exceptions import ConfigurationError
from .fom import Grid, SnapshotSet, TimeMesh
from .pod import compute_pod
from .ppo import PpoConfig, train


class ClosureDiscovery(BaseEstimator):
    """Learn an eddy-viscosity closure policy from a snapshot matrix.

    Parameters
    ----------
    mode : {"lmrl", "mmrl", "vmrl"}
        Action parameterisation and default reward.
    n_resolved, n_total : int
        Resolved modes R and resolved plus test modes R~.
    nu : float
        Viscosity of the training snapshots.
    eta_max : float
        Upper bound of the eddy viscosity.
    total_updates : int
        PPO updates.
    seed : int
    ppo_params : dict, optional
        Extra :class:`~romclosure.ppo.PpoConfig` fields.

    Attributes
    ----------
    basis_ : PodBasis
    policy_ : GaussianPolicy
    env_config_ : EnvConfig
    history_ : list of (update, episode_reward, moving_avg)
    """

    def __init__(self, mode="mmrl", n_resolved=8, n_total=16, nu=1e-3, eta_max=0.01,
                 total_updates=300, seed=0, ppo_params=None):
        self.mode = mode
        self.n_resolved = n_resolved
        self.n_total = n_total
        self.nu = nu
        self.eta_max = eta_max
        self.total_updates = total_updates
        self.seed = seed
        self.ppo_params = ppo_params

    def fit(self, X, y=None):
        """Fit on ``X`` with one snapshot per row, sampled uniformly on [0, 1] x [0, 1]."""
        if str(self.mode).lower() not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}")
        X = check_array(X, dtype=float)
        times = TimeMesh(X.shape[0])
        snaps = SnapshotSet(grid=Grid(X.shape[1]), times=times, values=X.T, nu=self.nu)
        self.basis_ = compute_pod(snaps, self.n_resolved, self.n_total)
        self.env_config_ = EnvConfig(mode=self.mode, r=self.n_resolved, r_total=self.n_total,
                                     nu=self.nu, dt=times.dt, horizon=times.n_snapshots - 1,
                                     eta_max=self.eta_max)
        data = snaps if self.env_config_.reward_kind == "supervised" else None
        ppo = PpoConfig(**{**(self.ppo_params or {}), "total_updates": self.total_updates,
                           "seed": self.seed})
        result = train(lambda: ClosureEnv(self.env_config_, self.basis_, data), ppo)
        self.policy_ = result.agent.policy
        self.history_ = result.history
        self.times_ = times
        return self

    def predict(self, re):
        """Modal coefficients of the closed ROM at Reynolds number ``re``.

        Returns an array of shape ``(n_snapshots, n_resolved)``; rows after a
        blow-up are NaN.
        """
        check_is_fitted(self, "policy_")
        traj, _ = rollout_policy(self.policy_, self.env_config_, 1.0 / re, self.basis_)
        out = np.full((self.times_.n_snapshots, self.n_resolved), np.nan)
        out[: traj.coeffs.shape[0]] = traj.coeffs
        return out

    def score(self, re):
        """Negative field RMSE against the true projection at ``re``."""
        check_is_fitted(self, "policy_")
        traj, diverged = rollout_policy(self.policy_, self.env_config_, 1.0 / re, self.basis_)
        if diverged:
            return -np.inf
        ror = true_projection_trajectory(1.0 / re, self.basis_, self.times_)
        return -rmse_field(traj, ror, self.basis_)
