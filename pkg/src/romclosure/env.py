"""Episodic closure environment.

The agent observes the resolved modal coefficients of the closure ROM and
chooses eddy-viscosity coefficients. Two reward signals are available:

* ``supervised``: minus the Euclidean distance between the closure ROM and
  the projected snapshot at the next instant (needs snapshot data);
* ``vms``: +10 when ``sigma * |base - rom| < |base - test|`` and -10
  otherwise, where *base* is the uncorrected R-mode GP model and *test* the
  first R components of the R~-mode GP model. No snapshot data is involved.
"""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import ConfigurationError, DomainError, UsageError
from .fom import SnapshotSet
from .galerkin import (
    DIVERGENCE_LIMIT,
    RomTensors,
    build_tensors,
    initial_coefficients,
    integrate,
    is_diverged,
    rhs_closure,
    rhs_gp,
    rk4_step,
)
from .pod import PodBasis, project

MODES = ("lmrl", "mmrl", "vmrl")
REWARD_KINDS = ("supervised", "vms")
DEFAULT_REWARD = {"lmrl": "supervised", "mmrl": "supervised", "vmrl": "vms"}
VMS_REWARD = 10.0
DIVERGENCE_PENALTY = {"supervised": -1.0e3, "vms": -VMS_REWARD}


@dataclass
class EnvConfig:
    mode: str = "mmrl"
    r: int = 8
    r_total: int = 16
    nu: float = 1.0e-3
    dt: float = 1.0 / 499
    horizon: int = 499
    eta_max: float = 1.0e-2
    sigma: float = 1.6
    reward_kind: str | None = None
    normalize_obs: bool = True
    obs_scale: list | None = None
    divergence_limit: float = DIVERGENCE_LIMIT

    def __post_init__(self):
        self.mode = self.mode.lower()
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.reward_kind is None:
            self.reward_kind = DEFAULT_REWARD[self.mode]
        if self.reward_kind not in REWARD_KINDS:
            raise ConfigurationError(f"reward_kind must be one of {REWARD_KINDS}")
        if not 1 <= self.r < self.r_total:
            raise ConfigurationError("need 1 <= r < r_total")
        if not self.sigma > 1:
            raise ConfigurationError(f"sigma must exceed 1, got {self.sigma}")
        if not self.eta_max > 0:
            raise ConfigurationError("eta_max must be positive")
        if self.horizon < 1:
            raise ConfigurationError("horizon must be >= 1")
        if not (self.dt > 0 and self.nu > 0):
            raise ConfigurationError("dt and nu must be positive")
        if self.obs_scale is not None:
            self.obs_scale = [float(v) for v in self.obs_scale]

    @property
    def action_dim(self) -> int:
        return 1 if self.mode == "lmrl" else self.r

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EnvConfig":
        return cls(**d)


@dataclass
class EnvState:
    t_index: int
    alpha_rom: np.ndarray
    alpha_base: np.ndarray
    alpha_test: np.ndarray
    nu: float
    done: bool = False


class StepResult(NamedTuple):
    observation: np.ndarray
    reward: float
    done: bool
    info: dict


def map_action(raw_action, config: EnvConfig) -> np.ndarray:
    """Affine map of a raw action in [-1, 1] to eddy viscosities in [0, eta_max].

    For ``lmrl`` the single amplitude is spread with the linear kernel
    ``eta_k = eta_e * k / R``.
    """
    raw = np.atleast_1d(np.asarray(raw_action, dtype=float))
    if raw.shape != (config.action_dim,):
        raise DomainError(
            f"{config.mode} expects an action of length {config.action_dim}, got {raw.shape}"
        )
    eta = config.eta_max * (np.clip(raw, -1.0, 1.0) + 1.0) / 2.0
    if config.mode == "lmrl":
        k = np.arange(1, config.r + 1)
        return eta[0] * k / config.r
    return eta


def vms_reward(alpha_base, alpha_rom, alpha_test_resolved, sigma):
    d_rom = np.linalg.norm(alpha_base - alpha_rom)
    d_test = np.linalg.norm(alpha_base - alpha_test_resolved)
    return VMS_REWARD if sigma * d_rom < d_test else -VMS_REWARD


def supervised_reward(alpha_rom, alpha_true):
    return -float(np.linalg.norm(alpha_rom - alpha_true))


def episode_return(rewards, gamma) -> float:
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma}")
    rewards = np.asarray(rewards, dtype=float)
    return float(np.sum(gamma ** np.arange(rewards.size) * rewards))


@dataclass
class _Episode:
    """Action-independent quantities for one viscosity, built once."""

    tensors: RomTensors
    alpha0: np.ndarray
    alpha0_test: np.ndarray
    base: np.ndarray
    test: np.ndarray
    truth: np.ndarray | None = field(default=None)


class ClosureEnv:
    """Closure ROM exposed as a reset/step environment.

    Parameters
    ----------
    config : EnvConfig
    basis : PodBasis
        Modes from the training data; reused unchanged at every viscosity.
    snapshots : SnapshotSet, optional
        Required only for the supervised reward, at the episode viscosity.
    trace : bool
        Keep the per-step info dicts of the current episode.
    """

    def __init__(self, config: EnvConfig, basis: PodBasis, snapshots: SnapshotSet | None = None,
                 trace: bool = False):
        if config.r_total > basis.r_total:
            raise ConfigurationError(
                f"config asks for {config.r_total} modes, basis has {basis.r_total}"
            )
        self.config = config
        self.basis = basis
        self.snapshots = snapshots
        self.trace = trace
        self.trace_rows: list[dict] = []
        if config.obs_scale is not None:
            self.obs_scale = np.asarray(config.obs_scale, dtype=float)
        elif config.normalize_obs:
            self.obs_scale = basis.coefficient_rms[: config.r].copy()
        else:
            self.obs_scale = np.ones(config.r)
        self._cache: dict[float, _Episode] = {}
        self.state: EnvState | None = None

    @property
    def obs_dim(self) -> int:
        return self.config.r

    @property
    def action_dim(self) -> int:
        return self.config.action_dim

    @property
    def time_fraction(self) -> float:
        if self.state is None:
            return 0.0
        return self.state.t_index / self.config.horizon

    def observe(self, alpha) -> np.ndarray:
        return alpha / self.obs_scale

    def _episode(self, nu: float) -> _Episode:
        if nu in self._cache:
            return self._cache[nu]
        cfg = self.config
        truth = None
        if cfg.reward_kind == "supervised":
            snaps = self.snapshots
            if snaps is None:
                raise ConfigurationError("the supervised reward needs snapshot data")
            if not np.isclose(snaps.nu, nu, rtol=1e-12, atol=0.0):
                raise ConfigurationError(
                    f"snapshots are at nu={snaps.nu}, episode requested nu={nu}"
                )
            if snaps.times.n_snapshots < cfg.horizon + 1:
                raise ConfigurationError("fewer snapshots than horizon + 1")
            truth = project(snaps.values[:, : cfg.horizon + 1], self.basis, cfg.r).T
        tensors = build_tensors(self.basis, nu, cfg.r)
        tensors_tilde = build_tensors(self.basis, nu, cfg.r_total)
        alpha0_test = initial_coefficients(self.basis, nu, cfg.r_total)
        alpha0 = alpha0_test[: cfg.r].copy()
        base = integrate(lambda a: rhs_gp(a, tensors), alpha0, cfg.dt, cfg.horizon,
                         limit=cfg.divergence_limit).coeffs
        test = integrate(lambda a: rhs_gp(a, tensors_tilde), alpha0_test, cfg.dt, cfg.horizon,
                         limit=cfg.divergence_limit).coeffs
        ep = _Episode(tensors=tensors, alpha0=alpha0, alpha0_test=alpha0_test,
                      base=base, test=test, truth=truth)
        self._cache[nu] = ep
        return ep

    def reset(self, nu: float | None = None) -> np.ndarray:
        nu = self.config.nu if nu is None else float(nu)
        ep = self._episode(nu)
        self._ep = ep
        self.state = EnvState(
            t_index=0,
            alpha_rom=ep.alpha0.copy(),
            alpha_base=ep.base[0].copy(),
            alpha_test=ep.test[0].copy(),
            nu=nu,
        )
        self.trace_rows = []
        return self.observe(self.state.alpha_rom)

    def step(self, raw_action) -> StepResult:
        state = self.state
        if state is None or state.done:
            raise UsageError("call reset() before stepping a finished episode")
        cfg = self.config
        ep = self._ep
        eta = map_action(raw_action, cfg)
        tensors = ep.tensors
        with np.errstate(over="ignore", invalid="ignore"):
            alpha = rk4_step(lambda a: rhs_closure(a, tensors, eta), state.alpha_rom, cfg.dt)
        n = state.t_index + 1
        base = ep.base[n]
        test = ep.test[n, : cfg.r]
        state.t_index = n
        state.alpha_base = ep.base[n].copy()
        state.alpha_test = ep.test[n].copy()

        diverged = is_diverged(alpha, cfg.divergence_limit)
        info = {"t_index": n, "diverged": diverged}
        if diverged:
            reward = DIVERGENCE_PENALTY[cfg.reward_kind]
        else:
            state.alpha_rom = alpha
            d_base_rom = float(np.linalg.norm(base - alpha))
            d_base_test = float(np.linalg.norm(base - test))
            info["dist_base_rom"] = d_base_rom
            info["dist_base_test"] = d_base_test
            info["dist_rom_test"] = float(np.linalg.norm(alpha - test))
            if ep.truth is not None:
                info["dist_rom_true"] = float(np.linalg.norm(alpha - ep.truth[n]))
            if cfg.reward_kind == "supervised":
                reward = supervised_reward(alpha, ep.truth[n])
            else:
                reward = vms_reward(base, alpha, test, cfg.sigma)
        state.done = diverged or n >= cfg.horizon
        if self.trace:
            row = dict(info)
            row["reward"] = reward
            for k, v in enumerate(eta, start=1):
                row[f"eta_{k}"] = float(v)
            self.trace_rows.append(row)
        return StepResult(self.observe(state.alpha_rom), float(reward), state.done, info)

    def write_trace(self, path):
        if not self.trace_rows:
            return
        keys = list(dict.fromkeys(k for row in self.trace_rows for k in row))
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=keys)
            writer.writeheader()
            writer.writerows(self.trace_rows)
