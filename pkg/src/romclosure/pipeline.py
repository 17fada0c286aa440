"""End-to-end helpers shared by the CLI, the estimator and the tests."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .env import ClosureEnv, EnvConfig
from .evaluate import DEFAULT_RE, basis_from_header, make_table
from .fom import Grid, SnapshotSet, TimeMesh, generate_snapshots
from .pod import PodBasis, compute_pod
from .ppo import PpoConfig, load_checkpoint, train

log = logging.getLogger(__name__)


@dataclass
class DataConfig:
    nu: float = 1.0e-3
    n_points: int = 1024
    n_snapshots: int = 500
    x_min: float = 0.0
    x_max: float = 1.0
    t_min: float = 0.0
    t_max: float = 1.0

    @property
    def grid(self):
        return Grid(self.n_points, self.x_min, self.x_max)

    @property
    def times(self):
        return TimeMesh(self.n_snapshots, self.t_min, self.t_max)

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class RunConfig:
    """Everything a training run needs; loadable from a JSON file."""

    data: DataConfig = field(default_factory=DataConfig)
    env: dict = field(default_factory=dict)
    ppo: dict = field(default_factory=dict)
    seeds: list = field(default_factory=lambda: list(range(10)))
    modes: list = field(default_factory=lambda: ["lmrl", "mmrl", "vmrl"])
    re_list: list = field(default_factory=lambda: list(DEFAULT_RE))

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        data = DataConfig(**d.pop("data", {}))
        return cls(data=data, **d)

    @classmethod
    def load(cls, path):
        if path is None:
            return cls()
        return cls.from_dict(json.loads(Path(path).read_text()))


def env_config_for(mode: str, data: DataConfig, overrides=None) -> EnvConfig:
    times = data.times
    params = {
        "mode": mode,
        "nu": data.nu,
        "dt": times.dt,
        "horizon": times.n_snapshots - 1,
    }
    params.update(overrides or {})
    params["mode"] = mode
    return EnvConfig(**params)


@dataclass
class TrainingSetup:
    data: DataConfig
    snapshots: SnapshotSet
    basis: PodBasis

    @classmethod
    def build(cls, data: DataConfig, r=8, r_total=16):
        snaps = generate_snapshots(data.grid, data.times, data.nu)
        return cls(data=data, snapshots=snaps, basis=compute_pod(snaps, r, r_total))

    def env_factory(self, env_config: EnvConfig):
        # the variational multiscale reward never sees the snapshots
        supervised = env_config.reward_kind == "supervised"
        snaps = self.snapshots if supervised else None
        return lambda: ClosureEnv(env_config, self.basis, snaps)


def train_mode(setup: TrainingSetup, mode: str, seed: int, ppo: dict | None = None,
               env: dict | None = None, out_dir=None, callback=None):
    env_config = env_config_for(mode, setup.data, env)
    ppo_config = PpoConfig(**{**(ppo or {}), "seed": seed})
    header = {"mode": mode, "seed": seed, "env": env_config.to_dict(),
              "data": setup.data.to_dict()}
    return train(setup.env_factory(env_config), ppo_config, out_dir=out_dir, header=header,
                 callback=callback), env_config


def load_checkpoint_dir(root):
    """Group every ``policy.ckpt`` below ``root`` by the model in its header."""
    groups = {}
    for path in sorted(Path(root).rglob("policy.ckpt")):
        policy, _, header = load_checkpoint(path)
        groups.setdefault(header["mode"].upper(), []).append(
            (policy, EnvConfig.from_dict(header["env"]), header)
        )
    return groups


def evaluate_checkpoints(root, re_list=DEFAULT_RE, out_dir=None, modes=("LMRL", "MMRL", "VMRL")):
    groups = load_checkpoint_dir(root)
    headers = [h for runs in groups.values() for _, _, h in runs]
    if not headers:
        raise FileNotFoundError(f"no checkpoints below {root}")
    basis = basis_from_header(headers[0])
    times = DataConfig(**headers[0]["data"]).times
    runs = {m: [(p, c) for p, c, _ in groups.get(m, [])] for m in modes}
    for m in groups:
        runs.setdefault(m, [(p, c) for p, c, _ in groups[m]])
    return make_table(runs, basis, times, re_list, out_dir)
