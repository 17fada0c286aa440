"""Proximal policy optimisation with a tanh-squashed Gaussian actor.

Everything is numpy: the actor mean and the critic are :class:`~romclosure.nn.Mlp`
instances and the gradients of the clipped surrogate are propagated by hand.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .exceptions import ConfigurationError, UsageError
from .nn import Adam, Mlp

log = logging.getLogger(__name__)

LOG_STD_MIN, LOG_STD_MAX = -5.0, 1.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
CHECKPOINT_MAGIC = b"ROMCLOSURE-CHECKPOINT 1\n"


@dataclass
class PpoConfig:
    """PPO hyperparameters.

    Beyond the usual PPO settings:

    init_action_mean
        Initial pre-squash mean of every action component. ``-2`` starts the
        closure weak (``eta ~ 0.018 eta_max``) rather than at half strength.
    noise_repeat
        Steps over which one exploration draw is held; ``0`` holds it for the
        whole episode, ``1`` redraws every step.
    critic_time_feature
        Append the elapsed episode fraction to the critic input when the
        environment provides one.
    """

    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_epsilon: float = 0.2
    learning_rate: float = 3e-4
    epochs_per_update: int = 10
    minibatch_size: int = 64
    episodes_per_update: int = 4
    total_updates: int = 300
    entropy_coef: float = 0.0
    value_coef: float = 0.5
    max_grad_norm: float = 0.5
    hidden_sizes: tuple = (64, 64)
    init_log_std: float = -0.5
    init_action_mean: float = -2.0
    critic_time_feature: bool = True
    noise_repeat: int = 50
    checkpoint_every: int = 50
    moving_average_window: int = 50
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.clip_epsilon < 1.0:
            raise ConfigurationError("clip_epsilon must lie in (0, 1)")
        if not 0.0 <= self.gamma <= 1.0 or not 0.0 <= self.gae_lambda <= 1.0:
            raise ConfigurationError("gamma and gae_lambda must lie in [0, 1]")
        if not self.learning_rate > 0:
            raise ConfigurationError("learning_rate must be positive")
        for name in ("epochs_per_update", "minibatch_size", "episodes_per_update"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")
        self.hidden_sizes = tuple(int(h) for h in self.hidden_sizes)

    def to_dict(self):
        d = asdict(self)
        d["hidden_sizes"] = list(self.hidden_sizes)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def _log_one_minus_tanh2(u):
    # log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u)), stable for large |u|
    return 2.0 * (math.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))


class GaussianPolicy:
    """``a = tanh(u)``, ``u ~ Normal(mean_net(obs), exp(log_std))``."""

    def __init__(self, mean_net: Mlp, log_std):
        self.mean_net = mean_net
        self.log_std = np.clip(np.array(log_std, dtype=float), LOG_STD_MIN, LOG_STD_MAX)

    @classmethod
    def create(cls, obs_dim, action_dim, hidden=(64, 64), init_log_std=-0.5, rng=None,
               init_mean=0.0):
        """Fresh policy whose pre-squash mean starts close to ``init_mean``."""
        net = Mlp((obs_dim, *hidden, action_dim), rng=rng, out_scale=0.01)
        net.layers()[-1][1][:] = init_mean
        return cls(net, np.full(action_dim, init_log_std))

    @property
    def action_dim(self):
        return self.log_std.size

    @property
    def params(self):
        return np.concatenate([self.mean_net.params, self.log_std])

    @params.setter
    def params(self, flat):
        n = self.mean_net.n_params
        self.mean_net.params = np.array(flat[:n], dtype=float)
        self.log_std = np.clip(np.array(flat[n:], dtype=float), LOG_STD_MIN, LOG_STD_MAX)

    def mean(self, obs):
        return self.mean_net(obs)

    def log_prob(self, obs, pre_tanh):
        """Log density of ``tanh(pre_tanh)`` including the squash Jacobian."""
        mu = self.mean_net(obs)
        u = np.atleast_2d(pre_tanh)
        z = (u - mu) * np.exp(-self.log_std)
        gauss = -0.5 * z**2 - self.log_std - _HALF_LOG_2PI
        return (gauss - _log_one_minus_tanh2(u)).sum(axis=1)

    def sample(self, obs, rng, noise=None):
        """Return ``(action, pre_tanh, log_prob)`` for a single observation.

        ``noise`` replaces the standard-normal draw, which lets a caller hold
        the exploration noise fixed over several steps.
        """
        mu = self.mean_net(obs)[0]
        std = np.exp(self.log_std)
        if noise is None:
            noise = rng.standard_normal(self.action_dim)
        u = mu + std * noise
        logp = float(self.log_prob(obs, u)[0])
        return np.tanh(u), u, logp

    def act(self, obs):
        """Deterministic action ``tanh(mean)``."""
        return np.tanh(self.mean_net(obs)[0])

    def entropy(self):
        """Entropy of the pre-squash Gaussian."""
        return float(np.sum(self.log_std + 0.5 + _HALF_LOG_2PI))

    def copy(self):
        return GaussianPolicy(self.mean_net.copy(), self.log_std.copy())


def policy_sample(policy: GaussianPolicy, obs, rng):
    action, _, logp = policy.sample(obs, rng)
    return action, logp


def value_estimate(critic: Mlp, obs) -> float:
    return float(critic(obs)[0, 0])


def clipped_surrogate(ratio, advantage, clip_epsilon):
    """Per-sample ``min(r A, clip(r, 1-eps, 1+eps) A)``."""
    ratio = np.asarray(ratio, dtype=float)
    advantage = np.asarray(advantage, dtype=float)
    clipped = np.clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon)
    return np.minimum(ratio * advantage, clipped * advantage)


@dataclass
class RolloutBuffer:
    observations: list = field(default_factory=list)
    critic_inputs: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    pre_tanh: list = field(default_factory=list)
    log_probs: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    values: list = field(default_factory=list)
    dones: list = field(default_factory=list)
    bootstrap_value: float = 0.0

    def add(self, obs, action, pre_tanh, log_prob, reward, value, done, critic_input=None):
        self.observations.append(np.asarray(obs, dtype=float))
        self.critic_inputs.append(np.asarray(obs if critic_input is None else critic_input,
                                             dtype=float))
        self.actions.append(np.asarray(action, dtype=float))
        self.pre_tanh.append(np.asarray(pre_tanh, dtype=float))
        self.log_probs.append(float(log_prob))
        self.rewards.append(float(reward))
        self.values.append(float(value))
        self.dones.append(bool(done))

    def __len__(self):
        return len(self.rewards)

    def arrays(self):
        return {
            "obs": np.array(self.observations),
            "critic_obs": np.array(self.critic_inputs),
            "actions": np.array(self.actions),
            "pre_tanh": np.array(self.pre_tanh),
            "log_probs": np.array(self.log_probs),
            "rewards": np.array(self.rewards),
            "values": np.array(self.values),
            "dones": np.array(self.dones, dtype=float),
        }


def normalize_advantages(adv):
    adv = np.asarray(adv, dtype=float)
    if adv.size < 2:
        return adv - adv.mean()
    centred = adv - adv.mean()
    std = centred.std()
    return centred / std if std > 0 else centred


def compute_advantages(buffer: RolloutBuffer, gamma, gae_lambda, normalize=True):
    """Generalized advantage estimation.

    Returns ``(advantages, returns)`` with ``returns = A + V`` computed from
    the raw advantages; the advantages are normalised to zero mean and unit
    variance when ``normalize`` is set.
    """
    if len(buffer) == 0:
        raise UsageError("cannot compute advantages of an empty buffer")
    rewards = np.asarray(buffer.rewards, dtype=float)
    values = np.asarray(buffer.values, dtype=float)
    dones = np.asarray(buffer.dones, dtype=float)
    n = rewards.size
    adv = np.zeros(n)
    last = 0.0
    for t in range(n - 1, -1, -1):
        next_value = buffer.bootstrap_value if t == n - 1 else values[t + 1]
        nonterminal = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * nonterminal - values[t]
        last = delta + gamma * gae_lambda * nonterminal * last
        adv[t] = last
    returns = adv + values
    if normalize:
        adv = normalize_advantages(adv)
    return adv, returns


class LossTerms(NamedTuple):
    loss: float
    policy_loss: float
    value_loss: float
    entropy: float
    actor_grad: np.ndarray
    critic_grad: np.ndarray
    clip_fraction: float
    approx_kl: float


def ppo_loss(policy: GaussianPolicy, critic: Mlp, batch, clip_epsilon, value_coef=0.5,
             entropy_coef=0.0) -> LossTerms:
    """Clipped-surrogate PPO loss and its exact gradients.

    ``batch`` holds ``obs`` (plus ``critic_obs`` when the critic sees extra
    features), ``pre_tanh``, ``log_probs`` (behaviour policy),
    ``advantages`` and ``returns``. The loss is minimised:

        -mean(min(r A, clip(r) A)) + c_v mean((V - R)^2) - c_e H
    """
    obs = batch["obs"]
    u = batch["pre_tanh"]
    adv = batch["advantages"]
    m = obs.shape[0]

    mu, acts = policy.mean_net.forward(obs)
    inv_std = np.exp(-policy.log_std)
    z = (u - mu) * inv_std
    logp = (-0.5 * z**2 - policy.log_std - _HALF_LOG_2PI - _log_one_minus_tanh2(u)).sum(axis=1)
    log_ratio = logp - batch["log_probs"]
    ratio = np.exp(log_ratio)
    unclipped = ratio * adv
    surrogate = clipped_surrogate(ratio, adv, clip_epsilon)
    policy_loss = -surrogate.mean()

    # d(policy_loss)/d(logp): the clipped branch carries no gradient
    active = unclipped <= surrogate
    g_logp = np.where(active, -adv * ratio / m, 0.0)
    g_mu = g_logp[:, None] * z * inv_std
    g_log_std = (g_logp[:, None] * (z**2 - 1.0)).sum(axis=0)
    entropy = policy.entropy()
    g_log_std = g_log_std - entropy_coef * np.ones_like(policy.log_std)
    actor_grad = np.concatenate([policy.mean_net.backward(acts, g_mu), g_log_std])

    v, v_acts = critic.forward(batch.get("critic_obs", obs))
    v = v[:, 0]
    err = v - batch["returns"]
    value_loss = float(np.mean(err**2))
    critic_grad = critic.backward(v_acts, (value_coef * 2.0 * err / m)[:, None])

    loss = policy_loss + value_coef * value_loss - entropy_coef * entropy
    clip_fraction = float(np.mean(np.abs(ratio - 1.0) > clip_epsilon))
    approx_kl = float(np.mean((ratio - 1.0) - log_ratio))
    return LossTerms(float(loss), float(policy_loss), value_loss, entropy, actor_grad,
                     critic_grad, clip_fraction, approx_kl)


class PpoAgent:
    """Actor, critic and optimiser state."""

    def __init__(self, policy: GaussianPolicy, critic: Mlp, config: PpoConfig):
        self.policy = policy
        self.critic = critic
        self.config = config
        self.optimizer = Adam(policy.params.size + critic.n_params, lr=config.learning_rate)

    @classmethod
    def create(cls, obs_dim, action_dim, config: PpoConfig, rng, critic_dim=None):
        policy = GaussianPolicy.create(obs_dim, action_dim, config.hidden_sizes,
                                       config.init_log_std, rng, config.init_action_mean)
        critic_dim = obs_dim if critic_dim is None else critic_dim
        critic = Mlp((critic_dim, *config.hidden_sizes, 1), rng=rng, out_scale=1.0)
        return cls(policy, critic, config)

    def _get(self):
        return np.concatenate([self.policy.params, self.critic.params])

    def _set(self, flat):
        n = self.policy.params.size
        self.policy.params = flat[:n]
        self.critic.params = np.array(flat[n:])

    def update(self, buffer: RolloutBuffer, rng) -> dict:
        return ppo_update(self, buffer, rng)


def ppo_update(agent: PpoAgent, buffer: RolloutBuffer, rng) -> dict:
    """Several epochs of minibatch Adam steps on the clipped surrogate."""
    cfg = agent.config
    if len(buffer) == 0:
        raise UsageError("empty rollout buffer")
    data = buffer.arrays()
    adv, returns = compute_advantages(buffer, cfg.gamma, cfg.gae_lambda)
    data["advantages"] = adv
    data["returns"] = returns
    n = len(buffer)
    start = agent._get()
    stats = {"policy_loss": [], "value_loss": [], "clip_fraction": [], "approx_kl": []}
    for _ in range(cfg.epochs_per_update):
        order = rng.permutation(n)
        for lo in range(0, n, cfg.minibatch_size):
            idx = order[lo : lo + cfg.minibatch_size]
            batch = {k: data[k][idx] for k in
                     ("obs", "critic_obs", "pre_tanh", "log_probs", "advantages", "returns")}
            terms = ppo_loss(agent.policy, agent.critic, batch, cfg.clip_epsilon,
                             cfg.value_coef, cfg.entropy_coef)
            grad = np.concatenate([terms.actor_grad, terms.critic_grad])
            if not (np.isfinite(terms.loss) and np.all(np.isfinite(grad))):
                log.warning("non-finite PPO loss; update aborted and parameters restored")
                agent._set(start)
                return {"aborted": True}
            norm = np.linalg.norm(grad)
            if cfg.max_grad_norm and norm > cfg.max_grad_norm:
                grad = grad * (cfg.max_grad_norm / norm)
            agent._set(agent.optimizer.step(agent._get(), grad))
            stats["policy_loss"].append(terms.policy_loss)
            stats["value_loss"].append(terms.value_loss)
            stats["clip_fraction"].append(terms.clip_fraction)
            stats["approx_kl"].append(terms.approx_kl)
    out = {k: float(np.mean(v)) for k, v in stats.items()}
    out["aborted"] = False
    return out


def _uses_time(env, config):
    return config.critic_time_feature and hasattr(type(env), "time_fraction")


def critic_input(env, obs, config):
    """Observation for the critic, with the episode clock appended if available.

    Without the clock the value of a state near the time limit is ambiguous;
    the actor never sees it.
    """
    if _uses_time(env, config):
        return np.append(obs, env.time_fraction)
    return obs


def collect_episode(env, agent: PpoAgent, rng, buffer: RolloutBuffer):
    obs = env.reset()
    total = 0.0
    done = False
    repeat = agent.config.noise_repeat
    step = 0
    noise = None
    while not done:
        if step == 0 or (repeat > 0 and step % repeat == 0):
            noise = rng.standard_normal(agent.policy.action_dim)
        step += 1
        action, u, logp = agent.policy.sample(obs, rng, noise)
        c_in = critic_input(env, obs, agent.config)
        value = value_estimate(agent.critic, c_in)
        result = env.step(action)
        buffer.add(obs, action, u, logp, result.reward, value, result.done, c_in)
        total += result.reward
        obs = result.observation
        done = result.done
    return total


@dataclass
class TrainResult:
    agent: PpoAgent
    history: list
    checkpoints: list


def train(env_factory, config: PpoConfig, out_dir=None, header=None, callback=None) -> TrainResult:
    """Collect episodes, estimate advantages, update; repeat.

    ``env_factory()`` must return an object with ``reset()``, ``step(action)``,
    ``obs_dim`` and ``action_dim``. Given the same seed the reward history and
    the checkpoints are bitwise reproducible.
    """
    rng = np.random.default_rng(config.seed)
    env = env_factory()
    critic_dim = env.obs_dim + 1 if _uses_time(env, config) else env.obs_dim
    agent = PpoAgent.create(env.obs_dim, env.action_dim, config, rng, critic_dim)
    window = deque(maxlen=config.moving_average_window)
    history = []
    checkpoints = []
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    header = dict(header or {})
    header["ppo"] = config.to_dict()

    for update in range(1, config.total_updates + 1):
        buffer = RolloutBuffer()
        for _ in range(config.episodes_per_update):
            ep_reward = collect_episode(env, agent, rng, buffer)
            window.append(ep_reward)
            history.append((update, ep_reward, float(np.mean(window))))
        stats = ppo_update(agent, buffer, rng)
        if callback is not None:
            callback(update, history, stats)
        if out_dir is not None and config.checkpoint_every and update % config.checkpoint_every == 0:
            path = out_dir / f"policy_update_{update:05d}.ckpt"
            save_checkpoint(path, agent, {**header, "update": update})
            checkpoints.append(path)

    if out_dir is not None:
        path = out_dir / "policy.ckpt"
        save_checkpoint(path, agent, {**header, "update": config.total_updates})
        checkpoints.append(path)
        write_reward_history(out_dir / "reward_history.csv", history)
    return TrainResult(agent=agent, history=history, checkpoints=checkpoints)


def write_reward_history(path, history):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["update", "episode_reward", "moving_avg"])
        for update, reward, avg in history:
            writer.writerow([update, repr(float(reward)), repr(float(avg))])


def save_checkpoint(path, agent: PpoAgent, header: dict):
    """Write magic line, one JSON header line, then raw little-endian float64."""
    arrays = {
        "actor": agent.policy.mean_net.params,
        "log_std": agent.policy.log_std,
        "critic": agent.critic.params,
    }
    meta = dict(header)
    meta["actor_sizes"] = list(agent.policy.mean_net.sizes)
    meta["critic_sizes"] = list(agent.critic.sizes)
    meta["arrays"] = [[name, int(arr.size)] for name, arr in arrays.items()]
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(json.dumps(meta, sort_keys=True).encode() + b"\n")
        for arr in arrays.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Return ``(policy, critic, header)``."""
    with open(path, "rb") as fh:
        magic = fh.readline()
        if magic != CHECKPOINT_MAGIC:
            raise ConfigurationError(f"{path} is not a romclosure checkpoint")
        header = json.loads(fh.readline())
        data = {}
        for name, size in header["arrays"]:
            data[name] = np.frombuffer(fh.read(8 * size), dtype="<f8").astype(float)
    actor = Mlp(header["actor_sizes"], data["actor"])
    critic = Mlp(header["critic_sizes"], data["critic"])
    return GaussianPolicy(actor, data["log_std"]), critic, header
