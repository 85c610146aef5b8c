"""Finite contextual bandit instances with Bernoulli rewards."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .infotheory import entropy

OPTIMAL_MEAN = 0.8
OTHER_MEAN_HIGH = 0.75


@dataclass(frozen=True)
class EnvironmentSpec:
    """A contextual bandit with ``num_states`` contexts and ``num_actions`` arms.

    Attributes:
        state_dist: probability of each state, shape ``(num_states,)``.
        mean_rewards: Bernoulli parameter of every (state, arm) pair,
            shape ``(num_states, num_actions)``.
        seed: seed used to generate the instance (informational).
    """

    state_dist: np.ndarray
    mean_rewards: np.ndarray
    seed: int = 0
    optimal_action: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        ps = np.array(self.state_dist, dtype=float)
        mu = np.array(self.mean_rewards, dtype=float)
        if ps.ndim != 1 or mu.ndim != 2 or mu.shape[0] != ps.shape[0]:
            raise ValueError(f"shape mismatch: state_dist {ps.shape}, mean_rewards {mu.shape}")
        if mu.shape[1] < 1 or ps.shape[0] < 1:
            raise ValueError("need at least one state and one action")
        if np.any(ps < 0) or abs(ps.sum() - 1.0) > 1e-12:
            raise ValueError("state_dist must be non-negative and sum to 1")
        if np.any(mu < 0) or np.any(mu > 1):
            raise ValueError("mean_rewards entries must lie in [0, 1]")
        best = mu.max(axis=1, keepdims=True)
        if np.any((mu == best).sum(axis=1) > 1):
            raise ValueError("optimal action must be unique in every state")
        ps.setflags(write=False)
        mu.setflags(write=False)
        opt = mu.argmax(axis=1)
        opt.setflags(write=False)
        object.__setattr__(self, "state_dist", ps)
        object.__setattr__(self, "mean_rewards", mu)
        object.__setattr__(self, "optimal_action", opt)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def num_states(self) -> int:
        return self.mean_rewards.shape[0]

    @property
    def num_actions(self) -> int:
        return self.mean_rewards.shape[1]

    @property
    def optimal_means(self) -> np.ndarray:
        return self.mean_rewards[np.arange(self.num_states), self.optimal_action]

    @property
    def gaps(self) -> np.ndarray:
        """Optimality gap of every (state, arm); zero on the optimal arm."""
        return self.optimal_means[:, None] - self.mean_rewards

    @property
    def min_gap(self) -> float:
        """Smallest non-zero gap over all states; ``inf`` with a single arm."""
        if self.num_actions == 1:
            return float("inf")
        g = self.gaps.copy()
        g[np.arange(self.num_states), self.optimal_action] = np.inf
        return float(g.min())

    def to_dict(self) -> dict:
        return {
            "num_states": self.num_states,
            "num_actions": self.num_actions,
            "state_dist": self.state_dist.tolist(),
            "mean_rewards": self.mean_rewards.tolist(),
            "optimal_action": self.optimal_action.tolist(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnvironmentSpec":
        env = cls(state_dist=d["state_dist"], mean_rewards=d["mean_rewards"], seed=d.get("seed", 0))
        if "num_states" in d and d["num_states"] != env.num_states:
            raise ValueError("num_states does not match state_dist")
        if "num_actions" in d and d["num_actions"] != env.num_actions:
            raise ValueError("num_actions does not match mean_rewards")
        if "optimal_action" in d and list(d["optimal_action"]) != env.optimal_action.tolist():
            raise ValueError("optimal_action does not match argmax of mean_rewards")
        return env

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "EnvironmentSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))


def make_grouped_env(num_states: int, num_actions: int, num_groups: int, seed: int) -> EnvironmentSpec:
    """Build a grouped instance with uniform states.

    States are split into ``num_groups`` contiguous blocks; every state of
    block ``g`` has arm ``g`` as its optimal arm with mean 0.8. All other
    means are drawn from Uniform[0, 0.75].
    """
    if num_states < 1 or num_actions < 1 or num_groups < 1:
        raise ValueError("sizes must be positive")
    if num_states % num_groups:
        raise ValueError(f"num_groups={num_groups} does not divide num_states={num_states}")
    if num_groups > num_actions:
        raise ValueError(f"num_groups={num_groups} exceeds num_actions={num_actions}")
    rng = np.random.default_rng(seed)
    mu = rng.uniform(0.0, OTHER_MEAN_HIGH, size=(num_states, num_actions))
    block = num_states // num_groups
    groups = np.arange(num_states) // block
    mu[np.arange(num_states), groups] = OPTIMAL_MEAN
    ps = np.full(num_states, 1.0 / num_states)
    return EnvironmentSpec(state_dist=ps, mean_rewards=mu, seed=seed)


def sample_state(env: EnvironmentSpec, stream: np.random.Generator) -> int:
    return int(sample_states(env, 1, stream)[0])


def sample_states(env: EnvironmentSpec, n: int, stream: np.random.Generator) -> np.ndarray:
    """Draw ``n`` i.i.d. states from ``env.state_dist``."""
    # inverse-CDF so that zero-probability states are never returned
    cdf = np.cumsum(env.state_dist)
    u = stream.random(n)
    return np.minimum(np.searchsorted(cdf, u, side="right"), env.num_states - 1)


def _check_indices(env: EnvironmentSpec, s, a):
    s = np.asarray(s)
    a = np.asarray(a)
    if np.any(s < 0) or np.any(s >= env.num_states):
        raise IndexError("state index out of range")
    if np.any(a < 0) or np.any(a >= env.num_actions):
        raise IndexError("action index out of range")
    return s, a


def sample_reward(env: EnvironmentSpec, s: int, a: int, stream: np.random.Generator) -> int:
    return int(sample_rewards(env, [s], [a], stream)[0])


def sample_rewards(env: EnvironmentSpec, states, actions, stream: np.random.Generator) -> np.ndarray:
    """Bernoulli rewards for paired arrays of states and actions."""
    s, a = _check_indices(env, states, actions)
    u = stream.random(s.shape)
    return (u < env.mean_rewards[s, a]).astype(np.int64)


def optimal_arm_entropy(env: EnvironmentSpec) -> float:
    """Entropy in bits of the optimal arm under the state distribution."""
    marginal = np.bincount(env.optimal_action, weights=env.state_dist, minlength=env.num_actions)
    return entropy(marginal)
