"""Round-by-round simulation of the remote contextual bandit."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import channel as ch
from . import streams
from .environment import EnvironmentSpec, optimal_arm_entropy, sample_states
from .infotheory import empirical_joint_type, joint, mutual_information, total_variation
from .thompson import QUADRATURE, full_policy, init_posteriors, sample_actions, update

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimConfig:
    """One simulation run.

    ``diagnostics_period`` controls how often the explicit policy (and hence
    its rate) is extracted; the first and last rounds are always included.
    Channels that need the policy extract it every round regardless.
    """

    env: EnvironmentSpec
    num_agents: int
    num_rounds: int
    channel: ch.ChannelScheme = field(default_factory=ch.ChannelScheme)
    policy_method: str = QUADRATURE
    policy_precision: int | None = None
    root_seed: int = 0
    diagnostics_period: int = 1
    solver_tol: float = 1e-3

    def __post_init__(self):
        if self.num_agents < 1:
            raise ValueError("num_agents must be >= 1")
        if self.num_rounds < 1:
            raise ValueError("num_rounds must be >= 1")
        if self.diagnostics_period < 1:
            raise ValueError("diagnostics_period must be >= 1")


@dataclass
class RoundTrace:
    round: int
    policy_rate_bits: float
    optimal_prob_per_state: np.ndarray
    regret_increment: float
    empirical_distortion: float
    cumulative_regret: float
    conveyed_distortion: float = 0.0


class SimulationAborted(RuntimeError):
    """A component failed mid-run; ``trace`` holds the completed rounds."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


def _lossless(config: SimConfig) -> bool:
    """True when the channel conveys any policy exactly."""
    chan, env = config.channel, config.env
    if chan.kind == ch.PERFECT:
        return True
    # I(S;A) never exceeds log2 min(|S|, K)
    return chan.kind == ch.PROJECTED and chan.effective_rate(env.num_actions) >= math.log2(
        min(env.num_states, env.num_actions))


def _needs_policy(config: SimConfig, h: int) -> bool:
    if not _lossless(config):
        return True
    return h == 1 or h == config.num_rounds or h % config.diagnostics_period == 0


def run(config: SimConfig) -> list[RoundTrace]:
    """Play ``num_rounds`` rounds and return one ``RoundTrace`` per round.

    Regret is accounted with the true means of the executed actions. All
    randomness comes from per-purpose streams keyed by ``root_seed``.
    """
    env = config.env
    n, k = config.num_agents, env.num_actions
    chan = config.channel
    rate = chan.effective_rate(k)
    state_rng = streams.substream(config.root_seed, streams.STATES)
    action_rng = streams.substream(config.root_seed, streams.ACTIONS)
    channel_rng = streams.substream(config.root_seed, streams.CHANNEL)
    reward_rng = streams.substream(config.root_seed, streams.REWARDS)
    policy_rng = streams.substream(config.root_seed, streams.POLICY)

    bank = init_posteriors(env.num_states, k)
    gaps = env.gaps
    opt = env.optimal_action
    trace: list[RoundTrace] = []
    cumulative = 0.0
    lam_hint = None
    lossless = _lossless(config)
    for h in range(1, config.num_rounds + 1):
        states = sample_states(env, n, state_rng)
        intended = sample_actions(bank, states, action_rng)
        policy = None
        if _needs_policy(config, h):
            policy = full_policy(bank, config.policy_method, config.policy_precision, policy_rng)
        conveyed = 0.0
        try:
            if chan.kind == ch.PERFECT:
                executed = ch.transmit_perfect(intended, k, rate)
            elif lossless:
                executed = intended
            elif chan.kind == ch.COVERING:
                target = joint(env.state_dist, policy)
                m = ch.covering_encode(states, target, rate, chan.codebook_seed, h, chan.max_codebook)
                executed = ch.covering_decode(m, n, k, target, rate, chan.codebook_seed, h, chan.max_codebook)
            else:
                proxy = ch.project_policy(policy, env.state_dist, rate, tol=config.solver_tol, lam_hint=lam_hint)
                conveyed = proxy.distortion
                if proxy.distortion == 0.0:
                    executed = intended
                else:
                    lam_hint = proxy.lam
                    executed = ch.sample_from_policy(proxy.policy, states, channel_rng)
        except Exception as exc:
            raise SimulationAborted(f"round {h}: {exc}", trace) from exc

        rewards = (reward_rng.random(n) < env.mean_rewards[states, executed]).astype(np.int64)
        increment = float(gaps[states, executed].sum())
        cumulative += increment
        distortion = 0.0
        if executed is not intended and np.any(executed != intended):
            distortion = total_variation(empirical_joint_type(states, executed, env.num_states, k),
                                         empirical_joint_type(states, intended, env.num_states, k))
        if policy is not None:
            rate_bits = mutual_information(env.state_dist, policy)
            opt_prob = policy[np.arange(env.num_states), opt]
        else:
            rate_bits = math.nan
            opt_prob = np.full(env.num_states, math.nan)
        trace.append(RoundTrace(h, rate_bits, opt_prob, increment, distortion, cumulative, conveyed))
        bank = update(bank, np.column_stack([states, executed, rewards]))
    return trace


def system_regret(trace) -> float:
    if not trace:
        raise ValueError("empty trace")
    return trace[-1].cumulative_regret


def per_agent_regret(trace, num_agents: int) -> float:
    if num_agents <= 0:
        raise ValueError("num_agents must be positive")
    return system_regret(trace) / num_agents


def rate_trace(trace) -> list[tuple[int, float]]:
    """(round, policy rate in bits) for every round with diagnostics."""
    return [(t.round, t.policy_rate_bits) for t in trace if not math.isnan(t.policy_rate_bits)]


def _check_bound_args(num_actions, num_states, num_agents, horizon):
    for name, v in (("K", num_actions), ("|S|", num_states), ("N", num_agents), ("T", horizon)):
        if v <= 0:
            raise ValueError(f"{name} must be positive, got {v}")


def bound_system(num_actions, num_states, num_agents, horizon) -> float:
    """Upper bound on Bayesian system regret after ``horizon = N H`` plays."""
    _check_bound_args(num_actions, num_states, num_agents, horizon)
    k, s, n, t = num_actions, num_states, num_agents, horizon
    return 2 * k * s * n + 4 * math.sqrt((2 + 6 * math.log(t)) * k * n * s * t)


def bound_agent(num_actions, num_states, num_agents, horizon) -> float:
    """Upper bound on Bayesian per-agent regret after ``horizon = N H`` plays."""
    _check_bound_args(num_actions, num_states, num_agents, horizon)
    k, s, n, t = num_actions, num_states, num_agents, horizon
    return 2 * k * s + 4 * math.sqrt((2 + 6 * math.log(t)) * k * s * t / n)


@dataclass
class ProbeReport:
    """Regret slopes of a low-rate and a high-rate run of the same problem.

    The low-rate run is linear when its final-window per-round regret stays
    above ``linear_threshold``. The high-rate run is sub-linear when its
    final-window regret has dropped below ``relative_fraction`` of the
    low-rate run's.
    """

    threshold_rate: float
    low_rate: float
    high_rate: float
    low_slope: float
    high_slope: float
    linear_threshold: float
    relative_fraction: float = 0.1
    low_trace: list = field(repr=False, default_factory=list)
    high_trace: list = field(repr=False, default_factory=list)

    @property
    def low_regime(self) -> str:
        return "linear" if self.low_slope >= self.linear_threshold else "sub-linear"

    @property
    def high_regime(self) -> str:
        if self.high_slope < self.linear_threshold or self.high_slope < self.relative_fraction * self.low_slope:
            return "sub-linear"
        return "linear"


def final_window_slope(trace, window: float = 0.25) -> float:
    """Mean per-round regret over the last ``window`` fraction of rounds."""
    count = max(1, int(round(len(trace) * window)))
    return float(np.mean([t.regret_increment for t in trace[-count:]]))


def achievability_probe(low: SimConfig, high: SimConfig, window: float = 0.25,
                        linear_fraction: float = 0.01, relative_fraction: float = 0.1) -> ProbeReport:
    """Run two configs that differ only in channel rate and classify each."""
    if replace(low, channel=high.channel) != high:
        raise ValueError("configs must differ only in the channel")
    if replace(low.channel, rate=high.channel.rate) != high.channel:
        raise ValueError("channels must differ only in rate")
    k = low.env.num_actions
    r_lo, r_hi = low.channel.effective_rate(k), high.channel.effective_rate(k)
    if r_lo > r_hi:
        low, high, r_lo, r_hi = high, low, r_hi, r_lo
    h_star = optimal_arm_entropy(low.env)
    if not r_lo < h_star < r_hi:
        log.warning("rates %.3f, %.3f do not straddle H(A*) = %.3f", r_lo, r_hi, h_star)
    tr_lo, tr_hi = run(low), run(high)
    return ProbeReport(h_star, r_lo, r_hi, final_window_slope(tr_lo, window),
                       final_window_slope(tr_hi, window),
                       linear_fraction * low.num_agents * low.env.min_gap, relative_fraction, tr_lo, tr_hi)
