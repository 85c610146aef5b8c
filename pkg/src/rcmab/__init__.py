"""Remote contextual multi-armed bandit lab.

Thompson sampling over many parallel agents whose actions cross a
rate-limited channel, with the policy rate ``I(S;A)``, a constrained
rate-distortion solver, channel models and regret bounds.
"""
__version__ = "0.1.0"

from .environment import (EnvironmentSpec, make_grouped_env, optimal_arm_entropy, sample_reward,
                          sample_rewards, sample_state, sample_states)
from .thompson import (PosteriorBank, action_distribution, full_policy, init_posteriors, sample_action,
                       sample_actions, update)
from .infotheory import (RDResult, SolverError, empirical_joint_type, entropy, mutual_information,
                         rate_to_distortion, rd_policy_compression, total_variation)
from .channel import (ChannelScheme, covering_decode, covering_encode, transmit_perfect,
                      transmit_projected_policy)
from .simulator import (RoundTrace, SimConfig, achievability_probe, bound_agent, bound_system,
                        per_agent_regret, rate_trace, run, system_regret)

__all__ = [
    "EnvironmentSpec", "make_grouped_env", "optimal_arm_entropy", "sample_reward", "sample_rewards",
    "sample_state", "sample_states",
    "PosteriorBank", "action_distribution", "full_policy", "init_posteriors", "sample_action",
    "sample_actions", "update",
    "RDResult", "SolverError", "empirical_joint_type", "entropy", "mutual_information",
    "rate_to_distortion", "rd_policy_compression", "total_variation",
    "ChannelScheme", "covering_decode", "covering_encode", "transmit_perfect", "transmit_projected_policy",
    "RoundTrace", "SimConfig", "achievability_probe", "bound_agent", "bound_system", "per_agent_regret",
    "rate_trace", "run", "system_regret",
]
