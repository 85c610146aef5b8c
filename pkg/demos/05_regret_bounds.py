#!/usr/bin/env python3
"""
Empirical regret against the Bayesian regret bounds

The bounds are loose; the point is that the empirical curves sit below
them for every N and that the per-agent regret shrinks as more agents
share what they learn.
"""
from rcmab.environment import make_grouped_env
from rcmab.simulator import SimConfig, bound_agent, bound_system, per_agent_regret, run, system_regret

T = 4096
env = make_grouped_env(4, 4, 4, seed=0)
print("  N     H   system regret  bound_system   per-agent  bound_agent")
for n in (1, 4, 16, 64):
    h = T // n
    trace = run(SimConfig(env, n, h, root_seed=0, diagnostics_period=h))
    print(f"{n:3d} {h:5d}   {system_regret(trace):12.1f}  {bound_system(4, 4, n, T):12.1f}   "
          f"{per_agent_regret(trace, n):9.2f}  {bound_agent(4, 4, n, T):11.1f}")
