#!/usr/bin/env python3
"""
Policy rate over time

Runs the three grouped scenarios with a perfect channel and plots the
per-round policy rate, the quantity a channel would have to carry. Output
goes through the same CSV path as the command line tool, so the figure can
be redrawn from demos/out/<scenario>/aggregate.csv alone.

Smaller than the published setting (N=128, H=500) to run in about a minute.
"""
from pathlib import Path

from rcmab import traces
from rcmab.environment import make_grouped_env, optimal_arm_entropy
from rcmab.simulator import SimConfig, run

N, H, SEEDS = 64, 150, 3
root = Path(__file__).parent / "out"

for g in (16, 8, 2):
    out = root / f"groups-{g}"
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for seed in range(SEEDS):
        env = make_grouped_env(16, 16, g, seed)
        trace = run(SimConfig(env, N, H, root_seed=seed))
        files.append(out / f"trace_seed{seed}.csv")
        traces.write_trace(files[-1], trace, N)
    traces.write_aggregate(out / "aggregate.csv", files)
    traces.plot_rate(out / "aggregate.csv", out / "rate.svg", title=f"groups-{g}, N={N}",
                     reference=optimal_arm_entropy(env))
    _, data = traces.read_csv(out / "aggregate.csv")
    print(f"groups-{g:<2} final rate {data[-1, 1]:.3f} +- {data[-1, 2]:.3f} bits -> {out / 'rate.svg'}")
