"""CSV traces, per-round aggregation and the rate plot.

Per-seed files have the columns in ``TRACE_COLUMNS``. The aggregate file
has ``round`` followed by ``<column>_mean`` and ``<column>_std`` for every
other column, the standard deviation being the population one over seeds.
Floats are written with ``repr`` so identical runs give identical bytes;
rounds without diagnostics hold ``nan`` in the rate and probability columns.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

TRACE_COLUMNS = ("round", "policy_rate_bits", "cumulative_system_regret",
                 "cumulative_agent_regret", "empirical_distortion", "min_optimal_prob")
METRICS = TRACE_COLUMNS[1:]


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def trace_rows(trace, num_agents: int) -> list[tuple]:
    """One CSV row per ``RoundTrace``."""
    rows = []
    for t in trace:
        probs = np.asarray(t.optimal_prob_per_state, dtype=float)
        min_prob = math.nan if np.isnan(probs).any() else float(probs.min())
        rows.append((int(t.round), float(t.policy_rate_bits), float(t.cumulative_regret),
                     float(t.cumulative_regret) / num_agents, float(t.empirical_distortion), min_prob))
    return rows


def write_rows(fh, header, rows) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        write_rows(fh, header, rows)


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header and a float array of the rows."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        data = [[float(x) for x in row] for row in r]
    return header, np.array(data, dtype=float).reshape(-1, len(header))


def write_trace(path, trace, num_agents: int) -> None:
    write_csv(path, TRACE_COLUMNS, trace_rows(trace, num_agents))


def aggregate(per_seed: list[np.ndarray]) -> tuple[list[str], np.ndarray]:
    """Mean and standard deviation over seeds of equal-length trace arrays."""
    if not per_seed:
        raise ValueError("nothing to aggregate")
    stack = np.stack(per_seed)
    if not np.array_equal(stack[:, :, 0], np.broadcast_to(stack[0, :, 0], stack[:, :, 0].shape)):
        raise ValueError("traces cover different rounds")
    header = ["round"]
    cols = [stack[0, :, 0]]
    for i, name in enumerate(METRICS, start=1):
        header += [f"{name}_mean", f"{name}_std"]
        cols += [stack[:, :, i].mean(axis=0), stack[:, :, i].std(axis=0)]
    return header, np.column_stack(cols)


def write_aggregate(path, trace_files) -> None:
    arrays = [read_csv(f)[1] for f in trace_files]
    header, data = aggregate(arrays)
    rows = [(int(r[0]), *r[1:]) for r in data]
    write_csv(path, header, rows)


def plot_rate(aggregate_csv, out_path, title: str | None = None, reference: float | None = None) -> None:
    """Policy rate against round with a +-1 std band, read from an aggregate CSV."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    header, data = read_csv(aggregate_csv)
    col = {name: i for i, name in enumerate(header)}
    keep = ~np.isnan(data[:, col["policy_rate_bits_mean"]])
    h = data[keep, col["round"]]
    mean = data[keep, col["policy_rate_bits_mean"]]
    std = data[keep, col["policy_rate_bits_std"]]

    plt.rcParams["svg.hashsalt"] = "rcmab"
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(h, mean, lw=1.5, label="I(S;A)")
    ax.fill_between(h, mean - std, mean + std, alpha=0.3)
    if reference is not None:
        ax.axhline(reference, color="k", ls="--", lw=1, label="H(A*)")
    ax.set_xlabel("round")
    ax.set_ylabel("policy rate [bits]")
    if title:
        ax.set_title(title)
    ax.legend(loc="lower right")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, metadata={"Date": None} if Path(out_path).suffix == ".svg" else None)
    plt.close(fig)
