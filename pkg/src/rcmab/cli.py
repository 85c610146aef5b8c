"""Command-line front end.

    rcmab run EXPERIMENT.json      simulate a scenario over several seeds
    rcmab bounds --num-actions K --num-states S --num-agents N --t-max T
    rcmab rd --policy P.json --state-dist PS.json --grid 0,0.05,0.1
    rcmab plot AGGREGATE.csv OUT.svg

Exit codes: 0 success, 1 configuration error, 2 runtime or solver failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import channel as ch
from . import traces
from .environment import EnvironmentSpec, make_grouped_env, optimal_arm_entropy
from .infotheory import SolverError, check_policy, mutual_information, rd_policy_compression
from .simulator import SimConfig, SimulationAborted, bound_agent, bound_system, run
from .thompson import METHODS, QUADRATURE

log = logging.getLogger("rcmab")

SCENARIOS = {"groups-16": 16, "groups-8": 8, "groups-2": 2, "custom": None}

DEFAULTS = {
    "scenario": None,
    "env_file": None,
    "num_states": 16,
    "num_actions": 16,
    "num_agents": 128,
    "num_rounds": 500,
    "channel": {"kind": ch.PERFECT, "rate": None, "codebook_seed": 0, "max_codebook": ch.DEFAULT_MAX_CODEBOOK},
    "policy_method": QUADRATURE,
    "policy_precision": None,
    "root_seed": 0,
    "diagnostics_period": 1,
    "solver_tol": 1e-3,
    "output_dir": None,
    "num_seeds": 5,
}


class ConfigError(ValueError):
    pass


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def resolve_experiment(raw: dict, base_dir: Path = Path(".")) -> dict:
    """Fill defaults into an experiment dict and validate every field."""
    if not isinstance(raw, dict):
        raise ConfigError("experiment file must hold a JSON object")
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown field(s): {', '.join(unknown)}")
    exp = {k: (dict(v) if isinstance(v, dict) else v) for k, v in DEFAULTS.items()}
    for k, v in raw.items():
        if k == "channel":
            if not isinstance(v, dict):
                raise ConfigError("field 'channel': expected an object")
            bad = sorted(set(v) - set(DEFAULTS["channel"]))
            if bad:
                raise ConfigError(f"unknown field(s) in 'channel': {', '.join(bad)}")
            exp["channel"].update(v)
        else:
            exp[k] = v

    if exp["scenario"] not in SCENARIOS:
        raise ConfigError(f"field 'scenario': expected one of {sorted(SCENARIOS)}, got {exp['scenario']!r}")
    if exp["scenario"] == "custom":
        if not exp["env_file"]:
            raise ConfigError("field 'env_file': required for scenario 'custom'")
        path = Path(exp["env_file"])
        if not path.is_absolute():
            path = base_dir / path
        if not path.is_file():
            raise ConfigError(f"field 'env_file': {path} does not exist")
        exp["env_file"] = str(path.resolve())
    elif exp["env_file"] is not None:
        raise ConfigError("field 'env_file': only allowed with scenario 'custom'")

    for name in ("num_states", "num_actions", "num_agents", "num_rounds", "diagnostics_period", "num_seeds"):
        if not _is_int(exp[name]) or exp[name] < 1:
            raise ConfigError(f"field '{name}': expected a positive integer, got {exp[name]!r}")
    if not _is_int(exp["root_seed"]) or exp["root_seed"] < 0:
        raise ConfigError(f"field 'root_seed': expected a non-negative integer, got {exp['root_seed']!r}")
    if exp["policy_method"] not in METHODS:
        raise ConfigError(f"field 'policy_method': expected one of {list(METHODS)}, got {exp['policy_method']!r}")
    p = exp["policy_precision"]
    if p is not None and (not _is_int(p) or p < 1):
        raise ConfigError(f"field 'policy_precision': expected a positive integer or null, got {p!r}")
    if not _is_num(exp["solver_tol"]) or exp["solver_tol"] <= 0:
        raise ConfigError(f"field 'solver_tol': expected a positive number, got {exp['solver_tol']!r}")
    if exp["output_dir"] is None or not isinstance(exp["output_dir"], str):
        raise ConfigError("field 'output_dir': required (or pass --output-dir)")

    chan = exp["channel"]
    if chan["kind"] not in ch.KINDS:
        raise ConfigError(f"field 'channel.kind': expected one of {list(ch.KINDS)}, got {chan['kind']!r}")
    if chan["rate"] is not None and (not _is_num(chan["rate"]) or chan["rate"] < 0):
        raise ConfigError(f"field 'channel.rate': expected a non-negative number, got {chan['rate']!r}")
    if chan["rate"] is None and chan["kind"] != ch.PERFECT:
        raise ConfigError(f"field 'channel.rate': required for kind {chan['kind']!r}")
    if not _is_int(chan["codebook_seed"]) or chan["codebook_seed"] < 0:
        raise ConfigError("field 'channel.codebook_seed': expected a non-negative integer")
    if not _is_int(chan["max_codebook"]) or chan["max_codebook"] < 1:
        raise ConfigError("field 'channel.max_codebook': expected a positive integer")

    if exp["scenario"] != "custom":
        g = SCENARIOS[exp["scenario"]]
        if exp["num_states"] % g or g > exp["num_actions"]:
            raise ConfigError(f"fields 'num_states'/'num_actions': {exp['scenario']} needs {g} | num_states "
                              f"and num_actions >= {g}")
    return exp


def load_experiment(path) -> dict:
    """Read an experiment file, or the ``experiment`` entry of a run manifest."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if isinstance(raw, dict) and "experiment" in raw and "outputs" in raw:
        raw = raw["experiment"]
    return raw


def build_env(exp: dict, seed: int) -> EnvironmentSpec:
    if exp["scenario"] == "custom":
        return EnvironmentSpec.load(exp["env_file"])
    return make_grouped_env(exp["num_states"], exp["num_actions"], SCENARIOS[exp["scenario"]], seed)


def build_config(exp: dict, env: EnvironmentSpec, seed: int) -> SimConfig:
    return SimConfig(env=env, num_agents=exp["num_agents"], num_rounds=exp["num_rounds"],
                     channel=ch.ChannelScheme(**exp["channel"]), policy_method=exp["policy_method"],
                     policy_precision=exp["policy_precision"], root_seed=seed,
                     diagnostics_period=exp["diagnostics_period"], solver_tol=float(exp["solver_tol"]))


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _prepare_dir(path: Path) -> None:
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {path} is not writable: {exc}") from exc


def cmd_run(args) -> int:
    raw = load_experiment(args.experiment)
    if args.output_dir is not None:
        raw["output_dir"] = args.output_dir
    if args.seed is not None:
        raw["root_seed"] = args.seed
    exp = resolve_experiment(raw, Path(args.experiment).resolve().parent)
    out = Path(exp["output_dir"])
    _prepare_dir(out)
    exp["output_dir"] = str(out)

    seeds = [exp["root_seed"] + i for i in range(exp["num_seeds"])]
    complete, failures, outputs = [], {}, []
    h_star = None
    for seed in seeds:
        env = build_env(exp, seed)
        h_star = optimal_arm_entropy(env)
        env_path = out / f"env_seed{seed}.json"
        env.save(env_path)
        outputs.append(env_path)
        config = build_config(exp, env, seed)
        log.info("seed %d: %s, N=%d, H=%d, channel %s", seed, exp["scenario"], config.num_agents,
                 config.num_rounds, config.channel.kind)
        try:
            trace = run(config)
            path = out / f"trace_seed{seed}.csv"
            complete.append(path)
        except SimulationAborted as exc:
            trace = exc.trace
            path = out / f"trace_seed{seed}.partial.csv"
            failures[str(seed)] = {"error": str(exc), "rounds_completed": len(trace)}
            log.error("seed %d aborted: %s", seed, exc)
        traces.write_trace(path, trace, config.num_agents)
        outputs.append(path)
        if trace:
            print(f"seed {seed}: {len(trace)} rounds, final rate {trace[-1].policy_rate_bits:.4f} bits, "
                  f"system regret {trace[-1].cumulative_regret:.2f}")

    if complete:
        agg = out / "aggregate.csv"
        traces.write_aggregate(agg, complete)
        outputs.append(agg)
        plot = out / "rate.svg"
        traces.plot_rate(agg, plot, title=f"{exp['scenario']}, N={exp['num_agents']}", reference=h_star)

    manifest = {
        "version": __version__,
        "experiment": exp,
        "seeds": seeds,
        "status": "partial" if failures else "complete",
        "failures": failures,
        "aggregate_over": [p.name for p in complete],
        "outputs": {p.name: _sha256(p) for p in outputs},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(outputs)} files to {out}")
    if failures:
        print(f"PARTIAL: {len(failures)} of {len(seeds)} seeds aborted; see manifest.json", file=sys.stderr)
        return 2
    return 0


def _log_grid(t_max: int, points: int) -> list[int]:
    if t_max < 1 or points < 1:
        raise ConfigError("t-max and points must be positive")
    grid = np.unique(np.round(np.logspace(0, math.log10(t_max), points)).astype(np.int64))
    return sorted(set(int(t) for t in grid) | {1, t_max})


def _emit(header, rows, out_dir, name) -> None:
    if out_dir is None:
        traces.write_rows(sys.stdout, header, rows)
    else:
        path = Path(out_dir)
        _prepare_dir(path)
        traces.write_csv(path / name, header, rows)
        print(f"wrote {path / name}", file=sys.stderr)


def cmd_bounds(args) -> int:
    for name in ("num_actions", "num_states", "num_agents"):
        if getattr(args, name) < 1:
            raise ConfigError(f"--{name.replace('_', '-')} must be positive")
    rows = [(t, bound_system(args.num_actions, args.num_states, args.num_agents, t),
             bound_agent(args.num_actions, args.num_states, args.num_agents, t))
            for t in _log_grid(args.t_max, args.points)]
    _emit(("T", "bound_system", "bound_agent"), rows, args.output_dir, "bounds.csv")
    return 0


def _load_array(path, key):
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if isinstance(raw, dict):
        if key not in raw:
            raise ConfigError(f"{path}: expected a list or an object with '{key}'")
        raw = raw[key]
    return np.asarray(raw, dtype=float)


def _parse_grid(text: str) -> list[float]:
    try:
        grid = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"--grid: {exc}") from exc
    if not grid or any(d < 0 for d in grid):
        raise ConfigError("--grid: expected non-negative comma-separated values")
    return sorted(grid)


def cmd_rd(args) -> int:
    ps = _load_array(args.state_dist, "state_dist")
    try:
        policy = check_policy(_load_array(args.policy, "policy"), ps.size)
        mutual_information(ps, policy)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows, flagged = [], 0
    for d in _parse_grid(args.grid):
        res = rd_policy_compression(ps, policy, d, tol=args.tol, max_iter=args.max_iter, strict=False)
        ok = res.gap <= args.tol
        flagged += not ok
        rows.append((d, res.rate, res.lower_bound, res.distortion, int(ok)))
    _emit(("D", "rate_bits", "lower_bound_bits", "distortion", "converged"), rows, args.output_dir, "rd.csv")
    if flagged:
        print(f"{flagged} grid point(s) did not converge to {args.tol} bits", file=sys.stderr)
        return 2
    return 0


def cmd_plot(args) -> int:
    if not Path(args.aggregate).is_file():
        raise ConfigError(f"{args.aggregate} does not exist")
    traces.plot_rate(args.aggregate, args.out, title=args.title, reference=args.reference)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", default=None, help="directory for outputs (created if missing)")
    common.add_argument("--seed", type=int, default=None, help="override the root seed")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")

    parser = argparse.ArgumentParser(prog="rcmab", description="Remote contextual bandit lab.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run an experiment file (or re-run a manifest)")
    p.add_argument("experiment")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bounds", parents=[common], help="regret bound curves")
    p.add_argument("--num-actions", "-K", type=int, required=True)
    p.add_argument("--num-states", "-S", type=int, required=True)
    p.add_argument("--num-agents", "-N", type=int, required=True)
    p.add_argument("--t-max", type=int, required=True)
    p.add_argument("--points", type=int, default=50)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("rd", parents=[common], help="rate-distortion curve of a policy")
    p.add_argument("--policy", required=True, help="JSON matrix, or object with 'policy'")
    p.add_argument("--state-dist", required=True, help="JSON vector, or object with 'state_dist'")
    p.add_argument("--grid", default="0,0.05,0.1,0.2", help="comma-separated distortion values")
    p.add_argument("--tol", type=float, default=1e-4, help="certified accuracy in bits")
    p.add_argument("--max-iter", type=int, default=100_000, help="iteration budget per grid point")
    p.set_defaults(func=cmd_rd)

    p = sub.add_parser("plot", parents=[common], help="redraw the rate plot from an aggregate CSV")
    p.add_argument("aggregate")
    p.add_argument("out")
    p.add_argument("--title", default=None)
    p.add_argument("--reference", type=float, default=None, help="draw a horizontal line at this rate")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (SolverError, ch.ChannelError, SimulationAborted) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
