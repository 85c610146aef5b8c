import csv
import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

from rcmab import traces
from rcmab.cli import ConfigError, main, resolve_experiment
from rcmab.environment import make_grouped_env

from oracles import bound_agent_ref, bound_system_ref

DATA = Path(__file__).parent / "data"


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return path


@pytest.fixture
def small_experiment(tmp_path):
    return write_json(tmp_path / "exp.json", {"scenario": "groups-8", "num_agents": 16, "num_rounds": 25,
                                              "num_seeds": 2, "output_dir": str(tmp_path / "out")})


def test_run_writes_artifacts(small_experiment, tmp_path):
    assert main(["run", str(small_experiment)]) == 0
    out = tmp_path / "out"
    for name in ("trace_seed0.csv", "trace_seed1.csv", "aggregate.csv", "manifest.json", "rate.svg",
                 "env_seed0.json"):
        assert (out / name).is_file(), name
    rows = read_rows(out / "trace_seed0.csv")
    assert list(rows[0]) == list(traces.TRACE_COLUMNS)
    assert len(rows) == 25
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "complete" and manifest["seeds"] == [0, 1]
    assert manifest["experiment"]["num_agents"] == 16
    agg = read_rows(out / "aggregate.csv")
    a0, a1 = read_rows(out / "trace_seed0.csv"), read_rows(out / "trace_seed1.csv")
    h = 10
    vals = [float(a0[h]["policy_rate_bits"]), float(a1[h]["policy_rate_bits"])]
    assert float(agg[h]["policy_rate_bits_mean"]) == pytest.approx(np.mean(vals), rel=1e-15)
    assert float(agg[h]["policy_rate_bits_std"]) == pytest.approx(np.std(vals), rel=1e-12)


def test_run_twice_byte_identical(small_experiment, tmp_path):
    assert main(["run", str(small_experiment), "--output-dir", str(tmp_path / "a")]) == 0
    assert main(["run", str(small_experiment), "--output-dir", str(tmp_path / "b")]) == 0
    for name in ("trace_seed0.csv", "trace_seed1.csv", "aggregate.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_rerun_from_manifest(small_experiment, tmp_path):
    assert main(["run", str(small_experiment)]) == 0
    out = tmp_path / "out"
    before = {p.name: p.read_bytes() for p in out.glob("*.csv")}
    manifest = json.loads((out / "manifest.json").read_text())
    assert main(["run", str(out / "manifest.json"), "--output-dir", str(tmp_path / "again")]) == 0
    for name, data in before.items():
        assert (tmp_path / "again" / name).read_bytes() == data
    again = json.loads((tmp_path / "again" / "manifest.json").read_text())
    assert again["outputs"] == manifest["outputs"]


def test_seed_override(small_experiment, tmp_path):
    assert main(["run", str(small_experiment), "--seed", "7", "--output-dir", str(tmp_path / "s")]) == 0
    assert (tmp_path / "s" / "trace_seed7.csv").is_file()
    assert (tmp_path / "s" / "trace_seed8.csv").is_file()


def test_output_dir_created_and_unwritable(tmp_path, capsys):
    exp = write_json(tmp_path / "e.json", {"scenario": "groups-2", "num_agents": 4, "num_rounds": 3,
                                           "num_seeds": 1, "output_dir": str(tmp_path / "x" / "y")})
    assert main(["run", str(exp)]) == 0
    assert (tmp_path / "x" / "y" / "aggregate.csv").is_file()
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", str(exp), "--output-dir", str(blocker / "sub")]) == 1
    assert "not writable" in capsys.readouterr().err


@pytest.mark.parametrize("raw,needle", [
    ({"scenario": "groups-4"}, "scenario"),
    ({"scenario": "groups-2", "num_agnets": 3}, "num_agnets"),
    ({"scenario": "groups-2", "num_agents": 0}, "num_agents"),
    ({"scenario": "groups-2", "num_seeds": 0}, "num_seeds"),
    ({"scenario": "groups-2", "channel": {"kind": "covering"}}, "channel.rate"),
    ({"scenario": "groups-2", "channel": {"kind": "perfect", "rte": 4}}, "rte"),
    ({"scenario": "groups-2", "policy_method": "simpson"}, "policy_method"),
    ({"scenario": "custom"}, "env_file"),
    ({"scenario": "custom", "env_file": "missing.json"}, "env_file"),
    ({"scenario": "groups-16", "num_actions": 8}, "num_actions"),
])
def test_config_errors_are_field_precise(tmp_path, capsys, raw, needle):
    raw = dict(raw, output_dir=str(tmp_path / "o"))
    exp = write_json(tmp_path / "bad.json", raw)
    assert main(["run", str(exp)]) == 1
    err = capsys.readouterr().err
    assert "config error" in err and needle in err


def test_invalid_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{scenario: ")
    assert main(["run", str(bad)]) == 1
    assert main(["run", str(tmp_path / "nope.json")]) == 1


def test_custom_env(tmp_path):
    env = make_grouped_env(4, 3, 2, seed=1)
    env.save(tmp_path / "env.json")
    exp = write_json(tmp_path / "e.json", {"scenario": "custom", "env_file": "env.json", "num_agents": 4,
                                           "num_rounds": 5, "num_seeds": 2, "output_dir": str(tmp_path / "o")})
    assert main(["run", str(exp)]) == 0
    assert (tmp_path / "o" / "env_seed1.json").read_text() == (tmp_path / "o" / "env_seed0.json").read_text()


def test_partial_run_flagged(tmp_path, capsys):
    exp = write_json(tmp_path / "e.json", {"scenario": "groups-16", "num_agents": 64, "num_rounds": 3,
                                           "num_seeds": 1, "output_dir": str(tmp_path / "o"),
                                           "channel": {"kind": "covering", "rate": 1.0}})
    assert main(["run", str(exp)]) == 2
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["status"] == "partial"
    assert "0" in manifest["failures"]
    assert (tmp_path / "o" / "trace_seed0.partial.csv").is_file()
    assert not (tmp_path / "o" / "aggregate.csv").exists()
    assert "PARTIAL" in capsys.readouterr().err


def test_resolve_fills_defaults():
    exp = resolve_experiment({"scenario": "groups-16", "output_dir": "o"})
    assert exp["num_agents"] == 128 and exp["num_rounds"] == 500 and exp["num_seeds"] == 5
    assert exp["channel"]["kind"] == "perfect"
    with pytest.raises(ConfigError):
        resolve_experiment({"scenario": "groups-16"})


def test_bounds_csv(tmp_path):
    assert main(["bounds", "-K", "4", "-S", "2", "-N", "8", "--t-max", "10000",
                 "--output-dir", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "bounds.csv")
    ts = [int(r["T"]) for r in rows]
    assert ts[0] == 1 and ts[-1] == 10000 and ts == sorted(set(ts))
    for r in (rows[3], rows[len(rows) // 2], rows[-1]):
        t = int(r["T"])
        assert float(r["bound_system"]) == pytest.approx(bound_system_ref(4, 2, 8, t), rel=1e-14)
        assert float(r["bound_agent"]) == pytest.approx(bound_agent_ref(4, 2, 8, t), rel=1e-14)
    for col in ("bound_system", "bound_agent"):
        vals = [float(r[col]) for r in rows]
        assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_bounds_n1_columns_coincide(capsys):
    assert main(["bounds", "-K", "2", "-S", "3", "-N", "1", "--t-max", "500", "--points", "7"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "T,bound_system,bound_agent"
    for line in lines[1:]:
        _, a, b = line.split(",")
        assert a == b


def test_bounds_invalid():
    assert main(["bounds", "-K", "0", "-S", "2", "-N", "1", "--t-max", "10"]) == 1
    assert main(["bounds", "-K", "2", "-S", "2", "-N", "1", "--t-max", "0"]) == 1


def test_rd_matches_shipped_table(tmp_path):
    table = json.loads((DATA / "rd_2x2_table.json").read_text())
    for i, case in enumerate(table["cases"]):
        pol = write_json(tmp_path / f"p{i}.json", {"policy": case["policy"]})
        ps = write_json(tmp_path / f"s{i}.json", case["state_dist"])
        grid = ",".join(str(d) for d, _ in case["rows"])
        out = tmp_path / f"o{i}"
        assert main(["rd", "--policy", str(pol), "--state-dist", str(ps), "--grid", grid,
                     "--output-dir", str(out)]) == 0
        rows = read_rows(out / "rd.csv")
        rates = [float(r["rate_bits"]) for r in rows]
        assert all(r["converged"] == "1" for r in rows)
        for (d, ref), row in zip(case["rows"], rows):
            assert float(row["D"]) == d
            assert abs(float(row["rate_bits"]) - ref) <= 1e-3
        assert rates[0] == pytest.approx(
            float(np.asarray(case["rows"])[0, 1]), abs=1e-12)
        assert all(b <= a + 1e-9 for a, b in zip(rates, rates[1:]))


def test_rd_flags_nonconvergence(tmp_path, capsys):
    pol = write_json(tmp_path / "p.json", [[0.9, 0.1, 0.0], [0.05, 0.05, 0.9], [0.2, 0.7, 0.1]])
    ps = write_json(tmp_path / "s.json", {"state_dist": [0.2, 0.3, 0.5]})
    code = main(["rd", "--policy", str(pol), "--state-dist", str(ps), "--grid", "0,0.1", "--tol", "1e-9",
                 "--max-iter", "3"])
    out = capsys.readouterr()
    rows = list(csv.DictReader(out.out.splitlines()))
    assert rows[0]["converged"] == "1"
    assert rows[1]["converged"] == "0"
    assert code == 2 and "did not converge" in out.err


def test_rd_bad_input(tmp_path):
    pol = write_json(tmp_path / "p.json", [[0.9, 0.3], [0.5, 0.5]])
    ps = write_json(tmp_path / "s.json", [0.5, 0.5])
    assert main(["rd", "--policy", str(pol), "--state-dist", str(ps)]) == 1
    good = write_json(tmp_path / "g.json", [[1, 0], [0, 1]])
    assert main(["rd", "--policy", str(good), "--state-dist", str(ps), "--grid", "0,-1"]) == 1


def test_plot_from_csv_alone(small_experiment, tmp_path):
    assert main(["run", str(small_experiment)]) == 0
    agg = tmp_path / "out" / "aggregate.csv"
    lone = tmp_path / "lone"
    lone.mkdir()
    copy = lone / "aggregate.csv"
    copy.write_bytes(agg.read_bytes())
    assert main(["plot", str(copy), str(lone / "r.svg"), "--reference", "3"]) == 0
    assert (lone / "r.svg").read_text().lstrip().startswith("<?xml")
    assert main(["plot", str(lone / "missing.csv"), str(lone / "x.svg")]) == 1


def test_trace_nan_rows_roundtrip(tmp_path):
    from rcmab.simulator import SimConfig, run

    trace = run(SimConfig(make_grouped_env(2, 2, 2, 0), 2, 6, diagnostics_period=3))
    traces.write_trace(tmp_path / "t.csv", trace, 2)
    header, data = traces.read_csv(tmp_path / "t.csv")
    assert header == list(traces.TRACE_COLUMNS)
    assert math.isnan(data[1, 1]) and not math.isnan(data[2, 1])
    assert data[-1, 3] == pytest.approx(data[-1, 2] / 2)


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "rcmab", "--version"], capture_output=True, text=True,
                         env=dict(os.environ))
    assert res.returncode == 0 and "rcmab" in res.stdout
