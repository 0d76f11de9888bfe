import csv
import json
import math
from pathlib import Path

import pytest

from fairtime.cli import main

CONFIG_DIR = Path(__file__).parent.parent / "configs"

SUMMARY_HEADER = [
    "policy", "alpha", "budget", "v", "trials", "group", "label",
    "mean_time_share", "se_time_share", "mean_reward_rate", "se_reward_rate",
    "utility", "regret",
]


def write_config(tmp_path, name="cfg.json", **overrides):
    data = {
        "schema_version": 1,
        "seed": 99,
        "groups": [
            {
                "label": "group1",
                "completion": {"pareto": {"scale": 1.0, "shape": 1.2}},
                "reward": {"power_of_time": {"exponent": 0.6}},
            },
            {
                "label": "group2",
                "completion": {"pareto": {"scale": 1.0, "shape": 1.4}},
                "reward": {"power_of_time": {"exponent": 0.2}},
            },
        ],
        "deadlines": [1.5, 2, 3, 4, 5, 7, 10, 15, 20],
        "utility": {"alpha": 1.0},
        "experiment": {"kind": "simulate", "policy": "oracle_srp", "budget": 300, "trials": 8},
    }
    data.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_offline_subcommand(tmp_path, capsys):
    code = main(["offline", str(CONFIG_DIR / "two_group_offline.json"),
                 "--out-dir", str(tmp_path)])
    assert code == 0
    rows = read_rows(tmp_path / "offline.csv")
    assert rows[0] == ["group", "label", "deadline", "rate", "mean_processing_time",
                       "mean_reward", "time_share", "selection", "multiplier",
                       "utility_rate"]
    assert len(rows) == 3
    # proportional fairness splits the budget evenly
    assert float(rows[1][6]) == pytest.approx(0.5, abs=1e-9)
    assert float(rows[2][6]) == pytest.approx(0.5, abs=1e-9)
    assert "multiplier = 2" in capsys.readouterr().out


def test_moments_subcommand(tmp_path):
    code = main(["moments", write_config(tmp_path), "--out-dir", str(tmp_path)])
    assert code == 0
    rows = read_rows(tmp_path / "moments.csv")
    assert rows[0] == ["group", "label", "deadline", "mean_processing_time",
                       "expected_reward", "rate"]
    assert len(rows) == 1 + 2 * 9


def test_simulate_oracle_srp(tmp_path):
    code = main(["simulate", write_config(tmp_path), "--out-dir", str(tmp_path)])
    assert code == 0
    rows = read_rows(tmp_path / "summary.csv")
    assert rows[0] == SUMMARY_HEADER
    assert len(rows) == 3
    assert [r[0] for r in rows[1:]] == ["oracle_srp", "oracle_srp"]
    assert [r[5] for r in rows[1:]] == ["1", "2"]
    assert rows[1][3] == ""  # v is not applicable to SRP policies


def test_simulate_online_auto_v_echo(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        experiment={"kind": "simulate", "policy": "online", "budget": 200, "trials": 4},
    )
    assert main(["simulate", cfg, "--out-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "auto: sqrt(budget/log(budget))" in out
    rows = read_rows(tmp_path / "summary.csv")
    assert float(rows[1][3]) == pytest.approx(math.sqrt(200 / math.log(200)))


def test_simulate_trace_written(tmp_path):
    cfg = write_config(
        tmp_path,
        experiment={"kind": "simulate", "policy": "online", "budget": 100, "trials": 4},
        v=15.0,
        trace=True,
    )
    assert main(["simulate", cfg, "--out-dir", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "trace.csv")
    assert rows[0] == ["task", "group", "deadline", "elapsed", "reward",
                       "queue_1", "queue_2", "target_rate_1", "target_rate_2"]
    assert len(rows) > 20
    assert [r[0] for r in rows[1:4]] == ["1", "2", "3"]


def test_regret_subcommand(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        experiment={"kind": "regret", "budget_grid": [50, 100, 400, 2000], "trials": 4},
    )
    assert main(["regret", cfg, "--out-dir", str(tmp_path)]) == 0
    assert "v per point: sqrt(budget/log(budget))" in capsys.readouterr().out
    rows = read_rows(tmp_path / "regret.csv")
    assert rows[0] == ["budget", "v", "regret", "stderr", "slope_fit"]
    assert len(rows) == 1 + 4 + 1            # one row per budget plus the slope row
    assert [r[0] for r in rows[1:5]] == ["50", "100", "400", "2000"]
    assert all(r[4] == "" for r in rows[1:5])
    assert rows[5][:4] == ["", "", "", ""]
    float(rows[5][4])  # the slope parses as a number


def test_seed_and_trials_overrides(tmp_path):
    cfg = write_config(tmp_path)
    assert main(["simulate", cfg, "--out-dir", str(tmp_path),
                 "--seed", "123", "--trials", "6"]) == 0
    rows = read_rows(tmp_path / "summary.csv")
    assert rows[1][4] == "6"


def test_byte_identical_outputs_across_runs_and_threads(tmp_path):
    cfg = write_config(
        tmp_path,
        experiment={"kind": "simulate", "policy": "online", "budget": 200, "trials": 10},
        v=10.0,
    )
    bodies = []
    for i, threads in enumerate(("1", "4")):
        out = tmp_path / f"run{i}"
        out.mkdir()
        assert main(["simulate", cfg, "--out-dir", str(out), "--threads", threads]) == 0
        bodies.append((out / "summary.csv").read_bytes())
    assert bodies[0] == bodies[1]


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"schema_version": 1}))
    assert main(["offline", str(bad), "--out-dir", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_kind_mismatch_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, experiment={"kind": "offline"})
    assert main(["simulate", cfg, "--out-dir", str(tmp_path)]) == 2
    assert "experiment.kind" in capsys.readouterr().err


def test_numerical_failure_exit_code(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        groups=[
            {
                "label": "never-finishes",
                "completion": {"deterministic": {"value": 50.0}},
                "reward": {"constant": {"value": 1.0}},
            }
        ],
        deadlines=[1.0, 2.0],
        experiment={"kind": "offline"},
    )
    assert main(["offline", cfg, "--out-dir", str(tmp_path)]) == 3
    assert "numerical failure" in capsys.readouterr().err
