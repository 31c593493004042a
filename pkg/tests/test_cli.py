import csv
import json
import subprocess
import sys

import pytest

from rbinit import io
from rbinit.cli import main
from rbinit.config import ConfigError, RunConfig


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def write_lines(path, records):
    path.write_text("".join((r if isinstance(r, str) else json.dumps(r)) + "\n" for r in records))
    return path


def test_simulate_outputs(tmp_path):
    assert main(["simulate", "--seed", "3", "--out", str(tmp_path)]) == 0
    snaps = (tmp_path / "snapshots.jsonl").read_text().splitlines()
    assert len(snaps) == 8
    assert set(json.loads(snaps[0])) == {"ell", "x0_hat", "P0_diag", "P0", "x_hat", "particles"}
    assert len(read_csv(tmp_path / "trace.csv")) == 8
    assert (tmp_path / "effective_config.json").is_file()


def test_simulate_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--seed", "42", "--out", str(a)]) == 0
    assert main(["simulate", "--seed", "42", "--out", str(b)]) == 0
    for name in ("trace.csv", "snapshots.jsonl", "measurements.jsonl"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_missing_scenario_names_path(tmp_path, capsys):
    cfg = write_lines(tmp_path / "c.json", [{"scenario": "nowhere.json"}])
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "nowhere.json" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "absent.json")]) == 2
    assert "absent.json" in capsys.readouterr().err


def test_unknown_config_key(tmp_path):
    cfg = write_lines(tmp_path / "c.json", [{"gama": 0.2}])
    assert main(["dump-config", "--config", str(cfg)]) == 2


@pytest.mark.parametrize("flags", [["--gamma", "1.5"], ["--alpha", "0.5"], ["--gamma-cov", "1,1,1"],
                                   ["--sigma", "0"], ["--granularity-deg", "50"]])
def test_bad_parameters_rejected(flags, tmp_path):
    assert main(["simulate", "--out", str(tmp_path), *flags]) == 2


def test_rmse_sweep_default_rows(tmp_path):
    assert main(["rmse-sweep", "--realizations", "1", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "rmse.csv")
    assert len(rows) == 40
    assert list(rows[0]) == io.RMSE_HEADER
    assert sorted({int(r["n_particles"]) for r in rows}) == [144, 576, 2304, 9216, 36864]


def test_rmse_sweep_rejects_granularity_not_dividing_360(tmp_path):
    assert main(["rmse-sweep", "--realizations", "1", "--granularity-deg", "45,7",
                 "--out", str(tmp_path)]) == 2


def test_replay_matches_simulate(tmp_path):
    sim, rep = tmp_path / "sim", tmp_path / "rep"
    assert main(["simulate", "--seed", "8", "--out", str(sim)]) == 0
    assert main(["replay", str(sim / "measurements.jsonl"), "--seed", "8", "--out", str(rep)]) == 0
    a, b = read_csv(sim / "trace.csv"), read_csv(rep / "trace.csv")
    assert len(a) == len(b) == 8
    for ra, rb in zip(a, b):
        for col in io.TRACE_HEADER:
            assert ra[col] == rb[col]
    assert (sim / "snapshots.jsonl").read_bytes() == (rep / "snapshots.jsonl").read_bytes()


def test_replay_malformed_line_number(tmp_path, capsys):
    log = write_lines(tmp_path / "log.jsonl", [
        {"t": 0, "range": 10.0, "ref": [0, 0, 0]},
        {"t": 1, "dr": [1, 0, 0], "Q_diag": [0, 0, 0, 0]},
    ])
    assert main(["replay", str(log), "--out", str(tmp_path / "o")]) == 2
    assert "line 2" in capsys.readouterr().err


def test_replay_bad_json_line_number(tmp_path, capsys):
    log = write_lines(tmp_path / "log.jsonl", [{"t": 0, "range": 10.0, "ref": [0, 0, 0]}, "{oops"])
    assert main(["replay", str(log), "--out", str(tmp_path / "o")]) == 2
    assert "line 2" in capsys.readouterr().err


def test_replay_rejects_out_of_order(tmp_path, capsys):
    log = write_lines(tmp_path / "log.jsonl", [
        {"t": 2, "dr": [1, 0, 0, 0], "Q_diag": [0, 0, 0, 0]},
        {"t": 1, "range": 10.0, "ref": [0, 0, 0]},
    ])
    assert main(["replay", str(log), "--out", str(tmp_path / "o")]) == 2
    assert "line 2" in capsys.readouterr().err


def test_replay_empty_log(tmp_path, caplog):
    log = write_lines(tmp_path / "log.jsonl", [])
    out = tmp_path / "o"
    assert main(["replay", str(log), "--out", str(out)]) == 0
    assert "no range" in caplog.text
    assert not out.exists()


def test_replay_missing_log(tmp_path, capsys):
    assert main(["replay", str(tmp_path / "nope.jsonl")]) == 2
    assert "nope.jsonl" in capsys.readouterr().err


def test_oracle_compare_report(tmp_path, capsys):
    assert main(["oracle-compare", "--realizations", "2", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "oracle_compare.csv")
    assert len(rows) == 8
    assert float(rows[-1]["trig_ratio"]) > 10
    out = capsys.readouterr().out
    assert "init" in out and "oracle" in out and "difference" in out


def test_config_round_trip(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    assert main(["dump-config", "--gamma", "0.2", "--alpha", "1.1", "--seed", "5",
                 "--granularity-deg", "45", "--out", str(tmp_path)]) == 0
    (tmp_path / "effective_config.json").rename(cfg_path)
    cfg = RunConfig.load(cfg_path)
    assert cfg.gamma == 0.2 and cfg.alpha == 1.1 and cfg.bearing_granularity_deg == 45
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", str(cfg_path), "--out", str(a)]) == 0
    assert main(["simulate", "--gamma", "0.2", "--alpha", "1.1", "--seed", "5",
                 "--granularity-deg", "45", "--out", str(b)]) == 0
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()


def test_config_degree_conversion():
    init = RunConfig(gamma_cov=[1, 1, 1, 100]).build_init()
    assert init.gamma_cov[3] == pytest.approx(0.030461741978670857)
    with pytest.raises(ConfigError):
        RunConfig(realizations=0).validate()


def test_console_script_runs(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "rbinit.cli", "dump-config"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["gamma"] == 0.1
