import csv
import json

import pytest

from gawcga.cli import main
from gawcga.config import ConfigError, RunConfig, dumps_config, loads_config

TWO_STEP = """
max_steps = 10
[space]
kind = "lq"
q = 2.0
[dictionary]
kind = "canonical"
i0 = 1
N = 3
[element]
indices = [1, 2]
values = [1.0, 0.5]
"""

SWEEP = """
seed = 3
max_steps = 200
stop_tol = 1e-6
[element.random]
size = 60
nonzeros = 20
[sweep]
grid = {t = [0.25, 0.5, 1.0], delta = [0.0, 0.1]}
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_run_two_step(tmp_path):
    cfg = write(tmp_path, "two.toml", TWO_STEP)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    trace = rows(tmp_path / "o" / "trace.csv")
    assert [r["atom_index"] for r in trace] == ["1", "2"]
    assert float(trace[-1]["residual_norm"]) == 0.0
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["final_residual"] == 0.0 and summary["steps"] == 2
    assert "truncation_notice" in summary


def test_run_smooth_witness_reports_divergence(tmp_path):
    cfg = write(tmp_path, "w.toml", 'max_steps = 20\n[element]\nwitness = "smooth-space"\n[element.params]\nK = 20\n')
    assert main(["run", "--config", cfg, "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["diverged_at_horizon"] is True
    assert summary["residual_floor"] == pytest.approx(0.41624366477328, abs=1e-12)


def test_run_bad_exponent_exits_1(tmp_path, capsys):
    cfg = write(tmp_path, "bad.toml", TWO_STEP.replace("q = 2.0", "q = 1.0"))
    assert main(["run", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert "q" in capsys.readouterr().err


def test_run_unknown_field_exits_1(tmp_path):
    cfg = write(tmp_path, "bad.toml", TWO_STEP + "\nbogus = 1\n")
    assert main(["run", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert main(["run", "--config", str(tmp_path / "missing.toml")]) == 1


def test_witness_exit_codes(tmp_path):
    out = str(tmp_path)
    assert main(["witness", "smooth-space", "--param", "K=20", "--out", out]) == 0
    assert main(["witness", "unbounded-eta", "--param", "gap=1", "--out", out]) == 4
    assert main(["witness", "no-such-thing", "--out", out]) == 1


def test_check_command(tmp_path, capsys):
    assert main(["check", "--out", str(tmp_path), "--p", "2", "--horizon", "50"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["flags"]["favorable"] is True
    assert data["label"].startswith("finite-horizon diagnostic")
    assert main(["check", "--out", str(tmp_path), "--alpha", "-1"]) == 1


def test_check_reports_slack_density(tmp_path, capsys):
    cfg = write(tmp_path, "c.toml", "[schedules]\ndelta = 0.25\n[check]\np = 2.0\nhorizon = 100\nalphas = [0.1]\n")
    assert main(["check", "--config", cfg, "--out", str(tmp_path)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["lambda1_density"]["0.1"] == 1.0


def test_modulus_command(tmp_path):
    assert main(["modulus", "--q", "2", "--u", "1.0", "--samples", "500", "--out", str(tmp_path)]) == 0
    table = rows(tmp_path / "modulus.csv")
    assert float(table[0]["empirical_lower"]) <= 2**0.5 - 1 + 1e-12


def test_sweep_rows_and_determinism(tmp_path):
    cfg = write(tmp_path, "s.toml", SWEEP)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "sweep.csv").read_bytes()
    assert a == (tmp_path / "b" / "sweep.csv").read_bytes()
    assert len(rows(tmp_path / "a" / "sweep.csv")) == 6


def test_sweep_empty_grid_exits_1(tmp_path):
    cfg = write(tmp_path, "s.toml", SWEEP.replace("grid = {t = [0.25, 0.5, 1.0], delta = [0.0, 0.1]}", "grid = {t = []}"))
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 1


def test_run_determinism(tmp_path):
    cfg = write(tmp_path, "r.toml", 'seed = 5\nmax_steps = 50\npolicy = "adversarial"\n[schedules]\ndelta = 0.05\n[element.random]\nsize = 40\nnonzeros = 10\n')
    for d in ("x", "y"):
        assert main(["run", "--config", cfg, "--out", str(tmp_path / d)]) == 0
    for name in ("trace.csv", "summary.json"):
        assert (tmp_path / "x" / name).read_bytes() == (tmp_path / "y" / name).read_bytes()


def test_config_round_trip():
    cfg = loads_config(TWO_STEP + '[schedules]\nt = {kind = "power", c = 1.0, a = 0.5}\n')
    again = loads_config(dumps_config(cfg))
    assert again == cfg
    assert RunConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        loads_config("max_steps = 0\n")
