import csv
import io
import json
import pathlib
import subprocess
import sys

import pytest

from auctionlab.dist import Uniform
from auctionlab.errors import ConfigInvalid
from auctionlab.game import TwoStageProcess, commitment_utility, truthful_utility
from auctionlab.lab import (BEST_RESPONSE_COLUMNS, CONFIGS, ERM_COLUMNS, MECHANISM_COLUMNS, main,
                            resolve_seed)

BUMPS = {"family": "piecewise_empirical",
         "params": {"knots": [[0, 0], [0.2, 0.05], [0.3, 0.6], [0.85, 0.62], [1, 1]]}}


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def rows(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


@pytest.mark.parametrize("command", sorted(CONFIGS))
def test_config_round_trip(command):
    cls = CONFIGS[command]
    cfg = cls()
    again = cls.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again.to_dict() == cfg.to_dict()


@pytest.mark.parametrize("command", sorted(CONFIGS))
def test_unknown_keys_rejected(command):
    with pytest.raises(ConfigInvalid):
        CONFIGS[command].from_dict({"no_such_key": 1})


def test_nash_command(capsys):
    code, out, _ = run(capsys, "nash")
    assert code == 0
    doc = json.loads(out)
    by_k = {r["k"]: r for r in doc["reports"]}
    assert by_k[2]["r_star"] == pytest.approx(0.75, abs=1e-9)
    assert by_k[5]["r_star"] == pytest.approx(0.6, abs=1e-9)
    assert all(r["revenue_equivalent"] and r["utility_equivalent"] for r in doc["reports"])


def test_phase_command(capsys):
    code, out, _ = run(capsys, "phase")
    assert code == 0
    doc = json.loads(out)
    assert 0.757 <= doc["alpha_c"] <= 0.767
    assert doc["utilities_agree"] is True


def test_phase_degenerate_competition_exits_3(capsys, tmp_path):
    cfg = write(tmp_path, {"competition": {"family": "uniform", "params": {"low": 5, "high": 6}}})
    code, _, err = run(capsys, "phase", "--config", cfg)
    assert code == 3
    assert "NoCrossing" in err


def test_mechanisms_command(capsys):
    code, out, _ = run(capsys, "mechanisms")
    assert code == 0
    assert out.splitlines()[0] == ",".join(MECHANISM_COLUMNS)
    table = {r["mechanism"]: r for r in rows(out)}
    assert float(table["Lazy"]["u_truthful"]) == pytest.approx(1 / 12, abs=1e-11)
    assert float(table["Lazy"]["u_threshold"]) == pytest.approx(0.132, abs=1e-3)
    assert float(table["Myerson"]["u_threshold"]) == pytest.approx(7 / 48, abs=1e-11)
    # 12 significant digits
    assert table["Myerson"]["u_threshold"] == "0.145833333333"


def test_mechanisms_non_regular_exits_3(capsys, tmp_path):
    code, _, err = run(capsys, "mechanisms", "--config", write(tmp_path, {"value_law": BUMPS}))
    assert code == 3
    assert "AssumptionViolated" in err


def test_best_response_rows(capsys, tmp_path):
    cfg = write(tmp_path, {"phase1_reserves": ["none"], "alphas": [0.0, 1.0]})
    code, out, _ = run(capsys, "best-response", "--config", cfg)
    assert code == 0
    assert out.splitlines()[0] == ",".join(BEST_RESPONSE_COLUMNS)
    r0, r1 = rows(out)
    assert r0["phase1_reserve"] == "none"
    assert float(r0["x0_star"]) == 0.0
    assert float(r0["u_total"]) == pytest.approx(
        commitment_utility(0.79681213, TwoStageProcess(Uniform(), None, Uniform(), 0.0)), abs=1e-9)
    truthful = truthful_utility(TwoStageProcess(Uniform(), None, Uniform(), 1.0)).u1
    assert float(r1["u_total"]) == pytest.approx(truthful, abs=1e-11)


def test_best_response_grid_flag(capsys, tmp_path):
    cfg = write(tmp_path, {"phase1_reserves": ["none", {"family": "uniform", "params": {}}],
                           "search_grid": 20})
    code, out, _ = run(capsys, "best-response", "--config", cfg, "--grid", "3")
    assert code == 0
    table = rows(out)
    assert len(table) == 6
    assert [r["alpha"] for r in table[:3]] == ["0", "0.5", "1"]
    assert {r["phase1_reserve"] for r in table[3:]} == {"uniform"}


def test_grid_rejected_elsewhere(capsys):
    assert run(capsys, "nash", "--grid", "5")[0] == 2


def test_erm_command_and_summary(capsys, tmp_path):
    cfg = write(tmp_path, {"n_grid": [100, 1000], "trials": 20})
    code, out, _ = run(capsys, "erm", "--config", cfg, "--seed", "1")
    assert code == 0
    assert out.splitlines()[0] == ",".join(ERM_COLUMNS)
    assert len(rows(out)) == 40
    summary = [ln for ln in out.splitlines() if ln.startswith("# summary")]
    assert len(summary) == 3
    assert summary[-1].startswith("# summary all hit_rate=")


def test_erm_empty_grid_exits_2(capsys, tmp_path):
    code, _, err = run(capsys, "erm", "--config", write(tmp_path, {"n_grid": []}))
    assert code == 2
    assert "ConfigInvalid" in err


def test_seed_precedence(monkeypatch):
    monkeypatch.delenv("AUCTIONLAB_SEED", raising=False)
    assert resolve_seed(None, None) == 0
    assert resolve_seed(None, 9) == 9
    monkeypatch.setenv("AUCTIONLAB_SEED", "5")
    assert resolve_seed(None, 9) == 5
    assert resolve_seed(3, 9) == 3
    monkeypatch.setenv("AUCTIONLAB_SEED", "x")
    with pytest.raises(ConfigInvalid):
        resolve_seed(None, None)


def test_env_seed_reaches_erm(capsys, tmp_path, monkeypatch):
    cfg = write(tmp_path, {"n_grid": [200], "trials": 5})
    monkeypatch.setenv("AUCTIONLAB_SEED", "7")
    _, a, _ = run(capsys, "erm", "--config", cfg)
    _, b, _ = run(capsys, "erm", "--config", cfg, "--seed", "7")
    _, c, _ = run(capsys, "erm", "--config", cfg, "--seed", "8")
    assert a == b != c


def test_out_flag_and_determinism(capsys, tmp_path):
    out = tmp_path / "mech.csv"
    assert run(capsys, "mechanisms", "--out", str(out))[0] == 0
    text = out.read_bytes()
    assert b"\r" not in text and text.endswith(b"\n")
    run(capsys, "mechanisms", "--out", str(tmp_path / "again.csv"))
    assert (tmp_path / "again.csv").read_bytes() == text


def test_bad_inputs_exit_2(capsys, tmp_path):
    assert run(capsys, "nash", "--config", str(tmp_path / "missing.json"))[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "nash", "--config", str(bad))[0] == 2
    assert run(capsys, "nash", "--config", write(tmp_path, {"k": [1]}))[0] == 2
    assert run(capsys, "no-such-command")[0] == 2


def test_verify_partial_and_injected_failure(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "--only", "1,3")
    assert code == 0
    assert "1/1" not in out and "2/2 criteria without failure" in out
    code, out, _ = run(capsys, "verify", "--only", "3", "--config", write(tmp_path, {"tol_scale": 0}))
    assert code == 4
    assert "FAIL" in out


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "auctionlab.lab", "nash"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["reports"][0]["k"] == 2


def test_shipped_configs_parse():
    root = pathlib.Path(__file__).resolve().parents[1] / "configs"
    paths = sorted(root.glob("*.json"))
    assert paths
    for p in paths:
        command = next(c for c in sorted(CONFIGS, key=len, reverse=True) if p.stem.startswith(c))
        CONFIGS[command].from_dict(json.loads(p.read_text()))
