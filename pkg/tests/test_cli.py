import json
import shutil
import subprocess
from pathlib import Path

import jsonschema
import pytest

from switchstab.cli import main
from switchstab.schemas import BY_KIND, CONFIG, SIGNAL

CONFIGS = Path(__file__).resolve().parents[1] / "scripts" / "configs"
DECOUPLED = str(CONFIGS / "decoupled.json")
SCALAR = str(CONFIGS / "scalar_decay.json")


def run(*argv) -> int:
    return main([str(a) for a in argv])


def load(path):
    return json.loads(Path(path).read_text())


def test_shipped_configs_match_schema():
    for path in CONFIGS.glob("*.json"):
        jsonschema.validate(load(path), CONFIG)


def test_simulate_scalar_decay(tmp_path):
    out = tmp_path / "traj.csv"
    assert run("simulate", "--config", SCALAR, "--out", out) == 0
    last = out.read_text().splitlines()[-1].split(",")
    assert float(last[0]) == 1.0
    assert float(last[1]) == pytest.approx(0.367879, abs=1e-6)


def test_certify_corollary(tmp_path):
    out = tmp_path / "cert.json"
    assert run("certify", "--theorem", "corollary_final", "--config", DECOUPLED, "--out", out) == 0
    doc = load(out)
    jsonschema.validate(doc, BY_KIND["certificate"])
    assert doc["verdict"] == "Certified"


def test_certify_theorem_from_config_class(tmp_path):
    out = tmp_path / "cert.json"
    assert run("certify", "--theorem", "guas2bis", "--config", DECOUPLED, "--out", out) == 0
    assert load(out)["verdict"] == "SupportedByEvidence"


def test_validate_signal_strict_exit(tmp_path):
    sig = tmp_path / "s.json"
    sig.write_text(json.dumps({"t_begin": -1.0, "t_end": 2.0, "initial_mode": 1, "switches": [[0.0, 2], [0.5, 1]]}))
    out = tmp_path / "v.json"
    argv = ["validate-signal", "--class", "adt", "--tau-d", "1", "--n0", "1", "--signal", sig, "--out", out]
    assert run(*argv) == 0
    assert run(*argv, "--strict") == 1
    doc = load(out)
    jsonschema.validate(doc, BY_KIND["validation"])
    assert doc["ok"] is False


def test_generate_signal_schema_and_determinism(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert run("generate-signal", "--config", DECOUPLED, "--out", out) == 0
    assert a.read_bytes() == b.read_bytes()
    jsonschema.validate(load(a), SIGNAL)
    c = tmp_path / "c.json"
    assert run("generate-signal", "--config", DECOUPLED, "--seed", 8, "--out", c) == 0
    assert c.read_bytes() != a.read_bytes()


def test_seed_environment_variable(tmp_path, monkeypatch):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run("generate-signal", "--config", DECOUPLED, "--seed", 99, "--out", a) == 0
    monkeypatch.setenv("SWITCHSTAB_SEED", "99")
    assert run("generate-signal", "--config", DECOUPLED, "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()


def test_limits_and_sweep_artifacts(tmp_path):
    lim = tmp_path / "lim.json"
    assert run("limits", "--config", DECOUPLED, "--horizon", "10", "--step", "0.01", "--out", lim) == 0
    jsonschema.validate(load(lim), BY_KIND["limits"])
    csv_path, summary = tmp_path / "sweep.csv", tmp_path / "sweep.json"
    assert run("stability-sweep", "--config", DECOUPLED, "--trials", 6, "--step", "0.01",
               "--summary", summary, "--out", csv_path) == 0
    doc = load(summary)
    jsonschema.validate(doc, BY_KIND["stability_sweep"])
    assert doc["n_converged"] == 6
    report = tmp_path / "report.txt"
    assert run("report", lim, csv_path, summary, "--out", report) == 0
    text = report.read_text()
    assert "stability sweep, 6 trials" in text and "omega" in text


@pytest.mark.parametrize("content, fragment", [
    ('{"schema": "switchstab/1",\n "seed": 1,,}', ":2:"),
    ('{"schema": "other"}', "schema"),
    ('{"schema": "switchstab/1", "options": {"step": -1}}', "options.step"),
    ('{"schema": "switchstab/1", "system": {"file": "missing.json"}}', "not found"),
])
def test_config_errors_exit_two(tmp_path, capsys, content, fragment):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(content)
    assert run("simulate", "--config", cfg) == 2
    assert fragment in capsys.readouterr().err


def test_file_references_resolve_relative_to_config(tmp_path):
    (tmp_path / "sys.json").write_text(json.dumps({"modes": [{"id": 1, "linear": {"A": [[-1.0]]}}]}))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"schema": "switchstab/1", "system": {"file": "sys.json"}, "x0": [1.0],
                               "options": {"horizon": 0.5}}))
    assert run("simulate", "--config", cfg, "--out", tmp_path / "t.csv") == 0


def test_numeric_failure_exits_three(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"schema": "switchstab/1",
                               "system": {"modes": [{"id": 1, "linear": {"A": [[50.0]]}}]},
                               "x0": [1.0], "options": {"horizon": 1.0, "step": 0.001}}))
    assert run("simulate", "--config", cfg) == 3


def test_infeasible_class_exits_three(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"schema": "switchstab/1", "signal_class": {
        "class": "intersection", "members": [{"class": "dwell", "tau_d": 2.0},
                                             {"class": "ergodic", "T": 1.0, "modes": [1, 2]}]}}))
    assert run("generate-signal", "--config", cfg, "--out", tmp_path / "s2.json") == 3


@pytest.mark.skipif(shutil.which("switchstab") is None, reason="console script not installed")
def test_console_script(tmp_path):
    out = tmp_path / "traj.csv"
    subprocess.run(["switchstab", "simulate", "--config", SCALAR, "--out", str(out)], check=True)
    assert out.read_text().startswith("t,x_1,mode")
