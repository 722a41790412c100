import json
import subprocess
import sys

import numpy as np
import pytest

from doubled import __version__
from doubled.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out)


def test_basis(capsys):
    code, obj = run_json(capsys, "basis", 2)
    assert code == 0
    assert len(obj["basis"]["ops"]) == 4
    assert obj["gram_residual"] < 1e-12
    assert obj["version"] == __version__ and obj["seed"] == 0
    assert obj["tolerances"]["predicate"] == 1e-9


def test_seed_and_env_tolerance_recorded(capsys, monkeypatch):
    monkeypatch.setenv("DDO_TOL", "1e-7")
    code, obj = run_json(capsys, "basis", 3, "--seed", 42)
    assert obj["seed"] == 42 and obj["tolerances"]["predicate"] == 1e-7
    monkeypatch.setenv("DDO_TOL", "nonsense")
    assert run(capsys, "basis", 2)[0] == 2


def test_parse_text_and_ast(capsys, corpus):
    code, out, _ = run(capsys, "parse", corpus / "06_st_test.ddo", "--format", "text")
    assert code == 0 and out.startswith("dim 2\nqudits 2\nstate singlet\n")
    code, obj = run_json(capsys, "parse", corpus / "06_st_test.ddo", "--ast")
    assert [s["measure"] for s in obj["ast"]["steps"]] == [[0], [1], [0]]


def test_parse_error_is_usage_error(capsys, tmp_path):
    bad = tmp_path / "bad.ddo"
    bad.write_text("dim 2\nqudits 1\nstate bloch 0 0 1\nstep { measure 4 }\n")
    code, _, err = run(capsys, "parse", bad)
    assert code == 2 and "line 4" in err
    assert run(capsys, "parse", tmp_path / "missing.ddo")[0] == 2


def test_dct_build_analyze_recover(capsys, corpus, tmp_path):
    t_path, w_path = tmp_path / "t.json", tmp_path / "w.json"
    assert run(capsys, "dct", corpus / "03_temporal_identity.ddo", "-o", t_path)[0] == 0
    code, obj = run_json(capsys, "verify", t_path, "--audit")
    assert code == 0 and obj["axioms"]["passed"] and len(obj["one_event_audit"]) == 2
    assert run(capsys, "build", corpus / "03_temporal_identity.ddo", "-o", w_path)[0] == 0
    code, obj = run_json(capsys, "analyze", w_path, "--temporality")
    assert code == 0 and obj["temporality"]["verdict"] == "temporal_signature"
    code, obj = run_json(capsys, "recover", w_path, "--model", corpus / "03_temporal_identity.ddo", "--step", 1)
    assert code == 0 and obj["state"]["rows"] == 2


def test_spatial_ddo_is_inconclusive(capsys, corpus, tmp_path):
    w_path = tmp_path / "w.json"
    run(capsys, "build", corpus / "02_singlet_spatial.ddo", "-o", w_path)
    code, obj = run_json(capsys, "analyze", w_path, "--temporality", "--tol", "1e-8")
    assert obj["temporality"]["verdict"] == "inconclusive" and obj["tolerances"]["predicate"] == 1e-8


def test_verify_failure_exit_code(capsys, tmp_path):
    t = {"d": 2, "n_events": 1, "entries": [[0.5, 0]] + [[0, 0]] * 15}
    path = tmp_path / "t.json"
    path.write_text(json.dumps(t))
    code, obj = run_json(capsys, "verify", path)
    assert code == 1 and not obj["axioms"]["verdicts"]["normalized"]


def test_recover_needs_information_complete(capsys, corpus, tmp_path):
    w_path = tmp_path / "w.json"
    run(capsys, "build", corpus / "06_st_test.ddo", "-o", w_path)
    assert run(capsys, "recover", w_path, "--model", corpus / "06_st_test.ddo", "--step", 0)[0] == 1


def test_born_compare_oracle(capsys, corpus, tmp_path):
    z = tmp_path / "z.json"
    z.write_text(json.dumps([{"bloch": [0, 0, 1]}, {"bloch": [0, 0, 1]}]))
    code, obj = run_json(capsys, "born", corpus / "03_temporal_identity.ddo", "--instruments", z, "--compare-oracle")
    assert code == 0 and obj["oracle_max_deviation"] < 1e-9
    assert abs(obj["total"] - 1) < 1e-9


def test_st_subcommand(capsys):
    code, obj = run_json(capsys, "test", "st", "--a1", 0, 0, 1, "--a2", 0, 0, -1, "--a3", 0, 0, 1)
    assert code == 0
    assert obj["analytic"] == pytest.approx(3)
    assert obj["value"] == pytest.approx(obj["simulated"])
    assert run(capsys, "test", "st", "--a1", 0, 0, 0, "--a2", 0, 0, 1, "--a3", 0, 0, 1)[0] == 2


def test_lg_subcommand(capsys, corpus):
    code, obj = run_json(capsys, "test", "lg")
    assert code == 0 and obj["value"] == pytest.approx(1.5)
    code, obj = run_json(capsys, "test", "lg", "--model", corpus / "16_precession.ddo")
    assert obj["value"] == pytest.approx(1.5)


def test_causal_subcommand(capsys, tmp_path):
    p = np.zeros((2, 2, 2, 2))
    for x in range(2):
        for y in range(2):
            p[x, y, y, x] = 1
    path = tmp_path / "b.json"
    path.write_text(json.dumps({"p": p.tolist()}))
    code, obj = run_json(capsys, "test", "causal", "--table", path, "--which", "gyni")
    assert code == 0 and obj["value"] == 1 and obj["violates"]
    code, obj = run_json(capsys, "test", "causal", "--table", path, "--which", "lgyni")
    assert obj["bound"] == 0.75


def test_usage_errors(capsys):
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys)[0] == 2
    assert run(capsys, "basis")[0] == 2
    assert run(capsys, "analyze", "w.json")[0] == 2


def test_output_is_deterministic(capsys, corpus):
    a = run(capsys, "dct", corpus / "05_three_step_depolarizing.ddo", "-o", "/dev/stdout")
    b = run(capsys, "dct", corpus / "05_three_step_depolarizing.ddo", "-o", "/dev/stdout")
    assert a == b


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "doubled", "basis", "2", "--format", "text"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and "gram_residual" in res.stdout
