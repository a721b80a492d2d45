from __future__ import annotations

import json

import numpy as np
import pytest

from hardy_forge.catalog import ghz, w_state
from hardy_forge.cli import main, run_random
from hardy_forge.formats import (
    FormatError,
    settings_from_json,
    settings_to_json,
    state_from_json,
    state_to_json,
)
from hardy_forge.pipeline import Options, certify, construct, exit_code
from hardy_forge.statekit import PureState


def write_state(path, state, scale=1.0):
    obj = state_to_json(state)
    obj["amps"] = [[scale * re, scale * im] for re, im in obj["amps"]]
    path.write_text(json.dumps(obj))
    return path


def test_state_round_trip_exact():
    state = w_state(3)
    back, scale = state_from_json(json.loads(json.dumps(state_to_json(state))))
    assert np.array_equal(back.amps, state.amps) or np.allclose(back.amps, state.amps, atol=1e-16)
    assert abs(scale - 1) < 1e-15


def test_state_reader_normalizes():
    obj = {"dims": [2, 2], "amps": [[3, 0], [0, 0], [0, 0], [0, 4]]}
    state, scale = state_from_json(obj)
    assert abs(state.norm - 1) < 1e-15 and abs(scale - 0.2) < 1e-15


@pytest.mark.parametrize("obj", [
    {"dims": [2, 2]},
    {"dims": [2, 2], "amps": [[1, 0]]},
    {"dims": [2, 2], "amps": [[0, 0]] * 4},
    {"dims": "22", "amps": [[1, 0]] * 4},
    {"dims": [2, 2], "amps": [1, 0, 0, 0]},
])
def test_state_reader_rejects(obj):
    with pytest.raises(FormatError):
        state_from_json(obj)


def test_settings_round_trip():
    con = construct(w_state(3))
    obj = json.loads(json.dumps(settings_to_json(con.settings, A=con.frame.A)))
    back = settings_from_json(obj)
    for k in range(3):
        assert np.array_equal(back.a[k], con.settings.a[k])
        assert np.array_equal(back.bbar[k], con.settings.bbar[k])
    assert back.policy_b == con.settings.policy_b


def test_certify_w3_and_ghz3():
    cert = certify(w_state(3))
    assert cert["status"] == "pass" and cert["scenario"] == "bell"
    assert cert["report"]["value"] > 0
    cert = certify(ghz(3))
    assert cert["status"] == "pass" and cert["scenario"] == "hardy"
    assert abs(cert["report"]["value"] - 1 / 8) < 1e-9


def test_certificate_hash_is_deterministic():
    a = certify(w_state(3), Options(seed=5))
    b = certify(w_state(3), Options(seed=5))
    assert a["certificate_hash"] == b["certificate_hash"]
    assert exit_code(a) == 0


def test_max_n_guard():
    cert = certify(ghz(3), Options(max_n=2))
    assert cert["status"] == "construction-failed" and exit_code(cert) == 3


def test_cli_exit_codes(tmp_path, capsys):
    prod = PureState((2, 2), [1, 1, 0, 0]).normalized()
    assert main(["certify", "--state", str(write_state(tmp_path / "w.json", w_state(3), 2.0)),
                 "--out", str(tmp_path / "c.json")]) == 0
    cert = json.loads((tmp_path / "c.json").read_text())
    assert cert["passed"] and abs(cert["input_scale"] - 0.5) < 1e-15
    assert main(["certify", "--state", str(write_state(tmp_path / "p.json", prod))]) == 2
    out = capsys.readouterr().out
    assert json.loads(out)["status"] == "not-entangled"
    (tmp_path / "bad.json").write_text("{")
    assert main(["certify", "--state", str(tmp_path / "bad.json")]) == 1
    assert main(["certify", "--state", str(tmp_path / "missing.json")]) == 1


def test_cli_construct_then_evaluate(tmp_path):
    sp = write_state(tmp_path / "g.json", ghz(3))
    assert main(["construct", "--state", str(sp), "--out", str(tmp_path / "s.json"),
                 "--frame-out", str(tmp_path / "f.json")]) == 0
    assert main(["evaluate", "--state", str(sp), "--settings", str(tmp_path / "s.json"),
                 "--out", str(tmp_path / "r.json")]) == 0
    rep = json.loads((tmp_path / "r.json").read_text())
    assert abs(rep["value"] - 1 / 8) < 1e-9
    assert rep["settings_hash"] and rep["version"]
    frame = json.loads((tmp_path / "f.json").read_text())
    assert frame["m"] == 0


@pytest.mark.parametrize("name", ["w3", "ghz3", "ghz-n", "mixed5"])
def test_cli_examples(name, capsys):
    assert main(["example", name]) == 0
    assert "NO" not in capsys.readouterr().out.split("| ok")[1]


def test_cli_lhv(capsys):
    assert main(["lhv", "--n", "5"]) == 0
    assert "classical max = 0" in capsys.readouterr().out


def test_random_batch_qutrits():
    summary = run_random((3, 3), seed=1, count=10, options=Options())
    assert summary["passed"] == summary["entangled"] == 10
    assert summary["scenarios"] == {"bell": 10}
    assert summary["max_leakage"] < 1e-10
    assert summary["failures"] == []


def test_random_batch_qubits_bell_only():
    summary = run_random((2, 2), seed=1, count=10, options=Options())
    assert summary["passed"] == 10 and summary["scenarios"] == {"bell": 10}
