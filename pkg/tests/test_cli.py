from __future__ import annotations

import io
import json
from pathlib import Path

import pytest

from ample import __version__, cli

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


def run(*argv, environ=None):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main([str(a) for a in argv], stdout=out, stderr=err, environ=environ or {})
    return code, out.getvalue(), err.getvalue()


def run_json(*argv, environ=None):
    code, out, err = run(*argv, "--format", "json", environ=environ)
    return code, (json.loads(out) if out else None), err


def test_validate_fix7_passes():
    code, rep, _ = run_json("validate", "paction", SAMPLES / "FIX7.json")
    assert code == 0 and rep["verdict"] == "pass"


def test_validate_broken_fix7_fails_with_axiom_two():
    code, rep, _ = run_json("validate", "paction", SAMPLES / "FIX7-broken.json")
    assert code == 1 and rep["verdict"] == "fail"
    assert rep["payload"]["axiom"] == "axiom2"
    assert rep["payload"]["witness"] == {"gamma": "a", "eta": "a", "x": 0}


def test_hls_witness_on_f2():
    code, rep, _ = run_json("hls", "witness", "--chain", SAMPLES / "f2.json", "--l", 2, "--n", 1)
    assert code == 0 and rep["verdict"] == "evidence"
    assert rep["payload"]["bound"] == 17
    assert rep["payload"]["replay_failures"] == []


def test_text_output_is_derived_from_json():
    code, out, _ = run("validate", "paction", SAMPLES / "FIX7.json")
    assert code == 0
    assert out.splitlines()[0] == "validate.paction: PASS"
    assert cli.render_text(run_json("validate", "paction", SAMPLES / "FIX7.json")[1]) == out.rstrip("\n")


def test_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        run("pact", "delta", SAMPLES / "FIX7.json", "--output", p)
    assert a.read_bytes() == b.read_bytes()
    rep = json.loads(a.read_text())
    assert rep["tool_version"] == __version__
    assert len(rep["input_digest"]) == 64


@pytest.mark.parametrize("argv,verdict", [
    (("pact", "roundtrip", SAMPLES / "FIX7.json"), "pass"),
    (("hls", "afs", "--chain", SAMPLES / "z-chain.json"), "pass"),
    (("hls", "iso", "--chain", SAMPLES / "elementary.json"), "pass"),
    (("dr", "cylinders", "--graph", SAMPLES / "o3.json", "--mu", "v", "--nu", "e1"), "pass"),
    (("dr", "purity", "--graph", SAMPLES / "two-by-two.json", "--L", 2, "--budget", 0), "inconclusive"),
    (("coarse", "check", "--space", SAMPLES / "chain-window.json"), "pass"),
    (("coarse", "refute", "--m", 5), "evidence"),
    (("kzero", "oracle", "--graph", SAMPLES / "o3.json"), "pass"),
    (("kzero", "witness", "--graph", SAMPLES / "o3.json", "--op", "neg", "--open", "v"), "pass"),
])
def test_commands_and_exit_codes(argv, verdict):
    code, rep, _ = run_json(*argv)
    assert rep["verdict"] == verdict
    assert code == cli.EXIT[verdict]


def test_replay_of_a_fresh_report(tmp_path):
    p = tmp_path / "r.json"
    run("validate", "paction", SAMPLES / "FIX7-broken.json", "-o", p)
    code, rep, _ = run_json("replay", p)
    assert code == 0 and rep["verdict"] == "pass"


def test_replay_reports_divergence(tmp_path):
    p = tmp_path / "r.json"
    run("validate", "paction", SAMPLES / "FIX7-broken.json", "-o", p)
    doc = json.loads(p.read_text())
    doc["payload"]["witness"]["x"] = 2
    p.write_text(json.dumps(doc))
    code, rep, _ = run_json("replay", p)
    assert code == 1
    assert rep["payload"]["divergence"]["at"] == "/payload/witness/x"


def test_replay_detects_edited_inputs(tmp_path):
    p = tmp_path / "r.json"
    run("validate", "paction", SAMPLES / "FIX7.json", "-o", p)
    doc = json.loads(p.read_text())
    doc["replay"]["inputs"]["input"]["points"][0] = 9
    p.write_text(json.dumps(doc))
    code, rep, _ = run_json("replay", p)
    assert code == 1 and rep["payload"]["divergence"]["at"] == "/input_digest"


def test_version_mismatch_is_flagged_and_replayed(tmp_path):
    p = tmp_path / "r.json"
    run("validate", "paction", SAMPLES / "FIX7.json", "-o", p)
    doc = json.loads(p.read_text())
    doc["tool_version"] = "0.0.0"
    p.write_text(json.dumps(doc))
    code, rep, _ = run_json("replay", p)
    assert code == 0
    assert rep["payload"]["version_mismatch"] is True


def test_schema_violation_is_an_input_error(tmp_path):
    doc = json.loads((SAMPLES / "FIX7.json").read_text())
    doc["support"][0]["domain"] = 5
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    code, out, err = run("validate", "paction", p)
    assert code == 3 and out == ""
    assert "/support/0/domain" in err


@pytest.mark.parametrize("argv", [("validate", "paction", "/nonexistent.json"), ("nonsense",),
                                  ("hls", "witness", "--chain", SAMPLES / "f2.json", "--l", "-1")])
def test_input_errors_exit_three(argv):
    assert run(*argv)[0] == 3


def test_budget_precedence(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"budgets": {"radius": 1}}))
    chain = SAMPLES / "f2.json"
    assert run_json("hls", "witness", "--chain", chain, "--n", 1, "--config", conf)[1]["payload"]["bound"] == 5
    env = {"AMPLE_BUDGET_RADIUS": "3"}
    assert run_json("hls", "witness", "--chain", chain, "--n", 1, "--config", conf,
                    environ=env)[1]["payload"]["bound"] == 53
    assert run_json("hls", "witness", "--chain", chain, "--n", 1, "--l", 0,
                    environ=env)[1]["payload"]["bound"] == 1


def test_unknown_env_budget_is_rejected():
    code, _, err = run("hls", "witness", "--chain", SAMPLES / "f2.json", environ={"AMPLE_BUDGET_COLOUR": "1"})
    assert code == 3 and "colour" in err


def test_run_config_rejects_unknown_keys_and_negatives():
    with pytest.raises(cli.ConfigError):
        cli.RunConfig.from_dict({"module": "hls", "op": "build", "colour": 1})
    with pytest.raises(cli.ConfigError):
        cli.Budgets.from_dict({"depth": -1})
    with pytest.raises(cli.ConfigError):
        cli.RunConfig.from_dict({"module": "hls", "op": "build", "format": "xml"})


def test_report_schema_holds_for_emitted_reports(tmp_path):
    from ample.serial import check_document

    p = tmp_path / "r.json"
    run("kzero", "realize", "--graph", SAMPLES / "o3.json", "--target", "0", "-o", p)
    assert check_document("report", json.loads(p.read_text())) == []
