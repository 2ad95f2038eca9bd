import io
import json
import os
import subprocess
import sys

import pytest

from conftest import ROOT
from nambulab import cli


def run(*argv):
    buf = io.StringIO()
    code = cli.run([str(a) for a in argv], out=buf)
    text = buf.getvalue()
    lines = [] if "doc" in argv else [json.loads(l) for l in text.splitlines() if l.strip()]
    return code, lines, text


@pytest.fixture(autouse=True)
def _cwd(monkeypatch):
    monkeypatch.chdir(ROOT)
    monkeypatch.delenv(cli.SEED_ENV, raising=False)


def test_check_passing_structure():
    code, recs, _ = run("check", "fixtures/scaled_x1.json", "--family", "quad")
    assert code == 0
    verdicts = {r["check"]: r["verdict"] for r in recs}
    assert verdicts["filippov-direct"] == verdicts["lie-derivative"] == "pass"
    assert verdicts["classification"] == "pass"


def test_expected_failure_is_exit_zero_with_witness():
    code, recs, _ = run("check", "fixtures/heisenberg_r_xyw.json", "--family", "quad")
    assert code == 0
    fi = next(r for r in recs if r["check"] == "filippov-direct")
    assert fi["verdict"] == "fail" and fi["expected"] == "fail" and fi["witnesses"]


def test_unexpected_failure_exit_one(tmp_path):
    doc = json.loads((ROOT / "fixtures/l1_1to6.json").read_text())
    doc["expect"] = {"fi": "pass"}
    p = tmp_path / "wrong.json"
    p.write_text(json.dumps(doc))
    assert run("check", p, "--family", "coords")[0] == 1


def test_usage_and_spec_errors(capsys):
    assert run("check", "fixtures/bad_repeated_index.json")[0] == 2
    assert "3:44: repeated index" in capsys.readouterr().err
    assert run("tower", "fixtures/scaled_x1.json")[0] == 2
    assert run("darboux", "fixtures/scaled_x1.json", "--point", "9,0,0")[0] == 2
    assert run("check", "gallery:nope")[0] == 2
    assert run("frobnicate")[0] == 2


def test_darboux_reports():
    code, recs, _ = run("darboux", "fixtures/scaled_x1.json", "--samples", "8")
    assert code == 0 and [r["check"] for r in recs] == ["frame-identities", "verify-chart"]
    assert recs[1]["residual_max"] < 1e-8 and recs[1]["details"]["table"]
    code, recs, _ = run("darboux", "fixtures/scaled_x1.json", "--point", "0,1,0")
    assert recs[0]["verdict"] == "unsupported"


def test_algebroid_and_convention():
    code, recs, _ = run("algebroid", "fixtures/scaled_x1.json", "--forms", "5")
    assert code == 0 and all(r["verdict"] == "pass" for r in recs)
    code, recs, _ = run("algebroid", "gallery:scaled", "--param", "n=4", "--param", "h=\"x1\"",
                        "--forms", "5", "--convention", "interior")
    assert {r["check"]: r["verdict"] for r in recs}["module-rules"] == "fail"


def test_tower_command():
    code, recs, _ = run("tower", "fixtures/tower_projective.json", "--samples", "40")
    assert code == 0
    assert {r["check"] for r in recs} >= {"projective-compat", "tower-stratification", "limit-bracket"}
    code, recs, _ = run("tower", "fixtures/tower_projective_bad.json")
    assert code == 0 and {r["check"]: r["verdict"] for r in recs}["tower-stratification"] == "unsupported"


def test_replay_reproduces_witnesses(tmp_path):
    _, _, text = run("check", "fixtures/l1_1to6.json", "--family", "coords")
    rec = tmp_path / "report.jsonl"
    rec.write_text(text)
    code, recs, _ = run("check", "fixtures/l1_1to6.json", "--replay", rec)
    assert code == 0 and recs and all(r["verdict"] == "pass" for r in recs)
    assert all(r["details"]["reproduced"] == r["details"]["witnesses"] for r in recs)


def test_doc_format_and_seed_env(monkeypatch):
    _, _, a = run("check", "fixtures/canonical3.json", "--format", "doc", "--family", "quad")
    doc = json.loads(a)
    assert doc["seed"] == 0 and doc["exit"] == 0 and doc["reports"]
    monkeypatch.setenv(cli.SEED_ENV, "5")
    _, _, b = run("check", "fixtures/canonical3.json", "--format", "doc", "--family", "quad")
    assert json.loads(b)["seed"] == 5
    monkeypatch.setenv(cli.SEED_ENV, "five")
    assert run("check", "fixtures/canonical3.json")[0] == 2


def test_timing_flag_only_when_requested():
    _, recs, _ = run("check", "fixtures/canonical3.json", "--family", "quad")
    assert all("timing_s" not in r for r in recs)
    _, recs, _ = run("check", "fixtures/canonical3.json", "--family", "quad", "--timing")
    assert any("timing_s" in r for r in recs)


def test_gallery_listing(capsys):
    assert cli.run(["gallery"]) == 0
    assert "heisenberg" in capsys.readouterr().out
    assert cli.run(["gallery", "scaled", "--param", "h=\"x2\"", "--inline"]) == 0
    assert json.loads(capsys.readouterr().out)["structure"]["tensor"] == {"1,2,3": "x2"}


def test_thread_count_does_not_change_bytes():
    outs = []
    for threads in ("1", "4"):
        env = dict(os.environ, OMP_NUM_THREADS=threads, OPENBLAS_NUM_THREADS=threads)
        env.pop(cli.SEED_ENV, None)
        proc = subprocess.run([sys.executable, "-m", "nambulab", "darboux", "fixtures/scaled_x1.json",
                               "--samples", "8", "--seed", "3"],
                              cwd=ROOT, env=env, capture_output=True, check=True)
        outs.append(proc.stdout)
    assert outs[0] == outs[1] and outs[0]
