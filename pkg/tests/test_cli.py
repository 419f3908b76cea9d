import json
import re
import subprocess
import sys

import pytest

from conftest import CORPUS, ROOT
from flarelang import cli, report
from flarelang.lang import parse, unparse

DIAGNOSTIC = re.compile(r"^[^:\n]+:\d+:\d+: (error|warning): .+$")


def flare(*args, cwd=ROOT):
    return subprocess.run([sys.executable, "-m", "flarelang", *map(str, args)],
                          cwd=cwd, capture_output=True, text=True)


def _write(tmp_path, text, name="p.flare"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_parse_roundtrip():
    r = flare("parse", "corpus/goodmorning.flare")
    assert r.returncode == 0
    assert r.stdout == 'after 1000 {\n    print("morning");\n}\nprint("Good");\n'
    assert unparse(parse(r.stdout)) == r.stdout


def test_parse_ast_json():
    r = flare("parse", "--ast-json", "corpus/goodmorning.flare")
    assert r.returncode == 0
    assert json.loads(r.stdout)["kind"] == "program"


def test_analyze_json_default():
    r = flare("analyze", "corpus/autodimmer.flare")
    assert r.returncode == 0
    assert json.loads(r.stdout)["schema_version"] == report.SCHEMA_VERSION


@pytest.mark.parametrize("fmt,marker", [("dot", "digraph"), ("md", "# FLARE analysis")])
def test_analyze_formats(fmt, marker):
    r = flare("analyze", "corpus/autodimmer.flare", "--format", fmt)
    assert r.returncode == 0 and marker in r.stdout


def test_analyze_scale():
    r = flare("analyze", "corpus/autodimmer.flare", "--scale", "segment")
    doc = json.loads(r.stdout)
    assert doc["scale"] == "segment" and {e["scale"] for e in doc["elements"]} == {1}


def test_compose_flag():
    doc = json.loads(flare("analyze", "corpus/autodimmer.flare").stdout)
    segs = [e["id"] for e in doc["elements"] if e["kind"] == "function"]
    r = flare("analyze", "corpus/autodimmer.flare", "--compose", ",".join(segs))
    assert r.returncode == 0
    result = json.loads(r.stdout)
    assert set(result) >= {"composite", "absorbed", "promoted", "retained", "accounting"}


def test_compose_bad_ids():
    r = flare("analyze", "corpus/autodimmer.flare", "--compose", "segment:nowhere:1:1")
    assert r.returncode == 4 and r.stdout == ""


def test_warning_goes_to_stderr(tmp_path):
    path = _write(tmp_path, "emit nowhere;\n")
    r = flare("analyze", path)
    assert r.returncode == 0
    assert DIAGNOSTIC.match(r.stderr.strip())
    json.loads(r.stdout)


def test_syntax_error(tmp_path):
    path = _write(tmp_path, "print(1;\n")
    r = flare("analyze", path)
    assert r.returncode == 1 and r.stdout == ""
    line = r.stderr.strip()
    assert DIAGNOSTIC.match(line) and ":1:8: error:" in line


def test_runtime_error(tmp_path):
    r = flare("trace", _write(tmp_path, "print(1 / 0);\n"))
    assert r.returncode == 1
    assert DIAGNOSTIC.match(r.stderr.strip()) and "division by zero" in r.stderr


def test_usage_errors(tmp_path):
    assert flare().returncode == 4
    assert flare("nope").returncode == 4
    assert flare("analyze", tmp_path / "missing.flare").returncode == 4
    assert flare("analyze", "corpus/autodimmer.flare", "--scale", "galaxy").returncode == 4
    assert flare("trace", "corpus/blink.flare", "--max-steps", "0").returncode == 4
    bad = _write(tmp_path, "[{\"t\": 5, \"event\": \"a\"}, {\"t\": 1, \"event\": \"a\"}]", "bad.json")
    assert flare("trace", "corpus/button.flare", "--events", bad).returncode == 4
    broken = _write(tmp_path, "[{", "broken.json")
    assert flare("trace", "corpus/button.flare", "--events", broken).returncode == 4


def test_invariant_error_exit(monkeypatch, capsys):
    real = report.build_document

    def broken(analysis, scale="all", compositions=None):
        doc = real(analysis, scale, compositions)
        doc.bindings.append({"id": "ct0", "from": "nowhere", "to": "nowhere"})
        return doc

    monkeypatch.setattr(report, "build_document", broken)
    assert cli.main(["analyze", str(CORPUS / "autodimmer.flare")]) == 2
    assert "internal error" in capsys.readouterr().err


def test_trace_out_file(tmp_path):
    out = tmp_path / "trace.jsonl"
    r = flare("trace", "corpus/goodmorning.flare", "--out", out)
    assert r.returncode == 0 and r.stdout == ""
    lines = [json.loads(x) for x in out.read_text().splitlines()]
    assert [(e["text"], e["clock"]) for e in lines if e["type"] == "output"] == [("Good", 0), ("morning", 1000)]


def test_trace_step_limit_is_partial(tmp_path):
    r = flare("trace", _write(tmp_path, "while true { print(1); }\n"), "--max-steps", "20")
    assert r.returncode == 0
    assert "warning:" in r.stderr
    last = json.loads(r.stdout.splitlines()[-1])
    assert last == {"clock": 0, "reason": "step-limit", "type": "stop"}


def test_check_ok():
    r = flare("check", "corpus/autodimmer.flare", "--events", "corpus/ticks3.json")
    assert r.returncode == 0
    assert r.stdout.splitlines()[0] == "agreement: ok"
    assert "transfer histogram: sequential=13 branch=12 event=3" in r.stdout


def test_check_disagreement(monkeypatch, capsys):
    monkeypatch.setattr(report, "analyze_source", _without_bindings(report.analyze_source))
    assert cli.main(["check", str(CORPUS / "straightline.flare")]) == 3
    assert capsys.readouterr().out.startswith("agreement: DISAGREE")


def _without_bindings(fn):
    def wrapped(*a, **kw):
        analysis = fn(*a, **kw)
        analysis.bindings = []
        return analysis
    return wrapped


def test_stems():
    r = flare("stems", "corpus/autodimmer.flare")
    assert r.returncode == 0
    assert "What triggers this?" in r.stdout
