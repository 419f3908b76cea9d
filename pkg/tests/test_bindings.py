import itertools
import json
from pathlib import Path

import pytest

from conftest import analyze_file, analyze_text, corpus_programs
from flarelang.bindings import (
    BRANCH, CAUSAL, COMMUNICATIVE, EVENT_SUBTYPE, SEQUENTIAL, Binding, question_stems,
)
from flarelang.lang import ast as A
from flarelang.properties import EFFECT, SHARE
from golden import binding_rows

GOLDEN = Path(__file__).resolve().parent / "golden" / "bindings"


def test_autodimmer_handler_bindings(autodimmer):
    t = autodimmer.tree
    handler = t.handler_segments("timer")[0]
    body = [c.id for c in t.children(handler.id)]
    ct = [b for b in autodimmer.bindings if b.dimension == CAUSAL]
    seq = [(b.source, b.target) for b in ct if b.subtype == SEQUENTIAL and b.source in body]
    assert seq == [(body[0], body[1]), (body[1], body[2])]
    calls = {(b.source, t[b.target].name) for b in ct if b.via == "call"}
    assert calls == {(body[0], "ReadSensor"), (body[1], "DecideBrightness"), (body[2], "SetLED")}
    events = [b for b in ct if b.subtype == EVENT_SUBTYPE]
    assert [(t[b.source].kind, b.target) for b in events] == [("registration", handler.id)]


def test_autodimmer_condition_on_if(autodimmer):
    conds = [b for b in autodimmer.bindings if b.condition_span is not None]
    assert {b.condition for b in conds} == {"(level < threshold)", "not (level < threshold)"}
    assert all(b.subtype == BRANCH for b in conds)


def test_autodimmer_value_flow(autodimmer):
    t = autodimmer.tree
    flows = {(t[b.source].name, t[b.target].name, b.via) for b in autodimmer.bindings if b.dimension == COMMUNICATIVE}
    assert ("DecideBrightness", "handler:timer", "return") in flows
    assert ("handler:timer", "SetLED", "argument") in flows
    chains = {(t[c["from"]].name, t[c["via"]].name, t[c["to"]].name) for c in autodimmer.chains}
    assert ("DecideBrightness", "handler:timer", "SetLED") in chains


def test_single_statement_has_no_bindings():
    assert analyze_text("print(1);").bindings == []


def test_emit_to_handler():
    a = analyze_text("when go { print(1); }\nemit go;\n")
    emits = [b for b in a.bindings if b.via == "emit"]
    assert len(emits) == 1 and emits[0].subtype == EVENT_SUBTYPE
    assert a.tree[emits[0].target].name == "handler:go"


def test_unbound_emit_warns():
    a = analyze_text("emit nowhere;")
    assert [w.code for w in a.warnings] == ["unbound-event"]


def test_global_used_in_one_segment_has_no_share_binding():
    a = analyze_text("global t = 1;\nprint(t);\n")
    assert [b for b in a.bindings if b.dimension == COMMUNICATIVE] == []


def _share_oracle(a):
    # brute force: every pair of segments with a common share subject
    pairs = set()
    for x, y in itertools.combinations(a.tree.segments(), 2):
        for e in x.properties.shares:
            f = y.properties.get(SHARE, e.subject_kind, e.subject)
            if f is not None:
                pairs.add((x.id, y.id, e.subject, e.mode, f.mode))
    return pairs


@pytest.mark.parametrize("path", corpus_programs(), ids=lambda p: p.name)
def test_share_bindings_match_brute_force(path):
    a = analyze_file(path)
    got = {(b.source, b.target, b.payload["subject"], b.payload["from_mode"], b.payload["to_mode"])
           for b in a.bindings if b.via == "share"}
    assert got == _share_oracle(a)
    shares = [b for b in a.bindings if b.via == "share"]
    assert len(shares) == len(got)


def test_two_writers_share_write_write():
    a = analyze_file(Path(__file__).resolve().parents[1] / "corpus" / "scoreboard.flare")
    t = a.tree
    pair = [b for b in a.bindings if b.via == "share"
            and {t[b.source].name, t[b.target].name} == {"handler:goal", "handler:penalty"}]
    assert len(pair) == 1
    assert pair[0].payload["subject"] == "score"
    assert (pair[0].payload["from_mode"], pair[0].payload["to_mode"]) == ("read-write", "read-write")


def test_stems():
    a = analyze_text("when go { print(1); }\nif true { emit go; }\nprint(2);\n")
    by_subtype = {b.subtype: question_stems(b) for b in a.bindings if b.dimension == CAUSAL}
    assert by_subtype[EVENT_SUBTYPE] == ["What triggers this?", "When does this fire?"]
    assert by_subtype[BRANCH] == ["Under what conditions does this run?", "How many times?"]
    assert by_subtype[SEQUENTIAL] == ["What happens next?", "What runs after this?"]
    seg = a.tree.segments()[0]
    assert question_stems(seg) == [
        "What does this element receive?", "What does it send?",
        "What does it change inside itself?", "What does it share?",
    ]


def test_binding_validation():
    from flarelang.lang.span import SourceSpan

    span = SourceSpan("f", 1, 1, 1, 1)
    with pytest.raises(ValueError):
        Binding("x", "a", "b", COMMUNICATIVE, SEQUENTIAL, span)
    with pytest.raises(ValueError):
        Binding("x", "a", "b", CAUSAL, None, span)
    with pytest.raises(ValueError):
        Binding("x", "a", "b", CAUSAL, EVENT_SUBTYPE, span, condition_span=span)


EXPECTED_SUBTYPE = {
    "next": SEQUENTIAL,
    "then": BRANCH, "else": BRANCH, "loop": BRANCH, "call": BRANCH,
    "registration": EVENT_SUBTYPE, "timer": EVENT_SUBTYPE, "emit": EVENT_SUBTYPE,
}


def check_placement(a) -> None:
    """Subtype follows the authoring construct; conditions only on if/while/repeat."""
    t = a.tree
    for b in a.bindings:
        if b.dimension != CAUSAL:
            assert b.subtype is None and b.condition_span is None
            continue
        assert b.subtype == EXPECTED_SUBTYPE[b.via]
        src = t[b.source]
        node = src.node
        if b.via in ("then", "else", "loop"):
            assert isinstance(node, (A.If, A.While, A.Repeat)) and b.condition_span is not None
        else:
            assert b.condition_span is None
        if b.via == "call":
            assert src.kind == "statement"
            assert t[b.target].kind == "function"
        if b.via == "registration":
            assert src.kind == "registration" and t[b.target].kind == "handler"
        if b.via == "timer":
            assert isinstance(node, A.After) and t[b.target].kind == "timer"
        if b.via == "emit":
            assert isinstance(node, A.Emit) and t[b.target].kind == "handler"
        if b.via == "next":
            parent = t[src.parent]
            sibs = list(parent.constituents)
            assert sibs.index(b.target) == sibs.index(b.source) + 1


def check_effect_privacy(a) -> None:
    """Every payload reference resolves to a real entry, and none is an effect."""
    for b in a.bindings:
        if b.payload is None:
            continue
        for side in ("send", "receive"):
            ref = b.payload.get(side)
            if ref is None:
                continue
            assert ref["kind"] != EFFECT
            props = a.tree[ref["element"]].properties
            assert props.get(ref["kind"], ref["subject_kind"], ref["subject"]) is not None
        assert b.payload.get("subject_kind", "global-state") != "local-state"


@pytest.mark.parametrize("path", corpus_programs(), ids=lambda p: p.name)
def test_corpus_placement_and_privacy(path):
    a = analyze_file(path)
    check_placement(a)
    check_effect_privacy(a)


@pytest.mark.parametrize("path", corpus_programs(), ids=lambda p: p.name)
def test_golden_binding_lists(path):
    expected = json.loads((GOLDEN / f"{path.stem}.json").read_text())
    assert binding_rows(path) == expected
