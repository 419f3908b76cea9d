import random

import pytest

from conftest import CORPUS, analyze_file, analyze_text, corpus_programs, events_for
from flarelang.errors import FlareRuntimeError, StepLimitExceeded
from flarelang.lang import parse
from flarelang.runtime import EventScript, check_agreement, run
from progen import random_program


def _run(text, events=None, **kw):
    a = analyze_text(text)
    script = EventScript.from_json(events) if events is not None else None
    return a, run(a.tree, script, **kw)


def test_good_morning():
    trace = run(parse('after 1000 { print("morning"); } print("Good");'))
    assert trace.outputs() == [("Good", 0), ("morning", 1000)]


def test_empty_program_trace():
    trace = run(parse(""))
    assert [e["type"] for e in trace.events] == ["start", "stop"]


def test_same_time_timers_fire_in_scheduling_order():
    _, trace = _run('after 5 { print("a"); }\nafter 5 { print("b"); }\nafter 1 { print("c"); }\n')
    assert [t for t, _ in trace.outputs()] == ["c", "a", "b"]


def test_timer_order_randomized():
    # oracle: outputs sorted by (delay, scheduling index)
    rng = random.Random(7)
    for _ in range(60):
        delays = [rng.choice([0, 10, 20, 30]) for _ in range(rng.randint(1, 8))]
        src = "".join(f"after {d} {{ print({i}); }}\n" for i, d in enumerate(delays))
        _, trace = _run(src)
        expected = [i for _, i in sorted((d, i) for i, d in enumerate(delays))]
        assert [int(t) for t, _ in trace.outputs()] == expected


def test_timers_drain_before_same_time_external_events():
    _, trace = _run('when go { print("event"); }\nafter 0 { print("timer"); }\n', [{"t": 0, "event": "go"}])
    assert [t for t, _ in trace.outputs()] == ["timer", "event"]


def test_autodimmer_agreement_histogram():
    a = analyze_file(CORPUS / "autodimmer.flare")
    trace = run(a.tree, EventScript.load(CORPUS / "ticks3.json"))
    report = check_agreement(trace, a.bindings)
    assert report.unmatched == []
    # per tick: 1 dispatch, 3 calls + 1 if branch, 2 + 2 adjacent steps; plus one in the script
    assert report.histogram == {"branch": 12, "event": 3, "sequential": 13}
    assert [e["value"] for e in trace.of_type("hw-write")] == [100, 100, 100]


def test_straight_line_is_all_sequential():
    a, trace = _run("var x = 1;\nprint(x);\nprint(2);\n")
    report = check_agreement(trace, a.bindings)
    assert report.ok and set(report.histogram) == {"sequential"} and report.matched == 2


def test_dead_branch_is_unexercised():
    a, trace = _run('if false { print("never"); }\nprint("x");\n')
    report = check_agreement(trace, a.bindings)
    assert report.ok
    dead = [b.id for b in a.bindings if b.via == "then"]
    assert report.unexercised == dead


def test_disagreement_reported():
    a, trace = _run("print(1);\nprint(2);\n")
    report = check_agreement(trace, [])
    assert not report.ok and len(report.unmatched) == 1


@pytest.mark.parametrize("src", [
    "print(1 / 0);",
    "func f(a) { return a; }\nprint(f(1, 2));\n",
    "func f() { print(1); }\nprint(f());\n",
    'print(1 + true);',
])
def test_runtime_errors(src):
    with pytest.raises(FlareRuntimeError) as exc:
        _run(src)
    assert exc.value.span is not None


def test_handler_arity_mismatch():
    with pytest.raises(FlareRuntimeError):
        _run("when go(x) { print(x); }", [{"t": 0, "event": "go"}])


def test_step_limit_keeps_partial_trace():
    with pytest.raises(StepLimitExceeded) as exc:
        _run("while true { print(1); }", max_steps=50)
    trace = exc.value.trace
    assert not trace.completed
    assert len(trace.outputs()) > 10
    assert trace.events[-1] == {"type": "stop", "clock": 0, "reason": "step-limit"}


def test_integer_division_truncates():
    _, trace = _run("print(-7 / 2);\nprint(7 / 2);\n")
    assert [t for t, _ in trace.outputs()] == ["-3", "3"]


def test_event_script_validation():
    with pytest.raises(ValueError):
        EventScript.from_json([{"t": 5, "event": "a"}, {"t": 1, "event": "a"}])
    with pytest.raises(ValueError):
        EventScript.from_json([{"t": 0, "event": "a"}, {"hw": {}}])
    with pytest.raises(ValueError):
        EventScript.from_json({"t": 0})
    script = EventScript.from_json([{"hw": {"x": 3}}, {"t": 0, "event": "go", "args": [1]}])
    assert script.hardware == {"x": 3} and script.events[0].args == (1,)


def _check_trace_invariants(a, trace):
    clock = 0
    current = None  # the dispatched body currently running
    for e in trace.events:
        if e["type"] == "clock-advance":
            assert e["new"] >= e["old"] == clock
            clock = e["new"]
        elif "clock" in e:
            assert e["clock"] == clock
        if e["type"] == "dispatch":
            current = e["handler"]
        elif e["type"] == "exec" and current is not None:
            # run to completion: only the handler itself or functions it calls
            owner = a.tree[a.tree[e["element"]].segment]
            assert owner.id == current or owner.kind == "function"


@pytest.mark.parametrize("path", corpus_programs(), ids=lambda p: p.name)
def test_corpus_dynamic_subset_of_static(path):
    a = analyze_file(path)
    events = events_for(path)
    script = EventScript.load(events) if events else None
    one = run(a.tree, script)
    two = run(analyze_file(path).tree, script)
    assert one.to_jsonl() == two.to_jsonl()
    assert check_agreement(one, a.bindings).ok
    _check_trace_invariants(a, one)
    ids = {e.id for e in a.tree}
    for tr in one.transfers():
        assert tr["source"] in ids and tr["target"] in ids


def test_random_programs_agree():
    for seed in range(150):
        source, events = random_program(seed)
        a = analyze_text(source, "r.flare")
        try:
            trace = run(a.tree, EventScript.from_json(events), max_steps=20000)
        except StepLimitExceeded as exc:
            trace = exc.trace
        assert check_agreement(trace, a.bindings).ok, seed
        _check_trace_invariants(a, trace)
