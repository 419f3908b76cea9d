"""Deterministic tree-walking interpreter with an explicit event loop.

The dispatcher is literally a branch inside a loop: after the top-level script
finishes, ``Machine.run`` polls the timer heap and the event queue, runs one
handler to completion, and advances a virtual clock when idle.
"""

from __future__ import annotations

import heapq
import json
from collections import Counter, deque
from dataclasses import dataclass, field
from pathlib import Path

from .bindings import BRANCH, CAUSAL, EVENT_SUBTYPE, SEQUENTIAL, Binding
from .elements import ElementTree
from .errors import FlareRuntimeError, StepLimitExceeded
from .lang import ast as A
from .lang.resolve import GLOBAL, SymbolTable

DEFAULT_MAX_STEPS = 100_000
MAX_CALL_DEPTH = 150


# -- stimulus scripts --------------------------------------------------------


@dataclass(frozen=True)
class Stimulus:
    time: int
    event: str
    args: tuple = ()


@dataclass
class EventScript:
    events: list = field(default_factory=list)
    hardware: dict = field(default_factory=dict)

    def __post_init__(self):
        times = [s.time for s in self.events]
        if any(t < 0 for t in times):
            raise ValueError("stimulus times must be non-negative")
        if times != sorted(times):
            raise ValueError("stimulus times must be non-decreasing")

    @classmethod
    def from_json(cls, data) -> EventScript:
        """Parse ``[{"hw": {...}}?, {"t": ms, "event": name, "args": [...]}, ...]``."""
        if not isinstance(data, list):
            raise ValueError("event script must be a JSON array")
        hardware, events = {}, []
        for i, item in enumerate(data):
            if not isinstance(item, dict):
                raise ValueError(f"event script entry {i} is not an object")
            if "hw" in item:
                if i != 0:
                    raise ValueError("the hw preamble must be the first entry")
                hardware = {str(k): _check_value(v) for k, v in item["hw"].items()}
                continue
            try:
                t, name = item["t"], item["event"]
            except KeyError as exc:
                raise ValueError(f"event script entry {i} lacks {exc}") from None
            if not isinstance(t, int) or isinstance(t, bool):
                raise ValueError(f"event script entry {i}: time must be an integer")
            args = tuple(_check_value(a) for a in item.get("args", []))
            events.append(Stimulus(t, str(name), args))
        return cls(events, hardware)

    @classmethod
    def load(cls, path) -> EventScript:
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _check_value(v):
    if isinstance(v, (bool, int, str)):
        return v
    raise ValueError(f"unsupported value {v!r}; use integers, strings or booleans")


# -- traces ------------------------------------------------------------------


@dataclass
class Trace:
    events: list = field(default_factory=list)  # plain dicts, each with a "type"
    completed: bool = True

    def record(self, type_: str, **data) -> None:
        self.events.append({"type": type_, **data})

    def of_type(self, type_: str) -> list[dict]:
        return [e for e in self.events if e["type"] == type_]

    def outputs(self) -> list[tuple[str, int]]:
        return [(e["text"], e["clock"]) for e in self.of_type("output")]

    def transfers(self) -> list[dict]:
        return self.of_type("transfer")

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True) + "\n" for e in self.events)


# -- machine -----------------------------------------------------------------


class _Return(Exception):
    def __init__(self, value):
        self.value = value


_NONE = object()


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


@dataclass
class Frame:
    segment: str
    locals: dict = field(default_factory=dict)


class Machine:
    """One interpreter instance owning one machine state."""

    def __init__(self, tree: ElementTree, script: EventScript | None = None, max_steps: int = DEFAULT_MAX_STEPS):
        if max_steps < 1:
            raise ValueError("max_steps must be positive")
        self.tree = tree
        self.program = tree.program
        self.symbols: SymbolTable = tree.symbols
        self.script = script or EventScript()
        self.max_steps = max_steps
        self.clock = 0
        self.globals: dict = {}
        self.hardware: dict = dict(self.script.hardware)
        self.frames: list[Frame] = []
        self.timers: list = []  # heap of (fire_time, seq, after_stmt)
        self.seq = 0
        self.queue: deque = deque()  # (event, args, origin element id or None)
        self.registered: list = []
        self.steps = 0
        self.trace = Trace()

    # -- driver --------------------------------------------------------------

    def run(self) -> Trace:
        self.trace.record("start", clock=0)
        try:
            self._script()
            self._loop()
        except StepLimitExceeded:
            self.trace.completed = False
            self.trace.record("stop", clock=self.clock, reason="step-limit")
            raise
        self.trace.record("stop", clock=self.clock, reason="idle")
        return self.trace

    def _script(self) -> None:
        units = self.program.script_units()
        if not units:
            return
        self.frames.append(Frame(self.tree.segment_for_key("script").id))
        prev = None
        for unit in units:
            el = self.tree.registration(unit) if isinstance(unit, A.Handler) else self.tree.for_node(unit)
            if prev is not None:
                self._transfer(prev, el.id, SEQUENTIAL)
            if isinstance(unit, A.Handler):
                self._step(el.id)
                self.registered.append(unit)
            else:
                self._exec(unit)
            prev = el.id
        self.frames.pop()

    def _loop(self) -> None:
        pending = deque(self.script.events)
        while True:
            if self.timers and self.timers[0][0] <= self.clock:
                _, _, key = heapq.heappop(self.timers)
                self._fire_timer(key.node)
            elif self.queue:
                event, args, origin = self.queue.popleft()
                self._dispatch(event, args, origin)
            elif pending and pending[0].time <= self.clock:
                s = pending.popleft()
                self.queue.append((s.event, s.args, None))
            else:
                upcoming = []
                if self.timers:
                    upcoming.append(self.timers[0][0])
                if pending:
                    upcoming.append(pending[0].time)
                if not upcoming:
                    return
                new = min(upcoming)
                self.trace.record("clock-advance", old=self.clock, new=new)
                self.clock = new

    def _fire_timer(self, after: A.After) -> None:
        origin = self.tree.for_node(after)
        body = self.tree.for_node(after.body)
        self.trace.record("dispatch", event=f"timer:{body.name}", handler=body.id, clock=self.clock)
        self._transfer(origin.id, body.id, EVENT_SUBTYPE)
        self.frames.append(Frame(body.id))
        self._block(after.body.stmts)
        self.frames.pop()

    def _dispatch(self, event: str, args: tuple, origin: str | None) -> None:
        for h in self.registered:
            if h.event != event:
                continue
            seg = self.tree.for_node(h)
            if len(args) != len(h.params):
                raise FlareRuntimeError(
                    f"event `{event}` delivered {len(args)} argument(s) to a handler expecting {len(h.params)}",
                    h.header_span)
            source = origin if origin is not None else self.tree.registration(h).id
            self.trace.record("dispatch", event=event, handler=seg.id, clock=self.clock)
            self._transfer(source, seg.id, EVENT_SUBTYPE)
            frame = Frame(seg.id, {p.name: v for p, v in zip(h.params, args)})
            self.frames.append(frame)
            self._block(h.body.stmts)
            self.frames.pop()

    # -- bookkeeping ---------------------------------------------------------

    def _step(self, eid: str) -> None:
        self.steps += 1
        if self.steps > self.max_steps:
            raise StepLimitExceeded(self.max_steps, self.trace)
        self.trace.record("exec", element=eid, clock=self.clock)

    def _transfer(self, source: str, target: str, subtype: str) -> None:
        self.trace.record("transfer", source=source, target=target, subtype=subtype, clock=self.clock)

    # -- statements ----------------------------------------------------------

    def _block(self, stmts) -> None:
        prev = None
        for s in stmts:
            eid = self.tree.for_node(s).id
            if prev is not None:
                self._transfer(prev, eid, SEQUENTIAL)
            self._exec(s)
            prev = eid

    def _enter(self, stmt_id: str, block: A.Block) -> None:
        if block.stmts:
            self._transfer(stmt_id, self.tree.for_node(block.stmts[0]).id, BRANCH)
            self._block(block.stmts)

    def _exec(self, s) -> None:
        eid = self.tree.for_node(s).id
        self._step(eid)
        if isinstance(s, (A.VarDecl, A.GlobalDecl, A.Assign)):
            self._store(s, self._eval(s.value, eid))
        elif isinstance(s, A.If):
            if self._truth(self._eval(s.cond, eid), s.cond):
                self._enter(eid, s.then)
            elif s.orelse is not None:
                self._enter(eid, s.orelse)
        elif isinstance(s, A.While):
            while self._truth(self._eval(s.cond, eid), s.cond):
                self._enter(eid, s.body)
                if not s.body.stmts:
                    self._step(eid)
        elif isinstance(s, A.Repeat):
            n = self._int(self._eval(s.count, eid), s.count)
            for _ in range(max(n, 0)):
                self._enter(eid, s.body)
        elif isinstance(s, A.After):
            delay = max(self._int(self._eval(s.delay, eid), s.delay), 0)
            self.seq += 1
            heapq.heappush(self.timers, (self.clock + delay, self.seq, _Key(s)))
        elif isinstance(s, A.Print):
            text = _fmt(self._eval(s.value, eid))
            self.trace.record("output", text=text, clock=self.clock)
        elif isinstance(s, A.Emit):
            args = tuple(self._eval(a, eid) for a in s.args)
            self.queue.append((s.event, args, eid))
        elif isinstance(s, A.Return):
            raise _Return(None if s.value is None else self._eval(s.value, eid))
        elif isinstance(s, A.CallStmt):
            self._call(s, eid)
        elif isinstance(s, A.HwWrite):
            value = self._eval(s.value, eid)
            self.hardware[s.device] = value
            self.trace.record("hw-write", device=s.device, value=value, clock=self.clock)
        else:
            raise TypeError(f"unknown statement {s!r}")

    def _store(self, s, value) -> None:
        sym = self.symbols.lookup(s.name_span)
        if sym.kind == GLOBAL:
            self.globals[s.name] = value
        else:
            self.frames[-1].locals[s.name] = value

    # -- expressions ---------------------------------------------------------

    def _call(self, node, site: str):
        fn = self.symbols.functions[node.name]
        args = [self._eval(a, site) for a in node.args]
        if len(args) != len(fn.params):
            raise FlareRuntimeError(
                f"`{fn.name}` expects {len(fn.params)} argument(s), got {len(args)}", node.span)
        if len(self.frames) > MAX_CALL_DEPTH:
            raise FlareRuntimeError(f"call depth exceeded {MAX_CALL_DEPTH}", node.span)
        seg = self.tree.for_node(fn)
        self._transfer(site, seg.id, BRANCH)
        self.frames.append(Frame(seg.id, {p.name: v for p, v in zip(fn.params, args)}))
        try:
            self._block(fn.body.stmts)
            result = _NONE
        except _Return as r:
            result = _NONE if r.value is None else r.value
        finally:
            self.frames.pop()
        return result

    def _eval(self, e, site: str):
        if isinstance(e, (A.IntLit, A.StrLit, A.BoolLit)):
            return e.value
        if isinstance(e, A.NameRef):
            sym = self.symbols.lookup(e.span)
            scope = self.globals if sym.kind == GLOBAL else self.frames[-1].locals
            if e.name not in scope:
                raise FlareRuntimeError(f"`{e.name}` read before it was assigned", e.span)
            return scope[e.name]
        if isinstance(e, A.HwRead):
            return self.hardware.get(e.device, 0)
        if isinstance(e, A.CallExpr):
            value = self._call(e, site)
            if value is _NONE:
                raise FlareRuntimeError(f"`{e.name}` returned no value", e.span)
            return value
        if isinstance(e, A.Unary):
            v = self._eval(e.operand, site)
            if e.op == "not":
                return not self._truth(v, e.operand)
            return -self._int(v, e.operand)
        if isinstance(e, A.Binary):
            if e.op == "and":
                return self._truth(self._eval(e.lhs, site), e.lhs) and self._truth(self._eval(e.rhs, site), e.rhs)
            if e.op == "or":
                return self._truth(self._eval(e.lhs, site), e.lhs) or self._truth(self._eval(e.rhs, site), e.rhs)
            return self._binary(e, self._eval(e.lhs, site), self._eval(e.rhs, site))
        raise TypeError(f"unknown expression {e!r}")

    def _binary(self, e, a, b):
        op = e.op
        if op == "+" and (isinstance(a, str) or isinstance(b, str)):
            return _fmt(a) + _fmt(b)
        if op == "==":
            return a == b and type(a) is type(b)
        if op == "!=":
            return not (a == b and type(a) is type(b))
        if op in ("<", "<=", ">", ">=") and isinstance(a, str) and isinstance(b, str):
            return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]
        x, y = self._int(a, e.lhs), self._int(b, e.rhs)
        if op == "+":
            return x + y
        if op == "-":
            return x - y
        if op == "*":
            return x * y
        if op == "/":
            if y == 0:
                raise FlareRuntimeError("division by zero", e.span)
            q = abs(x) // abs(y)
            return q if (x >= 0) == (y >= 0) else -q
        return {"<": x < y, "<=": x <= y, ">": x > y, ">=": x >= y}[op]

    @staticmethod
    def _int(v, node) -> int:
        if isinstance(v, bool) or not isinstance(v, int):
            raise FlareRuntimeError(f"expected an integer, got {_fmt(v)!r}", node.span)
        return v

    @staticmethod
    def _truth(v, node) -> bool:
        if isinstance(v, bool):
            return v
        if isinstance(v, int):
            return v != 0
        raise FlareRuntimeError(f"expected a boolean, got {_fmt(v)!r}", node.span)


class _Key:
    # heap payload that never takes part in ordering
    __slots__ = ("node",)

    def __init__(self, node):
        self.node = node

    def __lt__(self, other):
        return False


def run(program, script: EventScript | None = None, max_steps: int = DEFAULT_MAX_STEPS) -> Trace:
    """Execute ``program`` (a Program or an ElementTree) against ``script``.

    Raises :class:`StepLimitExceeded` (carrying the partial trace) when the
    step budget runs out, and :class:`FlareRuntimeError` on faults such as
    division by zero or call arity mismatches.
    """
    if isinstance(program, A.Program):
        from .elements import identify_elements
        from .lang import resolve_names

        program = identify_elements(program, resolve_names(program))
    return Machine(program, script, max_steps).run()


# -- static/dynamic agreement ------------------------------------------------


@dataclass
class AgreementReport:
    matched: int
    unmatched: list  # transfer events with no static counterpart
    unexercised: list  # ids of static bindings never seen at runtime
    histogram: dict  # subtype -> number of runtime transfers

    @property
    def ok(self) -> bool:
        return not self.unmatched

    def to_json(self) -> dict:
        return {
            "matched": self.matched,
            "unmatched": self.unmatched,
            "unexercised": self.unexercised,
            "histogram": self.histogram,
        }

    def summary(self) -> str:
        hist = " ".join(f"{k}={self.histogram.get(k, 0)}" for k in (SEQUENTIAL, BRANCH, EVENT_SUBTYPE))
        lines = [
            f"agreement: {'ok' if self.ok else 'DISAGREE'}",
            f"matched transfers: {self.matched}",
            f"unmatched transfers: {len(self.unmatched)}",
            f"unexercised static bindings: {len(self.unexercised)}",
            f"transfer histogram: {hist}",
        ]
        for t in self.unmatched:
            lines.append(f"  unmatched: {t['source']} -> {t['target']} ({t['subtype']}) at t={t['clock']}")
        for b in self.unexercised:
            lines.append(f"  unexercised: {b}")
        return "\n".join(lines) + "\n"


def check_agreement(trace: Trace, bindings: list[Binding]) -> AgreementReport:
    """Match every runtime transfer to a static causal-temporal binding."""
    static = {}
    for b in bindings:
        if b.dimension == CAUSAL:
            static.setdefault(b.triple, b.id)
    seen = set()
    matched = 0
    unmatched = []
    hist = Counter()
    for t in trace.transfers():
        triple = (t["source"], t["target"], t["subtype"])
        hist[t["subtype"]] += 1
        if triple in static:
            matched += 1
            seen.add(triple)
        else:
            unmatched.append(t)
    unexercised = [bid for triple, bid in static.items() if triple not in seen]
    return AgreementReport(matched, unmatched, unexercised, {k: hist[k] for k in sorted(hist)})
