"""Bindings between elements along the causal-temporal and communicative dimensions."""

from __future__ import annotations

from dataclasses import dataclass, field

from .elements import Element, ElementTree
from .lang import ast as A
from .lang.resolve import LOCAL
from .lang.span import SourceSpan
from .lang.unparse import unparse_expr
from .properties import ELEMENT_STEMS, RECEIVE, SHARE, PropertyEntry, own_calls

CAUSAL = "causal-temporal"
COMMUNICATIVE = "communicative"
SEQUENTIAL, BRANCH, EVENT_SUBTYPE = "sequential", "branch", "event"
SUBTYPES = (SEQUENTIAL, BRANCH, EVENT_SUBTYPE)

STEMS = {
    SEQUENTIAL: ("What happens next?", "What runs after this?"),
    BRANCH: ("Under what conditions does this run?", "How many times?"),
    EVENT_SUBTYPE: ("What triggers this?", "When does this fire?"),
    COMMUNICATIVE: ("What does this receive?", "What does it send?", "What do these share?"),
}


@dataclass
class Binding:
    id: str
    source: str
    target: str
    dimension: str
    subtype: str | None
    evidence: SourceSpan
    payload: dict | None = None
    condition_span: SourceSpan | None = None
    condition: str | None = None  # rendered governing expression, for display
    via: str = ""  # construct that produced the edge: call, then, else, loop, timer, emit, ...

    def __post_init__(self):
        if (self.subtype is not None) != (self.dimension == CAUSAL):
            raise ValueError("causal-temporal bindings need a subtype; communicative ones must not have one")
        if self.condition_span is not None and self.subtype != BRANCH:
            raise ValueError("only branch bindings carry a governing condition")

    @property
    def triple(self) -> tuple[str, str, str | None]:
        return (self.source, self.target, self.subtype)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "from": self.source,
            "to": self.target,
            "dimension": self.dimension,
            "subtype": self.subtype,
            "payload": self.payload,
            "condition_span": self.condition_span.to_json() if self.condition_span else None,
            "stems": question_stems(self),
        }


@dataclass
class AnalysisWarning:
    code: str
    message: str
    span: SourceSpan
    element: str

    def to_json(self) -> dict:
        return {"code": self.code, "message": self.message, "span": self.span.to_json(), "element": self.element}

    def diagnostic(self) -> str:
        return f"{self.span.file}:{self.span.start_line}:{self.span.start_col}: warning: {self.message}"


def question_stems(item) -> list[str]:
    """Classroom question stems for a binding or an element."""
    if isinstance(item, Element):
        return list(ELEMENT_STEMS)
    if item.dimension == COMMUNICATIVE:
        return list(STEMS[COMMUNICATIVE])
    return list(STEMS[item.subtype])


# -- causal-temporal ---------------------------------------------------------


class _Edges:
    def __init__(self, prefix: str):
        self.prefix = prefix
        self.items: list[Binding] = []
        self._seen: set = set()

    def add(self, source, target, dimension, subtype, evidence, **kw) -> None:
        key = (source, target, subtype, kw.get("via"), str(kw.get("payload")))
        if key in self._seen:
            return
        self._seen.add(key)
        bid = f"{self.prefix}{len(self.items) + 1}"
        self.items.append(Binding(bid, source, target, dimension, subtype, evidence, **kw))


def extract_causal_temporal(tree: ElementTree, warnings: list | None = None) -> list[Binding]:
    """Control edges read from control constructs only.

    Adjacent statements are sequential; ``if``/``while``/``repeat`` bodies and
    call sites are branch; handler registrations, ``after`` bodies and
    ``emit`` sites are event.
    """
    edges = _Edges("ct")
    for el in tree:
        if el.scale == 1:
            _sequence(edges, tree.children(el.id))
        if el.scale != 0:
            continue
        node = el.node
        if el.kind == "registration":
            handler_seg = tree.for_node(node)
            edges.add(el.id, handler_seg.id, CAUSAL, EVENT_SUBTYPE, el.span, via="registration")
            continue
        if isinstance(node, A.If):
            cond = unparse_expr(node.cond)
            for arm, block in (("then", node.then), ("else", node.orelse)):
                if block is not None and block.stmts:
                    first = tree.for_node(block.stmts[0])
                    edges.add(el.id, first.id, CAUSAL, BRANCH, el.span, condition_span=node.cond.span,
                              condition=cond if arm == "then" else f"not {cond}", via=arm)
                    _sequence(edges, [tree.for_node(s) for s in block.stmts])
        elif isinstance(node, (A.While, A.Repeat)):
            expr = node.cond if isinstance(node, A.While) else node.count
            if node.body.stmts:
                first = tree.for_node(node.body.stmts[0])
                text = unparse_expr(expr) if isinstance(node, A.While) else f"repeat {unparse_expr(expr)}"
                edges.add(el.id, first.id, CAUSAL, BRANCH, el.span, condition_span=expr.span,
                          condition=text, via="loop")
            _sequence(edges, [tree.for_node(s) for s in node.body.stmts])
        for name in own_calls(node):
            callee = tree.function_segment(name)
            edges.add(el.id, callee.id, CAUSAL, BRANCH, el.span, via="call")
        if isinstance(node, A.After):
            body = tree.for_node(node.body)
            edges.add(el.id, body.id, CAUSAL, EVENT_SUBTYPE, el.span, via="timer")
        elif isinstance(node, A.Emit):
            handlers = tree.handler_segments(node.event)
            if not handlers and warnings is not None:
                warnings.append(AnalysisWarning("unbound-event", f"`emit {node.event}` has no matching `when` handler",
                                        node.span, el.id))
            for h in handlers:
                edges.add(el.id, h.id, CAUSAL, EVENT_SUBTYPE, el.span, via="emit")
    if warnings is not None:
        emitted = {s.event for s in A.walk_stmts(_bodies(tree.program), into_after=True) if isinstance(s, A.Emit)}
        for h in tree.program.handlers():
            if h.event not in emitted:
                reg = tree.registration(h)
                warnings.append(AnalysisWarning("external-event",
                                        f"`when {h.event}` is never emitted by the program; only external "
                                        f"stimuli can fire it", h.header_span, reg.id))
    return _reorder(edges.items, tree)


def _bodies(program: A.Program) -> list:
    out = []
    for item in program.items:
        if isinstance(item, (A.FuncDef, A.Handler)):
            out.extend(item.body.stmts)
        else:
            out.append(item)
    return out


def _sequence(edges: _Edges, block: list[Element]) -> None:
    for a, b in zip(block, block[1:]):
        edges.add(a.id, b.id, CAUSAL, SEQUENTIAL, a.span, via="next")


def _reorder(items: list[Binding], tree: ElementTree) -> list[Binding]:
    # group by source element in tree order, renumber for stable ids
    order = {eid: i for i, eid in enumerate(tree.elements)}
    rank = {SEQUENTIAL: 0, BRANCH: 1, EVENT_SUBTYPE: 2}
    items = sorted(items, key=lambda b: (order[b.source], rank[b.subtype], order[b.target]))
    for i, b in enumerate(items, 1):
        b.id = f"ct{i}"
    return items


# -- communicative -----------------------------------------------------------


def entry_ref(element: Element, entry: PropertyEntry) -> dict:
    return {"element": element.id, "kind": entry.kind, "subject_kind": entry.subject_kind, "subject": entry.subject}


def extract_communicative(tree: ElementTree, properties: dict | None = None) -> list[Binding]:
    """Data edges between segments, matched purely from their PropertySets.

    ``properties`` maps element id to PropertySet and defaults to the sets
    stored on the tree. Effects never take part.
    """
    props = properties if properties is not None else {e.id: e.properties for e in tree.segments()}
    segs = tree.segments()
    symbols = tree.symbols
    edges = _Edges("cm")

    def link(a: Element, ea: PropertyEntry, b: Element, eb: PropertyEntry, via: str):
        payload = {"send": entry_ref(a, ea), "receive": entry_ref(b, eb)}
        edges.add(a.id, b.id, COMMUNICATIVE, None, ea.span, payload=payload, via=via)

    for a in segs:
        for send in props[a.id].sends:
            if send.subject_kind == "message" and send.subject in symbols.functions:
                callee = tree.function_segment(send.subject)
                if callee.id == a.id:
                    continue
                for r in props[callee.id].receives:
                    if r.subject_kind == "parameter":
                        link(a, send, callee, r, "argument")
            elif send.subject_kind == "message" and send.subject in symbols.events:
                for h in tree.handler_segments(send.subject):
                    r = props[h.id].get(RECEIVE, "message", send.subject)
                    if r is not None and h.id != a.id:
                        link(a, send, h, r, "payload")
            elif send.subject_kind == "return-value":
                for c in segs:
                    r = props[c.id].get(RECEIVE, "message", send.subject)
                    if r is not None and c.id != a.id:
                        link(a, send, c, r, "return")
    for i, a in enumerate(segs):
        for b in segs[i + 1:]:
            for sa in props[a.id].shares:
                sb = props[b.id].get(SHARE, sa.subject_kind, sa.subject)
                if sb is None:
                    continue
                payload = {
                    "subject_kind": sa.subject_kind,
                    "subject": sa.subject,
                    "from_mode": sa.mode,
                    "to_mode": sb.mode,
                    "send": entry_ref(a, sa),
                    "receive": entry_ref(b, sb),
                }
                edges.add(a.id, b.id, COMMUNICATIVE, None, sa.span, payload=payload, via="share")
    return edges.items


# -- value chains ------------------------------------------------------------


def value_chains(tree: ElementTree) -> list[dict]:
    """Transitive return-value -> argument flows through an orchestrating segment.

    A value returned by ``f`` and passed (directly or through locals) as an
    argument to ``g`` inside segment ``h`` yields the chain f -> h -> g.
    """
    symbols = tree.symbols
    chains: list[dict] = []
    for seg in tree.segments():
        stmts = list(A.walk_stmts([c.node for c in tree.children(seg.id) if not isinstance(c.node, A.Handler)]))
        sources: dict[str, set] = {}

        def origins(expr) -> set:
            out = set()
            for n in A.walk_expr(expr):
                if isinstance(n, A.CallExpr) and symbols.returns_value(n.name):
                    out.add(n.name)
                elif isinstance(n, A.NameRef) and symbols.lookup(n.span).kind == LOCAL:
                    out |= sources.get(n.name, set())
            return out

        changed = True
        while changed:
            changed = False
            for s in stmts:
                if isinstance(s, (A.VarDecl, A.Assign)) and symbols.lookup(s.name_span).kind == LOCAL:
                    new = origins(s.value) - sources.get(s.name, set())
                    if new:
                        sources.setdefault(s.name, set()).update(new)
                        changed = True
        seen = set()
        for s in stmts:
            calls = [s] if isinstance(s, A.CallStmt) else []
            for e in A.own_exprs(s):
                calls.extend(n for n in A.walk_expr(e) if isinstance(n, A.CallExpr))
            for call in calls:
                for arg in call.args:
                    for f in sorted(origins(arg)):
                        key = (f, call.name)
                        if key in seen or f == call.name:
                            continue
                        seen.add(key)
                        chains.append({
                            "from": tree.function_segment(f).id,
                            "via": seg.id,
                            "to": tree.function_segment(call.name).id,
                        })
    return chains


def bindings_for(tree: ElementTree, warnings: list | None = None) -> list[Binding]:
    return extract_causal_temporal(tree, warnings) + extract_communicative(tree)


__all__ = [
    "BRANCH", "Binding", "CAUSAL", "COMMUNICATIVE", "EVENT_SUBTYPE", "SEQUENTIAL", "STEMS", "SUBTYPES",
    "AnalysisWarning", "bindings_for", "extract_causal_temporal", "extract_communicative", "question_stems",
    "value_chains",
]
