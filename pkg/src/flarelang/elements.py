"""Bounded elements at statement, segment and system scale."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .errors import NotFound
from .lang import ast as A
from .lang.resolve import SymbolTable, segment_key
from .lang.span import SourceSpan, cover

SCALE_NAMES = {0: "statement", 1: "segment", 2: "system"}
POLICIES = ("statement", "segment", "system", "all")


def scale_name(level: int) -> str:
    return SCALE_NAMES.get(level, f"scale-{level}")


def element_id(level: int, span: SourceSpan) -> str:
    return f"{scale_name(level)}:{span.file}:{span.start_line}:{span.start_col}"


@dataclass
class Element:
    id: str
    name: str
    kind: str  # statement | registration | script | function | handler | timer | system | composite
    scale: int
    span: SourceSpan
    constituents: tuple = ()
    parent: str | None = None
    segment: str | None = None  # owning segment, for statement-scale elements
    properties: object = None  # PropertySet, filled in by the properties module
    node: object = field(default=None, compare=False, repr=False)

    @property
    def source_derived(self) -> bool:
        return self.kind != "composite"


@dataclass
class ElementTree:
    program: A.Program
    symbols: SymbolTable
    policy: str
    root: str
    elements: dict = field(default_factory=dict)  # id -> Element, in tree order
    _by_node: dict = field(default_factory=dict, repr=False)
    _by_key: dict = field(default_factory=dict, repr=False)

    def __getitem__(self, eid: str) -> Element:
        return self.elements[eid]

    def __iter__(self) -> Iterator[Element]:
        return iter(self.elements.values())

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def system(self) -> Element:
        return self.elements[self.root]

    def for_node(self, node) -> Element:
        return self.elements[self._by_node[id(node)]]

    def segment_for_key(self, key: str) -> Element:
        return self.elements[self._by_key[key]]

    def segments(self) -> list[Element]:
        return [e for e in self if e.scale == 1]

    def statements(self) -> list[Element]:
        return [e for e in self if e.scale == 0]

    def children(self, eid: str) -> list[Element]:
        return [self.elements[c] for c in self.elements[eid].constituents]

    def ancestors(self, eid: str) -> list[Element]:
        out = []
        parent = self.elements[eid].parent
        while parent is not None:
            out.append(self.elements[parent])
            parent = self.elements[parent].parent
        return out

    def descendants(self, eid: str) -> Iterator[Element]:
        for c in self.children(eid):
            yield c
            yield from self.descendants(c.id)

    def inside(self, eid: str, members) -> bool:
        """True when ``eid`` is one of ``members`` or nested under one."""
        members = set(members)
        if eid in members:
            return True
        return any(a.id in members for a in self.ancestors(eid))

    def function_segment(self, name: str) -> Element:
        return self.segment_for_key(f"func:{name}")

    def handler_segments(self, event: str) -> list[Element]:
        return [self.for_node(h) for h in self.symbols.handlers.get(event, [])]

    def registration(self, handler: A.Handler) -> Element:
        return self.elements[self._by_node[("registration", id(handler))]]


class _Builder:
    def __init__(self, program: A.Program, symbols: SymbolTable, policy: str):
        file = program.file
        root = element_id(2, SourceSpan(file, 1, 1, 1, 1))
        self.tree = ElementTree(program, symbols, policy, root)
        self.pending_timers: list[tuple[A.After, str]] = []

    def add(self, el: Element, node=None, key=None) -> Element:
        self.tree.elements[el.id] = el
        if node is not None:
            self.tree._by_node[key if key is not None else id(node)] = el.id
        return el

    def build(self) -> ElementTree:
        program = self.tree.program
        system = self.add(Element(self.tree.root, "system", "system", 2, program.span, node=program), program)
        segments = []
        units = program.script_units()
        if units:
            span = cover(u.header_span if isinstance(u, A.Handler) else u.span for u in units)
            segments.append(("script", Element(element_id(1, span), "script", "script", 1, span), units, None))
        others = []
        for item in program.items:
            if isinstance(item, A.FuncDef):
                others.append(("function", item))
            elif isinstance(item, A.Handler):
                others.append(("handler", item))
        for kind, node in others:
            body = node.body.stmts
            name = node.name if kind == "function" else f"handler:{node.event}"
            # a handler's header is its registration inside the script
            span = node.span if kind == "function" else node.body.span
            el = Element(element_id(1, span), name, kind, 1, span)
            segments.append((kind, el, body, node))
        for stmt in A.walk_stmts(self._all_statements(program), into_after=True):
            if isinstance(stmt, A.After):
                span = stmt.body.span
                name = f"after@{span.start_line}:{span.start_col}"
                el = Element(element_id(1, span), name, "timer", 1, span)
                segments.append(("timer", el, stmt.body.stmts, stmt))
        script = [s for s in segments if s[0] == "script"]
        rest = sorted((s for s in segments if s[0] != "script"), key=lambda s: s[1].span.start)
        seg_ids = []
        for kind, el, body, node in script + rest:
            el.parent = system.id
            el.node = node
            if node is None:
                self.add(el)
                self.tree._by_key["script"] = el.id
            else:
                self.add(el, node if kind != "timer" else node.body)
                self.tree._by_key[segment_key(node)] = el.id
            el.constituents = tuple(self.statement(s, el.id, el.id).id for s in body)
            seg_ids.append(el.id)
        system.constituents = tuple(seg_ids)
        return self.tree

    @staticmethod
    def _all_statements(program: A.Program) -> list:
        stmts = []
        for item in program.items:
            if isinstance(item, (A.FuncDef, A.Handler)):
                stmts.extend(item.body.stmts)
            else:
                stmts.append(item)
        return stmts

    def statement(self, node, parent: str, segment: str) -> Element:
        if isinstance(node, A.Handler):
            span = node.header_span
            el = Element(element_id(0, span), f"stmt@{span.start_line}", "registration", 0, span,
                         parent=parent, segment=segment, node=node)
            return self.add(el, node, ("registration", id(node)))
        span = node.span
        el = Element(element_id(0, span), f"stmt@{span.start_line}", "statement", 0, span,
                     parent=parent, segment=segment)
        el.node = node
        self.add(el, node)
        kids = []
        for block in A.child_blocks(node):
            for s in block.stmts:
                kids.append(self.statement(s, el.id, segment).id)
        el.constituents = tuple(kids)
        return el


def identify_elements(program: A.Program, symbols: SymbolTable, policy: str = "all") -> ElementTree:
    """Build the containment tree: system -> segments -> statements.

    Segments are function bodies, ``when`` handler bodies, ``after`` bodies and
    the top-level script. Handler registrations sit in the script as
    statement-scale elements. The full tree is always built; ``policy`` is
    recorded so reports can select which scales to show.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown scale policy {policy!r}")
    return _Builder(program, symbols, policy).build()


def element_at(tree: ElementTree, line: int, col: int) -> Element:
    """Smallest element whose span contains the position.

    Positions that do not fall on a token (whitespace, comments) raise
    :class:`NotFound`.
    """
    if not any(t.contains_position(line, col) for t in tree.program.token_spans):
        raise NotFound(f"no element at {line}:{col}",
                       SourceSpan(tree.program.file, max(line, 1), max(col, 1), max(line, 1), max(col, 1)))
    hits = [e for e in tree if e.source_derived and e.span.contains_position(line, col)]
    if not hits:
        raise NotFound(f"no element at {line}:{col}")
    return min(hits, key=lambda e: (tuple(-x for x in e.span.start), e.span.end, e.scale))
