"""The four observable properties of an element: Receives, Sends, Effects, Shares."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .elements import Element, ElementTree
from .lang import ast as A
from .lang.resolve import DEVICE, FUNCTION, GLOBAL, LOCAL, PARAMETER, SymbolTable
from .lang.span import SourceSpan

RECEIVE, SEND, EFFECT, SHARE = "receive", "send", "effect", "share"
KINDS = (RECEIVE, SEND, EFFECT, SHARE)
LISTS = {RECEIVE: "receives", SEND: "sends", EFFECT: "effects", SHARE: "shares"}

SUBJECTS = {
    RECEIVE: {"parameter", "event-trigger", "timer-trigger", "call-trigger", "message"},
    SEND: {"return-value", "message", "hardware-command"},
    EFFECT: {"local-state"},
    SHARE: {"global-state", "hardware-state"},
}
MODES = ("read", "write", "read-write", "n/a")

CONSOLE = "console"  # pseudo-device receiving print output

ELEMENT_STEMS = (
    "What does this element receive?",
    "What does it send?",
    "What does it change inside itself?",
    "What does it share?",
)


@dataclass(frozen=True)
class PropertyEntry:
    kind: str
    subject_kind: str
    subject: str
    mode: str
    span: SourceSpan

    def __post_init__(self):
        if self.subject_kind not in SUBJECTS[self.kind]:
            raise ValueError(f"{self.kind} entry cannot have subject kind {self.subject_kind}")
        if self.mode not in MODES:
            raise ValueError(f"bad mode {self.mode!r}")

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.kind, self.subject_kind, self.subject)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "subject_kind": self.subject_kind,
            "subject": self.subject,
            "mode": self.mode,
            "span": self.span.to_json(),
        }

    def describe(self) -> str:
        mode = "" if self.mode == "n/a" else f" ({self.mode})"
        return f"{self.subject_kind} `{self.subject}`{mode}"


def merge_mode(a: str, b: str) -> str:
    if a == b:
        return a
    if "n/a" in (a, b):
        return a if b == "n/a" else b
    return "read-write"


def merge_entries(entries: Iterable[PropertyEntry]) -> list[PropertyEntry]:
    """De-duplicate on (kind, subject kind, subject), merging modes.

    The earliest evidencing span wins; the result is in canonical order.
    """
    merged: dict = {}
    for e in entries:
        old = merged.get(e.key)
        if old is None:
            merged[e.key] = e
        else:
            span = min(old.span, e.span, key=lambda s: (s.start, s.end))
            merged[e.key] = PropertyEntry(e.kind, e.subject_kind, e.subject, merge_mode(old.mode, e.mode), span)
    return sorted(merged.values(), key=lambda e: (e.span.start, e.span.end, e.subject_kind, e.subject))


@dataclass(frozen=True)
class PropertySet:
    receives: tuple = ()
    sends: tuple = ()
    effects: tuple = ()
    shares: tuple = ()

    @classmethod
    def from_entries(cls, entries: Iterable[PropertyEntry]) -> PropertySet:
        entries = list(entries)
        buckets = {k: merge_entries(e for e in entries if e.kind == k) for k in KINDS}
        return cls(*(tuple(buckets[k]) for k in KINDS))

    def entries(self) -> Iterator[PropertyEntry]:
        yield from self.receives
        yield from self.sends
        yield from self.effects
        yield from self.shares

    def get(self, kind: str, subject_kind: str, subject: str) -> PropertyEntry | None:
        for e in getattr(self, LISTS[kind]):
            if e.subject_kind == subject_kind and e.subject == subject:
                return e
        return None

    def subjects(self, kind: str, subject_kind: str | None = None) -> list[str]:
        return [e.subject for e in getattr(self, LISTS[kind])
                if subject_kind is None or e.subject_kind == subject_kind]

    def __len__(self) -> int:
        return sum(1 for _ in self.entries())

    def to_json(self) -> dict:
        return {LISTS[k]: [e.to_json() for e in getattr(self, LISTS[k])] for k in KINDS}


EMPTY = PropertySet()


# -- classification ----------------------------------------------------------


def owner_event(owner: str) -> str:
    # handler segment keys look like "when:<event>@<line>:<col>"
    return owner.split(":", 1)[1].rsplit("@", 1)[0]


def owner_function(owner: str) -> str | None:
    return owner[5:] if owner.startswith("func:") else None


def classify_access(node, symbols: SymbolTable, mode: str = "read") -> PropertyEntry:
    """Entry for one read or write of a resolved name.

    ``node`` is a NameRef (read), a write statement (VarDecl, GlobalDecl,
    Assign), or an ``hw.read``/``hw.write``. Locals are Effects at every scale
    up to their owning segment; parameters read as Receives; globals and
    devices are Shares.
    """
    span = node.name_span if isinstance(node, (A.VarDecl, A.GlobalDecl, A.Assign)) else node.span
    sym = symbols.lookup(span)
    if sym.kind == LOCAL or (sym.kind == PARAMETER and mode == "write"):
        return PropertyEntry(EFFECT, "local-state", sym.name, mode, span)
    if sym.kind == PARAMETER:
        if owner_function(sym.owner) is None:
            return PropertyEntry(RECEIVE, "message", owner_event(sym.owner), "n/a", span)
        return PropertyEntry(RECEIVE, "parameter", sym.name, "n/a", span)
    if sym.kind == GLOBAL:
        return PropertyEntry(SHARE, "global-state", sym.name, mode, span)
    if sym.kind == DEVICE:
        return PropertyEntry(SHARE, "hardware-state", sym.name, mode, span)
    raise ValueError(f"{sym.kind} `{sym.name}` is not a state access")


def classify_call(node, symbols: SymbolTable) -> list[PropertyEntry]:
    """Boundary crossings of a call: arguments are Sends, a used result is a Receive."""
    out = []
    if node.args:
        out.append(PropertyEntry(SEND, "message", node.name, "n/a", node.span))
    if isinstance(node, A.CallExpr) and symbols.returns_value(node.name):
        out.append(PropertyEntry(RECEIVE, "message", node.name, "n/a", node.span))
    return out


def expr_entries(expr, symbols: SymbolTable) -> Iterator[PropertyEntry]:
    for node in A.walk_expr(expr):
        if isinstance(node, (A.NameRef, A.HwRead)):
            yield classify_access(node, symbols, "read")
        elif isinstance(node, A.CallExpr):
            yield from classify_call(node, symbols)


def own_entries(stmt, symbols: SymbolTable, owner: str) -> Iterator[PropertyEntry]:
    """Entries evidenced by ``stmt`` itself, excluding nested statements."""
    for e in A.own_exprs(stmt):
        yield from expr_entries(e, symbols)
    if isinstance(stmt, (A.VarDecl, A.GlobalDecl, A.Assign)):
        yield classify_access(stmt, symbols, "write")
    elif isinstance(stmt, A.HwWrite):
        yield PropertyEntry(SEND, "hardware-command", stmt.device, "n/a", stmt.span)
        yield classify_access(stmt, symbols, "write")
    elif isinstance(stmt, A.Print):
        yield PropertyEntry(SEND, "hardware-command", CONSOLE, "n/a", stmt.span)
    elif isinstance(stmt, A.Emit):
        yield PropertyEntry(SEND, "message", stmt.event, "n/a", stmt.span)
    elif isinstance(stmt, A.Return) and stmt.value is not None:
        yield PropertyEntry(SEND, "return-value", owner_function(owner), "n/a", stmt.span)
    elif isinstance(stmt, A.CallStmt):
        yield from classify_call(stmt, symbols)


def header_entries(segment: Element) -> list[PropertyEntry]:
    """Triggers and parameters that enter a segment through its header."""
    node = segment.node
    if segment.kind == "function":
        if node.params:
            return [PropertyEntry(RECEIVE, "parameter", p.name, "n/a", p.span) for p in node.params]
        return [PropertyEntry(RECEIVE, "call-trigger", node.name, "n/a", node.name_span)]
    if segment.kind == "handler":
        out = [PropertyEntry(RECEIVE, "event-trigger", node.event, "n/a", node.event_span)]
        if node.params:
            out.append(PropertyEntry(RECEIVE, "message", node.event, "n/a", node.params[0].span))
        return out
    if segment.kind == "timer":
        after = segment.node
        return [PropertyEntry(RECEIVE, "timer-trigger", segment.name, "n/a", after.keyword_span)]
    return []


def segment_owner(tree: ElementTree, segment: Element) -> str:
    if segment.kind == "script":
        return "script"
    for key, eid in tree._by_key.items():
        if eid == segment.id:
            return key
    raise KeyError(segment.id)


def call_sites(tree: ElementTree) -> dict[str, list[str]]:
    """Function name -> ids of the statement elements whose own code calls it."""
    sites: dict[str, list[str]] = {}
    for el in tree.statements():
        if el.kind != "statement":
            continue
        for name in own_calls(el.node):
            sites.setdefault(name, [])
            if el.id not in sites[name]:
                sites[name].append(el.id)
    return sites


def own_calls(stmt) -> list[str]:
    names = []
    if isinstance(stmt, A.CallStmt):
        names.append(stmt.name)
    for e in A.own_exprs(stmt):
        names.extend(n.name for n in A.walk_expr(e) if isinstance(n, A.CallExpr))
    return names


def _region_entries(tree: ElementTree, el: Element) -> list[PropertyEntry]:
    seg = tree[el.segment] if el.scale == 0 else el
    owner = segment_owner(tree, seg)
    out = []
    nodes = [el.node] if el.scale == 0 else [s.node for s in tree.children(el.id)]
    for stmt in A.walk_stmts(n for n in nodes if not isinstance(n, A.Handler)):
        out.extend(own_entries(stmt, tree.symbols, owner))
    return out


def compute_properties(element: Element, tree: ElementTree, symbols: SymbolTable | None = None) -> PropertySet:
    """Receives, Sends, Effects and Shares of a source-derived element.

    For a function segment the boundary is the function itself: self-calls do
    not cross it, and when every call site lies inside the function its
    trigger, parameters and return value are internal too.
    """
    if not element.source_derived or element.scale > 1:
        raise ValueError(f"{element.id} is not a statement or segment; use compose()")
    if element.kind == "registration":
        return EMPTY
    entries = _region_entries(tree, element)
    if element.scale == 1:
        entries = header_entries(element) + entries
    if element.kind == "function":
        fname = element.node.name
        entries = [e for e in entries if not (e.subject_kind == "message" and e.subject == fname)]
        sites = call_sites(tree).get(fname, [])
        if sites and all(tree[s].segment == element.id for s in sites):
            entries = [e for e in entries if not _function_boundary(e, fname)]
    return PropertySet.from_entries(entries)


def _function_boundary(e: PropertyEntry, fname: str) -> bool:
    return (e.kind == RECEIVE and e.subject_kind in ("parameter", "call-trigger")) or (
        e.kind == SEND and e.subject_kind == "return-value" and e.subject == fname
    )


def header_properties(element: Element, tree: ElementTree) -> PropertySet:
    """Entries from a compound statement's own governing expression only."""
    if element.kind != "statement" or not isinstance(element.node, A.COMPOUND):
        return EMPTY
    entries = []
    for e in A.own_exprs(element.node):
        entries.extend(expr_entries(e, tree.symbols))
    return PropertySet.from_entries(entries)


def assign_properties(tree: ElementTree) -> None:
    """Fill ``properties`` on every statement and segment element."""
    for el in tree:
        if el.scale <= 1 and el.source_derived:
            el.properties = compute_properties(el, tree)


def question_stems_for_element() -> list[str]:
    return list(ELEMENT_STEMS)
