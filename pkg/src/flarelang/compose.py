"""Composition of bound elements into a higher-scale element, plus the flattening oracle."""

from __future__ import annotations

from dataclasses import dataclass, field

from .bindings import Binding, bindings_for
from .elements import Element, ElementTree
from .errors import CompositionError
from .lang import ast as A
from .lang.resolve import GLOBAL, LOCAL, PARAMETER, SymbolTable, resolve_names, segment_key
from .lang.span import SourceSpan, cover
from .properties import (
    EFFECT, RECEIVE, SEND, SHARE, PropertyEntry, PropertySet, header_entries, header_properties,
)

ABSORBED, PROMOTED, RETAINED = "absorbed", "promoted", "retained"


@dataclass
class CompositionResult:
    composite: Element
    absorbed: list  # ids of bindings running between distinct members
    promoted: list  # global names now confined inside the composite
    retained: PropertySet
    accounting: list = field(default_factory=list)  # (member id, entry, disposition)

    def to_json(self) -> dict:
        c = self.composite
        return {
            "composite": {
                "id": c.id,
                "name": c.name,
                "scale": c.scale,
                "span": c.span.to_json(),
                "constituents": list(c.constituents),
            },
            "absorbed": list(self.absorbed),
            "promoted": list(self.promoted),
            "retained": self.retained.to_json(),
            "accounting": [
                {"member": m, "entry": e.to_json(), "disposition": d} for m, e, d in self.accounting
            ],
        }


def _check_members(tree: ElementTree, member_ids) -> list[Element]:
    ids = list(dict.fromkeys(member_ids))
    missing = [m for m in ids if m not in tree.elements]
    if missing:
        raise CompositionError(f"unknown element id(s): {', '.join(missing)}")
    members = sorted((tree[m] for m in ids), key=lambda e: list(tree.elements).index(e.id))
    if not members:
        raise CompositionError("cannot compose an empty member set")
    if len({m.scale for m in members}) > 1:
        raise CompositionError("members must share one scale")
    if len({m.parent for m in members}) > 1:
        raise CompositionError("members must share one parent")
    if members[0].parent is None:
        raise CompositionError("the system element cannot be a member")
    return members


def _callers(bindings: list[Binding], target: str) -> list[str]:
    return [b.source for b in bindings if b.subtype == "branch" and b.target == target and b.via == "call"]


def _confined(tree: ElementTree, members: list[Element], global_name: str) -> bool:
    """No element outside the member set reads or writes ``global_name``."""
    member_ids = {m.id for m in members}
    ancestors = {a.id for a in tree.ancestors(members[0].id) if a.scale < 2}
    key = (SHARE, "global-state", global_name)
    for seg in tree.segments():
        if seg.id in member_ids or seg.id in ancestors:
            continue
        if seg.properties.get(*key) is not None:
            return False
    for aid in ancestors:
        if header_properties(tree[aid], tree).get(*key) is not None:
            return False
        for child in tree.children(aid):
            if child.id in member_ids or child.id in ancestors:
                continue
            if child.properties.get(*key) is not None:
                return False
    return True


def compose(tree: ElementTree, member_ids, name: str, bindings: list[Binding] | None = None) -> CompositionResult:
    """Treat the member elements as one new element one scale up.

    Member Sends/Receives matched inside the member set are absorbed,
    globals touched only by two or more members are promoted to Effects, and
    everything else is retained. Triggers delivered by the runtime
    dispatcher (events, timers, emitted messages) always stay on the boundary.
    """
    members = _check_members(tree, member_ids)
    if bindings is None:
        bindings = bindings_for(tree)
    member_ids = [m.id for m in members]
    symbols = tree.symbols
    span = cover(m.span for m in members)
    scale = 1 + max(m.scale for m in members)
    composite = Element(f"composite:{span.file}:{name}", name, "composite", scale, span,
                        constituents=tuple(member_ids))

    def owner(eid: str) -> str | None:
        for m in member_ids:
            if tree.inside(eid, [m]):
                return m
        return None

    absorbed = [b.id for b in bindings
                if owner(b.source) is not None and owner(b.target) is not None
                and owner(b.source) != owner(b.target)]

    def is_member_segment(fname: str) -> bool:
        return fname in symbols.functions and tree.function_segment(fname).id in member_ids

    def all_callers_inside(fname: str) -> bool:
        callers = _callers(bindings, tree.function_segment(fname).id)
        return bool(callers) and all(owner(c) is not None for c in callers)

    share_counts: dict[str, int] = {}
    for m in members:
        for s in m.properties.shares:
            if s.subject_kind == "global-state":
                share_counts[s.subject] = share_counts.get(s.subject, 0) + 1
    promotable = {g for g, n in share_counts.items() if n >= 2 and _confined(tree, members, g)}

    accounting = []
    for m in members:
        header = m.kind == "function"
        for e in m.properties.entries():
            disposition = RETAINED
            if e.kind == RECEIVE and e.subject_kind in ("parameter", "call-trigger") and header:
                if all_callers_inside(m.node.name):
                    disposition = ABSORBED
            elif e.kind == SEND and e.subject_kind == "return-value" and header:
                if all_callers_inside(e.subject):
                    disposition = ABSORBED
            elif e.subject_kind == "message" and e.subject in symbols.functions:
                if is_member_segment(e.subject):
                    disposition = ABSORBED
            elif e.kind == SHARE and e.subject_kind == "global-state" and e.subject in promotable:
                disposition = PROMOTED
            accounting.append((m.id, e, disposition))

    kept = [e for _, e, d in accounting if d == RETAINED]
    kept += [PropertyEntry(EFFECT, "local-state", e.subject, e.mode, e.span)
             for _, e, d in accounting if d == PROMOTED]
    retained = PropertySet.from_entries(kept)
    composite.properties = retained
    return CompositionResult(composite, absorbed, sorted(promotable), retained, accounting)


# -- flattening oracle -------------------------------------------------------


def _parse_id(eid: str) -> tuple[str, int, int]:
    scale, rest = eid.split(":", 1)
    _, line, col = rest.rsplit(":", 2)
    return scale, int(line), int(col)


class _Region:
    """Member region located directly in the syntax tree from element ids."""

    def __init__(self, program: A.Program, symbols: SymbolTable, member_ids):
        self.program = program
        self.symbols = symbols
        self.segments: list = []  # (kind, node, owner key, statements)
        self.stmts: list = []  # statements inside the region, with owner keys
        self.member_stmts: list[list] = []
        for eid in member_ids:
            scale, line, col = _parse_id(eid)
            if scale == "segment":
                kind, node, key, body = self._find_segment(line, col)
                stmts = list(A.walk_stmts([s for s in body if not isinstance(s, A.Handler)]))
                self.segments.append((kind, node, key))
                self.stmts.extend((s, key) for s in stmts)
                self.member_stmts.append(stmts)
            elif scale == "statement":
                node, key = self._find_statement(line, col)
                stmts = [] if isinstance(node, A.Handler) else list(A.walk_stmts([node]))
                self.stmts.extend((s, key) for s in stmts)
                self.member_stmts.append(stmts)
            else:
                raise CompositionError(f"oracle cannot flatten {eid}")
        self.ids = {id(s) for s, _ in self.stmts}

    def _all_segments(self):
        units = self.program.script_units()
        yield "script", None, "script", units
        for item in self.program.items:
            if isinstance(item, A.FuncDef):
                yield "function", item, segment_key(item), item.body.stmts
            elif isinstance(item, A.Handler):
                yield "handler", item, segment_key(item), item.body.stmts
        everything = []
        for item in self.program.items:
            everything.extend(item.body.stmts if isinstance(item, (A.FuncDef, A.Handler)) else [item])
        for s in A.walk_stmts(everything, into_after=True):
            if isinstance(s, A.After):
                yield "timer", s, segment_key(s), s.body.stmts

    def _find_segment(self, line, col):
        for kind, node, key, body in self._all_segments():
            if kind == "script":
                real = [u for u in body]
                if real:
                    first = real[0].header_span if isinstance(real[0], A.Handler) else real[0].span
                    if first.start == (line, col):
                        return kind, node, key, body
                continue
            span = node.span if kind == "function" else node.body.span
            if span.start == (line, col):
                return kind, node, key, body
        raise CompositionError(f"no segment at {line}:{col}")

    def _find_statement(self, line, col):
        for kind, node, key, body in self._all_segments():
            for s in A.walk_stmts(body):
                start = s.header_span.start if isinstance(s, A.Handler) else s.span.start
                if start == (line, col):
                    return s, key
        raise CompositionError(f"no statement at {line}:{col}")


def _all_call_sites(program: A.Program) -> dict[str, list[int]]:
    sites: dict[str, list[int]] = {}
    everything = []
    for item in program.items:
        everything.extend(item.body.stmts if isinstance(item, (A.FuncDef, A.Handler)) else [item])
    for s in A.walk_stmts(everything, into_after=True):
        names = [s.name] if isinstance(s, A.CallStmt) else []
        for e in A.own_exprs(s):
            names += [n.name for n in A.walk_expr(e) if isinstance(n, A.CallExpr)]
        for n in names:
            sites.setdefault(n, []).append(id(s))
    return sites


def _global_accessors(program: A.Program, symbols: SymbolTable) -> dict[str, set[int]]:
    acc: dict[str, set[int]] = {}
    everything = []
    for item in program.items:
        everything.extend(item.body.stmts if isinstance(item, (A.FuncDef, A.Handler)) else [item])
    for s in A.walk_stmts(everything, into_after=True):
        names = set()
        if isinstance(s, (A.GlobalDecl, A.Assign)) and symbols.refs[s.name_span].kind == GLOBAL:
            names.add(s.name)
        for e in A.own_exprs(s):
            for n in A.walk_expr(e):
                if isinstance(n, A.NameRef) and symbols.refs[n.span].kind == GLOBAL:
                    names.add(n.name)
        for g in names:
            acc.setdefault(g, set()).add(id(s))
    return acc


def flatten_oracle(program: A.Program, member_ids, symbols: SymbolTable | None = None) -> PropertySet:
    """Recompute a region's four properties straight from the syntax tree.

    Members are located by the positions encoded in their ids; no member
    PropertySet, binding or element tree is consulted.
    """
    member_ids = list(dict.fromkeys(member_ids))
    if not member_ids:
        return PropertySet()
    symbols = symbols or resolve_names(program)
    region = _Region(program, symbols, member_ids)
    sites = _all_call_sites(program)
    accessors = _global_accessors(program, symbols)
    member_segments = {node.name for kind, node, _ in region.segments if kind == "function"}

    def callers_inside(fname: str) -> bool:
        s = sites.get(fname, [])
        return bool(s) and all(x in region.ids for x in s)

    out: list[PropertyEntry] = []
    for kind, node, key in region.segments:
        if kind == "function":
            if node.params:
                heads = [PropertyEntry(RECEIVE, "parameter", p.name, "n/a", p.span) for p in node.params]
            else:
                heads = [PropertyEntry(RECEIVE, "call-trigger", node.name, "n/a", node.name_span)]
            if not callers_inside(node.name):
                out.extend(heads)
        elif kind == "handler":
            out.append(PropertyEntry(RECEIVE, "event-trigger", node.event, "n/a", node.event_span))
            if node.params:
                out.append(PropertyEntry(RECEIVE, "message", node.event, "n/a", node.params[0].span))
        elif kind == "timer":
            b = node.body.span
            out.append(PropertyEntry(RECEIVE, "timer-trigger", f"after@{b.start_line}:{b.start_col}", "n/a",
                                     node.keyword_span))

    def read(name_node):
        sym = symbols.refs[name_node.span]
        if sym.kind == LOCAL:
            return PropertyEntry(EFFECT, "local-state", sym.name, "read", name_node.span)
        if sym.kind == PARAMETER:
            if sym.owner.startswith("func:"):
                fname = sym.owner[5:]
                if fname in member_segments and callers_inside(fname):
                    return None
                return PropertyEntry(RECEIVE, "parameter", sym.name, "n/a", name_node.span)
            event = sym.owner.split(":", 1)[1].rsplit("@", 1)[0]
            return PropertyEntry(RECEIVE, "message", event, "n/a", name_node.span)
        return PropertyEntry(SHARE, "global-state", sym.name, "read", name_node.span)

    def write(stmt):
        sym = symbols.refs[stmt.name_span]
        if sym.kind in (LOCAL, PARAMETER):
            return PropertyEntry(EFFECT, "local-state", sym.name, "write", stmt.name_span)
        return PropertyEntry(SHARE, "global-state", sym.name, "write", stmt.name_span)

    def call(node):
        internal = node.name in member_segments
        res = []
        if node.args and not internal:
            res.append(PropertyEntry(SEND, "message", node.name, "n/a", node.span))
        if isinstance(node, A.CallExpr) and not internal and symbols.returns_value(node.name):
            res.append(PropertyEntry(RECEIVE, "message", node.name, "n/a", node.span))
        return res

    for stmt, key in region.stmts:
        for e in A.own_exprs(stmt):
            for n in A.walk_expr(e):
                if isinstance(n, A.NameRef):
                    entry = read(n)
                    if entry is not None:
                        out.append(entry)
                elif isinstance(n, A.HwRead):
                    out.append(PropertyEntry(SHARE, "hardware-state", n.device, "read", n.span))
                elif isinstance(n, A.CallExpr):
                    out.extend(call(n))
        if isinstance(stmt, (A.VarDecl, A.GlobalDecl, A.Assign)):
            out.append(write(stmt))
        elif isinstance(stmt, A.HwWrite):
            out.append(PropertyEntry(SEND, "hardware-command", stmt.device, "n/a", stmt.span))
            out.append(PropertyEntry(SHARE, "hardware-state", stmt.device, "write", stmt.span))
        elif isinstance(stmt, A.Print):
            out.append(PropertyEntry(SEND, "hardware-command", "console", "n/a", stmt.span))
        elif isinstance(stmt, A.Emit):
            out.append(PropertyEntry(SEND, "message", stmt.event, "n/a", stmt.span))
        elif isinstance(stmt, A.Return) and stmt.value is not None:
            fname = key[5:]
            if not (fname in member_segments and callers_inside(fname)):
                out.append(PropertyEntry(SEND, "return-value", fname, "n/a", stmt.span))
        elif isinstance(stmt, A.CallStmt):
            out.extend(call(stmt))

    # globals touched by at least two members and by nothing outside the region
    promoted = set()
    for g, where in accessors.items():
        touching = sum(1 for stmts in region.member_stmts if any(id(s) in where for s in stmts))
        if touching >= 2 and where <= region.ids:
            promoted.add(g)
    final = []
    for e in out:
        if e.kind == SHARE and e.subject_kind == "global-state" and e.subject in promoted:
            final.append(PropertyEntry(EFFECT, "local-state", e.subject, e.mode, e.span))
        else:
            final.append(e)
    return PropertySet.from_entries(final)
