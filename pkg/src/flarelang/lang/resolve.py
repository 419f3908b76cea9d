from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ResolveError
from . import ast as A
from .span import SourceSpan

LOCAL = "local"
PARAMETER = "parameter"
GLOBAL = "global"
DEVICE = "hardware-device"
EVENT = "event-name"
FUNCTION = "function"

SCRIPT = "script"


def segment_key(node) -> str:
    """Stable key naming the segment a node opens (function, handler, timer body)."""
    if isinstance(node, A.FuncDef):
        return f"func:{node.name}"
    if isinstance(node, A.Handler):
        return f"when:{node.event}@{node.span.start_line}:{node.span.start_col}"
    if isinstance(node, A.After):
        return f"after@{node.body.span.start_line}:{node.body.span.start_col}"
    raise TypeError(f"{type(node).__name__} does not open a segment")


@dataclass(frozen=True)
class Symbol:
    kind: str
    name: str
    owner: str | None = None  # segment key, for locals and parameters


@dataclass
class SymbolTable:
    refs: dict = field(default_factory=dict)  # SourceSpan -> Symbol
    globals: set = field(default_factory=set)
    functions: dict = field(default_factory=dict)  # name -> FuncDef
    handlers: dict = field(default_factory=dict)  # event -> [Handler]
    events: set = field(default_factory=set)
    devices: set = field(default_factory=set)

    def lookup(self, span: SourceSpan) -> Symbol:
        return self.refs[span]

    def classify(self, name: str) -> set:
        """All (kind, owner) classifications a user name receives anywhere."""
        return {(s.kind, s.owner) for s in self.refs.values() if s.name == name}

    def user_names(self) -> list[str]:
        return sorted({s.name for s in self.refs.values()})

    def returns_value(self, fname: str) -> bool:
        fn = self.functions[fname]
        return any(isinstance(s, A.Return) and s.value is not None for s in A.walk_stmts(fn.body.stmts))


class _Resolver:
    def __init__(self, program: A.Program):
        self.program = program
        self.table = SymbolTable()

    def bind(self, span: SourceSpan, kind: str, name: str, owner: str | None = None):
        self.table.refs[span] = Symbol(kind, name, owner)

    def run(self) -> SymbolTable:
        t = self.table
        for fn in self.program.functions():
            if fn.name in t.functions:
                raise ResolveError(f"duplicate function `{fn.name}`", fn.name_span, fn.name)
            t.functions[fn.name] = fn
        for h in self.program.handlers():
            t.handlers.setdefault(h.event, []).append(h)
            t.events.add(h.event)
        all_stmts = list(A.walk_stmts(self._every_body(), into_after=True))
        for s in all_stmts:
            if isinstance(s, A.GlobalDecl):
                t.globals.add(s.name)
            elif isinstance(s, A.Emit):
                t.events.add(s.event)
        t.globals |= self._implicit_globals()
        for name in sorted(t.globals & set(t.functions)):
            raise ResolveError(f"`{name}` is both a global and a function", None, name)
        for name in sorted(t.events & (set(t.functions) | t.globals)):
            raise ResolveError(f"event `{name}` clashes with a function or global", None, name)

        self.segment(self.program.script_units(), SCRIPT, {})
        for item in self.program.items:
            if isinstance(item, A.FuncDef):
                scope = self.params(item.params, segment_key(item))
                self.bind(item.name_span, FUNCTION, item.name)
                self.segment(item.body.stmts, segment_key(item), scope)
            elif isinstance(item, A.Handler):
                self.bind(item.event_span, EVENT, item.event)
                scope = self.params(item.params, segment_key(item))
                self.segment(item.body.stmts, segment_key(item), scope)
        return t

    def _every_body(self) -> list:
        stmts = []
        for item in self.program.items:
            if isinstance(item, (A.FuncDef, A.Handler)):
                stmts.extend(item.body.stmts)
            else:
                stmts.append(item)
        return stmts

    def _implicit_globals(self) -> set:
        # bare top-level assignments without an earlier `var` create globals
        declared, found = set(), set()
        units = [u for u in self.program.script_units() if not isinstance(u, A.Handler)]
        for s in A.walk_stmts(units):
            if isinstance(s, A.VarDecl):
                declared.add(s.name)
            elif isinstance(s, A.Assign) and s.name not in declared:
                found.add(s.name)
        return found

    def params(self, params, owner: str) -> dict:
        scope = {}
        for p in params:
            if p.name in scope:
                raise ResolveError(f"duplicate parameter `{p.name}`", p.span, p.name)
            self._check_shadow(p.name, p.span)
            scope[p.name] = Symbol(PARAMETER, p.name, owner)
            self.table.refs[p.span] = scope[p.name]
        return scope

    def _check_shadow(self, name: str, span: SourceSpan):
        t = self.table
        if name in t.globals or name in t.functions or name in t.events:
            raise ResolveError(f"local `{name}` would shadow a global, function or event", span, name)

    def segment(self, stmts, owner: str, scope: dict):
        for s in stmts:
            if isinstance(s, A.Handler):
                continue
            self.stmt(s, owner, scope)

    def stmt(self, s, owner: str, scope: dict):
        t = self.table
        for e in A.own_exprs(s):
            self.expr(e, scope)
        if isinstance(s, A.VarDecl):
            if s.name in scope and scope[s.name].kind == PARAMETER:
                raise ResolveError(f"`var {s.name}` redeclares a parameter", s.name_span, s.name)
            self._check_shadow(s.name, s.name_span)
            scope[s.name] = Symbol(LOCAL, s.name, owner)
            self.table.refs[s.name_span] = scope[s.name]
        elif isinstance(s, A.GlobalDecl):
            if s.name in scope:
                raise ResolveError(f"`global {s.name}` conflicts with a local", s.name_span, s.name)
            self.bind(s.name_span, GLOBAL, s.name)
        elif isinstance(s, A.Assign):
            if s.name in scope:
                self.table.refs[s.name_span] = scope[s.name]
            elif owner == SCRIPT and s.name in t.globals:
                self.bind(s.name_span, GLOBAL, s.name)
            else:
                raise ResolveError(f"assignment to undeclared name `{s.name}`", s.name_span, s.name)
        elif isinstance(s, A.CallStmt):
            self.callee(s.name, s.name_span)
        elif isinstance(s, A.Emit):
            self.bind(s.event_span, EVENT, s.event)
        elif isinstance(s, A.HwWrite):
            t.devices.add(s.device)
            self.bind(s.span, DEVICE, s.device)
        elif isinstance(s, A.After):
            self.segment(s.body.stmts, segment_key(s), {})
        for b in A.child_blocks(s):
            for inner in b.stmts:
                self.stmt(inner, owner, scope)

    def callee(self, name: str, span: SourceSpan):
        if name not in self.table.functions:
            raise ResolveError(f"call to undefined function `{name}`", span, name)
        self.bind(span, FUNCTION, name)

    def expr(self, e, scope: dict):
        for node in A.walk_expr(e):
            if isinstance(node, A.NameRef):
                if node.name in scope:
                    self.table.refs[node.span] = scope[node.name]
                elif node.name in self.table.globals:
                    self.bind(node.span, GLOBAL, node.name)
                else:
                    raise ResolveError(f"use of undeclared name `{node.name}`", node.span, node.name)
            elif isinstance(node, A.CallExpr):
                self.callee(node.name, node.name_span)
            elif isinstance(node, A.HwRead):
                self.table.devices.add(node.device)
                self.bind(node.span, DEVICE, node.device)


def resolve_names(program: A.Program) -> SymbolTable:
    """Classify every name in ``program``; see :class:`Symbol` for the kinds.

    ``var`` declares a segment-local visible from its declaration onward,
    ``global`` declares or assigns a program global, and a bare assignment
    must hit an enclosing local unless it sits in the top-level script.
    """
    return _Resolver(program).run()
