"""FlareLang syntax tree.

Spans are excluded from equality, so ``==`` between two trees is structural
equality. Nodes are mutable and unhashable; analyses that need per-node maps
key them by ``id(node)`` while the owning :class:`Program` is alive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar, Iterator, Optional, Union

from .span import SourceSpan

BINARY_OPS = ("+", "-", "*", "/", "<", "<=", ">", ">=", "==", "!=", "and", "or")
UNARY_OPS = ("-", "not")


def _span():
    return field(default=None, compare=False, repr=False)


# -- expressions -------------------------------------------------------------


@dataclass
class IntLit:
    kind: ClassVar[str] = "int"
    value: int
    span: SourceSpan = _span()


@dataclass
class StrLit:
    kind: ClassVar[str] = "string"
    value: str
    span: SourceSpan = _span()


@dataclass
class BoolLit:
    kind: ClassVar[str] = "bool"
    value: bool
    span: SourceSpan = _span()


@dataclass
class NameRef:
    kind: ClassVar[str] = "name"
    name: str
    span: SourceSpan = _span()


@dataclass
class HwRead:
    kind: ClassVar[str] = "hw-read"
    device: str
    span: SourceSpan = _span()


@dataclass
class CallExpr:
    kind: ClassVar[str] = "call-expr"
    name: str
    args: list
    span: SourceSpan = _span()
    name_span: SourceSpan = _span()


@dataclass
class Binary:
    kind: ClassVar[str] = "binary"
    op: str
    lhs: "Expr"
    rhs: "Expr"
    span: SourceSpan = _span()


@dataclass
class Unary:
    kind: ClassVar[str] = "unary"
    op: str
    operand: "Expr"
    span: SourceSpan = _span()


Expr = Union[IntLit, StrLit, BoolLit, NameRef, HwRead, CallExpr, Binary, Unary]


# -- statements --------------------------------------------------------------


@dataclass
class Block:
    kind: ClassVar[str] = "block"
    stmts: list
    span: SourceSpan = _span()


@dataclass
class VarDecl:
    kind: ClassVar[str] = "var-declare"
    name: str
    value: Expr
    span: SourceSpan = _span()
    name_span: SourceSpan = _span()


@dataclass
class GlobalDecl:
    kind: ClassVar[str] = "global-declare"
    name: str
    value: Expr
    span: SourceSpan = _span()
    name_span: SourceSpan = _span()


@dataclass
class Assign:
    kind: ClassVar[str] = "assign"
    name: str
    value: Expr
    span: SourceSpan = _span()
    name_span: SourceSpan = _span()


@dataclass
class If:
    kind: ClassVar[str] = "if"
    cond: Expr
    then: Block
    orelse: Optional[Block] = None
    span: SourceSpan = _span()


@dataclass
class While:
    kind: ClassVar[str] = "while"
    cond: Expr
    body: Block
    span: SourceSpan = _span()


@dataclass
class Repeat:
    kind: ClassVar[str] = "repeat"
    count: Expr
    body: Block
    span: SourceSpan = _span()


@dataclass
class After:
    kind: ClassVar[str] = "after"
    delay: Expr
    body: Block
    span: SourceSpan = _span()
    keyword_span: SourceSpan = _span()


@dataclass
class Print:
    kind: ClassVar[str] = "print"
    value: Expr
    span: SourceSpan = _span()


@dataclass
class Emit:
    kind: ClassVar[str] = "emit"
    event: str
    args: list
    span: SourceSpan = _span()
    event_span: SourceSpan = _span()


@dataclass
class Return:
    kind: ClassVar[str] = "return"
    value: Optional[Expr] = None
    span: SourceSpan = _span()


@dataclass
class CallStmt:
    kind: ClassVar[str] = "call"
    name: str
    args: list
    span: SourceSpan = _span()
    name_span: SourceSpan = _span()


@dataclass
class HwWrite:
    kind: ClassVar[str] = "hw-write"
    device: str
    value: Expr
    span: SourceSpan = _span()


Stmt = Union[VarDecl, GlobalDecl, Assign, If, While, Repeat, After, Print, Emit, Return, CallStmt, HwWrite]
COMPOUND = (If, While, Repeat, After)


# -- top level ---------------------------------------------------------------


@dataclass
class Param:
    kind: ClassVar[str] = "param"
    name: str
    span: SourceSpan = _span()


@dataclass
class FuncDef:
    kind: ClassVar[str] = "func"
    name: str
    params: list
    body: Block
    span: SourceSpan = _span()
    name_span: SourceSpan = _span()


@dataclass
class Handler:
    kind: ClassVar[str] = "when"
    event: str
    params: list
    body: Block
    span: SourceSpan = _span()
    header_span: SourceSpan = _span()
    event_span: SourceSpan = _span()


@dataclass
class Program:
    kind: ClassVar[str] = "program"
    items: list
    file: str = field(default="<string>", compare=False)
    span: SourceSpan = _span()
    token_spans: tuple = field(default=(), compare=False, repr=False)

    def functions(self) -> list[FuncDef]:
        return [it for it in self.items if isinstance(it, FuncDef)]

    def handlers(self) -> list[Handler]:
        return [it for it in self.items if isinstance(it, Handler)]

    def script_units(self) -> list:
        """Top-level statements and handler registrations, in source order."""
        return [it for it in self.items if not isinstance(it, FuncDef)]


# -- traversal helpers -------------------------------------------------------


def child_blocks(stmt) -> list[Block]:
    """Blocks nested directly under ``stmt`` that stay in the same segment.

    ``after`` bodies are excluded: they form their own segment.
    """
    if isinstance(stmt, If):
        return [stmt.then] + ([stmt.orelse] if stmt.orelse is not None else [])
    if isinstance(stmt, (While, Repeat)):
        return [stmt.body]
    return []


def own_exprs(stmt) -> list:
    """Top-level expressions evaluated by ``stmt`` itself (not by nested statements)."""
    if isinstance(stmt, (VarDecl, GlobalDecl, Assign, Print, HwWrite)):
        return [stmt.value]
    if isinstance(stmt, If):
        return [stmt.cond]
    if isinstance(stmt, While):
        return [stmt.cond]
    if isinstance(stmt, Repeat):
        return [stmt.count]
    if isinstance(stmt, After):
        return [stmt.delay]
    if isinstance(stmt, (Emit, CallStmt)):
        return list(stmt.args)
    if isinstance(stmt, Return):
        return [stmt.value] if stmt.value is not None else []
    return []


def walk_expr(expr) -> Iterator:
    """Pre-order walk over an expression tree."""
    yield expr
    if isinstance(expr, Binary):
        yield from walk_expr(expr.lhs)
        yield from walk_expr(expr.rhs)
    elif isinstance(expr, Unary):
        yield from walk_expr(expr.operand)
    elif isinstance(expr, CallExpr):
        for a in expr.args:
            yield from walk_expr(a)


def walk_stmts(stmts, into_after: bool = False) -> Iterator:
    """Pre-order walk over statements, optionally descending into ``after`` bodies."""
    for s in stmts:
        yield s
        for b in child_blocks(s):
            yield from walk_stmts(b.stmts, into_after)
        if into_after and isinstance(s, After):
            yield from walk_stmts(s.body.stmts, into_after)
