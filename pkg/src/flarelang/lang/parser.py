from __future__ import annotations

from ..errors import ParseError
from . import ast as A
from .lexer import Token, tokenize
from .span import SourceSpan

_COMPARE = ("<", "<=", ">", ">=", "==", "!=")
_STMT_START = ("var", "global", "if", "while", "repeat", "after", "print", "emit", "return", "hw", "identifier")


class Parser:
    def __init__(self, tokens: list[Token], file: str):
        self.file = file
        if tokens:
            last = tokens[-1].span
            eof_span = SourceSpan(file, last.end_line, last.end_col, last.end_line, last.end_col)
        else:
            eof_span = SourceSpan(file, 1, 1, 1, 1)
        self.tokens = tokens + [Token("eof", None, eof_span)]
        self.pos = 0
        # "function" | "handler" | "after" | "script"
        self.context = "script"

    # -- token plumbing ------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, kind: str, value=None) -> bool:
        t = self.tok
        return t.kind == kind and (value is None or t.value == value)

    def at_op(self, value: str) -> bool:
        return self.at("op", value)

    def at_kw(self, value: str) -> bool:
        return self.at("kw", value)

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def fail(self, *expected: str):
        raise ParseError(self.tok.span, expected, self.tok.describe())

    def expect_op(self, value: str) -> Token:
        if not self.at_op(value):
            self.fail(f"`{value}`")
        return self.advance()

    def expect_kw(self, value: str) -> Token:
        if not self.at_kw(value):
            self.fail(f"`{value}`")
        return self.advance()

    def expect_ident(self, what: str = "identifier") -> Token:
        if not self.at("ident"):
            self.fail(what)
        return self.advance()

    # -- top level -----------------------------------------------------------

    def program(self) -> A.Program:
        items = []
        while not self.at("eof"):
            if self.at_kw("func"):
                items.append(self.funcdef())
            elif self.at_kw("when"):
                items.append(self.handler())
            else:
                self.context = "script"
                items.append(self.statement())
        if items:
            span = items[0].span.to(items[-1].span)
        else:
            span = SourceSpan(self.file, 1, 1, 1, 1)
        return A.Program(items, self.file, span)

    def params(self) -> list[A.Param]:
        params = []
        if self.at_op(")"):
            return params
        while True:
            t = self.expect_ident("parameter name") if params else self._first_param()
            params.append(A.Param(t.value, t.span))
            if self.at_op(","):
                self.advance()
                continue
            return params

    def _first_param(self) -> Token:
        if not self.at("ident"):
            self.fail("parameter name", "`)`")
        return self.advance()

    def funcdef(self) -> A.FuncDef:
        kw = self.expect_kw("func")
        name = self.expect_ident("function name")
        self.expect_op("(")
        params = self.params()
        self.expect_op(")")
        self.context = "function"
        body = self.block()
        return A.FuncDef(name.value, params, body, kw.span.to(body.span), name.span)

    def handler(self) -> A.Handler:
        kw = self.expect_kw("when")
        event = self.expect_ident("event name")
        params = []
        header_end = event.span
        if self.at_op("("):
            self.advance()
            params = self.params()
            header_end = self.expect_op(")").span
        self.context = "handler"
        body = self.block()
        return A.Handler(event.value, params, body, kw.span.to(body.span), kw.span.to(header_end), event.span)

    def block(self) -> A.Block:
        lb = self.expect_op("{")
        stmts = []
        while not self.at_op("}"):
            if self.at("eof"):
                self.fail("`}`", "statement")
            stmts.append(self.statement())
        rb = self.advance()
        return A.Block(stmts, lb.span.to(rb.span))

    # -- statements ----------------------------------------------------------

    def statement(self):
        t = self.tok
        if t.kind == "kw":
            method = getattr(self, f"stmt_{t.value}", None)
            if method is not None:
                return method()
        if t.kind == "ident":
            name = self.advance()
            if self.at_op("="):
                self.advance()
                value = self.expr()
                end = self.expect_op(";")
                return A.Assign(name.value, value, name.span.to(end.span), name.span)
            if self.at_op("("):
                args = self.call_args()
                end = self.expect_op(";")
                return A.CallStmt(name.value, args, name.span.to(end.span), name.span)
            self.fail("`=`", "`(`")
        self.fail(*[f"`{k}`" if k != "identifier" else k for k in _STMT_START])

    def stmt_var(self):
        kw = self.advance()
        name = self.expect_ident("variable name")
        self.expect_op("=")
        value = self.expr()
        end = self.expect_op(";")
        return A.VarDecl(name.value, value, kw.span.to(end.span), name.span)

    def stmt_global(self):
        kw = self.advance()
        name = self.expect_ident("variable name")
        self.expect_op("=")
        value = self.expr()
        end = self.expect_op(";")
        return A.GlobalDecl(name.value, value, kw.span.to(end.span), name.span)

    def stmt_if(self):
        kw = self.advance()
        cond = self.expr()
        then = self.block()
        orelse = None
        end = then.span
        if self.at_kw("else"):
            self.advance()
            if self.at_kw("if"):
                nested = self.stmt_if()
                orelse = A.Block([nested], nested.span)
            else:
                orelse = self.block()
            end = orelse.span
        return A.If(cond, then, orelse, kw.span.to(end))

    def stmt_while(self):
        kw = self.advance()
        cond = self.expr()
        body = self.block()
        return A.While(cond, body, kw.span.to(body.span))

    def stmt_repeat(self):
        kw = self.advance()
        count = self.expr()
        body = self.block()
        return A.Repeat(count, body, kw.span.to(body.span))

    def stmt_after(self):
        kw = self.advance()
        delay = self.expr()
        outer = self.context
        self.context = "after"
        body = self.block()
        self.context = outer
        return A.After(delay, body, kw.span.to(body.span), kw.span)

    def stmt_print(self):
        kw = self.advance()
        self.expect_op("(")
        value = self.expr()
        self.expect_op(")")
        end = self.expect_op(";")
        return A.Print(value, kw.span.to(end.span))

    def stmt_emit(self):
        kw = self.advance()
        event = self.expect_ident("event name")
        args = self.call_args() if self.at_op("(") else []
        end = self.expect_op(";")
        return A.Emit(event.value, args, kw.span.to(end.span), event.span)

    def stmt_return(self):
        kw = self.tok
        if self.context != "function":
            raise ParseError(kw.span, ["statement"], "`return` outside a function body")
        self.advance()
        value = None if self.at_op(";") else self.expr()
        end = self.expect_op(";")
        return A.Return(value, kw.span.to(end.span))

    def stmt_hw(self):
        kw = self.advance()
        self.expect_op(".")
        method = self.expect_ident("`write`")
        if method.value != "write":
            raise ParseError(method.span, ["`write`"], method.describe())
        self.expect_op("(")
        device = self.device_name()
        self.expect_op(",")
        value = self.expr()
        self.expect_op(")")
        end = self.expect_op(";")
        return A.HwWrite(device, value, kw.span.to(end.span))

    def device_name(self) -> str:
        if not self.at("string"):
            self.fail("device name string")
        return self.advance().value

    def call_args(self) -> list:
        self.expect_op("(")
        args = []
        if not self.at_op(")"):
            args.append(self.expr())
            while self.at_op(","):
                self.advance()
                args.append(self.expr())
        self.expect_op(")")
        return args

    # -- expressions ---------------------------------------------------------

    def expr(self):
        return self.or_expr()

    def or_expr(self):
        lhs = self.and_expr()
        while self.at_kw("or"):
            self.advance()
            rhs = self.and_expr()
            lhs = A.Binary("or", lhs, rhs, lhs.span.to(rhs.span))
        return lhs

    def and_expr(self):
        lhs = self.not_expr()
        while self.at_kw("and"):
            self.advance()
            rhs = self.not_expr()
            lhs = A.Binary("and", lhs, rhs, lhs.span.to(rhs.span))
        return lhs

    def not_expr(self):
        if self.at_kw("not"):
            kw = self.advance()
            operand = self.not_expr()
            return A.Unary("not", operand, kw.span.to(operand.span))
        return self.comparison()

    def comparison(self):
        lhs = self.additive()
        if self.tok.kind == "op" and self.tok.value in _COMPARE:
            op = self.advance().value
            rhs = self.additive()
            lhs = A.Binary(op, lhs, rhs, lhs.span.to(rhs.span))
        return lhs

    def additive(self):
        lhs = self.term()
        while self.at_op("+") or self.at_op("-"):
            op = self.advance().value
            rhs = self.term()
            lhs = A.Binary(op, lhs, rhs, lhs.span.to(rhs.span))
        return lhs

    def term(self):
        lhs = self.unary()
        while self.at_op("*") or self.at_op("/"):
            op = self.advance().value
            rhs = self.unary()
            lhs = A.Binary(op, lhs, rhs, lhs.span.to(rhs.span))
        return lhs

    def unary(self):
        if self.at_op("-"):
            minus = self.advance()
            operand = self.unary()
            return A.Unary("-", operand, minus.span.to(operand.span))
        return self.primary()

    def primary(self):
        t = self.tok
        if t.kind == "int":
            self.advance()
            return A.IntLit(t.value, t.span)
        if t.kind == "string":
            self.advance()
            return A.StrLit(t.value, t.span)
        if self.at_kw("true") or self.at_kw("false"):
            self.advance()
            return A.BoolLit(t.value == "true", t.span)
        if t.kind == "ident":
            self.advance()
            if self.at_op("("):
                args = self.call_args()
                end = self.tokens[self.pos - 1]
                return A.CallExpr(t.value, args, t.span.to(end.span), t.span)
            return A.NameRef(t.value, t.span)
        if self.at_kw("hw"):
            self.advance()
            self.expect_op(".")
            method = self.expect_ident("`read`")
            if method.value != "read":
                raise ParseError(method.span, ["`read`"], method.describe())
            self.expect_op("(")
            device = self.device_name()
            end = self.expect_op(")")
            return A.HwRead(device, t.span.to(end.span))
        if self.at_op("("):
            self.advance()
            inner = self.expr()
            self.expect_op(")")
            return inner
        self.fail("expression")


def parse(source: str, file: str = "<string>") -> A.Program:
    """Parse FlareLang source text into a :class:`Program`.

    Raises :class:`LexError` or :class:`ParseError` on the first problem; there
    is no error recovery.
    """
    tokens = tokenize(source, file)
    program = Parser(tokens, file).program()
    program.token_spans = tuple(t.span for t in tokens)
    lines = source.split("\n")
    last_line = len(lines)
    last_col = max(len(lines[-1]), 1)
    program.span = SourceSpan(file, 1, 1, last_line, last_col)
    return program
