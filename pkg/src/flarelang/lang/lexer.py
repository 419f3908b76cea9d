from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import LexError
from .span import SourceSpan

KEYWORDS = frozenset(
    {
        "func", "when", "var", "global", "if", "else", "while", "repeat", "after",
        "print", "emit", "return", "hw", "true", "false", "and", "or", "not",
    }
)

# longest operators first so "<=" wins over "<"
OPERATORS = ("<=", ">=", "==", "!=", "(", ")", "{", "}", ",", ";", "=", ".", "+", "-", "*", "/", "<", ">")

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT = re.compile(r"[0-9]+")
_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class Token:
    kind: str  # "int" | "string" | "ident" | "kw" | "op" | "eof"
    value: object
    span: SourceSpan

    def describe(self) -> str:
        if self.kind == "eof":
            return "end of input"
        if self.kind == "string":
            return f'string "{self.value}"'
        if self.kind in ("kw", "op"):
            return f"`{self.value}`"
        return f"{self.kind} `{self.value}`"


def tokenize(source: str, file: str = "<string>") -> list[Token]:
    """Split ``source`` into tokens; whitespace and ``#`` comments are dropped.

    The returned list carries no end-of-input marker; the parser adds one.
    """
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)

    def span(l0: int, c0: int, l1: int, c1: int) -> SourceSpan:
        return SourceSpan(file, l0, c0, l1, c1)

    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        if ch.isascii() and (ch.isalpha() or ch == "_"):
            m = _IDENT.match(source, i)
            word = m.group()
            kind = "kw" if word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, span(line, col, line, col + len(word) - 1)))
            i += len(word)
            col += len(word)
            continue
        if ch.isascii() and ch.isdigit():
            m = _INT.match(source, i)
            text = m.group()
            tokens.append(Token("int", int(text), span(line, col, line, col + len(text) - 1)))
            i += len(text)
            col += len(text)
            continue
        if ch == '"':
            start_col = col
            i += 1
            col += 1
            chars = []
            while True:
                if i >= n or source[i] == "\n":
                    raise LexError("unterminated string literal", span(line, start_col, line, start_col))
                c = source[i]
                if c == '"':
                    break
                if c == "\\":
                    nxt = source[i + 1] if i + 1 < n else ""
                    if nxt not in _ESCAPES:
                        raise LexError(f"unknown escape \\{nxt}", span(line, col, line, col))
                    chars.append(_ESCAPES[nxt])
                    i += 2
                    col += 2
                    continue
                chars.append(c)
                i += 1
                col += 1
            tokens.append(Token("string", "".join(chars), span(line, start_col, line, col)))
            i += 1
            col += 1
            continue
        for op in OPERATORS:
            if source.startswith(op, i):
                tokens.append(Token("op", op, span(line, col, line, col + len(op) - 1)))
                i += len(op)
                col += len(op)
                break
        else:
            raise LexError(f"unexpected character {ch!r}", span(line, col, line, col))
    return tokens
