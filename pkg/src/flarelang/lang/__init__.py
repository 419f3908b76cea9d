"""FlareLang: lexer, parser, unparser and name resolution."""

from dataclasses import fields

from . import ast
from .lexer import Token, tokenize
from .parser import parse
from .resolve import Symbol, SymbolTable, resolve_names, segment_key
from .span import SourceSpan
from .unparse import unparse

__all__ = [
    "SourceSpan", "Symbol", "SymbolTable", "Token", "ast", "ast_to_json", "parse",
    "resolve_names", "segment_key", "tokenize", "unparse",
]

_SKIP = {"span", "file", "token_spans"}


def ast_to_json(node):
    """Plain-data dump of a syntax tree: ``kind``, children, and ``span`` objects."""
    if isinstance(node, list):
        return [ast_to_json(n) for n in node]
    if not hasattr(node, "kind"):
        return node
    out = {"kind": node.kind}
    for f in fields(node):
        if f.name in _SKIP:
            continue
        value = getattr(node, f.name)
        if isinstance(value, SourceSpan):
            out[f.name] = value.to_json()
        else:
            out[f.name] = ast_to_json(value)
    out["span"] = node.span.to_json()
    return out
