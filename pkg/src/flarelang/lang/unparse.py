from __future__ import annotations

from . import ast as A

INDENT = "    "


def quote(text: str) -> str:
    body = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{body}"'


def unparse_expr(e) -> str:
    if isinstance(e, A.IntLit):
        return str(e.value)
    if isinstance(e, A.StrLit):
        return quote(e.value)
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.NameRef):
        return e.name
    if isinstance(e, A.HwRead):
        return f"hw.read({quote(e.device)})"
    if isinstance(e, A.CallExpr):
        return f"{e.name}({', '.join(unparse_expr(a) for a in e.args)})"
    if isinstance(e, A.Binary):
        return f"({unparse_expr(e.lhs)} {e.op} {unparse_expr(e.rhs)})"
    if isinstance(e, A.Unary):
        sep = " " if e.op == "not" else ""
        return f"({e.op}{sep}{unparse_expr(e.operand)})"
    raise TypeError(f"not an expression: {e!r}")


def _block(block: A.Block, depth: int) -> list[str]:
    lines = ["{"]
    for s in block.stmts:
        lines.extend(_stmt(s, depth + 1))
    lines.append(INDENT * depth + "}")
    return lines


def _attach(head: str, block: A.Block, depth: int) -> list[str]:
    body = _block(block, depth)
    return [INDENT * depth + head + " " + body[0]] + body[1:]


def _stmt(s, depth: int) -> list[str]:
    pad = INDENT * depth
    if isinstance(s, A.VarDecl):
        return [f"{pad}var {s.name} = {unparse_expr(s.value)};"]
    if isinstance(s, A.GlobalDecl):
        return [f"{pad}global {s.name} = {unparse_expr(s.value)};"]
    if isinstance(s, A.Assign):
        return [f"{pad}{s.name} = {unparse_expr(s.value)};"]
    if isinstance(s, A.If):
        lines = _attach(f"if {unparse_expr(s.cond)}", s.then, depth)
        if s.orelse is not None:
            rest = _block(s.orelse, depth)
            lines[-1] += " else " + rest[0]
            lines.extend(rest[1:])
        return lines
    if isinstance(s, A.While):
        return _attach(f"while {unparse_expr(s.cond)}", s.body, depth)
    if isinstance(s, A.Repeat):
        return _attach(f"repeat {unparse_expr(s.count)}", s.body, depth)
    if isinstance(s, A.After):
        return _attach(f"after {unparse_expr(s.delay)}", s.body, depth)
    if isinstance(s, A.Print):
        return [f"{pad}print({unparse_expr(s.value)});"]
    if isinstance(s, A.Emit):
        args = f"({', '.join(unparse_expr(a) for a in s.args)})" if s.args else ""
        return [f"{pad}emit {s.event}{args};"]
    if isinstance(s, A.Return):
        return [f"{pad}return;" if s.value is None else f"{pad}return {unparse_expr(s.value)};"]
    if isinstance(s, A.CallStmt):
        return [f"{pad}{s.name}({', '.join(unparse_expr(a) for a in s.args)});"]
    if isinstance(s, A.HwWrite):
        return [f"{pad}hw.write({quote(s.device)}, {unparse_expr(s.value)});"]
    raise TypeError(f"not a statement: {s!r}")


def unparse(program: A.Program) -> str:
    """Render ``program`` as canonical FlareLang source.

    Binary and unary expressions are fully parenthesised and ``else if``
    chains are rendered as nested blocks; neither changes the tree shape.
    """
    lines: list[str] = []
    for item in program.items:
        if isinstance(item, A.FuncDef):
            params = ", ".join(p.name for p in item.params)
            lines.extend(_attach(f"func {item.name}({params})", item.body, 0))
        elif isinstance(item, A.Handler):
            params = f"({', '.join(p.name for p in item.params)})" if item.params else ""
            lines.extend(_attach(f"when {item.event}{params}", item.body, 0))
        else:
            lines.extend(_stmt(item, 0))
    return "\n".join(lines) + ("\n" if lines else "")
