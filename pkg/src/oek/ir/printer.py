"""Canonical text form of a program.

Layout: two-space indentation, one statement per line, items separated by a
blank line (consecutive globals are kept together). Parentheses are emitted
only where precedence or left-associativity require them.
"""

from __future__ import annotations

from . import ast as A
from .parser import PRECEDENCE

INDENT = "  "
_ATOMIC = (A.IntLit, A.BoolLit, A.Var, A.FieldRead, A.GlobalRead, A.New)


def format_expr(expr: A.Expr) -> str:
    if isinstance(expr, A.IntLit):
        return str(expr.value)
    if isinstance(expr, A.BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, A.Var):
        return expr.name
    if isinstance(expr, A.SelfRef):
        return "self"
    if isinstance(expr, A.FieldRead):
        return f"self.{expr.name}"
    if isinstance(expr, A.GlobalRead):
        return f"@{expr.name}"
    if isinstance(expr, A.New):
        return f"new {expr.type_name}()"
    if isinstance(expr, A.Unary):
        inner = format_expr(expr.operand)
        if isinstance(expr.operand, A.Binary):
            inner = f"({inner})"
        elif isinstance(expr.operand, A.Unary) or (
            # keep "- -1" from reading as a different token stream
            expr.op == "-" and inner.startswith("-")
        ):
            inner = f"({inner})"
        return f"{expr.op}{inner}"
    if isinstance(expr, A.Binary):
        prec = PRECEDENCE[expr.op]
        left = format_expr(expr.left)
        right = format_expr(expr.right)
        if isinstance(expr.left, A.Binary) and PRECEDENCE[expr.left.op] < prec:
            left = f"({left})"
        if isinstance(expr.right, A.Binary) and PRECEDENCE[expr.right.op] <= prec:
            right = f"({right})"
        return f"{left} {expr.op} {right}"
    raise TypeError(f"not an expression: {expr!r}")


def _args(args) -> str:
    return ", ".join(format_expr(a) for a in args)


def _receiver(expr: A.Expr) -> str:
    text = format_expr(expr)
    if isinstance(expr, (A.SelfRef, A.Var, A.GlobalRead, A.New)):
        return text
    return f"({text})"


def format_block(body, depth: int) -> str:
    pad = INDENT * depth
    lines = ["{\n"]
    for stmt in body:
        lines.append(format_stmt(stmt, depth + 1))
    lines.append(pad + "}")
    return "".join(lines)


def format_stmt(stmt: A.Stmt, depth: int) -> str:
    pad = INDENT * depth
    if isinstance(stmt, A.VarDecl):
        return f"{pad}var {stmt.name} = {format_expr(stmt.expr)};\n"
    if isinstance(stmt, A.Assign):
        prefix = {A.LOCAL: "", A.FIELD: "self.", A.GLOBAL: "@"}[stmt.kind]
        return f"{pad}{prefix}{stmt.name} = {format_expr(stmt.expr)};\n"
    if isinstance(stmt, A.If):
        text = f"{pad}if ({format_expr(stmt.cond)}) {format_block(stmt.then, depth)}"
        if stmt.orelse is not None:
            text += f" else {format_block(stmt.orelse, depth)}"
        return text + "\n"
    if isinstance(stmt, A.While):
        return f"{pad}while ({format_expr(stmt.cond)}) {format_block(stmt.body, depth)}\n"
    if isinstance(stmt, A.Return):
        if stmt.expr is None:
            return f"{pad}return;\n"
        return f"{pad}return {format_expr(stmt.expr)};\n"
    if isinstance(stmt, A.Print):
        return f"{pad}print {format_expr(stmt.expr)};\n"
    if isinstance(stmt, A.Call):
        return f"{pad}{stmt.target} = call {stmt.func}({_args(stmt.args)});\n"
    if isinstance(stmt, A.Post):
        return f"{pad}{stmt.target} = post {stmt.func}({_args(stmt.args)});\n"
    if isinstance(stmt, A.Req):
        recv = _receiver(stmt.receiver)
        return f"{pad}{stmt.target} = req {recv}.{stmt.method}({_args(stmt.args)});\n"
    if isinstance(stmt, A.Await):
        return f"{pad}{stmt.target} = await {stmt.handle};\n"
    raise TypeError(f"not a statement: {stmt!r}")


def _callable(kw: str, node, depth: int) -> str:
    pad = INDENT * depth
    return f"{pad}{kw} {node.name}({', '.join(node.params)}) {format_block(node.body, depth)}\n"


def pretty_print(program) -> str:
    """Render a Program (or ValidatedProgram) as canonical OEK text."""
    program = getattr(program, "program", program)
    chunks = []
    if program.globals:
        chunks.append("".join(f"global {g.name} = {g.value};\n" for g in program.globals))
    for t in program.object_types:
        body = [f"object {t.name} {{\n"]
        body += [f"{INDENT}field {f.name} = {f.value};\n" for f in t.fields]
        body += [_callable("method", m, 1) for m in t.methods]
        body.append("}\n")
        chunks.append("".join(body))
    for f in program.functions:
        chunks.append(_callable("func", f, 0))
    return "\n".join(chunks)
