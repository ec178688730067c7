"""Syntax tree for OEK programs.

Nodes are frozen dataclasses with tuple children, so a parsed program is
immutable and can be shared between executors. Source positions are kept
on every node but excluded from equality: two trees are equal when they
have the same structure, wherever their text came from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


def _pos():
    return field(default=0, compare=False, repr=False)


# -- expressions -----------------------------------------------------------


@dataclass(frozen=True)
class IntLit:
    value: int
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Var:
    name: str
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class SelfRef:
    """Bare ``self``; only legal as a request receiver or a value inside methods."""

    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class FieldRead:
    name: str
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class GlobalRead:
    name: str
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class New:
    type_name: str
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Binary:
    op: str
    left: Expr
    right: Expr
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Unary:
    op: str
    operand: Expr
    line: int = _pos()
    col: int = _pos()


Expr = Union[IntLit, BoolLit, Var, SelfRef, FieldRead, GlobalRead, New, Binary, Unary]

# -- statements ------------------------------------------------------------

LOCAL, FIELD, GLOBAL = "local", "field", "global"


@dataclass(frozen=True)
class VarDecl:
    name: str
    expr: Expr
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Assign:
    kind: str  # LOCAL, FIELD or GLOBAL
    name: str
    expr: Expr
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple[Stmt, ...]
    orelse: Optional[tuple[Stmt, ...]] = None
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class While:
    cond: Expr
    body: tuple[Stmt, ...]
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Return:
    expr: Optional[Expr] = None
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Print:
    expr: Expr
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Call:
    target: str
    func: str
    args: tuple[Expr, ...]
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Post:
    target: str
    func: str
    args: tuple[Expr, ...]
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Req:
    target: str
    receiver: Expr
    method: str
    args: tuple[Expr, ...]
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class Await:
    target: str
    handle: str
    line: int = _pos()
    col: int = _pos()


Stmt = Union[VarDecl, Assign, If, While, Return, Print, Call, Post, Req, Await]

# Statements at which control may pass to other code.
SCHEDULING_STMTS = (Call, Post, Req, Await)

# -- top level -------------------------------------------------------------


@dataclass(frozen=True)
class GlobalDecl:
    name: str
    value: int
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class FieldDecl:
    name: str
    value: int
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class FuncDef:
    name: str
    params: tuple[str, ...]
    body: tuple[Stmt, ...]
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class MethodDef:
    name: str
    params: tuple[str, ...]
    body: tuple[Stmt, ...]
    line: int = _pos()
    col: int = _pos()


@dataclass(frozen=True)
class ObjectTypeDef:
    name: str
    fields: tuple[FieldDecl, ...]
    methods: tuple[MethodDef, ...]
    line: int = _pos()
    col: int = _pos()

    def method(self, name: str) -> MethodDef | None:
        for m in self.methods:
            if m.name == name:
                return m
        return None


@dataclass(frozen=True)
class Program:
    globals: tuple[GlobalDecl, ...] = ()
    object_types: tuple[ObjectTypeDef, ...] = ()
    functions: tuple[FuncDef, ...] = ()
    entry: str = "main"


def child_blocks(stmt: Stmt) -> tuple[tuple[Stmt, ...], ...]:
    if isinstance(stmt, If):
        return (stmt.then,) if stmt.orelse is None else (stmt.then, stmt.orelse)
    if isinstance(stmt, While):
        return (stmt.body,)
    return ()


def walk_stmts(body):
    """Yield every statement of ``body``, nested blocks included, in source order."""
    for stmt in body:
        yield stmt
        for block in child_blocks(stmt):
            yield from walk_stmts(block)


def stmt_exprs(stmt: Stmt) -> tuple[Expr, ...]:
    """Expressions a statement evaluates directly, in evaluation order."""
    if isinstance(stmt, (VarDecl, Assign, Print)):
        return (stmt.expr,)
    if isinstance(stmt, (If, While)):
        return (stmt.cond,)
    if isinstance(stmt, Return):
        return () if stmt.expr is None else (stmt.expr,)
    if isinstance(stmt, (Call, Post)):
        return stmt.args
    if isinstance(stmt, Req):
        return (stmt.receiver, *stmt.args)
    return ()


def walk_expr(expr: Expr):
    yield expr
    if isinstance(expr, Binary):
        yield from walk_expr(expr.left)
        yield from walk_expr(expr.right)
    elif isinstance(expr, Unary):
        yield from walk_expr(expr.operand)
