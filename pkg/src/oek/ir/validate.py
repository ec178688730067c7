"""Static checks that turn a parsed Program into a ValidatedProgram."""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Union

from . import ast as A


@dataclass(frozen=True)
class SemanticError:
    message: str
    line: int
    col: int
    name: str = ""

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.message}"


class ValidationError(Exception):
    def __init__(self, errors: list[SemanticError]):
        self.errors = list(errors)
        super().__init__("\n".join(str(e) for e in self.errors))


@dataclass(frozen=True)
class ValidatedProgram:
    """A checked program plus name tables the executors look things up in."""

    program: A.Program
    functions: Mapping[str, A.FuncDef] = field(compare=False, repr=False)
    types: Mapping[str, A.ObjectTypeDef] = field(compare=False, repr=False)

    @property
    def globals(self) -> tuple[A.GlobalDecl, ...]:
        return self.program.globals

    @property
    def entry(self) -> A.FuncDef:
        return self.functions[self.program.entry]


Body = Union[A.FuncDef, A.MethodDef]


def declared_locals(node: Body) -> set[str]:
    """Function-scoped local names: parameters plus every binding statement."""
    names = set(node.params)
    for stmt in A.walk_stmts(node.body):
        if isinstance(stmt, A.VarDecl):
            names.add(stmt.name)
        elif isinstance(stmt, (A.Call, A.Post, A.Req, A.Await)):
            # `x = call/post/req/await ...` binds x if not yet declared
            names.add(stmt.target)
    return names


class _Checker:
    def __init__(self, program: A.Program):
        self.program = program
        self.errors: list[SemanticError] = []
        self.functions = {f.name: f for f in program.functions}
        self.types = {t.name: t for t in program.object_types}
        self.global_names = {g.name for g in program.globals}

    def err(self, message: str, node, name: str = "") -> None:
        self.errors.append(SemanticError(message, node.line, node.col, name))

    def run(self) -> list[SemanticError]:
        p = self.program
        seen: dict[str, str] = {}
        for kind, items in (("global", p.globals), ("object type", p.object_types), ("function", p.functions)):
            for item in items:
                if item.name in seen:
                    self.err(f"duplicate top-level name {item.name} ({kind}, already a {seen[item.name]})", item, item.name)
                else:
                    seen[item.name] = kind
        entry = self.functions.get(p.entry)
        if entry is None:
            self.errors.append(SemanticError(f"missing entry function {p.entry}", 1, 1, p.entry))
        elif entry.params:
            self.err(f"entry function {p.entry} must take no parameters", entry, p.entry)
        for t in p.object_types:
            names: set[str] = set()
            for f in t.fields:
                if f.name in names:
                    self.err(f"duplicate field {f.name} in {t.name}", f, f.name)
                names.add(f.name)
            for m in t.methods:
                if m.name in names:
                    self.err(f"duplicate member {m.name} in {t.name}", m, m.name)
                names.add(m.name)
                self.body(m, t)
        for f in p.functions:
            self.body(f, None)
        return self.errors

    def body(self, node: Body, owner: A.ObjectTypeDef | None) -> None:
        if len(set(node.params)) != len(node.params):
            self.err(f"duplicate parameter in {node.name}", node, node.name)
        scope = declared_locals(node)
        for stmt in A.walk_stmts(node.body):
            self.stmt(stmt, scope, owner)

    def stmt(self, s: A.Stmt, scope: set[str], owner) -> None:
        for e in A.stmt_exprs(s):
            self.expr(e, scope, owner)
        if isinstance(s, A.Assign):
            if s.kind == A.LOCAL and s.name not in scope:
                self.err(f"assignment to undeclared variable {s.name}", s, s.name)
            elif s.kind == A.FIELD:
                self.field(s.name, s, owner)
            elif s.kind == A.GLOBAL and s.name not in self.global_names:
                self.err(f"undefined global @{s.name}", s, s.name)
        elif isinstance(s, (A.Call, A.Post)):
            f = self.functions.get(s.func)
            if f is None:
                self.err(f"undefined function {s.func}", s, s.func)
            elif len(f.params) != len(s.args):
                self.err(
                    f"arity mismatch: {s.func} expects {len(f.params)} argument(s), got {len(s.args)}",
                    s,
                    s.func,
                )
        elif isinstance(s, A.Req):
            if isinstance(s.receiver, A.SelfRef) and owner is not None:
                m = owner.method(s.method)
                if m is None:
                    self.err(f"no method {s.method} on {owner.name}", s, s.method)
                elif len(m.params) != len(s.args):
                    self.err(
                        f"arity mismatch: {owner.name}.{s.method} expects {len(m.params)} argument(s), got {len(s.args)}",
                        s,
                        s.method,
                    )
        elif isinstance(s, A.Await) and s.handle not in scope:
            self.err(f"undefined variable {s.handle}", s, s.handle)

    def field(self, name: str, node, owner) -> None:
        if owner is None:
            self.err(f"self.{name} used outside a method", node, name)
        elif name not in {f.name for f in owner.fields}:
            self.err(f"undefined field {name} on {owner.name}", node, name)

    def expr(self, e: A.Expr, scope: set[str], owner) -> None:
        for sub in A.walk_expr(e):
            if isinstance(sub, A.Var) and sub.name not in scope:
                self.err(f"undefined variable {sub.name}", sub, sub.name)
            elif isinstance(sub, A.FieldRead):
                self.field(sub.name, sub, owner)
            elif isinstance(sub, A.SelfRef) and owner is None:
                self.err("self used outside a method", sub, "self")
            elif isinstance(sub, A.GlobalRead) and sub.name not in self.global_names:
                self.err(f"undefined global @{sub.name}", sub, sub.name)
            elif isinstance(sub, A.New) and sub.type_name not in self.types:
                self.err(f"undefined object type {sub.type_name}", sub, sub.type_name)


def check(program: A.Program) -> list[SemanticError]:
    """All semantic errors of ``program``; empty when it is valid."""
    return _Checker(program).run()


def validate(program: A.Program) -> ValidatedProgram:
    errors = check(program)
    if errors:
        raise ValidationError(errors)
    return ValidatedProgram(
        program,
        MappingProxyType({f.name: f for f in program.functions}),
        MappingProxyType({t.name: t for t in program.object_types}),
    )
