"""Redundant global-load elimination.

A sequentially sound pass in the style of an ordinary compiler: it assumes
no one else writes a global between two reads in the same body unless that
body writes it itself or passes a scheduling point (call, post, req,
await). Under concurrency the assumption is false, which is the point.

Two rewrites are applied to every function and method body:

* within a straight-line run of simple statements, two or more reads of
  ``@g`` with no write to ``@g`` between them are served from one local
  cached just before the first of them;
* a ``while`` whose condition reads ``@g``, and whose body neither writes
  ``@g`` nor contains a scheduling point, reads ``@g`` once before the
  loop instead of on every test.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Union

from oek.ir import ast as A
from oek.ir.validate import ValidatedProgram, declared_locals, validate

SIMPLE = (A.VarDecl, A.Assign, A.Print, A.Return)


@dataclass(frozen=True)
class OptimizeResult:
    program: ValidatedProgram
    eliminated: int
    hoisted: int

    @property
    def changed(self) -> bool:
        return bool(self.eliminated or self.hoisted)


def map_expr(e: A.Expr, fn: Callable[[A.Expr], A.Expr]) -> A.Expr:
    """Bottom-up rewrite of an expression tree."""
    if isinstance(e, A.Binary):
        e = replace(e, left=map_expr(e.left, fn), right=map_expr(e.right, fn))
    elif isinstance(e, A.Unary):
        e = replace(e, operand=map_expr(e.operand, fn))
    return fn(e)


def global_reads(e: A.Expr) -> list[str]:
    return [x.name for x in A.walk_expr(e) if isinstance(x, A.GlobalRead)]


def _subst(e: A.Expr, name: str, local: str) -> A.Expr:
    def fn(x):
        if isinstance(x, A.GlobalRead) and x.name == name:
            return A.Var(local, x.line, x.col)
        return x

    return map_expr(e, fn)


def _subst_stmt(s: A.Stmt, name: str, local: str) -> A.Stmt:
    if isinstance(s, (A.VarDecl, A.Assign, A.Print)):
        return replace(s, expr=_subst(s.expr, name, local))
    if isinstance(s, A.Return) and s.expr is not None:
        return replace(s, expr=_subst(s.expr, name, local))
    return s


def _writes_global(s: A.Stmt, name: str) -> bool:
    return isinstance(s, A.Assign) and s.kind == A.GLOBAL and s.name == name


class _BodyPass:
    def __init__(self, node: Union[A.FuncDef, A.MethodDef]):
        self.node = node
        self.taken = set(declared_locals(node))
        self.eliminated = 0
        self.hoisted = 0

    def fresh(self, g: str) -> str:
        n = 1
        while f"__rle_{g}_{n}" in self.taken:
            n += 1
        name = f"__rle_{g}_{n}"
        self.taken.add(name)
        return name

    def block(self, stmts: tuple[A.Stmt, ...]) -> tuple[A.Stmt, ...]:
        out: list[A.Stmt] = []
        run: list[A.Stmt] = []
        for s in stmts:
            if isinstance(s, SIMPLE):
                run.append(s)
                continue
            out.extend(self.straight(run))
            run = []
            if isinstance(s, A.If):
                s = replace(s, then=self.block(s.then), orelse=None if s.orelse is None else self.block(s.orelse))
            elif isinstance(s, A.While):
                s = replace(s, body=self.block(s.body))
                out.extend(self.hoist(s))
                continue
            out.append(s)
        out.extend(self.straight(run))
        return tuple(out)

    def straight(self, run: list[A.Stmt]) -> list[A.Stmt]:
        """Cache repeated reads inside a run of simple statements."""
        if not run:
            return []
        stmts = list(run)
        for g in sorted({g for s in stmts for e in A.stmt_exprs(s) for g in global_reads(e)}):
            # groups of statement indices between writes to g
            groups: list[list[tuple[int, int]]] = [[]]
            for i, s in enumerate(stmts):
                n = sum(global_reads(e).count(g) for e in A.stmt_exprs(s))
                if n:
                    groups[-1].append((i, n))
                if _writes_global(s, g):
                    groups.append([])
            inserts: dict[int, A.Stmt] = {}
            for group in groups:
                total = sum(n for _, n in group)
                if total < 2:
                    continue
                local = self.fresh(g)
                first = stmts[group[0][0]]
                inserts[group[0][0]] = A.VarDecl(local, A.GlobalRead(g, first.line, first.col), first.line, first.col)
                for i, _ in group:
                    stmts[i] = _subst_stmt(stmts[i], g, local)
                self.eliminated += total - 1
            if inserts:
                new: list[A.Stmt] = []
                for i, s in enumerate(stmts):
                    if i in inserts:
                        new.append(inserts[i])
                    new.append(s)
                stmts = new
        return stmts

    def hoist(self, loop: A.While) -> list[A.Stmt]:
        body = list(A.walk_stmts(loop.body))
        if any(isinstance(s, A.SCHEDULING_STMTS) for s in body):
            return [loop]
        pre: list[A.Stmt] = []
        cond = loop.cond
        for g in dict.fromkeys(global_reads(cond)):
            if any(_writes_global(s, g) for s in body):
                continue
            local = self.fresh(g)
            pre.append(A.VarDecl(local, A.GlobalRead(g, loop.line, loop.col), loop.line, loop.col))
            cond = _subst(cond, g, local)
            self.hoisted += 1
        return pre + [replace(loop, cond=cond)]


def optimize(program: ValidatedProgram) -> OptimizeResult:
    eliminated = hoisted = 0

    def run(node):
        nonlocal eliminated, hoisted
        p = _BodyPass(node)
        body = p.block(node.body)
        eliminated += p.eliminated
        hoisted += p.hoisted
        return replace(node, body=body)

    src = program.program
    out = replace(
        src,
        functions=tuple(run(f) for f in src.functions),
        object_types=tuple(replace(t, methods=tuple(run(m) for m in t.methods)) for t in src.object_types),
    )
    if not (eliminated or hoisted):
        return OptimizeResult(program, 0, 0)
    return OptimizeResult(validate(out), eliminated, hoisted)


def optimize_rle(program: ValidatedProgram) -> ValidatedProgram:
    return optimize(program).program
