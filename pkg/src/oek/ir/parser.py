"""Recursive-descent parser for OEK source text."""

from __future__ import annotations

import re
from dataclasses import dataclass

from oek.values import INT_MAX

from . import ast as A

KEYWORDS = frozenset(
    "global object field method func var if else while return print "
    "call post req await self new true false".split()
)

# Longest operators first so "<=" wins over "<".
_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<int>[0-9]+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>&&|\|\||==|!=|<=|[{}();,=.@+\-*/<!])
    """,
    re.VERBOSE,
)

# Binary operator precedence, loosest first. All are left-associative.
PRECEDENCE = {
    "||": 1,
    "&&": 2,
    "==": 3,
    "!=": 3,
    "<": 4,
    "<=": 4,
    "+": 5,
    "-": 5,
    "*": 6,
    "/": 6,
}
UNARY_OPS = ("!", "-")


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected=frozenset()):
        self.message = message
        self.line = line
        self.col = col
        self.expected = frozenset(expected)
        super().__init__(f"{line}:{col}: {message}")


@dataclass(frozen=True)
class Token:
    kind: str  # "int", "id", "kw", "op", "eof"
    text: str
    line: int
    col: int

    def describe(self) -> str:
        return "end of input" if self.kind == "eof" else repr(self.text)


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind == "id" and text in KEYWORDS:
            kind = "kw"
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    col = pos - line_start + 1
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.i = 0

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("kw", "op") and t.text == text

    def error(self, expected) -> ParseError:
        t = self.tok
        expected = frozenset(expected)
        shown = ", ".join(sorted(expected))
        return ParseError(f"expected {shown}, found {t.describe()}", t.line, t.col, expected)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error({text})
        t = self.tok
        self.i += 1
        return t

    def ident(self) -> Token:
        t = self.tok
        if t.kind != "id":
            raise self.error({"identifier"})
        self.i += 1
        return t

    def int_lit(self) -> int:
        t = self.tok
        if t.kind != "int":
            raise self.error({"integer"})
        value = int(t.text)
        if value > INT_MAX:
            raise ParseError(f"integer literal {t.text} out of range", t.line, t.col)
        self.i += 1
        return value

    # -- items

    def program(self) -> A.Program:
        globals_, types, funcs = [], [], []
        while self.tok.kind != "eof":
            if self.at("global"):
                globals_.append(self.global_decl())
            elif self.at("object"):
                types.append(self.object_def())
            elif self.at("func"):
                funcs.append(self.func_def())
            else:
                raise self.error({"global", "object", "func"})
        return A.Program(tuple(globals_), tuple(types), tuple(funcs))

    def global_decl(self) -> A.GlobalDecl:
        kw = self.expect("global")
        name = self.ident().text
        self.expect("=")
        value = self.int_lit()
        self.expect(";")
        return A.GlobalDecl(name, value, kw.line, kw.col)

    def object_def(self) -> A.ObjectTypeDef:
        kw = self.expect("object")
        name = self.ident().text
        self.expect("{")
        fields = []
        while self.at("field"):
            fkw = self.expect("field")
            fname = self.ident().text
            self.expect("=")
            value = self.int_lit()
            self.expect(";")
            fields.append(A.FieldDecl(fname, value, fkw.line, fkw.col))
        methods = []
        while self.at("method"):
            mkw = self.expect("method")
            mname = self.ident().text
            params = self.params()
            body = self.block()
            methods.append(A.MethodDef(mname, params, body, mkw.line, mkw.col))
        if not self.at("}"):
            raise self.error({"method", "}"} if methods else {"field", "method", "}"})
        self.expect("}")
        return A.ObjectTypeDef(name, tuple(fields), tuple(methods), kw.line, kw.col)

    def func_def(self) -> A.FuncDef:
        kw = self.expect("func")
        name = self.ident().text
        params = self.params()
        body = self.block()
        return A.FuncDef(name, params, body, kw.line, kw.col)

    def params(self) -> tuple[str, ...]:
        self.expect("(")
        names = []
        if not self.at(")"):
            names.append(self.ident().text)
            while self.at(","):
                self.i += 1
                names.append(self.ident().text)
        self.expect(")")
        return tuple(names)

    def block(self) -> tuple[A.Stmt, ...]:
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error({"}"})
            stmts.append(self.stmt())
        self.expect("}")
        return tuple(stmts)

    # -- statements

    def stmt(self) -> A.Stmt:
        t = self.tok
        if self.at("var"):
            self.i += 1
            name = self.ident().text
            self.expect("=")
            expr = self.expr()
            self.expect(";")
            return A.VarDecl(name, expr, t.line, t.col)
        if self.at("if"):
            self.i += 1
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.block()
            orelse = None
            if self.at("else"):
                self.i += 1
                orelse = self.block()
            return A.If(cond, then, orelse, t.line, t.col)
        if self.at("while"):
            self.i += 1
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            return A.While(cond, self.block(), t.line, t.col)
        if self.at("return"):
            self.i += 1
            expr = None if self.at(";") else self.expr()
            self.expect(";")
            return A.Return(expr, t.line, t.col)
        if self.at("print"):
            self.i += 1
            expr = self.expr()
            self.expect(";")
            return A.Print(expr, t.line, t.col)
        if self.at("self"):
            self.i += 1
            self.expect(".")
            name = self.ident().text
            self.expect("=")
            expr = self.expr()
            self.expect(";")
            return A.Assign(A.FIELD, name, expr, t.line, t.col)
        if self.at("@"):
            self.i += 1
            name = self.ident().text
            self.expect("=")
            expr = self.expr()
            self.expect(";")
            return A.Assign(A.GLOBAL, name, expr, t.line, t.col)
        if t.kind == "id":
            self.i += 1
            self.expect("=")
            return self.assignment_rhs(t)
        raise self.error({"var", "if", "while", "return", "print", "self", "@", "identifier"})

    def assignment_rhs(self, target: Token) -> A.Stmt:
        name, line, col = target.text, target.line, target.col
        if self.at("call") or self.at("post"):
            kind = self.tok.text
            self.i += 1
            func = self.ident().text
            args = self.args()
            self.expect(";")
            node = A.Call if kind == "call" else A.Post
            return node(name, func, args, line, col)
        if self.at("req"):
            self.i += 1
            receiver, method = self.req_receiver()
            args = self.args()
            self.expect(";")
            return A.Req(name, receiver, method, args, line, col)
        if self.at("await"):
            self.i += 1
            handle = self.ident().text
            self.expect(";")
            return A.Await(name, handle, line, col)
        expr = self.expr()
        self.expect(";")
        return A.Assign(A.LOCAL, name, expr, line, col)

    def req_receiver(self) -> tuple[A.Expr, str]:
        t = self.tok
        if self.at("self") and self.peek().text == "." and self.peek(3).text == "(":
            # `req self.m(...)`: the receiver is the current object.
            self.i += 2
            return A.SelfRef(t.line, t.col), self.ident().text
        receiver = self.expr()
        self.expect(".")
        return receiver, self.ident().text

    def args(self) -> tuple[A.Expr, ...]:
        self.expect("(")
        args = []
        if not self.at(")"):
            args.append(self.expr())
            while self.at(","):
                self.i += 1
                args.append(self.expr())
        self.expect(")")
        return tuple(args)

    # -- expressions

    def expr(self, min_prec: int = 1) -> A.Expr:
        left = self.unary()
        while True:
            t = self.tok
            prec = PRECEDENCE.get(t.text) if t.kind == "op" else None
            if prec is None or prec < min_prec:
                return left
            self.i += 1
            right = self.expr(prec + 1)
            left = A.Binary(t.text, left, right, t.line, t.col)

    def unary(self) -> A.Expr:
        t = self.tok
        if t.kind == "op" and t.text in UNARY_OPS:
            self.i += 1
            return A.Unary(t.text, self.unary(), t.line, t.col)
        return self.primary()

    def primary(self) -> A.Expr:
        t = self.tok
        if t.kind == "int":
            return A.IntLit(self.int_lit(), t.line, t.col)
        if self.at("true") or self.at("false"):
            self.i += 1
            return A.BoolLit(t.text == "true", t.line, t.col)
        if t.kind == "id":
            self.i += 1
            return A.Var(t.text, t.line, t.col)
        if self.at("self"):
            self.i += 1
            self.expect(".")
            return A.FieldRead(self.ident().text, t.line, t.col)
        if self.at("@"):
            self.i += 1
            return A.GlobalRead(self.ident().text, t.line, t.col)
        if self.at("new"):
            self.i += 1
            name = self.ident().text
            self.expect("(")
            self.expect(")")
            return A.New(name, t.line, t.col)
        if self.at("("):
            self.i += 1
            inner = self.expr()
            self.expect(")")
            return inner
        raise self.error({"expression"})


def parse(source: str) -> A.Program:
    """Parse OEK source text into a syntax tree; raises ParseError."""
    return _Parser(source).program()
