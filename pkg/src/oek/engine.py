"""Statement-at-a-time execution core shared by the frame-based executors.

A *carrier* is anything with a ``frames`` list: the stack machine's single
thread of control, or a scheduler task. ``Machine.step`` executes exactly
one statement on a carrier's top frame. Subclasses decide what ``post``,
``req`` and a blocking ``await`` do by overriding the ``on_*`` hooks.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from oek.ir import ast as A
from oek.ir.validate import ValidatedProgram
from oek.outcome import Location, OekRuntimeError, StepLimitHit
from oek.values import (
    INT_MAX,
    INT_MIN,
    UNIT,
    HandleRef,
    ObjRef,
    Value,
    is_bool,
    is_int,
    kind_of,
    values_equal,
)

# Frame return actions.
RET_ASSIGN = "assign"  # store the value into a caller local
RET_RESOLVE = "resolve"  # resolve a reply handle (posted task or request)
RET_ROOT = "root"  # the entry function returned


@dataclass(eq=False)
class Frame:
    name: str
    locals: dict[str, Value]
    blocks: list  # stack of [stmts, index]; see Machine._normalize
    ret: tuple
    task: int = 0
    obj: Optional[ObjRef] = None


@dataclass(eq=False)
class HandleState:
    ref: HandleRef
    label: str
    resolved: bool = False
    value: Value = UNIT
    waiters: list = field(default_factory=list)


@dataclass(eq=False)
class ObjectInstance:
    ref: ObjRef
    fields: dict[str, Value]
    pending: deque = field(default_factory=deque)
    active: list = field(default_factory=list)
    holder: object = None
    next_index: int = 0


def check_int(v: Value, loc: Location) -> int:
    if v < INT_MIN or v > INT_MAX:
        raise OekRuntimeError("integer overflow", loc)
    return v


def _need(v: Value, pred, want: str, op: str, loc: Location) -> None:
    if not pred(v):
        raise OekRuntimeError(f"type mismatch: {op} expects {want}, got {kind_of(v)}", loc)


def truncdiv(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


class Machine:
    """Stores and expression evaluation plus single-statement stepping."""

    def __init__(self, program: ValidatedProgram, step_limit: int):
        self.program = program
        self.step_limit = step_limit
        self.globals: dict[str, Value] = {g.name: g.value for g in program.globals}
        self.objects: dict[int, ObjectInstance] = {}
        self.handles: dict[int, HandleState] = {}
        self.prints: list[Value] = []
        self.steps = 0
        self._next_obj = 1
        self._next_handle = 1

    # -- hooks ---------------------------------------------------------

    def emit(self, kind: str, task: int, obj=None, loc=None, name=None, value=None) -> None:
        """Trace hook; the untraced machines ignore events."""

    def on_post(self, carrier, frame: Frame, func: A.FuncDef, args, handle: HandleRef, loc) -> None:
        raise NotImplementedError

    def on_req(self, carrier, frame: Frame, obj: ObjectInstance, method: A.MethodDef, args, handle, loc) -> None:
        raise NotImplementedError

    def on_block(self, carrier, frame: Frame, handle: HandleState, loc) -> bool:
        """The carrier hit ``await`` on an unresolved handle. Return True to
        retry the await immediately (the hook resolved things), False if the
        carrier is now blocked."""
        raise NotImplementedError

    def on_return(self, carrier, frame: Frame, value: Value) -> None:
        """A frame with a non-assign return action finished."""
        raise NotImplementedError

    def tick(self) -> None:
        if self.steps >= self.step_limit:
            raise StepLimitHit()
        self.steps += 1

    # -- allocation ----------------------------------------------------

    def new_handle(self, label: str) -> HandleState:
        hs = HandleState(HandleRef(self._next_handle), label)
        self._next_handle += 1
        self.handles[hs.ref.id] = hs
        return hs

    def new_object(self, type_name: str, loc) -> ObjRef:
        t = self.program.types.get(type_name)
        if t is None:
            raise OekRuntimeError(f"unknown object type {type_name}", loc)
        ref = ObjRef(self._next_obj, type_name)
        self._next_obj += 1
        self.objects[ref.id] = ObjectInstance(ref, {f.name: f.value for f in t.fields})
        return ref

    def resolve_handle(self, hs: HandleState, value: Value) -> list:
        assert not hs.resolved, f"double resolve of {hs.ref}"
        hs.resolved = True
        hs.value = value
        waiters, hs.waiters = hs.waiters, []
        return waiters

    # -- frames --------------------------------------------------------

    def make_frame(self, node, args, ret: tuple, task: int, obj: Optional[ObjRef]) -> Frame:
        name = node.name if obj is None else f"{obj.type}.{node.name}"
        return Frame(name, dict(zip(node.params, args)), [[node.body, 0]], ret, task, obj)

    def lookup_request(self, receiver: Value, method: str, nargs: int, loc) -> tuple[ObjectInstance, A.MethodDef]:
        if not isinstance(receiver, ObjRef):
            raise OekRuntimeError(f"type mismatch: req expects Object, got {kind_of(receiver)}", loc)
        obj = self.objects[receiver.id]
        m = self.program.types[receiver.type].method(method)
        if m is None:
            raise OekRuntimeError(f"no method {method} on {receiver.type}", loc)
        if len(m.params) != nargs:
            raise OekRuntimeError(
                f"arity mismatch: {receiver.type}.{method} expects {len(m.params)} argument(s), got {nargs}", loc
            )
        return obj, m

    # -- expressions ---------------------------------------------------

    def local(self, frame: Frame, name: str, loc) -> Value:
        try:
            return frame.locals[name]
        except KeyError:
            raise OekRuntimeError(f"undefined variable {name}", loc) from None

    def eval(self, e: A.Expr, frame: Frame, loc: Location) -> Value:
        if isinstance(e, (A.IntLit, A.BoolLit)):
            return e.value
        if isinstance(e, A.Var):
            return self.local(frame, e.name, loc)
        if isinstance(e, A.GlobalRead):
            v = self.globals[e.name]
            self.emit("read-global", frame.task, loc=loc, name=e.name, value=v)
            return v
        if isinstance(e, A.FieldRead):
            v = self.objects[frame.obj.id].fields[e.name]
            self.emit("read-field", frame.task, obj=frame.obj.id, loc=loc, name=e.name, value=v)
            return v
        if isinstance(e, A.SelfRef):
            return frame.obj
        if isinstance(e, A.New):
            return self.new_object(e.type_name, loc)
        if isinstance(e, A.Unary):
            v = self.eval(e.operand, frame, loc)
            if e.op == "!":
                _need(v, is_bool, "Bool", "!", loc)
                return not v
            _need(v, is_int, "Int", "unary -", loc)
            return check_int(-v, loc)
        if isinstance(e, A.Binary):
            return self._binary(e, frame, loc)
        raise TypeError(f"not an expression: {e!r}")

    def _binary(self, e: A.Binary, frame: Frame, loc: Location) -> Value:
        op = e.op
        a = self.eval(e.left, frame, loc)
        if op in ("&&", "||"):
            _need(a, is_bool, "Bool", op, loc)
            if a == (op == "||"):
                return a
            b = self.eval(e.right, frame, loc)
            _need(b, is_bool, "Bool", op, loc)
            return b
        b = self.eval(e.right, frame, loc)
        if op == "==":
            return values_equal(a, b)
        if op == "!=":
            return not values_equal(a, b)
        _need(a, is_int, "Int", op, loc)
        _need(b, is_int, "Int", op, loc)
        if op == "+":
            return check_int(a + b, loc)
        if op == "-":
            return check_int(a - b, loc)
        if op == "*":
            return check_int(a * b, loc)
        if op == "/":
            if b == 0:
                raise OekRuntimeError("division by zero", loc)
            return check_int(truncdiv(a, b), loc)
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        raise TypeError(f"unknown operator {op}")

    def cond(self, e: A.Expr, frame: Frame, loc: Location) -> bool:
        v = self.eval(e, frame, loc)
        if not is_bool(v):
            raise OekRuntimeError(f"condition must be Bool, got {kind_of(v)}", loc)
        return v

    def args(self, exprs, frame: Frame, loc) -> list[Value]:
        return [self.eval(a, frame, loc) for a in exprs]

    # -- statements ----------------------------------------------------

    def current_stmt(self, carrier) -> tuple[Frame, A.Stmt]:
        frame = carrier.frames[-1]
        stmts, idx = frame.blocks[-1]
        return frame, stmts[idx]

    def step(self, carrier) -> bool:
        """Execute one statement. Returns False when the carrier blocked
        instead (no statement executed, no step counted)."""
        frame, stmt = self.current_stmt(carrier)
        loc = Location(frame.name, stmt.line, stmt.col)
        block = frame.blocks[-1]

        if isinstance(stmt, A.Await):
            v = self.local(frame, stmt.handle, loc)
            if isinstance(v, HandleRef):
                hs = self.handles[v.id]
                while not hs.resolved:
                    if not self.on_block(carrier, frame, hs, loc):
                        return False
            self.tick()
            if not isinstance(v, HandleRef):
                raise OekRuntimeError(f"type mismatch: await expects Handle, got {kind_of(v)}", loc)
            block[1] += 1
            frame.locals[stmt.target] = hs.value
            self.emit("await-resume", frame.task, obj=_oid(frame), loc=loc, name=hs.label, value=v.id)
            self.normalize(carrier)
            return True

        self.tick()
        if isinstance(stmt, (A.VarDecl, A.Assign)):
            v = self.eval(stmt.expr, frame, loc)
            block[1] += 1
            kind = A.LOCAL if isinstance(stmt, A.VarDecl) else stmt.kind
            if kind == A.LOCAL:
                frame.locals[stmt.name] = v
            elif kind == A.GLOBAL:
                self.globals[stmt.name] = v
                self.emit("write-global", frame.task, loc=loc, name=stmt.name, value=v)
            else:
                self.objects[frame.obj.id].fields[stmt.name] = v
                self.emit("write-field", frame.task, obj=frame.obj.id, loc=loc, name=stmt.name, value=v)
        elif isinstance(stmt, A.If):
            c = self.cond(stmt.cond, frame, loc)
            block[1] += 1
            if c:
                frame.blocks.append([stmt.then, 0])
            elif stmt.orelse is not None:
                frame.blocks.append([stmt.orelse, 0])
        elif isinstance(stmt, A.While):
            # the index stays on the loop so the condition is re-evaluated
            # once the body block is exhausted
            if self.cond(stmt.cond, frame, loc):
                frame.blocks.append([stmt.body, 0])
            else:
                block[1] += 1
        elif isinstance(stmt, A.Print):
            v = self.eval(stmt.expr, frame, loc)
            block[1] += 1
            self.prints.append(v)
            self.emit("print", frame.task, obj=_oid(frame), loc=loc, value=v)
        elif isinstance(stmt, A.Return):
            v = UNIT if stmt.expr is None else self.eval(stmt.expr, frame, loc)
            self.pop_frame(carrier, v)
        elif isinstance(stmt, A.Call):
            args = self.args(stmt.args, frame, loc)
            block[1] += 1
            callee = self.program.functions[stmt.func]
            carrier.frames.append(self.make_frame(callee, args, (RET_ASSIGN, stmt.target), frame.task, None))
        elif isinstance(stmt, A.Post):
            args = self.args(stmt.args, frame, loc)
            block[1] += 1
            func = self.program.functions[stmt.func]
            hs = self.new_handle(stmt.func)
            frame.locals[stmt.target] = hs.ref
            self.on_post(carrier, frame, func, args, hs, loc)
        elif isinstance(stmt, A.Req):
            receiver = self.eval(stmt.receiver, frame, loc)
            args = self.args(stmt.args, frame, loc)
            obj, method = self.lookup_request(receiver, stmt.method, len(args), loc)
            block[1] += 1
            hs = self.new_handle(f"{obj.ref}.{method.name}")
            frame.locals[stmt.target] = hs.ref
            self.on_req(carrier, frame, obj, method, args, hs, loc)
        else:
            raise TypeError(f"not a statement: {stmt!r}")
        self.normalize(carrier)
        return True

    def pop_frame(self, carrier, value: Value) -> None:
        frame = carrier.frames.pop()
        if frame.ret[0] == RET_ASSIGN:
            carrier.frames[-1].locals[frame.ret[1]] = value
        else:
            self.on_return(carrier, frame, value)

    def normalize(self, carrier) -> None:
        """Drop exhausted blocks; a frame with no blocks left returns Unit."""
        frames = carrier.frames
        while frames:
            blocks = frames[-1].blocks
            while blocks and blocks[-1][1] >= len(blocks[-1][0]):
                blocks.pop()
            if blocks:
                return
            self.pop_frame(carrier, UNIT)


def _oid(frame: Frame) -> Optional[int]:
    return None if frame.obj is None else frame.obj.id
