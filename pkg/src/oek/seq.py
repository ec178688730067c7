"""Sequential execution models.

``run_stack`` drives an explicit frame stack one statement at a time.
``run_inline`` is the abstract-call model: calls are Python recursion and
no frame stack is reified. Under both, ``post`` and ``req`` run the callee
to completion on the spot and hand back an already-resolved handle.
"""

from __future__ import annotations

from oek.engine import RET_RESOLVE, RET_ROOT, Frame, HandleState, Machine
from oek.ir import ast as A
from oek.ir.validate import ValidatedProgram
from oek.outcome import (
    COMPLETED,
    DEADLOCK,
    DEFAULT_STEP_LIMIT,
    RUNTIME_ERROR,
    STEP_LIMIT,
    Location,
    OekRuntimeError,
    Outcome,
    Status,
    StepLimitHit,
)
from oek.values import UNIT, HandleRef, Value, kind_of

# run_inline nests several Python frames per kernel call; this keeps deep
# kernel recursion clear of Python's own recursion limit.
MAX_CALL_DEPTH = 150


class MachineHalted(Exception):
    pass


class _SequentialDeadlock(Exception):
    def __init__(self, frame: Frame, hs: HandleState):
        self.status = Status(
            DEADLOCK,
            blocked=(f"{frame.name} awaiting {hs.label}[h{hs.ref.id}]",),
        )


def snapshot(machine: Machine, status: Status) -> Outcome:
    return Outcome(
        status=status,
        prints=tuple(machine.prints),
        globals_final=dict(machine.globals),
        objects_final={o.ref: dict(o.fields) for o in machine.objects.values()},
        steps=machine.steps,
    )


class StackMachine(Machine):
    """Explicit frame stack; exactly one active frame (the top)."""

    def __init__(self, program: ValidatedProgram, step_limit: int = DEFAULT_STEP_LIMIT):
        super().__init__(program, step_limit)
        self.frames: list[Frame] = []
        self.status: Status | None = None
        self.frames.append(self.make_frame(program.entry, [], (RET_ROOT,), 0, None))
        self.normalize(self)

    @property
    def halted(self) -> bool:
        return self.status is not None

    def on_post(self, carrier, frame, func, args, handle, loc):
        self.frames.append(self.make_frame(func, args, (RET_RESOLVE, handle), frame.task, None))

    def on_req(self, carrier, frame, obj, method, args, handle, loc):
        self.frames.append(self.make_frame(method, args, (RET_RESOLVE, handle), frame.task, obj.ref))

    def on_block(self, carrier, frame, hs, loc):
        raise _SequentialDeadlock(frame, hs)

    def on_return(self, carrier, frame, value):
        if frame.ret[0] == RET_RESOLVE:
            self.resolve_handle(frame.ret[1], value)
        elif not self.frames:
            self.status = Status(COMPLETED)

    def outcome(self) -> Outcome:
        if self.status is None:
            raise MachineHalted("machine has not halted")
        return snapshot(self, self.status)


def step_stack(machine: StackMachine) -> StackMachine:
    """Execute exactly one statement of ``machine``; errors halt it."""
    if machine.halted:
        raise MachineHalted("step on a halted machine")
    try:
        machine.step(machine)
    except OekRuntimeError as e:
        machine.status = Status(RUNTIME_ERROR, e.message, e.location)
    except StepLimitHit:
        machine.status = Status(STEP_LIMIT)
    except _SequentialDeadlock as d:
        machine.status = d.status
    return machine


def run_stack(program: ValidatedProgram, step_limit: int = DEFAULT_STEP_LIMIT) -> Outcome:
    machine = StackMachine(program, step_limit)
    while not machine.halted:
        step_stack(machine)
    return machine.outcome()


class _Return(Exception):
    def __init__(self, value: Value):
        self.value = value


class InlineInterpreter(Machine):
    """Recursive statement interpreter; the host call stack is the frame stack."""

    def invoke(self, node, args, obj, depth: int, site: Location | None) -> Value:
        if depth > MAX_CALL_DEPTH:
            raise OekRuntimeError("recursion depth exceeded", site)
        frame = self.make_frame(node, args, (), 0, obj)
        try:
            self.exec_block(node.body, frame, depth)
        except _Return as r:
            return r.value
        return UNIT

    def exec_block(self, stmts, frame: Frame, depth: int) -> None:
        for stmt in stmts:
            self.exec_stmt(stmt, frame, depth)

    def exec_stmt(self, stmt: A.Stmt, frame: Frame, depth: int) -> None:
        loc = Location(frame.name, stmt.line, stmt.col)
        if isinstance(stmt, A.Await):
            v = self.local(frame, stmt.handle, loc)
            if isinstance(v, HandleRef) and not self.handles[v.id].resolved:
                raise _SequentialDeadlock(frame, self.handles[v.id])
            self.tick()
            if not isinstance(v, HandleRef):
                raise OekRuntimeError(f"type mismatch: await expects Handle, got {kind_of(v)}", loc)
            frame.locals[stmt.target] = self.handles[v.id].value
            return
        self.tick()
        if isinstance(stmt, A.VarDecl):
            frame.locals[stmt.name] = self.eval(stmt.expr, frame, loc)
        elif isinstance(stmt, A.Assign):
            v = self.eval(stmt.expr, frame, loc)
            if stmt.kind == A.LOCAL:
                frame.locals[stmt.name] = v
            elif stmt.kind == A.GLOBAL:
                self.globals[stmt.name] = v
            else:
                self.objects[frame.obj.id].fields[stmt.name] = v
        elif isinstance(stmt, A.If):
            if self.cond(stmt.cond, frame, loc):
                self.exec_block(stmt.then, frame, depth)
            elif stmt.orelse is not None:
                self.exec_block(stmt.orelse, frame, depth)
        elif isinstance(stmt, A.While):
            while self.cond(stmt.cond, frame, loc):
                self.exec_block(stmt.body, frame, depth)
                self.tick()
        elif isinstance(stmt, A.Print):
            self.prints.append(self.eval(stmt.expr, frame, loc))
        elif isinstance(stmt, A.Return):
            raise _Return(UNIT if stmt.expr is None else self.eval(stmt.expr, frame, loc))
        elif isinstance(stmt, A.Call):
            args = self.args(stmt.args, frame, loc)
            callee = self.program.functions[stmt.func]
            frame.locals[stmt.target] = self.invoke(callee, args, None, depth + 1, loc)
        elif isinstance(stmt, A.Post):
            args = self.args(stmt.args, frame, loc)
            hs = self.new_handle(stmt.func)
            frame.locals[stmt.target] = hs.ref
            func = self.program.functions[stmt.func]
            self.resolve_handle(hs, self.invoke(func, args, None, depth + 1, loc))
        elif isinstance(stmt, A.Req):
            receiver = self.eval(stmt.receiver, frame, loc)
            args = self.args(stmt.args, frame, loc)
            obj, method = self.lookup_request(receiver, stmt.method, len(args), loc)
            hs = self.new_handle(f"{obj.ref}.{method.name}")
            frame.locals[stmt.target] = hs.ref
            self.resolve_handle(hs, self.invoke(method, args, obj.ref, depth + 1, loc))
        else:
            raise TypeError(f"not a statement: {stmt!r}")


def run_inline(program: ValidatedProgram, step_limit: int = DEFAULT_STEP_LIMIT) -> Outcome:
    interp = InlineInterpreter(program, step_limit)
    try:
        interp.invoke(program.entry, [], None, 0, None)
        status = Status(COMPLETED)
    except OekRuntimeError as e:
        status = Status(RUNTIME_ERROR, e.message, e.location)
    except StepLimitHit:
        status = Status(STEP_LIMIT)
    except _SequentialDeadlock as d:
        status = d.status
    return snapshot(interp, status)
