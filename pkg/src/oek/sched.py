"""Scheduled execution: function tasks and active objects.

One ``Runtime`` covers both concurrent models. ``post`` turns a function
execution into a Task handed to the function scheduler; ``req`` turns a
method call into a Request queued at the target object, whose method
policy decides when it is admitted as a Task. With the inline policy a
task runs on the submitter's own frame stack (its *carrier*) before
``submit`` returns, which is how the sequential model is recovered.

The unit of scheduling is either a free task (the root or a posted
function) or, under the serial method policies, an object; under the
``concurrent`` method policy each method task is its own unit.
"""

from __future__ import annotations

import random
import threading
from collections import deque
from contextlib import nullcontext
from dataclasses import dataclass, field
from typing import Optional, Union

from oek.engine import RET_RESOLVE, RET_ROOT, Frame, HandleState, Machine, ObjectInstance
from oek.ir.validate import ValidatedProgram
from oek.outcome import (
    COMPLETED,
    DEADLOCK,
    DEFAULT_STEP_LIMIT,
    RUNTIME_ERROR,
    STEP_LIMIT,
    OekRuntimeError,
    Outcome,
    Status,
    StepLimitHit,
)
from oek.policies import (
    CONCURRENT,
    EXCLUSIVE,
    FIFO,
    FUNCTION_KINDS,
    INLINE,
    INTERLEAVED,
    OBJECT_KINDS,
    PARALLEL,
    RANDOM,
    ROUND_ROBIN,
    Policy,
    parse_method_policy,
    parse_policy,
)
from oek.seq import snapshot
from oek.trace import Recorder, Trace, program_sha256

RUNNABLE = "runnable"
BLOCKED = "blocked"
DONE = "done"

ROOT = "root"
POSTED = "posted-function"
METHOD = "method-request"

FUNCSCHED = "funcsched"
OBJSCHED = "objsched"


@dataclass(eq=False)
class Task:
    id: int
    kind: str
    name: str
    frames: list[Frame] = field(default_factory=list)
    status: str = RUNNABLE
    blocked_on: Optional[HandleState] = None
    obj: Optional[ObjectInstance] = None
    handle: Optional[HandleState] = None
    # set for tasks run inline on someone else's frame stack
    carrier: Optional[Task] = None
    submitted: bool = False

    @property
    def label(self) -> str:
        return f"{self.name}[t{self.id}]"


@dataclass(eq=False)
class Request:
    target: ObjectInstance
    method: object
    args: list
    reply: HandleState
    submitter: int
    index: int


Unit = Union[Task, ObjectInstance]


def unit_key(unit: Unit) -> tuple[str, int]:
    if isinstance(unit, Task):
        return ("t", unit.id)
    return ("o", unit.ref.id)


def unit_label(unit: Unit) -> str:
    kind, n = unit_key(unit)
    return f"{kind}{n}"


@dataclass(frozen=True)
class DeadlockReport:
    blocked: tuple[str, ...]
    cycle: tuple[str, ...]

    def status(self) -> Status:
        return Status(DEADLOCK, "no runnable task", blocked=self.blocked, cycle=self.cycle)


class Runtime(Machine):
    def __init__(
        self,
        program: ValidatedProgram,
        *,
        model: str = FUNCSCHED,
        fpolicy: Union[str, Policy] = FIFO,
        opolicy: Union[str, Policy] = INLINE,
        mpolicy: str = EXCLUSIVE,
        seed: int = 0,
        step_limit: int = DEFAULT_STEP_LIMIT,
    ):
        super().__init__(program, step_limit)
        self.model = model
        self.fpolicy = parse_policy(fpolicy, FUNCTION_KINDS)
        self.opolicy = parse_policy(opolicy, OBJECT_KINDS)
        if model == FUNCSCHED and self.opolicy.kind != INLINE:
            raise ValueError("funcsched schedules functions only; requests run inline")
        if model not in (FUNCSCHED, OBJSCHED):
            raise ValueError(f"unknown model {model}")
        self.mpolicy = parse_method_policy(mpolicy)
        self.seed = seed
        self.fn_inline = self.fpolicy.kind == INLINE
        self.obj_inline = self.opolicy.kind == INLINE
        # the policy that picks among units
        self.policy = self.opolicy if not self.obj_inline else self.fpolicy
        self.lock = threading.RLock() if self.policy.kind == PARALLEL else nullcontext()
        self._cond: Optional[threading.Condition] = None
        self._tick_lock = threading.Lock() if self.policy.kind == PARALLEL else None
        self._halt: Optional[BaseException] = None

        self.tasks: dict[int, Task] = {}
        self.free: list[Task] = []
        self.producer: dict[int, Task] = {}
        self.recorder = Recorder(
            {
                "program_sha256": program_sha256(program),
                "model": model,
                "policy": {"fpolicy": str(self.fpolicy), "opolicy": str(self.opolicy), "mpolicy": self.mpolicy},
                "seed": seed,
            }
        )
        root = self._new_task(ROOT, program.entry.name)
        root.frames.append(self.make_frame(program.entry, [], (RET_ROOT, root), root.id, None))
        root.submitted = True
        self.free.append(root)
        self.emit("task-start", root.id, name=root.name)
        self.root = root
        self.normalize(root)

    # -- bookkeeping ---------------------------------------------------

    def emit(self, kind, task, obj=None, loc=None, name=None, value=None):
        self.recorder.emit(kind, task, obj, loc, name, value)

    def tick(self):
        if self._tick_lock is None:
            return super().tick()
        with self._tick_lock:
            super().tick()

    def _new_task(self, kind, name, **kw) -> Task:
        t = Task(len(self.tasks), kind, name, **kw)
        self.tasks[t.id] = t
        return t

    def _notify(self):
        if self._cond is not None:
            self._cond.notify_all()

    def new_object(self, type_name, loc):
        with self.lock:
            return super().new_object(type_name, loc)

    def new_handle(self, label):
        with self.lock:
            return super().new_handle(label)

    # -- submission ----------------------------------------------------

    def on_post(self, carrier, frame, func, args, hs, loc):
        with self.lock:
            self.emit("post", frame.task, loc=loc, name=func.name, value=hs.ref.id)
            task = self._new_task(POSTED, func.name, handle=hs)
            task.frames.append(self.make_frame(func, args, (RET_RESOLVE, hs, task), task.id, None))
            self.producer[hs.ref.id] = task
            self.emit("task-start", task.id, name=func.name, value=hs.ref.id)
        self.submit(task, carrier)

    def submit(self, task: Task, carrier: Optional[Task] = None) -> None:
        """Hand a posted task to the function scheduler.

        Under the inline policy the task runs on ``carrier`` before this
        returns (unless it blocks, leaving its frames on the carrier).
        """
        assert not task.submitted, f"double submit of {task.label}"
        task.submitted = True
        if self.fn_inline:
            self._run_on(carrier, task)
            return
        with self.lock:
            self.free.append(task)
            self._notify()

    def _run_on(self, carrier: Task, task: Task) -> None:
        task.carrier = carrier
        depth = len(carrier.frames)
        carrier.frames.extend(task.frames)
        task.frames = []
        while len(carrier.frames) > depth and carrier.status == RUNNABLE:
            if not self.step(carrier):
                break

    def on_req(self, carrier, frame, obj, method, args, hs, loc):
        with self.lock:
            self.emit("req-submit", frame.task, obj=obj.ref.id, loc=loc, name=method.name, value=hs.ref.id)
            req = Request(obj, method, args, hs, frame.task, obj.next_index)
            obj.next_index += 1
            if not self.obj_inline:
                obj.pending.append(req)
                self._admit(obj)
                self._notify()
                return
            task = self._start_method(obj, req, inline=True)
        self._run_on(carrier, task)

    def submit_request(self, target, method: str, args) -> HandleState:
        """Queue a request from outside any task (tests and embedding)."""
        obj, m = self.lookup_request(target, method, len(args), None)
        hs = self.new_handle(f"{obj.ref}.{m.name}")
        with self.lock:
            self.emit("req-submit", self.root.id, obj=obj.ref.id, name=m.name, value=hs.ref.id)
            obj.pending.append(Request(obj, m, list(args), hs, self.root.id, obj.next_index))
            obj.next_index += 1
            self._admit(obj)
        return hs

    def _start_method(self, obj: ObjectInstance, req: Request, inline: bool = False) -> Task:
        task = self._new_task(METHOD, f"{obj.ref}.{req.method.name}", obj=obj, handle=req.reply)
        task.frames.append(self.make_frame(req.method, req.args, (RET_RESOLVE, req.reply, task), task.id, obj.ref))
        task.submitted = True
        self.producer[req.reply.ref.id] = task
        if not inline:
            obj.active.append(task)
        self.emit("req-admit", task.id, obj=obj.ref.id, name=req.method.name, value=req.reply.ref.id)
        self.emit("task-start", task.id, obj=obj.ref.id, name=req.method.name, value=req.reply.ref.id)
        return task

    def _admit(self, obj: ObjectInstance) -> None:
        """Apply the method policy: decide which request/task holds ``obj``."""
        if self.obj_inline:
            return
        if self.mpolicy == CONCURRENT:
            while obj.pending:
                self._start_method(obj, obj.pending.popleft())
        elif self.mpolicy == EXCLUSIVE:
            if obj.holder is None and obj.pending:
                obj.holder = self._start_method(obj, obj.pending.popleft())
        elif obj.holder is None:
            for t in obj.active:
                if t.status == RUNNABLE:
                    obj.holder = t
                    return
            if obj.pending:
                obj.holder = self._start_method(obj, obj.pending.popleft())

    # -- completion and blocking ---------------------------------------

    def on_return(self, carrier, frame, value):
        with self.lock:
            task = frame.ret[-1]
            obj_id = None if task.obj is None else task.obj.ref.id
            hid = None if task.handle is None else task.handle.ref.id
            if task.kind == METHOD:
                self.emit("req-reply", task.id, obj=obj_id, name=frame.name, value=hid)
            self.emit("task-end", task.id, obj=obj_id, name=task.name, value=hid)
            task.status = DONE
            if task.handle is not None:
                self.resolve(task.handle, value)
            if task.kind == METHOD and task.carrier is None:
                task.obj.active.remove(task)
                if task.obj.holder is task:
                    task.obj.holder = None
                self._admit(task.obj)
            self._notify()

    def resolve(self, hs: HandleState, value) -> None:
        """Resolve a reply handle and wake every task blocked on it."""
        with self.lock:
            for t in self.resolve_handle(hs, value):
                t.status = RUNNABLE
                t.blocked_on = None
                if t.obj is not None and self.mpolicy == INTERLEAVED:
                    self._admit(t.obj)
            self._notify()

    def on_block(self, carrier, frame, hs, loc):
        with self.lock:
            if hs.resolved:
                return True
            carrier.status = BLOCKED
            carrier.blocked_on = hs
            hs.waiters.append(carrier)
            self.emit("await-block", frame.task, obj=None if frame.obj is None else frame.obj.id,
                      loc=loc, name=hs.label, value=hs.ref.id)
            obj = carrier.obj
            if obj is not None and self.mpolicy == INTERLEAVED and obj.holder is carrier:
                obj.holder = None
                self._admit(obj)
            self._notify()
            return False

    # -- units ---------------------------------------------------------

    def runnable_units(self) -> list[Unit]:
        with self.lock:
            units: list[Unit] = [t for t in self.free if t.status == RUNNABLE]
            for obj in self.objects.values():
                if self.mpolicy == CONCURRENT:
                    units.extend(t for t in obj.active if t.status == RUNNABLE)
                elif obj.holder is not None and obj.holder.status == RUNNABLE:
                    units.append(obj)
            units.sort(key=unit_key)
            return units

    def unit_task(self, unit: Unit) -> Task:
        return unit if isinstance(unit, Task) else unit.holder

    def run_task(self, task: Task, quantum: Optional[int] = None) -> int:
        n = 0
        while task.status == RUNNABLE and task.frames and (quantum is None or n < quantum):
            if self._halt is not None:
                break
            if not self.step(task):
                break
            n += 1
        return n

    def object_step(self, obj: ObjectInstance, quantum: Optional[int] = None) -> str:
        """Let ``obj`` make progress: admit per the method policy, then run
        the admitted task for ``quantum`` statements or until it completes
        or blocks. Returns "progressed", "blocked" or "quiescent"."""
        with self.lock:
            self._admit(obj)
            task = obj.holder
            if self.mpolicy == CONCURRENT:
                task = next((t for t in obj.active if t.status == RUNNABLE), None)
            assert task is not None or obj.active or obj.pending, f"{obj.ref} has no work"
        if task is None or task.status != RUNNABLE:
            return "blocked"
        self.run_task(task, quantum)
        if task.status == BLOCKED:
            return "blocked"
        if not obj.pending and not obj.active:
            return "quiescent"
        return "progressed"

    def run_unit(self, unit: Unit, quantum: Optional[int] = None):
        if isinstance(unit, Task):
            return self.run_task(unit, quantum)
        return self.object_step(unit, quantum)

    # -- drivers -------------------------------------------------------

    def run(self) -> tuple[Outcome, Trace]:
        try:
            if self.policy.kind == PARALLEL:
                self._run_parallel(self.policy.param)
            else:
                self._run_serial()
            status = self.final_status()
        except OekRuntimeError as e:
            status = Status(RUNTIME_ERROR, e.message, e.location)
        except StepLimitHit:
            status = Status(STEP_LIMIT)
        return self.outcome(status), self.recorder.trace()

    def outcome(self, status: Status) -> Outcome:
        return snapshot(self, status)

    def final_status(self) -> Status:
        report = detect_deadlock(self)
        return Status(COMPLETED) if report is None else report.status()

    def _run_serial(self) -> None:
        picker = _make_picker(self.policy, self.seed)
        while True:
            units = self.runnable_units()
            if not units:
                return
            unit, quantum = picker.pick(self, units)
            self.run_unit(unit, quantum)

    def _run_parallel(self, workers: int) -> None:
        cond = self._cond = threading.Condition(self.lock)
        ready: deque = deque()
        queued: set = set()
        inflight: set = set()

        def next_unit():
            while True:
                if self._halt is not None:
                    return None
                units = {unit_key(u): u for u in self.runnable_units()}
                for k, u in units.items():
                    if k not in queued and k not in inflight:
                        ready.append(k)
                        queued.add(k)
                while ready:
                    k = ready.popleft()
                    queued.discard(k)
                    if k in units:
                        inflight.add(k)
                        return units[k]
                if not inflight:
                    cond.notify_all()
                    return None
                cond.wait()

        def worker():
            while True:
                with cond:
                    unit = next_unit()
                if unit is None:
                    return
                try:
                    self.run_unit(unit, None)
                except (OekRuntimeError, StepLimitHit) as e:
                    with cond:
                        if self._halt is None:
                            self._halt = e
                        cond.notify_all()
                    return
                with cond:
                    inflight.discard(unit_key(unit))
                    cond.notify_all()

        threads = [threading.Thread(target=worker, daemon=True) for _ in range(workers)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        if self._halt is not None:
            raise self._halt

    # -- state ---------------------------------------------------------

    def state_key(self) -> tuple:
        """Hashable snapshot of everything that determines future behavior
        (the step counter and the trace excluded)."""

        def frames(fs):
            return tuple(
                (f.name, f.task, tuple(sorted(f.locals.items())), tuple((id(b), i) for b, i in f.blocks))
                for f in fs
            )

        return (
            tuple(sorted(self.globals.items())),
            tuple(
                (o.ref.id, tuple(sorted(o.fields.items())), tuple(r.reply.ref.id for r in o.pending),
                 None if o.holder is None else o.holder.id, tuple(t.id for t in o.active))
                for o in self.objects.values()
            ),
            tuple((h.ref.id, h.resolved, h.value) for h in self.handles.values()),
            tuple((t.id, t.status, frames(t.frames)) for t in self.tasks.values()),
            tuple(self.prints),
        )


def detect_deadlock(rt: Runtime) -> Optional[DeadlockReport]:
    """Wait-for analysis once nothing is runnable.

    Nodes are tasks and handles. A blocked task points at the handle it
    awaits; a handle points at the task that will resolve it, or, for a
    request not yet admitted, at the task holding the target object.
    """
    if rt.runnable_units():
        return None
    blocked = [t for t in rt.tasks.values() if t.status == BLOCKED]
    stuck = [r for o in rt.objects.values() for r in o.pending]
    if not blocked and not stuck:
        return None

    def handle_node(hs: HandleState) -> str:
        kind = "reply" if "." in hs.label else "result"
        return f"{kind}({hs.label})[h{hs.ref.id}]"

    def next_hop(node):
        if isinstance(node, Task):
            return node.blocked_on
        producer = rt.producer.get(node.ref.id)
        if producer is not None:
            while producer.carrier is not None:
                producer = producer.carrier
            return producer
        for o in rt.objects.values():
            if any(r.reply is node for r in o.pending):
                return o.holder
        return None

    def name(node) -> str:
        return node.label if isinstance(node, Task) else handle_node(node)

    descriptors = tuple(f"{t.label} awaiting {handle_node(t.blocked_on)}" for t in blocked)
    descriptors += tuple(f"{handle_node(r.reply)} pending at {r.target.ref}" for r in stuck)
    cycle: tuple[str, ...] = ()
    for start in blocked:
        path, seen = [], {}
        node = start
        while node is not None and id(node) not in seen:
            seen[id(node)] = len(path)
            path.append(node)
            node = next_hop(node)
        if node is not None:
            ring = path[seen[id(node)]:]
            # start at the lowest-numbered task so reports are canonical
            first = min((i for i, n in enumerate(ring) if isinstance(n, Task)), key=lambda i: ring[i].id)
            cycle = tuple(name(n) for n in ring[first:] + ring[:first])
            break
    return DeadlockReport(descriptors, cycle)


# -- pickers ---------------------------------------------------------------


class _InlinePicker:
    def pick(self, rt, units):
        return units[0], None


class _QueuePicker:
    """Run queue in readiness order; ``quantum`` None means run until the
    unit blocks or finishes (fifo), otherwise round-robin."""

    def __init__(self, policy: Policy, quantum: Optional[int]):
        self.policy = policy
        self.quantum = quantum
        self.ready: deque = deque()
        self.last = None

    def pick(self, rt, units):
        keys = {unit_key(u): u for u in units}
        queued = set(self.ready)
        for k in keys:
            if k not in queued and k != self.last:
                self.ready.append(k)
        if self.last in keys and self.last not in queued:
            self.ready.append(self.last)
        while True:
            k = self.ready.popleft()
            if k in keys:
                break
        self.last = k
        unit = keys[k]
        if len(units) > 1:
            rt.emit("schedule-pick", rt.unit_task(unit).id, name=str(self.policy), value=unit_label(unit))
        return unit, self.quantum


class _RandomPicker:
    def __init__(self, policy: Policy, seed: int):
        self.policy = policy
        self.rng = random.Random(seed)

    def pick(self, rt, units):
        if len(units) == 1:
            return units[0], 1
        unit = units[self.rng.randrange(len(units))]
        rt.emit("schedule-pick", rt.unit_task(unit).id, name=str(self.policy), value=unit_label(unit))
        return unit, 1


def _make_picker(policy: Policy, seed: int):
    if policy.kind == INLINE:
        return _InlinePicker()
    if policy.kind == FIFO:
        return _QueuePicker(policy, None)
    if policy.kind == ROUND_ROBIN:
        return _QueuePicker(policy, policy.param)
    if policy.kind == RANDOM:
        return _RandomPicker(policy, seed)
    raise ValueError(f"no serial picker for {policy}")


# -- entry points ----------------------------------------------------------


def run_funcsched(
    program: ValidatedProgram,
    policy: Union[str, Policy] = FIFO,
    seed: int = 0,
    step_limit: int = DEFAULT_STEP_LIMIT,
) -> tuple[Outcome, Trace]:
    """Run with posted functions as scheduled tasks; requests run inline."""
    return Runtime(program, model=FUNCSCHED, fpolicy=policy, seed=seed, step_limit=step_limit).run()


def run_objsched(
    program: ValidatedProgram,
    opolicy: Union[str, Policy] = FIFO,
    mpolicy: str = EXCLUSIVE,
    seed: int = 0,
    step_limit: int = DEFAULT_STEP_LIMIT,
    fpolicy: Union[str, Policy] = INLINE,
) -> tuple[Outcome, Trace]:
    """Run with objects as scheduled units, each admitting its own requests."""
    rt = Runtime(
        program, model=OBJSCHED, fpolicy=fpolicy, opolicy=opolicy, mpolicy=mpolicy, seed=seed, step_limit=step_limit
    )
    return rt.run()
