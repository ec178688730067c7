"""Happens-before over traces (vector clocks) and data-race detection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from oek.policies import EXCLUSIVE, INLINE, INTERLEAVED
from oek.trace import EVENT_KINDS, Event, Trace

VectorClock = dict  # task id -> counter

ACCESS_KINDS = frozenset({"read-global", "write-global", "read-field", "write-field"})
WRITE_KINDS = frozenset({"write-global", "write-field"})


class TraceError(ValueError):
    def __init__(self, message: str, event: Optional[Event] = None):
        self.event = event
        super().__init__(message if event is None else f"{message}: event {event.seq} ({event.kind})")


def _merge(into: VectorClock, other: Optional[VectorClock]) -> None:
    if other:
        for t, n in other.items():
            if into.get(t, 0) < n:
                into[t] = n


def happens_before(trace: Trace) -> list[VectorClock]:
    """Vector clock of every event, indexed by sequence number.

    Edges: program order within a task; ``post`` to the posted task's
    start; ``req-submit`` to ``req-admit``; a handle's resolution
    (``task-end`` of a posted task, ``req-reply`` of a request) to every
    ``await-resume`` of it; for tasks run inline, task end back to the
    submitter; and under serial method policies, each release of an
    object to its next acquisition.
    """
    policy = trace.header.get("policy", {})
    inline_posts = policy.get("fpolicy") == INLINE
    inline_reqs = policy.get("opolicy", INLINE) == INLINE
    mpolicy = policy.get("mpolicy")
    serial = not inline_reqs and mpolicy in (EXCLUSIVE, INTERLEAVED)
    interleaved = serial and mpolicy == INTERLEAVED

    clocks: dict[int, VectorClock] = {}
    joins: dict[int, list[VectorClock]] = {}
    posted: dict[int, VectorClock] = {}
    submitted: dict[int, VectorClock] = {}
    resolved: dict[int, VectorClock] = {}
    origin: dict[int, int] = {}
    release: dict[int, VectorClock] = {}
    method_tasks: set[int] = set()
    out: list[VectorClock] = []

    for i, e in enumerate(trace.events):
        if e.seq != i:
            raise TraceError("sequence numbers are not dense", e)
        if e.kind not in EVENT_KINDS:
            raise TraceError("unknown event kind", e)
        c = clocks.setdefault(e.task, {})
        for j in joins.pop(e.task, ()):
            _merge(c, j)
        k, h = e.kind, e.value
        if k == "task-start" and h is not None and e.obj is None:
            if h not in posted:
                raise TraceError("task start without a matching post", e)
            _merge(c, posted[h])
        elif k == "req-admit":
            if h not in submitted:
                raise TraceError("admission without a matching submit", e)
            _merge(c, submitted[h])
            method_tasks.add(e.task)
            if serial:
                _merge(c, release.get(e.obj))
        elif k == "await-resume":
            if h not in resolved:
                raise TraceError("await resumed on an unresolved handle", e)
            _merge(c, resolved[h])
            if interleaved and e.task in method_tasks:
                _merge(c, release.get(e.obj))
        c[e.task] = c.get(e.task, 0) + 1
        snap = dict(c)
        out.append(snap)

        if k == "post":
            posted[h] = snap
            origin[h] = e.task
        elif k == "req-submit":
            submitted[h] = snap
            origin[h] = e.task
        elif k == "req-reply":
            resolved[h] = snap
        elif k == "task-end" and h is not None:
            is_method = e.task in method_tasks
            resolved.setdefault(h, snap)
            if inline_reqs if is_method else inline_posts:
                joins.setdefault(origin[h], []).append(snap)
            if is_method and serial:
                release[e.obj] = snap
        elif k == "await-block" and interleaved and e.task in method_tasks:
            release[e.obj] = snap
    return out


def check_trace(trace: Trace, completed: bool = False) -> None:
    """Raise TraceError unless the trace is well formed."""
    happens_before(trace)
    if not completed:
        return
    submits = {e.value: e for e in trace.events if e.kind == "req-submit"}
    for kind in ("req-admit", "req-reply"):
        seen = [e.value for e in trace.events if e.kind == kind]
        if sorted(seen) != sorted(submits):
            missing = set(submits) - set(seen)
            orphan = submits[min(missing)] if missing else None
            raise TraceError(f"request without exactly one {kind}", orphan)


@dataclass(frozen=True)
class Race:
    location: str
    first: Event
    second: Event

    @property
    def tasks(self) -> tuple[int, int]:
        return (self.first.task, self.second.task)

    @property
    def kind(self) -> str:
        both = self.first.kind in WRITE_KINDS and self.second.kind in WRITE_KINDS
        return "write-write" if both else "read-write"

    def key(self) -> tuple:
        return (self.location, tuple(sorted((self.first.loc or "", self.second.loc or ""))))

    def __str__(self) -> str:
        return (
            f"{self.kind} race on {self.location}: "
            f"t{self.first.task} {self.first.kind} at {self.first.loc} / "
            f"t{self.second.task} {self.second.kind} at {self.second.loc}"
        )

    def to_json(self) -> dict:
        return {
            "location": self.location,
            "kind": self.kind,
            "tasks": list(self.tasks),
            "locs": [self.first.loc, self.second.loc],
            "seqs": [self.first.seq, self.second.seq],
        }


def location_of(e: Event) -> str:
    if e.kind.endswith("-global"):
        return f"@{e.name}"
    return f"obj#{e.obj}.{e.name}"


def detect_races(trace: Trace, clocks: Optional[list[VectorClock]] = None) -> list[Race]:
    """Conflicting accesses from different tasks unordered by happens-before."""
    if clocks is None:
        clocks = happens_before(trace)
    by_loc: dict[str, list[Event]] = {}
    for e in trace.events:
        if e.kind in ACCESS_KINDS:
            by_loc.setdefault(location_of(e), []).append(e)
    races: list[Race] = []
    seen = set()
    for loc, accesses in by_loc.items():
        for i, a in enumerate(accesses):
            ca = clocks[a.seq]
            for b in accesses[i + 1 :]:
                if a.task == b.task or (a.kind not in WRITE_KINDS and b.kind not in WRITE_KINDS):
                    continue
                # a precedes b in the trace, so b cannot happen before a
                if ca[a.task] <= clocks[b.seq].get(a.task, 0):
                    continue
                key = (loc, frozenset((a.task, b.task)), frozenset((a.loc, b.loc)))
                if key not in seen:
                    seen.add(key)
                    races.append(Race(loc, a, b))
    return races
