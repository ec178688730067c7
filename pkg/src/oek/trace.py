"""Execution traces: a header plus a totally ordered list of events.

On disk a trace is line-delimited JSON. The first line is the header
(``program_sha256``, ``model``, ``policy``, ``seed``); every further line is
one event with the fields ``seq, task, obj, kind, loc, name, value``.

For synchronization events ``value`` is the id of the handle involved, so
``post``/``task-start``, ``req-submit``/``req-admit`` and the resolving
``task-end``/``req-reply`` can be matched up with ``await-resume``.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from typing import Any, Optional

from oek.values import Value, from_json, to_json

EVENT_KINDS = frozenset(
    {
        "task-start",
        "task-end",
        "post",
        "req-submit",
        "req-admit",
        "req-reply",
        "await-block",
        "await-resume",
        "read-global",
        "write-global",
        "read-field",
        "write-field",
        "print",
        "schedule-pick",
    }
)

# Events whose ``value`` carries a kernel Value rather than a handle id.
_VALUE_EVENTS = frozenset({"read-global", "write-global", "read-field", "write-field", "print"})


@dataclass(frozen=True)
class Event:
    seq: int
    task: int
    kind: str
    obj: Optional[int] = None
    loc: Optional[str] = None
    name: Optional[str] = None
    value: Any = None

    def to_json(self) -> dict:
        value = to_json(self.value) if self.kind in _VALUE_EVENTS else self.value
        return {
            "seq": self.seq,
            "task": self.task,
            "obj": self.obj,
            "kind": self.kind,
            "loc": self.loc,
            "name": self.name,
            "value": value,
        }

    @classmethod
    def from_json(cls, data: dict) -> Event:
        kind = data["kind"]
        value = from_json(data["value"]) if kind in _VALUE_EVENTS else data["value"]
        return cls(data["seq"], data["task"], kind, data["obj"], data["loc"], data["name"], value)


@dataclass
class Trace:
    header: dict
    events: list[Event] = field(default_factory=list)

    def to_jsonl(self) -> str:
        lines = [json.dumps(self.header, sort_keys=True)]
        lines += [json.dumps(e.to_json(), sort_keys=True) for e in self.events]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> Trace:
        lines = [ln for ln in text.splitlines() if ln.strip()]
        header = json.loads(lines[0])
        return cls(header, [Event.from_json(json.loads(ln)) for ln in lines[1:]])

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_jsonl())

    @classmethod
    def read(cls, path) -> Trace:
        with open(path, encoding="utf-8") as fh:
            return cls.from_jsonl(fh.read())

    def by_task(self) -> dict[int, list[Event]]:
        out: dict[int, list[Event]] = {}
        for e in self.events:
            out.setdefault(e.task, []).append(e)
        return out


def program_sha256(program) -> str:
    from oek.ir import pretty_print

    return hashlib.sha256(pretty_print(program).encode("utf-8")).hexdigest()


class Recorder:
    """Assigns dense sequence numbers; safe to share between worker threads."""

    def __init__(self, header: dict):
        self.header = header
        self.events: list[Event] = []
        self._lock = threading.Lock()

    def emit(self, kind: str, task: int, obj=None, loc=None, name=None, value: Value = None) -> None:
        with self._lock:
            self.events.append(
                Event(len(self.events), task, kind, obj, None if loc is None else str(loc), name, value)
            )

    def trace(self) -> Trace:
        return Trace(dict(self.header), list(self.events))
