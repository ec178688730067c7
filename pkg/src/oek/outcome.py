"""Observable result of one execution, shared by every execution model."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from oek.values import ObjRef, Value, format_value, to_json

COMPLETED = "completed"
RUNTIME_ERROR = "runtime-error"
DEADLOCK = "deadlock"
STEP_LIMIT = "step-limit"

DEFAULT_STEP_LIMIT = 1_000_000


@dataclass(frozen=True)
class Location:
    func: str
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.func}:{self.line}:{self.col}"


class OekRuntimeError(Exception):
    """A fault in the executing program (not in the interpreter)."""

    def __init__(self, message: str, location: Optional[Location] = None):
        self.message = message
        self.location = location
        super().__init__(message if location is None else f"{location}: {message}")


class StepLimitHit(Exception):
    pass


@dataclass(frozen=True)
class Status:
    kind: str
    message: str = ""
    location: Optional[Location] = None
    blocked: tuple[str, ...] = ()
    cycle: tuple[str, ...] = ()

    def __str__(self) -> str:
        if self.kind == RUNTIME_ERROR:
            where = f" at {self.location}" if self.location else ""
            return f"RuntimeError({self.message}){where}"
        if self.kind == DEADLOCK:
            return f"Deadlock(cycle: {' -> '.join(self.cycle)})"
        if self.kind == STEP_LIMIT:
            return "StepLimitExceeded"
        return "Completed"

    def to_json(self) -> dict:
        data: dict = {"kind": self.kind}
        if self.kind == RUNTIME_ERROR:
            data["message"] = self.message
            data["location"] = None if self.location is None else str(self.location)
        if self.kind == DEADLOCK:
            data["blocked"] = list(self.blocked)
            data["cycle"] = list(self.cycle)
        return data


@dataclass(frozen=True)
class Outcome:
    status: Status
    prints: tuple[Value, ...] = ()
    globals_final: dict[str, Value] = field(default_factory=dict)
    objects_final: dict[ObjRef, dict[str, Value]] = field(default_factory=dict)
    steps: int = 0

    __hash__ = None  # type: ignore[assignment]

    def to_json(self) -> dict:
        return {
            "status": self.status.to_json(),
            "prints": [to_json(v) for v in self.prints],
            "globals_final": {k: to_json(v) for k, v in sorted(self.globals_final.items())},
            "objects_final": {
                str(ref): {k: to_json(v) for k, v in sorted(fields.items())}
                for ref, fields in sorted(self.objects_final.items())
            },
            "steps": self.steps,
        }

    def canonical(self) -> str:
        """Kind-strict text form; two outcomes are equal iff these match."""
        return json.dumps(self.to_json(), sort_keys=True)

    def print_lines(self) -> list[str]:
        return [format_value(v) for v in self.prints]
