"""Runtime values of the kernel language.

Ints and Bools are plain Python ``int`` / ``bool``; the remaining kinds are
small frozen records so they can be stored in locals, globals and fields and
compared structurally across execution models.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


@dataclass(frozen=True, order=True)
class ObjRef:
    id: int
    type: str

    def __str__(self) -> str:
        return f"{self.type}#{self.id}"


@dataclass(frozen=True, order=True)
class HandleRef:
    """Reference to a write-once reply slot held by the runtime."""

    id: int

    def __str__(self) -> str:
        return f"handle#{self.id}"


class _Unit:
    __slots__ = ()
    _instance: _Unit | None = None

    def __new__(cls) -> _Unit:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNIT"

    def __str__(self) -> str:
        return "unit"

    def __reduce__(self):
        return (_Unit, ())


UNIT = _Unit()

Value = Union[int, bool, ObjRef, HandleRef, _Unit]


def is_int(v: object) -> bool:
    return type(v) is int


def is_bool(v: object) -> bool:
    return type(v) is bool


def kind_of(v: object) -> str:
    if type(v) is bool:
        return "Bool"
    if type(v) is int:
        return "Int"
    if isinstance(v, ObjRef):
        return "Object"
    if isinstance(v, HandleRef):
        return "Handle"
    if v is UNIT:
        return "Unit"
    raise TypeError(f"not a kernel value: {v!r}")


def values_equal(a: Value, b: Value) -> bool:
    # True == 1 in Python; kernel equality is kind-strict.
    return kind_of(a) == kind_of(b) and a == b


def format_value(v: Value) -> str:
    if type(v) is bool:
        return "true" if v else "false"
    return str(v)


def to_json(v: Value):
    """Encode a value for trace files and JSON reports."""
    if type(v) in (int, bool):
        return v
    if isinstance(v, ObjRef):
        return {"ref": v.id, "type": v.type}
    if isinstance(v, HandleRef):
        return {"handle": v.id}
    if v is UNIT:
        return None
    raise TypeError(f"not a kernel value: {v!r}")


def from_json(data) -> Value:
    if data is None:
        return UNIT
    if isinstance(data, dict):
        if "ref" in data:
            return ObjRef(data["ref"], data["type"])
        if "handle" in data:
            return HandleRef(data["handle"])
        raise ValueError(f"cannot decode value {data!r}")
    if type(data) in (int, bool):
        return data
    raise ValueError(f"cannot decode value {data!r}")
