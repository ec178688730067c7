"""Observational equivalence of two Outcomes."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass

from oek.outcome import Outcome
from oek.values import format_value, to_json

STRICT = "strict"
CONFLUENT = "confluent"
MODES = (STRICT, CONFLUENT)


@dataclass(frozen=True)
class Equivalence:
    equal: bool
    diff: str = ""

    def __bool__(self) -> bool:
        return self.equal


def _key(v) -> str:
    return json.dumps(to_json(v), sort_keys=True)


def _status_key(outcome: Outcome) -> tuple:
    s = outcome.status
    return (s.kind, s.message, None if s.location is None else str(s.location))


def _compare_stores(label: str, a: dict, b: dict, show) -> str:
    for name in sorted(set(a) | set(b), key=str):
        if name not in a or name not in b:
            side = "first" if name not in a else "second"
            return f"{label} differ at {show(name)}: missing in {side} outcome"
        if _key(a[name]) != _key(b[name]):
            return f"{label} differ at {show(name)}: {format_value(a[name])} vs {format_value(b[name])}"
    return ""


def equivalent(a: Outcome, b: Outcome, mode: str = STRICT) -> Equivalence:
    """Compare status, final stores and prints; steps are not observable.

    Strict mode wants the same print sequence, confluent mode only the same
    print multiset. The diff names the first divergence found, checking in
    that order.
    """
    if mode not in MODES:
        raise ValueError(f"unknown equivalence mode {mode}")
    if _status_key(a) != _status_key(b):
        return Equivalence(False, f"status differs: {a.status} vs {b.status}")
    diff = _compare_stores("globals_final", a.globals_final, b.globals_final, lambda n: f"@{n}")
    if diff:
        return Equivalence(False, diff)
    oa, ob = a.objects_final, b.objects_final
    for ref in sorted(set(oa) | set(ob)):
        if ref not in oa or ref not in ob:
            return Equivalence(False, f"objects_final differ at {ref}: missing in one outcome")
        diff = _compare_stores("objects_final", oa[ref], ob[ref], lambda n, r=ref: f"{r}.{n}")
        if diff:
            return Equivalence(False, diff)
    pa, pb = [_key(v) for v in a.prints], [_key(v) for v in b.prints]
    if mode == STRICT:
        for i, (x, y) in enumerate(zip(pa, pb)):
            if x != y:
                return Equivalence(False, f"prints differ at index {i}: {x} vs {y}")
        if len(pa) != len(pb):
            return Equivalence(False, f"prints differ in length: {len(pa)} vs {len(pb)}")
    elif Counter(pa) != Counter(pb):
        extra = sorted((Counter(pa) - Counter(pb)).elements())
        missing = sorted((Counter(pb) - Counter(pa)).elements())
        return Equivalence(False, f"print multisets differ: only first {extra}, only second {missing}")
    return Equivalence(True)
