"""Scheduling policy vocabulary and its textual syntax.

Function and object policies are written ``inline``, ``fifo``,
``rr:Q`` (or ``round-robin:Q``), ``random`` and ``parallel:N``. Method
policies are ``exclusive-inline``, ``interleaved`` and ``concurrent``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

INLINE = "inline"
FIFO = "fifo"
ROUND_ROBIN = "round-robin"
RANDOM = "random"
PARALLEL = "parallel"

EXCLUSIVE = "exclusive-inline"
INTERLEAVED = "interleaved"
CONCURRENT = "concurrent"
METHOD_POLICIES = (EXCLUSIVE, INTERLEAVED, CONCURRENT)

FUNCTION_KINDS = (INLINE, FIFO, RANDOM, PARALLEL)
OBJECT_KINDS = (INLINE, FIFO, ROUND_ROBIN, RANDOM, PARALLEL)


@dataclass(frozen=True)
class Policy:
    kind: str
    param: Optional[int] = None

    def __str__(self) -> str:
        if self.kind == ROUND_ROBIN:
            return f"rr:{self.param}"
        if self.kind == PARALLEL:
            return f"parallel:{self.param}"
        return self.kind

    @property
    def deterministic(self) -> bool:
        return self.kind != PARALLEL


class PolicyError(ValueError):
    pass


def parse_policy(text: Union[str, Policy], allowed=OBJECT_KINDS) -> Policy:
    if isinstance(text, Policy):
        policy = text
    else:
        name, _, arg = text.strip().partition(":")
        name = {"rr": ROUND_ROBIN, "round_robin": ROUND_ROBIN}.get(name, name)
        if name in (ROUND_ROBIN, PARALLEL):
            default = 1 if name == ROUND_ROBIN else 2
            try:
                n = int(arg) if arg else default
            except ValueError:
                raise PolicyError(f"bad policy parameter in {text!r}") from None
            if n < 1:
                raise PolicyError(f"policy parameter must be >= 1 in {text!r}")
            policy = Policy(name, n)
        elif arg:
            raise PolicyError(f"policy {name} takes no parameter")
        else:
            policy = Policy(name)
    if policy.kind not in allowed:
        raise PolicyError(f"unknown policy {text!s}; expected one of {', '.join(allowed)}")
    return policy


def parse_method_policy(text: str) -> str:
    text = {"exclusive": EXCLUSIVE}.get(text, text)
    if text not in METHOD_POLICIES:
        raise PolicyError(f"unknown method policy {text}; expected one of {', '.join(METHOD_POLICIES)}")
    return text
