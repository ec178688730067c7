"""Model configurations: which executor runs a program, under which policies."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from oek.ir.validate import ValidatedProgram
from oek.outcome import DEFAULT_STEP_LIMIT, Outcome
from oek.policies import (
    EXCLUSIVE,
    FIFO,
    FUNCTION_KINDS,
    INLINE,
    OBJECT_KINDS,
    PolicyError,
    parse_method_policy,
    parse_policy,
)
from oek.sched import FUNCSCHED, OBJSCHED, Runtime
from oek.seq import run_inline, run_stack
from oek.trace import Trace

STACK = "stack"
INLINE_MODEL = "inline"
MODELS = (STACK, INLINE_MODEL, FUNCSCHED, OBJSCHED)


@dataclass(frozen=True)
class ModelConfig:
    """A point on the model ladder. Unset policies take the model's default."""

    model: str = STACK
    fpolicy: Optional[str] = None
    opolicy: Optional[str] = None
    mpolicy: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODELS:
            raise PolicyError(f"unknown model {self.model}; expected one of {', '.join(MODELS)}")
        sequential = self.model in (STACK, INLINE_MODEL)
        if sequential and self.fpolicy is not None:
            raise PolicyError(f"--fpolicy needs a scheduled model, not {self.model}")
        if self.model != OBJSCHED:
            if self.opolicy is not None:
                raise PolicyError("--opolicy requires --model objsched")
            if self.mpolicy is not None:
                raise PolicyError("--mpolicy requires --model objsched")
        if self.fpolicy is not None:
            object.__setattr__(self, "fpolicy", str(parse_policy(self.fpolicy, FUNCTION_KINDS)))
        if self.opolicy is not None:
            object.__setattr__(self, "opolicy", str(parse_policy(self.opolicy, OBJECT_KINDS)))
        if self.mpolicy is not None:
            object.__setattr__(self, "mpolicy", parse_method_policy(self.mpolicy))

    @property
    def scheduled(self) -> bool:
        return self.model in (FUNCSCHED, OBJSCHED)

    def resolved(self) -> ModelConfig:
        """Copy with every applicable default filled in."""
        if self.model == FUNCSCHED:
            return replace(self, fpolicy=self.fpolicy or FIFO)
        if self.model == OBJSCHED:
            return replace(
                self,
                fpolicy=self.fpolicy or INLINE,
                opolicy=self.opolicy or FIFO,
                mpolicy=self.mpolicy or EXCLUSIVE,
            )
        return self

    @property
    def parallel(self) -> bool:
        r = self.resolved()
        return any(p is not None and p.startswith("parallel") for p in (r.fpolicy, r.opolicy))

    def runtime(self, program: ValidatedProgram, step_limit: int = DEFAULT_STEP_LIMIT) -> Runtime:
        r = self.resolved()
        if not r.scheduled:
            raise ValueError(f"model {r.model} has no scheduler")
        kw = dict(model=r.model, fpolicy=r.fpolicy, seed=r.seed, step_limit=step_limit)
        if r.model == OBJSCHED:
            kw.update(opolicy=r.opolicy, mpolicy=r.mpolicy)
        return Runtime(program, **kw)

    def to_json(self) -> dict:
        r = self.resolved()
        data = {"model": r.model, "seed": r.seed}
        for k in ("fpolicy", "opolicy", "mpolicy"):
            if getattr(r, k) is not None:
                data[k] = getattr(r, k)
        return data

    def __str__(self) -> str:
        return ",".join(f"{k}={v}" for k, v in self.to_json().items())


def parse_config(text: str) -> ModelConfig:
    """Parse ``key=value`` pairs separated by commas, e.g.
    ``model=funcsched,fpolicy=random,seed=3``."""
    fields: dict = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        key, sep, value = part.partition("=")
        key = key.strip().lstrip("-")
        if not sep or key not in ("model", "fpolicy", "opolicy", "mpolicy", "seed"):
            raise PolicyError(f"bad config item {part!r}")
        if key == "seed":
            try:
                value = int(value)
            except ValueError:
                raise PolicyError(f"seed must be an integer, got {value!r}") from None
        fields[key] = value
    return ModelConfig(**fields)


def run_config(
    program: ValidatedProgram, config: ModelConfig, step_limit: int = DEFAULT_STEP_LIMIT
) -> tuple[Outcome, Optional[Trace]]:
    """Run under ``config``. Sequential models produce no trace."""
    if config.model == STACK:
        return run_stack(program, step_limit), None
    if config.model == INLINE_MODEL:
        return run_inline(program, step_limit), None
    return config.runtime(program, step_limit).run()
