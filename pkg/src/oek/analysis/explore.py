"""Exhaustive interleaving exploration.

Every choice point is a pick among the runnable scheduling units, and
each pick runs the chosen unit for one statement. The search is a
stateless depth-first walk: each branch is reached by replaying its
prefix of picks on a fresh runtime.

Repeated states along one path are handled specially, since a spinning
loop otherwise yields infinitely many schedules. If every unit that stays
runnable around the cycle also takes a step in it, the program
genuinely livelocks; the cycle is replayed until the step bound fires and
the schedule ends in StepLimitExceeded. Otherwise some runnable unit is
starved forever, which is not a fair schedule, and the branch is pruned.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

from oek.analysis.hb import Race, detect_races
from oek.config import ModelConfig, run_config
from oek.ir.validate import ValidatedProgram
from oek.outcome import RUNTIME_ERROR, STEP_LIMIT, OekRuntimeError, Outcome, Status, StepLimitHit
from oek.sched import Runtime, unit_key, unit_label
from oek.trace import Trace
from oek.values import to_json

DEFAULT_MAX_SCHEDULES = 10_000
DEFAULT_MAX_STEPS = 1_000

STATUS_NAMES = {
    "completed": "Completed",
    "runtime-error": "RuntimeError",
    "deadlock": "Deadlock",
    "step-limit": "StepLimitExceeded",
}


def final_store(outcome: Outcome) -> str:
    """Canonical text of (globals_final, objects_final)."""
    data = outcome.to_json()
    return json.dumps([data["globals_final"], data["objects_final"]], sort_keys=True)


@dataclass
class ExplorationReport:
    config: dict
    max_schedules: int
    max_steps: int
    schedules: int = 0
    pruned: int = 0
    truncated: bool = False
    final_stores: set[str] = field(default_factory=set)
    statuses: set[str] = field(default_factory=set)
    prints_seen: set[tuple] = field(default_factory=set)
    deadlock_cycles: set[tuple[str, ...]] = field(default_factory=set)
    races: list[Race] = field(default_factory=list)
    _race_keys: set = field(default_factory=set, repr=False)

    def add(self, outcome: Outcome, trace: Optional[Trace]) -> None:
        self.schedules += 1
        self.final_stores.add(final_store(outcome))
        self.statuses.add(STATUS_NAMES[outcome.status.kind])
        self.prints_seen.add(tuple(json.dumps(to_json(v)) for v in outcome.prints))
        if outcome.status.cycle:
            self.deadlock_cycles.add(outcome.status.cycle)
        if trace is not None:
            for race in detect_races(trace):
                if race.key() not in self._race_keys:
                    self._race_keys.add(race.key())
                    self.races.append(race)

    def global_values(self, name: str) -> set:
        """Distinct final values of ``@name`` (as JSON text for non-ints)."""
        out = set()
        for store in self.final_stores:
            v = json.loads(store)[0].get(name)
            out.add(v if isinstance(v, int) else json.dumps(v))
        return out

    def field_values(self, obj: str, name: str) -> set:
        out = set()
        for store in self.final_stores:
            v = json.loads(store)[1].get(obj, {}).get(name)
            out.add(v if isinstance(v, int) else json.dumps(v))
        return out

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "max_schedules": self.max_schedules,
            "max_steps": self.max_steps,
            "schedules": self.schedules,
            "pruned": self.pruned,
            "truncated": self.truncated,
            "final_stores": [json.loads(s) for s in sorted(self.final_stores)],
            "statuses": sorted(self.statuses),
            "prints": [[json.loads(v) for v in p] for p in sorted(self.prints_seen)],
            "deadlock_cycles": [list(c) for c in sorted(self.deadlock_cycles)],
            "races": [r.to_json() for r in self.races],
        }


class _Unfair(Exception):
    pass


class _Path:
    """One run of the search: replays a prefix, then extends it greedily."""

    def __init__(self, program: ValidatedProgram, config: ModelConfig, max_steps: int, branch=None):
        self.rt: Runtime = config.runtime(program, max_steps)
        self.picks: list[tuple] = []
        self.runnable: list[frozenset] = []
        self.seen: dict[tuple, int] = {}
        self.spinning = False
        # states of a shared prefix are inherited rather than recomputed
        self.prefix: list[tuple] = []
        self.replay = 0
        if branch is not None:
            self.prefix, seen, runnable = branch
            self.replay = len(self.prefix) - 1
            self.seen = {k: v for k, v in seen.items() if v <= self.replay}
            self.runnable = list(runnable)

    def branch(self, key) -> tuple:
        d = len(self.picks)
        return (self.picks + [key], self.seen, self.runnable[:d])

    def take(self, key, units) -> None:
        """Run the unit named ``key`` for one statement."""
        unit = next(u for u in units if unit_key(u) == key)
        if len(units) > 1:
            self.rt.emit("schedule-pick", self.rt.unit_task(unit).id, name="explore", value=unit_label(unit))
        if len(self.picks) >= self.replay:
            self.runnable.append(frozenset(unit_key(u) for u in units))
        self.picks.append(key)
        self.rt.run_unit(unit, 1)

    def note_state(self) -> Optional[int]:
        """Record the current state; if it already occurred on this path,
        return the pick index it first occurred at."""
        key = self.rt.state_key()
        if key in self.seen:
            return self.seen[key]
        self.seen[key] = len(self.picks)
        return None

    def close_cycle(self, start: int) -> None:
        """Prune an unfair cycle, or replay a fair one until the step bound
        stops it."""
        always = frozenset.intersection(*self.runnable[start:])
        cycle = self.picks[start:]
        if not always <= set(cycle):
            raise _Unfair
        self.spinning = True
        while True:
            for key in cycle:
                self.take(key, self.rt.runnable_units())


def explore(
    program: ValidatedProgram,
    config: ModelConfig = ModelConfig("funcsched"),
    max_schedules: int = DEFAULT_MAX_SCHEDULES,
    max_steps: int = DEFAULT_MAX_STEPS,
    on_schedule: Optional[Callable[[Outcome, Optional[Trace]], None]] = None,
) -> ExplorationReport:
    """Enumerate every fair statement-level interleaving of ``program``."""
    if config.parallel:
        raise ValueError("exploration needs a deterministic policy, not parallel")
    report = ExplorationReport(config.resolved().to_json(), max_schedules, max_steps)

    def finish(outcome, trace):
        report.add(outcome, trace)
        if on_schedule is not None:
            on_schedule(outcome, trace)

    if not config.scheduled:
        finish(*run_config(program, config, max_steps))
        return report

    pending: list = [None]
    while pending:
        if report.schedules >= max_schedules:
            report.truncated = True
            break
        path = _Path(program, config, max_steps, pending.pop())
        try:
            if path.replay == 0:
                path.note_state()
            while True:
                units = path.rt.runnable_units()
                if not units:
                    break
                depth = len(path.picks)
                if depth < len(path.prefix):
                    path.take(path.prefix[depth], units)
                    if depth < path.replay:
                        continue
                else:
                    keys = [unit_key(u) for u in units]
                    pending.extend(path.branch(k) for k in reversed(keys[1:]))
                    path.take(keys[0], units)
                repeat = path.note_state()
                if repeat is not None:
                    path.close_cycle(repeat)
            status = path.rt.final_status()
        except _Unfair:
            report.pruned += 1
            continue
        except OekRuntimeError as e:
            status = Status(RUNTIME_ERROR, e.message, e.location)
        except StepLimitHit:
            if not path.spinning:
                # cut off by the bound without a proven livelock
                report.truncated = True
                continue
            status = Status(STEP_LIMIT)
        finish(path.rt.outcome(status), path.rt.recorder.trace())
    return report
