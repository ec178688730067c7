"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v``; the verdict
lines are written straight to the terminal, bypassing output capture.
"""

from __future__ import annotations

import json
import time

import pytest

import oracles
from oek import corpus
from oek.analysis import detect_races, equivalent, explore, optimize_rle
from oek.cli import main
from oek.config import ModelConfig
from oek.ir import ast as A, load, parse, pretty_print
from oek.sched import run_funcsched, run_objsched
from oek.seq import run_inline, run_stack

SPIN_BOUNDS = dict(max_steps=200, max_schedules=10_000)
CYCLE_LENGTHS = {"deadlock": 4, "selfwait": 2}
PARALLEL_REPS = 1000


@pytest.fixture
def verdict(capsys, request):
    def report(number: int, ok: bool, detail: str, started: float) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({time.perf_counter() - started:.2f}s) {detail}"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return report


def _is_sequential(program) -> bool:
    bodies = [f.body for f in program.program.functions]
    bodies += [m.body for t in program.program.object_types for m in t.methods]
    return not any(isinstance(s, (A.Post, A.Req)) for b in bodies for s in A.walk_stmts(b))


def test_criterion_1_ladder_equivalence(verdict):
    t0 = time.perf_counter()
    names = corpus.names()
    required = {"fact", "fib", "evenodd", "counter", "msg", "racy", "spinwait", "deadlock", "selfwait", "pingpong"}
    failures = []
    for name in names:
        p = corpus.load(name)
        forms = {
            run_stack(p).canonical(),
            run_inline(p).canonical(),
            run_funcsched(p, "inline")[0].canonical(),
            run_objsched(p, "inline", "exclusive-inline")[0].canonical(),
        }
        if len(forms) != 1:
            failures.append(name)
    ok = len(names) >= 12 and required <= set(names) and not failures
    verdict(1, ok, f"{len(names)} programs; 4 models agree field-for-field; mismatches={failures}", t0)


# every policy value appears; function policies other than inline are
# crossed with the random object policy, where they interact most
DETERMINISM_CONFIGS = (
    [("funcsched", p, None, None) for p in ("inline", "fifo", "random")]
    + [
        ("objsched", o, m, "inline")
        for o in ("inline", "fifo", "rr:2", "random")
        for m in ("exclusive-inline", "interleaved", "concurrent")
    ]
    + [("objsched", "random", m, f) for f in ("fifo", "random") for m in ("exclusive-inline", "interleaved", "concurrent")]
)


def test_criterion_2_determinism(verdict):
    t0 = time.perf_counter()
    failures = []
    runs = 0
    for name in corpus.names():
        p = corpus.load(name)
        for model, pol, mpol, fpol in DETERMINISM_CONFIGS:
            for seed in range(10):
                if model == "funcsched":
                    pair = [run_funcsched(p, pol, seed) for _ in range(2)]
                else:
                    pair = [run_objsched(p, pol, mpol, seed, fpolicy=fpol) for _ in range(2)]
                runs += 2
                (oa, ta), (ob, tb) = pair
                if oa.canonical() != ob.canonical() or ta.to_jsonl() != tb.to_jsonl():
                    failures.append((name, model, pol, mpol, fpol, seed))
        for seq in (run_stack, run_inline):
            if seq(p).canonical() != seq(p).canonical():
                failures.append((name, seq.__name__))
    verdict(2, not failures, f"{runs} scheduled runs over {len(DETERMINISM_CONFIGS)} configs x seeds 0-9; divergent={failures[:3]}", t0)


def test_criterion_3_oracle_equality(verdict):
    t0 = time.perf_counter()
    racy = explore(corpus.load("racy"), ModelConfig("funcsched"))
    msg = explore(corpus.load("msg"), ModelConfig("objsched"))
    ok = (
        not racy.truncated
        and not msg.truncated
        and racy.global_values("g") == oracles.RACY_FINALS
        and msg.global_values("count") == oracles.MSG_FINALS
    )
    verdict(
        3,
        ok,
        f"racy finals {sorted(racy.global_values('g'))} (oracle {sorted(oracles.RACY_FINALS)}), "
        f"msg finals {sorted(msg.global_values('count'))} (oracle {sorted(oracles.MSG_FINALS)})",
        t0,
    )


def _method_intervals_ok(trace) -> bool:
    """Per object: method-task event spans are disjoint and in submission order."""
    submitted = {}
    for e in trace.events:
        if e.kind == "req-submit":
            submitted.setdefault(e.obj, []).append(e.value)
    spans = {}
    handle_of = {}
    for e in trace.events:
        if e.kind == "req-admit":
            handle_of[e.task] = (e.obj, e.value)
        if e.task in handle_of:
            obj, h = handle_of[e.task]
            lo, hi = spans.get((obj, h), (e.seq, e.seq))
            spans[(obj, h)] = (min(lo, e.seq), max(hi, e.seq))
    for obj, handles in submitted.items():
        ordered = [spans[(obj, h)] for h in handles if (obj, h) in spans]
        if len(ordered) != len(handles):
            return False
        if any(a[1] >= b[0] for a, b in zip(ordered, ordered[1:])):
            return False
    return True


def test_criterion_4_objects_only_concurrency(verdict):
    t0 = time.perf_counter()
    checked = []
    report = explore(
        corpus.load("counter"), ModelConfig("objsched"), on_schedule=lambda o, t: checked.append(_method_intervals_ok(t))
    )
    concurrent = explore(corpus.load("counter"), ModelConfig("objsched", mpolicy="concurrent"))
    finals = concurrent.field_values("Counter#1", "c")
    ok = (
        bool(checked)
        and all(checked)
        and not report.truncated
        and not concurrent.truncated
        and finals == oracles.COUNTER_CONCURRENT_FINALS
    )
    verdict(4, ok, f"exclusive: {len(checked)} schedules, intervals disjoint={all(checked)}; concurrent finals {sorted(finals)}", t0)


def test_criterion_5_sequentially_correct_concurrently_incorrect(verdict):
    t0 = time.perf_counter()
    seq = corpus.load("spinwait_seq")
    seq_ok = bool(equivalent(run_stack(seq), run_stack(optimize_rle(seq)), "strict"))
    spin = corpus.load("spinwait")
    pre = explore(spin, ModelConfig("funcsched"), **SPIN_BOUNDS)
    post = explore(optimize_rle(spin), ModelConfig("funcsched"), **SPIN_BOUNDS)
    prints = {tuple(json.loads(v) for v in p) for p in pre.prints_seen}
    ok = seq_ok and pre.statuses == {"Completed"} and prints == {(7,)} and "StepLimitExceeded" in post.statuses
    verdict(
        5,
        ok,
        f"spinwait_seq pre/post strict-equal={seq_ok}; pre statuses {sorted(pre.statuses)} prints {sorted(prints)}; "
        f"post statuses {sorted(post.statuses)} (max_steps=200, max_schedules=10000)",
        t0,
    )


def test_criterion_6_optimizer_sequential_preservation(verdict):
    t0 = time.perf_counter()
    failures = [n for n in corpus.names() if not equivalent(run_stack(corpus.load(n)), run_stack(optimize_rle(corpus.load(n))), "strict")]
    verdict(6, not failures, f"{len(corpus.names())} programs; differing={failures}", t0)


def _interleaves(trace) -> bool:
    tasks = [e.task for e in trace.events if e.kind in ("read-global", "write-global") and e.task]
    runs = [t for i, t in enumerate(tasks) if i == 0 or tasks[i - 1] != t]
    return len(runs) > 2


def test_criterion_7_race_detection_coherence(verdict):
    t0 = time.perf_counter()
    racy_rows = []
    explore(
        corpus.load("racy"),
        ModelConfig("funcsched"),
        on_schedule=lambda o, t: racy_rows.append((_interleaves(t), bool(detect_races(t)))),
    )
    interleaved = [raced for inter, raced in racy_rows if inter]
    clean = {}
    names = ["msg"] + [n for n in corpus.names() if _is_sequential(corpus.load(n))]
    for name in names:
        config = ModelConfig("objsched") if name == "msg" else ModelConfig("funcsched")
        counts = []
        explore(corpus.load(name), config, on_schedule=lambda o, t: counts.append(len(detect_races(t))))
        clean[name] = sum(counts)
    ok = bool(interleaved) and all(interleaved) and not any(clean.values())
    verdict(
        7,
        ok,
        f"racy: {len(interleaved)} interleaving schedules all racy={all(interleaved)}; "
        f"race-free programs {names} total races={sum(clean.values())}",
        t0,
    )


def test_criterion_8_deadlock_reporting(verdict, capsys):
    t0 = time.perf_counter()
    rows = []
    for name, length in CYCLE_LENGTHS.items():
        argv = ["run", str(corpus.path(name)), "--model", "objsched", "--opolicy", "fifo", "--mpolicy", "exclusive-inline"]
        code = main(argv)
        err = capsys.readouterr().err
        cycles = []
        explore(corpus.load(name), ModelConfig("objsched", opolicy="fifo"), on_schedule=lambda o, t: cycles.append(o.status))
        every = bool(cycles) and all(s.kind == "deadlock" and len(s.cycle) == length for s in cycles)
        rows.append((name, code == 2 and f"wait-for cycle ({length})" in err and every, len(cycles)))
    ok = all(r[1] for r in rows)
    verdict(8, ok, "; ".join(f"{n}: exit 2 + cycle length {CYCLE_LENGTHS[n]} on {k} schedules={good}" for n, good, k in rows), t0)


def test_criterion_9_round_trip_and_validation(verdict, capsys, tmp_path):
    t0 = time.perf_counter()
    names = corpus.names()
    trips = sum(1 for n in names if parse(pretty_print(parse(corpus.source(n)))) == parse(corpus.source(n)))
    valid = 0
    for n in names:
        out = tmp_path / f"{n}.oek"
        if main(["opt", str(corpus.path(n)), "-o", str(out)]) == 0:
            load(out.read_text())
            valid += 1
    capsys.readouterr()
    verdict(9, trips == valid == len(names), f"round-trip {trips}/{len(names)}; opt output validates {valid}/{len(names)}", t0)


def test_criterion_10_parallel_smoke(verdict):
    t0 = time.perf_counter()
    program = corpus.load("msg")
    _, reference = run_objsched(program, "fifo", "exclusive-inline")
    requests = sum(1 for e in reference.events if e.kind == "req-submit" and e.name == "inc")
    bad = 0
    for _ in range(PARALLEL_REPS):
        outcome, _ = run_objsched(program, "parallel:4", "exclusive-inline")
        if outcome.status.kind != "completed" or outcome.globals_final["count"] != requests:
            bad += 1
    verdict(10, bad == 0, f"msg under parallel:4, {PARALLEL_REPS} runs, count != {requests} requests in {bad}", t0)
