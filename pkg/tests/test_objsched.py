from __future__ import annotations

import pytest

from oek import corpus
from oek.ir import load
from oek.outcome import COMPLETED, DEADLOCK, OekRuntimeError
from oek.sched import OBJSCHED, Runtime, detect_deadlock, run_objsched
from oek.seq import run_stack

OBJECT_POLICIES = ["fifo", "rr:1", "rr:2", "random"]


def _runtime(src, **kw):
    kw.setdefault("opolicy", "fifo")
    return Runtime(load(src), model=OBJSCHED, **kw)


def _obj(rt, type_name):
    return next(o for o in rt.objects.values() if o.ref.type == type_name)


def test_inline_exclusive_equals_stack(corpus_name):
    program = corpus.load(corpus_name)
    outcome, _ = run_objsched(program, "inline", "exclusive-inline")
    assert outcome.canonical() == run_stack(program).canonical()


@pytest.mark.parametrize("opolicy", OBJECT_POLICIES)
def test_counter_prints_two_under_exclusive(opolicy):
    for seed in range(10):
        outcome, _ = run_objsched(corpus.load("counter"), opolicy, "exclusive-inline", seed)
        assert list(outcome.prints) == [2]


def test_counter_concurrent_can_lose_an_update():
    finals = {
        run_objsched(corpus.load("counter"), "random", "concurrent", s)[0].print_lines()[0] for s in range(30)
    }
    assert finals == {"1", "2"}


COUNTER = """
object Counter {
  field c = 0;
  method inc() { var t = self.c; self.c = t + 1; }
  method get() { return self.c; }
  method three() { var a = 1; var b = 2; var d = 3; }
}
func main() { var c = new Counter(); }
"""


def _counter_runtime(**kw):
    rt = _runtime(COUNTER, **kw)
    rt.run_task(rt.root)
    return rt, _obj(rt, "Counter")


def test_submit_request_get_on_fresh_object():
    rt, c = _counter_runtime()
    hs = rt.submit_request(c.ref, "get", [])
    assert c.pending == type(c.pending)() and c.holder is not None
    assert rt.object_step(c) == "quiescent"
    assert hs.resolved and hs.value == 0


def test_submit_request_unknown_method():
    rt, c = _counter_runtime()
    with pytest.raises(OekRuntimeError, match="no method nope on Counter"):
        rt.submit_request(c.ref, "nope", [])
    with pytest.raises(OekRuntimeError, match="arity"):
        rt.submit_request(c.ref, "get", [1])


def test_exclusive_admits_in_submission_order():
    rt, c = _counter_runtime()
    h1 = rt.submit_request(c.ref, "inc", [])
    h2 = rt.submit_request(c.ref, "get", [])
    assert [r.reply for r in c.pending] == [h2]
    assert rt.object_step(c) == "progressed"
    assert h1.resolved and not h2.resolved
    assert rt.object_step(c) == "quiescent"
    assert h2.value == 1
    admits = [e.value for e in rt.recorder.events if e.kind == "req-admit"]
    assert admits == [h1.ref.id, h2.ref.id]


def test_one_pending_request_runs_to_completion_in_one_step():
    rt, c = _counter_runtime()
    hs = rt.submit_request(c.ref, "three", [])
    assert rt.object_step(c) == "quiescent"
    assert hs.resolved


def test_round_robin_quantum_one_needs_three_selections():
    rt, c = _counter_runtime(opolicy="rr:1")
    hs = rt.submit_request(c.ref, "three", [])
    reports = []
    while not hs.resolved:
        reports.append(rt.object_step(c, 1))
    assert len(reports) == 3
    assert reports[-1] == "quiescent"


def test_stepping_a_quiescent_object_asserts():
    rt, c = _counter_runtime()
    with pytest.raises(AssertionError):
        rt.object_step(c)


def test_interleaved_admits_next_request_when_holder_blocks():
    src = """
    object Ping {
      field hits = 0;
      method start(pong, me) { h = req pong.ball(me); v = await h; return v; }
      method back() { return 10; }
    }
    object Pong { method ball(ping) { h = req ping.back(); v = await h; return v; } }
    func main() { var p = new Ping(); var q = new Pong(); }
    """
    rt = _runtime(src, mpolicy="interleaved")
    rt.run_task(rt.root)
    ping, pong = _obj(rt, "Ping"), _obj(rt, "Pong")
    h = rt.submit_request(ping.ref, "start", [pong.ref, ping.ref])
    assert rt.object_step(ping) == "blocked"  # start awaits the ball
    assert rt.object_step(pong) == "blocked"  # ball awaits back on Ping
    # Ping's holder is blocked, so the back request is admitted and runs
    assert ping.holder is not None and ping.holder.name.endswith("back")
    assert rt.object_step(ping) == "progressed"
    assert rt.object_step(pong) == "quiescent"
    assert rt.object_step(ping) == "quiescent"
    assert h.value == 10


@pytest.mark.parametrize("name, length", [("selfwait", 2), ("deadlock", 4), ("pingpong", 4)])
def test_exclusive_deadlocks_with_cycle(name, length):
    for opolicy in OBJECT_POLICIES:
        outcome, _ = run_objsched(corpus.load(name), opolicy, "exclusive-inline")
        assert outcome.status.kind == DEADLOCK
        assert len(outcome.status.cycle) == length


def test_selfwait_cycle_names():
    outcome, _ = run_objsched(corpus.load("selfwait"), "fifo", "exclusive-inline")
    assert outcome.status.cycle == ("A#1.m1[t1]", "reply(A#1.m2)[h2]")


def test_deadlock_cycle_names():
    outcome, _ = run_objsched(corpus.load("deadlock"), "fifo", "exclusive-inline")
    assert outcome.status.cycle == (
        "Node#1.go[t1]",
        "reply(Node#2.relay)[h2]",
        "Node#2.relay[t2]",
        "reply(Node#1.poke)[h3]",
    )


@pytest.mark.parametrize("name", ["selfwait", "deadlock", "pingpong"])
@pytest.mark.parametrize("mpolicy", ["interleaved", "concurrent"])
def test_releasing_policies_complete(name, mpolicy):
    outcome, _ = run_objsched(corpus.load(name), "fifo", mpolicy)
    assert outcome.status.kind == COMPLETED
    assert outcome.prints == run_stack(corpus.load(name)).prints


def test_detect_deadlock_none_when_completed():
    rt = Runtime(corpus.load("counter"), model=OBJSCHED, opolicy="fifo")
    rt.run()
    assert detect_deadlock(rt) is None


def test_reply_resolved_exactly_once():
    for name in ("counter", "msg", "bank", "pingpong"):
        _, trace = run_objsched(corpus.load(name), "random", "interleaved", seed=3)
        submits = [e.value for e in trace.events if e.kind == "req-submit"]
        replies = [e.value for e in trace.events if e.kind == "req-reply"]
        assert sorted(submits) == sorted(replies)


@pytest.mark.parametrize("opolicy", OBJECT_POLICIES)
def test_seed_determinism(opolicy):
    program = corpus.load("bank")
    for seed in range(3):
        a, ta = run_objsched(program, opolicy, "interleaved", seed)
        b, tb = run_objsched(program, opolicy, "interleaved", seed)
        assert a.canonical() == b.canonical() and ta.to_jsonl() == tb.to_jsonl()


def test_posted_functions_can_be_scheduled_too():
    outcome, _ = run_objsched(corpus.load("msg"), "fifo", "exclusive-inline", fpolicy="fifo")
    assert list(outcome.prints) == [2]


def test_msg_parallel_smoke():
    for _ in range(50):
        outcome, _ = run_objsched(corpus.load("msg"), "parallel:4", "exclusive-inline")
        assert outcome.status.kind == COMPLETED and list(outcome.prints) == [2]


def test_bank_parallel():
    for _ in range(20):
        outcome, _ = run_objsched(corpus.load("bank"), "parallel:2", "interleaved")
        assert outcome.globals_final == {"total": 200}
