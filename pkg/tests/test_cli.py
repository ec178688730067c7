from __future__ import annotations

import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from oek import corpus
from oek.cli import main
from oek.ir import load
from oek.trace import Trace

GOLDEN = Path(__file__).parent / "golden"
REGEN = os.environ.get("OEK_REGEN_GOLDEN") == "1"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def prog(name):
    return corpus.path(name)


def _golden(name: str, text: str) -> None:
    path = GOLDEN / name
    if REGEN:
        path.write_text(text)
    assert path.exists(), f"missing golden file {path.name}; rerun with OEK_REGEN_GOLDEN=1"
    assert text == path.read_text()


@pytest.mark.parametrize("model", ["stack", "objsched"])
def test_run_golden(capsys, corpus_name, model):
    code, out, err = run(capsys, "run", prog(corpus_name), "--model", model)
    _golden(f"{corpus_name}.{model}.txt", f"exit {code}\n--- stdout\n{out}--- stderr\n{err}")


def test_run_fact(capsys):
    code, out, _ = run(capsys, "run", prog("fact"))
    assert (code, out) == (0, "120\n")


def test_run_deadlock(capsys):
    code, _, err = run(capsys, "run", prog("deadlock"), "--model", "objsched", "--opolicy", "fifo", "--mpolicy", "exclusive-inline")
    assert code == 2
    assert "wait-for cycle (4)" in err


def test_run_exit_codes(capsys, tmp_path):
    assert run(capsys, "run", prog("divzero"))[0] == 1
    spin = tmp_path / "spin.oek"
    spin.write_text("func main() { while (true) { } }")
    assert run(capsys, "run", spin, "--steps", "20")[0] == 3


def test_parse_error_exit(capsys):
    code, _, err = run(capsys, "run", corpus.INVALID_DIR / "broken.oek")
    assert code == 65
    assert "broken.oek:3:11: parse error" in err


def test_validation_errors_all_reported(capsys):
    code, _, err = run(capsys, "run", corpus.INVALID_DIR / "undefined.oek")
    assert code == 65
    assert "undefined function f" in err and "undefined field b" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "FACT", "--mpolicy", "concurrent"],
        ["run", "FACT", "--opolicy", "fifo", "--model", "funcsched"],
        ["run", "FACT", "--fpolicy", "fifo"],
        ["run", "FACT", "--model", "funcsched", "--fpolicy", "bogus"],
        ["run", "FACT", "--trace", "t.jsonl"],
        ["run", "FACT", "--steps", "0"],
        ["run", "missing.oek"],
        ["explore", "FACT", "--model", "funcsched", "--fpolicy", "parallel:2"],
        ["compare", "FACT", "--a", "model=stack,color=red"],
    ],
)
def test_usage_errors(capsys, argv):
    argv = [str(prog("fact")) if a == "FACT" else a for a in argv]
    code, out, err = run(capsys, *argv)
    assert code == 64
    assert out == "" and err.startswith("oek: error:")


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["run", "x.oek", "--model", "warp"]])
def test_argparse_usage_exit_code(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 64


def test_run_json_report(capsys):
    code, out, _ = run(capsys, "run", prog("bank"), "--model", "objsched", "--seed", "3", "--json")
    data = json.loads(out)
    assert code == 0
    assert data["command"] == "run"
    assert data["config"] == {
        "model": "objsched",
        "seed": 3,
        "fpolicy": "inline",
        "opolicy": "fifo",
        "mpolicy": "exclusive-inline",
    }
    assert data["step_limit"] == 1_000_000
    assert data["outcome"]["prints"] == [70, 130]
    assert data["outcome"]["globals_final"] == {"total": 200}


def test_summary_echoes_seed_and_limit(capsys):
    _, _, err = run(capsys, "run", prog("racy"), "--model", "funcsched", "--fpolicy", "random", "--seed", "5", "--steps", "999")
    assert "seed=5" in err and "step_limit=999" in err


def test_run_writes_trace(capsys, tmp_path):
    path = tmp_path / "racy.jsonl"
    code, _, _ = run(capsys, "run", prog("racy"), "--model", "funcsched", "--fpolicy", "random", "--seed", "2", "--trace", path)
    assert code == 0
    trace = Trace.read(path)
    assert trace.header["seed"] == 2 and trace.header["model"] == "funcsched"
    assert trace.events[0].kind == "task-start"


def test_compare(capsys):
    assert run(capsys, "compare", prog("fact"), "--a", "model=stack", "--b", "model=inline")[0] == 0
    code, out, _ = run(capsys, "compare", prog("racy"), "--a", "model=funcsched,fpolicy=inline", "--b", "model=funcsched,fpolicy=random,seed=2")
    assert code == 10
    assert "@g" in out
    code, _, _ = run(
        capsys, "compare", prog("counter"), "--a", "model=stack",
        "--b", "model=objsched,opolicy=fifo,mpolicy=exclusive-inline", "--mode", "confluent",
    )
    assert code == 0


def test_compare_json(capsys):
    code, out, _ = run(capsys, "compare", prog("racy"), "--b", "model=funcsched,fpolicy=random,seed=2", "--json")
    data = json.loads(out)
    assert code == 10 and data["equal"] is False and "@g" in data["diff"]
    assert data["a"]["config"]["model"] == "stack"


def test_explore_exit_codes(capsys):
    code, out, _ = run(capsys, "explore", prog("msg"))
    assert code == 0 and '"count": 2' in out
    code, out, _ = run(capsys, "explore", prog("racy"))
    assert code == 11 and "race on @g" in out
    code, out, _ = run(capsys, "explore", prog("bank"), "--max-schedules", "5")
    assert code == 12 and "truncated: true" in out


def test_explore_json(capsys):
    code, out, _ = run(capsys, "explore", prog("racy"), "--json", "--max-steps", "300")
    report = json.loads(out)["report"]
    assert code == 11
    assert report["truncated"] is False and report["max_steps"] == 300
    assert {s[0]["g"] for s in report["final_stores"]} == {1, 2}
    assert report["races"]


def test_opt(capsys, tmp_path):
    out_path = tmp_path / "sw.oek"
    code, out, _ = run(capsys, "opt", prog("spinwait"), "-o", out_path)
    assert code == 0 and "hoisted 1" in out
    load(out_path.read_text())
    code, out, err = run(capsys, "opt", prog("fact"))
    assert code == 0 and "eliminated 0" in err and "hoisted 0" in err
    assert load(out) == corpus.load("fact")


def test_opt_output_validates(capsys, corpus_name, tmp_path):
    out_path = tmp_path / "out.oek"
    assert run(capsys, "opt", prog(corpus_name), "-o", out_path)[0] == 0
    load(out_path.read_text())


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "oek", "run", str(prog("fact"))], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "120\n"
