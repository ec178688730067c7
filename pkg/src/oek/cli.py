"""``oek`` command line: run, compare, explore and optimize OEK programs.

Exit codes:
  0   completed / equal / single final store and no races
  1   runtime error
  2   deadlock
  3   step limit exceeded
  10  compare found a difference
  11  explore found several final stores or a race
  12  explore hit a bound (truncated)
  64  usage error
  65  parse or validation error
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from oek.analysis import equivalent, explore, optimize
from oek.analysis.equiv import MODES, STRICT
from oek.analysis.explore import DEFAULT_MAX_SCHEDULES, DEFAULT_MAX_STEPS
from oek.config import MODELS, ModelConfig, parse_config, run_config
from oek.ir import ParseError, ValidationError, ast as A, load, pretty_print
from oek.outcome import COMPLETED, DEADLOCK, DEFAULT_STEP_LIMIT, RUNTIME_ERROR, STEP_LIMIT, Outcome
from oek.policies import PolicyError
from oek.sched import FUNCSCHED, OBJSCHED

EXIT_OK = 0
EXIT_STATUS = {COMPLETED: 0, RUNTIME_ERROR: 1, DEADLOCK: 2, STEP_LIMIT: 3}
EXIT_DIFFERENT = 10
EXIT_NONDETERMINISTIC = 11
EXIT_TRUNCATED = 12
EXIT_USAGE = 64
EXIT_INVALID = 65


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=MODELS, help="execution model (run: stack)")
    p.add_argument("--fpolicy", help="function policy: inline, fifo, random, parallel:N")
    p.add_argument("--opolicy", help="object policy: inline, fifo, rr:Q, random, parallel:N")
    p.add_argument("--mpolicy", help="method policy: exclusive-inline, interleaved, concurrent")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="oek", description="Run OEK programs under different execution models.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="execute a program")
    run.add_argument("program")
    _add_model_flags(run)
    run.add_argument("--steps", type=int, default=DEFAULT_STEP_LIMIT, help="step limit")
    run.add_argument("--trace", metavar="PATH", help="write the event trace (JSON lines)")
    run.add_argument("--json", action="store_true", help="print a JSON report instead of program output")

    cmp = sub.add_parser("compare", help="run under two configurations and compare outcomes")
    cmp.add_argument("program")
    cmp.add_argument("--a", default="model=stack", help="first config, e.g. model=funcsched,fpolicy=random,seed=3")
    cmp.add_argument("--b", default="model=inline", help="second config")
    cmp.add_argument("--mode", choices=MODES, default=STRICT)
    cmp.add_argument("--steps", type=int, default=DEFAULT_STEP_LIMIT)
    cmp.add_argument("--json", action="store_true")

    exp = sub.add_parser("explore", help="enumerate interleavings")
    exp.add_argument("program")
    _add_model_flags(exp)
    exp.add_argument("--max-schedules", type=int, default=DEFAULT_MAX_SCHEDULES)
    exp.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    exp.add_argument("--json", action="store_true")

    opt = sub.add_parser("opt", help="apply redundant global-load elimination")
    opt.add_argument("program")
    opt.add_argument("-o", "--output", metavar="PATH", help="output file (default: stdout)")
    opt.add_argument("--json", action="store_true")
    return parser


def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            source = fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    return load(source)


def _config(args, default_model: str) -> ModelConfig:
    return ModelConfig(
        model=args.model or default_model,
        fpolicy=args.fpolicy,
        opolicy=args.opolicy,
        mpolicy=args.mpolicy,
        seed=args.seed,
    )


def _positive(value: int, flag: str) -> int:
    if value < 1:
        raise UsageError(f"{flag} must be >= 1")
    return value


def _summary(outcome: Outcome, config: ModelConfig, step_limit: int) -> str:
    lines = [f"status: {outcome.status}", f"steps: {outcome.steps}"]
    if outcome.status.kind == DEADLOCK:
        for b in outcome.status.blocked:
            lines.append(f"  blocked: {b}")
        if outcome.status.cycle:
            lines.append(f"  wait-for cycle ({len(outcome.status.cycle)}): " + " -> ".join(outcome.status.cycle))
    lines.append(f"config: {config} step_limit={step_limit}")
    return "\n".join(lines)


def cmd_run(args) -> int:
    program = _load(args.program)
    config = _config(args, "stack")
    step_limit = _positive(args.steps, "--steps")
    if args.trace and not config.scheduled:
        raise UsageError("--trace needs --model funcsched or objsched")
    outcome, trace = run_config(program, config, step_limit)
    if args.trace:
        trace.write(args.trace)
    if args.json:
        report = {
            "command": "run",
            "config": config.resolved().to_json(),
            "step_limit": step_limit,
            "outcome": outcome.to_json(),
        }
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        for line in outcome.print_lines():
            print(line)
    print(_summary(outcome, config, step_limit), file=sys.stderr)
    return EXIT_STATUS[outcome.status.kind]


def cmd_compare(args) -> int:
    program = _load(args.program)
    step_limit = _positive(args.steps, "--steps")
    a, b = parse_config(args.a), parse_config(args.b)
    oa, _ = run_config(program, a, step_limit)
    ob, _ = run_config(program, b, step_limit)
    result = equivalent(oa, ob, args.mode)
    if args.json:
        report = {
            "command": "compare",
            "mode": args.mode,
            "step_limit": step_limit,
            "a": {"config": a.resolved().to_json(), "outcome": oa.to_json()},
            "b": {"config": b.resolved().to_json(), "outcome": ob.to_json()},
            "equal": result.equal,
            "diff": result.diff,
        }
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print(f"a: {a}: {oa.status}")
        print(f"b: {b}: {ob.status}")
        print(f"{args.mode}: " + ("equal" if result.equal else f"different: {result.diff}"))
    return EXIT_OK if result.equal else EXIT_DIFFERENT


def _has_requests(program) -> bool:
    bodies = [f.body for f in program.program.functions]
    bodies += [m.body for t in program.program.object_types for m in t.methods]
    return any(isinstance(s, A.Req) for body in bodies for s in A.walk_stmts(body))


def cmd_explore(args) -> int:
    program = _load(args.program)
    default = OBJSCHED if _has_requests(program) else FUNCSCHED
    config = _config(args, default)
    if config.parallel:
        raise UsageError("explore needs a deterministic policy, not parallel")
    report = explore(
        program,
        config,
        max_schedules=_positive(args.max_schedules, "--max-schedules"),
        max_steps=_positive(args.max_steps, "--max-steps"),
    )
    if args.json:
        print(json.dumps({"command": "explore", "report": report.to_json()}, indent=2, sort_keys=True))
    else:
        data = report.to_json()
        print(f"config: {config} max_schedules={report.max_schedules} max_steps={report.max_steps}")
        print(f"schedules: {report.schedules}  pruned (unfair): {report.pruned}  truncated: {str(report.truncated).lower()}")
        print(f"statuses: {', '.join(sorted(report.statuses))}")
        print(f"final stores ({len(data['final_stores'])}):")
        for g, objs in data["final_stores"]:
            print("  " + json.dumps({"globals": g, "objects": objs}, sort_keys=True))
        for cycle in data["deadlock_cycles"]:
            print(f"wait-for cycle ({len(cycle)}): " + " -> ".join(cycle))
        print(f"races: {len(report.races)}")
        for race in report.races:
            print(f"  {race}")
    if report.truncated:
        return EXIT_TRUNCATED
    if len(report.final_stores) > 1 or report.races:
        return EXIT_NONDETERMINISTIC
    return EXIT_OK


def cmd_opt(args) -> int:
    program = _load(args.program)
    result = optimize(program)
    text = pretty_print(result.program)
    counts = f"eliminated {result.eliminated} load(s), hoisted {result.hoisted} load(s)"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.json:
        report = {"command": "opt", "eliminated": result.eliminated, "hoisted": result.hoisted, "output": args.output}
        print(json.dumps(report, sort_keys=True), file=sys.stderr if not args.output else sys.stdout)
    else:
        print(counts, file=sys.stdout if args.output else sys.stderr)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "explore": cmd_explore, "opt": cmd_opt}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ParseError as e:
        print(f"{args.program}:{e.line}:{e.col}: parse error: {e.message}", file=sys.stderr)
        return EXIT_INVALID
    except ValidationError as e:
        for err in e.errors:
            print(f"{args.program}:{err.line}:{err.col}: error: {err.message}", file=sys.stderr)
        return EXIT_INVALID
    except (UsageError, PolicyError) as e:
        print(f"oek: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
