from __future__ import annotations

from oek import corpus
from oek.analysis import equivalent, optimize, optimize_rle
from oek.ir import ast as A, load, parse, pretty_print
from oek.seq import run_stack


def test_fact_is_identity():
    program = corpus.load("fact")
    result = optimize(program)
    assert (result.eliminated, result.hoisted) == (0, 0)
    assert result.program == program
    assert pretty_print(result.program) == pretty_print(program)


def test_spinwait_hoists_one_load():
    result = optimize(corpus.load("spinwait"))
    assert (result.eliminated, result.hoisted) == (0, 1)
    waiter = result.program.functions["waiter"]
    decl, loop = waiter.body[0], waiter.body[1]
    assert isinstance(decl, A.VarDecl) and decl.expr == A.GlobalRead("flag")
    assert isinstance(loop, A.While)
    assert not any(isinstance(e, A.GlobalRead) for e in A.walk_expr(loop.cond))


def test_repeated_reads_are_cached():
    src = "global g = 4; func main() { var a = @g; var b = @g + @g; print a + b; }"
    result = optimize(load(src))
    assert result.eliminated == 2
    text = pretty_print(result.program)
    assert text.count("@g") == 1
    assert equivalent(run_stack(load(src)), run_stack(result.program))


def test_write_splits_cached_runs():
    src = "global g = 1; func main() { print @g; @g = 5; print @g; }"
    result = optimize(load(src))
    assert result.eliminated == 0


def test_scheduling_point_blocks_caching():
    src = "global g = 1; func f() { @g = 2; } func main() { print @g; r = call f(); print @g; }"
    result = optimize(load(src))
    assert result.eliminated == 0
    assert list(run_stack(result.program).prints) == [1, 2]


def test_loop_writing_global_is_not_hoisted():
    src = "global g = 0; func main() { while (@g < 3) { @g = @g + 1; } print @g; }"
    result = optimize(load(src))
    assert result.hoisted == 0


def test_loop_with_call_is_not_hoisted():
    src = "global g = 0; func f() { @g = 1; } func main() { while (@g == 0) { r = call f(); } }"
    assert optimize(load(src)).hoisted == 0


def test_fresh_names_avoid_existing_locals():
    src = "global g = 2; func main() { var __rle_g_1 = 7; print @g + @g; print __rle_g_1; }"
    result = optimize(load(src))
    assert "__rle_g_2" in pretty_print(result.program)
    assert list(run_stack(result.program).prints) == [4, 7]


def test_methods_are_optimized():
    src = "global g = 3; object T { method m() { return @g * @g; } } func main() { var o = new T(); h = req o.m(); v = await h; print v; }"
    result = optimize(load(src))
    assert result.eliminated == 1
    assert list(run_stack(result.program).prints) == [9]


def test_sequential_preservation(corpus_name):
    program = corpus.load(corpus_name)
    optimized = optimize_rle(program)
    assert equivalent(run_stack(program), run_stack(optimized), "strict")


def test_output_reparses_and_validates(corpus_name):
    optimized = optimize_rle(corpus.load(corpus_name))
    text = pretty_print(optimized)
    assert parse(text) == optimized.program
    load(text)
