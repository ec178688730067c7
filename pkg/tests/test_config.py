from __future__ import annotations

import pytest

from oek import corpus
from oek.config import ModelConfig, parse_config, run_config
from oek.policies import PolicyError


def test_defaults():
    assert ModelConfig().to_json() == {"model": "stack", "seed": 0}
    assert ModelConfig("funcsched").resolved().fpolicy == "fifo"
    obj = ModelConfig("objsched").resolved()
    assert (obj.fpolicy, obj.opolicy, obj.mpolicy) == ("inline", "fifo", "exclusive-inline")


def test_parse_config():
    c = parse_config("model=funcsched,fpolicy=random,seed=3")
    assert (c.model, c.fpolicy, c.seed) == ("funcsched", "random", 3)
    assert parse_config("model=objsched,opolicy=round-robin:2").opolicy == "rr:2"
    assert str(parse_config("model=objsched,mpolicy=exclusive")) == (
        "model=objsched,seed=0,fpolicy=inline,opolicy=fifo,mpolicy=exclusive-inline"
    )


@pytest.mark.parametrize(
    "kw",
    [
        dict(model="stack", mpolicy="concurrent"),
        dict(model="funcsched", opolicy="fifo"),
        dict(model="inline", fpolicy="fifo"),
        dict(model="nope"),
        dict(model="funcsched", fpolicy="rr:2"),
        dict(model="objsched", mpolicy="eager"),
    ],
)
def test_invalid_combinations(kw):
    with pytest.raises(PolicyError):
        ModelConfig(**kw)


@pytest.mark.parametrize("text", ["model", "color=red", "seed=x"])
def test_bad_config_text(text):
    with pytest.raises(PolicyError):
        parse_config(text)


def test_parallel_flag():
    assert ModelConfig("objsched", opolicy="parallel:4").parallel
    assert not ModelConfig("objsched", opolicy="fifo").parallel


def test_run_config_models():
    program = corpus.load("fact")
    for model in ("stack", "inline", "funcsched", "objsched"):
        outcome, trace = run_config(program, ModelConfig(model))
        assert list(outcome.prints) == [120]
        assert (trace is None) == (model in ("stack", "inline"))
