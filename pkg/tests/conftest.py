from __future__ import annotations

import pytest

from oek import corpus


@pytest.fixture(params=corpus.names())
def corpus_name(request):
    return request.param


def load(name):
    return corpus.load(name)
