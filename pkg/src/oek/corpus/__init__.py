"""Example OEK programs used by the tests, the acceptance suite and the README."""

from __future__ import annotations

from pathlib import Path

CORPUS_DIR = Path(__file__).parent
INVALID_DIR = CORPUS_DIR / "invalid"


def names() -> list[str]:
    """Names of the valid corpus programs, sorted."""
    return sorted(p.stem for p in CORPUS_DIR.glob("*.oek"))


def path(name: str) -> Path:
    return CORPUS_DIR / f"{name}.oek"


def source(name: str) -> str:
    return path(name).read_text(encoding="utf-8")


def load(name: str):
    from oek.ir import load as _load

    return _load(source(name))
