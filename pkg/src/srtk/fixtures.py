"""Access to the data fixtures shipped inside the package."""

from __future__ import annotations

import json
from pathlib import Path

from .prompts import Lexicon

_DATA = Path(__file__).parent / "data"


def golden_prompts() -> dict:
    """Canonical prompt strings, regularization pairs, and the corrupted
    prompt reference set."""
    return json.loads((_DATA / "golden_prompts.json").read_text(encoding="utf-8"))


def lexicon_path(name: str) -> Path:
    p = _DATA / "lexicons" / f"{name}.json"
    if not p.exists():
        available = sorted(q.stem for q in (_DATA / "lexicons").glob("*.json"))
        raise FileNotFoundError(f"no lexicon {name!r}; shipped: {available}")
    return p


def load_lexicon(name: str) -> Lexicon:
    """One of the shipped lexicons: abdominal, cardiac, brain, polyp."""
    return Lexicon.load(lexicon_path(name))


def meta_prompt_path() -> Path:
    return _DATA / "meta_prompt.txt"
