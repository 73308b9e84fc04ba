"""Controlled prompt corruption with a quantifiable chaos score.

Corruption applies three operator families in a fixed order: character
typos (substitute / transpose / insert, rate r_spell), word-order
shuffling (rate r_shuffle), and character deletion (rate r_remove).
Rates scale linearly with the target chaos level tau in [0, 100]:

    r_spell = 0.5 * tau / 100
    r_shuffle = 0.7 * tau / 100
    r_remove = 0.2 * tau / 100

The chaos score of a perturbed string is the normalized Levenshtein
distance min(100, L(orig, pert) / max(|orig|, |pert|) * 100). For a
target level, a fixed number of candidates is generated from one seeded
stream and the candidate whose score lands closest to the target wins
(earliest candidate on ties).

Randomness comes from SplitMix64, a tiny published 64-bit generator, so
(seed, input, config) fully determine the output bytes on every
platform. Uniform doubles take the top 53 bits of one draw; bounded
integers use rejection sampling on the low-bias threshold. The literal
"[SEP]" delimiter and a trailing period are exempt from every operator,
so corrupted batches stay splittable and sentence-shaped.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

__all__ = [
    "SplitMix64",
    "ChaosConfig",
    "RateSchedule",
    "levenshtein",
    "chaos_score",
    "rate_schedule",
    "perturb_once",
    "generate_chaos",
]

_MASK64 = (1 << 64) - 1
_SEP = "[SEP]"
_LETTERS = string.ascii_lowercase


class SplitMix64:
    """SplitMix64 stream (Steele, Lea & Flood's 2014 mix function).

    Reference vectors, checked in the test suite:
      seed 0       -> E220A8397B1DCDAF, 6E789E6AA1B965F4, 06C45D188009454F
      seed 1234567 -> 599ED017FB08FC85, 2C73F08458540FA5
    """

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n), bias-free via rejection."""
        if n <= 0:
            raise ValueError(f"below() needs n >= 1, got {n}")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def chance(self, p: float) -> bool:
        """Bernoulli(p); always consumes exactly one draw."""
        return self.random() < p

    def letter(self) -> str:
        return _LETTERS[self.below(26)]


@dataclass(frozen=True)
class RateSchedule:
    r_spell: float
    r_shuffle: float
    r_remove: float

    def __post_init__(self):
        for name in ("r_spell", "r_shuffle", "r_remove"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class ChaosConfig:
    """Target level, candidate count, seed, and optional rate overrides."""

    tau: float
    candidates: int = 50
    seed: int = 0
    rates: RateSchedule | None = None

    def __post_init__(self):
        if not (0.0 <= self.tau <= 100.0):
            raise ValueError(f"target chaos level must lie in [0, 100], got {self.tau}")
        if self.candidates < 1:
            raise ValueError(f"candidate count must be >= 1, got {self.candidates}")


def levenshtein(a: str, b: str) -> int:
    """Unit-cost insert/delete/substitute distance over code points."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            cur[j] = min(
                prev[j] + 1,  # delete
                cur[j - 1] + 1,  # insert
                prev[j - 1] + (ca != cb),  # substitute
            )
        prev = cur
    return prev[-1]


def chaos_score(orig: str, pert: str) -> float:
    """Normalized Levenshtein distance in [0, 100]; zero iff equal."""
    if not orig:
        raise ValueError("original string must be non-empty")
    return min(100.0, levenshtein(orig, pert) / max(len(orig), len(pert)) * 100.0)


def rate_schedule(tau: float) -> RateSchedule:
    """Operator rates for a target level; exact at the documented points."""
    if not (0.0 <= tau <= 100.0):
        raise ValueError(f"target chaos level must lie in [0, 100], got {tau}")
    return RateSchedule(
        r_spell=0.5 * tau / 100.0,
        r_shuffle=0.7 * tau / 100.0,
        r_remove=0.2 * tau / 100.0,
    )


def _sep_spans(s: str) -> list[tuple[int, int]]:
    spans = []
    start = 0
    while True:
        i = s.find(_SEP, start)
        if i < 0:
            return spans
        spans.append((i, i + len(_SEP)))
        start = i + len(_SEP)


def _exempt_mask(s: str) -> list[bool]:
    mask = [False] * len(s)
    for lo, hi in _sep_spans(s):
        for i in range(lo, hi):
            mask[i] = True
    return mask


def _typo_pass(s: str, rate: float, rng: SplitMix64) -> str:
    exempt = _exempt_mask(s)
    out: list[str] = []
    i = 0
    while i < len(s):
        c = s[i]
        if exempt[i] or not rng.chance(rate):
            out.append(c)
            i += 1
            continue
        op = rng.below(3)
        if op == 0:  # substitute
            out.append(rng.letter())
            i += 1
        elif op == 1:  # transpose with next, when a non-exempt next exists
            if i + 1 < len(s) and not exempt[i + 1]:
                out.append(s[i + 1])
                out.append(c)
                i += 2
            else:
                out.append(c)
                i += 1
        else:  # insert after
            out.append(c)
            out.append(rng.letter())
            i += 1
    return "".join(out)


def _shuffle_pass(s: str, rate: float, rng: SplitMix64) -> str:
    tokens = s.split()
    movable = [i for i, t in enumerate(tokens) if t != _SEP]
    for i in movable:
        if not rng.chance(rate):
            continue
        others = [j for j in movable if j != i]
        if not others:
            continue
        j = others[rng.below(len(others))]
        tokens[i], tokens[j] = tokens[j], tokens[i]
    return " ".join(tokens)


def _delete_pass(s: str, rate: float, rng: SplitMix64) -> str:
    exempt = _exempt_mask(s)
    return "".join(
        c for i, c in enumerate(s) if exempt[i] or not rng.chance(rate)
    )


def perturb_once(s: str, rates: RateSchedule, rng: SplitMix64) -> str:
    """One corruption pass: typos, then word shuffling, then deletion.

    "[SEP]" tokens and a trailing period survive untouched; everything
    else is fair game. Deterministic given the generator state.
    """
    trailing = ""
    body = s
    if body.endswith("."):
        body, trailing = body[:-1], "."
    body = _typo_pass(body, rates.r_spell, rng)
    body = _shuffle_pass(body, rates.r_shuffle, rng)
    body = _delete_pass(body, rates.r_remove, rng)
    return body + trailing


def generate_chaos(orig: str, cfg: ChaosConfig) -> tuple[str, float]:
    """Best-of-N corruption: the candidate scoring closest to the target.

    All candidates come from one SplitMix64 stream seeded with
    cfg.seed, consumed sequentially, so (seed, input, config) pins the
    result. Ties on |score - tau| go to the earliest candidate.
    """
    if not orig:
        raise ValueError("original string must be non-empty")
    rates = cfg.rates if cfg.rates is not None else rate_schedule(cfg.tau)
    rng = SplitMix64(cfg.seed)
    best: tuple[float, str, float] | None = None
    for _ in range(cfg.candidates):
        cand = perturb_once(orig, rates, rng)
        score = chaos_score(orig, cand)
        gap = abs(score - cfg.tau)
        if best is None or gap < best[0]:
            best = (gap, cand, score)
    assert best is not None
    return best[1], best[2]
