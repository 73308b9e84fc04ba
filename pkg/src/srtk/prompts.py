"""Canonical prompt grammar and canonicalizers.

The canonical prompt form is "<Target> in <Site> <Modality>." with a
capitalized target and a trailing period, e.g. "Spleen in abdominal
CT.". Two canonicalizers turn noisy batches into that form:

* a deterministic lexicon canonicalizer, which fuzzy-matches tokens
  against task vocabularies and infers the batch-shared site and
  modality by majority vote, and
* an LLM canonicalizer, which sends a meta-prompt plus the raw batch
  over an injectable HTTP-style transport and re-parses the completion
  (never trusting it blindly).

Lexicon matching, in detail: every token of a sub-prompt (lowercased,
stripped of surrounding punctuation, connective "in" dropped) is
fuzzy-matched against the site and modality vocabularies; the
remaining tokens form the target material, matched as a bag (tokens
sorted, joined and compared against each alias's sorted form, so word
order never matters). A match against an alias of length n tokens is
accepted when the edit distance is at most
min(max_edit_distance * n, len(alias) - 3, capped below at 0 for
token-level matches), which lets "abdomianl" reach "abdominal" while
keeping two-letter modality codes exact-match only. The emitted site
and modality use the alias form that actually matched (first
occurrence across the batch on vote ties), so a batch written with
"abdomen" keeps "abdomen" and one written with "abdominal" keeps
"abdominal". A batch with no site evidence falls back to the lexicon's
default site; a batch with no modality evidence is an error.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import urlparse

from .chaos import levenshtein
from .errors import (
    LexiconError,
    PromptError,
    TransportError,
    TransportExhaustedError,
    UnparseableCompletionError,
)

__all__ = [
    "SEP",
    "DEFAULT_MODALITIES",
    "RawPromptBatch",
    "CanonicalPrompt",
    "Lexicon",
    "MetaPromptConfig",
    "split_batch",
    "parse_canonical",
    "emit_canonical",
    "canonicalize_lexicon",
    "canonicalize_llm",
    "http_transport",
    "join_batch",
]

SEP = "[SEP]"

# Covers every modality token used by the shipped prompt fixtures plus
# the common short codes; parse_canonical accepts any of these
# case-insensitively as the final token.
DEFAULT_MODALITIES = frozenset(
    {
        "ct",
        "mr",
        "mri",
        "t1",
        "t2",
        "flair",
        "us",
        "ultrasound",
        "endoscopes",
        "endoscopy",
        "pet",
        "x-ray",
        "xray",
    }
)

_STOPWORDS = {"in"}
_STRIP_CHARS = ".,;:!?\"'()"


@dataclass(frozen=True)
class RawPromptBatch:
    """Ordered, whitespace-trimmed sub-prompts split on "[SEP]"."""

    prompts: tuple[str, ...]

    def __post_init__(self):
        if not self.prompts:
            raise PromptError("empty batch")
        if any(SEP in p for p in self.prompts):
            raise PromptError("sub-prompts must not contain the [SEP] delimiter")

    def __iter__(self):
        return iter(self.prompts)

    def __len__(self):
        return len(self.prompts)


@dataclass(frozen=True)
class CanonicalPrompt:
    target: str
    site: str
    modality: str

    def __post_init__(self):
        for name in ("target", "site", "modality"):
            if not getattr(self, name).strip():
                raise PromptError(f"canonical prompt field {name!r} must be non-empty")


def split_batch(raw: str) -> RawPromptBatch:
    """Split on the literal "[SEP]", trim, and drop empty fragments."""
    parts = [p.strip() for p in raw.split(SEP)]
    parts = [p for p in parts if p]
    if not parts:
        raise PromptError("empty batch")
    return RawPromptBatch(prompts=tuple(parts))


def join_batch(prompts) -> str:
    return f" {SEP} ".join(prompts)


def parse_canonical(s: str, modalities: frozenset[str] | None = None) -> CanonicalPrompt:
    """Parse "<target> in <site> <modality>[.]".

    The first " in " separates the target from the rest; the last
    whitespace token (before an optional trailing period) must be a
    known modality; everything between is the site. Multi-word targets
    and sites pass through verbatim, so emit(parse(s)) == s for
    well-formed strings.
    """
    vocab = modalities if modalities is not None else DEFAULT_MODALITIES
    text = s.strip()
    if text.endswith("."):
        text = text[:-1]
    idx = text.find(" in ")
    if idx < 0:
        raise PromptError(f"missing ' in ' separator in {s!r}")
    target = text[:idx].strip()
    rest = text[idx + 4 :].strip()
    if not target:
        raise PromptError(f"empty target in {s!r}")
    tokens = rest.split()
    if len(tokens) < 2:
        raise PromptError(f"need at least a site and a modality in {s!r}")
    modality = tokens[-1]
    if modality.lower() not in vocab:
        raise PromptError(f"unrecognized modality token {modality!r} in {s!r}")
    site = " ".join(tokens[:-1])
    return CanonicalPrompt(target=target, site=site, modality=modality)


def emit_canonical(p: CanonicalPrompt) -> str:
    """Render the canonical string with capitalized target and period."""
    target = p.target[0].upper() + p.target[1:]
    return f"{target} in {p.site} {p.modality}."


# --- lexicon canonicalizer ---


@dataclass(frozen=True)
class _Entry:
    """One vocabulary entry: a display form plus alias forms."""

    display: str
    aliases: tuple[str, ...]  # includes the display form, stored casing


@dataclass(frozen=True)
class Lexicon:
    """Task vocabularies for targets, sites, and modalities.

    Aliases are matched case-insensitively; the matched alias's stored
    form is what gets emitted. Vocabularies must be pairwise disjoint
    after lowercasing.
    """

    targets: tuple[_Entry, ...]
    sites: tuple[_Entry, ...]
    modalities: tuple[_Entry, ...]
    default_site: str | None = None
    max_edit_distance: int = 2

    def __post_init__(self):
        pools = {
            "targets": {a.lower() for e in self.targets for a in e.aliases},
            "sites": {a.lower() for e in self.sites for a in e.aliases},
            "modalities": {a.lower() for e in self.modalities for a in e.aliases},
        }
        names = list(pools)
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                overlap = pools[a] & pools[b]
                if overlap:
                    raise LexiconError(
                        f"vocabularies {a} and {b} overlap: {sorted(overlap)}"
                    )
        if not self.targets:
            raise LexiconError("lexicon needs at least one target entry")
        if self.max_edit_distance < 0:
            raise LexiconError("max_edit_distance must be >= 0")

    def modality_vocab(self) -> frozenset[str]:
        return frozenset(a.lower() for e in self.modalities for a in e.aliases)

    @classmethod
    def load(cls, path: str | Path) -> "Lexicon":
        """Load from JSON: {"targets": {"display": [aliases...]}, "sites":
        ..., "modalities": ..., "default_site": ..., "max_edit_distance": ...}."""
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise LexiconError(f"lexicon file is not valid JSON: {e}") from None
        if not isinstance(obj, dict):
            raise LexiconError("lexicon file must be a JSON object")

        def entries(key: str) -> tuple[_Entry, ...]:
            section = obj.get(key, {})
            if not isinstance(section, dict):
                raise LexiconError(f"lexicon section {key!r} must be an object")
            out = []
            for display, aliases in section.items():
                if not isinstance(aliases, list):
                    raise LexiconError(f"{key}[{display!r}] must be an alias list")
                forms = [display] + [a for a in aliases if a != display]
                out.append(_Entry(display=display, aliases=tuple(forms)))
            return tuple(out)

        return cls(
            targets=entries("targets"),
            sites=entries("sites"),
            modalities=entries("modalities"),
            default_site=obj.get("default_site"),
            max_edit_distance=int(obj.get("max_edit_distance", 2)),
        )


def _clean_token(tok: str) -> str:
    return tok.strip(_STRIP_CHARS).lower()


def _token_budget(alias: str, max_edit: int) -> int:
    return min(max_edit, max(0, len(alias) - 3))


def _bag_budget(alias: str, max_edit: int) -> int:
    n_tokens = max(1, len(alias.split()))
    return min(max_edit * n_tokens, max(0, len(alias) - 3))


def _best_token_match(token: str, entries: tuple[_Entry, ...], max_edit: int):
    """Closest (entry, alias) for one token, or None. Ties keep the
    first (entry order, then alias order), which is deterministic."""
    best = None
    for ei, entry in enumerate(entries):
        for ai, alias in enumerate(entry.aliases):
            d = levenshtein(token, alias.lower())
            if d > _token_budget(alias.lower(), max_edit):
                continue
            key = (d, ei, ai)
            if best is None or key < best[0]:
                best = (key, entry, alias)
    return None if best is None else (best[1], best[2], best[0][0])


def _best_bag_match(tokens: list[str], entries: tuple[_Entry, ...], max_edit: int):
    """Closest target entry for a bag of tokens, order-insensitive."""
    joined = " ".join(sorted(tokens))
    best = None
    for ei, entry in enumerate(entries):
        for ai, alias in enumerate(entry.aliases):
            alias_join = " ".join(sorted(alias.lower().split()))
            d = levenshtein(joined, alias_join)
            if d > _bag_budget(alias.lower(), max_edit):
                continue
            key = (d, ei, ai)
            if best is None or key < best[0]:
                best = (key, entry, alias)
    return None if best is None else (best[1], best[2], best[0][0])


def canonicalize_lexicon(batch: RawPromptBatch, lex: Lexicon) -> list[CanonicalPrompt]:
    """Deterministic canonicalization; see the module docstring.

    Idempotent: running the output through again is a fixed point.
    Raises PromptError when a sub-prompt yields no target or the batch
    carries no modality evidence.
    """
    site_votes: Counter[str] = Counter()  # keyed by matched alias form
    modality_votes: Counter[str] = Counter()
    site_order: list[str] = []
    modality_order: list[str] = []
    residuals: list[list[str]] = []

    for prompt in batch:
        residual: list[str] = []
        for raw_tok in prompt.split():
            tok = _clean_token(raw_tok)
            if not tok or tok in _STOPWORDS:
                continue
            m = _best_token_match(tok, lex.modalities, lex.max_edit_distance)
            s = _best_token_match(tok, lex.sites, lex.max_edit_distance)
            if m is not None and s is not None:
                # keep only the globally closer vocabulary; modality wins ties
                if s[2] < m[2]:
                    m = None
                else:
                    s = None
            if m is not None:
                _, alias, _ = m
                modality_votes[alias] += 1
                if alias not in modality_order:
                    modality_order.append(alias)
                continue
            if s is not None:
                _, alias, _ = s
                site_votes[alias] += 1
                if alias not in site_order:
                    site_order.append(alias)
                continue
            residual.append(tok)
        residuals.append(residual)

    if not modality_votes:
        raise PromptError("batch carries no modality evidence")
    modality = max(
        modality_votes, key=lambda a: (modality_votes[a], -modality_order.index(a))
    )
    if site_votes:
        site = max(site_votes, key=lambda a: (site_votes[a], -site_order.index(a)))
    elif lex.default_site is not None:
        site = lex.default_site
    else:
        raise PromptError("batch carries no site evidence and the lexicon "
                          "declares no default site")

    out: list[CanonicalPrompt] = []
    for prompt, residual in zip(batch, residuals):
        if not residual:
            raise PromptError(f"no target match in sub-prompt {prompt!r}")
        t = _best_bag_match(residual, lex.targets, lex.max_edit_distance)
        if t is None:
            raise PromptError(f"no target match in sub-prompt {prompt!r}")
        _, alias, _ = t
        out.append(CanonicalPrompt(target=alias, site=site, modality=modality))
    return out


# --- LLM canonicalizer ---


@dataclass(frozen=True)
class MetaPromptConfig:
    """Everything needed to reach the canonicalization LLM."""

    meta_prompt: str
    endpoint: str
    model: str
    timeout: float = 30.0
    retry: int = 2

    def __post_init__(self):
        parsed = urlparse(self.endpoint)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise ValueError(f"endpoint is not a well-formed URL: {self.endpoint!r}")
        if self.timeout <= 0:
            raise ValueError(f"timeout must be positive, got {self.timeout}")
        if self.retry < 0:
            raise ValueError(f"retry count must be >= 0, got {self.retry}")

    @classmethod
    def load(cls, path: str | Path, default_meta_prompt: str | None = None) -> "MetaPromptConfig":
        """Load from a TOML or JSON file (TOML tried first by suffix)."""
        p = Path(path)
        text = p.read_text(encoding="utf-8")
        if p.suffix.lower() == ".toml":
            try:
                import tomllib  # py311+
            except ModuleNotFoundError:
                import tomli as tomllib
            obj = tomllib.loads(text)
        else:
            obj = json.loads(text)
        meta = obj.get("meta_prompt")
        if meta is None and "meta_prompt_path" in obj:
            meta = Path(obj["meta_prompt_path"]).read_text(encoding="utf-8")
        if meta is None:
            meta = default_meta_prompt if default_meta_prompt is not None else default_meta_prompt_text()
        return cls(
            meta_prompt=meta,
            endpoint=obj["endpoint"],
            model=obj["model"],
            timeout=float(obj.get("timeout", 30.0)),
            retry=int(obj.get("retry", 2)),
        )


def default_meta_prompt_text() -> str:
    """The shipped meta-prompt fixture (see data/meta_prompt.txt)."""
    return (Path(__file__).parent / "data" / "meta_prompt.txt").read_text(
        encoding="utf-8"
    )


def build_request(batch: RawPromptBatch, cfg: MetaPromptConfig) -> dict:
    """Chat-completion-style JSON payload for one batch."""
    return {
        "model": cfg.model,
        "messages": [
            {"role": "system", "content": cfg.meta_prompt},
            {"role": "user", "content": join_batch(batch)},
        ],
        "temperature": 0,
    }


def http_transport(cfg: MetaPromptConfig):
    """Real transport: POST the payload, return the completion text.

    Network and protocol problems surface as TransportError so the
    caller's retry loop can engage.
    """
    import requests

    def send(payload: dict) -> str:
        try:
            resp = requests.post(cfg.endpoint, json=payload, timeout=cfg.timeout)
            resp.raise_for_status()
            body = resp.json()
            return body["choices"][0]["message"]["content"]
        except (requests.RequestException, KeyError, IndexError, TypeError, ValueError) as e:
            raise TransportError(f"transport attempt failed: {e}") from e

    return send


def canonicalize_llm(
    batch: RawPromptBatch,
    cfg: MetaPromptConfig,
    transport,
    modalities: frozenset[str] | None = None,
) -> list[CanonicalPrompt]:
    """Canonicalize through the LLM, validating everything it returns.

    The completion must split into exactly one canonical prompt per
    input sub-prompt; anything that fails re-parsing is rejected with
    the raw response attached, never passed through. Transport failures
    are retried up to cfg.retry times (cfg.retry + 1 attempts total).
    """
    payload = build_request(batch, cfg)
    last: Exception | None = None
    text: str | None = None
    for _ in range(cfg.retry + 1):
        try:
            text = transport(payload)
            break
        except TransportError as e:
            last = e
    if text is None:
        raise TransportExhaustedError(
            f"transport failed after {cfg.retry + 1} attempts: {last}", last_error=last
        )

    try:
        parts = split_batch(text)
        parsed = [parse_canonical(p, modalities=modalities) for p in parts]
    except PromptError as e:
        raise UnparseableCompletionError(
            f"unparseable completion: {e}", raw_response=text
        ) from None
    if len(parsed) != len(batch):
        raise UnparseableCompletionError(
            f"completion prompt count mismatch: got {len(parsed)}, "
            f"expected {len(batch)}",
            raw_response=text,
        )
    return parsed
