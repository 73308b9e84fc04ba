"""Canonical prompt handling.

Shows the canonical "<Target> in <Site> <Modality>." grammar, the
deterministic lexicon canonicalizer on noisy multi-target batches, and
the LLM canonicalizer driven through a mock transport (no network).
"""

from srtk import canonicalize_lexicon, canonicalize_llm, emit_canonical, parse_canonical, split_batch
from srtk.fixtures import golden_prompts, load_lexicon
from srtk.prompts import MetaPromptConfig, join_batch

print("== parse / emit round-trip ==")
for s in ("Liver in abdominal CT.", "Left ventricle in heart ultrasound.",
          "Non-enhancing tumor core in head post-contrast T1 MR."):
    p = parse_canonical(s)
    print(f"  {s!r:62} -> target={p.target!r} site={p.site!r} modality={p.modality!r}")
    assert emit_canonical(p) == s

print("\n== lexicon canonicalization of noisy batches ==")
for pair in golden_prompts()["regularization_pairs"]:
    lex = load_lexicon(pair["lexicon"])
    out = join_batch(emit_canonical(p) for p in canonicalize_lexicon(split_batch(pair["raw"]), lex))
    print(f"  raw:   {pair['raw']}")
    print(f"  canon: {out}\n")

print("== typos, swapped word order, shared-context inference ==")
lex = load_lexicon("abdominal")
noisy = "pSleen MR in abdomianl. [SEP] Liiver [SEP] in MR xbdominal Stomach."
for p in canonicalize_lexicon(split_batch(noisy), lex):
    print(f"  {emit_canonical(p)}")

print("\n== LLM path through a mock transport ==")
cfg = MetaPromptConfig(
    meta_prompt="(meta prompt elided)",
    endpoint="http://localhost:8000/v1/chat/completions",
    model="demo-model",
)
canned = "Liver in abdominal CT. [SEP] Spleen in abdominal CT."
out = canonicalize_llm(split_batch("Liverr [SEP] Spleen"), cfg, lambda payload: canned)
print("  completion accepted:", [emit_canonical(p) for p in out])
