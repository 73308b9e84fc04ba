"""Controlled prompt corruption.

Sweeps the abdominal CT prompt set across target chaos levels, prints
achieved scores, and recomputes the scores of the shipped corrupted
reference prompts as a diagnostic (they are fixture data; their
published target level is not asserted anywhere).
"""

from srtk import ChaosConfig, chaos_score, generate_chaos, rate_schedule
from srtk.fixtures import golden_prompts

prompts = golden_prompts()["canonical"]["abdominal_ct"]

print("== operator rates per target level ==")
for tau in (5, 15, 30, 50, 75):
    r = rate_schedule(tau)
    print(f"  tau={tau:3d}  r_spell={r.r_spell:.4f}  r_shuffle={r.r_shuffle:.4f}  r_remove={r.r_remove:.4f}")

print("\n== corruption sweep (seed 7, 50 candidates per prompt) ==")
for tau in (5, 15, 30, 50, 75):
    achieved = []
    sample = None
    for i, prompt in enumerate(prompts):
        pert, score = generate_chaos(prompt, ChaosConfig(tau=tau, candidates=50, seed=7 ^ i))
        achieved.append(score)
        if i == 0:
            sample = pert
    mean = sum(achieved) / len(achieved)
    gap = sum(abs(s - tau) for s in achieved) / len(achieved)
    print(f"  tau={tau:3d}  mean achieved={mean:6.2f}  mean |achieved-tau|={gap:5.2f}  e.g. {sample!r}")

print("\n== recomputed scores of the shipped corrupted reference prompts ==")
for rec in golden_prompts()["chaos_reference"][:8]:
    s = chaos_score(rec["original"], rec["perturbed"])
    print(f"  {s:6.2f}  {rec['original']!r} -> {rec['perturbed']!r}")
print("  ... (recomputation is a diagnostic, not an assertion)")
