"""End-to-end pipeline through the CLI, in a temporary directory.

canonize -> chaos -> assemble -> refine -> evaluate -> ks, wiring the
same files a batch run would use, and proving byte-level determinism of
the refinement stage.
"""

import json
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

import numpy as np

from srtk.cli import main
from srtk.fixtures import lexicon_path
import synth_fixtures

root = Path(tempfile.mkdtemp(prefix="srtk_demo_"))
print(f"working under {root}\n")
dirs = synth_fixtures.write_fixture_tree(root)

raw = root / "raw_prompts.txt"
raw.write_text("Liverr [SEP] Spleen CT [SEP] Abdomen duodenum\n")
canon = root / "canonical.txt"
assert main(["canonize", "--in", str(raw), "--lexicon", str(lexicon_path("abdominal")),
             "--out", str(canon)]) == 0
print("canonical prompts:", canon.read_text().strip(), "\n")

chaos_report = root / "chaos.json"
assert main(["chaos", "--in", str(canon), "--tau", "75", "--seed", "7",
             "--out", str(chaos_report)]) == 0
rec = json.loads(chaos_report.read_text())[0]
print(f"chaos tau=75: {rec['original']!r} -> {rec['perturbed']!r} "
      f"(achieved {rec['achieved_score']:.1f})\n")

manifest = root / "adapt" / "manifest.json"
assert main(["assemble", "--images", str(dirs["images"]),
             "--pseudolabels", str(dirs["masks"]), "--out", str(manifest)]) == 0
print(f"manifest pairs: {len(json.loads(manifest.read_text())['pairs'])}\n")

refined = root / "refined"
report = root / "refine_report.json"
assert main(["refine", "--masks", str(dirs["masks"]), "--images", str(dirs["images"]),
             "--probs", str(dirs["probs"]), "--priors", str(dirs["priors"]),
             "--out", str(refined), "--report", str(report)]) == 0
removed = {k: v["removed_voxels"] for k, v in json.loads(report.read_text()).items()}
print(f"removed voxels per case: {removed}\n")

refined2 = root / "refined2"
assert main(["refine", "--masks", str(dirs["masks"]), "--images", str(dirs["images"]),
             "--probs", str(dirs["probs"]), "--priors", str(dirs["priors"]),
             "--out", str(refined2)]) == 0
same = all(
    (refined / p.name).read_bytes() == p.read_bytes() for p in sorted(refined2.iterdir())
)
print(f"refinement reruns byte-identical: {same}\n")

eval_csv = root / "eval.csv"
eval_md = root / "eval.md"
assert main(["evaluate", "--pred", str(refined), "--gt", str(dirs["gt"]),
             "--out", str(eval_csv), "--md", str(eval_md)]) == 0
print(eval_md.read_text())

ks_json = root / "ks.json"
assert main(["ks", "--a", str(dirs["images"]), "--b", str(dirs["images"]),
             "--out", str(ks_json)]) == 0
print("ks(images, images) matrix:", json.loads(ks_json.read_text())["matrix"])
