"""Beta-prior plausibility refinement.

Creates a prediction with nine plausible components and one intensity
outlier, scores every component against Beta(2,2) priors, and shows the
mu - 2*sigma rule removing exactly the outlier.
"""

import numpy as np

from srtk import GridImage, LabelMask, refine_mask
from srtk.plausibility import BetaParams, ClassPrior, PriorsTable

labels = np.zeros((23, 11), dtype=np.int32)
values = np.full((23, 11), 0.5)
rows = [2 * i + 1 for i in range(10)]
for i, r in enumerate(rows):
    labels[r, 5] = 1
    values[r, 5] = 0.5 if i < 9 else 1e-4  # the last component is the outlier

mask = LabelMask(dims=(23, 11), spacing=(1.0, 1.0), labels=labels, class_names={1: "organ"})
image = GridImage(dims=(23, 11), spacing=(1.0, 1.0), channels=1, values=values)
prior = ClassPrior("organ", BetaParams(2, 2), BetaParams(2, 2), BetaParams(2, 2), BetaParams(2, 2))

refined, report = refine_mask(mask, None, image, PriorsTable({"organ": prior}))

rep = report.per_class[1]
print(f"class 'organ': {len(rep.components)} components, tau={rep.tau:.6f} "
      f"(mu={rep.mu:.6f}, sigma={rep.sigma:.6f})")
print(f"{'comp':>4} {'voxels':>6} {'mean R':>8} {'log score':>10} {'score':>10} retained")
for v in rep.components:
    print(f"{v.index:>4} {v.voxel_count:>6} {v.features[1]:>8.4f} "
          f"{v.log_score:>10.3f} {v.score:>10.6f} {v.retained}")

removed = np.argwhere((mask.labels != 0) & (refined.labels == 0))
print(f"\nremoved voxels: {removed.tolist()} (the planted outlier, and nothing else)")
assert rep.removed_voxels == 1
