"""Evaluation metrics: DICE, ASD in millimeters, KS shift statistic.

Builds small masks with known geometry, evaluates them, aggregates two
cases into a mean +/- std table, and measures the intensity shift
between two synthetic modalities.
"""

import numpy as np

from srtk import GridImage, LabelMask, aggregate, asd, dice, evaluate_case, intensity_samples, ks_statistic
from srtk.metrics import render_markdown


def mask_of(a):
    a = np.asarray(a, dtype=np.int32)
    return LabelMask(dims=a.shape, spacing=(1.0, 1.0), labels=a, class_names={1: "organ"})


print("== DICE ==")
pred = mask_of([[1, 1, 1, 1], [0, 0, 0, 0]])
gt = mask_of([[1, 1, 0, 0], [0, 0, 0, 0]])
print(f"  |A|=4 |B|=2 overlap=2 -> dice = {dice(pred, gt, 1):.4f}")

print("\n== ASD with anisotropic spacing ==")
a = np.zeros((1, 1, 2), dtype=np.int32)
a[0, 0, 0] = 1
b = np.zeros((1, 1, 2), dtype=np.int32)
b[0, 0, 1] = 1
pa = LabelMask(dims=(1, 1, 2), spacing=(1.0, 1.0, 3.0), labels=a, class_names={1: "organ"})
pb = LabelMask(dims=(1, 1, 2), spacing=(1.0, 1.0, 3.0), labels=b, class_names={1: "organ"})
print(f"  neighbors along a 3 mm axis -> asd = {asd(pa, pb, 1)} mm")

print("\n== N/A convention ==")
empty = mask_of(np.zeros((3, 3)))
full = mask_of(np.ones((3, 3)))
print(f"  empty prediction: dice = {dice(empty, full, 1)}, asd = {asd(empty, full, 1)!r} (rendered N/A)")

print("\n== aggregation over two cases ==")
r1 = evaluate_case(gt, gt, "case0")       # perfect
r2 = evaluate_case(pred, gt, "case1")     # partial
report = aggregate([r1, r2])
print(render_markdown(report, title="Demo aggregate"))

print("== KS statistic between two synthetic modalities ==")
rng = np.random.default_rng(1)
mod_a = GridImage(dims=(32, 32), spacing=(1.0, 1.0), channels=1,
                  values=rng.normal(100, 10, (32, 32)))
mod_b = GridImage(dims=(32, 32), spacing=(1.0, 1.0), channels=1,
                  values=rng.normal(150, 25, (32, 32)))
d = ks_statistic(intensity_samples(mod_a), intensity_samples(mod_b))
same = ks_statistic(intensity_samples(mod_a), intensity_samples(mod_a))
print(f"  shifted distributions: {d:.4f}   identical samples: {same:.4f}")
