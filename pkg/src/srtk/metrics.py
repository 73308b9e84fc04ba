"""Segmentation evaluation: DICE overlap, average symmetric surface
distance in millimeters, Kolmogorov-Smirnov shift statistic, and
mean +/- std aggregation with the N/A failure convention.

Surface voxels are class voxels with at least one background neighbor
under face connectivity (4 in 2-D, 6 in 3-D); outside the grid counts
as background. ASD averages the two directed mean nearest-neighbor
distances between surfaces, measured between voxel centers in physical
coordinates. An empty prediction or empty reference leaves ASD
undefined (None, rendered "N/A"); DICE of exactly one empty side is
0.0, of two empty sides 1.0.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .core import LabelMask, require_same_grid

__all__ = [
    "dice",
    "surface_voxels",
    "asd",
    "ks_statistic",
    "CaseResult",
    "ClassAggregate",
    "AggregateReport",
    "aggregate",
    "render_csv",
    "render_markdown",
]


def dice(pred: LabelMask, gt: LabelMask, label: int) -> float:
    """2|A.B| / (|A| + |B|) for one class; both empty -> 1.0, one -> 0.0."""
    require_same_grid(pred, gt, "pred and gt")
    a = pred.labels == label
    b = gt.labels == label
    na = int(a.sum())
    nb = int(b.sum())
    if na == 0 and nb == 0:
        return 1.0
    if na == 0 or nb == 0:
        return 0.0
    inter = int(np.logical_and(a, b).sum())
    return 2.0 * inter / (na + nb)


def surface_voxels(labels: np.ndarray, label: int) -> np.ndarray:
    """(N, rank) indices of class voxels with a face-adjacent background.

    The grid border counts as background, so a fully foreground array
    still has a surface.
    """
    binary = labels == label
    if not binary.any():
        return np.empty((0, labels.ndim), dtype=np.int64)
    padded = np.pad(binary, 1, constant_values=False)
    bg_neighbor = np.zeros_like(binary)
    core = tuple(slice(1, -1) for _ in range(labels.ndim))
    for ax in range(labels.ndim):
        for step in (-1, 1):
            shifted = np.roll(padded, step, axis=ax)[core]
            bg_neighbor |= ~shifted
    return np.argwhere(binary & bg_neighbor).astype(np.int64)


def asd(pred: LabelMask, gt: LabelMask, label: int) -> float | None:
    """Average symmetric surface distance in mm, or None when undefined."""
    require_same_grid(pred, gt, "pred and gt")
    ps = surface_voxels(pred.labels, label)
    gs = surface_voxels(gt.labels, label)
    if ps.size == 0 or gs.size == 0:
        return None
    spacing = np.asarray(pred.spacing, dtype=np.float64)
    p_mm = ps * spacing
    g_mm = gs * spacing
    d_pg = cKDTree(g_mm).query(p_mm)[0]
    d_gp = cKDTree(p_mm).query(g_mm)[0]
    return float((d_pg.mean() + d_gp.mean()) / 2.0)


def ks_statistic(a, b) -> float:
    """sup |F_a - F_b| over merged sample points (right-continuous ECDFs)."""
    sa = np.sort(np.asarray(a, dtype=np.float64).ravel())
    sb = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if sa.size == 0 or sb.size == 0:
        raise ValueError("KS statistic needs non-empty samples on both sides")
    pts = np.concatenate([sa, sb])
    fa = np.searchsorted(sa, pts, side="right") / sa.size
    fb = np.searchsorted(sb, pts, side="right") / sb.size
    return float(np.abs(fa - fb).max())


@dataclass(frozen=True)
class CaseResult:
    """Per-class DICE and ASD for one case; ASD None encodes N/A."""

    case_id: str
    dice: dict[str, float] = field(default_factory=dict)
    asd: dict[str, float | None] = field(default_factory=dict)


@dataclass(frozen=True)
class ClassAggregate:
    dice_mean: float
    dice_std: float
    asd_mean: float | None
    asd_std: float | None
    asd_skipped: int
    cases: int


@dataclass(frozen=True)
class AggregateReport:
    per_class: dict[str, ClassAggregate]
    mean_dice: float
    mean_asd: float | None


def _mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def aggregate(results: list[CaseResult]) -> AggregateReport:
    """Per-class mean +/- population std over cases, plus grand means.

    ASD aggregation skips N/A cases and reports how many were skipped;
    a class whose every case is N/A stays N/A. Order of cases does not
    matter.
    """
    if not results:
        raise ValueError("aggregate needs at least one case")
    class_names = sorted({name for r in results for name in r.dice})
    per_class: dict[str, ClassAggregate] = {}
    for name in class_names:
        dices = [r.dice[name] for r in results if name in r.dice]
        asds_all = [r.asd.get(name) for r in results if name in r.dice]
        asds = [v for v in asds_all if v is not None]
        d_mean, d_std = _mean_std(dices)
        if asds:
            a_mean, a_std = _mean_std(asds)
        else:
            a_mean = a_std = None
        per_class[name] = ClassAggregate(
            dice_mean=d_mean,
            dice_std=d_std,
            asd_mean=a_mean,
            asd_std=a_std,
            asd_skipped=len(asds_all) - len(asds),
            cases=len(dices),
        )
    mean_dice = float(np.mean([c.dice_mean for c in per_class.values()]))
    defined = [c.asd_mean for c in per_class.values() if c.asd_mean is not None]
    mean_asd = float(np.mean(defined)) if defined else None
    return AggregateReport(per_class=per_class, mean_dice=mean_dice, mean_asd=mean_asd)


def _fmt(value: float | None) -> str:
    return "N/A" if value is None else repr(value)


def render_csv(results: list[CaseResult], report: AggregateReport) -> str:
    """Long-format CSV: one row per case/class plus aggregate rows.

    Floats are written at full precision so downstream checks can
    compare exactly.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", "case", "class", "dice", "asd_mm"])
    for r in sorted(results, key=lambda r: r.case_id):
        for name in sorted(r.dice):
            w.writerow(["case", r.case_id, name, repr(r.dice[name]), _fmt(r.asd.get(name))])
    for name, agg in sorted(report.per_class.items()):
        w.writerow(["mean", "", name, repr(agg.dice_mean), _fmt(agg.asd_mean)])
        w.writerow(["std", "", name, repr(agg.dice_std), _fmt(agg.asd_std)])
        w.writerow(["asd_skipped", "", name, "", str(agg.asd_skipped)])
    w.writerow(["grand_mean", "", "", repr(report.mean_dice), _fmt(report.mean_asd)])
    return buf.getvalue()


def _pm(mean: float | None, std: float | None, scale: float) -> str:
    if mean is None:
        return "N/A"
    return f"{mean * scale:.1f}±{(std or 0.0) * scale:.1f}"


def render_markdown(report: AggregateReport, title: str = "Evaluation") -> str:
    """Markdown table in the usual paper layout: class columns,
    mean +/- std cells, DICE in percent, ASD in mm, literal N/A."""
    names = sorted(report.per_class)
    lines = [
        f"### {title}",
        "",
        "| Metric | " + " | ".join(names) + " | mean |",
        "|---" * (len(names) + 2) + "|",
    ]
    dice_cells = [_pm(report.per_class[n].dice_mean, report.per_class[n].dice_std, 100.0) for n in names]
    asd_cells = [_pm(report.per_class[n].asd_mean, report.per_class[n].asd_std, 1.0) for n in names]
    mean_asd = "N/A" if report.mean_asd is None else f"{report.mean_asd:.1f}"
    lines.append(f"| DICE (%) | " + " | ".join(dice_cells) + f" | {report.mean_dice * 100.0:.1f} |")
    lines.append(f"| ASD (mm) | " + " | ".join(asd_cells) + f" | {mean_asd} |")
    lines.append("")
    return "\n".join(lines)


def evaluate_case(pred: LabelMask, gt: LabelMask, case_id: str) -> CaseResult:
    """DICE/ASD over every class present in either mask of the case."""
    require_same_grid(pred, gt, "pred and gt")
    labels = sorted(set(pred.present_labels()) | set(gt.present_labels()))
    names = {}
    for lab in labels:
        names[lab] = gt.class_names.get(lab) or pred.class_names.get(lab) or str(lab)
    dice_by = {names[lab]: dice(pred, gt, lab) for lab in labels}
    asd_by = {names[lab]: asd(pred, gt, lab) for lab in labels}
    return CaseResult(case_id=case_id, dice=dice_by, asd=asd_by)
