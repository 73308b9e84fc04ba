"""Beta-prior plausibility scoring and mean-minus-2-sigma mask refinement.

Each predicted component of a class gets a plausibility score: the
product of four Beta densities evaluated at the component's feature
vector (mean class probability, mean R, G, B intensity). Components
whose score falls below tau = mu - 2*sigma of their class's scores are
dropped to background; sigma is the population standard deviation, so a
class with one or two components never loses anything.

Scoring runs in log space and thresholding runs on max-normalized
linear scores S_i = exp(log S_i - max_j log S_j). The raw four-density
product underflows for tail features, and the mu - 2*sigma rule is
invariant under positive rescaling of all scores (tau(c*S) = c*tau(S)),
so normalization never changes which components survive.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .components import (
    Component,
    compute_features,
    default_connectivity,
    extract_components,
)
from .core import (
    GridImage,
    LabelMask,
    ProbabilityMap,
    duplicate_channels,
    normalize_intensity,
    require_same_grid,
)
from .errors import PriorsError

__all__ = [
    "BetaParams",
    "ClassPrior",
    "PriorsTable",
    "ComponentVerdict",
    "ClassReport",
    "RefinementReport",
    "beta_log_pdf",
    "plausibility_log_score",
    "normalize_log_scores",
    "retention_threshold",
    "refine_mask",
    "load_priors",
]

_FEATURE_KEYS = ("prob", "r", "g", "b")


@dataclass(frozen=True)
class BetaParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0.0):
            raise PriorsError(f"alpha must be positive, got {self.alpha}")
        if not (self.beta > 0.0):
            raise PriorsError(f"beta must be positive, got {self.beta}")


@dataclass(frozen=True)
class ClassPrior:
    """Four Beta parameter pairs for one class: prob, R, G, B, in that order."""

    name: str
    prob: BetaParams
    r: BetaParams
    g: BetaParams
    b: BetaParams

    @property
    def pairs(self) -> tuple[BetaParams, BetaParams, BetaParams, BetaParams]:
        return (self.prob, self.r, self.g, self.b)


@dataclass(frozen=True)
class PriorsTable:
    """Class name -> ClassPrior, plus a provenance string for reports."""

    priors: dict[str, ClassPrior]
    provenance: str = ""

    def for_class(self, name: str) -> ClassPrior:
        try:
            return self.priors[name]
        except KeyError:
            raise PriorsError(f"no prior for class {name!r}") from None


def beta_log_pdf(p: BetaParams, x: float) -> float:
    """log of the Beta(alpha, beta) density at x, for 0 < x < 1.

    Computed as (a-1)*ln x + (b-1)*ln(1-x) - ln B(a, b) with the log
    Beta function via log-gamma; finite on the open interval even for
    a < 1 or b < 1 (feature clamping keeps inputs off the endpoints).
    """
    if not (0.0 < x < 1.0):
        raise ValueError(f"x must lie strictly inside (0, 1), got {x}")
    log_b = math.lgamma(p.alpha) + math.lgamma(p.beta) - math.lgamma(p.alpha + p.beta)
    return (p.alpha - 1.0) * math.log(x) + (p.beta - 1.0) * math.log1p(-x) - log_b


def plausibility_log_score(
    features: tuple[float, float, float, float], prior: ClassPrior
) -> float:
    """Sum of the four Beta log densities: the log of the score product."""
    return sum(beta_log_pdf(p, f) for p, f in zip(prior.pairs, features))


def normalize_log_scores(log_scores) -> np.ndarray:
    """Max-normalized linear scores exp(ls - max(ls)); the top score is 1."""
    ls = np.asarray(log_scores, dtype=np.float64)
    if ls.size == 0:
        raise ValueError("cannot normalize an empty score list")
    return np.exp(ls - ls.max())


def retention_threshold(scores) -> float:
    """mu - 2*sigma over linear scores, sigma the population deviation."""
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0:
        raise ValueError("cannot threshold an empty score list")
    return float(s.mean() - 2.0 * s.std())


@dataclass(frozen=True)
class ComponentVerdict:
    index: int
    voxel_count: int
    features: tuple[float, float, float, float]
    log_score: float
    score: float  # max-normalized linear score
    retained: bool


@dataclass(frozen=True)
class ClassReport:
    class_name: str
    label: int
    tau: float
    mu: float
    sigma: float
    components: tuple[ComponentVerdict, ...]
    removed_voxels: int


@dataclass(frozen=True)
class RefinementReport:
    mask_id: str
    connectivity: int
    per_class: dict[int, ClassReport] = field(default_factory=dict)

    @property
    def removed_voxels(self) -> int:
        return sum(c.removed_voxels for c in self.per_class.values())

    def to_json_dict(self) -> dict:
        return {
            "mask_id": self.mask_id,
            "connectivity": self.connectivity,
            "removed_voxels": self.removed_voxels,
            "classes": {
                str(label): {
                    "class_name": rep.class_name,
                    "tau": rep.tau,
                    "mu": rep.mu,
                    "sigma": rep.sigma,
                    "removed_voxels": rep.removed_voxels,
                    "components": [
                        {
                            "index": v.index,
                            "voxel_count": v.voxel_count,
                            "features": list(v.features),
                            "log_score": v.log_score,
                            "score": v.score,
                            "retained": v.retained,
                        }
                        for v in rep.components
                    ],
                }
                for label, rep in sorted(self.per_class.items())
            },
        }


def _score_class(
    comps: list[Component],
    prior: ClassPrior,
    prob: ProbabilityMap | None,
    image3: GridImage,
) -> tuple[np.ndarray, list[tuple[float, ...]], np.ndarray]:
    feats = [compute_features(c, prob, image3) for c in comps]
    log_scores = np.array(
        [plausibility_log_score(f, prior) for f in feats], dtype=np.float64
    )
    return log_scores, feats, normalize_log_scores(log_scores)


def refine_mask(
    mask: LabelMask,
    prob: ProbabilityMap | None,
    image: GridImage,
    priors: PriorsTable,
    connectivity: int | None = None,
    mask_id: str = "",
) -> tuple[LabelMask, RefinementReport]:
    """Drop implausible components of every class; voxels go to background.

    Classes are treated independently: per class, components are
    extracted, scored against that class's priors, and retained when
    their normalized score is >= tau = mu - 2*sigma. Retained voxels and
    background are untouched, so the output foreground is always a
    subset of the input foreground.
    """
    require_same_grid(mask, image, "mask and image")
    if prob is not None:
        require_same_grid(mask, prob, "mask and probability map")
    if connectivity is None:
        connectivity = default_connectivity(len(mask.dims))

    present = mask.present_labels()
    for label in present:
        name = mask.class_names.get(label)
        if name is None:
            raise PriorsError(f"mask label {label} has no class name for prior lookup")
        priors.for_class(name)  # fail before touching any voxel

    image3 = image if image.channels == 3 else duplicate_channels(image)
    vmin, vmax = float(image3.values.min()), float(image3.values.max())
    if vmin < 0.0 or vmax > 1.0:
        image3 = normalize_intensity(image3)

    comp_set = extract_components(mask, connectivity, mask_id=mask_id)
    out = np.array(mask.labels, copy=True)
    per_class: dict[int, ClassReport] = {}
    for label in present:
        comps = comp_set.per_class.get(label, [])
        if not comps:
            continue
        name = mask.class_names[label]
        prior = priors.for_class(name)
        log_scores, feats, scores = _score_class(comps, prior, prob, image3)
        tau = retention_threshold(scores)
        retained = scores >= tau
        verdicts = []
        removed = 0
        for i, comp in enumerate(comps):
            keep = bool(retained[i])
            if not keep:
                out.ravel()[comp.flat_voxels] = 0
                removed += comp.voxel_count
            verdicts.append(
                ComponentVerdict(
                    index=i,
                    voxel_count=comp.voxel_count,
                    features=feats[i],
                    log_score=float(log_scores[i]),
                    score=float(scores[i]),
                    retained=keep,
                )
            )
        per_class[label] = ClassReport(
            class_name=name,
            label=label,
            tau=tau,
            mu=float(scores.mean()),
            sigma=float(scores.std()),
            components=tuple(verdicts),
            removed_voxels=removed,
        )

    refined = LabelMask(
        dims=mask.dims, spacing=mask.spacing, labels=out, class_names=mask.class_names
    )
    report = RefinementReport(
        mask_id=mask_id, connectivity=connectivity, per_class=per_class
    )
    return refined, report


def load_priors(path: str | Path) -> PriorsTable:
    """Load a priors table from JSON.

    Schema: ``{"<class>": {"prob": [a, b], "r": [a, b], "g": [a, b],
    "b": [a, b]}, ...}``. Unknown keys inside a class entry are ignored
    with a warning; duplicate class names and non-positive parameters
    are errors.
    """
    text = Path(path).read_text(encoding="utf-8")

    def reject_duplicates(pairs):
        seen = {}
        for k, v in pairs:
            if k in seen:
                raise PriorsError(f"duplicate class name {k!r} in priors file")
            seen[k] = v
        return seen

    try:
        obj = json.loads(text, object_pairs_hook=reject_duplicates)
    except json.JSONDecodeError as e:
        raise PriorsError(f"priors file is not valid JSON: {e}") from None
    if not isinstance(obj, dict):
        raise PriorsError("priors file must be a JSON object of class entries")

    priors: dict[str, ClassPrior] = {}
    for name, entry in obj.items():
        if not isinstance(entry, dict):
            raise PriorsError(f"class {name!r}: entry must be an object")
        unknown = sorted(set(entry) - set(_FEATURE_KEYS))
        if unknown:
            warnings.warn(
                f"priors class {name!r}: ignoring unknown keys {unknown}",
                stacklevel=2,
            )
        pairs = {}
        for key in _FEATURE_KEYS:
            if key not in entry:
                raise PriorsError(f"class {name!r}: missing Beta pair {key!r}")
            pair = entry[key]
            if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
                raise PriorsError(f"class {name!r}: {key!r} must be [alpha, beta]")
            try:
                pairs[key] = BetaParams(float(pair[0]), float(pair[1]))
            except PriorsError as e:
                raise PriorsError(f"class {name!r}, pair {key!r}: {e}") from None
        priors[name] = ClassPrior(name=name, **pairs)
    return PriorsTable(priors=priors, provenance=str(path))
