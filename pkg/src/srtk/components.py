"""Connected-component extraction and per-component feature vectors.

A predicted mask decomposes, per class, into maximal connected regions
under the chosen connectivity (8 or 4 in 2-D, 26 or 6 in 3-D; maximal
is the default). Each region gets a four-feature vector: mean class
probability and mean R/G/B intensity over its voxels, every entry
clamped to [EPS, 1-EPS] so downstream Beta densities stay finite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .core import GridImage, LabelMask, ProbabilityMap, require_same_grid
from .errors import GridMismatchError

__all__ = ["EPS", "Component", "ComponentSet", "extract_components", "compute_features"]

EPS = 1e-6

# connectivity flag -> scipy structuring element rank (1 = faces only,
# rank of grid = faces + edges (+ corners))
_CONNECTIVITY = {
    (2, 4): ndimage.generate_binary_structure(2, 1),
    (2, 8): ndimage.generate_binary_structure(2, 2),
    (3, 6): ndimage.generate_binary_structure(3, 1),
    (3, 26): ndimage.generate_binary_structure(3, 3),
}


def default_connectivity(rank: int) -> int:
    return 8 if rank == 2 else 26


@dataclass(frozen=True, eq=False)
class Component:
    """One connected region of a single class.

    ``flat_voxels`` holds row-major flat indices in ascending order (the
    canonical form); ``features`` is attached after scoring, if at all.
    """

    label: int
    flat_voxels: np.ndarray
    dims: tuple[int, ...]
    features: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        fv = np.asarray(self.flat_voxels, dtype=np.int64)
        if fv.size < 1:
            raise ValueError("a component holds at least one voxel")
        object.__setattr__(self, "flat_voxels", np.sort(fv))
        self.flat_voxels.setflags(write=False)

    @property
    def voxel_count(self) -> int:
        return int(self.flat_voxels.size)

    def voxel_indices(self) -> np.ndarray:
        """(N, rank) array of multi-indices, row-major order."""
        return np.stack(np.unravel_index(self.flat_voxels, self.dims), axis=1)


@dataclass(frozen=True)
class ComponentSet:
    """Per-class component lists for one source mask."""

    mask_id: str
    dims: tuple[int, ...]
    per_class: dict[int, list[Component]] = field(default_factory=dict)

    def total(self) -> int:
        return sum(len(v) for v in self.per_class.values())


def extract_components(
    mask: LabelMask, connectivity: int | None = None, mask_id: str = ""
) -> ComponentSet:
    """Split each class of a mask into maximal connected regions.

    Components are ordered by their smallest row-major voxel index, so
    extraction is deterministic regardless of labeling internals.
    """
    rank = len(mask.dims)
    if connectivity is None:
        connectivity = default_connectivity(rank)
    try:
        structure = _CONNECTIVITY[(rank, connectivity)]
    except KeyError:
        valid = sorted(c for r, c in _CONNECTIVITY if r == rank)
        raise ValueError(
            f"connectivity {connectivity} invalid for {rank}-D (choose from {valid})"
        ) from None

    per_class: dict[int, list[Component]] = {}
    for cls in mask.present_labels():
        labeled, n = ndimage.label(mask.labels == cls, structure=structure)
        flat_labels = labeled.ravel()
        fg = np.flatnonzero(flat_labels)
        comp_of = flat_labels[fg]
        order = np.argsort(comp_of, kind="stable")  # flat indices stay ascending
        sorted_fg = fg[order]
        bounds = np.searchsorted(comp_of[order], np.arange(1, n + 2))
        comps = [
            Component(label=cls, flat_voxels=sorted_fg[bounds[i] : bounds[i + 1]], dims=mask.dims)
            for i in range(n)
        ]
        comps.sort(key=lambda c: int(c.flat_voxels[0]))
        per_class[cls] = comps
    return ComponentSet(mask_id=mask_id, dims=mask.dims, per_class=per_class)


def compute_features(
    comp: Component,
    prob: ProbabilityMap | None,
    image: GridImage,
) -> tuple[float, float, float, float]:
    """Mean class probability and mean R/G/B intensity over a component.

    The image must be 3-channel with values in [0, 1] (use
    duplicate_channels + normalize_intensity for grayscale input). A
    missing probability map defaults the probability feature to 1-EPS,
    which keeps binary-mask-only pipelines runnable; see the priors
    docs for the implications.
    """
    if image.channels != 3:
        raise ValueError("compute_features expects a 3-channel image")
    if comp.dims != image.dims:
        raise GridMismatchError(
            f"component grid {comp.dims} does not match image grid {image.dims}"
        )
    vmin, vmax = float(image.values.min()), float(image.values.max())
    if vmin < 0.0 or vmax > 1.0:
        raise ValueError("image must be normalized to [0, 1] before scoring")

    if prob is None:
        f1 = 1.0 - EPS
    else:
        require_same_grid(prob, image, "probability map and image")
        f1 = float(prob.channel(comp.label).ravel()[comp.flat_voxels].mean())

    flat = image.values.reshape(-1, 3)
    rgb = flat[comp.flat_voxels].mean(axis=0)
    clamp = lambda x: float(min(max(x, EPS), 1.0 - EPS))
    return (clamp(f1), clamp(rgb[0]), clamp(rgb[1]), clamp(rgb[2]))
