"""Histogram equalization and intensity sampling.

The equalization variant is fixed to the cdf-min form

    h(v) = round((cdf(v) - cdf_min) / (N - cdf_min) * (L - 1))

where cdf_min is the smallest nonzero cumulative count and round() is
half-up (floor(x + 0.5)). This form maps an exactly uniform histogram to
the identity, which the tests rely on. The mapping v -> h(v) is monotone
non-decreasing, so pixel ordering is preserved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GridImage, LabelMask, normalize_intensity
from .errors import GridMismatchError

__all__ = ["Histogram", "histogram_equalize", "histogram_equalize_slices", "intensity_samples"]


@dataclass(frozen=True)
class Histogram:
    """Per-level counts and their running sum for an L-level image."""

    levels: int
    counts: np.ndarray
    cumulative: np.ndarray

    @classmethod
    def of(cls, level_values: np.ndarray, levels: int) -> "Histogram":
        counts = np.bincount(level_values.ravel(), minlength=levels)
        return cls(levels=levels, counts=counts, cumulative=np.cumsum(counts))


def _quantize(image: GridImage, levels: int) -> np.ndarray:
    """Map intensities onto integer levels 0..levels-1."""
    v = image.gray
    if v.dtype == np.uint8 and levels == 256:
        return v.astype(np.int64)
    norm = normalize_intensity(image).gray
    return np.floor(norm * (levels - 1) + 0.5).astype(np.int64)


def histogram_equalize(image: GridImage, levels: int = 256) -> GridImage:
    """Equalize a single-channel image over ``levels`` gray levels.

    uint8 input comes back as uint8 levels; any other input comes back
    as float64 levels in [0, levels-1]. An image occupying a single
    level is returned unchanged.
    """
    if image.channels != 1:
        raise ValueError("histogram_equalize expects a single-channel image "
                         "(equalize before duplicating channels)")
    if levels < 2:
        raise ValueError(f"levels must be >= 2, got {levels}")

    q = _quantize(image, levels)
    hist = Histogram.of(q, levels)
    occupied = np.flatnonzero(hist.counts)
    if occupied.size <= 1:
        return image

    n_vox = int(q.size)
    cdf_min = int(hist.cumulative[occupied[0]])
    mapping = np.floor(
        (hist.cumulative - cdf_min) / (n_vox - cdf_min) * (levels - 1) + 0.5
    )
    mapping = np.clip(mapping, 0, levels - 1)
    out = mapping[q]
    if image.values.dtype == np.uint8 and levels == 256:
        out = out.astype(np.uint8)
    return GridImage(dims=image.dims, spacing=image.spacing, channels=1, values=out)


def histogram_equalize_slices(image: GridImage, levels: int = 256) -> GridImage:
    """Equalize each leading-axis slice of a 3-D volume independently."""
    if len(image.dims) != 3:
        raise ValueError("per-slice equalization requires a 3-D volume")
    slices = []
    for z in range(image.dims[0]):
        plane = GridImage(
            dims=image.dims[1:],
            spacing=image.spacing[1:],
            channels=1,
            values=image.gray[z],
        )
        slices.append(histogram_equalize(plane, levels).gray)
    out = np.stack(slices, axis=0)
    return GridImage(dims=image.dims, spacing=image.spacing, channels=1, values=out)


def intensity_samples(image: GridImage, mask: LabelMask | None = None) -> np.ndarray:
    """Flatten intensities row-major, optionally over nonzero-mask voxels.

    Multi-channel images contribute all channels of each selected voxel,
    channel fastest.
    """
    if mask is None:
        return image.values.ravel().astype(np.float64)
    if mask.dims != image.dims:
        raise GridMismatchError(
            f"mask dims {mask.dims} do not match image dims {image.dims}"
        )
    selected = image.values[mask.labels != 0]
    return selected.ravel().astype(np.float64)
