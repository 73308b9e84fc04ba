"""Core domain types: grid images, label masks, probability maps, manifests.

All values are 2-D or 3-D arrays on a regular grid with physical voxel
spacing in millimeters per axis. Arrays are stored row-major with axis
order (z,) y, x; multi-channel images keep the channel as the last,
fastest-varying axis. Every type is an immutable value after
construction and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GridMismatchError

__all__ = [
    "GridImage",
    "LabelMask",
    "ProbabilityMap",
    "AdaptManifest",
    "validate_pair",
    "duplicate_channels",
    "normalize_intensity",
]


def _check_grid(dims, spacing) -> tuple[tuple[int, ...], tuple[float, ...]]:
    dims = tuple(int(d) for d in dims)
    spacing = tuple(float(s) for s in spacing)
    if len(dims) not in (2, 3):
        raise ValueError(f"grid must be 2-D or 3-D, got {len(dims)} axes")
    if any(d <= 0 for d in dims):
        raise ValueError(f"all extents must be positive, got {dims}")
    if len(spacing) != len(dims):
        raise ValueError(f"spacing rank {len(spacing)} != dims rank {len(dims)}")
    if any(s <= 0 for s in spacing):
        raise ValueError(f"all spacing entries must be positive, got {spacing}")
    return dims, spacing


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GridImage:
    """Intensity array with physical voxel spacing and 1 or 3 channels.

    ``values`` always has shape ``(*dims, channels)``; single-channel
    data may be passed with shape ``dims`` and is reshaped.
    """

    dims: tuple[int, ...]
    spacing: tuple[float, ...]
    channels: int
    values: np.ndarray

    def __post_init__(self):
        dims, spacing = _check_grid(self.dims, self.spacing)
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")
        values = np.asarray(self.values)
        if values.shape == dims and self.channels == 1:
            values = values.reshape(dims + (1,))
        if values.shape != dims + (self.channels,):
            raise ValueError(
                f"values shape {values.shape} does not match dims {dims} "
                f"with {self.channels} channel(s)"
            )
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "values", _freeze(values))

    @property
    def gray(self) -> np.ndarray:
        """The single channel of a 1-channel image, shape ``dims``."""
        if self.channels != 1:
            raise ValueError("gray view requires a 1-channel image")
        return self.values[..., 0]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, GridImage)
            and self.dims == other.dims
            and self.spacing == other.spacing
            and self.channels == other.channels
            and self.values.dtype == other.values.dtype
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True, eq=False)
class LabelMask:
    """Non-negative integer class labels per voxel; 0 is background.

    ``class_names`` maps nonzero labels to human-readable names. Name
    coverage of every nonzero label is an invariant of well-formed data
    but is reported by :func:`validate_pair` rather than enforced here,
    so that malformed masks can be loaded, inspected, and repaired.
    """

    dims: tuple[int, ...]
    spacing: tuple[float, ...]
    labels: np.ndarray
    class_names: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        dims, spacing = _check_grid(self.dims, self.spacing)
        labels = np.asarray(self.labels)
        if labels.shape != dims:
            raise ValueError(f"labels shape {labels.shape} does not match dims {dims}")
        if not np.issubdtype(labels.dtype, np.integer):
            raise ValueError(f"labels must be integers, got dtype {labels.dtype}")
        if labels.size and labels.min() < 0:
            raise ValueError("labels must be non-negative")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "labels", _freeze(labels.astype(np.int32)))
        object.__setattr__(
            self, "class_names", {int(k): str(v) for k, v in self.class_names.items()}
        )

    def present_labels(self) -> list[int]:
        """Sorted nonzero labels that actually occur in the mask."""
        u = np.unique(self.labels)
        return [int(v) for v in u if v != 0]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LabelMask)
            and self.dims == other.dims
            and self.spacing == other.spacing
            and np.array_equal(self.labels, other.labels)
            and self.class_names == other.class_names
        )


@dataclass(frozen=True, eq=False)
class ProbabilityMap:
    """Per-class foreground probabilities in [0, 1] on a grid.

    ``probs`` has shape ``(*dims, len(class_labels))``; channel k holds
    the probability of class ``class_labels[k]``.
    """

    dims: tuple[int, ...]
    spacing: tuple[float, ...]
    class_labels: tuple[int, ...]
    probs: np.ndarray

    def __post_init__(self):
        dims, spacing = _check_grid(self.dims, self.spacing)
        class_labels = tuple(int(c) for c in self.class_labels)
        if not class_labels:
            raise ValueError("probability map needs at least one class channel")
        if len(set(class_labels)) != len(class_labels):
            raise ValueError("duplicate class labels in probability map")
        probs = np.asarray(self.probs, dtype=np.float32)
        if probs.shape != dims + (len(class_labels),):
            raise ValueError(
                f"probs shape {probs.shape} does not match dims {dims} "
                f"with {len(class_labels)} class(es)"
            )
        if probs.size and (probs.min() < 0.0 or probs.max() > 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "class_labels", class_labels)
        object.__setattr__(self, "probs", _freeze(probs))

    def channel(self, label: int) -> np.ndarray:
        """Probability channel for one class label, shape ``dims``."""
        try:
            k = self.class_labels.index(int(label))
        except ValueError:
            raise KeyError(f"probability map has no channel for class {label}") from None
        return self.probs[..., k]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ProbabilityMap)
            and self.dims == other.dims
            and self.spacing == other.spacing
            and self.class_labels == other.class_labels
            and np.array_equal(self.probs, other.probs)
        )


@dataclass(frozen=True)
class AdaptManifest:
    """Adaptation-set manifest: (equalized image, pseudo-label) path pairs.

    Paths are stored as written (normally relative to the manifest file).
    Existence and dims agreement of the referenced files are checked by
    the assembler at assembly time, not by this value type.
    """

    pairs: tuple[tuple[str, str], ...]
    source_prompts: tuple[str, ...] = ()
    priors_table: str = ""
    created: str = ""

    def to_json_dict(self) -> dict:
        return {
            "pairs": [{"image": img, "label": lab} for img, lab in self.pairs],
            "provenance": {
                "source_prompts": list(self.source_prompts),
                "priors_table": self.priors_table,
                "created": self.created,
            },
        }

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def from_json_dict(cls, obj: dict) -> "AdaptManifest":
        pairs = tuple((p["image"], p["label"]) for p in obj.get("pairs", []))
        prov = obj.get("provenance", {})
        return cls(
            pairs=pairs,
            source_prompts=tuple(prov.get("source_prompts", [])),
            priors_table=prov.get("priors_table", "") or "",
            created=prov.get("created", "") or "",
        )

    @classmethod
    def load(cls, path: str | Path) -> "AdaptManifest":
        return cls.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def validate_pair(image: GridImage, mask: LabelMask) -> list[str]:
    """Check an image/mask pair; violations come back as data, never raised.

    Pure: identical inputs always produce the identical violation list.
    """
    violations: list[str] = []
    if image.dims != mask.dims:
        violations.append(f"dims mismatch: image {image.dims} vs mask {mask.dims}")
    if image.spacing != mask.spacing:
        violations.append(
            f"spacing mismatch: image {image.spacing} vs mask {mask.spacing}"
        )
    unnamed = [lab for lab in mask.present_labels() if lab not in mask.class_names]
    for lab in unnamed:
        violations.append(f"unnamed label: {lab} missing from class_names")
    return violations


def duplicate_channels(image: GridImage) -> GridImage:
    """Replicate a single channel into three identical channels."""
    if image.channels != 1:
        raise ValueError(f"expected a 1-channel image, got {image.channels} channels")
    values = np.repeat(image.values, 3, axis=-1)
    return GridImage(dims=image.dims, spacing=image.spacing, channels=3, values=values)


def normalize_intensity(image: GridImage) -> GridImage:
    """Map intensities into [0, 1].

    uint8 data divides by 255; anything else is min-max scaled globally
    across all channels of the image. A constant image maps to 0.5
    everywhere. The mapping is monotone non-decreasing.
    """
    values = image.values
    if values.dtype == np.uint8:
        out = values.astype(np.float64) / 255.0
    else:
        v = values.astype(np.float64)
        lo = float(v.min())
        hi = float(v.max())
        if hi == lo:
            out = np.full(v.shape, 0.5)
        else:
            out = (v - lo) / (hi - lo)
    return GridImage(
        dims=image.dims, spacing=image.spacing, channels=image.channels, values=out
    )


def require_same_grid(a, b, what: str = "inputs") -> None:
    """Raise GridMismatchError unless a and b share dims and spacing."""
    if a.dims != b.dims or a.spacing != b.spacing:
        raise GridMismatchError(
            f"{what} must share one grid: "
            f"{a.dims}/{a.spacing} vs {b.dims}/{b.spacing}"
        )
