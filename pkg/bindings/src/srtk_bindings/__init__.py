"""Buffer-level facade over the srtk toolkit.

Two entry points for ML training loops that hold plain contiguous
numeric buffers instead of files: ``bind_refine`` (plausibility
refinement) and ``bind_metrics`` (DICE / surface distance). Buffers
travel in a :class:`BufferView` carrying dims, spacing, and a dtype
tag, mirroring the SRT1 header fields.

This package is a strict facade: it marshals buffers into the
toolkit's domain types, calls the toolkit, and marshals results back.
Every behavior question (connectivity defaults, retention rule, N/A
conventions, error texts) is answered by srtk itself; results are
bit-identical to running the CLI on the same data written to SRT1
files. There is no global state; concurrent calls from multiple
threads are safe.

Marshalling cost: ``BufferView.to_array`` wraps the buffer zero-copy
(``numpy.frombuffer``); srtk's own canonicalization (for example label
widening to int32) is the only copying step, exactly as in the file
path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

import srtk
from srtk import GridImage, LabelMask, ProbabilityMap, load_priors, refine_mask
from srtk.metrics import asd as _asd
from srtk.metrics import dice as _dice
from srtk.tensor_io import _mask_storage

__version__ = srtk.__version__

__all__ = ["BufferView", "bind_refine", "bind_metrics", "__version__"]

_DTYPES = {"u8": np.dtype("<u1"), "u16": np.dtype("<u2"), "f32": np.dtype("<f4")}


@dataclass(frozen=True)
class BufferView:
    """A contiguous little-endian buffer plus its grid metadata.

    ``data`` is anything exposing the buffer protocol (bytes,
    bytearray, memoryview, numpy array). The element count must be a
    whole multiple of prod(dims); the quotient is the channel count.
    """

    data: object
    dims: tuple[int, ...]
    spacing: tuple[float, ...]
    dtype: str

    def __post_init__(self):
        if self.dtype not in _DTYPES:
            raise ValueError(f"dtype tag must be one of {sorted(_DTYPES)}, got {self.dtype!r}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))

    def to_array(self) -> np.ndarray:
        """Zero-copy view shaped (*dims, channels)."""
        dt = _DTYPES[self.dtype]
        flat = np.frombuffer(self.data, dtype=dt)
        voxels = int(np.prod(self.dims))
        if voxels == 0 or flat.size % voxels != 0:
            raise ValueError(
                f"buffer of {flat.size} elements does not match dims {self.dims}"
            )
        return flat.reshape(self.dims + (flat.size // voxels,))


def _image_from(view: BufferView) -> GridImage:
    arr = view.to_array()
    return GridImage(dims=view.dims, spacing=view.spacing,
                     channels=arr.shape[-1], values=arr)


def _mask_from(view: BufferView, class_names: dict[int, str]) -> LabelMask:
    arr = view.to_array()
    if arr.shape[-1] != 1:
        raise ValueError("a mask buffer must hold exactly one channel")
    return LabelMask(dims=view.dims, spacing=view.spacing,
                     labels=arr[..., 0].astype(np.int64), class_names=class_names)


def _prob_from(view: BufferView, class_labels) -> ProbabilityMap:
    arr = view.to_array()
    if class_labels is None:
        raise ValueError("class_labels is required with a probability buffer "
                         "(one class label per channel)")
    return ProbabilityMap(dims=view.dims, spacing=view.spacing,
                          class_labels=tuple(class_labels), probs=arr)


def bind_refine(
    mask: BufferView,
    image: BufferView,
    prob: BufferView | None,
    priors_path: str,
    connectivity: int | None = None,
    *,
    class_names: dict[int, str],
    class_labels=None,
    mask_id: str = "",
) -> tuple[bytes, str]:
    """Refine a mask buffer; returns (refined labels payload, report JSON).

    The payload is little-endian row-major in the narrowest unsigned
    type that fits the labels (the same bytes an SRT1 file written by
    the CLI would carry); the report string is the canonical JSON
    serialization of the per-case refinement report.
    """
    mask_obj = _mask_from(mask, class_names)
    image_obj = _image_from(image)
    prob_obj = _prob_from(prob, class_labels) if prob is not None else None
    priors = load_priors(priors_path)
    refined, report = refine_mask(
        mask_obj, prob_obj, image_obj, priors, connectivity=connectivity, mask_id=mask_id
    )
    _, payload = _mask_storage(refined.labels)
    report_json = json.dumps(report.to_json_dict(), indent=2, sort_keys=True)
    return payload.tobytes(order="C"), report_json


def bind_metrics(
    pred: BufferView,
    gt: BufferView,
    label: int = 1,
    *,
    class_names: dict[int, str] | None = None,
) -> dict:
    """DICE and ASD (in mm) for one class label; N/A encodes as None."""
    names = class_names or {}
    pred_obj = _mask_from(pred, names)
    gt_obj = _mask_from(gt, names)
    return {
        "dice": _dice(pred_obj, gt_obj, label),
        "asd": _asd(pred_obj, gt_obj, label),
    }
