"""Bit-exact file I/O: the SRT1 raster-tensor format and binary PNM.

SRT1 ("simple raster tensor, version 1") layout:

    bytes 0..3   magic "SRT1"
    bytes 4..    one UTF-8 JSON object terminated by a single '\\n'
    rest         raw payload, little-endian, row-major, channel fastest

The header object carries dims, spacing (mm per axis), channels, dtype
(u8 | u16 | f32), kind (image | mask | prob) and the payload byte
length. Masks additionally carry class_names, probability maps carry
class_labels. Headers are serialized canonically (sorted keys, no
whitespace), so identical inputs always produce byte-identical files.
See docs/srt1_format.md for the one-page format description.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .core import GridImage, LabelMask, ProbabilityMap
from .errors import TensorFormatError

__all__ = ["write_tensor", "read_tensor", "write_pnm", "read_pnm"]

MAGIC = b"SRT1"

_DTYPES = {
    "u8": np.dtype("<u1"),
    "u16": np.dtype("<u2"),
    "f32": np.dtype("<f4"),
}
_MAX_HEADER_BYTES = 1 << 20


def _dtype_tag(dt: np.dtype) -> str:
    for tag, d in _DTYPES.items():
        if d == dt.newbyteorder("<"):
            return tag
    raise TensorFormatError(
        f"dtype {dt} not representable in SRT1 (use u8, u16, or f32)"
    )


def _mask_storage(labels: np.ndarray) -> tuple[str, np.ndarray]:
    if labels.size and labels.min() < 0:
        raise TensorFormatError("dtype not representable: negative labels")
    top = int(labels.max()) if labels.size else 0
    if top <= 0xFF:
        return "u8", labels.astype("<u1")
    if top <= 0xFFFF:
        return "u16", labels.astype("<u2")
    raise TensorFormatError(f"dtype not representable: label {top} exceeds u16")


def write_tensor(obj: GridImage | LabelMask | ProbabilityMap, path: str | Path) -> None:
    """Serialize an image, mask, or probability map; see module docstring."""
    header: dict = {"dims": list(obj.dims), "spacing": list(obj.spacing)}
    if isinstance(obj, GridImage):
        payload = np.ascontiguousarray(obj.values).astype(
            _DTYPES[_dtype_tag(obj.values.dtype)], copy=False
        )
        header.update(kind="image", channels=obj.channels, dtype=_dtype_tag(obj.values.dtype))
    elif isinstance(obj, LabelMask):
        tag, payload = _mask_storage(obj.labels)
        header.update(
            kind="mask",
            channels=1,
            dtype=tag,
            class_names={str(k): v for k, v in sorted(obj.class_names.items())},
        )
    elif isinstance(obj, ProbabilityMap):
        payload = np.ascontiguousarray(obj.probs).astype("<f4", copy=False)
        header.update(
            kind="prob",
            channels=len(obj.class_labels),
            dtype="f32",
            class_labels=list(obj.class_labels),
        )
    else:
        raise TensorFormatError(f"cannot serialize object of type {type(obj).__name__}")

    raw = payload.tobytes(order="C")
    header["payload"] = len(raw)
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    Path(path).write_bytes(MAGIC + head + b"\n" + raw)


def _header_error(msg: str) -> TensorFormatError:
    return TensorFormatError(f"malformed header: {msg}")


def read_tensor(path: str | Path) -> GridImage | LabelMask | ProbabilityMap:
    """Inverse of :func:`write_tensor`; the kind field selects the type."""
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise TensorFormatError(f"bad magic: {blob[:4]!r}")
    nl = blob.find(b"\n", 4, 4 + _MAX_HEADER_BYTES)
    if nl < 0:
        raise _header_error("no terminating newline")
    try:
        header = json.loads(blob[4:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise _header_error(str(e)) from None
    if not isinstance(header, dict):
        raise _header_error("header is not a JSON object")

    try:
        dims = tuple(int(d) for d in header["dims"])
        spacing = tuple(float(s) for s in header["spacing"])
        channels = int(header["channels"])
        dtype_tag = header["dtype"]
        kind = header["kind"]
        declared = int(header["payload"])
    except (KeyError, TypeError, ValueError) as e:
        raise _header_error(f"missing or invalid field ({e})") from None
    if dtype_tag not in _DTYPES:
        raise _header_error(f"unknown dtype {dtype_tag!r}")
    if kind not in ("image", "mask", "prob"):
        raise _header_error(f"unknown kind {kind!r}")

    dt = _DTYPES[dtype_tag]
    expected = int(np.prod(dims)) * channels * dt.itemsize
    raw = blob[nl + 1 :]
    if declared != expected:
        raise TensorFormatError(
            f"payload length mismatch: header declares {declared} bytes, "
            f"dims x channels x dtype require {expected}"
        )
    if len(raw) < expected:
        raise TensorFormatError(
            f"truncated payload: {len(raw)} of {expected} bytes present"
        )
    if len(raw) > expected:
        raise TensorFormatError(
            f"payload length mismatch: {len(raw)} bytes present, {expected} expected"
        )

    values = np.frombuffer(raw, dtype=dt).reshape(dims + (channels,))
    if kind == "image":
        if channels not in (1, 3):
            raise _header_error(f"image channels must be 1 or 3, got {channels}")
        return GridImage(dims=dims, spacing=spacing, channels=channels, values=values)
    if kind == "mask":
        if channels != 1:
            raise _header_error("mask channels must be 1")
        names = {int(k): str(v) for k, v in header.get("class_names", {}).items()}
        return LabelMask(
            dims=dims, spacing=spacing, labels=values[..., 0], class_names=names
        )
    # prob
    if dtype_tag != "f32":
        raise _header_error("prob payload must be f32")
    labels = header.get("class_labels")
    if not isinstance(labels, list) or len(labels) != channels:
        raise _header_error("class_labels must list one label per channel")
    if values.size and (values.min() < 0.0 or values.max() > 1.0):
        raise TensorFormatError("probability out of range [0, 1]")
    return ProbabilityMap(
        dims=dims,
        spacing=spacing,
        class_labels=tuple(int(c) for c in labels),
        probs=values,
    )


# --- binary PNM (P5 grayscale / P6 RGB, maxval 255) ---


def write_pnm(image: GridImage, path: str | Path) -> None:
    """Write a 2-D uint8 image as P5 (1 channel) or P6 (3 channels)."""
    if len(image.dims) != 2:
        raise TensorFormatError("PNM supports 2-D images only")
    if image.values.dtype != np.uint8:
        raise TensorFormatError("PNM output requires uint8 values")
    h, w = image.dims
    tag = b"P5" if image.channels == 1 else b"P6"
    header = tag + b"\n" + f"{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + np.ascontiguousarray(image.values).tobytes())


def _pnm_tokens(blob: bytes):
    """Yield whitespace-separated header tokens, skipping # comments."""
    i = 0
    while i < len(blob):
        c = blob[i : i + 1]
        if c.isspace():
            i += 1
            continue
        if c == b"#":
            j = blob.find(b"\n", i)
            i = len(blob) if j < 0 else j + 1
            continue
        j = i
        while j < len(blob) and not blob[j : j + 1].isspace():
            j += 1
        yield blob[i:j], j
        i = j


def read_pnm(path: str | Path) -> GridImage:
    """Read a binary P5/P6 file; spacing defaults to (1.0, 1.0)."""
    blob = Path(path).read_bytes()
    magic = blob[:2]
    if magic not in (b"P5", b"P6"):
        raise TensorFormatError(
            f"unsupported PNM variant {magic!r}: only binary P5/P6 are accepted"
        )
    channels = 1 if magic == b"P5" else 3
    it = _pnm_tokens(blob[2:])
    try:
        (w_tok, _), (h_tok, _), (maxval_tok, end) = (next(it) for _ in range(3))
        w, h, maxval = int(w_tok), int(h_tok), int(maxval_tok)
    except (StopIteration, ValueError):
        raise TensorFormatError("malformed PNM header") from None
    if maxval != 255:
        raise TensorFormatError(f"PNM maxval must be 255, got {maxval}")
    if w <= 0 or h <= 0:
        raise TensorFormatError(f"bad PNM size {w}x{h}")
    payload = blob[2 + end + 1 :]
    expected = w * h * channels
    if len(payload) != expected:
        raise TensorFormatError(
            f"PNM payload is {len(payload)} bytes, {expected} expected"
        )
    values = np.frombuffer(payload, dtype=np.uint8).reshape((h, w, channels))
    return GridImage(dims=(h, w), spacing=(1.0, 1.0), channels=channels, values=values)
