"""PNG pixel I/O: 16-bit linear ProPhoto, 8-bit sRGB, and 8-bit masks.

ProPhoto files are treated as linear-light; sample values are simply divided
by ``2**bitdepth - 1``.
"""
from __future__ import annotations

import io
import os

import numpy as np
import png

from .colorspace import from_uint8, to_uint8

__all__ = [
    "read_png",
    "decode_png",
    "encode_png",
    "read_prophoto_png",
    "write_prophoto_png",
    "encode_prophoto_png",
    "encode_srgb_png",
    "decode_srgb_png",
    "encode_mask_png",
    "decode_mask_png",
]


def decode_png(data: bytes) -> tuple[np.ndarray, int]:
    """Decode to an integer ``(H, W, C)`` array and its bit depth.

    Gray and gray+alpha images keep 1 and 2 planes; palettes are expanded.
    """
    reader = png.Reader(bytes=data)
    width, height, rows, info = reader.asDirect()
    planes = info["planes"]
    depth = info["bitdepth"]
    dtype = np.uint16 if depth > 8 else np.uint8
    arr = np.vstack([np.asarray(r, dtype=dtype) for r in rows]).reshape(height, width, planes)
    return arr, depth


def read_png(path) -> tuple[np.ndarray, int]:
    with open(path, "rb") as f:
        return decode_png(f.read())


def encode_png(arr: np.ndarray, bitdepth: int) -> bytes:
    arr = np.asarray(arr)
    if arr.ndim == 2:
        arr = arr[..., None]
    h, w, planes = arr.shape
    writer = png.Writer(w, h, greyscale=planes == 1, alpha=False, bitdepth=bitdepth)
    buf = io.BytesIO()
    writer.write(buf, arr.reshape(h, w * planes))
    return buf.getvalue()


def _to_rgb(arr: np.ndarray) -> np.ndarray:
    planes = arr.shape[-1]
    if planes in (1, 2):
        return np.repeat(arr[..., :1], 3, axis=-1)
    return arr[..., :3]


def read_prophoto_png(path) -> np.ndarray:
    """Linear ProPhoto image in ``[0, 1]`` from an 8- or 16-bit PNG (alpha dropped)."""
    arr, depth = read_png(path)
    return _to_rgb(arr).astype(np.float64) / (2**depth - 1)


def encode_prophoto_png(img: np.ndarray) -> bytes:
    img = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    return encode_png(np.floor(img * 65535.0 + 0.5).astype(np.uint16), 16)


def write_prophoto_png(path, img: np.ndarray) -> None:
    data = encode_prophoto_png(img)
    with open(path, "wb") as f:
        f.write(data)


def encode_srgb_png(srgb: np.ndarray) -> bytes:
    """8-bit RGB PNG; values are rounded half-up onto the ``k / 255`` grid."""
    return encode_png(to_uint8(srgb), 8)


def decode_srgb_png(data: bytes) -> np.ndarray:
    arr, depth = decode_png(data)
    if depth != 8:
        return _to_rgb(arr).astype(np.float64) / (2**depth - 1)
    return from_uint8(_to_rgb(arr))


def encode_mask_png(mask: np.ndarray) -> bytes:
    """8-bit grayscale, 255 where the mask is set."""
    return encode_png(np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8), 8)


def decode_mask_png(data: bytes) -> np.ndarray:
    arr, _ = decode_png(data)
    return arr[..., 0] > 0


def read_bytes(path: str | os.PathLike) -> bytes:
    with open(path, "rb") as f:
        return f.read()
