"""Per-pixel input descriptor and its sinusoidal feature encoding.

A pixel is described by up to five scalars in the fixed order
``x, y, R', G', B'`` where ``R'G'B'`` are its clipped ProPhoto values. Each
scalar is normalized to ``[-1, 1]`` and lifted to ``2K`` features::

    (sin(2^0 pi m), cos(2^0 pi m), ..., sin(2^(K-1) pi m), cos(2^(K-1) pi m))

with sine/cosine interleaved per frequency, frequencies ascending.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "InputMode",
    "EncoderConfig",
    "normalize_coord",
    "normalize_channel",
    "pixel_descriptors",
    "encode",
    "pixel_features",
    "image_features",
]


class InputMode(str, enum.Enum):
    XYRGB = "xyrgb"
    XY = "xy"
    RGB = "rgb"

    @property
    def n_scalars(self) -> int:
        return {"xyrgb": 5, "xy": 2, "rgb": 3}[self.value]

    @property
    def uses_coords(self) -> bool:
        return self is not InputMode.RGB

    @property
    def uses_colors(self) -> bool:
        return self is not InputMode.XY


@dataclass(frozen=True)
class EncoderConfig:
    """Which scalars feed the network and how they are lifted.

    With ``encoding=False`` the normalized scalars are passed through as-is and
    ``k`` is stored as 0, so configs differing only in an unused ``k`` compare equal.
    """

    k: int = 12
    input_mode: InputMode = InputMode.XYRGB
    encoding: bool = True

    def __post_init__(self):
        object.__setattr__(self, "input_mode", InputMode(self.input_mode))
        if not self.encoding:
            object.__setattr__(self, "k", 0)
        if self.encoding and self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")

    @property
    def dim(self) -> int:
        n = self.input_mode.n_scalars
        return 2 * self.k * n if self.encoding else n


def normalize_coord(x, size: int):
    """Map integer pixel index ``0 .. size-1`` onto ``[-1, 1]``; a single-pixel axis maps to 0."""
    x = np.asarray(x, dtype=np.float64)
    if size <= 1:
        return np.zeros_like(x)
    return 2.0 * x / (size - 1) - 1.0


def normalize_channel(v):
    return 2.0 * np.asarray(v, dtype=np.float64) - 1.0


def pixel_descriptors(xs, ys, colors, width: int, height: int, mode=InputMode.XYRGB):
    """Stack the normalized scalars selected by ``mode`` into an ``(n, S)`` array."""
    mode = InputMode(mode)
    cols = []
    if mode.uses_coords:
        cols.append(normalize_coord(xs, width))
        cols.append(normalize_coord(ys, height))
    if mode.uses_colors:
        colors = normalize_channel(colors)
        cols.extend(colors[:, c] for c in range(3))
    return np.stack(cols, axis=-1)


def encode(m, k: int = 12) -> np.ndarray:
    """Sinusoidal lift of every scalar in ``m`` (shape ``(n, S)``) to ``(n, 2*k*S)``."""
    m = np.asarray(m, dtype=np.float64)
    n, s = m.shape
    freqs = np.pi * 2.0 ** np.arange(k)
    phase = m[:, :, None] * freqs  # (n, S, K)
    out = np.empty((n, s, k, 2))
    out[..., 0] = np.sin(phase)
    out[..., 1] = np.cos(phase)
    return out.reshape(n, s * k * 2)


def pixel_features(xs, ys, colors, width, height, config: EncoderConfig, dtype=np.float32):
    d = pixel_descriptors(xs, ys, colors, width, height, config.input_mode)
    if config.encoding:
        d = encode(d, config.k)
    return d.astype(dtype, copy=False)


def image_features(clipped: np.ndarray, config: EncoderConfig, index=None, dtype=np.float32):
    """Features for the pixels at flat ``index`` (all pixels when ``None``) of an ``(H, W, 3)`` image."""
    h, w = clipped.shape[:2]
    flat = clipped.reshape(-1, 3)
    if index is None:
        index = np.arange(h * w)
    ys, xs = np.divmod(np.asarray(index), w)
    return pixel_features(xs, ys, flat[index], w, h, config, dtype)
