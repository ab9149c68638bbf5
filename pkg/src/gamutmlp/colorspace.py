"""Linear ProPhoto RGB <-> sRGB transforms with absolute-colorimetric clipping.

Images are plain ``numpy`` arrays of shape ``(H, W, 3)``:

* ProPhoto images are linear-light, unit range, float64. ProPhoto files are
  read as-is: no native 1.8 gamma is removed before the matrix is applied.
* sRGB images are gamma-encoded values in ``[0, 1]``. In quantized mode every
  value lies on the ``k / 255`` grid.
* Gamut masks are ``(H, W)`` boolean arrays, ``True`` marking out-of-gamut
  pixels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainError",
    "PROPHOTO_TO_SRGB",
    "SRGB_TO_PROPHOTO",
    "SoftClipKnee",
    "gamma_encode",
    "gamma_decode",
    "quantize",
    "to_uint8",
    "from_uint8",
    "to_linear_srgb",
    "gamut_mask",
    "reduce_gamut",
    "expand_gamut_naive",
    "soft_clip",
    "soft_clip_expand",
    "quantization_error_bound",
]


class DomainError(ValueError):
    """Raised when a transfer function receives a value outside ``[0, 1]``."""


# ProPhoto (D50) -> linear sRGB (D65), CAT02 adaptation folded in. Rounded to
# four decimals; kept verbatim so results are bit-reproducible.
PROPHOTO_TO_SRGB = np.array(
    [
        [2.0365, -0.7376, -0.2993],
        [-0.2257, 1.2232, 0.0027],
        [-0.0105, -0.1349, 1.1452],
    ]
)
SRGB_TO_PROPHOTO = np.linalg.inv(PROPHOTO_TO_SRGB)

if np.max(np.abs(PROPHOTO_TO_SRGB @ SRGB_TO_PROPHOTO - np.eye(3))) >= 1e-6:
    raise RuntimeError("ProPhoto/sRGB matrix inverse failed the identity check")

PROPHOTO_TO_SRGB.setflags(write=False)
SRGB_TO_PROPHOTO.setflags(write=False)

# IEC 61966-2-1 constants
_LINEAR_CUTOFF = 0.0031308
_ENCODED_CUTOFF = 0.04045
_SLOPE = 12.92
_A = 0.055
_GAMMA = 2.4

_DOMAIN_SLACK = 1e-9


def _check_unit(v: np.ndarray, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{name}: non-finite input")
    if v.size and (v.min() < -_DOMAIN_SLACK or v.max() > 1.0 + _DOMAIN_SLACK):
        raise DomainError(
            f"{name}: input outside [0, 1] (min={v.min():.6g}, max={v.max():.6g})"
        )
    return np.clip(v, 0.0, 1.0)


def gamma_encode(v):
    """sRGB opto-electronic transfer function, linear -> encoded."""
    v = _check_unit(v, "gamma_encode")
    out = np.where(
        v <= _LINEAR_CUTOFF,
        _SLOPE * v,
        (1.0 + _A) * np.power(v, 1.0 / _GAMMA) - _A,
    )
    return out if out.ndim else float(out)


def gamma_decode(v):
    """Inverse of :func:`gamma_encode`, encoded -> linear."""
    v = _check_unit(v, "gamma_decode")
    out = np.where(
        v <= _ENCODED_CUTOFF,
        v / _SLOPE,
        np.power((v + _A) / (1.0 + _A), _GAMMA),
    )
    return out if out.ndim else float(out)


def quantize(v: np.ndarray) -> np.ndarray:
    """Round half-up onto the 8-bit grid, returning floats ``k / 255``."""
    return from_uint8(to_uint8(v))


def to_uint8(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    return np.floor(np.clip(v, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def from_uint8(u: np.ndarray) -> np.ndarray:
    return np.asarray(u, dtype=np.float64) / 255.0


def to_linear_srgb(prophoto: np.ndarray) -> np.ndarray:
    """Apply the ProPhoto -> linear sRGB matrix per pixel (no clipping)."""
    return np.asarray(prophoto, dtype=np.float64) @ PROPHOTO_TO_SRGB.T


def gamut_mask(prophoto: np.ndarray) -> np.ndarray:
    """True where any linear-sRGB channel falls outside ``[0, 1]``.

    The interval is closed: values of exactly 0 or 1 are in gamut.
    """
    lin = to_linear_srgb(prophoto)
    return np.any((lin < 0.0) | (lin > 1.0), axis=-1)


def _check_image(img: np.ndarray, name: str) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[-1] != 3:
        raise ValueError(f"{name}: expected an (H, W, 3) image, got shape {img.shape}")
    if img.shape[0] * img.shape[1] == 0:
        raise ValueError(f"{name}: empty image")
    if not np.all(np.isfinite(img)):
        raise ValueError(f"{name}: image contains non-finite values")
    return img


def reduce_gamut(prophoto: np.ndarray, quantize: bool = True):
    """Convert a linear ProPhoto image to sRGB by clipping.

    Returns ``(srgb, mask, clipped_prophoto)``. ``clipped_prophoto`` is the
    image obtained by expanding ``srgb`` back with the inverse transform, so
    in quantized mode it carries the 8-bit rounding as well as the clipping.
    """
    img = _check_image(prophoto, "reduce_gamut")
    if img.min() < -_DOMAIN_SLACK or img.max() > 1.0 + _DOMAIN_SLACK:
        raise ValueError("reduce_gamut: ProPhoto input must lie in [0, 1]")
    lin = img @ PROPHOTO_TO_SRGB.T
    mask = np.any((lin < 0.0) | (lin > 1.0), axis=-1)
    srgb = gamma_encode(np.clip(lin, 0.0, 1.0))
    if quantize:
        srgb = from_uint8(to_uint8(srgb))
    return srgb, mask, expand_gamut_naive(srgb)


def expand_gamut_naive(srgb: np.ndarray) -> np.ndarray:
    """sRGB -> linear ProPhoto with the inverse matrix; clipped colors stay clipped."""
    srgb = _check_image(srgb, "expand_gamut_naive")
    return gamma_decode(srgb) @ SRGB_TO_PROPHOTO.T


@dataclass(frozen=True)
class SoftClipKnee:
    """Per-channel extent of the linear-sRGB values compressed by :func:`soft_clip`.

    ``low[c]`` is ``min(0, channel minimum)`` and ``high[c]`` is
    ``max(1, channel maximum)``; a channel whose values already fit keeps the
    identity mapping on that side.
    """

    low: tuple[float, float, float]
    high: tuple[float, float, float]

    KNEE = 0.1


def _knee_forward(v, lo, hi, k):
    out = v.copy()
    if hi > 1.0:
        top = v > 1.0 - k
        out[top] = (1.0 - k) + (v[top] - (1.0 - k)) * k / (hi - (1.0 - k))
    if lo < 0.0:
        bot = v < k
        out[bot] = k - (k - v[bot]) * k / (k - lo)
    return out


def _knee_inverse(v, lo, hi, k):
    out = v.copy()
    if hi > 1.0:
        top = v > 1.0 - k
        out[top] = (1.0 - k) + (v[top] - (1.0 - k)) * (hi - (1.0 - k)) / k
    if lo < 0.0:
        bot = v < k
        out[bot] = k - (k - v[bot]) * (k - lo) / k
    return out


def soft_clip(prophoto: np.ndarray, quantize: bool = False):
    """Soft-clipping baseline: compress out-of-range values into the outer 10%.

    Each linear-sRGB channel keeps ``[0.1, 0.9]`` untouched and maps
    ``[0.9, high]`` affinely onto ``[0.9, 1]`` and ``[low, 0.1]`` onto
    ``[0, 0.1]``. Returns ``(srgb, mask, knee)``; ``knee`` must travel with the
    image for :func:`soft_clip_expand`.
    """
    img = _check_image(prophoto, "soft_clip")
    lin = img @ PROPHOTO_TO_SRGB.T
    mask = np.any((lin < 0.0) | (lin > 1.0), axis=-1)
    low = np.minimum(lin.reshape(-1, 3).min(axis=0), 0.0)
    high = np.maximum(lin.reshape(-1, 3).max(axis=0), 1.0)
    k = SoftClipKnee.KNEE
    comp = np.empty_like(lin)
    for c in range(3):
        comp[..., c] = _knee_forward(lin[..., c], low[c], high[c], k)
    srgb = gamma_encode(np.clip(comp, 0.0, 1.0))
    if quantize:
        srgb = from_uint8(to_uint8(srgb))
    knee = SoftClipKnee(tuple(float(x) for x in low), tuple(float(x) for x in high))
    return srgb, mask, knee


def soft_clip_expand(srgb: np.ndarray, knee: SoftClipKnee) -> np.ndarray:
    srgb = _check_image(srgb, "soft_clip_expand")
    lin = gamma_decode(srgb)
    k = SoftClipKnee.KNEE
    out = np.empty_like(lin)
    for c in range(3):
        out[..., c] = _knee_inverse(lin[..., c], knee.low[c], knee.high[c], k)
    return out @ SRGB_TO_PROPHOTO.T


def quantization_error_bound() -> float:
    """Worst-case per-channel ProPhoto error of an 8-bit round trip for in-gamut pixels.

    Half a code value, times the steepest slope of the sRGB decoding curve
    (reached at 1), times the largest absolute row sum of the inverse matrix.
    """
    max_decode_slope = _GAMMA / (1.0 + _A)
    row_sum = np.abs(SRGB_TO_PROPHOTO).sum(axis=1).max()
    return float(row_sum * max_decode_slope * 0.5 / 255.0)
