"""Seeded synthetic wide-gamut test images.

Each image is built in linear ProPhoto RGB as ``luminance * color``: the color
(chromaticity and saturation) varies smoothly across the frame, while the
luminance adds finer texture. Saturated regions fall outside the sRGB gamut,
so every image carries a sizeable set of clipped pixels with smooth
structure.
"""
from __future__ import annotations

import numpy as np

from .colorspace import gamut_mask

__all__ = ["smooth_field", "synthetic_image", "synthetic_suite", "ramp_image"]


def smooth_field(rng, height, width, n_waves=4, max_freq=2.0):
    """Sum of random low-frequency plane waves, rescaled to ``[0, 1]``."""
    yy, xx = np.mgrid[0:height, 0:width]
    u = xx / max(width - 1, 1)
    v = yy / max(height - 1, 1)
    f = np.zeros((height, width))
    for _ in range(n_waves):
        fx, fy = rng.uniform(-max_freq, max_freq, size=2)
        phase = rng.uniform(0, 2 * np.pi)
        f += rng.uniform(0.5, 1.0) * np.cos(2 * np.pi * (fx * u + fy * v) + phase)
    f -= f.min()
    return f / max(f.max(), 1e-12)


def synthetic_image(seed: int, height: int = 256, width: int = 256, texture: float = 0.5,
                    texture_freq: float = 16.0, hue_freq: float = 5.0, saturation: float = 0.45,
                    saturation_swing: float = 0.3, harmonics: int = 6, saturation_noise: float = 0.05,
                    noise_freq: float = 1.0, phase: float | None = None) -> np.ndarray:
    """One ``(H, W, 3)`` linear ProPhoto image in ``[0, 1]``.

    Saturation is mostly a periodic function of hue (``harmonics`` lobes
    around the hue circle) plus a little spatial noise, so the lost
    out-of-gamut values are largely predictable from the clipped color.
    ``phase`` fixes where the saturation lobes sit on the hue circle (random
    per image when ``None``); images sharing it share that relation.
    """
    rng = np.random.default_rng(seed)
    hue = 2 * np.pi * smooth_field(rng, height, width, 4, hue_freq) + rng.uniform(0, 2 * np.pi)
    drawn = rng.uniform(0, 2 * np.pi)
    phase = drawn if phase is None else phase
    sat = (saturation + saturation_swing * np.cos(harmonics * hue - phase)
           + saturation_noise * (smooth_field(rng, height, width, 3, noise_freq) - 0.5))
    # color direction on the plane orthogonal to gray
    a, b = np.cos(hue), np.sin(hue)
    color = np.stack([
        1 + sat * a,
        1 + sat * (-0.5 * a + 0.866 * b),
        1 + sat * (-0.5 * a - 0.866 * b),
    ], axis=-1)
    color /= color.max(axis=-1, keepdims=True)
    lum = 0.3 + 0.6 * smooth_field(rng, height, width, 3, 1.0)
    lum = lum * (1 - texture + texture * smooth_field(rng, height, width, 8, texture_freq))
    return np.clip(lum[..., None] * color, 0.0, 1.0)


def synthetic_suite(n: int = 10, size: int = 256, base_seed: int = 0, min_og: float = 0.10, **kwargs):
    """``n`` seeded images, each with at least ``min_og`` out-of-gamut pixels."""
    images = []
    seed = base_seed
    while len(images) < n:
        img = synthetic_image(seed, size, size, **kwargs)
        seed += 1
        if gamut_mask(img).mean() >= min_og:
            images.append(img)
    return images


def ramp_image(height: int = 256, width: int = 256) -> np.ndarray:
    """Horizontal hue ramp over a vertical brightness ramp; saturated hues clip."""
    yy, xx = np.mgrid[0:height, 0:width]
    hue = 2 * np.pi * xx / max(width - 1, 1)
    lum = 0.2 + 0.7 * yy / max(height - 1, 1)
    a, b = np.cos(hue), np.sin(hue)
    color = np.stack([1 + 0.9 * a, 1 + 0.9 * (-0.5 * a + 0.866 * b), 1 + 0.9 * (-0.5 * a - 0.866 * b)], -1)
    color /= color.max(axis=-1, keepdims=True)
    return np.clip(lum[..., None] * color, 0.0, 1.0)
