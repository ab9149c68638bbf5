#!/usr/bin/env python3
# What is lost when a wide-gamut image is saved as sRGB.
#
# Builds a hue ramp in linear ProPhoto, converts it to 8-bit sRGB by clipping,
# converts back, and measures how far the clipped colors land from the truth.

# %%
import numpy as np

from gamutmlp.colorspace import (
    PROPHOTO_TO_SRGB,
    expand_gamut_naive,
    quantization_error_bound,
    reduce_gamut,
    to_linear_srgb,
)
from gamutmlp.metrics import chromaticity, evaluate
from gamutmlp.synthetic import ramp_image

np.set_printoptions(precision=4, suppress=True)

# %% the conversion matrix; rows sum to ~1 so white maps to white
print(PROPHOTO_TO_SRGB)
print("row sums", PROPHOTO_TO_SRGB.sum(axis=1))

# %% a saturated ProPhoto green is far outside sRGB
green = np.array([0.0, 1.0, 0.0])
print("ProPhoto green in linear sRGB:", to_linear_srgb(green))

# %% reduce a whole image
img = ramp_image(128, 256)
srgb, mask, clipped = reduce_gamut(img)
print(f"{mask.mean():.1%} of pixels are out of gamut")

# %% in-gamut pixels only pick up 8-bit rounding
ig_err = np.abs(clipped[~mask] - img[~mask]).max()
print(f"max in-gamut error {ig_err:.5f} (bound {quantization_error_bound():.5f})")

# %% out-of-gamut pixels are where the damage is
rep = evaluate(clipped, img, mask)
print(f"clip baseline: PSNR {rep.psnr:.2f} dB overall, {rep.psnr_og:.2f} dB on OG pixels")

# %% the clipped colors collapse onto the sRGB triangle in the chromaticity diagram
xy_true = chromaticity(img, mask)
xy_clip = chromaticity(expand_gamut_naive(srgb), mask)
print("xy spread, original:", xy_true.std(axis=0), " clipped:", xy_clip.std(axis=0))
