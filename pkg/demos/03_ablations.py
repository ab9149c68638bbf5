#!/usr/bin/env python3
# Which inputs does the network need, and does the sinusoidal encoding matter?
#
# Runs a short optimization per configuration on a few suite images. Shorter
# than the full 9,000-iteration schedule, so absolute numbers are lower, but
# the ordering is already visible.

# %%
import numpy as np

from gamutmlp.colorspace import reduce_gamut
from gamutmlp.encoding import EncoderConfig
from gamutmlp.metrics import evaluate
from gamutmlp.mlp import TrainConfig, fit, predict_image
from gamutmlp.synthetic import synthetic_suite

ITERS = 3000
images = synthetic_suite(3, 256)

configs = {
    "xyRGB + enc": EncoderConfig(),
    "RGB + enc": EncoderConfig(input_mode="rgb"),
    "xy + enc": EncoderConfig(input_mode="xy"),
    "xyRGB, no enc": EncoderConfig(encoding=False),
}

# %%
table = {name: [] for name in configs}
clip = []
for img in images:
    _, mask, clipped = reduce_gamut(img)
    clip.append(evaluate(clipped, img, mask).psnr_og)
    for name, enc in configs.items():
        res = fit(img, clipped, mask, TrainConfig(iterations=ITERS, encoder=enc))
        table[name].append(evaluate(predict_image(clipped, res.params), img, mask).psnr_og)

# %%
print(f"{'clip':>14}: {np.mean(clip):6.2f} dB")
for name, vals in table.items():
    print(f"{name:>14}: {np.mean(vals):6.2f} dB   per image {np.round(vals, 2)}")
