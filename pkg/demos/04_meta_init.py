#!/usr/bin/env python3
# Learning a starting point so each new image needs fewer iterations.
#
# Reptile over a few training images, then a 1,200-iteration run from the
# learned init is compared with random-init runs on an unseen image.

# %%
from gamutmlp.colorspace import reduce_gamut
from gamutmlp.metrics import evaluate
from gamutmlp.mlp import MetaConfig, TrainConfig, fit, meta_train, predict_image
from gamutmlp.synthetic import synthetic_image

SIZE = 128


def triple(seed):
    img = synthetic_image(seed, SIZE, SIZE, phase=1.0, harmonics=3, saturation_noise=0.0)
    _, mask, clipped = reduce_gamut(img)
    return img, clipped, mask


train = [triple(s) for s in range(100, 104)]
img, clipped, mask = triple(200)

# %% meta-train: short inner SGD loops, pulled together with step 0.5
meta = meta_train(train, MetaConfig(inner_iterations=3000, inner_lr=0.1, outer_rate=0.5))


# %%
def psnr_og(iterations, init=None):
    res = fit(img, clipped, mask, TrainConfig(iterations=iterations), init=init)
    return res.initial_loss, evaluate(predict_image(clipped, res.params), img, mask).psnr_og


for label, iters, init in [("random, 1200", 1200, None), ("meta, 1200", 1200, meta), ("random, 9000", 9000, None)]:
    loss0, p = psnr_og(iters, init)
    print(f"{label:>13}: starting loss {loss0:9.3f}   PSNR-OG {p:.2f} dB")
