#!/usr/bin/env python3
# Fit a recovery network at save time, ship it inside the PNG, and use it on load.
#
# Writes reduced.png (sRGB with the embedded model) and recovered.png (16-bit
# ProPhoto) to the working directory.

# %%
import time

from gamutmlp import codec
from gamutmlp.metrics import evaluate
from gamutmlp.mlp import TrainConfig
from gamutmlp.pipeline import expand_and_recover, reduce_and_embed
from gamutmlp.pngio import write_prophoto_png
from gamutmlp.synthetic import synthetic_image

img = synthetic_image(0, 256, 256)

# %% reduce: clip to sRGB, optimize the MLP against the original, embed it
t = time.perf_counter()
res = reduce_and_embed(img, TrainConfig(iterations=3000))
print(f"optimized in {time.perf_counter() - t:.1f}s, loss {res.stats.initial_loss:.3g} -> {res.stats.final_loss:.3g}")
with open("reduced.png", "wb") as f:
    f.write(res.png)

# %% the payload is a fixed-size binary blob in an iTXt chunk
header = codec.read_header(res.payload)
print(f"payload {len(res.payload)} bytes, hidden={header.hidden}, K={header.encoder.k}, "
      f"{header.width}x{header.height}")

# %% anyone holding the PNG can recover the wide-gamut image
with open("reduced.png", "rb") as f:
    recovered = expand_and_recover(f.read())
write_prophoto_png("recovered.png", recovered)

# %% compare against plain clipping
clip = evaluate(res.clipped, img, res.mask)
ours = evaluate(recovered, img, res.mask)
print(f"PSNR-OG  clip {clip.psnr_og:.2f} dB  ->  recovered {ours.psnr_og:.2f} dB")
