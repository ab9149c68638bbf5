"""Gamut reduction with embedded recovery model, and the matching expansion."""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from . import codec
from .colorspace import expand_gamut_naive, reduce_gamut
from .mlp import FitResult, MlpParams, TrainConfig, fit, predict_image, zero_params
from .pngio import decode_srgb_png, encode_srgb_png

log = logging.getLogger(__name__)

__all__ = ["OptimizationStats", "ReductionResult", "reduce_and_embed", "expand_and_recover", "recover_params"]


@dataclass(frozen=True)
class OptimizationStats:
    initial_loss: float
    final_loss: float
    wall_time: float
    iterations: int
    n_samples: int
    n_og_samples: int

    @classmethod
    def from_fit(cls, r: FitResult) -> "OptimizationStats":
        return cls(r.initial_loss, r.final_loss, r.wall_time, r.iterations, r.n_samples, r.n_og)


@dataclass
class ReductionResult:
    png: bytes  # 8-bit sRGB PNG carrying the payload
    srgb: np.ndarray
    mask: np.ndarray
    clipped: np.ndarray
    params: MlpParams
    stats: OptimizationStats
    recovered: np.ndarray  # what expand_and_recover(png) will return

    @property
    def payload(self) -> bytes:
        return codec.extract_png(self.png)


def reduce_and_embed(prophoto: np.ndarray, config: TrainConfig | None = None,
                     meta_init: MlpParams | None = None) -> ReductionResult:
    """Convert to 8-bit sRGB, fit a recovery network, and embed it in the PNG.

    The network is trained against the clipped ProPhoto image derived from the
    *quantized* sRGB, so it also learns to undo part of the 8-bit rounding.
    With ``meta_init`` the optimization starts from those weights (the caller
    picks the shorter iteration count through ``config``). A fully in-gamut
    image gets an all-zero network, so its recovery is the naive expansion.
    """
    config = config or TrainConfig()
    if meta_init is not None:
        if meta_init.hidden != config.hidden or meta_init.encoder != config.encoder:
            raise ValueError("meta init architecture does not match the training config")
    srgb, mask, clipped = reduce_gamut(prophoto, quantize=True)
    if not mask.any():
        # nothing was clipped: a zero residual reproduces the naive expansion,
        # which already meets the 8-bit round-trip bound
        log.info("image is fully in gamut; embedding an identity network")
        config = replace(config, iterations=0)
        meta_init = zero_params(config.hidden, config.encoder)
    result = fit(prophoto, clipped, mask, config, init=meta_init)
    h, w = mask.shape
    payload = codec.serialize(result.params, w, h)
    png = codec.embed_png(encode_srgb_png(srgb), payload)
    recovered = predict_image(clipped, result.params)
    return ReductionResult(png, srgb, mask, clipped, result.params, OptimizationStats.from_fit(result), recovered)


def recover_params(png: bytes) -> MlpParams:
    params, _ = codec.deserialize(codec.extract_png(png))
    return params


def expand_and_recover(png: bytes) -> np.ndarray:
    """Wide-gamut reconstruction from a PNG written by :func:`reduce_and_embed`.

    Raises :class:`codec.MissingMetadataError` (or another
    :class:`codec.PayloadError`) when no usable payload is present; callers
    wanting the plain conversion should use :func:`expand_gamut_naive`.
    """
    params, (w, h) = codec.deserialize(codec.extract_png(png))
    srgb = decode_srgb_png(png)
    if (w, h) != (0, 0) and srgb.shape[:2] != (h, w):
        raise codec.PayloadError(f"payload was made for a {w}x{h} image, PNG is {srgb.shape[1]}x{srgb.shape[0]}")
    return predict_image(expand_gamut_naive(srgb), params)
