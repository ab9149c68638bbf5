"""Residual-predicting MLP with a hand-written backward pass.

The network is three linear layers, ``D -> H -> H -> 3``, with ReLU after the
first two. Its output is added to the clipped ProPhoto color of the pixel, so
an all-zero network is the identity.

Weights are stored ``(fan_in, fan_out)`` so a layer is ``x @ W + b``. Training
runs in float32; pass ``dtype=np.float64`` to :func:`init_params` (or use
:meth:`MlpParams.astype`) for gradient checking.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .encoding import EncoderConfig, image_features

log = logging.getLogger(__name__)

__all__ = [
    "MlpParams",
    "TrainConfig",
    "MetaConfig",
    "PixelPool",
    "FitResult",
    "Adam",
    "SGD",
    "FAST_ITERATIONS",
    "param_count",
    "init_params",
    "zero_params",
    "forward",
    "loss_and_grads",
    "sample_pixels",
    "set_loss",
    "run_iterations",
    "fit",
    "optimize",
    "optimize_fast",
    "meta_train",
    "predict_image",
]

FAST_ITERATIONS = 1200


def param_count(input_dim: int, hidden: int, output_dim: int = 3) -> int:
    return input_dim * hidden + hidden + hidden * hidden + hidden + hidden * output_dim + output_dim


@dataclass
class MlpParams:
    """Weights ``[W1, b1, W2, b2, W3, b3]`` plus the encoder they expect."""

    weights: list[np.ndarray]
    encoder: EncoderConfig = field(default_factory=EncoderConfig)

    def __post_init__(self):
        if len(self.weights) != 6:
            raise ValueError(f"expected 6 weight arrays, got {len(self.weights)}")
        w1, b1, w2, b2, w3, b3 = self.weights
        h = w1.shape[1]
        shapes = [w.shape for w in self.weights]
        expected = [(self.encoder.dim, h), (h,), (h, h), (h,), (h, 3), (3,)]
        if shapes != expected:
            raise ValueError(f"weight shapes {shapes} do not match {expected}")

    @property
    def hidden(self) -> int:
        return self.weights[0].shape[1]

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def layer_dims(self) -> tuple[int, int, int, int]:
        return (self.input_dim, self.hidden, self.hidden, 3)

    @property
    def dtype(self):
        return self.weights[0].dtype

    @property
    def param_count(self) -> int:
        return sum(w.size for w in self.weights)

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], self.encoder)

    def astype(self, dtype) -> "MlpParams":
        return MlpParams([w.astype(dtype) for w in self.weights], self.encoder)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([w.ravel() for w in self.weights])

    def with_vector(self, vec: np.ndarray) -> "MlpParams":
        out, pos = [], 0
        for w in self.weights:
            out.append(np.asarray(vec[pos : pos + w.size], dtype=w.dtype).reshape(w.shape))
            pos += w.size
        return MlpParams(out, self.encoder)

    def same_architecture(self, other: "MlpParams") -> bool:
        return self.encoder == other.encoder and self.layer_dims == other.layer_dims

    def bitwise_equal(self, other: "MlpParams") -> bool:
        return (
            self.same_architecture(other)
            and all(a.dtype == b.dtype for a, b in zip(self.weights, other.weights))
            and all(a.tobytes() == b.tobytes() for a, b in zip(self.weights, other.weights))
        )


def init_params(hidden: int = 32, encoder: EncoderConfig | None = None, seed: int = 0, dtype=np.float32) -> MlpParams:
    """Uniform fan-in initialization, ``U(-1/sqrt(fan_in), +1/sqrt(fan_in))``, zero biases."""
    encoder = encoder or EncoderConfig()
    rng = np.random.default_rng(seed)
    dims = (encoder.dim, hidden, hidden, 3)
    weights = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(dtype))
        weights.append(np.zeros(fan_out, dtype=dtype))
    return MlpParams(weights, encoder)


def zero_params(hidden: int = 32, encoder: EncoderConfig | None = None, dtype=np.float32) -> MlpParams:
    encoder = encoder or EncoderConfig()
    dims = (encoder.dim, hidden, hidden, 3)
    weights = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights += [np.zeros((fan_in, fan_out), dtype=dtype), np.zeros(fan_out, dtype=dtype)]
    return MlpParams(weights, encoder)


def _check_features(params: MlpParams, features: np.ndarray):
    if features.ndim != 2 or features.shape[1] != params.input_dim:
        raise ValueError(
            f"feature shape {features.shape} does not match network input dim {params.input_dim}"
        )


def _forward(weights, x, base):
    w1, b1, w2, b2, w3, b3 = weights
    h1 = x @ w1
    h1 += b1
    np.maximum(h1, 0, out=h1)
    h2 = h1 @ w2
    h2 += b2
    np.maximum(h2, 0, out=h2)
    out = h2 @ w3
    out += b3
    out += base
    return out, h1, h2


def forward(params: MlpParams, features: np.ndarray, base: np.ndarray) -> np.ndarray:
    """Predicted colors, ``f(features) + base``; ``base`` holds the clipped colors."""
    _check_features(params, features)
    dt = params.dtype
    out, _, _ = _forward(params.weights, features.astype(dt, copy=False), base.astype(dt, copy=False))
    return out


def loss_and_grads(params: MlpParams, features, base, targets):
    """Summed squared error over the batch and its exact gradient w.r.t. every weight."""
    _check_features(params, features)
    if len(features) == 0:
        raise ValueError("empty batch")
    dt = params.dtype
    x = features.astype(dt, copy=False)
    pred, h1, h2 = _forward(params.weights, x, base.astype(dt, copy=False))
    diff = pred - targets.astype(dt, copy=False)
    loss = float(np.sum(np.square(diff, dtype=np.float64)))

    _, _, w2, _, w3, _ = params.weights
    d = 2 * diff
    g_w3 = h2.T @ d
    g_b3 = d.sum(axis=0)
    d2 = d @ w3.T
    d2 *= h2 > 0
    g_w2 = h1.T @ d2
    g_b2 = d2.sum(axis=0)
    d1 = d2 @ w2.T
    d1 *= h1 > 0
    g_w1 = x.T @ d1
    g_b1 = d1.sum(axis=0)
    return loss, [g_w1, g_b1, g_w2, g_b2, g_w3, g_b3]


class Adam:
    def __init__(self, params: MlpParams, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(w) for w in params.weights]
        self.v = [np.zeros_like(w) for w in params.weights]

    def step(self, params: MlpParams, grads, batch_size: int | None = None):
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for w, g, m, v in zip(params.weights, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            w -= (self.lr / c1) * m / (np.sqrt(v / c2) + self.eps)


class SGD:
    """Plain gradient descent on the per-sample mean gradient.

    The loss is a sum over the batch, so the step is taken on ``grad / batch_size``
    to keep the learning rate independent of how many pixels are sampled.
    """

    def __init__(self, params: MlpParams, lr=1e-2):
        self.lr = lr

    def step(self, params: MlpParams, grads, batch_size: int | None = None):
        scale = self.lr / (batch_size or 1)
        for w, g in zip(params.weights, grads):
            w -= scale * g


@dataclass(frozen=True)
class TrainConfig:
    """Per-image optimization settings; defaults follow the standard schedule."""

    ig_rate: float = 0.02
    og_rate: float = 0.20
    iterations: int = 9000
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    batch_size: int = 10_000
    seed: int = 0
    adam_betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    hidden: int = 32
    encoder: EncoderConfig = field(default_factory=EncoderConfig)

    def __post_init__(self):
        for name in ("ig_rate", "og_rate"):
            rate = getattr(self, name)
            if not 0.0 < rate <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {rate}")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.hidden < 1:
            raise ValueError("hidden must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    def make_optimizer(self, params: MlpParams):
        if self.optimizer == "adam":
            return Adam(params, self.learning_rate, self.adam_betas, self.adam_eps)
        return SGD(params, self.learning_rate)


@dataclass(frozen=True)
class MetaConfig:
    """Reptile meta-training settings. ``train`` supplies architecture and sampling."""

    inner_iterations: int = 10_000
    inner_lr: float = 1e-2
    meta_epochs: int = 1
    outer_rate: float = 0.1
    seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.inner_iterations < 1 or self.meta_epochs < 1:
            raise ValueError("inner_iterations and meta_epochs must be >= 1")
        if self.inner_lr <= 0:
            raise ValueError("inner_lr must be positive")
        if not 0.0 <= self.outer_rate <= 1.0:
            raise ValueError("outer_rate must be in [0, 1]")


def _sample_size(rate: float, n: int) -> int:
    # round() guards against 0.2 * 1000 == 200.00000000000003
    return min(n, math.ceil(round(rate * n, 9)))


def sample_pixels(mask: np.ndarray, config: TrainConfig | None = None, seed=0):
    """Pick in-gamut and out-of-gamut pixels uniformly without replacement.

    Returns two sorted arrays of flat pixel indices, ``(ig, og)``, of sizes
    ``ceil(ig_rate * #IG)`` and ``ceil(og_rate * #OG)``. ``seed`` may be an
    int or a ``numpy.random.Generator``.
    """
    config = config or TrainConfig()
    flat = np.asarray(mask, dtype=bool).ravel()
    if flat.size == 0:
        raise ValueError("empty mask")
    rng = np.random.default_rng(seed)
    ig_all = np.flatnonzero(~flat)
    og_all = np.flatnonzero(flat)
    if og_all.size == 0:
        log.warning("no out-of-gamut pixels; optimization only recovers quantization error")
    ig = rng.choice(ig_all, _sample_size(config.ig_rate, ig_all.size), replace=False)
    og = rng.choice(og_all, _sample_size(config.og_rate, og_all.size), replace=False)
    return np.sort(ig), np.sort(og)


# feature tables above this size are computed per batch instead of up front
FEATURE_CACHE_BYTES = 256 * 2**20


class PixelPool:
    """Every pixel of one image, split by gamut membership, ready for batching."""

    def __init__(self, original, clipped, mask, encoder: EncoderConfig):
        original = np.asarray(original, dtype=np.float64)
        clipped = np.asarray(clipped, dtype=np.float64)
        mask = np.asarray(mask, dtype=bool)
        if original.shape != clipped.shape or original.ndim != 3 or original.shape[-1] != 3:
            raise ValueError(f"image shapes differ or are not (H, W, 3): {original.shape} vs {clipped.shape}")
        if mask.shape != original.shape[:2]:
            raise ValueError(f"mask shape {mask.shape} does not match image {original.shape[:2]}")
        self.encoder = encoder
        self.clipped = clipped
        self.mask = mask
        self.base = clipped.reshape(-1, 3).astype(np.float32)
        self.targets = original.reshape(-1, 3).astype(np.float32)
        self.ig = np.flatnonzero(~mask.ravel())
        self.og = np.flatnonzero(mask.ravel())
        n = mask.size
        if n * encoder.dim * 4 <= FEATURE_CACHE_BYTES:
            self.features = image_features(clipped, encoder)
        else:
            self.features = None

    def __len__(self):
        return self.mask.size

    def batch(self, index):
        if self.features is not None:
            f = self.features[index]
        else:
            f = image_features(self.clipped, self.encoder, index)
        return f, self.base[index], self.targets[index]

    def draw(self, config: TrainConfig, rng) -> np.ndarray:
        """A fresh stratified sample at the configured rates, shrunk pro rata to ``batch_size``."""
        n_ig = _sample_size(config.ig_rate, self.ig.size)
        n_og = _sample_size(config.og_rate, self.og.size)
        total = n_ig + n_og
        if total > config.batch_size:
            n_og = min(self.og.size, round(n_og * config.batch_size / total))
            n_ig = config.batch_size - n_og
        return np.concatenate([
            rng.choice(self.ig, n_ig, replace=False),
            rng.choice(self.og, n_og, replace=False),
        ])


def set_loss(params: MlpParams, pool: PixelPool, index) -> float:
    f, b, t = pool.batch(index)
    pred = forward(params, f, b)
    return float(np.sum(np.square(pred - t, dtype=np.float64)))


def run_iterations(params: MlpParams, pool: PixelPool, config: TrainConfig, iterations: int, optimizer, rng,
                   callback: Callable[[int, float], None] | None = None):
    """Update ``params`` in place. Returns per-step batch losses and the last batch's indices."""
    if len(pool.ig) + len(pool.og) == 0:
        raise ValueError("image has no pixels")
    losses = []
    index = None
    for it in range(iterations):
        index = pool.draw(config, rng)
        loss, grads = loss_and_grads(params, *pool.batch(index))
        optimizer.step(params, grads, len(index))
        losses.append(loss)
        if callback is not None:
            callback(it, loss)
    return losses, index


@dataclass
class FitResult:
    params: MlpParams
    monitor_index: np.ndarray  # fixed stratified sample used for the loss report
    initial_loss: float
    final_loss: float
    losses: list[float]
    wall_time: float
    iterations: int
    n_og: int  # out-of-gamut pixels in the monitor sample

    @property
    def n_samples(self) -> int:
        return len(self.monitor_index)


def _seeds(seed: int) -> tuple[int, int, int]:
    init_seed, sample_seed, batch_seed = np.random.SeedSequence(seed).generate_state(3)
    return int(init_seed), int(sample_seed), int(batch_seed)


def fit(original, clipped, mask, config: TrainConfig | None = None, init: MlpParams | None = None,
        callback=None) -> FitResult:
    """Optimize a network for one image.

    Every iteration draws a fresh stratified sample (``ig_rate`` of the
    in-gamut and ``og_rate`` of the out-of-gamut pixels) and takes one
    optimizer step on its summed squared error. The reported losses are
    measured on one fixed sample drawn the same way.
    """
    config = config or TrainConfig()
    init_seed, sample_seed, batch_seed = _seeds(config.seed)
    if init is None:
        params = init_params(config.hidden, config.encoder, init_seed)
    else:
        params = init.astype(np.float32)
    start = time.perf_counter()
    pool = PixelPool(original, clipped, mask, params.encoder)
    ig, og = sample_pixels(mask, config, sample_seed)
    monitor = np.concatenate([ig, og])
    initial = set_loss(params, pool, monitor)
    optimizer = config.make_optimizer(params)
    rng = np.random.default_rng(batch_seed)
    losses, _ = run_iterations(params, pool, config, config.iterations, optimizer, rng, callback)
    final = set_loss(params, pool, monitor)
    wall = time.perf_counter() - start
    return FitResult(params, monitor, initial, final, losses, wall, config.iterations, len(og))


def optimize(original, clipped, mask, config: TrainConfig | None = None) -> MlpParams:
    """Standard optimization from a random initialization."""
    return fit(original, clipped, mask, config).params


def optimize_fast(original, clipped, mask, init: MlpParams, config: TrainConfig | None = None) -> MlpParams:
    """Short optimization starting from a meta-learned initialization."""
    config = config or TrainConfig(iterations=FAST_ITERATIONS, hidden=init.hidden, encoder=init.encoder)
    if init.hidden != config.hidden or init.encoder != config.encoder:
        raise ValueError(
            f"init architecture (hidden={init.hidden}, {init.encoder}) does not match "
            f"config (hidden={config.hidden}, {config.encoder})"
        )
    return fit(original, clipped, mask, config, init=init).params


def meta_train(images: Sequence[tuple[np.ndarray, np.ndarray, np.ndarray]], config: MetaConfig | None = None,
               init: MlpParams | None = None) -> MlpParams:
    """Reptile: fit each image with SGD from the current init, then pull the init toward the result.

    ``images`` holds ``(original, clipped, mask)`` triples. Images are visited
    in order, once per meta epoch.
    """
    config = config or MetaConfig()
    if not images:
        raise ValueError("meta_train needs at least one image")
    tc = config.train
    init_seed, _, batch_seed = _seeds(config.seed)
    meta = init.astype(np.float32) if init is not None else init_params(tc.hidden, tc.encoder, init_seed)
    pools = [PixelPool(o, c, m, meta.encoder) for o, c, m in images]
    rng = np.random.default_rng(batch_seed)
    eps = np.float32(config.outer_rate)
    for epoch in range(config.meta_epochs):
        for i, pool in enumerate(pools):
            inner = meta.copy()
            losses, _ = run_iterations(inner, pool, tc, config.inner_iterations, SGD(inner, config.inner_lr), rng)
            # convex-combination form keeps outer_rate 0 and 1 exact
            meta = MlpParams(
                [(1 - eps) * w + eps * wi for w, wi in zip(meta.weights, inner.weights)],
                meta.encoder,
            )
            log.info("meta epoch %d image %d: batch loss %.6g -> %.6g", epoch, i, losses[0], losses[-1])
    return meta


def predict_image(clipped: np.ndarray, params: MlpParams, chunk: int = 1 << 16) -> np.ndarray:
    """Add the predicted residual to every pixel of ``clipped`` and clamp to ``[0, 1]``."""
    clipped = np.asarray(clipped, dtype=np.float64)
    h, w = clipped.shape[:2]
    flat = clipped.reshape(-1, 3)
    out = np.empty((h * w, 3), dtype=np.float64)
    for start in range(0, h * w, chunk):
        index = np.arange(start, min(start + chunk, h * w))
        feats = image_features(clipped, params.encoder, index)
        pred = forward(params, feats, flat[index].astype(np.float32))
        out[index] = np.clip(pred, 0.0, 1.0)
    return out.reshape(h, w, 3)
