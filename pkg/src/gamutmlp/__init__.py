"""Wide-gamut color recovery with a small per-image MLP stored inside the sRGB PNG."""
from .codec import deserialize, embed_png, extract_png, serialize
from .colorspace import expand_gamut_naive, gamut_mask, reduce_gamut
from .encoding import EncoderConfig, InputMode
from .metrics import QualityReport, evaluate
from .mlp import MetaConfig, MlpParams, TrainConfig, meta_train, optimize, optimize_fast, predict_image
from .pipeline import expand_and_recover, reduce_and_embed

__all__ = [
    "EncoderConfig",
    "InputMode",
    "MetaConfig",
    "MlpParams",
    "QualityReport",
    "TrainConfig",
    "deserialize",
    "embed_png",
    "evaluate",
    "expand_and_recover",
    "expand_gamut_naive",
    "extract_png",
    "gamut_mask",
    "meta_train",
    "optimize",
    "optimize_fast",
    "predict_image",
    "reduce_and_embed",
    "reduce_gamut",
    "serialize",
]
