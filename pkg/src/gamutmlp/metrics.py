"""RMSE / PSNR over whole images and out-of-gamut pixels, error maps, chromaticities."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "PROPHOTO_TO_XYZ",
    "QualityReport",
    "psnr_from_rmse",
    "evaluate",
    "summarize",
    "error_map",
    "xyz_to_xy",
    "chromaticity",
    "chromaticity_csv",
]

# ProPhoto (ROMM RGB) primaries, D50 white
PROPHOTO_TO_XYZ = np.array(
    [
        [0.7976749, 0.1351917, 0.0313534],
        [0.2880402, 0.7118741, 0.0000857],
        [0.0000000, 0.0000000, 0.8252100],
    ]
)


def psnr_from_rmse(rmse: float, peak: float = 1.0) -> float:
    """``20 log10(peak / rmse)``; ``inf`` when ``rmse`` is 0."""
    if rmse == 0:
        return math.inf
    return 20.0 * math.log10(peak / rmse)


@dataclass(frozen=True)
class QualityReport:
    rmse: float
    psnr: float
    rmse_og: float | None
    psnr_og: float | None
    og_fraction: float
    n_pixels: int
    n_og: int

    def as_dict(self) -> dict:
        return {
            "rmse": self.rmse,
            "rmse_og": self.rmse_og,
            "psnr": self.psnr,
            "psnr_og": self.psnr_og,
            "og_fraction": self.og_fraction,
        }


def evaluate(pred: np.ndarray, truth: np.ndarray, mask: np.ndarray | None = None) -> QualityReport:
    """Whole-image and OG-only RMSE/PSNR (peak 1.0).

    The OG metrics are ``None`` when the mask selects no pixels.
    """
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    h, w = pred.shape[:2]
    if mask is None:
        mask = np.zeros((h, w), dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (h, w):
        raise ValueError(f"mask shape {mask.shape} does not match image {(h, w)}")

    sq = np.square(pred - truth).reshape(h * w, -1)
    rmse = math.sqrt(sq.mean())
    n_og = int(mask.sum())
    if n_og:
        rmse_og = math.sqrt(sq[mask.ravel()].mean())
        psnr_og = psnr_from_rmse(rmse_og)
    else:
        rmse_og = psnr_og = None
    return QualityReport(rmse, psnr_from_rmse(rmse), rmse_og, psnr_og, n_og / (h * w), h * w, n_og)


def summarize(reports: Sequence[QualityReport]) -> dict:
    """Corpus statistics two ways: mean of per-image values, and pooled over all pixels."""
    if not reports:
        raise ValueError("no reports")
    og = [r for r in reports if r.rmse_og is not None]
    out = {
        "n_images": len(reports),
        "mean_rmse": float(np.mean([r.rmse for r in reports])),
        "mean_psnr": float(np.mean([r.psnr for r in reports])),
        "mean_rmse_og": float(np.mean([r.rmse_og for r in og])) if og else None,
        "mean_psnr_og": float(np.mean([r.psnr_og for r in og])) if og else None,
    }
    total = sum(r.n_pixels for r in reports)
    pooled_mse = sum(r.rmse**2 * r.n_pixels for r in reports) / total
    out["pooled_rmse"] = math.sqrt(pooled_mse)
    out["pooled_psnr"] = psnr_from_rmse(out["pooled_rmse"])
    n_og = sum(r.n_og for r in og)
    if n_og:
        pooled_og = math.sqrt(sum(r.rmse_og**2 * r.n_og for r in og) / n_og)
        out["pooled_rmse_og"] = pooled_og
        out["pooled_psnr_og"] = psnr_from_rmse(pooled_og)
    else:
        out["pooled_rmse_og"] = out["pooled_psnr_og"] = None
    return out


def error_map(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Per-pixel RMSE across the three channels, shape ``(H, W)``."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    return np.sqrt(np.mean(np.square(pred - truth), axis=-1))


def xyz_to_xy(xyz: np.ndarray) -> np.ndarray:
    xyz = np.asarray(xyz, dtype=np.float64)
    s = xyz.sum(axis=-1, keepdims=True)
    return xyz[..., :2] / s


def chromaticity(img: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """CIE xy of the masked pixels as an ``(n, 2)`` array; black pixels are dropped."""
    px = np.asarray(img, dtype=np.float64).reshape(-1, 3)
    if mask is not None:
        px = px[np.asarray(mask, dtype=bool).ravel()]
    xyz = px @ PROPHOTO_TO_XYZ.T
    keep = xyz.sum(axis=-1) > 0
    return xyz_to_xy(xyz[keep])


def chromaticity_csv(img: np.ndarray, mask: np.ndarray | None = None) -> str:
    xy = chromaticity(img, mask)
    buf = io.StringIO()
    buf.write("x,y\n")
    np.savetxt(buf, xy, fmt="%.6f", delimiter=",")
    return buf.getvalue()
