"""Quantitative evaluation: PSNR, SSIM, histograms, and earth-mover distance.

PSNR and SSIM measure content preservation; the histogram earth-mover
distance measures how closely the tonal/color distribution of one image
matches another, which is what a style transfer actually changes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.ndimage import convolve1d

from .concepts import vignette_field, weight_map_raw
from .image import gradient_magnitude, luminance, to_hsv
from .params import DEFAULT_THRESHOLDS, ConceptId, ConceptThresholds

PSNR_CAP_DB = 99.0
HISTOGRAM_BINS = 256

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03

CHANNELS = ("luminance", "r", "g", "b")


class DimensionMismatchError(ValueError):
    """Metric inputs must share dimensions (or channel tags)."""


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB (peak 1.0), capped at 99 dB."""
    _check_same_shape(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * np.log10(1.0 / mse))


def _window_taps() -> np.ndarray:
    x = np.arange(_SSIM_WINDOW) - (_SSIM_WINDOW - 1) / 2.0
    taps = np.exp(-(x * x) / (2.0 * _SSIM_SIGMA**2))
    return taps / taps.sum()


def _windowed_mean(field: np.ndarray, taps: np.ndarray) -> np.ndarray:
    # Convolve then crop the window radius: interior values never see padding.
    out = convolve1d(field, taps, axis=0, mode="nearest")
    out = convolve1d(out, taps, axis=1, mode="nearest")
    r = len(taps) // 2
    return out[r:-r, r:-r]


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean single-scale SSIM on luminance over interior window centers.

    11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03, dynamic range 1.
    """
    _check_same_shape(a, b)
    if min(a.shape[0], a.shape[1]) < _SSIM_WINDOW:
        raise ValueError(f"image sides must be >= {_SSIM_WINDOW} for SSIM")
    x = luminance(a)
    y = luminance(b)
    taps = _window_taps()

    mu_x = _windowed_mean(x, taps)
    mu_y = _windowed_mean(y, taps)
    var_x = _windowed_mean(x * x, taps) - mu_x * mu_x
    var_y = _windowed_mean(y * y, taps) - mu_y * mu_y
    cov = _windowed_mean(x * y, taps) - mu_x * mu_y

    c1 = _SSIM_K1**2
    c2 = _SSIM_K2**2
    score = ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)) / (
        (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    )
    return float(score.mean())


@dataclass(frozen=True)
class Histogram:
    """256-bin normalized intensity histogram of one channel."""

    bins: np.ndarray
    channel: str

    def __post_init__(self) -> None:
        if self.bins.shape != (HISTOGRAM_BINS,):
            raise ValueError("histogram must have exactly 256 bins")
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel tag {self.channel!r}")


def _channel_values(img: np.ndarray, channel: str) -> np.ndarray:
    if channel == "luminance":
        return luminance(img)
    return img[..., CHANNELS.index(channel) - 1]


def histogram(img: np.ndarray, channel: str = "luminance") -> Histogram:
    """Normalized 256-bin histogram over [0, 1]; 1.0 lands in the top bin."""
    values = _channel_values(img, channel)
    idx = np.floor(np.minimum(values, 1.0 - 1e-9) * HISTOGRAM_BINS).astype(np.int64)
    counts = np.bincount(idx.ravel(), minlength=HISTOGRAM_BINS).astype(np.float64)
    return Histogram(counts / counts.sum(), channel)


def emd(h1: Histogram, h2: Histogram) -> float:
    """Wasserstein-1 distance between histograms, in intensity units.

    Closed form in 1-D: the mean absolute difference of the CDFs.
    """
    if h1.channel != h2.channel:
        raise DimensionMismatchError(
            f"channel mismatch: {h1.channel!r} vs {h2.channel!r}"
        )
    cdf_delta = np.cumsum(h1.bins) - np.cumsum(h2.bins)
    return float(np.abs(cdf_delta).sum() / HISTOGRAM_BINS)


def emd_image(a: np.ndarray, b: np.ndarray) -> float:
    """Mean histogram EMD over luminance and the three color channels."""
    return float(
        np.mean([emd(histogram(a, ch), histogram(b, ch)) for ch in CHANNELS])
    )


@dataclass(frozen=True)
class ConceptStats:
    """Per-concept diagnostic summary of one image."""

    mean_luminance: float
    luminance_std: float
    mean_saturation: float
    circular_mean_hue: float
    hue_resultant_length: float
    edge_energy: float
    vignetting_ratio: Optional[float]
    highlight_mean_rgb: tuple[float, float, float]
    shadow_mean_rgb: tuple[float, float, float]


def _masked_mean_rgb(img: np.ndarray, weights: np.ndarray) -> tuple[float, float, float]:
    total = weights.sum()
    if total <= 0.0:
        return (0.0, 0.0, 0.0)
    mean = (img * weights[..., None]).sum(axis=(0, 1)) / total
    return tuple(float(v) for v in mean)


def concept_stats(
    img: np.ndarray, thresholds: ConceptThresholds = DEFAULT_THRESHOLDS
) -> ConceptStats:
    lum = luminance(img)
    hsv = to_hsv(img)
    sat = hsv[..., 1]
    hue = hsv[..., 0]

    # Saturation-weighted circular hue mean; gray pixels carry no hue.
    sat_total = sat.sum()
    if sat_total > 0.0:
        vec = np.array(
            [
                (sat * np.cos(2.0 * np.pi * hue)).sum(),
                (sat * np.sin(2.0 * np.pi * hue)).sum(),
            ]
        ) / sat_total
        mean_hue = float(np.arctan2(vec[1], vec[0]) / (2.0 * np.pi) % 1.0)
        resultant = float(np.hypot(*vec))
    else:
        mean_hue = 0.0
        resultant = 0.0

    # Corner/center luminance split by corner-distance quartiles.
    field = vignette_field(img.shape[0], img.shape[1])
    corner_cut = np.quantile(field, 0.75)
    center_cut = np.quantile(field, 0.25)
    corner_mean = float(lum[field >= corner_cut].mean())
    center_mean = float(lum[field <= center_cut].mean())
    ratio = corner_mean / center_mean if center_mean > 1e-6 else None

    return ConceptStats(
        mean_luminance=float(lum.mean()),
        luminance_std=float(lum.std()),
        mean_saturation=float(sat.mean()),
        circular_mean_hue=mean_hue,
        hue_resultant_length=resultant,
        edge_energy=float(gradient_magnitude(img).mean()),
        vignetting_ratio=ratio,
        highlight_mean_rgb=_masked_mean_rgb(
            img, weight_map_raw(ConceptId.HIGHLIGHT, img, thresholds)
        ),
        shadow_mean_rgb=_masked_mean_rgb(
            img, weight_map_raw(ConceptId.SHADOW, img, thresholds)
        ),
    )


def comparison_report(a: np.ndarray, b: np.ndarray) -> dict[str, float]:
    """psnr/ssim/emd summary of an image pair."""
    return {"psnr": psnr(a, b), "ssim": ssim(a, b), "emd": emd_image(a, b)}


def report_json(report: dict[str, float]) -> str:
    return json.dumps(report, indent=2, sort_keys=True)


def report_table(report: dict[str, float]) -> str:
    """Aligned plain-text table with psnr, ssim, and emd columns."""
    header = f"{'psnr':>8}  {'ssim':>8}  {'emd':>8}"
    row = f"{report['psnr']:>8.2f}  {report['ssim']:>8.4f}  {report['emd']:>8.4f}"
    return header + "\n" + row
