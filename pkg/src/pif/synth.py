"""Deterministic synthetic images for calibration, tests, and demos.

Fitting needs references with luminance spread, chroma variety, and fine
detail; these generators produce that from a seed, with no binary assets.
"""

from __future__ import annotations

import cv2
import numpy as np

from .concepts import vignette_field


def textured_image(height: int = 512, width: int = 512, seed: int = 0) -> np.ndarray:
    """Colorful multi-octave texture in [0.04, 0.96].

    Coarse octaves give tonal and hue regions; the finest octave adds the
    high-frequency detail sharpening acts on. The value range is pulled in
    from [0, 1] so mild exposure shifts stay mostly clamp-free.
    """
    rng = np.random.default_rng(seed)
    acc = np.zeros((height, width, 3))
    total = 0.0
    for cells, weight in ((4, 1.0), (9, 0.6), (23, 0.35), (61, 0.2), (153, 0.12)):
        grid = rng.random((min(cells, height), min(cells, width), 3))
        layer = cv2.resize(grid, (width, height), interpolation=cv2.INTER_LINEAR)
        acc += weight * layer
        total += weight
    acc /= total
    lo, hi = acc.min(), acc.max()
    acc = (acc - lo) / max(hi - lo, 1e-12)
    return 0.04 + 0.92 * acc


# Chroma directions with zero Rec. 709 luminance response, scaled so the
# largest channel magnitude is 1.
_CHROMA_U = np.array([0.7152, -0.2126, 0.0]) / 0.7152
_CHROMA_V = np.array([0.0, -0.0722, 0.7152]) / 0.7152


def _project_out(field: np.ndarray, direction: np.ndarray) -> np.ndarray:
    centered = direction - direction.mean()
    coef = np.mean(field * centered) / np.mean(centered * centered)
    return field - coef * centered


def calibration_image(height: int = 512, width: int = 512, seed: int = 0) -> np.ndarray:
    """Texture tailored for style fitting round trips.

    Luminance is a two-level field plus a fine octave, standardized to mean
    0.5 and deviation exactly 0.18, radially decorrelated, and with the
    high-frequency share solved onto the fitting anchor's target, so the
    image is a fixed point of the anchor. Channel values stay below ~0.71,
    keeping exposure/contrast shifts up to +/-0.4 clamp-free. Chroma lives
    mostly on the dark plateau where there is headroom and is scaled onto
    the anchor's mean-saturation target.
    """
    from . import fit  # anchor statistics and targets
    from ._kernels import saturation_channel

    rng = np.random.default_rng(seed)

    def octave(cells: int) -> np.ndarray:
        grid = rng.random((min(cells, height), min(cells, width)))
        return cv2.resize(grid, (width, height), interpolation=cv2.INTER_LINEAR)

    radial = vignette_field(height, width)

    from .image import smooth_field

    coarse = _project_out(octave(6), radial)
    levels = 0.175 * np.where(coarse >= np.median(coarse), 1.0, -1.0)
    levels = _project_out(levels, radial)
    fine = _project_out(octave(151) - 0.5, radial)

    # Soften region borders until the base sits safely under the
    # high-frequency target; smaller images need proportionally more.
    smooth_k = 5
    base = smooth_field(levels, smooth_k)
    while fit._hf_share(base, 11) > 0.85 * fit.HF_SHARE_TARGET and smooth_k < 41:
        smooth_k += 4
        base = smooth_field(levels, smooth_k)

    def build_lum(amount: float) -> np.ndarray:
        # Standardize and bound: exposure/contrast shifts up to +/-0.4 must
        # not clip, so outlier peaks are squeezed under ~1.2 deviations.
        # Clipping is nonlinear (it can reintroduce a radial correlation and
        # shift the spread), so bound/project/standardize jointly iterate.
        lum = base + amount * fine
        for _ in range(6):
            z = (lum - lum.mean()) / max(lum.std(), 1e-12)
            lum = _project_out(0.5 + 0.18 * np.clip(z, -1.17, 1.17), radial)
        return 0.5 + 0.18 * (lum - lum.mean()) / max(lum.std(), 1e-12)

    # Solve the fine-octave amplitude so the high-frequency share of the
    # luminance spread lands exactly on the anchor target.
    lo, hi = 0.0, 0.4
    for _ in range(25):
        mid = (lo + hi) / 2.0
        if fit._hf_share(build_lum(mid), 11) < fit.HF_SHARE_TARGET:
            lo = mid
        else:
            hi = mid
    lum = build_lum((lo + hi) / 2.0)

    # Zero-mean chroma budgeted against the +40% exposure clip ceiling,
    # scaled onto the mean-saturation target.
    amp = np.clip(0.55 * (0.705 - lum), 0.002, 0.22)
    alpha = amp * (2.0 * octave(9) - 1.0 + 0.6 * (2.0 * octave(31) - 1.0)) / 1.6
    beta = amp * (2.0 * octave(13) - 1.0 + 0.6 * (2.0 * octave(27) - 1.0)) / 1.6
    chroma = alpha[..., None] * _CHROMA_U + beta[..., None] * _CHROMA_V
    chroma -= chroma.mean(axis=(0, 1))

    # Balance the hue distribution (zero saturation-weighted resultant) so
    # tint estimation against this family reads exactly neutral. Hue
    # rotation moves luminance around, so afterwards re-split into a fresh
    # gray axis + luma-orthogonal chroma and restore the exact statistics.
    from ._kernels import luma
    from .image import to_hsv, to_rgb

    def balance_hues(img: np.ndarray) -> np.ndarray:
        # Probability-integral transform on the saturation-weighted hue
        # distribution: uniform hues have a zero circular resultant.
        hsv = to_hsv(img)
        weights = np.where(hsv[..., 1] > 1e-6, hsv[..., 1], 0.0).ravel()
        counts, edges = np.histogram(
            hsv[..., 0].ravel(), bins=720, range=(0.0, 1.0), weights=weights
        )
        cdf = np.concatenate([[0.0], np.cumsum(counts)])
        cdf /= max(cdf[-1], 1e-12)
        hsv[..., 0] = np.interp(hsv[..., 0], edges, cdf)
        return to_rgb(hsv)

    # Hue balance disturbs luminance, so all statistics are re-established
    # afterwards through gray-axis operations (adding the same value to all
    # three channels of a pixel), which cannot move hues at all.
    img = balance_hues(np.ascontiguousarray(lum[..., None] + chroma))
    img = balance_hues(img)
    lum = luma(img)
    chroma = img - lum[..., None]
    chroma -= chroma.mean(axis=(0, 1))

    from .image import smooth_field as _smooth

    for _ in range(2):
        # Gray-axis high-frequency correction back onto the anchor target;
        # the share is scale-invariant, so standardizing last preserves it.
        detail = lum - _smooth(lum, 11)
        share = fit._hf_share(lum, 11)
        lum = lum + (fit.HF_SHARE_TARGET / max(share, 1e-9) - 1.0) * detail
        lum = _project_out(lum, radial)
        lum = 0.5 + 0.18 * (lum - lum.mean()) / max(lum.std(), 1e-12)

    low_room = np.maximum(lum - 0.02, 5e-4)
    high_room = np.maximum(0.705 - lum, 5e-4)
    for _ in range(8):
        img = lum[..., None] + chroma
        mean_sat = saturation_channel(np.ascontiguousarray(img)).mean()
        chroma *= min(fit.SAT_MEAN_TARGET / max(mean_sat, 1e-9), 1.35)
        # Shrink per pixel where the scaled chroma would leave the channel
        # envelope; pixel-local scaling keeps zero luminance response.
        neg = np.maximum(-chroma.min(axis=2), 1e-12)
        pos = np.maximum(chroma.max(axis=2), 1e-12)
        shrink = np.minimum(1.0, np.minimum(low_room / neg, high_room / pos))
        chroma *= shrink[..., None]
        chroma -= chroma.mean(axis=(0, 1))

    # The shrink step reweights saturations and can re-skew the hue
    # distribution. Re-balance, alternating with the channel-mean
    # equalization (the two disturb each other but contract jointly), then
    # re-establish the luminance statistics through gray-axis
    # (hue-preserving) corrections.
    img = np.ascontiguousarray(lum[..., None] + chroma)
    for _ in range(10):
        img = balance_hues(img)
        lum = luma(np.ascontiguousarray(img))
        chroma = img - lum[..., None]
        chroma -= chroma.mean(axis=(0, 1))
        img = np.ascontiguousarray(lum[..., None] + chroma)
    for _ in range(2):
        detail = lum - _smooth(lum, 11)
        share = fit._hf_share(lum, 11)
        lum = lum + (fit.HF_SHARE_TARGET / max(share, 1e-9) - 1.0) * detail
        lum = _project_out(lum, radial)
        lum = 0.5 + 0.18 * (lum - lum.mean()) / max(lum.std(), 1e-12)

    # Land exactly on the saturation target (pixel-uniform chroma scaling
    # moves neither hues nor luminance); the hairline envelope excess this
    # can reintroduce is negligible against the +/-0.4 clip ceiling.
    img = lum[..., None] + chroma
    mean_sat = saturation_channel(np.ascontiguousarray(img)).mean()
    chroma *= float(np.clip(fit.SAT_MEAN_TARGET / max(mean_sat, 1e-9), 0.97, 1.03))

    return np.clip(lum[..., None] + chroma, 0.0, 1.0)


def two_tone(
    height: int = 32, width: int = 32, low: float = 0.2, high: float = 0.8
) -> np.ndarray:
    """Equal-area two-level grayscale image (left half low, right half high)."""
    img = np.full((height, width, 3), low)
    img[:, width // 2 :] = high
    return img


def horizontal_ramp(height: int = 16, width: int = 64, slope: float = 0.01) -> np.ndarray:
    """Grayscale ramp increasing by `slope` per pixel step, clipped to [0, 1]."""
    row = np.clip(np.arange(width) * slope, 0.0, 1.0)
    return np.repeat(row[None, :, None], height, axis=0).repeat(3, axis=2)


def checkerboard(height: int = 32, width: int = 32, cell: int = 4) -> np.ndarray:
    """Binary checkerboard pattern."""
    i = np.arange(height)[:, None] // cell
    k = np.arange(width)[None, :] // cell
    board = ((i + k) % 2).astype(np.float64)
    return np.repeat(board[..., None], 3, axis=2)
