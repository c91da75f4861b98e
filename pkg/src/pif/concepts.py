"""The eight photographic-concept operators.

Each concept pairs an adjustment (how pixels move as the strength grows)
with a weight map (where the concept lives in an image). Adjustments are
identities at the neutral value and clamp their output to [0, 1].
"""

from __future__ import annotations

import colorsys
from functools import lru_cache

import numpy as np

from . import _kernels
from .image import gaussian_blur, gradient_magnitude, luminance
from .params import (
    DEFAULT_THRESHOLDS,
    ConceptId,
    ConceptThresholds,
    ConceptValue,
    Scalar,
    StrengthHue,
    check_value_type,
)

# Highlight tints lean bright, shadow tints lean dark.
HIGHLIGHT_COLOR_SV = (0.6, 0.9)
SHADOW_COLOR_SV = (0.6, 0.25)


def highlight_color(hue: float) -> np.ndarray:
    """RGB triple a highlight is pushed toward for a given hue."""
    return np.array(colorsys.hsv_to_rgb(hue, *HIGHLIGHT_COLOR_SV))


def shadow_color(hue: float) -> np.ndarray:
    """RGB triple a shadow is pushed toward for a given hue."""
    return np.array(colorsys.hsv_to_rgb(hue, *SHADOW_COLOR_SV))


@lru_cache(maxsize=64)
def vignette_field(height: int, width: int) -> np.ndarray:
    """Normalized corner-distance field: 1 at the (0, 0) corner, 0 at center.

    Depends only on the image size, never on pixel values.
    """
    i = np.arange(height, dtype=np.float64)[:, None]
    k = np.arange(width, dtype=np.float64)[None, :]
    field = ((2.0 * i - height) ** 2 + (2.0 * k - width) ** 2) / (
        width**2 + height**2
    )
    field.setflags(write=False)
    return field


def circular_hue_delta(src: np.ndarray, target: float) -> np.ndarray:
    """Signed shortest-arc distance from `src` hues to `target` in (-0.5, 0.5].

    Exact half-circle ties break toward increasing hue.
    """
    return 0.5 - ((0.5 - (target - src)) % 1.0)


def _tone_mask(lum: np.ndarray, thresholds: ConceptThresholds, concept: ConceptId) -> np.ndarray:
    if concept is ConceptId.HIGHLIGHT:
        return np.maximum(0.0, (lum - thresholds.tau_highlight) / (1.0 - thresholds.tau_highlight))
    return np.maximum(0.0, (thresholds.tau_shadow - lum) / thresholds.tau_shadow)


def adjust(
    concept: ConceptId,
    img: np.ndarray,
    value: ConceptValue,
    thresholds: ConceptThresholds = DEFAULT_THRESHOLDS,
) -> np.ndarray:
    """Apply one concept adjustment to an RGB raster.

    Neutral values return the input unchanged. All other paths allocate a
    new array clamped to [0, 1].
    """
    check_value_type(concept, value)
    value.validate()
    if value.neutral:
        return img
    img = np.ascontiguousarray(img, dtype=np.float64)

    if concept is ConceptId.SHARPNESS:
        blurred = gaussian_blur(img, thresholds.sharpness_kernel)
        return _kernels.unsharp_clip(img, blurred, value.xi)

    if concept is ConceptId.VIGNETTING:
        field = vignette_field(img.shape[0], img.shape[1])
        return _kernels.vignette_apply(img, field, value.xi)

    if concept is ConceptId.SATURATION:
        return _kernels.scale_saturation(img, value.xi + 1.0)

    if concept is ConceptId.TINT:
        return _kernels.blend_hue(img, value.strength, value.hue)

    if concept is ConceptId.EXPOSURE:
        return _kernels.scale_clip(img, 1.0 + value.xi)

    if concept is ConceptId.CONTRAST:
        anchors = img.mean(axis=(0, 1))
        return _kernels.affine_about_clip(img, anchors, value.xi + 1.0)

    # Highlight / shadow: pull tone-gated pixels toward a hue-indexed color.
    if concept is ConceptId.HIGHLIGHT:
        return _kernels.tone_blend(
            img,
            luminance(img),
            thresholds.tau_highlight,
            True,
            value.strength,
            highlight_color(value.hue),
        )
    return _kernels.tone_blend(
        img,
        luminance(img),
        thresholds.tau_shadow,
        False,
        value.strength,
        shadow_color(value.hue),
    )


def weight_map_raw(
    concept: ConceptId,
    img: np.ndarray,
    thresholds: ConceptThresholds = DEFAULT_THRESHOLDS,
) -> np.ndarray:
    """Unnormalized concept weight field, straight from the definitions.

    Sharpness, exposure, contrast, highlight, and shadow read the luminance;
    saturation reads the HSV saturation channel; vignetting and tint depend
    only on geometry.
    """
    if concept is ConceptId.SHARPNESS:
        grad = gradient_magnitude(img)
        return np.abs(grad - grad.mean())
    if concept is ConceptId.VIGNETTING:
        return vignette_field(img.shape[0], img.shape[1]).copy()
    if concept is ConceptId.SATURATION:
        sat = _kernels.saturation_channel(np.ascontiguousarray(img, dtype=np.float64))
        return np.abs(sat - sat.mean())
    if concept is ConceptId.TINT:
        return np.ones(img.shape[:2])
    lum = luminance(img)
    if concept is ConceptId.EXPOSURE:
        return np.abs(lum - lum.mean())
    if concept is ConceptId.CONTRAST:
        lmax = lum.max()
        lmin = lum.min()
        return (lum - (2.0 * lmax + lmin) / 3.0) * (lum - (lmax + 2.0 * lmin) / 3.0)
    return _tone_mask(lum, thresholds, concept)


def weight_map(
    concept: ConceptId,
    img: np.ndarray,
    thresholds: ConceptThresholds = DEFAULT_THRESHOLDS,
) -> np.ndarray:
    """Concept weight field normalized to [0, 1].

    Every data-dependent map is clamped below at zero and divided by its
    maximum so the scales are comparable across concepts; an all-zero raw
    map stays zero. The tint map is the constant 1.
    """
    raw = weight_map_raw(concept, img, thresholds)
    if concept is ConceptId.TINT:
        return raw
    clamped = np.maximum(raw, 0.0)
    peak = clamped.max()
    if peak > 1e-12:  # float-noise peaks count as an all-zero map
        clamped /= peak
    else:
        clamped[:] = 0.0
    return clamped
