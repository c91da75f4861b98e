"""Compiled per-pixel kernels for the hot image operations.

The fitter evaluates thousands of renders per style, so the HSV conversions
and the fused adjustment loops are JIT-compiled. Everything here is exact
float64 IEEE math (no fastmath), so results are bit-stable and independent
of chunking.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True, inline="always")
def _pixel_to_hsv(r: float, g: float, b: float) -> tuple:
    maxc = max(r, g, b)
    minc = min(r, g, b)
    delta = maxc - minc
    if delta <= 0.0:
        return 0.0, 0.0, maxc
    s = delta / maxc if maxc > 0.0 else 0.0
    if maxc == r:
        hue = ((g - b) / delta) % 6.0
    elif maxc == g:
        hue = (b - r) / delta + 2.0
    else:
        hue = (r - g) / delta + 4.0
    hue = (hue / 6.0) % 1.0
    if hue >= 1.0:
        hue = 0.0
    return hue, s, maxc


@njit(cache=True, inline="always")
def _pixel_to_rgb(h: float, s: float, v: float) -> tuple:
    h6 = (h % 1.0) * 6.0
    sector = int(h6) % 6
    f = h6 - int(h6)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    if sector == 0:
        return v, t, p
    if sector == 1:
        return q, v, p
    if sector == 2:
        return p, v, t
    if sector == 3:
        return p, q, v
    if sector == 4:
        return t, p, v
    return v, p, q


@njit(cache=True, parallel=True)
def hsv_from_rgb(rgb: np.ndarray) -> np.ndarray:
    h, w = rgb.shape[0], rgb.shape[1]
    out = np.empty_like(rgb)
    for i in prange(h):
        for k in range(w):
            hue, s, v = _pixel_to_hsv(rgb[i, k, 0], rgb[i, k, 1], rgb[i, k, 2])
            out[i, k, 0] = hue
            out[i, k, 1] = s
            out[i, k, 2] = v
    return out


@njit(cache=True, parallel=True)
def rgb_from_hsv(hsv: np.ndarray) -> np.ndarray:
    height, width = hsv.shape[0], hsv.shape[1]
    out = np.empty_like(hsv)
    for i in prange(height):
        for k in range(width):
            r, g, b = _pixel_to_rgb(hsv[i, k, 0], hsv[i, k, 1], hsv[i, k, 2])
            out[i, k, 0] = r
            out[i, k, 1] = g
            out[i, k, 2] = b
    return out


@njit(cache=True, parallel=True)
def saturation_channel(rgb: np.ndarray) -> np.ndarray:
    h, w = rgb.shape[0], rgb.shape[1]
    out = np.empty((h, w))
    for i in prange(h):
        for k in range(w):
            r = rgb[i, k, 0]
            g = rgb[i, k, 1]
            b = rgb[i, k, 2]
            maxc = max(r, g, b)
            minc = min(r, g, b)
            out[i, k] = (maxc - minc) / maxc if maxc > 0.0 else 0.0
    return out


@njit(cache=True, parallel=True)
def scale_saturation(rgb: np.ndarray, factor: float) -> np.ndarray:
    """HSV round trip fused: s' = clamp(factor * s), h and v unchanged."""
    h, w = rgb.shape[0], rgb.shape[1]
    out = np.empty_like(rgb)
    for i in prange(h):
        for k in range(w):
            hue, s, v = _pixel_to_hsv(rgb[i, k, 0], rgb[i, k, 1], rgb[i, k, 2])
            s *= factor
            s = 0.0 if s < 0.0 else (1.0 if s > 1.0 else s)
            r2, g2, b2 = _pixel_to_rgb(hue, s, v)
            out[i, k, 0] = r2
            out[i, k, 1] = g2
            out[i, k, 2] = b2
    return out


@njit(cache=True, parallel=True)
def blend_hue(rgb: np.ndarray, strength: float, target: float) -> np.ndarray:
    """HSV round trip fused: hue moves toward `target` along the short arc.

    Exact half-circle ties break toward increasing hue.
    """
    h, w = rgb.shape[0], rgb.shape[1]
    out = np.empty_like(rgb)
    for i in prange(h):
        for k in range(w):
            hue, s, v = _pixel_to_hsv(rgb[i, k, 0], rgb[i, k, 1], rgb[i, k, 2])
            delta = 0.5 - ((0.5 - (target - hue)) % 1.0)
            hue = (hue + strength * delta) % 1.0
            r2, g2, b2 = _pixel_to_rgb(hue, s, v)
            out[i, k, 0] = r2
            out[i, k, 1] = g2
            out[i, k, 2] = b2
    return out


@njit(cache=True, parallel=True)
def scale_clip(rgb: np.ndarray, gain: float) -> np.ndarray:
    h, w = rgb.shape[0], rgb.shape[1]
    out = np.empty_like(rgb)
    for i in prange(h):
        for k in range(w):
            for c in range(3):
                v = rgb[i, k, c] * gain
                out[i, k, c] = 0.0 if v < 0.0 else (1.0 if v > 1.0 else v)
    return out


@njit(cache=True, parallel=True)
def affine_about_clip(rgb: np.ndarray, anchors: np.ndarray, gain: float) -> np.ndarray:
    """out = anchor_c + gain * (value - anchor_c), clamped; per channel."""
    h, w = rgb.shape[0], rgb.shape[1]
    out = np.empty_like(rgb)
    for i in prange(h):
        for k in range(w):
            for c in range(3):
                v = anchors[c] + gain * (rgb[i, k, c] - anchors[c])
                out[i, k, c] = 0.0 if v < 0.0 else (1.0 if v > 1.0 else v)
    return out


@njit(cache=True, parallel=True)
def vignette_apply(rgb: np.ndarray, field: np.ndarray, xi: float) -> np.ndarray:
    h, w = rgb.shape[0], rgb.shape[1]
    out = np.empty_like(rgb)
    for i in prange(h):
        for k in range(w):
            gain = 1.0 + xi * field[i, k]
            for c in range(3):
                v = rgb[i, k, c] * gain
                out[i, k, c] = 0.0 if v < 0.0 else (1.0 if v > 1.0 else v)
    return out


@njit(cache=True, parallel=True)
def unsharp_clip(rgb: np.ndarray, blurred: np.ndarray, xi: float) -> np.ndarray:
    """out = (xi + 1) * img - xi * blurred, clamped."""
    h, w = rgb.shape[0], rgb.shape[1]
    out = np.empty_like(rgb)
    for i in prange(h):
        for k in range(w):
            for c in range(3):
                v = (xi + 1.0) * rgb[i, k, c] - xi * blurred[i, k, c]
                out[i, k, c] = 0.0 if v < 0.0 else (1.0 if v > 1.0 else v)
    return out


@njit(cache=True, parallel=True)
def tone_blend(
    rgb: np.ndarray,
    lum: np.ndarray,
    tau: float,
    toward_bright: bool,
    strength: float,
    color: np.ndarray,
) -> np.ndarray:
    """Pull tone-gated pixels toward `color`: out = (1-w)*img + w*color.

    w = strength * mask with the bright mask (lum - tau) / (1 - tau) or the
    dark mask (tau - lum) / tau, both floored at zero.
    """
    h, w = rgb.shape[0], rgb.shape[1]
    out = np.empty_like(rgb)
    for i in prange(h):
        for k in range(w):
            if toward_bright:
                m = (lum[i, k] - tau) / (1.0 - tau)
            else:
                m = (tau - lum[i, k]) / tau
            if m < 0.0:
                m = 0.0
            wgt = strength * m
            for c in range(3):
                v = (1.0 - wgt) * rgb[i, k, c] + wgt * color[c]
                out[i, k, c] = 0.0 if v < 0.0 else (1.0 if v > 1.0 else v)
    return out


@njit(cache=True, parallel=True)
def luma(rgb: np.ndarray) -> np.ndarray:
    h, w = rgb.shape[0], rgb.shape[1]
    out = np.empty((h, w))
    for i in prange(h):
        for k in range(w):
            out[i, k] = (
                0.2126 * rgb[i, k, 0] + 0.7152 * rgb[i, k, 1] + 0.0722 * rgb[i, k, 2]
            )
    return out


@njit(cache=True, parallel=True)
def central_gradient_magnitude(field: np.ndarray) -> np.ndarray:
    """Central differences with replicate borders; magnitude = hypot(dx, dy)."""
    h, w = field.shape
    out = np.empty((h, w))
    for i in prange(h):
        up = i - 1 if i > 0 else 0
        down = i + 1 if i < h - 1 else h - 1
        for k in range(w):
            left = k - 1 if k > 0 else 0
            right = k + 1 if k < w - 1 else w - 1
            dx = (field[i, right] - field[i, left]) / 2.0
            dy = (field[down, k] - field[up, k]) / 2.0
            out[i, k] = np.sqrt(dx * dx + dy * dy)
    return out


@njit(cache=True)
def hue_resultant(rgb: np.ndarray) -> tuple:
    """Saturation-weighted circular hue resultant: (sum s*cos, sum s*sin, sum s)."""
    h, w = rgb.shape[0], rgb.shape[1]
    rx = 0.0
    ry = 0.0
    total = 0.0
    two_pi = 2.0 * np.pi
    for i in range(h):
        for k in range(w):
            hue, s, _v = _pixel_to_hsv(rgb[i, k, 0], rgb[i, k, 1], rgb[i, k, 2])
            if s > 0.0:
                angle = two_pi * hue
                rx += s * np.cos(angle)
                ry += s * np.sin(angle)
                total += s
    return rx, ry, total


@njit(cache=True, inline="always")
def _expand_arc(hue: float, target: float, inv_keep: float) -> float:
    # signed arc from target to hue, expanded about the target
    u = 0.5 - ((0.5 - (hue - target)) % 1.0)
    u *= inv_keep
    if u > 0.5:
        u = 0.5
    elif u < -0.5:
        u = -0.5
    return (target + u) % 1.0


@njit(cache=True)
def expanded_hue_resultant(rgb: np.ndarray, strength: float, target: float) -> tuple:
    """Hue resultant after undoing a tint of `strength` toward `target`."""
    h, w = rgb.shape[0], rgb.shape[1]
    inv_keep = 1.0 / max(1.0 - strength, 1e-9)
    rx = 0.0
    ry = 0.0
    total = 0.0
    two_pi = 2.0 * np.pi
    for i in range(h):
        for k in range(w):
            hue, s, _v = _pixel_to_hsv(rgb[i, k, 0], rgb[i, k, 1], rgb[i, k, 2])
            if s > 0.0:
                angle = two_pi * _expand_arc(hue, target, inv_keep)
                rx += s * np.cos(angle)
                ry += s * np.sin(angle)
                total += s
    return rx, ry, total


@njit(cache=True, parallel=True)
def expand_hue(rgb: np.ndarray, strength: float, target: float) -> np.ndarray:
    """Exact inverse of the tint blend: spread hues away from `target`.

    Pixels whose preimage would exceed the half circle stop at the
    antipode; saturation and value are untouched.
    """
    h, w = rgb.shape[0], rgb.shape[1]
    inv_keep = 1.0 / max(1.0 - strength, 1e-9)
    out = np.empty_like(rgb)
    for i in prange(h):
        for k in range(w):
            hue, s, v = _pixel_to_hsv(rgb[i, k, 0], rgb[i, k, 1], rgb[i, k, 2])
            hue = _expand_arc(hue, target, inv_keep)
            r2, g2, b2 = _pixel_to_rgb(hue, s, v)
            out[i, k, 0] = r2
            out[i, k, 1] = g2
            out[i, k, 2] = b2
    return out


@njit(cache=True)
def weighted_rms_2d(weights: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    h, w = a.shape
    acc = 0.0
    for i in prange(h):
        for k in range(w):
            d = weights[i, k] * (a[i, k] - b[i, k])
            acc += d * d
    return np.sqrt(acc / (h * w))


@njit(cache=True)
def weighted_rms_3d(weights: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    h, w, c = a.shape
    acc = 0.0
    for i in prange(h):
        for k in range(w):
            wgt = weights[i, k]
            for j in range(c):
                d = wgt * (a[i, k, j] - b[i, k, j])
                acc += d * d
    return np.sqrt(acc / (h * w * c))


@njit(cache=True)
def diff_rms(a: np.ndarray, b: np.ndarray) -> float:
    h, w = a.shape
    acc = 0.0
    for i in prange(h):
        for k in range(w):
            d = a[i, k] - b[i, k]
            acc += d * d
    return np.sqrt(acc / (h * w))


@njit(cache=True, parallel=True)
def hue_cos_sin(rgb: np.ndarray) -> np.ndarray:
    """Saturation-weighted hue embedding (s*cos, s*sin) as (H, W, 2)."""
    h, w = rgb.shape[0], rgb.shape[1]
    out = np.empty((h, w, 2))
    two_pi = 2.0 * np.pi
    for i in prange(h):
        for k in range(w):
            hue, s, _v = _pixel_to_hsv(rgb[i, k, 0], rgb[i, k, 1], rgb[i, k, 2])
            if s <= 0.0:
                out[i, k, 0] = 0.0
                out[i, k, 1] = 0.0
            else:
                angle = two_pi * hue
                out[i, k, 0] = s * np.cos(angle)
                out[i, k, 1] = s * np.sin(angle)
    return out
