"""Raster foundation: image I/O, color conversion, blur, and gradients.

Images are plain numpy arrays. An RGB raster has shape (H, W, 3), dtype
float64, every channel in [0, 1]. An HSV raster has the same shape with
h in [0, 1) (circular) and s, v in [0, 1]. A scalar field is (H, W) float64.
All functions here are pure; callers may treat returned arrays as immutable.
"""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path

import cv2
import numpy as np

from . import _kernels

# Rec. 709 luma weights.
LUMA_WEIGHTS = np.array([0.2126, 0.7152, 0.0722])

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_JPEG_MAGIC = b"\xff\xd8\xff"


class ImageError(Exception):
    """Base class for image I/O and validation failures."""


class UnreadableImageError(ImageError):
    """File missing, unopenable, or failed to decode."""


class UnsupportedFormatError(ImageError):
    """Not a PNG/JPEG payload, or an unsupported pixel layout."""


class EmptyImageError(ImageError):
    """Image has a zero dimension."""


class ImageWriteError(ImageError):
    """Destination could not be written."""


def validate_image(img: np.ndarray) -> np.ndarray:
    """Check the RGB raster contract: (H, W, 3), finite, in [0, 1]."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise EmptyImageError("image has a zero dimension")
    if not np.isfinite(arr).all():
        raise ValueError("image contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("image channels must lie in [0, 1]")
    return arr


def decode_image(data: bytes) -> np.ndarray:
    """Decode PNG (8/16-bit) or JPEG bytes to a normalized RGB raster.

    Alpha is dropped; grayscale is broadcast to three channels; values are
    normalized by the bit-depth maximum.
    """
    if not (data.startswith(_PNG_MAGIC) or data.startswith(_JPEG_MAGIC)):
        raise UnsupportedFormatError("payload is neither PNG nor JPEG")
    raw = cv2.imdecode(np.frombuffer(data, dtype=np.uint8), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise UnreadableImageError("decode failed (corrupt or truncated file)")
    if raw.ndim == 2:
        raw = raw[:, :, None].repeat(3, axis=2)
    if raw.shape[2] == 4:
        raw = raw[:, :, :3]
    if raw.shape[2] != 3:
        raise UnsupportedFormatError(f"unsupported channel count {raw.shape[2]}")
    if raw.shape[0] < 1 or raw.shape[1] < 1:
        raise EmptyImageError("decoded image has a zero dimension")
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise UnsupportedFormatError(f"unsupported sample type {raw.dtype}")
    # OpenCV decodes BGR; flip to RGB.
    return raw[:, :, ::-1].astype(np.float64) / scale


def load_image(path: str | Path) -> np.ndarray:
    """Load a PNG (8/16-bit) or JPEG file as a normalized RGB raster."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise UnreadableImageError(f"cannot read {path}: {exc}") from exc
    return decode_image(data)


def encode_png(img: np.ndarray, bit_depth: int = 8) -> bytes:
    """Encode an RGB raster as PNG bytes at 8 or 16 bits per channel."""
    arr = validate_image(img)
    if bit_depth == 8:
        quantized = np.rint(arr * 255.0).astype(np.uint8)
    elif bit_depth == 16:
        quantized = np.rint(arr * 65535.0).astype(np.uint16)
    else:
        raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")
    ok, buf = cv2.imencode(".png", quantized[:, :, ::-1])
    if not ok:
        raise ImageWriteError("PNG encoding failed")
    return buf.tobytes()


def save_image(img: np.ndarray, path: str | Path, bit_depth: int = 8) -> None:
    """Write an RGB raster as a PNG file (lossless up to quantization)."""
    path = Path(path)
    if path.suffix.lower() != ".png":
        raise UnsupportedFormatError("images are saved as PNG only")
    data = encode_png(img, bit_depth)
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise ImageWriteError(f"cannot write {path}: {exc}") from exc


def to_hsv(img: np.ndarray) -> np.ndarray:
    """RGB -> HSV (hexcone). h in [0, 1) with achromatic pixels at h=0."""
    return _kernels.hsv_from_rgb(np.ascontiguousarray(img, dtype=np.float64))


def to_rgb(hsv: np.ndarray) -> np.ndarray:
    """HSV -> RGB, inverse of :func:`to_hsv`."""
    return _kernels.rgb_from_hsv(np.ascontiguousarray(hsv, dtype=np.float64))


def luminance(img: np.ndarray) -> np.ndarray:
    """Rec. 709 scalar luminance of an RGB raster."""
    return _kernels.luma(np.ascontiguousarray(img, dtype=np.float64))


@lru_cache(maxsize=32)
def gaussian_kernel(size: int) -> np.ndarray:
    """Normalized 1-D Gaussian taps with sigma = (size - 1) / 6."""
    if size < 1 or size % 2 == 0:
        raise ValueError(f"kernel size must be odd and >= 1, got {size}")
    if size == 1:
        return np.array([1.0])
    sigma = (size - 1) / 6.0
    x = np.arange(size) - (size - 1) / 2.0
    taps = np.exp(-(x * x) / (2.0 * sigma * sigma))
    taps /= taps.sum()
    taps.setflags(write=False)
    return taps


def smooth_field(field: np.ndarray, kernel_size: int) -> np.ndarray:
    """Separable Gaussian smoothing with replicate borders, no clamping."""
    taps = gaussian_kernel(kernel_size)
    if kernel_size == 1:
        return field
    return cv2.sepFilter2D(field, -1, taps, taps, borderType=cv2.BORDER_REPLICATE)


def gaussian_blur(img: np.ndarray, kernel_size: int) -> np.ndarray:
    """Separable Gaussian blur with replicate borders, per channel."""
    if kernel_size == 1:
        gaussian_kernel(kernel_size)  # still validates the size
        return img
    return np.clip(smooth_field(img, kernel_size), 0.0, 1.0)


def gradient_magnitude(img: np.ndarray) -> np.ndarray:
    """Gradient magnitude of the luminance via central differences.

    Borders replicate, so one-pixel-wide/tall images have a zero derivative
    along the degenerate axis.
    """
    return _kernels.central_gradient_magnitude(luminance(img))


def resize_long_edge(img: np.ndarray, long_edge: int) -> np.ndarray:
    """Area-average downsample so the longer side is at most `long_edge`.

    Images already small enough are returned unchanged.
    """
    h, w = img.shape[:2]
    longest = max(h, w)
    if longest <= long_edge:
        return img
    scale = long_edge / longest
    new_w = max(1, round(w * scale))
    new_h = max(1, round(h * scale))
    out = cv2.resize(img, (new_w, new_h), interpolation=cv2.INTER_AREA)
    return np.clip(out, 0.0, 1.0)
