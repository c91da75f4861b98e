"""Filter composition, the neutral anchor, and preset persistence.

`perturb` chains all eight concept adjustments in ordinal order, recomputing
each stage's masks from the intermediate image. `neutralize` maps any photo
to an explicit average look (gray-world balance, mid luminance, fixed
contrast) so that presets describe a deviation from a common anchor.
Presets serialize to a canonical, versioned JSON document.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Literal, Optional

import numpy as np

from .concepts import adjust
from .image import luminance, validate_image
from .params import (
    ALL_CONCEPTS,
    CONCEPT_ORDER,
    DEFAULT_THRESHOLDS,
    ConceptId,
    ConceptMask,
    ConceptParams,
    ConceptThresholds,
    StrengthHue,
)

PRESET_VERSION = 1

# Deterministic stamp used for fitted presets so identical fits serialize
# to identical bytes; interactive flows stamp wall-clock time instead.
EPOCH_RFC3339 = "1970-01-01T00:00:00+00:00"

# Anchor statistics: gray-world balance, mid luminance, fixed spread.
NEUTRAL_MEAN_LUMINANCE = 0.5
NEUTRAL_LUMINANCE_STD = 0.18
GRAY_WORLD_GAIN_RANGE = (0.5, 2.0)
EXPOSURE_GAIN_RANGE = (0.25, 4.0)
CONTRAST_GAIN_RANGE = (0.5, 2.0)


class PresetError(Exception):
    """Base class for preset encode/decode failures."""


class PresetSchemaError(PresetError):
    """Malformed JSON, missing or unknown fields."""


class PresetVersionError(PresetError):
    """Document version not supported."""


class PresetRangeError(PresetError):
    """Parameter value outside its legal range."""


class DegenerateImageError(ValueError):
    """Operation requires a non-constant image."""


def now_rfc3339() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True, eq=True)
class StylePreset:
    """A named, persistable parameter vector plus fit provenance."""

    params: ConceptParams
    name: str = "untitled"
    created_at: str = field(default_factory=now_rfc3339)
    thresholds: ConceptThresholds = DEFAULT_THRESHOLDS
    fit_meta: Optional[dict] = None


def perturb(
    img: np.ndarray,
    params: ConceptParams,
    thresholds: ConceptThresholds = DEFAULT_THRESHOLDS,
) -> np.ndarray:
    """Apply all eight concept adjustments in ordinal order."""
    out = img
    for concept in CONCEPT_ORDER:
        out = adjust(concept, out, params.value_for(concept), thresholds)
    return out


def perturb_masked(
    img: np.ndarray,
    params: ConceptParams,
    mask: ConceptMask,
    thresholds: ConceptThresholds = DEFAULT_THRESHOLDS,
) -> np.ndarray:
    """`perturb` with every concept outside `mask` forced to neutral."""
    return perturb(img, params.restricted(mask), thresholds)


def neutralize(img: np.ndarray) -> np.ndarray:
    """Normalize an image to the average anchor look.

    Three clamped steps: per-channel gray-world gains, a global exposure
    gain to mean luminance 0.5, and an affine contrast map to luminance
    standard deviation 0.18. Raises DegenerateImageError for constant
    images, which carry no usable statistics.
    """
    out = validate_image(img)
    if np.ptp(out) == 0.0:
        raise DegenerateImageError("constant image cannot be neutralized")

    means = out.mean(axis=(0, 1))
    gains = np.clip(means.mean() / np.maximum(means, 1e-12), *GRAY_WORLD_GAIN_RANGE)
    out = np.clip(out * gains, 0.0, 1.0)

    mean_lum = luminance(out).mean()
    gain = np.clip(NEUTRAL_MEAN_LUMINANCE / max(mean_lum, 1e-12), *EXPOSURE_GAIN_RANGE)
    out = np.clip(out * gain, 0.0, 1.0)

    lum = luminance(out)
    spread = np.clip(NEUTRAL_LUMINANCE_STD / max(lum.std(), 1e-12), *CONTRAST_GAIN_RANGE)
    out = np.clip(lum.mean() + spread * (out - lum.mean()), 0.0, 1.0)
    return out


ApplyMode = Literal["absolute", "relative"]


def apply_style(
    content: np.ndarray,
    preset: StylePreset,
    mode: ApplyMode = "absolute",
    mask: ConceptMask = ALL_CONCEPTS,
    thresholds: Optional[ConceptThresholds] = None,
) -> np.ndarray:
    """Render a preset onto a content image.

    Absolute mode anchors on `neutralize(content)` so the preset lands as a
    deviation from the average look; relative mode edits the content as-is.
    """
    if mode not in ("absolute", "relative"):
        raise ValueError(f"mode must be 'absolute' or 'relative', got {mode!r}")
    thresholds = thresholds if thresholds is not None else preset.thresholds
    base = neutralize(content) if mode == "absolute" else content
    return perturb_masked(base, preset.params, mask, thresholds)


# ---------------------------------------------------------------------------
# Preset JSON codec (canonical key order, strict decode)
# ---------------------------------------------------------------------------

_PARAM_KEYS = (
    "sharpness",
    "vignetting",
    "saturation",
    "exposure",
    "contrast",
    "tint",
    "highlight",
    "shadow",
)
_SCALAR_KEYS = _PARAM_KEYS[:5]
_PAIR_KEYS = _PARAM_KEYS[5:]
_THRESHOLD_KEYS = ("tau_highlight", "tau_shadow", "sharpness_kernel")
_TOP_KEYS = ("version", "name", "created_at", "params", "thresholds", "fit_meta")


def _pair_dict(value: StrengthHue) -> dict[str, float]:
    return {"strength": float(value.strength), "hue": float(value.hue)}


def encode_preset(preset: StylePreset) -> bytes:
    """Serialize a preset to canonical UTF-8 JSON (stable key order)."""
    preset.params.validate()
    doc = {
        "version": PRESET_VERSION,
        "name": preset.name,
        "created_at": preset.created_at,
        "params": {
            "sharpness": float(preset.params.sharpness),
            "vignetting": float(preset.params.vignetting),
            "saturation": float(preset.params.saturation),
            "exposure": float(preset.params.exposure),
            "contrast": float(preset.params.contrast),
            "tint": _pair_dict(preset.params.tint),
            "highlight": _pair_dict(preset.params.highlight),
            "shadow": _pair_dict(preset.params.shadow),
        },
        "thresholds": {
            "tau_highlight": float(preset.thresholds.tau_highlight),
            "tau_shadow": float(preset.thresholds.tau_shadow),
            "sharpness_kernel": int(preset.thresholds.sharpness_kernel),
        },
        "fit_meta": preset.fit_meta,
    }
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def _require_keys(obj: Any, keys: tuple[str, ...], where: str) -> None:
    if not isinstance(obj, dict):
        raise PresetSchemaError(f"{where} must be an object")
    missing = [k for k in keys if k not in obj]
    unknown = [k for k in obj if k not in keys]
    if missing:
        raise PresetSchemaError(f"{where} missing fields: {', '.join(missing)}")
    if unknown:
        raise PresetSchemaError(f"{where} has unknown fields: {', '.join(unknown)}")


def _number(obj: dict, key: str, where: str) -> float:
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise PresetSchemaError(f"{where}.{key} must be a number")
    return float(value)


def decode_preset(data: bytes) -> StylePreset:
    """Parse and validate canonical preset JSON.

    Unknown fields, a missing or unsupported version, and out-of-range
    parameters are all rejected.
    """
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise PresetSchemaError(f"invalid JSON: {exc}") from exc
    _require_keys(doc, _TOP_KEYS, "preset")

    if doc["version"] != PRESET_VERSION:
        raise PresetVersionError(f"unsupported preset version {doc['version']!r}")
    if not isinstance(doc["name"], str):
        raise PresetSchemaError("preset.name must be a string")
    created_at = doc["created_at"]
    if not isinstance(created_at, str):
        raise PresetSchemaError("preset.created_at must be a string")
    try:
        datetime.fromisoformat(created_at.replace("Z", "+00:00"))
    except ValueError as exc:
        raise PresetSchemaError(f"preset.created_at is not RFC 3339: {exc}") from exc

    raw_params = doc["params"]
    _require_keys(raw_params, _PARAM_KEYS, "params")
    kwargs: dict[str, Any] = {}
    for key in _SCALAR_KEYS:
        kwargs[key] = _number(raw_params, key, "params")
    for key in _PAIR_KEYS:
        pair = raw_params[key]
        _require_keys(pair, ("strength", "hue"), f"params.{key}")
        kwargs[key] = StrengthHue(
            _number(pair, "strength", f"params.{key}"),
            _number(pair, "hue", f"params.{key}"),
        )
    params = ConceptParams(**kwargs)
    try:
        params.validate()
    except ValueError as exc:
        raise PresetRangeError(str(exc)) from exc

    raw_thresholds = doc["thresholds"]
    _require_keys(raw_thresholds, _THRESHOLD_KEYS, "thresholds")
    kernel = raw_thresholds["sharpness_kernel"]
    if isinstance(kernel, bool) or not isinstance(kernel, int):
        raise PresetSchemaError("thresholds.sharpness_kernel must be an integer")
    try:
        thresholds = ConceptThresholds(
            tau_highlight=_number(raw_thresholds, "tau_highlight", "thresholds"),
            tau_shadow=_number(raw_thresholds, "tau_shadow", "thresholds"),
            sharpness_kernel=kernel,
        )
    except ValueError as exc:
        raise PresetRangeError(str(exc)) from exc

    fit_meta = doc["fit_meta"]
    if fit_meta is not None and not isinstance(fit_meta, dict):
        raise PresetSchemaError("fit_meta must be an object or null")

    return StylePreset(
        params=params,
        name=doc["name"],
        created_at=created_at,
        thresholds=thresholds,
        fit_meta=fit_meta,
    )
