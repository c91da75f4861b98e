"""Concept identifiers, parameter values, and the full parameter vector.

A filter is described by one value per concept: five signed scalars
(sharpness, vignetting, saturation, exposure, contrast) and three
strength/hue pairs (tint, highlight, shadow). The neutral vector renders
as the identity.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import IntEnum
from typing import Union


class ConceptId(IntEnum):
    """The eight photographic concepts, ordinal = application order."""

    SHARPNESS = 1
    VIGNETTING = 2
    SATURATION = 3
    TINT = 4
    EXPOSURE = 5
    CONTRAST = 6
    HIGHLIGHT = 7
    SHADOW = 8


CONCEPT_ORDER: tuple[ConceptId, ...] = tuple(sorted(ConceptId))
ALL_CONCEPTS: frozenset[ConceptId] = frozenset(ConceptId)

SCALAR_CONCEPTS: frozenset[ConceptId] = frozenset(
    {
        ConceptId.SHARPNESS,
        ConceptId.VIGNETTING,
        ConceptId.SATURATION,
        ConceptId.EXPOSURE,
        ConceptId.CONTRAST,
    }
)
STRENGTH_HUE_CONCEPTS: frozenset[ConceptId] = frozenset(
    {ConceptId.TINT, ConceptId.HIGHLIGHT, ConceptId.SHADOW}
)

# Mask of enabled concepts during rendering.
ConceptMask = frozenset


@dataclass(frozen=True)
class Scalar:
    """Signed adjustment strength in [-1, 1]; 0 is neutral."""

    xi: float = 0.0

    def validate(self) -> None:
        if not (-1.0 <= self.xi <= 1.0):
            raise ValueError(f"scalar strength {self.xi} outside [-1, 1]")

    @property
    def neutral(self) -> bool:
        return self.xi == 0.0


@dataclass(frozen=True)
class StrengthHue:
    """Strength in [0, 1] toward a target hue in [0, 1) (circular)."""

    strength: float = 0.0
    hue: float = 0.0

    def validate(self) -> None:
        if not (0.0 <= self.strength <= 1.0):
            raise ValueError(f"strength {self.strength} outside [0, 1]")
        if not (0.0 <= self.hue < 1.0):
            raise ValueError(f"hue {self.hue} outside [0, 1)")

    @property
    def neutral(self) -> bool:
        return self.strength == 0.0


ConceptValue = Union[Scalar, StrengthHue]


def neutral_value(concept: ConceptId) -> ConceptValue:
    if concept in SCALAR_CONCEPTS:
        return Scalar(0.0)
    return StrengthHue(0.0, 0.0)


def check_value_type(concept: ConceptId, value: ConceptValue) -> None:
    """Raise TypeError when the value kind does not match the concept."""
    if concept in SCALAR_CONCEPTS and not isinstance(value, Scalar):
        raise TypeError(f"{concept.name} takes a Scalar, got {type(value).__name__}")
    if concept in STRENGTH_HUE_CONCEPTS and not isinstance(value, StrengthHue):
        raise TypeError(
            f"{concept.name} takes a StrengthHue, got {type(value).__name__}"
        )


@dataclass(frozen=True)
class ConceptThresholds:
    """Tone thresholds and the sharpening kernel extent."""

    tau_highlight: float = 0.7
    tau_shadow: float = 0.3
    sharpness_kernel: int = 11

    def __post_init__(self) -> None:
        if not (0.0 < self.tau_highlight < 1.0):
            raise ValueError("tau_highlight must lie in (0, 1)")
        if not (0.0 < self.tau_shadow < 1.0):
            raise ValueError("tau_shadow must lie in (0, 1)")
        if self.tau_shadow >= self.tau_highlight:
            raise ValueError("tau_shadow must be below tau_highlight")
        if self.sharpness_kernel < 1 or self.sharpness_kernel % 2 == 0:
            raise ValueError("sharpness_kernel must be odd and >= 1")


DEFAULT_THRESHOLDS = ConceptThresholds()

_FIELD_BY_CONCEPT = {
    ConceptId.SHARPNESS: "sharpness",
    ConceptId.VIGNETTING: "vignetting",
    ConceptId.SATURATION: "saturation",
    ConceptId.TINT: "tint",
    ConceptId.EXPOSURE: "exposure",
    ConceptId.CONTRAST: "contrast",
    ConceptId.HIGHLIGHT: "highlight",
    ConceptId.SHADOW: "shadow",
}


@dataclass(frozen=True)
class ConceptParams:
    """One value per concept: the complete description of a filter."""

    sharpness: float = 0.0
    vignetting: float = 0.0
    saturation: float = 0.0
    exposure: float = 0.0
    contrast: float = 0.0
    tint: StrengthHue = StrengthHue()
    highlight: StrengthHue = StrengthHue()
    shadow: StrengthHue = StrengthHue()

    def value_for(self, concept: ConceptId) -> ConceptValue:
        field = _FIELD_BY_CONCEPT[concept]
        raw = getattr(self, field)
        if concept in SCALAR_CONCEPTS:
            return Scalar(raw)
        return raw

    def with_value(self, concept: ConceptId, value: ConceptValue) -> "ConceptParams":
        check_value_type(concept, value)
        field = _FIELD_BY_CONCEPT[concept]
        payload = value.xi if isinstance(value, Scalar) else value
        return dataclasses.replace(self, **{field: payload})

    def restricted(self, mask: ConceptMask) -> "ConceptParams":
        """Copy with every concept outside `mask` reset to neutral."""
        out = self
        for concept in CONCEPT_ORDER:
            if concept not in mask:
                out = out.with_value(concept, neutral_value(concept))
        return out

    def validate(self) -> None:
        for concept in CONCEPT_ORDER:
            self.value_for(concept).validate()

    @property
    def is_neutral(self) -> bool:
        return all(self.value_for(c).neutral for c in CONCEPT_ORDER)


def neutral_params() -> ConceptParams:
    """The identity parameter vector: every concept at its neutral value."""
    return ConceptParams()
