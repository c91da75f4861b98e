"""pif: parametric image filters.

Learn a photographic look from reference images as a small, auditable
parameter vector, then render it onto any photo.
"""

from .concepts import adjust, weight_map, weight_map_raw
from .fit import FitConfig, FitReport, concept_feature, fit_style, weighted_loss
from .image import (
    gaussian_blur,
    gradient_magnitude,
    load_image,
    luminance,
    save_image,
    to_hsv,
    to_rgb,
)
from .metrics import (
    ConceptStats,
    Histogram,
    concept_stats,
    emd,
    emd_image,
    histogram,
    psnr,
    ssim,
)
from .params import (
    ALL_CONCEPTS,
    ConceptId,
    ConceptParams,
    ConceptThresholds,
    Scalar,
    StrengthHue,
    neutral_params,
)
from .pcturb import (
    StylePreset,
    apply_style,
    decode_preset,
    encode_preset,
    neutralize,
    perturb,
    perturb_masked,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_CONCEPTS",
    "ConceptId",
    "ConceptParams",
    "ConceptStats",
    "ConceptThresholds",
    "FitConfig",
    "FitReport",
    "Histogram",
    "Scalar",
    "StrengthHue",
    "StylePreset",
    "adjust",
    "apply_style",
    "concept_feature",
    "concept_stats",
    "decode_preset",
    "emd",
    "emd_image",
    "encode_preset",
    "fit_style",
    "gaussian_blur",
    "gradient_magnitude",
    "histogram",
    "load_image",
    "luminance",
    "neutral_params",
    "neutralize",
    "perturb",
    "perturb_masked",
    "psnr",
    "save_image",
    "ssim",
    "to_hsv",
    "to_rgb",
    "weight_map",
    "weight_map_raw",
    "weighted_loss",
]
