"""Preset learning: fit concept parameters to reference images.

The fitter renders candidate parameter vectors onto each reference's
neutral anchor and minimizes a per-concept weighted feature loss plus an
edge term. Optimization is a seeded derivative-free coordinate search: each
outer iteration draws a random concept subset, runs a bounded golden-section
line search per component of the drawn concepts, and keeps only improving
updates. Freezing the off-subset concepts keeps spatially intertwined
concepts from contaminating each other.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import _kernels
from .concepts import adjust, vignette_field, weight_map
from .image import (
    gradient_magnitude,
    luminance,
    resize_long_edge,
    smooth_field,
    validate_image,
)
from .params import (
    ALL_CONCEPTS,
    CONCEPT_ORDER,
    DEFAULT_THRESHOLDS,
    SCALAR_CONCEPTS,
    ConceptId,
    ConceptMask,
    ConceptParams,
    ConceptThresholds,
    Scalar,
    StrengthHue,
    neutral_params,
)
from .pcturb import EPOCH_RFC3339, DegenerateImageError, StylePreset, neutralize

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

# Hue probing needs a visible strength before hue evidence exists.
_HUE_PROBE_STRENGTH = 0.5
_MIN_PROBE_STRENGTH = 0.05

# Average-style constants for the fitting anchor: the mean saturation, the
# high-frequency share of the luminance spread, and the hue concentration
# that count as "neutral". The bundled calibration textures conform to
# these exactly.
SAT_MEAN_TARGET = 0.13
HF_SHARE_TARGET = 0.10
HUE_BALANCE_TARGET = 0.01
_HUE_BALANCE_SKIP = 0.03
_VIGNETTE_EST_CLAMP = 0.8
_DESHARPEN_CLAMP = 0.95
_DETINT_MAX = 0.9
_ANCHOR_SKIP_TOL = 0.01


@dataclass(frozen=True)
class FitConfig:
    """Knobs for `fit_style`; the defaults suit 1-5 reference photos."""

    max_outer_iterations: int = 200
    subset_size: int = 2
    line_search_evals: int = 16
    convergence_tol: float = 1e-3
    seed: int = 0
    downsample_long_edge: int = 512
    loss_edge_weight: float = 0.1

    def __post_init__(self) -> None:
        if self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be >= 1")
        if not (1 <= self.subset_size <= 8):
            raise ValueError("subset_size must lie in [1, 8]")
        if self.line_search_evals < 4:
            raise ValueError("line_search_evals must be >= 4")
        if self.convergence_tol <= 0.0:
            raise ValueError("convergence_tol must be positive")
        if self.downsample_long_edge < 16:
            raise ValueError("downsample_long_edge must be >= 16")
        if self.loss_edge_weight < 0.0:
            raise ValueError("loss_edge_weight must be >= 0")


@dataclass
class FitReport:
    final_loss: float
    loss_history: list[tuple[int, float]]
    per_concept_residual: dict[ConceptId, float]
    converged: bool
    evaluations: int


ProgressCallback = Callable[[int, float, ConceptParams], None]


def concept_feature(
    concept: ConceptId,
    img: np.ndarray,
    thresholds: ConceptThresholds = DEFAULT_THRESHOLDS,
) -> np.ndarray:
    """Per-concept feature image the reconstruction loss compares.

    Tint reads the hue angle embedded as saturation-weighted (cos, sin)
    so that gray pixels carry no hue evidence and wraparound costs nothing.
    """
    img = np.ascontiguousarray(img, dtype=np.float64)
    if concept is ConceptId.SHARPNESS:
        return gradient_magnitude(img)
    if concept in (ConceptId.VIGNETTING, ConceptId.EXPOSURE, ConceptId.CONTRAST):
        return luminance(img)
    if concept is ConceptId.SATURATION:
        return _kernels.saturation_channel(img)
    if concept is ConceptId.TINT:
        return _kernels.hue_cos_sin(img)
    # Highlight / shadow compare raw color.
    return img


def _rms(arr: np.ndarray) -> float:
    flat = arr.ravel()
    return float(np.sqrt(np.dot(flat, flat) / flat.size))


def _radial_coefficient(lum: np.ndarray) -> float:
    """Least-squares b in lum ~ c * (1 + b * corner_distance)."""
    field = vignette_field(lum.shape[0], lum.shape[1])
    centered = field - field.mean()
    slope = np.mean(lum * centered) / np.mean(centered * centered)
    base = lum.mean() - slope * field.mean()
    if abs(base) < 1e-9:
        return 0.0
    return float(slope / base)


def _hf_share(lum: np.ndarray, kernel: int) -> float:
    """RMS high-frequency content relative to the luminance spread."""
    detail = lum - smooth_field(lum, kernel)
    return _rms(detail) / max(lum.std(), 1e-9)


def _desharpen_amount(lum: np.ndarray, kernel: int) -> float:
    """Sharpness ξ that brings the high-frequency share to its target.

    The unsharp family acts linearly on luminance, so the share is a ratio
    of quadratics in ξ and the target condition solves in closed form.
    """
    blur1 = smooth_field(lum, kernel)
    blur2 = smooth_field(blur1, kernel)
    h1 = lum - blur1
    h2 = blur1 - blur2
    lc = lum - lum.mean()
    bc = blur1 - blur1.mean()
    t2 = HF_SHARE_TARGET**2
    a1 = np.mean(h1 * h1) - t2 * np.mean(lc * lc)
    a2 = np.mean(h1 * h2) - t2 * np.mean(lc * bc)
    a3 = np.mean(h2 * h2) - t2 * np.mean(bc * bc)
    # (1+g)^2 a1 - 2 g (1+g) a2 + g^2 a3 = 0
    qa = a1 - 2.0 * a2 + a3
    qb = 2.0 * (a1 - a2)
    qc = a1
    if abs(qa) < 1e-15:
        if abs(qb) < 1e-15:
            return 0.0
        roots = [-qc / qb]
    else:
        disc = qb * qb - 4.0 * qa * qc
        if disc < 0.0:
            return 0.0
        roots = [(-qb - math.sqrt(disc)) / (2.0 * qa), (-qb + math.sqrt(disc)) / (2.0 * qa)]
    valid = [r for r in roots if -_DESHARPEN_CLAMP <= r <= _DESHARPEN_CLAMP]
    if not valid:
        return 0.0
    return min(valid, key=abs)


def _detint_amount(img: np.ndarray) -> tuple[float, float]:
    """Tint strength and target hue explaining this image's hue clustering.

    Returns (0, 0) for hue-balanced images. Otherwise scans the exact
    inverse of the tint contraction for the smallest strength that restores
    balance (the anchor family has a near-zero hue resultant).
    """
    rx, ry, total = _kernels.hue_resultant(img)
    if total <= 0.0:
        return 0.0, 0.0
    if math.hypot(rx, ry) / total < _HUE_BALANCE_SKIP:
        return 0.0, 0.0
    target = (math.atan2(ry, rx) / (2.0 * math.pi)) % 1.0

    best = (math.hypot(rx, ry) / total, 0.0)
    strength = 0.0
    while strength <= _DETINT_MAX:
        ex, ey, et = _kernels.expanded_hue_resultant(img, strength, target)
        rho = math.hypot(ex, ey) / max(et, 1e-9)
        if rho <= HUE_BALANCE_TARGET:
            return strength, target
        if rho < best[0]:
            best = (rho, strength)
        strength += 0.02
    return best[1], target


def style_anchor(
    img: np.ndarray, thresholds: ConceptThresholds = DEFAULT_THRESHOLDS
) -> np.ndarray:
    """Average-style rendition of a reference, used as the fitting anchor.

    `neutralize` alone only resets white balance, exposure, and contrast, so
    deviations in the other concepts would be invisible to the fit (the
    anchor would still carry them). This extends it with explicit, clamped
    normalizations for the remaining global concepts: radial luminance
    trend (vignetting), high-frequency share (sharpness), hue clustering
    (tint), and mean saturation. Conforming images pass through unchanged.
    """
    out = validate_image(img)

    beta = _radial_coefficient(luminance(out))
    beta = float(np.clip(beta, -_VIGNETTE_EST_CLAMP, _VIGNETTE_EST_CLAMP))
    if abs(beta) >= _ANCHOR_SKIP_TOL:
        field = vignette_field(out.shape[0], out.shape[1])
        out = np.clip(out / (1.0 + beta * field)[..., None], 0.0, 1.0)

    lum = luminance(out)
    share = _hf_share(lum, thresholds.sharpness_kernel)
    if abs(share - HF_SHARE_TARGET) >= _ANCHOR_SKIP_TOL * HF_SHARE_TARGET:
        amount = _desharpen_amount(lum, thresholds.sharpness_kernel)
        if amount != 0.0:
            out = adjust(ConceptId.SHARPNESS, out, Scalar(amount), thresholds)

    # Undo hue clustering (gray-world only removes the mean color cast; the
    # tint contraction itself needs its exact inverse).
    strength, target = _detint_amount(np.ascontiguousarray(out))
    if strength > 0.0:
        out = np.clip(_kernels.expand_hue(np.ascontiguousarray(out), strength, target), 0.0, 1.0)

    # Measure saturation on a globally normalized copy (affine tone shifts
    # distort raw saturation), but correct the image before normalizing so
    # the final anchor has clean global statistics. Normalization feeds
    # back into saturation, so iterate to the joint fixed point.
    normalized = neutralize(out)
    for _ in range(3):
        mean_sat = float(_kernels.saturation_channel(normalized).mean())
        gain = float(np.clip(SAT_MEAN_TARGET / max(mean_sat, 1e-9), 0.5, 2.0))
        if abs(gain - 1.0) < _ANCHOR_SKIP_TOL:
            break
        out = adjust(ConceptId.SATURATION, out, Scalar(gain - 1.0), thresholds)
        normalized = neutralize(out)
    return normalized


class _RenderFeatures:
    """Lazy feature reader for one image; shares luminance across features."""

    def __init__(self, img: np.ndarray, thresholds: ConceptThresholds):
        self.img = np.ascontiguousarray(img, dtype=np.float64)
        self.thresholds = thresholds
        self._lum: Optional[np.ndarray] = None
        self._sat: Optional[np.ndarray] = None
        self._grad: Optional[np.ndarray] = None

    @property
    def lum(self) -> np.ndarray:
        if self._lum is None:
            self._lum = luminance(self.img)
        return self._lum

    @property
    def grad(self) -> np.ndarray:
        if self._grad is None:
            self._grad = _kernels.central_gradient_magnitude(self.lum)
        return self._grad

    def feature(self, concept: ConceptId) -> np.ndarray:
        if concept is ConceptId.SHARPNESS:
            return self.grad
        if concept in (ConceptId.VIGNETTING, ConceptId.EXPOSURE, ConceptId.CONTRAST):
            return self.lum
        if concept is ConceptId.SATURATION:
            if self._sat is None:
                self._sat = _kernels.saturation_channel(self.img)
            return self._sat
        if concept is ConceptId.TINT:
            return _kernels.hue_cos_sin(self.img)
        return self.img


def weighted_loss(
    reference: np.ndarray,
    rendered: np.ndarray,
    subset: ConceptMask,
    thresholds: ConceptThresholds = DEFAULT_THRESHOLDS,
    edge_weight: float = 0.1,
) -> float:
    """Per-concept weighted feature distance plus an edge-preservation term.

    Each subset concept contributes the RMS of its reference weight map
    times the feature difference; the edge term is the RMS gradient
    difference. Masks and features on the reference side are computed from
    the reference, so the target of the fit never moves.
    """
    if reference.shape != rendered.shape:
        raise ValueError(f"shape mismatch: {reference.shape} vs {rendered.shape}")
    ref = _RenderFeatures(reference, thresholds)
    out = _RenderFeatures(rendered, thresholds)
    total = 0.0
    for concept in sorted(subset):
        weights = weight_map(concept, reference, thresholds)
        fa = ref.feature(concept)
        fb = out.feature(concept)
        if fa.ndim == 3:
            total += _kernels.weighted_rms_3d(weights, fa, fb)
        else:
            total += _kernels.weighted_rms_2d(weights, fa, fb)
    total += edge_weight * _kernels.diff_rms(ref.grad, out.grad)
    return total


class _ReferenceTarget:
    """Precomputed per-reference loss ingredients (weights, features, edges)."""

    def __init__(self, reference: np.ndarray, anchor: np.ndarray, thresholds: ConceptThresholds):
        self.anchor = anchor
        self.thresholds = thresholds
        feats = _RenderFeatures(reference, thresholds)
        self.weights = {
            c: weight_map(c, reference, thresholds) for c in CONCEPT_ORDER
        }
        self.features = {c: feats.feature(c).copy() for c in CONCEPT_ORDER}
        self.grad = feats.grad

    def loss(self, rendered: np.ndarray, subset: Iterable[ConceptId], edge_weight: float) -> float:
        out = _RenderFeatures(rendered, self.thresholds)
        total = 0.0
        for concept in subset:
            fa = self.features[concept]
            fb = out.feature(concept)
            weights = self.weights[concept]
            if fa.ndim == 3:
                total += _kernels.weighted_rms_3d(weights, fa, fb)
            else:
                total += _kernels.weighted_rms_2d(weights, fa, fb)
        total += edge_weight * _kernels.diff_rms(self.grad, out.grad)
        return total


class _Objective:
    """Subset loss over all references, with stage-prefix render caching."""

    def __init__(
        self,
        targets: Sequence[_ReferenceTarget],
        thresholds: ConceptThresholds,
        edge_weight: float,
    ):
        self.targets = targets
        self.thresholds = thresholds
        self.edge_weight = edge_weight
        self.evaluations = 0

    def _compose(
        self, base: np.ndarray, params: ConceptParams, concepts: Sequence[ConceptId]
    ) -> np.ndarray:
        out = base
        for concept in concepts:
            out = adjust(concept, out, params.value_for(concept), self.thresholds)
        return out

    def full_loss(self, params: ConceptParams, subset: Iterable[ConceptId]) -> float:
        subset = sorted(subset)
        self.evaluations += 1
        return sum(
            t.loss(self._compose(t.anchor, params, CONCEPT_ORDER), subset, self.edge_weight)
            for t in self.targets
        )

    def prefixes(self, params: ConceptParams, concept: ConceptId) -> list[np.ndarray]:
        """Render stages strictly before `concept` for every anchor."""
        before = CONCEPT_ORDER[: concept - 1]
        return [self._compose(t.anchor, params, before) for t in self.targets]

    def loss_from_prefix(
        self,
        prefixes: Sequence[np.ndarray],
        concept: ConceptId,
        value,
        params: ConceptParams,
        subset: Sequence[ConceptId],
    ) -> float:
        after = CONCEPT_ORDER[concept:]
        self.evaluations += 1
        total = 0.0
        for target, prefix in zip(self.targets, prefixes):
            img = adjust(concept, prefix, value, self.thresholds)
            img = self._compose(img, params, after)
            total += target.loss(img, subset, self.edge_weight)
        return total


def _golden_section(
    f: Callable[[float], float], lo: float, hi: float, evals: int
) -> tuple[float, float]:
    """Bounded golden-section minimization with a fixed evaluation budget.

    Returns the best evaluated point and its value (not the bracket
    midpoint), so the result is always an actually-measured improvement.
    """
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc = f(c)
    fd = f(d)
    best_x, best_f = (c, fc) if fc <= fd else (d, fd)
    for _ in range(evals - 2):
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = f(c)
            if fc < best_f:
                best_x, best_f = c, fc
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = f(d)
            if fd < best_f:
                best_x, best_f = d, fd
    return best_x, best_f


def _circular_delta(a: float, b: float) -> float:
    """Magnitude of the shortest hue arc between a and b."""
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def _strength_hue_move(a: StrengthHue, b: StrengthHue) -> float:
    """Distance between strength/hue values in the unit-disk embedding.

    Hue is meaningless at zero strength, so a bare hue flip at negligible
    strength counts as a negligible move.
    """
    ax = a.strength * math.cos(2.0 * math.pi * a.hue)
    ay = a.strength * math.sin(2.0 * math.pi * a.hue)
    bx = b.strength * math.cos(2.0 * math.pi * b.hue)
    by = b.strength * math.sin(2.0 * math.pi * b.hue)
    return math.hypot(ax - bx, ay - by)


def _max_component_move(before: ConceptParams, after: ConceptParams) -> float:
    """Largest per-component change between two parameter vectors."""
    move = 0.0
    for concept in CONCEPT_ORDER:
        a = before.value_for(concept)
        b = after.value_for(concept)
        if isinstance(a, Scalar):
            move = max(move, abs(b.xi - a.xi))
        else:
            move = max(move, _strength_hue_move(a, b))
    return move


def image_digest(img: np.ndarray) -> str:
    """SHA-256 of the raw pixel buffer (shape-dependent)."""
    h = hashlib.sha256()
    h.update(str(img.shape).encode())
    h.update(np.ascontiguousarray(img).tobytes())
    return h.hexdigest()


def fit_style(
    references: Sequence[np.ndarray],
    config: FitConfig = FitConfig(),
    thresholds: ConceptThresholds = DEFAULT_THRESHOLDS,
    progress: Optional[ProgressCallback] = None,
    name: str = "fitted",
) -> tuple[StylePreset, FitReport]:
    """Learn the preset that best explains the references.

    References are downsampled, anchored via `neutralize`, and fit with the
    randomized coordinate search described in the module docstring. The
    result is bitwise-deterministic for identical references and config
    (fitted presets carry a fixed creation stamp for that reason).

    Raises ValueError for an empty reference list and DegenerateImageError
    when every reference is constant.
    """
    if len(references) == 0:
        raise ValueError("at least one reference image is required")
    digests = [image_digest(np.asarray(r, dtype=np.float64)) for r in references]
    small = [
        resize_long_edge(validate_image(r), config.downsample_long_edge)
        for r in references
    ]
    targets = []
    for img in small:
        try:
            anchor = style_anchor(img, thresholds)
        except DegenerateImageError:
            continue
        targets.append(_ReferenceTarget(img, anchor, thresholds))
    if not targets:
        raise DegenerateImageError("all reference images are constant")

    objective = _Objective(targets, thresholds, config.loss_edge_weight)
    rng = np.random.default_rng(config.seed)
    params = neutral_params()

    # Convergence: the random draws accumulate into sweeps; once a window of
    # iterations has visited all eight concepts and the net change of every
    # component over that window is below the tolerance, the fit is stable.
    window_start = params
    visited: set[ConceptId] = set()
    loss_history: list[tuple[int, float]] = []
    converged = False
    iterations = 0

    for iteration in range(1, config.max_outer_iterations + 1):
        iterations = iteration
        drawn = rng.choice(len(CONCEPT_ORDER), size=config.subset_size, replace=False)
        subset = sorted(ConceptId(int(i) + 1) for i in drawn)

        for concept in subset:
            if concept in SCALAR_CONCEPTS:
                params, _ = _search_scalar(objective, params, concept, subset, config)
            else:
                params, _ = _search_strength_hue(objective, params, concept, subset, config)

        current = objective.full_loss(params, ALL_CONCEPTS)
        loss_history.append((iteration, current))
        if progress is not None:
            progress(iteration, current, params)

        visited.update(subset)
        if len(visited) == len(CONCEPT_ORDER):
            if _max_component_move(window_start, params) < config.convergence_tol:
                converged = True
                break
            window_start = params
            visited = set()

    final_loss = loss_history[-1][1]
    residuals = _per_concept_residuals(objective, params)
    report = FitReport(
        final_loss=final_loss,
        loss_history=loss_history,
        per_concept_residual=residuals,
        converged=converged,
        evaluations=objective.evaluations,
    )
    preset = StylePreset(
        params=params,
        name=name,
        created_at=EPOCH_RFC3339,
        thresholds=thresholds,
        fit_meta={
            "reference_digests": digests,
            "final_loss": final_loss,
            "seed": int(config.seed),
            "iterations": iterations,
            "evaluations": objective.evaluations,
            "converged": converged,
        },
    )
    return preset, report


def _search_scalar(
    objective: _Objective,
    params: ConceptParams,
    concept: ConceptId,
    subset: Sequence[ConceptId],
    config: FitConfig,
) -> tuple[ConceptParams, float]:
    prefixes = objective.prefixes(params, concept)
    current = params.value_for(concept)
    base = objective.loss_from_prefix(prefixes, concept, current, params, subset)

    def f(x: float) -> float:
        return objective.loss_from_prefix(prefixes, concept, Scalar(x), params, subset)

    best_x, best_f = _golden_section(f, -1.0, 1.0, config.line_search_evals)
    if best_f < base:
        return params.with_value(concept, Scalar(best_x)), abs(best_x - current.xi)
    return params, 0.0


def _search_strength_hue(
    objective: _Objective,
    params: ConceptParams,
    concept: ConceptId,
    subset: Sequence[ConceptId],
    config: FitConfig,
) -> tuple[ConceptParams, float]:
    """Coupled hue/strength search for tint, highlight, and shadow.

    Hue is unidentifiable at zero strength, so the hue grid is probed at a
    mid strength when the current strength is near zero; the combined
    (strength, hue) update is kept only when it beats the current loss.
    """
    prefixes = objective.prefixes(params, concept)
    current: StrengthHue = params.value_for(concept)
    base = objective.loss_from_prefix(prefixes, concept, current, params, subset)
    evals = config.line_search_evals

    probe = current.strength if current.strength >= _MIN_PROBE_STRENGTH else _HUE_PROBE_STRENGTH

    # Hue grid at the probe strength; ties break toward the smallest hue.
    grid = [i / evals for i in range(evals)]
    grid_losses = [
        objective.loss_from_prefix(
            prefixes, concept, StrengthHue(probe, h), params, subset
        )
        for h in grid
    ]
    best_idx = int(np.argmin(grid_losses))
    hue = grid[best_idx]

    # Strength line search at the chosen hue.
    def f_strength(s: float) -> float:
        return objective.loss_from_prefix(
            prefixes, concept, StrengthHue(s, hue), params, subset
        )

    strength, best_f = _golden_section(f_strength, 0.0, 1.0, evals)

    # Local circular hue refinement around the grid winner; skipped when the
    # strength search already failed to beat the current loss.
    if best_f < base:
        def f_hue(h: float) -> float:
            return objective.loss_from_prefix(
                prefixes, concept, StrengthHue(strength, h % 1.0), params, subset
            )

        span = 1.0 / evals
        refined, refined_f = _golden_section(f_hue, hue - span, hue + span, evals)
        if refined_f < best_f:
            hue, best_f = refined % 1.0, refined_f

    if best_f < base:
        candidate = StrengthHue(strength, hue)
        return params.with_value(concept, candidate), _strength_hue_move(candidate, current)
    return params, 0.0


def _per_concept_residuals(
    objective: _Objective, params: ConceptParams
) -> dict[ConceptId, float]:
    residuals = {concept: 0.0 for concept in CONCEPT_ORDER}
    for target in objective.targets:
        render = objective._compose(target.anchor, params, CONCEPT_ORDER)
        out = _RenderFeatures(render, objective.thresholds)
        for concept in CONCEPT_ORDER:
            fa = target.features[concept]
            fb = out.feature(concept)
            weights = target.weights[concept]
            if fa.ndim == 3:
                residuals[concept] += _kernels.weighted_rms_3d(weights, fa, fb)
            else:
                residuals[concept] += _kernels.weighted_rms_2d(weights, fa, fb)
    return residuals
