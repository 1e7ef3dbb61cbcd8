"""Distillation losses between student and teacher image batches.

Both losses use the same reduction: absolute differences are summed over
every pixel (or selected coefficient) of an image, then averaged over the
batch. ``alpha`` values are therefore tied to this scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bands import DETAIL_ORIENTATIONS, BandSelector
from .errors import InvalidArgumentError
from .wavelet import _inverse_pyramid_arrays, _pyramid_arrays, as_image, max_levels

PIXEL_BAND = "pixel"


@dataclass(frozen=True)
class DistillConfig:
    levels: int = 3
    selector: str = "high_only"
    alpha: float = 1.0
    grad_epsilon: float = 0.0

    def __post_init__(self):
        sel = self.selector
        if isinstance(sel, BandSelector):
            if sel.levels != self.levels:
                raise InvalidArgumentError(
                    f"selector has {sel.levels} levels but config has {self.levels}"
                )
            object.__setattr__(self, "selector", sel.mode)
        if isinstance(self.levels, bool) or int(self.levels) != self.levels or self.levels < 1:
            raise InvalidArgumentError(f"levels must be >= 1, got {self.levels}")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise InvalidArgumentError(f"alpha must be finite and > 0, got {self.alpha}")
        if not (math.isfinite(self.grad_epsilon) and self.grad_epsilon >= 0):
            raise InvalidArgumentError(f"grad_epsilon must be >= 0, got {self.grad_epsilon}")
        self.band_selector  # validates the mode

    @property
    def band_selector(self) -> BandSelector:
        return BandSelector(self.selector, self.levels)


@dataclass(frozen=True)
class LossValue:
    value: float
    per_band: dict = field(default_factory=dict)


def as_batch(images) -> np.ndarray:
    """Stack a sequence of images into an (n, H, W, C) float64 array."""
    if isinstance(images, np.ndarray) and images.ndim == 4:
        out = np.asarray(images, dtype=np.float64)
        if not np.all(np.isfinite(out)):
            raise InvalidArgumentError("batch contains non-finite samples")
        return out
    items = [as_image(x) for x in images]
    if not items:
        raise InvalidArgumentError("batch is empty")
    shape = items[0].shape
    for i, x in enumerate(items):
        if x.shape != shape:
            raise InvalidArgumentError(f"batch element {i} has shape {x.shape}, expected {shape}")
    return np.stack(items)


def _pair_batches(student, teacher):
    s = as_batch(student)
    t = as_batch(teacher)
    if s.shape[0] != t.shape[0]:
        raise InvalidArgumentError(f"batch sizes differ: {s.shape[0]} vs {t.shape[0]}")
    if s.shape != t.shape:
        raise InvalidArgumentError(f"image shapes differ: {s.shape[1:]} vs {t.shape[1:]}")
    return s, t


def _sign(d: np.ndarray, eps: float) -> np.ndarray:
    return np.where(np.abs(d) <= eps, 0.0, np.sign(d))


def naive_kd_loss(student_batch, teacher_batch) -> LossValue:
    """Image-level L1: mean over the batch of sum |teacher - student|."""
    s, t = _pair_batches(student_batch, teacher_batch)
    n = s.shape[0]
    v = float(np.sum(np.abs(t - s))) / n
    return LossValue(v, {PIXEL_BAND: v})


def naive_kd_gradient(student_batch, teacher_batch, grad_epsilon: float = 0.0) -> np.ndarray:
    s, t = _pair_batches(student_batch, teacher_batch)
    return _sign(s - t, grad_epsilon) / s.shape[0]


def _coefficient_diffs(s: np.ndarray, t: np.ndarray, levels: int):
    h, w = s.shape[1:3]
    if max_levels(h, w) < levels:
        raise InvalidArgumentError(f"{h}x{w} images are not divisible by 2**{levels}")
    # the transform is linear: band(t) - band(s) == band(t - s)
    return _pyramid_arrays(t - s, levels)


def _selected(low, details, selector: BandSelector):
    """Yield (BandId, array) for the selected bands, canonical order."""
    for b in selector.bands():
        if b.orientation == "LL":
            yield b, low
        else:
            yield b, details[b.level - 1][DETAIL_ORIENTATIONS.index(b.orientation)]


def wkd_loss(student_batch, teacher_batch, config: DistillConfig | None = None) -> LossValue:
    """Wavelet distillation loss over the configured bands (high bands by default)."""
    config = config or DistillConfig()
    s, t = _pair_batches(student_batch, teacher_batch)
    n = s.shape[0]
    low, details = _coefficient_diffs(s, t, config.levels)
    per_band = {b.name: float(np.sum(np.abs(a))) / n for b, a in _selected(low, details, config.band_selector)}
    return LossValue(math.fsum(per_band.values()), per_band)


def wkd_gradient(student_batch, teacher_batch, config: DistillConfig | None = None) -> np.ndarray:
    """Subgradient of ``wkd_loss`` with respect to each student image.

    Returned as an (n, H, W, C) array. The transform is orthonormal, so
    pulling the coefficient-space sign pattern back through the inverse
    transform gives the exact gradient wherever no difference sits in the
    zero zone ``|d| <= grad_epsilon``.
    """
    config = config or DistillConfig()
    s, t = _pair_batches(student_batch, teacher_batch)
    n = s.shape[0]
    low, details = _coefficient_diffs(s, t, config.levels)
    g_low = np.zeros_like(low)
    g_det = [tuple(np.zeros_like(b) for b in trip) for trip in details]
    eps = config.grad_epsilon
    for b, d in _selected(low, details, config.band_selector):
        if b.orientation == "LL":
            g_low = _sign(d, eps)
        else:
            trip = list(g_det[b.level - 1])
            trip[DETAIL_ORIENTATIONS.index(b.orientation)] = _sign(d, eps)
            g_det[b.level - 1] = tuple(trip)
    # d(loss)/d(student) = -(1/n) * adjoint(sign(teacher - student))
    return -_inverse_pyramid_arrays(g_low, g_det) / n


def overall_loss(task_loss: float, student_batch, teacher_batch, config: DistillConfig | None = None) -> float:
    """``task_loss + alpha * wkd_loss``."""
    config = config or DistillConfig()
    if not math.isfinite(task_loss):
        raise InvalidArgumentError(f"task_loss must be finite, got {task_loss}")
    return float(task_loss) + config.alpha * wkd_loss(student_batch, teacher_batch, config).value
