"""Haar wavelet band analysis and wavelet knowledge-distillation losses."""

__version__ = "0.1.0"

from .bands import BandId, BandSelector, CoefficientSet, canonical_bands, coefficient_count, select_bands
from .distill import DistillConfig, LossValue, naive_kd_loss, overall_loss, wkd_gradient, wkd_loss
from .errors import DecodeError, InvalidArgumentError, TrainingDivergedError
from .metrics import BandDistanceReport, band_distance, merge_reports
from .wavelet import (
    HAAR,
    Subbands,
    WaveletPyramid,
    decompose,
    dwt1d,
    dwt2d_level,
    dwt_pyramid,
    idwt2d_level,
    idwt_pyramid,
)
