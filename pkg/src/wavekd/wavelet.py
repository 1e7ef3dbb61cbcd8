"""Orthonormal multi-level 2D discrete wavelet transform.

Images are float64 arrays of shape (height, width, channels). Each level
filters along rows first (the horizontal index) and then along columns,
so a band name reads (row filter, column filter):

    LL  low along rows,  low along columns   (approximation)
    LH  low along rows,  high along columns
    HL  high along rows, low along columns
    HH  high along rows, high along columns

For the 2x2 block [[a, b], [c, d]] the Haar bands are
LL=(a+b+c+d)/2, LH=(a+b-c-d)/2, HL=(a-b+c-d)/2, HH=(a-b-c+d)/2.

The core transform only accepts even sizes and is exactly orthogonal, so
the inverse doubles as the adjoint. ``decompose`` is the caller-facing
wrapper that reflection-pads sizes that do not divide by 2**levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError

__all__ = [
    "FilterPair",
    "HAAR",
    "Subbands",
    "WaveletPyramid",
    "as_image",
    "dwt1d",
    "idwt1d",
    "dwt2d_level",
    "idwt2d_level",
    "dwt_pyramid",
    "idwt_pyramid",
    "max_levels",
    "pad_for_levels",
    "decompose",
]


@dataclass(frozen=True)
class FilterPair:
    """Two-tap orthonormal analysis filters (low-pass, high-pass)."""

    name: str
    low: tuple[float, float]
    high: tuple[float, float]

    def __post_init__(self):
        m = np.array([self.low, self.high], dtype=np.float64)
        if not np.allclose(m @ m.T, np.eye(2), atol=1e-14):
            raise InvalidArgumentError(f"filter pair {self.name!r} is not orthonormal")


_R = 1.0 / math.sqrt(2.0)
HAAR = FilterPair("haar", (_R, _R), (_R, -_R))


def as_image(x) -> np.ndarray:
    """Coerce ``x`` to a finite float64 (H, W, C) array.

    2D input is treated as single-channel.
    """
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 2:
        a = a[:, :, np.newaxis]
    if a.ndim != 3:
        raise InvalidArgumentError(f"image must be 2D or 3D, got shape {a.shape}")
    if min(a.shape) < 1:
        raise InvalidArgumentError(f"image has an empty dimension: {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidArgumentError("image contains non-finite samples")
    return a


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


# -- 1D -----------------------------------------------------------------------


def _stride(ndim: int, axis: int, start: int):
    idx = [slice(None)] * ndim
    idx[axis] = slice(start, None, 2)
    return tuple(idx)


def _split(x: np.ndarray, axis: int, f: FilterPair):
    even = x[_stride(x.ndim, axis, 0)]
    odd = x[_stride(x.ndim, axis, 1)]
    lo = f.low[0] * even + f.low[1] * odd
    hi = f.high[0] * even + f.high[1] * odd
    return lo, hi


def _merge(lo: np.ndarray, hi: np.ndarray, axis: int, f: FilterPair):
    # transpose of the 2x2 analysis matrix
    even = f.low[0] * lo + f.high[0] * hi
    odd = f.low[1] * lo + f.high[1] * hi
    shape = list(lo.shape)
    shape[axis] *= 2
    out = np.empty(shape, dtype=np.float64)
    out[_stride(len(shape), axis, 0)] = even
    out[_stride(len(shape), axis, 1)] = odd
    return out


def dwt1d(signal: Sequence[float], wavelet: FilterPair = HAAR):
    """Single-level 1D transform of an even-length signal.

    Returns ``(approx, detail)``, each of length ``n // 2``.
    """
    s = np.asarray(signal, dtype=np.float64)
    if s.ndim != 1:
        raise InvalidArgumentError(f"signal must be one-dimensional, got shape {s.shape}")
    n = s.shape[0]
    if n == 0 or n % 2:
        raise InvalidArgumentError(f"signal length must be even and >= 2, got {n}")
    return _split(s, 0, wavelet)


def idwt1d(approx, detail, wavelet: FilterPair = HAAR) -> np.ndarray:
    a = np.asarray(approx, dtype=np.float64)
    d = np.asarray(detail, dtype=np.float64)
    if a.ndim != 1 or a.shape != d.shape or a.shape[0] == 0:
        raise InvalidArgumentError(
            f"approx and detail must be equal non-empty 1D sequences, got {a.shape} and {d.shape}"
        )
    return _merge(a, d, 0, wavelet)


# -- 2D, one level -------------------------------------------------------------

# Batched helpers work on (..., H, W, C) so the loss code can push a whole
# batch through in one call.
_ROW_AXIS = -2  # filtering "along rows" walks the column index
_COL_AXIS = -3


def _analysis(x: np.ndarray, f: FilterPair = HAAR):
    lo_r, hi_r = _split(x, _ROW_AXIS, f)
    ll, lh = _split(lo_r, _COL_AXIS, f)
    hl, hh = _split(hi_r, _COL_AXIS, f)
    return ll, lh, hl, hh


def _synthesis(ll, lh, hl, hh, f: FilterPair = HAAR):
    lo_r = _merge(ll, lh, _COL_AXIS, f)
    hi_r = _merge(hl, hh, _COL_AXIS, f)
    return _merge(lo_r, hi_r, _ROW_AXIS, f)


def _pyramid_arrays(x: np.ndarray, levels: int, f: FilterPair = HAAR):
    details = []
    low = x
    for _ in range(levels):
        low, lh, hl, hh = _analysis(low, f)
        details.append((lh, hl, hh))
    return low, details


def _inverse_pyramid_arrays(low, details, f: FilterPair = HAAR):
    x = low
    for lh, hl, hh in reversed(details):
        x = _synthesis(x, lh, hl, hh, f)
    return x


@dataclass(frozen=True)
class Subbands:
    """The four bands of one decomposition level."""

    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray

    def __post_init__(self):
        for name in ("ll", "lh", "hl", "hh"):
            object.__setattr__(self, name, _frozen(as_image(getattr(self, name))))
        shapes = {b.shape for b in (self.ll, self.lh, self.hl, self.hh)}
        if len(shapes) != 1:
            raise InvalidArgumentError(f"sub-band shapes differ: {sorted(shapes)}")

    def energy(self) -> float:
        return float(sum(np.sum(b * b) for b in (self.ll, self.lh, self.hl, self.hh)))


def dwt2d_level(image, wavelet: FilterPair = HAAR) -> Subbands:
    """One separable 2D level. Height and width must both be even."""
    x = as_image(image)
    h, w, _ = x.shape
    if h % 2 or w % 2:
        raise InvalidArgumentError(
            f"image dimensions must be even for a transform level, got {h}x{w}; pad first"
        )
    return Subbands(*_analysis(x, wavelet))


def idwt2d_level(subbands: Subbands, wavelet: FilterPair = HAAR) -> np.ndarray:
    bands = [as_image(b) for b in (subbands.ll, subbands.lh, subbands.hl, subbands.hh)]
    shapes = [b.shape for b in bands]
    if len(set(shapes)) != 1:
        raise InvalidArgumentError(f"sub-band shapes differ: {shapes}")
    return _synthesis(*bands, wavelet)


# -- multi-level ----------------------------------------------------------------


@dataclass(frozen=True)
class WaveletPyramid:
    """Multi-level decomposition.

    ``low`` is the coarsest approximation band (LL at level ``levels``);
    ``details[k - 1]`` holds the ``(lh, hl, hh)`` bands of level ``k``,
    so the finest level comes first.
    """

    levels: int
    low: np.ndarray
    details: tuple

    def __post_init__(self):
        if int(self.levels) != self.levels or self.levels < 1:
            raise InvalidArgumentError(f"levels must be a positive integer, got {self.levels}")
        if len(self.details) != self.levels:
            raise InvalidArgumentError(
                f"expected {self.levels} detail levels, got {len(self.details)}"
            )
        object.__setattr__(self, "low", _frozen(as_image(self.low)))
        details = []
        for k, triple in enumerate(self.details, start=1):
            if len(triple) != 3:
                raise InvalidArgumentError(f"level {k}: expected (lh, hl, hh) triple")
            details.append(tuple(_frozen(as_image(b)) for b in triple))
        object.__setattr__(self, "details", tuple(details))
        self._check_chain()

    def _check_chain(self):
        h, w, c = self.low.shape
        for k in range(self.levels, 0, -1):
            expect = (h << (self.levels - k), w << (self.levels - k), c)
            for b in self.details[k - 1]:
                if b.shape != expect:
                    raise InvalidArgumentError(
                        f"broken dimension chain at level {k}: band shape {b.shape}, expected {expect}"
                    )

    @property
    def shape(self) -> tuple[int, int, int]:
        """Shape of the image this pyramid reconstructs to."""
        h, w, c = self.low.shape
        return (h << self.levels, w << self.levels, c)

    def coefficient_count(self) -> int:
        return int(self.low.size + sum(b.size for t in self.details for b in t))

    def energy(self) -> float:
        e = float(np.sum(self.low * self.low))
        for t in self.details:
            e += float(sum(np.sum(b * b) for b in t))
        return e

    def without_details(self) -> "WaveletPyramid":
        """Same pyramid with every detail band zeroed."""
        zeros = tuple(tuple(np.zeros_like(b) for b in t) for t in self.details)
        return WaveletPyramid(self.levels, self.low, zeros)


def max_levels(height: int, width: int) -> int:
    """Largest L such that both dimensions divide by 2**L."""
    n = 0
    while height % 2 == 0 and width % 2 == 0 and height > 1 and width > 1:
        height //= 2
        width //= 2
        n += 1
    return n


def _check_levels(levels):
    if isinstance(levels, bool) or int(levels) != levels or levels < 1:
        raise InvalidArgumentError(f"levels must be a positive integer, got {levels!r}")
    return int(levels)


def dwt_pyramid(image, levels: int, wavelet: FilterPair = HAAR) -> WaveletPyramid:
    """Recursive decomposition of the LL band, ``levels`` times."""
    levels = _check_levels(levels)
    x = as_image(image)
    h, w, _ = x.shape
    feasible = max_levels(h, w)
    if levels > feasible:
        raise InvalidArgumentError(
            f"insufficient dimensions for {levels} levels: {h}x{w} supports at most {feasible}"
        )
    low, details = _pyramid_arrays(x, levels, wavelet)
    return WaveletPyramid(levels, low, tuple(details))


def idwt_pyramid(pyramid: WaveletPyramid, wavelet: FilterPair = HAAR) -> np.ndarray:
    pyramid._check_chain()
    return _inverse_pyramid_arrays(pyramid.low, pyramid.details, wavelet)


def pad_for_levels(image, levels: int) -> np.ndarray:
    """Reflection-pad the bottom/right edges up to a multiple of ``2**levels``.

    Raises if the image is smaller than ``2**levels`` in either direction;
    padding can fix divisibility but cannot invent a missing level.
    """
    levels = _check_levels(levels)
    x = as_image(image)
    h, w, _ = x.shape
    block = 1 << levels
    if h < block or w < block:
        feasible = max(0, min(h, w).bit_length() - 1)
        raise InvalidArgumentError(
            f"insufficient dimensions for {levels} levels: {h}x{w} supports at most {feasible}"
        )
    ph = -h % block
    pw = -w % block
    if ph == 0 and pw == 0:
        return x
    return np.pad(x, ((0, ph), (0, pw), (0, 0)), mode="reflect")


def decompose(image, levels: int, wavelet: FilterPair = HAAR) -> WaveletPyramid:
    """Pad as needed, then build the pyramid."""
    return dwt_pyramid(pad_for_levels(image, levels), levels, wavelet)
