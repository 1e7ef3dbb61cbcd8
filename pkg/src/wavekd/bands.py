"""Band addressing and low/high frequency selection over a pyramid."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import InvalidArgumentError
from .wavelet import WaveletPyramid

ORIENTATIONS = ("LL", "LH", "HL", "HH")
DETAIL_ORIENTATIONS = ("LH", "HL", "HH")
MODES = ("low_only", "high_only", "both", "none")

_NAME_RE = re.compile(r"^(LL|LH|HL|HH)([1-9][0-9]*)$")


@dataclass(frozen=True)
class BandId:
    level: int
    orientation: str

    def __post_init__(self):
        if self.orientation not in ORIENTATIONS:
            raise InvalidArgumentError(f"unknown orientation {self.orientation!r}")
        if int(self.level) != self.level or self.level < 1:
            raise InvalidArgumentError(f"band level must be >= 1, got {self.level}")

    @property
    def name(self) -> str:
        return f"{self.orientation}{self.level}"

    @property
    def is_detail(self) -> bool:
        return self.orientation != "LL"

    @classmethod
    def parse(cls, name: str) -> "BandId":
        m = _NAME_RE.match(name)
        if not m:
            raise InvalidArgumentError(f"not a band name: {name!r}")
        return cls(int(m.group(2)), m.group(1))

    def __str__(self):
        return self.name


def canonical_bands(levels: int) -> tuple[BandId, ...]:
    """Every band of a ``levels``-deep pyramid, coarsest level first, LL leading."""
    out = [BandId(levels, "LL")]
    for k in range(levels, 0, -1):
        out.extend(BandId(k, o) for o in DETAIL_ORIENTATIONS)
    return tuple(out)


@dataclass(frozen=True)
class BandSelector:
    mode: str = "high_only"
    levels: int = 3

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidArgumentError(f"selector mode must be one of {MODES}, got {self.mode!r}")
        if int(self.levels) != self.levels or self.levels < 1:
            raise InvalidArgumentError(f"selector levels must be >= 1, got {self.levels}")

    def bands(self) -> tuple[BandId, ...]:
        if self.mode == "none":
            return ()
        if self.mode == "low_only":
            return (BandId(self.levels, "LL"),)
        everything = canonical_bands(self.levels)
        if self.mode == "high_only":
            return everything[1:]
        return everything


@dataclass(frozen=True)
class CoefficientSet:
    """Selected bands in canonical order."""

    entries: tuple  # of (BandId, ndarray)

    def __iter__(self) -> Iterator[tuple[BandId, np.ndarray]]:
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def band_ids(self) -> tuple[BandId, ...]:
        return tuple(b for b, _ in self.entries)

    def names(self) -> list[str]:
        return [b.name for b, _ in self.entries]

    def __getitem__(self, key):
        if isinstance(key, str):
            key = BandId.parse(key)
        for b, arr in self.entries:
            if b == key:
                return arr
        raise KeyError(key)

    def size(self) -> int:
        return int(sum(a.size for _, a in self.entries))

    def to_bytes(self) -> bytes:
        """Stable serialization: band name, shape, then little-endian float64 data."""
        parts = []
        for b, a in self.entries:
            parts.append(f"{b.name}:{'x'.join(map(str, a.shape))};".encode())
            parts.append(np.ascontiguousarray(a, dtype="<f8").tobytes())
        return b"".join(parts)


def band_array(pyramid: WaveletPyramid, band: BandId) -> np.ndarray:
    if band.level > pyramid.levels:
        raise InvalidArgumentError(f"band {band.name} is deeper than the pyramid ({pyramid.levels})")
    if band.orientation == "LL":
        if band.level != pyramid.levels:
            raise InvalidArgumentError(f"LL is only kept at level {pyramid.levels}, not {band.level}")
        return pyramid.low
    return pyramid.details[band.level - 1][DETAIL_ORIENTATIONS.index(band.orientation)]


def select_bands(pyramid: WaveletPyramid, selector: BandSelector) -> CoefficientSet:
    if selector.levels != pyramid.levels:
        raise InvalidArgumentError(
            f"selector expects {selector.levels} levels but pyramid has {pyramid.levels}"
        )
    # pyramid arrays are read-only, so sharing them is safe
    return CoefficientSet(tuple((b, band_array(pyramid, b)) for b in selector.bands()))


def coefficient_count(selector: BandSelector, image_dims) -> int:
    """Number of coefficients ``selector`` picks from an image of ``image_dims``.

    ``image_dims`` is ``(height, width)`` or ``(height, width, channels)``.
    """
    dims = tuple(int(d) for d in image_dims)
    if len(dims) == 2:
        dims = dims + (1,)
    if len(dims) != 3 or min(dims) < 1:
        raise InvalidArgumentError(f"bad image dimensions {image_dims!r}")
    h, w, c = dims
    block = 1 << selector.levels
    if h % block or w % block:
        raise InvalidArgumentError(
            f"{h}x{w} is not divisible by 2**{selector.levels}={block}"
        )
    total = 0
    for b in selector.bands():
        total += (h >> b.level) * (w >> b.level) * c
    return total
