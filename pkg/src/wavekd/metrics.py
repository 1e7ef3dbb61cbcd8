"""Per-band normalized L1 distance between paired image sets.

For each band b the report holds

    raw_l1      sum over pairs and coefficients of |band_b(g) - band_b(r)|
    normalizer  sum over pairs and coefficients of |band_b(r)|
    normalized  raw_l1 / (normalizer + epsilon)

with the reference set in the denominator. A band whose normalizer is not
above epsilon is flagged ``degenerate``: its normalized value is then just
raw_l1 / epsilon and is not comparable to other bands.

Totals are accumulated with ``math.fsum`` over per-pair terms, so a report
built from shards and merged is bit-identical to one built in a single pass.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .bands import BandId, canonical_bands
from .errors import InvalidArgumentError
from .wavelet import _pyramid_arrays, as_image, max_levels

DEFAULT_EPSILON = 1e-12
NORMALIZATION = "normalized = sum|band(generated) - band(reference)| / (sum|band(reference)| + epsilon)"
ORIENTATION_NOTE = "band name = (row filter, column filter); LH is low along rows, high along columns"
CSV_HEADER = ("band", "raw_l1", "normalizer", "normalized", "degenerate")


@dataclass(frozen=True)
class BandDistance:
    raw_l1: float
    normalizer: float
    normalized: float
    degenerate: bool


@dataclass(frozen=True)
class BandDistanceReport:
    levels: int
    epsilon: float
    image_count: int
    # per band, one (raw, normalizer) term per image pair, in pair order
    terms: dict = field(repr=False)

    @property
    def bands(self) -> tuple[BandId, ...]:
        return canonical_bands(self.levels)

    @property
    def per_band(self) -> dict[BandId, BandDistance]:
        out = {}
        for b in self.bands:
            raw_terms, norm_terms = self.terms[b]
            raw = math.fsum(raw_terms)
            norm = math.fsum(norm_terms)
            out[b] = BandDistance(raw, norm, raw / (norm + self.epsilon), norm <= self.epsilon)
        return out

    def __getitem__(self, key) -> BandDistance:
        if isinstance(key, str):
            key = BandId.parse(key)
        return self.per_band[key]

    def normalized(self, key) -> float:
        return self[key].normalized

    def group_normalized(self, bands: Iterable[BandId]) -> float:
        """Pooled normalized distance over several bands: sum(raw) / (sum(normalizer) + eps)."""
        raw, norm = [], []
        for b in bands:
            raw.extend(self.terms[b][0])
            norm.extend(self.terms[b][1])
        return math.fsum(raw) / (math.fsum(norm) + self.epsilon)

    def to_dict(self) -> dict:
        rows = []
        for b, d in self.per_band.items():
            rows.append(
                {
                    "name": b.name,
                    "raw_l1": d.raw_l1,
                    "normalizer": d.normalizer,
                    "normalized": d.normalized,
                    "degenerate": d.degenerate,
                }
            )
        return {
            "levels": self.levels,
            "epsilon": self.epsilon,
            "image_count": self.image_count,
            "normalization": NORMALIZATION,
            "orientation": ORIENTATION_NOTE,
            "bands": rows,
        }

    def to_json(self, **extra) -> str:
        d = self.to_dict()
        d.update(extra)
        return json.dumps(d, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for b, d in self.per_band.items():
            w.writerow([b.name, repr(d.raw_l1), repr(d.normalizer), repr(d.normalized),
                        "true" if d.degenerate else "false"])
        return buf.getvalue()


def _pair_terms(g: np.ndarray, r: np.ndarray, levels: int):
    """(raw, normalizer) per canonical band for one pair."""
    g_low, g_det = _pyramid_arrays(g, levels)
    r_low, r_det = _pyramid_arrays(r, levels)
    out = [(float(np.sum(np.abs(g_low - r_low))), float(np.sum(np.abs(r_low))))]
    for k in range(levels, 0, -1):
        for gb, rb in zip(g_det[k - 1], r_det[k - 1]):
            out.append((float(np.sum(np.abs(gb - rb))), float(np.sum(np.abs(rb)))))
    return out


def band_distance(
    generated: Sequence,
    reference: Sequence,
    levels: int = 3,
    epsilon: float = DEFAULT_EPSILON,
) -> BandDistanceReport:
    """Compare ``generated[i]`` against ``reference[i]`` band by band."""
    if len(generated) != len(reference):
        raise InvalidArgumentError(
            f"set sizes differ: {len(generated)} generated vs {len(reference)} reference "
            f"(first unpaired index {min(len(generated), len(reference))})"
        )
    if len(generated) == 0:
        raise InvalidArgumentError("image sets are empty")
    if not (epsilon >= 0 and math.isfinite(epsilon)):
        raise InvalidArgumentError(f"epsilon must be finite and >= 0, got {epsilon}")
    bands = canonical_bands(levels)
    raw_terms = [[] for _ in bands]
    norm_terms = [[] for _ in bands]
    for i, (g, r) in enumerate(zip(generated, reference)):
        try:
            g = as_image(g)
            r = as_image(r)
        except InvalidArgumentError as e:
            raise InvalidArgumentError(f"pair {i}: {e}") from None
        if g.shape != r.shape:
            raise InvalidArgumentError(f"pair {i}: shape mismatch {g.shape} vs {r.shape}")
        if max_levels(g.shape[0], g.shape[1]) < levels:
            raise InvalidArgumentError(
                f"pair {i}: {g.shape[0]}x{g.shape[1]} is not divisible by 2**{levels}"
            )
        for j, (raw, norm) in enumerate(_pair_terms(g, r, levels)):
            raw_terms[j].append(raw)
            norm_terms[j].append(norm)
    terms = {b: (tuple(raw_terms[j]), tuple(norm_terms[j])) for j, b in enumerate(bands)}
    return BandDistanceReport(levels, float(epsilon), len(generated), terms)


def merge_reports(reports: Sequence[BandDistanceReport]) -> BandDistanceReport:
    """Combine shard reports, left to right."""
    reports = list(reports)
    if not reports:
        raise InvalidArgumentError("empty report sequence")
    first = reports[0]
    for i, r in enumerate(reports[1:], start=1):
        if r.levels != first.levels or r.epsilon != first.epsilon:
            raise InvalidArgumentError(
                f"report {i} has levels={r.levels}, epsilon={r.epsilon}; "
                f"expected levels={first.levels}, epsilon={first.epsilon}"
            )
    terms = {}
    for b in first.bands:
        terms[b] = (
            tuple(t for r in reports for t in r.terms[b][0]),
            tuple(t for r in reports for t in r.terms[b][1]),
        )
    return BandDistanceReport(first.levels, first.epsilon, sum(r.image_count for r in reports), terms)
