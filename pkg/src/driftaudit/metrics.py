"""Per-sample drift metrics between a checkpoint pair of attribution maps.

All four metrics compare the map extracted at the earlier checkpoint
("TL", transfer-learning plateau) with the one from the later checkpoint
("FT", fine-tuned). They are pure functions; ``drift`` bundles them into
one record per (sample, architecture, method).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, ThresholdMismatch
from .maps import (
    DEFAULT_THRESHOLD,
    AttributionMap,
    BinaryMask,
    binarize,
    center_of_mass,
)

FLAG_TL_DEGENERATE = "TL_DEGENERATE"
FLAG_FT_DEGENERATE = "FT_DEGENERATE"
FLAG_EMPTY_TL_MASK = "EMPTY_TL_MASK"
FLAG_EMPTY_FT_MASK = "EMPTY_FT_MASK"
FLAG_CONSTANT_CORR = "CONSTANT_CORR"

#: Metric names in canonical reporting order.
METRIC_NAMES = (
    "spatial_displacement",
    "overlap_iou",
    "pattern_correlation",
    "concentration_change",
)

_METRIC_RANGES = {
    "spatial_displacement": (0.0, 1.0),
    "overlap_iou": (0.0, 1.0),
    "pattern_correlation": (-1.0, 1.0),
    "concentration_change": (-1.0, 1.0),
}


@dataclass(frozen=True)
class DriftRecord:
    """The four drift metrics for one (sample, architecture, method).

    A metric is None when undefined for this pair; every None co-occurs
    with an explanatory flag.
    """

    sample_id: str
    architecture: str
    method: str
    spatial_displacement: float | None
    overlap_iou: float | None
    pattern_correlation: float | None
    concentration_change: float
    flags: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        for name, (lo, hi) in _METRIC_RANGES.items():
            value = getattr(self, name)
            if value is None:
                continue
            if not (math.isfinite(value) and lo <= value <= hi):
                raise ValueError(f"{name} out of range [{lo}, {hi}]: {value}")
        if self.concentration_change is None:
            raise ValueError("concentration_change is total and cannot be None")
        degenerate = {FLAG_TL_DEGENERATE, FLAG_FT_DEGENERATE}
        empty = {FLAG_EMPTY_TL_MASK, FLAG_EMPTY_FT_MASK}
        if self.spatial_displacement is None and not (self.flags & degenerate):
            raise ValueError("undefined displacement without a degeneracy flag")
        if self.overlap_iou is None and not (self.flags & empty):
            raise ValueError("undefined IoU without an empty-mask flag")
        if self.pattern_correlation is None and FLAG_CONSTANT_CORR not in self.flags:
            raise ValueError("undefined correlation without CONSTANT_CORR flag")


def _require_same_shape(tl: AttributionMap, ft: AttributionMap) -> None:
    if tl.shape != ft.shape:
        raise DimensionMismatch(f"map shapes differ: {tl.shape} vs {ft.shape}")


def spatial_displacement(tl: AttributionMap, ft: AttributionMap) -> float | None:
    """Distance between the two centroids over the grid diagonal sqrt(h^2+w^2).

    The normalizer strictly exceeds any achievable centroid distance, so the
    result lies in [0, 1). None when either map is degenerate.
    """
    _require_same_shape(tl, ft)
    if tl.degenerate or ft.degenerate:
        return None
    a = center_of_mass(tl)
    b = center_of_mass(ft)
    h, w = tl.shape
    return math.hypot(a.row - b.row, a.col - b.col) / math.hypot(h, w)


def overlap_iou(tl_mask: BinaryMask, ft_mask: BinaryMask) -> float | None:
    """Intersection-over-union of the two salient-region masks.

    None when both masks are empty; 0 when exactly one is (evidence
    vanished, so nothing overlaps).
    """
    if tl_mask.shape != ft_mask.shape:
        raise DimensionMismatch(
            f"mask shapes differ: {tl_mask.shape} vs {ft_mask.shape}"
        )
    if tl_mask.threshold != ft_mask.threshold:
        raise ThresholdMismatch(
            f"mask thresholds differ: {tl_mask.threshold} vs {ft_mask.threshold}"
        )
    union = int(np.logical_or(tl_mask.bits, ft_mask.bits).sum())
    if union == 0:
        return None
    inter = int(np.logical_and(tl_mask.bits, ft_mask.bits).sum())
    return inter / union


def pattern_correlation(tl: AttributionMap, ft: AttributionMap) -> float | None:
    """Pearson correlation of the flattened continuous maps.

    None when either map is constant (zero variance).
    """
    _require_same_shape(tl, ft)
    a = tl.values.ravel()
    b = ft.values.ravel()
    if np.all(a == a[0]) or np.all(b == b[0]):
        return None
    da = a - a.mean()
    db = b - b.mean()
    denom = math.sqrt(float(da @ da) * float(db @ db))
    if denom == 0.0:
        return None
    r = float(da @ db) / denom
    return min(max(r, -1.0), 1.0)


def normalized_entropy(map: AttributionMap) -> float:
    """Mass spread of a map in [0, 1]: 0 is a point mass, 1 is uniform.

    The map is read as a probability distribution over pixels. Degenerate
    maps take the defined value 1 (no commitment to any location); callers
    that must exclude them can key off the degeneracy flags.
    """
    if map.degenerate:
        return 1.0
    n = map.values.size
    if n == 1:
        return 0.0
    p = map.values / map.values.sum()
    p = p[p > 0.0]
    h = -float(np.sum(p * np.log(p))) / math.log(n)
    return min(max(h, 0.0), 1.0)


def concentration_change(tl: AttributionMap, ft: AttributionMap) -> float:
    """Entropy of FT minus entropy of TL; negative means attention concentrated."""
    _require_same_shape(tl, ft)
    return normalized_entropy(ft) - normalized_entropy(tl)


def drift(
    tl: AttributionMap,
    ft: AttributionMap,
    threshold: float = DEFAULT_THRESHOLD,
    *,
    sample_id: str = "",
    architecture: str = "",
    method: str = "",
) -> DriftRecord:
    """Compute all four metrics for one TL/FT pair, deriving masks internally."""
    _require_same_shape(tl, ft)
    tl_mask = binarize(tl, threshold)
    ft_mask = binarize(ft, threshold)

    flags = set()
    if tl.degenerate:
        flags.add(FLAG_TL_DEGENERATE)
    if ft.degenerate:
        flags.add(FLAG_FT_DEGENERATE)
    if tl_mask.pixel_count == 0:
        flags.add(FLAG_EMPTY_TL_MASK)
    if ft_mask.pixel_count == 0:
        flags.add(FLAG_EMPTY_FT_MASK)
    corr = pattern_correlation(tl, ft)
    if corr is None:
        flags.add(FLAG_CONSTANT_CORR)

    return DriftRecord(
        sample_id=sample_id,
        architecture=architecture,
        method=method,
        spatial_displacement=spatial_displacement(tl, ft),
        overlap_iou=overlap_iou(tl_mask, ft_mask),
        pattern_correlation=corr,
        concentration_change=concentration_change(tl, ft),
        flags=frozenset(flags),
    )
