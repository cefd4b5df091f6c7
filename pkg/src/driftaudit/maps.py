"""Attribution maps: normalization, thresholding, and centers of mass.

A map is a rectangular grid of evidence weights for one (sample,
architecture, method, phase) combination. Every downstream drift metric
assumes the [0, 1] min-max convention established here. Pixel coordinates
are 0-based, row-major, origin at the top-left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyGrid,
    NonFinite,
    NotNormalized,
    ThresholdOutOfRange,
    ZeroMass,
)

#: Default salience threshold applied when deriving binary masks.
DEFAULT_THRESHOLD = 0.2


@dataclass(frozen=True, eq=False)
class AttributionMap:
    """One 2D saliency grid.

    ``normalized`` marks values rescaled to [0, 1]; ``degenerate`` marks a
    map whose raw source was constant (stored as all zeros). Values are
    frozen after construction, so instances are safe to share across
    threads and processes.
    """

    values: np.ndarray
    normalized: bool = False
    degenerate: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise EmptyGrid(f"expected a 2D grid, got shape {values.shape}")
        if values.size == 0:
            raise EmptyGrid("map must contain at least one pixel")
        if not np.isfinite(values).all():
            raise NonFinite("map values must be finite")
        if self.degenerate and values.any():
            raise ValueError("degenerate maps must be all-zero")
        if self.normalized and not self.degenerate:
            lo, hi = float(values.min()), float(values.max())
            if lo != 0.0 or hi != 1.0:
                raise NotNormalized(
                    f"normalized map must span [0, 1] exactly, got [{lo}, {hi}]"
                )
        values = values.copy() if values is self.values else values
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Salient-region mask: strict exceedance of a threshold in (0, 1)."""

    bits: np.ndarray
    threshold: float

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool)
        if bits.ndim != 2 or bits.size == 0:
            raise EmptyGrid(f"expected a nonempty 2D mask, got shape {bits.shape}")
        if not 0.0 < self.threshold < 1.0:
            raise ThresholdOutOfRange(
                f"threshold must lie in (0, 1), got {self.threshold}"
            )
        bits = bits.copy() if bits is self.bits else bits
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    @property
    def pixel_count(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class Centroid:
    """Intensity-weighted center in pixel coordinates (row, col)."""

    row: float
    col: float

    def __post_init__(self):
        if not (math.isfinite(self.row) and math.isfinite(self.col)):
            raise ValueError(f"centroid must be finite, got {(self.row, self.col)}")


def normalize(raw) -> AttributionMap:
    """Min-max rescale a raw grid to [0, 1].

    A constant input carries no ranking information; it maps to an all-zero
    grid flagged ``degenerate`` so callers can apply their empty-evidence
    policy instead of hitting a division by zero.
    """
    grid = np.asarray(raw, dtype=np.float64)
    if grid.ndim != 2 or grid.size == 0:
        raise EmptyGrid(f"expected a nonempty 2D grid, got shape {grid.shape}")
    if not np.isfinite(grid).all():
        raise NonFinite("raw map contains NaN or Inf")
    lo = grid.min()
    hi = grid.max()
    if hi == lo:
        return AttributionMap(np.zeros_like(grid), normalized=True, degenerate=True)
    return AttributionMap((grid - lo) / (hi - lo), normalized=True)


def binarize(map: AttributionMap, threshold: float = DEFAULT_THRESHOLD) -> BinaryMask:
    """Mask of pixels strictly above ``threshold``; boundary values fall outside."""
    if not map.normalized:
        raise NotNormalized("binarize requires a normalized map")
    return BinaryMask(map.values > threshold, float(threshold))


def center_of_mass(map: AttributionMap) -> Centroid:
    """Intensity-weighted centroid of the continuous map, in pixel coordinates.

    Callers are expected to pass normalized maps; any grid with positive
    total mass is accepted.
    """
    total = float(map.values.sum())
    if map.degenerate or total <= 0.0:
        raise ZeroMass("center of mass is undefined for a zero-mass map")
    h, w = map.shape
    row = float(np.arange(h, dtype=np.float64) @ map.values.sum(axis=1)) / total
    col = float(np.arange(w, dtype=np.float64) @ map.values.sum(axis=0)) / total
    # Guard against 1-ulp overshoot of the index range.
    return Centroid(min(max(row, 0.0), h - 1.0), min(max(col, 0.0), w - 1.0))
