import math

import numpy as np
import pytest
from scipy import stats as scipy_stats

from driftaudit import (
    AttributionMap,
    binarize,
    concentration_change,
    drift,
    normalize,
    normalized_entropy,
    overlap_iou,
    pattern_correlation,
    spatial_displacement,
)
from driftaudit.errors import DimensionMismatch, ThresholdMismatch
from driftaudit.maps import BinaryMask
from driftaudit.metrics import (
    FLAG_CONSTANT_CORR,
    FLAG_EMPTY_FT_MASK,
    FLAG_EMPTY_TL_MASK,
    FLAG_FT_DEGENERATE,
    FLAG_TL_DEGENERATE,
)


def _point_mass(h, w, r, c):
    v = np.zeros((h, w))
    v[r, c] = 1.0
    return AttributionMap(v, normalized=True)


def _random_map(rng, shape=(8, 8)):
    return normalize(rng.random(shape))


def _mask(rows, threshold=0.2):
    return BinaryMask(np.array(rows, dtype=bool), threshold)


# spatial displacement -------------------------------------------------

def test_displacement_identical_maps_is_zero():
    rng = np.random.default_rng(0)
    m = _random_map(rng)
    assert spatial_displacement(m, m) == 0.0


def test_displacement_opposite_corners_4x4():
    tl = _point_mass(4, 4, 0, 0)
    ft = _point_mass(4, 4, 3, 3)
    assert spatial_displacement(tl, ft) == pytest.approx(0.75, abs=1e-12)


def test_displacement_undefined_for_degenerate_input():
    rng = np.random.default_rng(1)
    degenerate = normalize(np.ones((4, 4)))
    assert spatial_displacement(degenerate, _random_map(rng, (4, 4))) is None


def test_displacement_dimension_mismatch():
    rng = np.random.default_rng(2)
    with pytest.raises(DimensionMismatch):
        spatial_displacement(_random_map(rng, (4, 4)), _random_map(rng, (4, 5)))


def test_displacement_translation_matches_closed_form():
    rng = np.random.default_rng(3)
    for _ in range(50):
        h, w = 24, 20
        base = np.zeros((h, w))
        base[2:10, 2:8] = rng.random((8, 6)) + 0.05
        di, dj = int(rng.integers(0, 12)), int(rng.integers(0, 10))
        moved = np.roll(np.roll(base, di, axis=0), dj, axis=1)
        tl = normalize(base)
        ft = normalize(moved)
        want = math.hypot(di, dj) / math.hypot(h, w)
        assert spatial_displacement(tl, ft) == pytest.approx(want, abs=1e-9)
        assert abs(concentration_change(tl, ft)) < 1e-12


# overlap IoU ----------------------------------------------------------

def test_iou_identical_nonempty_masks():
    m = _mask([[True, False], [False, True]])
    assert overlap_iou(m, m) == 1.0


def test_iou_disjoint_masks():
    a = _mask([[True, False], [False, False]])
    b = _mask([[False, False], [False, True]])
    assert overlap_iou(a, b) == 0.0


def test_iou_offset_blocks_share_two_pixels():
    # Two 2x2 blocks in a 4x4 grid offset by one column: brute-force sets
    # give |inter| = 2, |union| = 6.
    a_bits = np.zeros((4, 4), dtype=bool)
    a_bits[1:3, 0:2] = True
    b_bits = np.zeros((4, 4), dtype=bool)
    b_bits[1:3, 1:3] = True
    a_set = {(r, c) for r, c in zip(*np.nonzero(a_bits))}
    b_set = {(r, c) for r, c in zip(*np.nonzero(b_bits))}
    assert (len(a_set & b_set), len(a_set | b_set)) == (2, 6)
    got = overlap_iou(_mask(a_bits), _mask(b_bits))
    assert got == len(a_set & b_set) / len(a_set | b_set)
    assert got == pytest.approx(1 / 3, abs=0)


def test_iou_matches_pixel_set_oracle_on_random_masks():
    rng = np.random.default_rng(22)
    for _ in range(300):
        h, w = int(rng.integers(1, 17)), int(rng.integers(1, 17))
        a_bits = rng.random((h, w)) > rng.uniform(0.2, 0.8)
        b_bits = rng.random((h, w)) > rng.uniform(0.2, 0.8)
        a_set = {(r, c) for r, c in zip(*np.nonzero(a_bits))}
        b_set = {(r, c) for r, c in zip(*np.nonzero(b_bits))}
        union = a_set | b_set
        want = None if not union else len(a_set & b_set) / len(union)
        assert overlap_iou(_mask(a_bits), _mask(b_bits)) == want


def test_iou_empty_mask_policy():
    empty = _mask(np.zeros((3, 3), dtype=bool))
    full = _mask(np.ones((3, 3), dtype=bool))
    assert overlap_iou(empty, empty) is None
    assert overlap_iou(empty, full) == 0.0
    assert overlap_iou(full, empty) == 0.0


def test_iou_threshold_mismatch():
    a = _mask([[True]], threshold=0.2)
    b = _mask([[True]], threshold=0.3)
    with pytest.raises(ThresholdMismatch):
        overlap_iou(a, b)


def test_iou_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        overlap_iou(_mask(np.ones((2, 2), dtype=bool)), _mask(np.ones((2, 3), dtype=bool)))


# pattern correlation --------------------------------------------------

def test_correlation_with_self_is_one():
    rng = np.random.default_rng(4)
    m = _random_map(rng)
    assert pattern_correlation(m, m) == pytest.approx(1.0, abs=1e-12)


def test_correlation_with_complement_is_minus_one():
    rng = np.random.default_rng(5)
    m = _random_map(rng)
    flipped = AttributionMap(1.0 - m.values, normalized=True)
    assert pattern_correlation(m, flipped) == pytest.approx(-1.0, abs=1e-12)


def test_correlation_undefined_for_constant_map():
    rng = np.random.default_rng(6)
    degenerate = normalize(np.zeros((4, 4)))
    assert pattern_correlation(degenerate, _random_map(rng, (4, 4))) is None


def test_correlation_matches_two_pass_reference():
    rng = np.random.default_rng(7)
    for _ in range(100):
        a = _random_map(rng, (12, 9))
        b = _random_map(rng, (12, 9))
        want = scipy_stats.pearsonr(a.values.ravel(), b.values.ravel()).statistic
        assert pattern_correlation(a, b) == pytest.approx(want, abs=1e-12)


# concentration change -------------------------------------------------

def test_concentration_identical_maps_is_zero():
    rng = np.random.default_rng(8)
    m = _random_map(rng)
    assert concentration_change(m, m) == 0.0


def test_concentration_extremes():
    # A constant raw map normalizes to the degenerate convention (entropy 1);
    # a single point mass has entropy 0.
    uniform = normalize(np.ones((5, 5)))
    point = _point_mass(5, 5, 2, 2)
    assert concentration_change(uniform, point) == -1.0
    assert concentration_change(point, uniform) == 1.0


def test_entropy_of_point_mass_and_degenerate():
    assert normalized_entropy(_point_mass(6, 6, 1, 4)) == 0.0
    assert normalized_entropy(normalize(np.full((6, 6), 2.0))) == 1.0


def test_entropy_of_flat_region_matches_log_ratio():
    v = np.zeros((8, 8))
    v[0:4, 0:4] = 1.0
    m = AttributionMap(v, normalized=True)
    assert normalized_entropy(m) == pytest.approx(math.log(16) / math.log(64), rel=1e-12)


# drift record assembly ------------------------------------------------

def test_drift_identity_fixed_point():
    rng = np.random.default_rng(9)
    m = _random_map(rng)
    rec = drift(m, m, sample_id="s", architecture="a", method="ph")
    assert rec.spatial_displacement == 0.0
    assert rec.overlap_iou == 1.0
    assert rec.pattern_correlation == pytest.approx(1.0, abs=1e-12)
    assert rec.concentration_change == 0.0
    assert rec.flags == frozenset()


def test_drift_opposite_point_masses():
    rec = drift(_point_mass(4, 4, 0, 0), _point_mass(4, 4, 3, 3), 0.2)
    assert rec.spatial_displacement == pytest.approx(0.75, abs=1e-12)
    assert rec.overlap_iou == 0.0
    assert rec.concentration_change == 0.0


def test_drift_degenerate_tl_policy():
    rng = np.random.default_rng(10)
    degenerate = normalize(np.ones((6, 6)))
    rec = drift(degenerate, _random_map(rng, (6, 6)))
    assert rec.spatial_displacement is None
    assert rec.overlap_iou == 0.0
    assert rec.pattern_correlation is None
    assert FLAG_TL_DEGENERATE in rec.flags
    assert FLAG_EMPTY_TL_MASK in rec.flags
    assert FLAG_CONSTANT_CORR in rec.flags


def test_drift_double_degenerate():
    degenerate = normalize(np.zeros((5, 5)))
    rec = drift(degenerate, degenerate)
    assert rec.overlap_iou is None
    assert rec.concentration_change == 0.0
    assert {FLAG_TL_DEGENERATE, FLAG_FT_DEGENERATE,
            FLAG_EMPTY_TL_MASK, FLAG_EMPTY_FT_MASK} <= rec.flags


# shared properties ----------------------------------------------------

def test_metric_symmetries_on_random_pairs():
    rng = np.random.default_rng(20)
    for _ in range(100):
        a = _random_map(rng, (7, 9))
        b = _random_map(rng, (7, 9))
        assert spatial_displacement(a, b) == spatial_displacement(b, a)
        ma, mb = binarize(a, 0.3), binarize(b, 0.3)
        assert overlap_iou(ma, mb) == overlap_iou(mb, ma)
        assert pattern_correlation(a, b) == pattern_correlation(b, a)
        assert concentration_change(a, b) == -concentration_change(b, a)


def test_metric_bounds_on_random_pairs():
    rng = np.random.default_rng(21)
    for _ in range(200):
        a = _random_map(rng, (6, 11))
        b = _random_map(rng, (6, 11))
        rec = drift(a, b, float(rng.uniform(0.05, 0.95)))
        assert 0.0 <= rec.spatial_displacement < 1.0
        assert 0.0 <= rec.overlap_iou <= 1.0
        assert -1.0 <= rec.pattern_correlation <= 1.0
        assert -1.0 <= rec.concentration_change <= 1.0
