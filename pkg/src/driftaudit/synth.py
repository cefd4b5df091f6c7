"""Synthetic map pairs whose drift values are known in closed form.

The generators are the ground-truth oracle for the metric suite: every
pair ships with expectations derived from integer pixel arithmetic or
exact translation, never from the code paths being audited. They also
back the demo cohorts used by the CLI.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cohort import PHASE_FT, PHASE_TL
from .errors import ClippedSupport, IoFailure
from .io import ClassInfo, CohortManifest, PhaseInfo, save_manifest, write_map
from .maps import AttributionMap, normalize
from .metrics import (
    FLAG_CONSTANT_CORR,
    FLAG_EMPTY_FT_MASK,
    FLAG_EMPTY_TL_MASK,
    FLAG_FT_DEGENERATE,
    FLAG_TL_DEGENERATE,
)
from .cohort import SampleRecord

KIND_IDENTICAL = "IDENTICAL"
KIND_TRANSLATED_BLOB = "TRANSLATED_BLOB"
KIND_MASK_OVERLAP = "MASK_OVERLAP"
KIND_MASS_SPREAD = "MASS_SPREAD"
KIND_DEGENERATE_PAIR = "DEGENERATE_PAIR"
KINDS = (
    KIND_IDENTICAL,
    KIND_TRANSLATED_BLOB,
    KIND_MASK_OVERLAP,
    KIND_MASS_SPREAD,
    KIND_DEGENERATE_PAIR,
)


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one TL/FT pair; ``params`` are kind-specific."""

    kind: str
    grid: tuple[int, int] = (32, 32)
    params: dict = field(default_factory=dict)
    seed: int = 0


def _random_field(rng: np.random.Generator, grid) -> AttributionMap:
    while True:
        m = normalize(rng.random(grid))
        if not m.degenerate:
            return m


def _indicator(grid, rect) -> AttributionMap:
    """Map that is 1 inside the half-open rectangle (r0, c0, r1, c1), else 0."""
    h, w = grid
    r0, c0, r1, c1 = rect
    if not (0 <= r0 < r1 <= h and 0 <= c0 < c1 <= w):
        raise ClippedSupport(f"rectangle {rect} does not fit a {h}x{w} grid")
    if (r1 - r0) * (c1 - c0) >= h * w:
        raise ClippedSupport("rectangle must leave background pixels")
    values = np.zeros((h, w))
    values[r0:r1, c0:c1] = 1.0
    return AttributionMap(values, normalized=True)


def _rect_area(rect) -> int:
    r0, c0, r1, c1 = rect
    return (r1 - r0) * (c1 - c0)


def _rect_intersection(a, b) -> int:
    rows = max(0, min(a[2], b[2]) - max(a[0], b[0]))
    cols = max(0, min(a[3], b[3]) - max(a[1], b[1]))
    return rows * cols


def _rect_center(rect) -> tuple[float, float]:
    r0, c0, r1, c1 = rect
    return ((r0 + r1 - 1) / 2.0, (c0 + c1 - 1) / 2.0)


def _indicator_correlation(n: int, area_a: int, area_b: int, inter: int) -> float:
    pa = area_a / n
    pb = area_b / n
    cov = inter / n - pa * pb
    return cov / math.sqrt(pa * (1.0 - pa) * pb * (1.0 - pb))


def _indicator_entropy_change(n: int, area_tl: int, area_ft: int) -> float:
    return (math.log(area_ft) - math.log(area_tl)) / math.log(n)


def _blob(grid, center, sigma: float, radius: int) -> AttributionMap:
    h, w = grid
    r, c = center
    if radius < 1:
        raise ClippedSupport(f"blob radius must be >= 1, got {radius}")
    if not (radius <= r <= h - 1 - radius and radius <= c <= w - 1 - radius):
        raise ClippedSupport(
            f"blob at {center} with radius {radius} leaves a {h}x{w} grid"
        )
    side = 2 * radius + 1
    if side >= h and side >= w:
        raise ClippedSupport("blob support must leave background pixels")
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    dist2 = offsets[:, None] ** 2 + offsets[None, :] ** 2
    kernel = np.exp(-dist2 / (2.0 * sigma * sigma))
    values = np.zeros((h, w))
    values[r - radius : r + radius + 1, c - radius : c + radius + 1] = kernel
    return AttributionMap(values, normalized=True)


def generate(spec: SynthSpec) -> tuple[AttributionMap, AttributionMap, dict]:
    """Build one TL/FT pair plus its closed-form expectations.

    The returned dict holds ``metrics`` (metric name -> expected value, with
    None meaning "expected undefined"; absent keys carry no expectation) and
    ``flags`` (the exact flag set the pair must produce).
    """
    h, w = spec.grid
    rng = np.random.default_rng(spec.seed)
    diag = math.hypot(h, w)
    kind = spec.kind
    p = spec.params

    if kind == KIND_IDENTICAL:
        tl = _random_field(rng, spec.grid)
        ft = AttributionMap(tl.values, normalized=True)
        expected = {
            "spatial_displacement": 0.0,
            "overlap_iou": 1.0,
            "pattern_correlation": 1.0,
            "concentration_change": 0.0,
        }
        return tl, ft, {"metrics": expected, "flags": []}

    if kind == KIND_TRANSLATED_BLOB:
        center = tuple(p["center"])
        sigma = float(p["sigma"])
        di, dj = p["offset"]
        radius = int(p.get("radius", math.ceil(3.0 * sigma)))
        tl = _blob(spec.grid, center, sigma, radius)
        ft = _blob(spec.grid, (center[0] + di, center[1] + dj), sigma, radius)
        expected = {
            "spatial_displacement": math.hypot(di, dj) / diag,
            "concentration_change": 0.0,
        }
        return tl, ft, {"metrics": expected, "flags": []}

    if kind == KIND_MASK_OVERLAP:
        rect_tl = tuple(p["rect_tl"])
        rect_ft = tuple(p["rect_ft"])
        tl = _indicator(spec.grid, rect_tl)
        ft = _indicator(spec.grid, rect_ft)
        n = h * w
        area_tl = _rect_area(rect_tl)
        area_ft = _rect_area(rect_ft)
        inter = _rect_intersection(rect_tl, rect_ft)
        union = area_tl + area_ft - inter
        (tr, tc), (fr, fc) = _rect_center(rect_tl), _rect_center(rect_ft)
        expected = {
            "spatial_displacement": math.hypot(tr - fr, tc - fc) / diag,
            "overlap_iou": inter / union,
            "pattern_correlation": _indicator_correlation(n, area_tl, area_ft, inter),
            "concentration_change": _indicator_entropy_change(n, area_tl, area_ft),
        }
        return tl, ft, {"metrics": expected, "flags": []}

    if kind == KIND_MASS_SPREAD:
        r, c = p["center"]
        hr_tl, hc_tl = p["tl_half"]
        hr_ft, hc_ft = p["ft_half"]
        rect_tl = (r - hr_tl, c - hc_tl, r + hr_tl + 1, c + hc_tl + 1)
        rect_ft = (r - hr_ft, c - hc_ft, r + hr_ft + 1, c + hc_ft + 1)
        tl = _indicator(spec.grid, rect_tl)
        ft = _indicator(spec.grid, rect_ft)
        n = h * w
        area_tl = _rect_area(rect_tl)
        area_ft = _rect_area(rect_ft)
        inter = _rect_intersection(rect_tl, rect_ft)
        union = area_tl + area_ft - inter
        expected = {
            "spatial_displacement": 0.0,
            "overlap_iou": inter / union,
            "pattern_correlation": _indicator_correlation(n, area_tl, area_ft, inter),
            "concentration_change": _indicator_entropy_change(n, area_tl, area_ft),
        }
        return tl, ft, {"metrics": expected, "flags": []}

    if kind == KIND_DEGENERATE_PAIR:
        side = p.get("side", "both")
        zero = AttributionMap(np.zeros(spec.grid), normalized=True, degenerate=True)
        if side == "both":
            metrics = {
                "spatial_displacement": None,
                "overlap_iou": None,
                "pattern_correlation": None,
                "concentration_change": 0.0,
            }
            flags = [
                FLAG_CONSTANT_CORR,
                FLAG_EMPTY_FT_MASK,
                FLAG_EMPTY_TL_MASK,
                FLAG_FT_DEGENERATE,
                FLAG_TL_DEGENERATE,
            ]
            return zero, AttributionMap(zero.values, normalized=True, degenerate=True), {
                "metrics": metrics,
                "flags": sorted(flags),
            }
        other = _random_field(rng, spec.grid)
        metrics = {
            "spatial_displacement": None,
            "overlap_iou": 0.0,
            "pattern_correlation": None,
        }
        if side == "tl":
            flags = sorted([FLAG_TL_DEGENERATE, FLAG_EMPTY_TL_MASK, FLAG_CONSTANT_CORR])
            return zero, other, {"metrics": metrics, "flags": flags}
        if side == "ft":
            flags = sorted([FLAG_FT_DEGENERATE, FLAG_EMPTY_FT_MASK, FLAG_CONSTANT_CORR])
            return other, zero, {"metrics": metrics, "flags": flags}
        raise ValueError(f"unknown degenerate side {side!r}")

    raise ValueError(f"unknown synthetic kind {kind!r}")


def random_spec(kind: str, grid, rng: np.random.Generator) -> SynthSpec:
    """Draw valid kind-specific parameters; the grid must be at least 12x12."""
    h, w = grid
    seed = int(rng.integers(2**31))
    if kind in (KIND_IDENTICAL, KIND_DEGENERATE_PAIR):
        params = {}
        if kind == KIND_DEGENERATE_PAIR:
            params = {"side": str(rng.choice(["both", "tl", "ft"]))}
        return SynthSpec(kind, (h, w), params, seed)

    if kind == KIND_TRANSLATED_BLOB:
        sigma = float(rng.uniform(0.7, 1.8))
        radius = min(math.ceil(3.0 * sigma), (min(h, w) - 3) // 2)
        lo_r, hi_r = radius, h - 1 - radius
        lo_c, hi_c = radius, w - 1 - radius
        r = int(rng.integers(lo_r, hi_r + 1))
        c = int(rng.integers(lo_c, hi_c + 1))
        di = int(rng.integers(lo_r - r, hi_r - r + 1))
        dj = int(rng.integers(lo_c - c, hi_c - c + 1))
        return SynthSpec(
            kind,
            (h, w),
            {"center": (r, c), "sigma": sigma, "offset": (di, dj), "radius": radius},
            seed,
        )

    if kind == KIND_MASK_OVERLAP:
        def rect():
            r0 = int(rng.integers(0, h - 1))
            c0 = int(rng.integers(0, w - 1))
            r1 = int(rng.integers(r0 + 1, min(h, r0 + h // 2) + 1))
            c1 = int(rng.integers(c0 + 1, min(w, c0 + w // 2) + 1))
            return (r0, c0, r1, c1)

        return SynthSpec(kind, (h, w), {"rect_tl": rect(), "rect_ft": rect()}, seed)

    if kind == KIND_MASS_SPREAD:
        max_half = (min(h, w) - 2) // 2
        hr_tl = int(rng.integers(0, max_half))
        hc_tl = int(rng.integers(0, max_half))
        hr_ft = int(rng.integers(0, max_half))
        hc_ft = int(rng.integers(0, max_half))
        half = max(hr_tl, hc_tl, hr_ft, hc_ft)
        r = int(rng.integers(half, h - half))
        c = int(rng.integers(half, w - half))
        return SynthSpec(
            kind,
            (h, w),
            {"center": (r, c), "tl_half": (hr_tl, hc_tl), "ft_half": (hr_ft, hc_ft)},
            seed,
        )

    raise ValueError(f"unknown synthetic kind {kind!r}")


#: Kind mix for synthetic cohorts; degenerate pairs stay rare so that every
#: (architecture, method) cell keeps defined values to aggregate.
_COHORT_KINDS = (
    KIND_IDENTICAL,
    KIND_TRANSLATED_BLOB,
    KIND_MASK_OVERLAP,
    KIND_MASS_SPREAD,
    KIND_DEGENERATE_PAIR,
)
_COHORT_KIND_WEIGHTS = (0.3, 0.25, 0.25, 0.15, 0.05)


def generate_cohort(
    out_dir,
    n: int,
    class_names=("healthy", "affected"),
    seed: int = 0,
    *,
    architectures=("netA", "netB"),
    methods=("methodA", "methodB"),
    grid=(32, 32),
    misclassified_rate: float = 0.2,
    epochs=(1, 2),
) -> tuple[CohortManifest, Path]:
    """Write a self-consistent synthetic cohort under ``out_dir``.

    Produces map files, a manifest, and an ``expected.json`` sidecar with the
    closed-form per-sample metrics plus the ids the true-positive filter must
    retain. A ``misclassified_rate`` fraction of samples gets one deliberately
    wrong prediction planted to exercise that filter.

    Returns the manifest and the sidecar path.
    """
    class_names = list(class_names)
    architectures = list(architectures)
    methods = list(methods)
    if n < len(class_names):
        raise ValueError(f"need at least one sample per class, got n={n}")
    if not 0.0 <= misclassified_rate < 1.0:
        raise ValueError(f"misclassified_rate must be in [0, 1), got {misclassified_rate}")

    out = Path(out_dir)
    rng = np.random.default_rng(seed)
    n_classes = len(class_names)

    planted = set()
    k = int(round(misclassified_rate * n)) if n_classes > 1 else 0
    if k:
        planted = {int(i) for i in rng.choice(n, size=k, replace=False)}

    samples: list[SampleRecord] = []
    sidecar_records = []
    retained_expected = []
    counts = [0] * n_classes

    for i in range(n):
        sample_id = f"s{i:04d}"
        true_class = i % n_classes
        counts[true_class] += 1

        predictions = {
            arch: {PHASE_TL: true_class, PHASE_FT: true_class} for arch in architectures
        }
        if i in planted:
            arch = architectures[int(rng.integers(len(architectures)))]
            phase = (PHASE_TL, PHASE_FT)[int(rng.integers(2))]
            wrong = (true_class + 1 + int(rng.integers(n_classes - 1))) % n_classes
            predictions[arch][phase] = wrong
        else:
            retained_expected.append(sample_id)

        map_refs: dict[str, dict[str, dict[str, str]]] = {}
        for arch in architectures:
            map_refs[arch] = {}
            for method in methods:
                kind = str(rng.choice(_COHORT_KINDS, p=_COHORT_KIND_WEIGHTS))
                spec = random_spec(kind, grid, rng)
                tl, ft, expected = generate(spec)
                refs = {}
                for phase, m in ((PHASE_TL, tl), (PHASE_FT, ft)):
                    ref = f"maps/{arch}/{method}/{phase}/{sample_id}.adm"
                    target = out / ref
                    target.parent.mkdir(parents=True, exist_ok=True)
                    write_map(m, target)
                    refs[phase] = ref
                map_refs[arch][method] = refs
                sidecar_records.append(
                    {
                        "sample_id": sample_id,
                        "architecture": arch,
                        "method": method,
                        "kind": kind,
                        "metrics": expected["metrics"],
                        "flags": expected["flags"],
                    }
                )

        samples.append(SampleRecord(sample_id, true_class, predictions, map_refs))

    manifest = CohortManifest(
        schema_version=1,
        classes=[ClassInfo(name, counts[i]) for i, name in enumerate(class_names)],
        architectures=architectures,
        methods=methods,
        phases=[PhaseInfo(PHASE_TL, epochs[0]), PhaseInfo(PHASE_FT, epochs[1])],
        samples=samples,
        root=out,
    )
    save_manifest(manifest, out / "manifest.json")

    sidecar = {
        "schema_version": 1,
        "seed": seed,
        "grid": list(grid),
        "retained_expected": retained_expected,
        "records": sidecar_records,
    }
    sidecar_path = out / "expected.json"
    try:
        sidecar_path.write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {sidecar_path}: {exc}") from exc
    return manifest, sidecar_path
