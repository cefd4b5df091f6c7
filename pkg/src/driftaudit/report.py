"""Drift report assembly and rendering.

A report collects the weighted per-(architecture, method) statistics,
ranks architectures by mean overlap IoU per method, flags ranking
reversals between methods, and quantifies per-architecture sensitivity
to the choice of attribution method.
"""

from __future__ import annotations

import csv
import io as _stdio
import json
import math
from dataclasses import dataclass, field
from typing import Iterable

from .cohort import ClassWeights, WeightedStat, aggregate
from .errors import IncompleteCoverage, SingleMethod, UnsupportedFormat
from .io import CohortManifest
from .maps import DEFAULT_THRESHOLD
from .metrics import METRIC_NAMES, DriftRecord

REPORT_SCHEMA_VERSION = 1

#: Human-readable column titles, in canonical order.
METRIC_TITLES = {
    "spatial_displacement": "Spatial Disp",
    "overlap_iou": "Overlap IoU",
    "pattern_correlation": "Pattern Corr",
    "concentration_change": "Conc Change",
}

FORMATS = ("json", "csv", "markdown")


@dataclass(frozen=True)
class ClassStat:
    """Unweighted per-class summary for one metric."""

    count: int
    mean: float | None
    std: float | None


@dataclass(frozen=True)
class MethodTable:
    """Weighted statistics for one (architecture, method) cell."""

    architecture: str
    method: str
    stats: dict[str, WeightedStat]
    per_class: dict[str, dict[str, ClassStat]]
    flag_counts: dict[str, int]


@dataclass(frozen=True)
class Reversal:
    """A method pair whose architecture rankings differ."""

    methods: tuple[str, str]
    positions: tuple[int, ...]  # 1-based rank positions that changed


@dataclass(frozen=True)
class DriftReport:
    threshold: float
    architectures: list[str]
    methods: list[str]
    classes: list[str]
    total_samples: int
    retained_samples: int
    tables: list[MethodTable]
    rankings: dict[str, list[str]]
    ties: dict[str, list[list[str]]]
    reversals: list[Reversal]
    cross_method_iou_delta: dict[str, float]

    @property
    def retention_pct(self) -> float:
        if self.total_samples == 0:
            return 0.0
        return 100.0 * self.retained_samples / self.total_samples

    def table(self, architecture: str, method: str) -> MethodTable:
        for t in self.tables:
            if t.architecture == architecture and t.method == method:
                return t
        raise KeyError((architecture, method))


def _per_class_stats(
    records: list[DriftRecord], class_names: list[str], class_of: dict[str, int]
) -> dict[str, dict[str, ClassStat]]:
    out: dict[str, dict[str, ClassStat]] = {}
    for idx, name in enumerate(class_names):
        per_metric: dict[str, ClassStat] = {}
        cls_records = [r for r in records if class_of[r.sample_id] == idx]
        for metric in METRIC_NAMES:
            values = [
                float(getattr(r, metric))
                for r in cls_records
                if getattr(r, metric) is not None
            ]
            if not values:
                per_metric[metric] = ClassStat(0, None, None)
                continue
            mean = sum(values) / len(values)
            var = sum((x - mean) ** 2 for x in values) / len(values)
            per_metric[metric] = ClassStat(len(values), mean, math.sqrt(max(var, 0.0)))
        out[name] = per_metric
    return out


def _iou_means(tables: list[MethodTable]) -> dict[tuple[str, str], float]:
    return {(t.architecture, t.method): t.stats["overlap_iou"].mean for t in tables}


def build_report(
    manifest: CohortManifest,
    records: Iterable[DriftRecord],
    weights: ClassWeights,
    *,
    threshold: float = DEFAULT_THRESHOLD,
    architectures: list[str] | None = None,
    methods: list[str] | None = None,
) -> DriftReport:
    """Aggregate records into the full report.

    ``architectures``/``methods`` restrict the report to a subset of the
    manifest's declared sets (the records must cover every selected pair).
    """
    architectures = list(architectures if architectures is not None else manifest.architectures)
    methods = list(methods if methods is not None else manifest.methods)
    records = list(records)
    class_of = manifest.class_index_of()
    class_names = manifest.class_names

    grouped: dict[tuple[str, str], list[DriftRecord]] = {}
    for record in records:
        grouped.setdefault((record.architecture, record.method), []).append(record)

    tables: list[MethodTable] = []
    for method in methods:
        for arch in architectures:
            cell = grouped.get((arch, method), [])
            if not cell:
                raise IncompleteCoverage(f"no records for ({arch!r}, {method!r})")
            stats = aggregate(cell, weights, class_of)
            flag_counts: dict[str, int] = {}
            for record in cell:
                for flag in record.flags:
                    flag_counts[flag] = flag_counts.get(flag, 0) + 1
            tables.append(
                MethodTable(
                    architecture=arch,
                    method=method,
                    stats=stats,
                    per_class=_per_class_stats(cell, class_names, class_of),
                    flag_counts=dict(sorted(flag_counts.items())),
                )
            )

    iou = _iou_means(tables)
    rankings: dict[str, list[str]] = {}
    ties: dict[str, list[list[str]]] = {}
    for method in methods:
        order = sorted(architectures, key=lambda a: (-iou[(a, method)], a))
        rankings[method] = order
        groups: dict[float, list[str]] = {}
        for arch in order:
            groups.setdefault(iou[(arch, method)], []).append(arch)
        tied = [group for group in groups.values() if len(group) > 1]
        if tied:
            ties[method] = tied

    reversals: list[Reversal] = []
    for i, m1 in enumerate(methods):
        for m2 in methods[i + 1 :]:
            if rankings[m1] != rankings[m2]:
                positions = tuple(
                    pos + 1
                    for pos, (a, b) in enumerate(zip(rankings[m1], rankings[m2]))
                    if a != b
                )
                reversals.append(Reversal(methods=(m1, m2), positions=positions))

    deltas: dict[str, float] = {}
    if len(methods) >= 2:
        for arch in architectures:
            deltas[arch] = max(
                abs(iou[(arch, m1)] - iou[(arch, m2)])
                for i, m1 in enumerate(methods)
                for m2 in methods[i + 1 :]
            )

    retained = {r.sample_id for r in records}
    return DriftReport(
        threshold=float(threshold),
        architectures=architectures,
        methods=methods,
        classes=class_names,
        total_samples=len(manifest.samples),
        retained_samples=len(retained),
        tables=tables,
        rankings=rankings,
        ties=ties,
        reversals=reversals,
        cross_method_iou_delta=deltas,
    )


def cross_method_sensitivity(report: DriftReport) -> dict[str, float]:
    """Max |mean IoU difference| over method pairs, per architecture."""
    if len(report.methods) < 2:
        raise SingleMethod("cross-method sensitivity needs at least two methods")
    iou = _iou_means(report.tables)
    return {
        arch: max(
            abs(iou[(arch, m1)] - iou[(arch, m2)])
            for i, m1 in enumerate(report.methods)
            for m2 in report.methods[i + 1 :]
        )
        for arch in report.architectures
    }


def _report_doc(report: DriftReport) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "threshold": report.threshold,
        "architectures": report.architectures,
        "methods": report.methods,
        "classes": report.classes,
        "cohort": {
            "total": report.total_samples,
            "retained": report.retained_samples,
            "retention_pct": report.retention_pct,
        },
        "tables": [
            {
                "architecture": t.architecture,
                "method": t.method,
                "metrics": {
                    name: {
                        "mean": stat.mean,
                        "std": stat.std,
                        "defined": stat.defined_count,
                        "undefined": stat.undefined_count,
                    }
                    for name, stat in t.stats.items()
                },
                "per_class": {
                    cls: {
                        metric: {"count": s.count, "mean": s.mean, "std": s.std}
                        for metric, s in per_metric.items()
                    }
                    for cls, per_metric in t.per_class.items()
                },
                "flag_counts": t.flag_counts,
            }
            for t in report.tables
        ],
        "rankings": report.rankings,
        "ties": report.ties,
        "reversals": [
            {"methods": list(r.methods), "positions": list(r.positions)}
            for r in report.reversals
        ],
        "cross_method_iou_delta": report.cross_method_iou_delta,
    }


def parse_report(text: str) -> DriftReport:
    """Inverse of ``render(report, "json")``."""
    doc = json.loads(text)
    tables = [
        MethodTable(
            architecture=t["architecture"],
            method=t["method"],
            stats={
                name: WeightedStat(
                    mean=m["mean"],
                    std=m["std"],
                    defined_count=m["defined"],
                    undefined_count=m["undefined"],
                )
                for name, m in t["metrics"].items()
            },
            per_class={
                cls: {
                    metric: ClassStat(s["count"], s["mean"], s["std"])
                    for metric, s in per_metric.items()
                }
                for cls, per_metric in t["per_class"].items()
            },
            flag_counts=t["flag_counts"],
        )
        for t in doc["tables"]
    ]
    return DriftReport(
        threshold=doc["threshold"],
        architectures=doc["architectures"],
        methods=doc["methods"],
        classes=doc["classes"],
        total_samples=doc["cohort"]["total"],
        retained_samples=doc["cohort"]["retained"],
        tables=tables,
        rankings=doc["rankings"],
        ties={m: [list(g) for g in groups] for m, groups in doc["ties"].items()},
        reversals=[
            Reversal(methods=tuple(r["methods"]), positions=tuple(r["positions"]))
            for r in doc["reversals"]
        ],
        cross_method_iou_delta=doc["cross_method_iou_delta"],
    )


def _fmt(stat: WeightedStat) -> str:
    return f"{stat.mean:.3f} ± {stat.std:.3f}"


def _render_markdown(report: DriftReport) -> str:
    lines = ["# Attribution drift audit", ""]
    lines.append(
        f"Cohort: {report.total_samples} samples, "
        f"{report.retained_samples} retained ({report.retention_pct:.1f}%), "
        f"salience threshold {report.threshold:g}."
    )
    lines.append("")
    lines.append("## Drift metrics (weighted mean ± std)")
    lines.append("")
    header = ["Method", "Architecture"] + [METRIC_TITLES[m] for m in METRIC_NAMES]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for method in report.methods:
        for arch in report.architectures:
            t = report.table(arch, method)
            cells = [method, arch] + [_fmt(t.stats[m]) for m in METRIC_NAMES]
            lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    lines.append("## Stability rankings (by mean overlap IoU)")
    lines.append("")
    iou = _iou_means(report.tables)
    for method in report.methods:
        ranked = ", ".join(
            f"{arch} ({iou[(arch, method)]:.3f})" for arch in report.rankings[method]
        )
        lines.append(f"- {method}: {ranked}")
        for group in report.ties.get(method, []):
            lines.append(f"  - tie broken lexicographically: {', '.join(group)}")
    lines.append("")
    lines.append("## Ranking reversals")
    lines.append("")
    if not report.reversals:
        lines.append("no ranking reversal detected")
    else:
        for rev in report.reversals:
            where = ", ".join(str(p) for p in rev.positions)
            lines.append(
                f"- {rev.methods[0]} vs {rev.methods[1]}: positions {where} differ"
            )
    if report.cross_method_iou_delta:
        lines.append("")
        lines.append("## Cross-method sensitivity (max |Δ mean IoU|)")
        lines.append("")
        for arch in report.architectures:
            lines.append(f"- {arch}: {report.cross_method_iou_delta[arch]:.3f}")
    undefined = {
        (t.architecture, t.method, m): s.undefined_count
        for t in report.tables
        for m, s in t.stats.items()
        if s.undefined_count
    }
    if undefined:
        lines.append("")
        lines.append("## Undefined metric counts")
        lines.append("")
        for (arch, method, metric), count in undefined.items():
            lines.append(f"- {method} / {arch} / {metric}: {count}")
    lines.append("")
    return "\n".join(lines)


def _render_csv(report: DriftReport) -> str:
    buf = _stdio.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["method", "architecture", "metric", "mean", "std", "defined", "undefined"]
    )
    for method in report.methods:
        for arch in report.architectures:
            t = report.table(arch, method)
            for metric in METRIC_NAMES:
                s = t.stats[metric]
                writer.writerow(
                    [
                        method,
                        arch,
                        metric,
                        repr(s.mean),
                        repr(s.std),
                        s.defined_count,
                        s.undefined_count,
                    ]
                )
    return buf.getvalue()


def render(report: DriftReport, format: str = "json") -> str:
    """Serialize a report deterministically to json, csv, or markdown."""
    if format == "json":
        return json.dumps(_report_doc(report), indent=2) + "\n"
    if format == "csv":
        return _render_csv(report)
    if format == "markdown":
        return _render_markdown(report)
    raise UnsupportedFormat(f"unknown format {format!r}; expected one of {FORMATS}")
