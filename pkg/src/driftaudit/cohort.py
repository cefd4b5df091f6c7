"""Cohort handling: true-positive filtering, class weights, aggregation.

The audited cohort is restricted to samples every declared architecture
classifies correctly at both checkpoints, so metric statistics describe
how explanations move rather than how predictions change. Class imbalance
is countered with inverse-frequency weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Mapping

from .errors import EmptyCohort, MissingPrediction, ZeroCount
from .metrics import METRIC_NAMES, DriftRecord

if TYPE_CHECKING:
    from .io import CohortManifest

#: Checkpoint roles. TL is the earlier (transfer-learning) checkpoint,
#: FT the later (fine-tuned) one.
PHASE_TL = "TL"
PHASE_FT = "FT"
PHASES = (PHASE_TL, PHASE_FT)


@dataclass(frozen=True)
class SampleRecord:
    """Registry entry for one test image.

    ``predictions`` maps architecture -> phase role -> predicted class index;
    ``map_refs`` maps architecture -> method -> phase role -> relative path.
    """

    sample_id: str
    true_class: int
    predictions: dict[str, dict[str, int]]
    map_refs: dict[str, dict[str, dict[str, str]]]


@dataclass(frozen=True)
class ClassWeights:
    """Per-class weights proportional to 1/count, normalized to sum 1."""

    weights: dict[int, float]

    def __post_init__(self):
        if not self.weights:
            raise ZeroCount("no classes to weight")
        for cls, weight in self.weights.items():
            if not weight > 0.0:
                raise ValueError(f"class {cls}: weight must be positive, got {weight}")
        total = sum(self.weights.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1 within 1e-9, got {total}")

    def __getitem__(self, cls: int) -> float:
        return self.weights[cls]


@dataclass(frozen=True)
class WeightedStat:
    """Weighted mean and population std for one metric over a cohort."""

    mean: float
    std: float
    defined_count: int
    undefined_count: int


def compute_weights(class_counts: Mapping[int, int]) -> ClassWeights:
    """Inverse-frequency weights: w_c = (1/n_c) / sum_k (1/n_k)."""
    if not class_counts:
        raise ZeroCount("no class counts given")
    for cls, count in class_counts.items():
        if not isinstance(count, int) or count <= 0:
            raise ZeroCount(f"class {cls}: count must be a positive integer, got {count}")
    inverse = {cls: 1.0 / count for cls, count in class_counts.items()}
    total = sum(inverse.values())
    return ClassWeights({cls: inv / total for cls, inv in inverse.items()})


def filter_true_positive(manifest: "CohortManifest") -> set[str]:
    """Ids of samples correctly classified at both phases by every architecture."""
    retained: set[str] = set()
    for sample in manifest.samples:
        keep = True
        for arch in manifest.architectures:
            preds = sample.predictions.get(arch)
            if preds is None:
                raise MissingPrediction(
                    f"sample {sample.sample_id!r}: no predictions for {arch!r}"
                )
            for phase in PHASES:
                if phase not in preds:
                    raise MissingPrediction(
                        f"sample {sample.sample_id!r}: no {phase} prediction for {arch!r}"
                    )
            if (
                preds[PHASE_TL] != sample.true_class
                or preds[PHASE_FT] != sample.true_class
            ):
                keep = False
                break
        if keep:
            retained.add(sample.sample_id)
    return retained


def aggregate(
    records: Iterable[DriftRecord],
    weights: ClassWeights,
    class_of: Mapping[str, int],
) -> dict[str, WeightedStat]:
    """Class-weighted mean and std of each metric over a record list.

    Samples are averaged within their class first, then classes are combined
    by weight (renormalized over the classes actually present), so a class's
    contribution does not depend on how many samples it holds. Undefined
    values are excluded and counted. Std is the square root of the weighted
    population variance about the weighted mean.
    """
    records = list(records)
    stats: dict[str, WeightedStat] = {}
    for name in METRIC_NAMES:
        by_class: dict[int, list[float]] = {}
        undefined = 0
        for record in records:
            if record.sample_id not in class_of:
                raise KeyError(f"sample {record.sample_id!r} has no class assignment")
            value = getattr(record, name)
            if value is None:
                undefined += 1
                continue
            cls = class_of[record.sample_id]
            if cls not in weights.weights:
                raise KeyError(f"class {cls} has no weight")
            by_class.setdefault(cls, []).append(float(value))
        defined = sum(len(values) for values in by_class.values())
        if defined == 0:
            raise EmptyCohort(f"no defined values for metric {name!r}")
        present = sum(weights[cls] for cls in by_class)
        mean = sum(
            weights[cls] / present * (sum(values) / len(values))
            for cls, values in by_class.items()
        )
        variance = sum(
            weights[cls] / present / len(values) * sum((x - mean) ** 2 for x in values)
            for cls, values in by_class.items()
        )
        stats[name] = WeightedStat(
            mean=mean,
            std=math.sqrt(max(variance, 0.0)),
            defined_count=defined,
            undefined_count=undefined,
        )
    return stats
