"""Reference-free auditing of attribution-map drift between checkpoints.

The toolkit compares saliency maps extracted from two training
checkpoints of the same model, quantifies how the supporting evidence
moved, and reports class-weighted stability statistics per architecture
and attribution method, including cross-method ranking reversals.
"""

from . import errors
from .cohort import (
    PHASE_FT,
    PHASE_TL,
    ClassWeights,
    SampleRecord,
    WeightedStat,
    aggregate,
    compute_weights,
    filter_true_positive,
)
from .cli import main, run_audit
from .io import (
    ClassInfo,
    CohortManifest,
    PhaseInfo,
    load_manifest,
    read_map,
    save_manifest,
    write_map,
)
from .maps import (
    DEFAULT_THRESHOLD,
    AttributionMap,
    BinaryMask,
    Centroid,
    binarize,
    center_of_mass,
    normalize,
)
from .metrics import (
    METRIC_NAMES,
    DriftRecord,
    concentration_change,
    drift,
    normalized_entropy,
    overlap_iou,
    pattern_correlation,
    spatial_displacement,
)
from .report import (
    DriftReport,
    MethodTable,
    Reversal,
    build_report,
    cross_method_sensitivity,
    parse_report,
    render,
)
from .synth import KINDS, SynthSpec, generate, generate_cohort, random_spec

__version__ = "0.1.0"

__all__ = [
    "AttributionMap",
    "BinaryMask",
    "Centroid",
    "ClassInfo",
    "ClassWeights",
    "CohortManifest",
    "DEFAULT_THRESHOLD",
    "DriftRecord",
    "DriftReport",
    "KINDS",
    "METRIC_NAMES",
    "MethodTable",
    "PHASE_FT",
    "PHASE_TL",
    "PhaseInfo",
    "Reversal",
    "SampleRecord",
    "SynthSpec",
    "WeightedStat",
    "aggregate",
    "binarize",
    "build_report",
    "center_of_mass",
    "compute_weights",
    "concentration_change",
    "cross_method_sensitivity",
    "drift",
    "errors",
    "filter_true_positive",
    "generate",
    "generate_cohort",
    "load_manifest",
    "main",
    "normalize",
    "normalized_entropy",
    "overlap_iou",
    "parse_report",
    "pattern_correlation",
    "random_spec",
    "read_map",
    "render",
    "run_audit",
    "save_manifest",
    "spatial_displacement",
    "write_map",
]
