"""On-disk formats: the ADM1 map container and the cohort manifest.

Map container layout (bit-exact, little-endian):

    bytes 0..3   magic "ADM1"
    bytes 4..7   height, unsigned 32-bit
    bytes 8..11  width, unsigned 32-bit
    bytes 12..   height*width IEEE-754 32-bit floats, row-major

Maps are stored post-normalization, so the reader re-validates the [0, 1]
range and recomputes the degenerate flag. The manifest is a single JSON
document with map paths relative to its own directory.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cohort import PHASE_FT, PHASE_TL, PHASES, SampleRecord
from .errors import (
    BadMagic,
    DanglingMapRef,
    DuplicateSampleId,
    InvalidDimensions,
    IoFailure,
    NonFiniteValue,
    NotNormalized,
    SchemaViolation,
    TruncatedPayload,
)
from .maps import AttributionMap

MAP_MAGIC = b"ADM1"
_HEADER = struct.Struct("<4sII")
MANIFEST_SCHEMA_VERSION = 1


def write_map(map: AttributionMap, path) -> None:
    """Serialize a normalized map; values are rounded to 32-bit floats."""
    if not map.normalized:
        raise NotNormalized("only normalized maps are written to disk")
    h, w = map.shape
    payload = map.values.astype("<f4").tobytes(order="C")
    try:
        Path(path).write_bytes(_HEADER.pack(MAP_MAGIC, h, w) + payload)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_map(path) -> AttributionMap:
    """Read and validate a map container; the degenerate flag is recomputed."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if data[:4] != MAP_MAGIC:
        raise BadMagic(f"{path}: expected magic {MAP_MAGIC!r}, got {data[:4]!r}")
    if len(data) < _HEADER.size:
        raise TruncatedPayload(f"{path}: file shorter than the 12-byte header")
    _, h, w = _HEADER.unpack_from(data)
    if h == 0 or w == 0:
        raise InvalidDimensions(f"{path}: header declares a {h}x{w} grid")
    expected = _HEADER.size + 4 * h * w
    if len(data) != expected:
        raise TruncatedPayload(
            f"{path}: expected {expected} bytes for a {h}x{w} grid, got {len(data)}"
        )
    values = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    values = values.reshape(h, w).astype(np.float64)
    if not np.isfinite(values).all():
        raise NonFiniteValue(f"{path}: payload contains NaN or Inf")
    if not values.any():
        return AttributionMap(values, normalized=True, degenerate=True)
    lo, hi = float(values.min()), float(values.max())
    if lo != 0.0 or hi != 1.0:
        raise NotNormalized(
            f"{path}: stored map must span [0, 1] exactly, got [{lo}, {hi}]"
        )
    return AttributionMap(values, normalized=True)


@dataclass(frozen=True)
class ClassInfo:
    name: str
    test_count: int


@dataclass(frozen=True)
class PhaseInfo:
    role: str
    epoch: int


@dataclass
class CohortManifest:
    """Validated sample registry plus the sets it quantifies over."""

    schema_version: int
    classes: list[ClassInfo]
    architectures: list[str]
    methods: list[str]
    phases: list[PhaseInfo]
    samples: list[SampleRecord]
    root: Path
    layers: dict[str, str] = field(default_factory=dict)

    @property
    def class_names(self) -> list[str]:
        return [c.name for c in self.classes]

    def class_counts(self) -> dict[int, int]:
        """Declared per-class test counts, keyed by class index."""
        return {i: c.test_count for i, c in enumerate(self.classes)}

    def sample_class_counts(self, sample_ids=None) -> dict[int, int]:
        """Counts of (optionally filtered) samples per class index."""
        counts: dict[int, int] = {}
        for sample in self.samples:
            if sample_ids is not None and sample.sample_id not in sample_ids:
                continue
            counts[sample.true_class] = counts.get(sample.true_class, 0) + 1
        return counts

    def class_index_of(self) -> dict[str, int]:
        return {s.sample_id: s.true_class for s in self.samples}

    def resolve(self, ref: str) -> Path:
        return self.root / ref


def _fail(location: str, message: str):
    raise SchemaViolation(message, location=location)


def _expect_object(value, location: str, required: set, optional: set = frozenset()):
    if not isinstance(value, dict):
        _fail(location, f"expected an object, got {type(value).__name__}")
    missing = required - value.keys()
    if missing:
        _fail(location, f"missing required field(s): {sorted(missing)}")
    unknown = value.keys() - required - optional
    if unknown:
        _fail(location, f"unknown field(s): {sorted(unknown)}")


def _expect_str(value, location: str) -> str:
    if not isinstance(value, str) or not value:
        _fail(location, f"expected a nonempty string, got {value!r}")
    return value


def _expect_int(value, location: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        _fail(location, f"expected an integer, got {value!r}")
    return value


def _expect_name_list(value, location: str) -> list[str]:
    if not isinstance(value, list) or not value:
        _fail(location, "expected a nonempty list")
    names = [_expect_str(v, f"{location}/{i}") for i, v in enumerate(value)]
    if len(set(names)) != len(names):
        _fail(location, "identifiers must be unique")
    return names


def load_manifest(path, *, check_refs: bool = True) -> CohortManifest:
    """Parse and fully validate a manifest document.

    ``check_refs`` eagerly verifies that every referenced map file exists;
    pass False to defer that to first read.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"not valid JSON: {exc}", location="") from exc

    _expect_object(
        doc,
        "",
        required={"schema_version", "classes", "architectures", "methods", "phases", "samples"},
        optional={"layers"},
    )
    version = _expect_int(doc["schema_version"], "/schema_version")
    if version != MANIFEST_SCHEMA_VERSION:
        _fail("/schema_version", f"unsupported schema version {version}")

    if not isinstance(doc["classes"], list) or not doc["classes"]:
        _fail("/classes", "expected a nonempty list")
    classes = []
    for i, entry in enumerate(doc["classes"]):
        loc = f"/classes/{i}"
        _expect_object(entry, loc, required={"name", "test_count"})
        name = _expect_str(entry["name"], f"{loc}/name")
        count = _expect_int(entry["test_count"], f"{loc}/test_count")
        if count <= 0:
            _fail(f"{loc}/test_count", f"expected a positive count, got {count}")
        classes.append(ClassInfo(name, count))
    if len({c.name for c in classes}) != len(classes):
        _fail("/classes", "class names must be unique")

    architectures = _expect_name_list(doc["architectures"], "/architectures")
    methods = _expect_name_list(doc["methods"], "/methods")

    if not isinstance(doc["phases"], list) or len(doc["phases"]) != 2:
        _fail("/phases", "expected exactly two phases")
    phases = []
    for i, entry in enumerate(doc["phases"]):
        loc = f"/phases/{i}"
        _expect_object(entry, loc, required={"role", "epoch"})
        role = _expect_str(entry["role"], f"{loc}/role")
        if role not in PHASES:
            _fail(f"{loc}/role", f"role must be one of {PHASES}, got {role!r}")
        phases.append(PhaseInfo(role, _expect_int(entry["epoch"], f"{loc}/epoch")))
    if {p.role for p in phases} != set(PHASES):
        _fail("/phases", f"roles must be exactly {PHASES}")
    if phases[0].epoch == phases[1].epoch:
        _fail("/phases", "phases must carry distinct epoch numbers")

    layers: dict[str, str] = {}
    if "layers" in doc:
        if not isinstance(doc["layers"], dict):
            _fail("/layers", "expected an object mapping architecture to layer name")
        for arch, layer in doc["layers"].items():
            if arch not in architectures:
                _fail(f"/layers/{arch}", "unknown architecture")
            layers[arch] = _expect_str(layer, f"/layers/{arch}")

    if not isinstance(doc["samples"], list):
        _fail("/samples", "expected a list")
    root = path.resolve().parent
    samples: list[SampleRecord] = []
    seen: set[str] = set()
    n_classes = len(classes)
    for i, entry in enumerate(doc["samples"]):
        loc = f"/samples/{i}"
        _expect_object(entry, loc, required={"id", "true_class", "predictions", "maps"})
        sample_id = _expect_str(entry["id"], f"{loc}/id")
        if sample_id in seen:
            raise DuplicateSampleId(f"{loc}/id: duplicate sample id {sample_id!r}")
        seen.add(sample_id)
        true_class = _expect_int(entry["true_class"], f"{loc}/true_class")
        if not 0 <= true_class < n_classes:
            _fail(f"{loc}/true_class", f"class index {true_class} out of range")

        preds_doc = entry["predictions"]
        _expect_object(preds_doc, f"{loc}/predictions", required=set(architectures))
        predictions: dict[str, dict[str, int]] = {}
        for arch in architectures:
            ploc = f"{loc}/predictions/{arch}"
            _expect_object(preds_doc[arch], ploc, required=set(PHASES))
            by_phase = {}
            for phase in PHASES:
                value = _expect_int(preds_doc[arch][phase], f"{ploc}/{phase}")
                if not 0 <= value < n_classes:
                    _fail(f"{ploc}/{phase}", f"class index {value} out of range")
                by_phase[phase] = value
            predictions[arch] = by_phase

        maps_doc = entry["maps"]
        _expect_object(maps_doc, f"{loc}/maps", required=set(architectures))
        map_refs: dict[str, dict[str, dict[str, str]]] = {}
        for arch in architectures:
            aloc = f"{loc}/maps/{arch}"
            _expect_object(maps_doc[arch], aloc, required=set(methods))
            per_method = {}
            for method in methods:
                mloc = f"{aloc}/{method}"
                _expect_object(maps_doc[arch][method], mloc, required=set(PHASES))
                per_phase = {}
                for phase in PHASES:
                    ref = _expect_str(maps_doc[arch][method][phase], f"{mloc}/{phase}")
                    if Path(ref).is_absolute():
                        _fail(f"{mloc}/{phase}", "map paths must be relative")
                    if check_refs and not (root / ref).is_file():
                        raise DanglingMapRef(f"{mloc}/{phase}: no such file: {ref}")
                    per_phase[phase] = ref
                per_method[method] = per_phase
            map_refs[arch] = per_method

        samples.append(SampleRecord(sample_id, true_class, predictions, map_refs))

    return CohortManifest(
        schema_version=version,
        classes=classes,
        architectures=architectures,
        methods=methods,
        phases=phases,
        samples=samples,
        root=root,
        layers=layers,
    )


def save_manifest(manifest: CohortManifest, path) -> None:
    """Write a manifest in the canonical schema, deterministically ordered."""
    doc = {
        "schema_version": manifest.schema_version,
        "classes": [{"name": c.name, "test_count": c.test_count} for c in manifest.classes],
        "architectures": list(manifest.architectures),
        "methods": list(manifest.methods),
        "phases": [{"role": p.role, "epoch": p.epoch} for p in manifest.phases],
        "samples": [
            {
                "id": s.sample_id,
                "true_class": s.true_class,
                "predictions": {
                    arch: {PHASE_TL: p[PHASE_TL], PHASE_FT: p[PHASE_FT]}
                    for arch, p in s.predictions.items()
                },
                "maps": {
                    arch: {
                        method: {PHASE_TL: m[PHASE_TL], PHASE_FT: m[PHASE_FT]}
                        for method, m in per_arch.items()
                    }
                    for arch, per_arch in s.map_refs.items()
                },
            }
            for s in manifest.samples
        ],
    }
    if manifest.layers:
        doc["layers"] = dict(manifest.layers)
    try:
        Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
