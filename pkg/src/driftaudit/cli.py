"""Command-line interface: audit, validate, weights, synth.

Exit codes: 0 success, 1 configuration error, 2 data error,
3 ranking reversal detected under --fail-on-reversal.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .cohort import PHASE_FT, PHASE_TL, compute_weights, filter_true_positive
from .errors import DriftAuditError, EmptyCohort
from .io import CohortManifest, load_manifest, read_map
from .maps import DEFAULT_THRESHOLD
from .metrics import DriftRecord, drift
from .report import FORMATS, DriftReport, build_report, render
from .synth import generate_cohort

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_REVERSAL = 3


def _audit_sample(task) -> list[DriftRecord]:
    """Worker: compute drift records for one sample. Must stay picklable."""
    sample_id, pairs, threshold = task
    records = []
    for arch, method, tl_path, ft_path in pairs:
        records.append(
            drift(
                read_map(tl_path),
                read_map(ft_path),
                threshold,
                sample_id=sample_id,
                architecture=arch,
                method=method,
            )
        )
    return records


def run_audit(
    manifest: CohortManifest,
    *,
    threshold: float = DEFAULT_THRESHOLD,
    architectures: list[str] | None = None,
    methods: list[str] | None = None,
    weights_from_filtered: bool = False,
    workers: int = 1,
) -> DriftReport:
    """Full pipeline: true-positive filter, per-sample drift, weighted report.

    The true-positive filter always quantifies over the manifest's declared
    architecture set; ``architectures``/``methods`` only restrict which pairs
    are measured and reported, so filtered audits match filtered reports.
    """
    archs = list(architectures if architectures is not None else manifest.architectures)
    methods = list(methods if methods is not None else manifest.methods)
    unknown = [a for a in archs if a not in manifest.architectures]
    unknown += [m for m in methods if m not in manifest.methods]
    if unknown:
        raise ValueError(f"filters must be subsets of the manifest sets: {unknown}")

    retained = filter_true_positive(manifest)
    if not retained:
        raise EmptyCohort("true-positive filter retained no samples")

    if weights_from_filtered:
        counts = {c: n for c, n in manifest.sample_class_counts(retained).items() if n > 0}
    else:
        counts = manifest.class_counts()
    weights = compute_weights(counts)

    tasks = []
    for sample in manifest.samples:
        if sample.sample_id not in retained:
            continue
        pairs = [
            (
                arch,
                method,
                str(manifest.resolve(sample.map_refs[arch][method][PHASE_TL])),
                str(manifest.resolve(sample.map_refs[arch][method][PHASE_FT])),
            )
            for arch in archs
            for method in methods
        ]
        tasks.append((sample.sample_id, pairs, threshold))

    records: list[DriftRecord] = []
    if workers <= 1:
        for task in tasks:
            records.extend(_audit_sample(task))
    else:
        # Ordered merge keeps the output independent of scheduling.
        chunksize = max(1, len(tasks) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for result in pool.map(_audit_sample, tasks, chunksize=chunksize):
                records.extend(result)

    return build_report(
        manifest,
        records,
        weights,
        threshold=threshold,
        architectures=archs,
        methods=methods,
    )


class _Parser(argparse.ArgumentParser):
    """Argument errors are configuration errors (exit 1, not argparse's 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _split_csv(value: str) -> list[str]:
    return [part for part in (p.strip() for p in value.split(",")) if part]


def _parse_grid(value: str) -> tuple[int, int]:
    h, _, w = value.partition("x")
    return int(h), int(w)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="driftaudit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    audit = sub.add_parser("audit", help="run the drift audit over a cohort")
    audit.add_argument("--manifest", required=True, help="path to manifest.json")
    audit.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    audit.add_argument("--methods", type=_split_csv, default=None,
                       help="comma-separated subset of declared methods")
    audit.add_argument("--archs", type=_split_csv, default=None,
                       help="comma-separated subset of declared architectures")
    audit.add_argument("--out", default=None, help="output path (default: stdout)")
    audit.add_argument("--format", choices=FORMATS, default="json")
    audit.add_argument("--weights-from-filtered", action="store_true",
                       help="recompute class weights on the retained cohort")
    audit.add_argument("--fail-on-reversal", action="store_true",
                       help="exit 3 when rankings reverse between methods")
    audit.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    audit.set_defaults(func=cmd_audit)

    validate = sub.add_parser("validate", help="check a manifest and its map files")
    validate.add_argument("--manifest", required=True)
    validate.set_defaults(func=cmd_validate)

    weights = sub.add_parser("weights", help="print inverse-frequency class weights")
    weights.add_argument("--manifest", required=True)
    weights.set_defaults(func=cmd_weights)

    synth = sub.add_parser("synth", help="write a synthetic cohort with known drift")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--n", type=int, default=12, help="number of samples")
    synth.add_argument("--classes", type=_split_csv, default=["healthy", "affected"])
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--archs", type=_split_csv, default=["netA", "netB"])
    synth.add_argument("--methods", type=_split_csv, default=["methodA", "methodB"])
    synth.add_argument("--grid", type=_parse_grid, default=(32, 32),
                       help="map size as HxW, e.g. 32x32")
    synth.add_argument("--misclassified", type=float, default=0.2,
                       help="fraction of samples given one wrong prediction")
    synth.set_defaults(func=cmd_synth)

    return parser


def cmd_audit(args) -> int:
    if not 0.0 < args.threshold < 1.0:
        print(f"error: --threshold must lie in (0, 1), got {args.threshold}",
              file=sys.stderr)
        return EXIT_CONFIG
    if args.workers < 1:
        print(f"error: --workers must be >= 1, got {args.workers}", file=sys.stderr)
        return EXIT_CONFIG

    manifest = load_manifest(args.manifest)
    try:
        report = run_audit(
            manifest,
            threshold=args.threshold,
            architectures=args.archs,
            methods=args.methods,
            weights_from_filtered=args.weights_from_filtered,
            workers=args.workers,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    document = render(report, args.format)
    if args.out:
        Path(args.out).write_text(document, encoding="utf-8")
    else:
        sys.stdout.write(document)

    if args.fail_on_reversal and report.reversals:
        print("ranking reversal detected", file=sys.stderr)
        return EXIT_REVERSAL
    return EXIT_OK


def cmd_validate(args) -> int:
    manifest = load_manifest(args.manifest)
    n_maps = 0
    for sample in manifest.samples:
        for per_arch in sample.map_refs.values():
            for per_method in per_arch.values():
                for ref in per_method.values():
                    read_map(manifest.resolve(ref))
                    n_maps += 1
    print(
        f"manifest OK: {len(manifest.samples)} samples, "
        f"{len(manifest.architectures)} architectures, "
        f"{len(manifest.methods)} methods, {n_maps} map files"
    )
    return EXIT_OK


def cmd_weights(args) -> int:
    manifest = load_manifest(args.manifest, check_refs=False)
    weights = compute_weights(manifest.class_counts())
    width = max(len(c.name) for c in manifest.classes)
    print(f"{'class':<{width}}  {'count':>7}  weight")
    for idx, cls in enumerate(manifest.classes):
        print(f"{cls.name:<{width}}  {cls.test_count:>7}  {weights[idx]:.3f}")
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.n < 1:
        print(f"error: --n must be >= 1, got {args.n}", file=sys.stderr)
        return EXIT_CONFIG
    manifest, sidecar = generate_cohort(
        args.out,
        args.n,
        class_names=args.classes,
        seed=args.seed,
        architectures=args.archs,
        methods=args.methods,
        grid=args.grid,
        misclassified_rate=args.misclassified,
    )
    print(
        f"wrote {len(manifest.samples)} samples to {args.out} "
        f"(manifest.json, maps/, {Path(sidecar).name})"
    )
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DriftAuditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
