"""Command-line entry point: ``oometrics {extract,analyze,correlate,evolve}``.

Exit codes: 0 success, 1 usage error, 2 input error, 3 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from . import __version__
from .code_model import GraphError, SourceTreeError, parse_source_tree, resolve_references
from .code_model.parser import java_files
from .longitudinal import (
    DEFAULT_DISRUPTION_THRESHOLD,
    ManifestError,
    VersionEntry,
    VersionManifest,
    aggregate_series,
    detect_disruptions,
    disruptions_to_csv,
    evolution_report,
    load_manifest,
    report_to_csv,
    report_to_dict,
    variability_ranges,
    variability_to_csv,
)
from .metrics import METRIC_COLUMNS, METRICS, ClassMetricsRecord, MetricOptions, compute_all
from .records import RecordFormatError, parse_csv, read_records, records_to_csv, records_to_json
from .stats import (
    DEFAULT_THRESHOLD,
    StatsError,
    correlation_matrix,
    dedupe,
    histogram,
    partitioned_matrices,
    summarize,
    summary_to_csv,
)

log = logging.getLogger("oometrics")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- output helpers ----------------------------------------------------

def write_atomic(path: Path, text: str) -> None:
    """Write ``text`` to a temporary sibling file, then rename it over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _metric_options(args: argparse.Namespace) -> MetricOptions:
    return MetricOptions(
        cbo_direction=args.cbo_direction,
        mpc_mode=args.mpc_mode,
        constructors_as_methods=args.constructors_as_methods,
        dac_signature_types=args.dac_signature_types,
    )


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {v}")
    return v


def _threshold(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if math.isnan(v) or v < 0:
        raise argparse.ArgumentTypeError(f"must be a non-negative number: {text}")
    return v


# -- extraction --------------------------------------------------------

def extract_records(src: Path, excludes: Sequence[str], version_id: str, opts: MetricOptions,
                    jobs: int = 1, lenient: bool = False, graph_out: Path | None = None) -> list[ClassMetricsRecord]:
    try:
        tree = parse_source_tree(src, excludes, version_id, jobs=jobs, lenient=lenient)
    except SourceTreeError as e:
        raise InputError(str(e)) from None
    if not tree.files:
        log.warning("no .java files found under %s", src)
    failed = [u.path for u in tree.units if u.parse_status == "failed"]
    if failed:
        log.warning("%d of %d files failed to parse and were skipped", len(failed), len(tree.units))
    try:
        graph = resolve_references(tree)
    except GraphError as e:
        raise InputError(f"{src}: {e}") from None
    if graph_out is not None:
        write_atomic(graph_out, json.dumps(graph.to_dict(), indent=1, sort_keys=True) + "\n")
    return compute_all(graph, opts)


def cmd_extract(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    records = extract_records(Path(args.src), args.exclude, args.version_id, _metric_options(args),
                              args.jobs, args.lenient, Path(args.graph_out) if args.graph_out else None)
    text = records_to_json(records) if args.format == "json" else records_to_csv(records)
    write_atomic(Path(args.out), text)
    log.info("extracted %d classes from %s in %.2fs", len(records), args.src, time.perf_counter() - t0)
    return EXIT_OK


# -- analysis ----------------------------------------------------------

def _load_inputs(paths: Sequence[str], use_dedupe: bool) -> list[ClassMetricsRecord]:
    missing = [p for p in paths if not Path(p).is_file()]
    if missing:
        raise InputError(f"input file not found: {missing[0]}")
    records = read_records([Path(p) for p in paths])
    if use_dedupe:
        before = len(records)
        records = dedupe(records)
        log.info("dedupe kept %d of %d rows", len(records), before)
    return records


def cmd_analyze(args: argparse.Namespace) -> int:
    records = _load_inputs(args.inputs, args.dedupe)
    if not records:
        raise InputError("no records in input")
    out = Path(args.out)
    summary = summarize(records)
    hists = {m: histogram(records, m, args.bins) for m in METRIC_COLUMNS}
    if args.format == "json":
        doc = summary.to_dict()
        doc["histograms"] = {
            m: {"bin_edges": list(h.bin_edges), "counts": list(h.counts)} for m, h in hists.items()
        }
        write_atomic(out / "summary.json", json.dumps(doc, indent=2) + "\n")
    else:
        write_atomic(out / "summary.csv", summary_to_csv(summary))
        for m, h in hists.items():
            write_atomic(out / "histograms" / f"{m}.csv", h.to_csv())
    log.info("summarized %d records into %s", len(records), out)
    return EXIT_OK


def cmd_correlate(args: argparse.Namespace) -> int:
    records = _load_inputs(args.inputs, args.dedupe)
    if len(records) < 2:
        raise InputError(f"correlation needs at least 2 records, got {len(records)}")
    if args.partition and len(records) < 4:
        raise InputError(f"quartile partition needs at least 4 records, got {len(records)}")
    matrices = {"all": correlation_matrix(records, METRIC_COLUMNS, args.threshold)}
    if args.partition:
        matrices.update(partitioned_matrices(records, METRICS, args.threshold, args.quantile))
    out = Path(args.out)
    if args.format == "json":
        doc = {label: m.to_dict() for label, m in matrices.items()}
        write_atomic(out / "correlations.json", json.dumps(doc, indent=2) + "\n")
    else:
        for label, m in matrices.items():
            write_atomic(out / f"matrix_{label}.csv", m.to_csv())
    strong = sum(1 for *_, s in matrices["all"].lower_triangle() if s)
    log.info("%d strong pairs at |rho| >= %g over %d records", strong, args.threshold, len(records))
    return EXIT_OK


# -- evolution ---------------------------------------------------------

def tree_digest(src: Path, excludes: Sequence[str]) -> str:
    """Content hash over the included ``.java`` files (paths and bytes)."""
    h = hashlib.sha256()
    for path, rel in java_files(src, excludes):
        h.update(rel.encode("utf-8") + b"\0")
        h.update(path.read_bytes())
        h.update(b"\0")
    return h.hexdigest()


def _cache_key(entry: VersionEntry, digest: str, excludes: Sequence[str], opts: MetricOptions, lenient: bool) -> str:
    h = hashlib.sha256()
    h.update(json.dumps([__version__, entry.version_id, digest, list(excludes), repr(opts), lenient]).encode())
    return h.hexdigest()[:32]


def _extract_version(payload: tuple) -> tuple[str, str, float]:
    """Worker body; returns (version_id, records CSV, seconds)."""
    vid, src, excludes, opts, lenient = payload
    t0 = time.perf_counter()
    records = extract_records(Path(src), excludes, vid, opts, 1, lenient)
    return vid, records_to_csv(records), time.perf_counter() - t0


def _records_from_csv(entry: VersionEntry, manifest: VersionManifest) -> list[ClassMetricsRecord]:
    path = manifest.resolve(entry.records_csv or "")
    if not path.is_file():
        raise InputError(f"records file not found for {entry.version_id}: {path}")
    rows = read_records([path])
    mine = [r for r in rows if r.version == entry.version_id]
    if not mine:
        # a single-version file with different labels: adopt the manifest's id
        mine = [ClassMetricsRecord(**{**r.__dict__, "version": entry.version_id}) for r in rows]
    return mine


def collect_series(manifest: VersionManifest, excludes: Sequence[str], opts: MetricOptions, jobs: int,
                   cache_dir: Path | None, lenient: bool = False) -> dict[str, list[ClassMetricsRecord]]:
    by_version: dict[str, list[ClassMetricsRecord]] = {}
    todo: list[tuple[VersionEntry, Path, Path | None]] = []
    for entry in manifest.versions:
        if entry.records_csv:
            by_version[entry.version_id] = _records_from_csv(entry, manifest)
            continue
        src = manifest.resolve(entry.source_path)
        if not src.is_dir():
            raise InputError(f"source directory for {entry.version_id} not found: {src}")
        cached = None
        if cache_dir is not None:
            key = _cache_key(entry, tree_digest(src, excludes), excludes, opts, lenient)
            cached = cache_dir / f"{key}.csv"
            if cached.is_file():
                log.info("cache hit for %s, skipping extraction", entry.version_id)
                by_version[entry.version_id] = parse_csv(cached.read_text(encoding="utf-8"), str(cached))
                continue
        todo.append((entry, src, cached))

    payloads = [(e.version_id, str(src), list(excludes), opts, lenient) for e, src, _ in todo]
    if jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_extract_version, payloads))
    else:
        results = [_extract_version(p) for p in payloads]
    for (entry, _, cached), (vid, text, secs) in zip(todo, results):
        log.info("extracted %s in %.2fs", vid, secs)
        by_version[vid] = parse_csv(text, vid)
        if cached is not None:
            write_atomic(cached, text)
    return by_version


def cmd_evolve(args: argparse.Namespace) -> int:
    try:
        manifest = load_manifest(Path(args.manifest))
    except FileNotFoundError:
        raise InputError(f"manifest not found: {args.manifest}") from None
    out = Path(args.out)
    cache_dir = None if args.no_cache else Path(args.cache_dir) if args.cache_dir else out / ".cache"
    series = collect_series(manifest, args.exclude, _metric_options(args), args.jobs, cache_dir, args.lenient)
    aggregates = aggregate_series(manifest, series)
    flags = detect_disruptions(aggregates, args.threshold)
    rows = evolution_report(aggregates, flags)

    maturity = args.maturity or manifest.default_maturity()
    ranges = variability_ranges(aggregates, maturity) if maturity else None

    all_records = [r for v in manifest.version_ids for r in series.get(v, [])]
    if args.format == "json":
        doc = report_to_dict(manifest.application, rows, flags, args.threshold, ranges, maturity)
        write_atomic(out / "evolution.json", json.dumps(doc, indent=2) + "\n")
        write_atomic(out / "records.json", records_to_json(all_records))
    else:
        write_atomic(out / "evolution.csv", report_to_csv(rows))
        write_atomic(out / "disruptions.csv", disruptions_to_csv(flags))
        if ranges is not None:
            write_atomic(out / "variability.csv", variability_to_csv(ranges))
        write_atomic(out / "records.csv", records_to_csv(all_records))
    for f in flags:
        log.info("disruption %s -> %s: %s", f.from_version, f.to_version,
                 ", ".join(f"{t.quantity} {t.relative_change:+.2f}" for t in f.triggers))
    return EXIT_OK


# -- argument parsing --------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="more diagnostics (repeatable)")
    common.add_argument("-q", "--quiet", action="store_true", help="errors only")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="output format (default: csv)")

    extraction = argparse.ArgumentParser(add_help=False)
    extraction.add_argument("--exclude", action="append", default=[], metavar="GLOB",
                            help="skip files or directories matching GLOB, relative to the source root (repeatable)")
    extraction.add_argument("--jobs", type=_positive_int, default=1, help="parallel workers")
    extraction.add_argument("--lenient", action="store_true",
                            help="keep classes from files with recoverable syntax errors")
    extraction.add_argument("--cbo-direction", choices=("both", "outgoing"), default="both")
    extraction.add_argument("--mpc-mode", choices=("sites", "distinct"), default="sites")
    extraction.add_argument("--constructors-as-methods", action="store_true",
                            help="count constructors in NOM, NAM, cohesion metrics and LOD")
    extraction.add_argument("--dac-signature-types", action="store_true",
                            help="count parameter and return types towards DAC")

    p = _Parser(prog="oometrics", description="Object-oriented class metrics for Java sources.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    e = sub.add_parser("extract", parents=[common, extraction], help="compute metrics for one source tree")
    e.add_argument("--src", required=True, help="root directory of .java files")
    e.add_argument("--out", required=True, help="output metrics file")
    e.add_argument("--version-id", default="", help="label stored in the version column")
    e.add_argument("--graph-out", help="also dump the resolved entity graph as JSON")
    e.set_defaults(func=cmd_extract)

    a = sub.add_parser("analyze", parents=[common], help="descriptive statistics and histograms")
    a.add_argument("inputs", nargs="+", help="metric CSV files, merged into one data set")
    a.add_argument("--out", required=True, help="output directory")
    a.add_argument("--bins", type=_positive_int, default=10, help="histogram bins (default: 10)")
    a.add_argument("--dedupe", action="store_true", help="drop repeated (class, values) rows")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("correlate", parents=[common], help="Spearman dependency matrices")
    c.add_argument("inputs", nargs="+", help="metric CSV files, merged into one data set")
    c.add_argument("--out", required=True, help="output directory")
    c.add_argument("--threshold", type=_threshold, default=DEFAULT_THRESHOLD,
                   help="|rho| marking a strong correlation (default: 0.8)")
    c.add_argument("--partition", action="store_true", help="also correlate within LOC quartile strata")
    c.add_argument("--quantile", choices=("linear", "nearest"), default="linear",
                   help="quartile estimator for --partition")
    c.add_argument("--dedupe", action="store_true", help="drop repeated (class, values) rows")
    c.set_defaults(func=cmd_correlate)

    v = sub.add_parser("evolve", parents=[common, extraction], help="cross-version evolution report")
    v.add_argument("--manifest", required=True, help="JSON version manifest")
    v.add_argument("--out", required=True, help="output directory")
    v.add_argument("--threshold", type=_threshold, default=DEFAULT_DISRUPTION_THRESHOLD,
                   help="relative change that flags a version pair (default: 0.20)")
    v.add_argument("--maturity", help="first mature version; earlier ones form the early range")
    v.add_argument("--cache-dir", help="extraction cache (default: OUT/.cache)")
    v.add_argument("--no-cache", action="store_true", help="always re-extract")
    v.set_defaults(func=cmd_evolve)
    return p


def _setup_logging(verbose: int, quiet: bool) -> None:
    level = logging.ERROR if quiet else logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    root = logging.getLogger("oometrics")
    root.handlers.clear()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("oometrics: %(levelname)s: %(message)s"))
    root.addHandler(handler)
    root.setLevel(level)
    root.propagate = False


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:  # usage errors, --help, --version
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    _setup_logging(args.verbose, args.quiet)
    try:
        return args.func(args)
    except (InputError, RecordFormatError, ManifestError, StatsError, OSError) as e:
        log.error("%s", e)
        return EXIT_INPUT
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
