"""Version series: per-version aggregates, early/mature variability and disruption flags."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .metrics import METRIC_COLUMNS, METRICS, ClassMetricsRecord

DEFAULT_DISRUPTION_THRESHOLD = 0.20

# release judged feature-complete for the applications studied in the reference data set
KNOWN_MATURITY = {
    "freemind": "1.0.0Alpha4",
    "jedit": "4.0pre4",
    "tuxguitar": "1.0rc1",
}


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class VersionEntry:
    version_id: str
    source_path: str = ""
    date: str | None = None
    records_csv: str | None = None  # precomputed metrics instead of sources


@dataclass(frozen=True)
class VersionManifest:
    application: str
    versions: tuple[VersionEntry, ...]
    base_dir: str = "."

    @property
    def version_ids(self) -> list[str]:
        return [v.version_id for v in self.versions]

    def resolve(self, rel: str) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def default_maturity(self) -> str | None:
        known = KNOWN_MATURITY.get(self.application.lower())
        return known if known in self.version_ids else None


def parse_manifest(data: Mapping, base_dir: str = ".") -> VersionManifest:
    if not isinstance(data, Mapping):
        raise ManifestError("manifest must be a JSON object")
    app = data.get("application", "")
    raw_versions = data.get("versions")
    if not isinstance(raw_versions, list) or not raw_versions:
        raise ManifestError("manifest needs a non-empty 'versions' list")
    entries = []
    seen: set[str] = set()
    for i, v in enumerate(raw_versions):
        if not isinstance(v, Mapping) or not v.get("version_id"):
            raise ManifestError(f"versions[{i}]: missing version_id")
        vid = str(v["version_id"])
        if vid in seen:
            raise ManifestError(f"versions[{i}]: duplicate version_id {vid!r}")
        seen.add(vid)
        src, rec = v.get("source_path"), v.get("records_csv")
        if not src and not rec:
            raise ManifestError(f"versions[{i}]: needs source_path or records_csv")
        when = v.get("date")
        if when is not None:
            _check_date(str(when), i)
        entries.append(VersionEntry(vid, str(src or ""), None if when is None else str(when),
                                    None if rec is None else str(rec)))
    return VersionManifest(str(app), tuple(entries), base_dir)


def _check_date(text: str, i: int) -> None:
    for parse in (date.fromisoformat, datetime.fromisoformat):
        try:
            parse(text)
            return
        except ValueError:
            continue
    raise ManifestError(f"versions[{i}]: date {text!r} is not ISO-8601")


def load_manifest(path: Path) -> VersionManifest:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ManifestError(f"{path}:{e.lineno}: invalid JSON: {e.msg}") from None
    return parse_manifest(data, str(path.parent))


# -- aggregation -------------------------------------------------------

@dataclass(frozen=True)
class VersionAggregate:
    version_id: str
    class_count: int
    total_loc: int
    means: dict[str, float]
    medians: dict[str, float]


def aggregate_version(version_id: str, records: Sequence[ClassMetricsRecord],
                      metrics: Sequence[str] = METRIC_COLUMNS) -> VersionAggregate:
    if records:
        means = {m: math.fsum(getattr(r, m) for r in records) / len(records) for m in metrics}
        medians = {m: float(np.median([getattr(r, m) for r in records])) for m in metrics}
    else:
        means = {m: math.nan for m in metrics}
        medians = dict(means)
    return VersionAggregate(version_id, len(records), int(sum(r.loc for r in records)), means, medians)


def aggregate_series(manifest: VersionManifest | Sequence[str],
                     records_by_version: Mapping[str, Sequence[ClassMetricsRecord]]) -> list[VersionAggregate]:
    """One aggregate per manifest version, in manifest order."""
    ids = manifest.version_ids if isinstance(manifest, VersionManifest) else list(manifest)
    return [aggregate_version(v, records_by_version.get(v, ())) for v in ids]


def group_by_version(records: Sequence[ClassMetricsRecord]) -> dict[str, list[ClassMetricsRecord]]:
    out: dict[str, list[ClassMetricsRecord]] = {}
    for r in records:
        out.setdefault(r.version, []).append(r)
    return out


# -- variability -------------------------------------------------------

@dataclass(frozen=True)
class VariabilityRange:
    early_min: float
    early_max: float
    mature_min: float
    mature_max: float


def _span(values: list[float]) -> tuple[float, float]:
    vals = [v for v in values if not math.isnan(v)]
    if not vals:
        return math.nan, math.nan
    return min(vals), max(vals)


def variability_ranges(aggregates: Sequence[VersionAggregate], maturity_version: str,
                       metrics: Sequence[str] = METRIC_COLUMNS) -> dict[str, VariabilityRange]:
    ids = [a.version_id for a in aggregates]
    if maturity_version not in ids:
        raise ManifestError(f"maturity version {maturity_version!r} is not in the series")
    cut = ids.index(maturity_version)
    early, mature = aggregates[:cut], aggregates[cut:]
    out = {}
    for m in metrics:
        e = _span([a.means[m] for a in early])
        t = _span([a.means[m] for a in mature])
        out[m] = VariabilityRange(e[0], e[1], t[0], t[1])
    return out


# -- disruptions -------------------------------------------------------

@dataclass(frozen=True)
class Trigger:
    quantity: str  # "class_count", "total_loc" or "<metric>_mean"
    old: float
    new: float
    relative_change: float


@dataclass(frozen=True)
class DisruptionFlag:
    from_version: str
    to_version: str
    triggers: tuple[Trigger, ...] = field(default_factory=tuple)


def relative_change(old: float, new: float) -> float:
    if old == 0:
        if new == 0:
            return 0.0
        return math.copysign(math.inf, new)
    return (new - old) / abs(old)


def _quantities(a: VersionAggregate, metrics: Sequence[str]) -> list[tuple[str, float]]:
    q = [("class_count", float(a.class_count)), ("total_loc", float(a.total_loc))]
    q.extend((f"{m}_mean", a.means[m]) for m in metrics if m in a.means)
    return q


def detect_disruptions(aggregates: Sequence[VersionAggregate], threshold: float = DEFAULT_DISRUPTION_THRESHOLD,
                       metrics: Sequence[str] = METRICS) -> list[DisruptionFlag]:
    """Flag consecutive pairs where some quantity moves by at least ``threshold`` relatively."""
    if threshold < 0 or math.isnan(threshold):
        raise ValueError("threshold must be non-negative")
    flags = []
    for prev, cur in zip(aggregates, aggregates[1:]):
        triggers = []
        for (name, old), (_, new) in zip(_quantities(prev, metrics), _quantities(cur, metrics)):
            if math.isnan(old) or math.isnan(new):
                continue
            rc = relative_change(old, new)
            # an infinite threshold disables flagging, even for growth from zero
            if rc != 0 and math.isfinite(threshold) and abs(rc) >= threshold:
                triggers.append(Trigger(name, old, new, rc))
        if triggers:
            flags.append(DisruptionFlag(prev.version_id, cur.version_id, tuple(triggers)))
    return flags


# -- reporting ---------------------------------------------------------

@dataclass(frozen=True)
class EvolutionRow:
    aggregate: VersionAggregate
    flagged: bool
    triggers: tuple[Trigger, ...]


def evolution_report(aggregates: Sequence[VersionAggregate], flags: Sequence[DisruptionFlag]) -> list[EvolutionRow]:
    """Per-version rows; a version is annotated when the pair ending at it was flagged."""
    by_target = {f.to_version: f for f in flags}
    rows = []
    for a in aggregates:
        f = by_target.get(a.version_id)
        rows.append(EvolutionRow(a, f is not None, f.triggers if f else ()))
    return rows


def _cell(v: float) -> str:
    return "nan" if math.isnan(v) else f"{v:.6f}"


def report_to_csv(rows: Sequence[EvolutionRow], metrics: Sequence[str] = METRIC_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["version", "class_count", "total_loc"]
    for m in metrics:
        header += [f"{m}_mean", f"{m}_median"]
    w.writerow(header + ["flagged"])
    for row in rows:
        a = row.aggregate
        cells = [a.version_id, a.class_count, a.total_loc]
        for m in metrics:
            cells += [_cell(a.means[m]), _cell(a.medians[m])]
        w.writerow(cells + [str(row.flagged).lower()])
    return buf.getvalue()


def _json_num(v: float) -> float | None:
    if math.isnan(v):
        return None
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"  # type: ignore[return-value]
    return round(v, 6)


def report_to_dict(application: str, rows: Sequence[EvolutionRow], flags: Sequence[DisruptionFlag],
                   threshold: float, ranges: Mapping[str, VariabilityRange] | None = None,
                   maturity: str | None = None) -> dict:
    out: dict = {
        "application": application,
        "threshold": threshold,
        "versions": [
            {
                "version": r.aggregate.version_id,
                "class_count": r.aggregate.class_count,
                "total_loc": r.aggregate.total_loc,
                "means": {m: _json_num(v) for m, v in r.aggregate.means.items()},
                "medians": {m: _json_num(v) for m, v in r.aggregate.medians.items()},
                "flagged": r.flagged,
            }
            for r in rows
        ],
        "disruptions": [
            {
                "from": f.from_version,
                "to": f.to_version,
                "triggers": [
                    {"quantity": t.quantity, "old": _json_num(t.old), "new": _json_num(t.new),
                     "relative_change": _json_num(t.relative_change)}
                    for t in f.triggers
                ],
            }
            for f in flags
        ],
    }
    if ranges is not None:
        out["maturity_version"] = maturity
        out["variability"] = {
            m: {k: _json_num(getattr(r, k)) for k in ("early_min", "early_max", "mature_min", "mature_max")}
            for m, r in ranges.items()
        }
    return out


def disruptions_to_csv(flags: Sequence[DisruptionFlag]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["from_version", "to_version", "quantity", "old", "new", "relative_change"])
    for f in flags:
        for t in f.triggers:
            w.writerow([f.from_version, f.to_version, t.quantity, _cell(t.old), _cell(t.new),
                        "inf" if math.isinf(t.relative_change) else f"{t.relative_change:.6f}"])
    return buf.getvalue()


def variability_to_csv(ranges: Mapping[str, VariabilityRange]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "early_min", "early_max", "mature_min", "mature_max"])
    for m, r in ranges.items():
        w.writerow([m, _cell(r.early_min), _cell(r.early_max), _cell(r.mature_min), _cell(r.mature_max)])
    return buf.getvalue()
