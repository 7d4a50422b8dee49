"""Descriptive statistics, histograms, Spearman matrices and LOC-quartile stratification."""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata

from .metrics import METRIC_COLUMNS, METRICS, ClassMetricsRecord

PARTITIONS = ("below_q1", "interquartile", "above_q3")
DEFAULT_THRESHOLD = 0.8


class StatsError(ValueError):
    pass


# -- descriptive -------------------------------------------------------

@dataclass(frozen=True)
class MetricSummary:
    min: float
    mean: float
    max: float
    median: float
    modus: float


@dataclass(frozen=True)
class DescriptiveSummary:
    count: int
    metrics: dict[str, MetricSummary]

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "metrics": {
                name: {k: _num(getattr(s, k)) for k in ("min", "mean", "max", "median", "modus")}
                for name, s in self.metrics.items()
            },
        }


def _num(v: float) -> float | int | None:
    if isinstance(v, float) and math.isnan(v):
        return None
    if float(v).is_integer():
        return int(v)
    return float(v)


def modus(values: Sequence[float]) -> float:
    """Most frequent value; ties resolve to the smallest."""
    counts = Counter(values)
    best = max(counts.values())
    return min(v for v, c in counts.items() if c == best)


def summarize_values(values: Sequence[float]) -> MetricSummary:
    if len(values) == 0:
        raise StatsError("cannot summarize an empty sample")
    arr = np.asarray(values, dtype=float)
    return MetricSummary(
        min=float(arr.min()),
        mean=float(math.fsum(arr) / len(arr)),
        max=float(arr.max()),
        median=float(np.median(arr)),
        modus=float(modus(list(values))),
    )


def column(records: Sequence[ClassMetricsRecord], metric: str) -> list[float]:
    return [getattr(r, metric) for r in records]


def summarize(records: Sequence[ClassMetricsRecord], metrics: Sequence[str] = METRIC_COLUMNS) -> DescriptiveSummary:
    if not records:
        raise StatsError("cannot summarize an empty record set")
    return DescriptiveSummary(len(records), {m: summarize_values(column(records, m)) for m in metrics})


# -- histograms --------------------------------------------------------

@dataclass(frozen=True)
class Histogram:
    metric: str
    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_low", "bin_high", "count"])
        for lo, hi, n in zip(self.bin_edges, self.bin_edges[1:], self.counts):
            w.writerow([_fmt(lo), _fmt(hi), n])
        return buf.getvalue()


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else f"{v:.6f}"


def histogram_values(values: Sequence[float], bins: int | Sequence[float], metric: str = "") -> Histogram:
    if len(values) == 0:
        raise StatsError("cannot bin an empty sample")
    arr = np.asarray(values, dtype=float)
    if isinstance(bins, (int, np.integer)):
        if bins <= 0:
            raise StatsError(f"bin count must be positive, got {bins}")
        lo, hi = float(arr.min()), float(arr.max())
        if lo == hi:
            # degenerate range: one unit-wide bin per requested bin, all mass in the first
            edges = np.linspace(lo, lo + bins, bins + 1)
        else:
            edges = np.linspace(lo, hi, bins + 1)
    else:
        edges = np.asarray(bins, dtype=float)
        if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
            raise StatsError("explicit bin edges must be strictly ascending with at least two values")
    # numpy bins are right-open except the last, which is closed
    counts, _ = np.histogram(arr, bins=edges)
    return Histogram(metric, tuple(float(e) for e in edges), tuple(int(c) for c in counts))


def histogram(records: Sequence[ClassMetricsRecord], metric: str, bins: int | Sequence[float] = 10) -> Histogram:
    return histogram_values(column(records, metric), bins, metric)


# -- rank correlation --------------------------------------------------

def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    da = a - a.mean()
    db = b - b.mean()
    va = float(np.dot(da, da))
    vb = float(np.dot(db, db))
    if va == 0.0 or vb == 0.0:
        return math.nan
    r = float(np.dot(da, db)) / math.sqrt(va * vb)
    return max(-1.0, min(1.0, r))


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman's rho with average ranks for ties; NaN if either input is constant."""
    if len(x) != len(y):
        raise StatsError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise StatsError("spearman needs at least two observations")
    return _pearson(rankdata(x), rankdata(y))


@dataclass(frozen=True)
class CorrelationMatrix:
    metric_names: tuple[str, ...]
    rho: tuple[tuple[float, ...], ...]
    strong_threshold: float = DEFAULT_THRESHOLD
    partition_label: str = "all"
    n: int = 0

    def get(self, a: str, b: str) -> float:
        return self.rho[self.metric_names.index(a)][self.metric_names.index(b)]

    def is_strong(self, a: str, b: str) -> bool:
        v = self.get(a, b)
        return not math.isnan(v) and abs(v) >= self.strong_threshold

    def lower_triangle(self) -> list[tuple[str, str, float, bool]]:
        rows = []
        for i, a in enumerate(self.metric_names):
            for j in range(i):
                b = self.metric_names[j]
                rows.append((a, b, self.rho[i][j], self.is_strong(a, b)))
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric_a", "metric_b", "rho", "strong"])
        for a, b, r, s in self.lower_triangle():
            w.writerow([a, b, "nan" if math.isnan(r) else f"{r:.6f}", str(s).lower()])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "partition": self.partition_label,
            "n": self.n,
            "threshold": self.strong_threshold,
            "metrics": list(self.metric_names),
            "rho": {
                a: {b: _round(self.rho[i][j]) for j, b in enumerate(self.metric_names)}
                for i, a in enumerate(self.metric_names)
            },
        }


def _round(v: float) -> float | None:
    return None if math.isnan(v) else round(v, 6)


def correlation_matrix(records: Sequence[ClassMetricsRecord], metrics: Sequence[str] = METRIC_COLUMNS,
                       threshold: float = DEFAULT_THRESHOLD, label: str = "all") -> CorrelationMatrix:
    if len(records) < 2:
        raise StatsError("correlation needs at least two records")
    ranks = [rankdata(column(records, m)) for m in metrics]
    k = len(metrics)
    rho = [[math.nan] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1):
            r = _pearson(ranks[i], ranks[j])
            if i == j and not math.isnan(r):
                r = 1.0
            rho[i][j] = rho[j][i] = r
    return CorrelationMatrix(tuple(metrics), tuple(tuple(r) for r in rho), threshold, label, len(records))


# -- class-size stratification -----------------------------------------

_QUANTILE_METHODS = {"linear": "linear", "nearest": "inverted_cdf"}


def loc_quartiles(records: Sequence[ClassMetricsRecord], method: str = "linear") -> tuple[float, float]:
    if method not in _QUANTILE_METHODS:
        raise StatsError(f"unknown quantile method {method!r}")
    locs = np.asarray(column(records, "loc"), dtype=float)
    q1, q3 = np.quantile(locs, [0.25, 0.75], method=_QUANTILE_METHODS[method])
    return float(q1), float(q3)


@dataclass(frozen=True)
class Partition:
    q1: float
    q3: float
    below_q1: list[ClassMetricsRecord] = field(default_factory=list)
    interquartile: list[ClassMetricsRecord] = field(default_factory=list)
    above_q3: list[ClassMetricsRecord] = field(default_factory=list)

    def groups(self) -> dict[str, list[ClassMetricsRecord]]:
        return {p: getattr(self, p) for p in PARTITIONS}


def quartile_partition(records: Sequence[ClassMetricsRecord], method: str = "linear") -> Partition:
    if len(records) < 4:
        raise StatsError(f"quartile partition needs at least 4 records, got {len(records)}")
    q1, q3 = loc_quartiles(records, method)
    part = Partition(q1, q3)
    for r in records:
        if r.loc < q1:
            part.below_q1.append(r)
        elif r.loc > q3:
            part.above_q3.append(r)
        else:
            part.interquartile.append(r)
    return part


def partitioned_matrices(records: Sequence[ClassMetricsRecord], metrics: Sequence[str] = METRICS,
                         threshold: float = DEFAULT_THRESHOLD, method: str = "linear") -> dict[str, CorrelationMatrix]:
    """One matrix per LOC stratum.  LOC is not among the default columns."""
    out = {}
    for label, group in quartile_partition(records, method).groups().items():
        if len(group) < 2:
            k = len(metrics)
            nan = tuple(tuple(math.nan for _ in range(k)) for _ in range(k))
            out[label] = CorrelationMatrix(tuple(metrics), nan, threshold, label, len(group))
        else:
            out[label] = correlation_matrix(group, metrics, threshold, label)
    return out


# -- data preparation --------------------------------------------------

def dedupe(records: Iterable[ClassMetricsRecord]) -> list[ClassMetricsRecord]:
    """Keep the first row of every (class, metric values) combination.

    Unchanged classes recur in consecutive versions of one application;
    this collapses them to one observation.
    """
    seen: set = set()
    out = []
    for r in records:
        key = (r.class_name, r.values())
        if key not in seen:
            seen.add(key)
            out.append(r)
    return out


def summary_to_csv(summary: DescriptiveSummary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "count", "min", "mean", "max", "median", "modus"])
    for name, s in summary.metrics.items():
        w.writerow([name, summary.count, _fmt(s.min), f"{s.mean:.6f}", _fmt(s.max), _fmt(s.median), _fmt(s.modus)])
    return buf.getvalue()


def summary_to_json(summary: DescriptiveSummary) -> str:
    return json.dumps(summary.to_dict(), indent=2) + "\n"
