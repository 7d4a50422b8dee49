"""Class-level metrics over a resolved :class:`CodeGraph`.

Every metric is a pure function ``metric(graph, cls, options)``.  The
definitional choices that vary between metric tools are gathered in
:class:`MetricOptions`; the defaults are the ones used throughout the
package.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from itertools import combinations
from typing import Callable

from .code_model import ClassEntity, CodeGraph, MethodEntity

# CSV column order; ``version`` and ``class`` precede these.
METRIC_COLUMNS = (
    "loc", "cbo", "dac", "dit", "ilcom", "lcom", "ld", "len", "lod",
    "mpc", "nam", "noc", "nom", "rfc", "tcc", "wmc",
)
# the sixteen metrics proper, without LOC
METRICS = tuple(c for c in METRIC_COLUMNS if c != "loc")
RATIONAL_METRICS = frozenset({"tcc", "ld", "lod"})


@dataclass(frozen=True)
class MetricOptions:
    cbo_direction: str = "both"  # "both" | "outgoing"
    cbo_instantiation: bool = True  # ``new D()`` couples to D
    mpc_mode: str = "sites"  # "sites" | "distinct"
    constructors_as_methods: bool = False  # count constructors in NOM, NAM, cohesion and LOD
    dac_signature_types: bool = False  # parameter and return types also count for DAC


DEFAULT_OPTIONS = MetricOptions()


@dataclass(frozen=True)
class ClassMetricsRecord:
    version: str
    class_name: str
    loc: int
    cbo: int
    dac: int
    dit: int
    ilcom: int
    lcom: int
    ld: float
    len: int
    lod: float
    mpc: int
    nam: int
    noc: int
    nom: int
    rfc: int
    tcc: float
    wmc: int

    def value(self, metric: str) -> float:
        return getattr(self, metric)

    def values(self) -> tuple:
        return tuple(getattr(self, m) for m in METRIC_COLUMNS)


RECORD_FIELDS = tuple(f.name for f in fields(ClassMetricsRecord))


# -- member selection --------------------------------------------------

def _all_members(graph: CodeGraph, c: ClassEntity) -> list[MethodEntity]:
    return graph.methods_of(c.qualified_name)


def local_methods(graph: CodeGraph, c: ClassEntity, opts: MetricOptions = DEFAULT_OPTIONS) -> list[MethodEntity]:
    """Methods counted by NOM and the cohesion metrics."""
    kinds = ("method", "constructor") if opts.constructors_as_methods else ("method",)
    return [m for m in _all_members(graph, c) if m.kind in kinds]


def _own_fields(graph: CodeGraph, c: ClassEntity) -> set:
    return {f.ref for f in graph.fields_of(c.qualified_name)}


# -- coupling ----------------------------------------------------------

def _uses(graph: CodeGraph, c: ClassEntity, opts: MetricOptions) -> set[str]:
    """Corpus classes other than ``c`` whose members ``c`` uses."""
    q = c.qualified_name
    out: set[str] = set()
    for m in _all_members(graph, c):
        out.update(t.owner for t in m.invoked_methods)
        out.update(f.owner for f in m.accessed_fields)
        if opts.cbo_instantiation:
            out.update(m.instantiated)
    return {d for d in out if d != q and graph.is_corpus(d)}


def _coupling_table(graph: CodeGraph, opts: MetricOptions) -> dict[str, set[str]]:
    cache = graph.__dict__.setdefault("_cbo_cache", {})
    if opts in cache:
        return cache[opts]
    table: dict[str, set[str]] = {c.qualified_name: set() for c in graph.corpus_classes()}
    for c in graph.corpus_classes():
        for d in _uses(graph, c, opts):
            table[c.qualified_name].add(d)
            if opts.cbo_direction == "both":
                table[d].add(c.qualified_name)
    cache[opts] = table
    return table


def cbo(graph: CodeGraph, c: ClassEntity, opts: MetricOptions = DEFAULT_OPTIONS) -> int:
    return len(_coupling_table(graph, opts).get(c.qualified_name, ()))


DAC_KINDS = frozenset({"field", "local", "new"})


def dac(graph: CodeGraph, c: ClassEntity, opts: MetricOptions = DEFAULT_OPTIONS) -> int:
    q = c.qualified_name
    kinds = DAC_KINDS | {"param", "return"} if opts.dac_signature_types else DAC_KINDS
    return len({
        t.target for t in graph.type_usage_edges
        if t.source == q and t.kind in kinds and t.target != q and graph.is_corpus(t.target)
    })


def mpc(graph: CodeGraph, c: ClassEntity, opts: MetricOptions = DEFAULT_OPTIONS) -> int:
    q = c.qualified_name
    sites = [
        t for m in _all_members(graph, c) for t in m.invoked_methods
        if t.owner != q and graph.is_corpus(t.owner)
    ]
    return len(set(sites)) if opts.mpc_mode == "distinct" else len(sites)


# -- inheritance -------------------------------------------------------

def _dit_table(graph: CodeGraph) -> dict[str, int]:
    cached = graph.__dict__.get("_dit_cache")
    if cached is not None:
        return cached
    graph.check_acyclic()
    depth: dict[str, int] = {}
    parents = graph.corpus_parents

    def walk(q: str) -> int:
        # iterative post-order, inheritance chains can be deep
        stack = [q]
        while stack:
            cur = stack[-1]
            pending = [p for p in parents.get(cur, ()) if p not in depth]
            if pending:
                stack.extend(pending)
                continue
            stack.pop()
            depth[cur] = max((depth[p] + 1 for p in parents.get(cur, ())), default=0)
        return depth[q]

    for c in graph.corpus_classes():
        if c.qualified_name not in depth:
            walk(c.qualified_name)
    graph.__dict__["_dit_cache"] = depth
    return depth


def dit(graph: CodeGraph, c: ClassEntity, opts: MetricOptions = DEFAULT_OPTIONS) -> int:
    return _dit_table(graph)[c.qualified_name]


def noc(graph: CodeGraph, c: ClassEntity, opts: MetricOptions = DEFAULT_OPTIONS) -> int:
    return len(graph.corpus_children.get(c.qualified_name, ()))


# -- cohesion ----------------------------------------------------------

def _own_accesses(graph: CodeGraph, c: ClassEntity, opts: MetricOptions) -> list[tuple[MethodEntity, frozenset]]:
    own = _own_fields(graph, c)
    return [(m, frozenset(f for f in m.accessed_fields if f in own)) for m in local_methods(graph, c, opts)]


def lcom(graph: CodeGraph, c: ClassEntity, opts: MetricOptions = DEFAULT_OPTIONS) -> int:
    p = q = 0
    for (_, a), (_, b) in combinations(_own_accesses(graph, c, opts), 2):
        if a & b:
            q += 1
        else:
            p += 1
    return p - q if p > q else 0


def ilcom(graph: CodeGraph, c: ClassEntity, opts: MetricOptions = DEFAULT_OPTIONS) -> int:
    items = _own_accesses(graph, c, opts)
    if not items:
        return 1
    index = {m.ref: i for i, (m, _) in enumerate(items)}
    parent = list(range(len(items)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        parent[find(i)] = find(j)

    by_field: dict = {}
    for i, (m, acc) in enumerate(items):
        for f in acc:
            if f in by_field:
                union(i, by_field[f])
            else:
                by_field[f] = i
        for t in m.invoked_methods:
            j = index.get(t)
            if j is not None:
                union(i, j)
    return len({find(i) for i in range(len(items))})


def tcc(graph: CodeGraph, c: ClassEntity, opts: MetricOptions = DEFAULT_OPTIONS) -> float:
    pub = [(m, a) for m, a in _own_accesses(graph, c, opts) if m.is_public]
    n = len(pub)
    if n < 2:
        return 0.0
    connected = sum(1 for (_, a), (_, b) in combinations(pub, 2) if a & b)
    return connected / (n * (n - 1) / 2)


def ld(graph: CodeGraph, c: ClassEntity, opts: MetricOptions = DEFAULT_OPTIONS) -> float:
    used = {f for m in _all_members(graph, c) for f in m.accessed_fields}
    if not used:
        return 0.0
    local_owners = {c.qualified_name, *graph.ancestors(c.qualified_name)}
    return sum(1 for f in used if f.owner in local_owners) / len(used)


# -- size and complexity -----------------------------------------------

def nom(graph: CodeGraph, c: ClassEntity, opts: MetricOptions = DEFAULT_OPTIONS) -> int:
    return len(local_methods(graph, c, opts))


def nam(graph: CodeGraph, c: ClassEntity, opts: MetricOptions = DEFAULT_OPTIONS) -> int:
    return nom(graph, c, opts) + len(graph.fields_of(c.qualified_name))


def rfc(graph: CodeGraph, c: ClassEntity, opts: MetricOptions = DEFAULT_OPTIONS) -> int:
    response = {m.ref for m in local_methods(graph, c, opts)}
    for m in _all_members(graph, c):
        response.update(m.invoked_methods)
    return len(response)


def wmc(graph: CodeGraph, c: ClassEntity, opts: MetricOptions = DEFAULT_OPTIONS) -> int:
    # field-initialiser placeholders are not declared code units
    return sum(
        m.cyclomatic_complexity for m in _all_members(graph, c)
        if m.kind in ("method", "constructor", "initializer")
    )


def loc(graph: CodeGraph, c: ClassEntity, opts: MetricOptions = DEFAULT_OPTIONS) -> int:
    return max(1, c.loc)


# -- documentation -----------------------------------------------------

def length(graph: CodeGraph, c: ClassEntity, opts: MetricOptions = DEFAULT_OPTIONS) -> int:
    return len(c.simple_name)


def lod(graph: CodeGraph, c: ClassEntity, opts: MetricOptions = DEFAULT_OPTIONS) -> float:
    methods = local_methods(graph, c, opts)
    expected = 1 + len(methods)
    present = int(c.has_class_comment) + sum(1 for m in methods if m.has_comment)
    return min(1.0, max(0.0, (expected - present) / expected))


METRIC_FUNCTIONS: dict[str, Callable[..., float]] = {
    "loc": loc, "cbo": cbo, "dac": dac, "dit": dit, "ilcom": ilcom, "lcom": lcom,
    "ld": ld, "len": length, "lod": lod, "mpc": mpc, "nam": nam, "noc": noc,
    "nom": nom, "rfc": rfc, "tcc": tcc, "wmc": wmc,
}


def compute_class(graph: CodeGraph, c: ClassEntity, opts: MetricOptions = DEFAULT_OPTIONS) -> ClassMetricsRecord:
    values = {name: fn(graph, c, opts) for name, fn in METRIC_FUNCTIONS.items()}
    return ClassMetricsRecord(version=graph.version_id, class_name=c.qualified_name, **values)


def compute_all(graph: CodeGraph, opts: MetricOptions = DEFAULT_OPTIONS) -> list[ClassMetricsRecord]:
    """One record per corpus class, sorted by qualified name."""
    return [compute_class(graph, c, opts) for c in graph.corpus_classes()]


def check_invariants(rec: ClassMetricsRecord, local_field_count: int | None = None,
                     bodied_methods: int | None = None) -> list[str]:
    """Return human-readable violations of the per-record invariants (empty when sound)."""
    bad: list[str] = []
    for m in ("tcc", "ld", "lod"):
        v = getattr(rec, m)
        if not 0.0 <= v <= 1.0:
            bad.append(f"{m}={v} outside [0,1]")
    for m in METRIC_COLUMNS:
        if m not in RATIONAL_METRICS and getattr(rec, m) < 0:
            bad.append(f"{m} negative")
    if rec.ilcom < 1:
        bad.append("ilcom < 1")
    if rec.loc < 1:
        bad.append("loc < 1")
    if rec.nam < rec.nom:
        bad.append("nam < nom")
    if rec.rfc < rec.nom:
        bad.append("rfc < nom")
    if rec.nom < 2 and rec.lcom != 0:
        bad.append("lcom nonzero with fewer than two methods")
    if local_field_count is not None and rec.nam != rec.nom + local_field_count:
        bad.append("nam != nom + fields")
    if bodied_methods is not None and rec.wmc < bodied_methods:
        bad.append("wmc below bodied method count")
    return [f"{rec.class_name}: {b}" for b in bad]
