"""Entity graph for one analysed application version.

A :class:`CodeGraph` holds classes (corpus classes plus external stubs),
their methods and fields, and the relations the metrics consume.  Call and
field-access edges are derived from the method entities so the two views can
never disagree.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator

UNKNOWN_CLASS = "<unknown>"


@dataclass(frozen=True, order=True)
class MethodRef:
    owner: str
    signature: str

    def __str__(self) -> str:
        return f"{self.owner}::{self.signature}"


@dataclass(frozen=True, order=True)
class FieldRef:
    owner: str
    name: str

    def __str__(self) -> str:
        return f"{self.owner}.{self.name}"


@dataclass(frozen=True)
class SourceUnit:
    path: str
    version_id: str
    line_count: int
    parse_status: str  # "ok" | "partial" | "failed"
    message: str = ""


@dataclass(frozen=True)
class ClassEntity:
    qualified_name: str
    kind: str  # "class" | "interface" | "enum"
    simple_name: str
    superclass_ref: str | None = None
    interface_refs: tuple[str, ...] = ()
    is_external: bool = False
    has_class_comment: bool = False
    body_start_line: int = 0
    body_end_line: int = 0
    loc: int = 0
    package: str = ""
    outer: str | None = None
    source_path: str = ""
    is_anonymous: bool = False


@dataclass(frozen=True)
class MethodEntity:
    owner: str
    name: str
    signature: str
    arity: int
    # "method" | "constructor" | "initializer" (explicit init blocks) |
    # "field-init" (only field initialiser expressions)
    kind: str = "method"
    is_public: bool = False
    is_static: bool = False
    has_body: bool = True
    has_comment: bool = False
    cyclomatic_complexity: int = 1
    accessed_fields: frozenset[FieldRef] = frozenset()
    invoked_methods: tuple[MethodRef, ...] = ()
    # classes whose constructors this body calls via ``new``
    instantiated: frozenset[str] = frozenset()
    return_type: str | None = None
    line: int = 0

    @property
    def ref(self) -> MethodRef:
        return MethodRef(self.owner, self.signature)

    @property
    def is_constructor(self) -> bool:
        return self.kind == "constructor"

    @property
    def is_synthetic(self) -> bool:
        return self.kind in ("initializer", "field-init")


@dataclass(frozen=True)
class FieldEntity:
    owner: str
    name: str
    is_public: bool = False
    is_static: bool = False
    declared_type_ref: str | None = None

    @property
    def ref(self) -> FieldRef:
        return FieldRef(self.owner, self.name)


@dataclass(frozen=True, order=True)
class TypeUse:
    source: str
    target: str
    kind: str  # "field" | "local" | "new"


@dataclass(frozen=True, order=True)
class InheritanceEdge:
    child: str
    parent: str
    kind: str  # "extends" | "implements"


class GraphError(ValueError):
    """Raised when a graph violates a structural invariant (e.g. inheritance cycle)."""


@dataclass
class CodeGraph:
    version_id: str
    classes: dict[str, ClassEntity]
    methods: dict[MethodRef, MethodEntity] = field(default_factory=dict)
    fields: dict[FieldRef, FieldEntity] = field(default_factory=dict)
    type_usage_edges: frozenset[TypeUse] = frozenset()
    units: tuple[SourceUnit, ...] = ()

    def corpus_classes(self) -> list[ClassEntity]:
        return sorted(
            (c for c in self.classes.values() if not c.is_external),
            key=lambda c: c.qualified_name,
        )

    def is_corpus(self, qname: str | None) -> bool:
        cls = self.classes.get(qname) if qname else None
        return cls is not None and not cls.is_external

    @cached_property
    def methods_by_owner(self) -> dict[str, list[MethodEntity]]:
        out: dict[str, list[MethodEntity]] = defaultdict(list)
        for m in self.methods.values():
            out[m.owner].append(m)
        return dict(out)

    @cached_property
    def fields_by_owner(self) -> dict[str, list[FieldEntity]]:
        out: dict[str, list[FieldEntity]] = defaultdict(list)
        for f in self.fields.values():
            out[f.owner].append(f)
        return dict(out)

    def methods_of(self, qname: str) -> list[MethodEntity]:
        return self.methods_by_owner.get(qname, [])

    def fields_of(self, qname: str) -> list[FieldEntity]:
        return self.fields_by_owner.get(qname, [])

    @cached_property
    def inheritance_edges(self) -> tuple[InheritanceEdge, ...]:
        edges = []
        for c in self.classes.values():
            if c.superclass_ref:
                edges.append(InheritanceEdge(c.qualified_name, c.superclass_ref, "extends"))
            for i in c.interface_refs:
                edges.append(InheritanceEdge(c.qualified_name, i, "implements"))
        return tuple(sorted(edges))

    @cached_property
    def corpus_parents(self) -> dict[str, tuple[str, ...]]:
        """Direct supertypes of each class restricted to corpus classes."""
        out: dict[str, list[str]] = defaultdict(list)
        for e in self.inheritance_edges:
            if self.is_corpus(e.child) and self.is_corpus(e.parent):
                out[e.child].append(e.parent)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def corpus_children(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = defaultdict(list)
        for child, parents in self.corpus_parents.items():
            for p in parents:
                out[p].append(child)
        return {k: tuple(sorted(v)) for k, v in out.items()}

    def ancestors(self, qname: str) -> list[str]:
        """All corpus supertypes of ``qname`` (transitive, excluding itself)."""
        seen: list[str] = []
        stack = list(self.corpus_parents.get(qname, ()))
        while stack:
            p = stack.pop(0)
            if p in seen or p == qname:
                continue
            seen.append(p)
            stack.extend(self.corpus_parents.get(p, ()))
        return seen

    @property
    def call_edges(self) -> Iterator[tuple[MethodRef, MethodRef]]:
        for m in self.methods.values():
            for target in m.invoked_methods:
                yield m.ref, target

    @property
    def field_access_edges(self) -> Iterator[tuple[MethodRef, FieldRef]]:
        for m in self.methods.values():
            for f in sorted(m.accessed_fields):
                yield m.ref, f

    def check_acyclic(self) -> None:
        """Raise :class:`GraphError` naming the first inheritance cycle found."""
        state: dict[str, int] = {}
        parents = self.corpus_parents

        def visit(node: str, path: list[str]) -> None:
            state[node] = 1
            path.append(node)
            for p in parents.get(node, ()):
                if state.get(p) == 1:
                    cycle = path[path.index(p):] + [p]
                    raise GraphError("inheritance cycle: " + " -> ".join(cycle))
                if p not in state:
                    visit(p, path)
            path.pop()
            state[node] = 2

        for qname in sorted(parents):
            if qname not in state:
                visit(qname, [])

    def to_dict(self) -> dict:
        """JSON-ready dump with deterministic ordering."""
        return {
            "version_id": self.version_id,
            "units": [
                {"path": u.path, "line_count": u.line_count, "parse_status": u.parse_status}
                for u in sorted(self.units, key=lambda u: u.path)
            ],
            "classes": [
                {
                    "qualified_name": c.qualified_name,
                    "kind": c.kind,
                    "simple_name": c.simple_name,
                    "superclass": c.superclass_ref,
                    "interfaces": list(c.interface_refs),
                    "external": c.is_external,
                    "class_comment": c.has_class_comment,
                    "lines": [c.body_start_line, c.body_end_line],
                    "loc": c.loc,
                }
                for c in sorted(self.classes.values(), key=lambda c: c.qualified_name)
            ],
            "fields": [
                {
                    "owner": f.owner,
                    "name": f.name,
                    "public": f.is_public,
                    "static": f.is_static,
                    "type": f.declared_type_ref,
                }
                for f in sorted(self.fields.values(), key=lambda f: (f.owner, f.name))
            ],
            "methods": [
                {
                    "owner": m.owner,
                    "signature": m.signature,
                    "kind": m.kind,
                    "public": m.is_public,
                    "static": m.is_static,
                    "body": m.has_body,
                    "comment": m.has_comment,
                    "complexity": m.cyclomatic_complexity,
                    "accesses": [str(f) for f in sorted(m.accessed_fields)],
                    "calls": [str(t) for t in m.invoked_methods],
                    "instantiates": sorted(m.instantiated),
                }
                for m in sorted(self.methods.values(), key=lambda m: (m.owner, m.signature))
            ],
            "type_uses": [
                [t.source, t.target, t.kind] for t in sorted(self.type_usage_edges)
            ],
        }
