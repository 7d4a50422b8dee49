"""Java sources to a resolved code-entity graph."""

from .model import (
    UNKNOWN_CLASS,
    ClassEntity,
    CodeGraph,
    FieldEntity,
    FieldRef,
    GraphError,
    InheritanceEdge,
    MethodEntity,
    MethodRef,
    SourceUnit,
    TypeUse,
)
from .parser import SourceTreeError, parse_source, parse_source_tree
from .raw import ParsedFile, ParsedTree
from .resolver import resolve_references
from .source import count_effective_loc


def build_graph(root, excludes=(), version_id="", jobs=1, lenient=False) -> CodeGraph:
    """Parse and resolve a source tree in one step."""
    return resolve_references(parse_source_tree(root, excludes, version_id, jobs, lenient))


def graph_from_sources(sources: dict[str, str], version_id: str = "", lenient: bool = False) -> CodeGraph:
    """Build a graph from in-memory ``{path: java source}`` pairs."""
    files = [parse_source(text, path, version_id, lenient) for path, text in sorted(sources.items())]
    return resolve_references(ParsedTree(version_id, files))


__all__ = [
    "UNKNOWN_CLASS",
    "ClassEntity",
    "CodeGraph",
    "FieldEntity",
    "FieldRef",
    "GraphError",
    "InheritanceEdge",
    "MethodEntity",
    "MethodRef",
    "ParsedFile",
    "ParsedTree",
    "SourceTreeError",
    "SourceUnit",
    "TypeUse",
    "build_graph",
    "count_effective_loc",
    "graph_from_sources",
    "parse_source",
    "parse_source_tree",
    "resolve_references",
]
