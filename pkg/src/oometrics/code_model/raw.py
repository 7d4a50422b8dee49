"""Per-file parse results, before any cross-file name resolution.

Everything here is plain, picklable data so files can be parsed in worker
processes and merged afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .model import SourceUnit


@dataclass(frozen=True)
class RawType:
    name: str  # as written, possibly dotted (``Map.Entry``)
    args: tuple["RawType", ...] = ()
    dims: int = 0
    # set when the name binds to a local class or a type variable at parse time
    local_qname: str | None = None
    is_type_var: bool = False

    def walk(self):
        yield self
        for a in self.args:
            yield from a.walk()


# Receiver expressions, kept symbolic until the class table is known.
@dataclass(frozen=True)
class ThisExpr:
    qualifier: str | None = None


@dataclass(frozen=True)
class SuperExpr:
    pass


@dataclass(frozen=True)
class NameExpr:
    name: str  # not a local: a field, a type, or a package segment


@dataclass(frozen=True)
class TypedExpr:
    type: RawType | None  # locals, casts, instantiations, literals


@dataclass(frozen=True)
class FieldOfExpr:
    target: "Expr"
    name: str


@dataclass(frozen=True)
class CallOfExpr:
    call: "RawCall"


@dataclass(frozen=True)
class UnknownExpr:
    pass


Expr = Union[ThisExpr, SuperExpr, NameExpr, TypedExpr, FieldOfExpr, CallOfExpr, UnknownExpr]


@dataclass(frozen=True)
class RawCall:
    receiver: Expr | None
    name: str
    arity: int  # -1 for method references
    line: int


@dataclass(frozen=True)
class RawFieldUse:
    receiver: Expr | None  # None: a bare identifier
    name: str
    line: int


@dataclass
class RawMethod:
    name: str
    kind: str
    param_types: list[RawType]
    varargs: bool = False
    return_type: RawType | None = None
    is_public: bool = False
    is_static: bool = False
    has_body: bool = True
    has_comment: bool = False
    decisions: int = 0
    calls: list[RawCall] = field(default_factory=list)
    field_uses: list[RawFieldUse] = field(default_factory=list)
    local_types: list[RawType] = field(default_factory=list)
    created_types: list[RawType] = field(default_factory=list)
    line: int = 0
    signature: str = ""  # assigned during resolution

    @property
    def arity(self) -> int:
        return len(self.param_types)

    @property
    def complexity(self) -> int:
        return 1 + self.decisions if self.has_body else 0


@dataclass
class RawField:
    name: str
    type: RawType | None
    is_public: bool = False
    is_static: bool = False
    line: int = 0


@dataclass
class RawClass:
    qualified_name: str
    simple_name: str
    kind: str
    package: str
    outer: str | None
    start_line: int
    end_line: int
    loc: int
    has_comment: bool = False
    is_anonymous: bool = False
    superclass: RawType | None = None
    interfaces: list[RawType] = field(default_factory=list)
    # for anonymous classes: the instantiated type, superclass or interface
    anonymous_base: RawType | None = None
    type_params: frozenset[str] = frozenset()
    methods: list[RawMethod] = field(default_factory=list)
    fields: list[RawField] = field(default_factory=list)
    # simple name -> qualified name of local classes visible to this class
    local_types: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Import:
    name: str  # dotted
    static: bool = False
    on_demand: bool = False


@dataclass
class ParsedFile:
    unit: SourceUnit
    package: str = ""
    imports: list[Import] = field(default_factory=list)
    classes: list[RawClass] = field(default_factory=list)


@dataclass
class ParsedTree:
    """Unresolved graph: every file's declarations and symbolic member uses."""

    version_id: str
    files: list[ParsedFile]

    @property
    def units(self) -> list[SourceUnit]:
        return [f.unit for f in self.files]

    @property
    def classes(self) -> list[RawClass]:
        return [c for f in self.files for c in f.classes]
