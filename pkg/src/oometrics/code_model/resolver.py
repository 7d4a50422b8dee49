"""Cross-file name resolution: turns a :class:`ParsedTree` into a :class:`CodeGraph`.

Type names are looked up through enclosing scopes (member types of each
enclosing class and its supertypes), single-type imports, the file's package
and on-demand imports, in that order.  Names that match no corpus class become
external stub classes.  Calls resolve by receiver type, name and arity; when no
arity match exists the first same-named method in the receiver's corpus
hierarchy is taken.
"""

from __future__ import annotations

import logging

from .model import (
    UNKNOWN_CLASS,
    ClassEntity,
    CodeGraph,
    FieldEntity,
    FieldRef,
    GraphError,
    MethodEntity,
    MethodRef,
    TypeUse,
)
from .raw import (
    CallOfExpr,
    Expr,
    FieldOfExpr,
    NameExpr,
    ParsedFile,
    ParsedTree,
    RawCall,
    RawClass,
    RawMethod,
    RawType,
    SuperExpr,
    ThisExpr,
    TypedExpr,
)

log = logging.getLogger(__name__)

OBJECT = "java.lang.Object"

# implicitly imported names, so external stubs get stable qualified names
JAVA_LANG = frozenset(
    "Object String StringBuilder StringBuffer CharSequence Math System Thread Runnable "
    "Integer Long Short Byte Character Boolean Double Float Number Void Enum Iterable "
    "Comparable Cloneable AutoCloseable Class ClassLoader Runtime Process Throwable "
    "Exception RuntimeException Error IllegalArgumentException IllegalStateException "
    "NullPointerException IndexOutOfBoundsException UnsupportedOperationException "
    "ClassCastException NumberFormatException InterruptedException CloneNotSupportedException "
    "ArithmeticException SecurityException Override Deprecated SuppressWarnings "
    "FunctionalInterface SafeVarargs ThreadLocal StackTraceElement".split()
)


def _signature(m: RawMethod) -> str:
    params = ",".join(t.name + "[]" * t.dims for t in m.param_types)
    return f"{m.name}({params})"


def _dotted(expr: Expr) -> str | None:
    if isinstance(expr, NameExpr):
        return expr.name
    if isinstance(expr, FieldOfExpr):
        head = _dotted(expr.target)
        return f"{head}.{expr.name}" if head else None
    return None


class _Resolver:
    def __init__(self, tree: ParsedTree):
        self.version_id = tree.version_id
        self.units = tuple(tree.units)
        self.raw: dict[str, RawClass] = {}
        self.file_of: dict[str, ParsedFile] = {}
        self.dotted: dict[str, str] = {}
        self.members: dict[str, dict[str, str]] = {}
        self.top_level: dict[str, dict[str, str]] = {}
        self.stubs: dict[str, ClassEntity] = {}
        self._supers: dict[str, tuple[str | None, tuple[str, ...]]] = {}
        self._in_progress: set[str] = set()
        self._hier: dict[str, list[str]] = {}
        self.method_index: dict[str, dict[str, list[tuple[int, bool, MethodRef]]]] = {}
        self.field_types: dict[FieldRef, str | None] = {}
        self.return_types: dict[MethodRef, str | None] = {}

        for f in tree.files:
            for rc in f.classes:
                if rc.qualified_name in self.raw:
                    log.warning("duplicate class %s in %s ignored", rc.qualified_name, f.unit.path)
                    continue
                self.raw[rc.qualified_name] = rc
                self.file_of[rc.qualified_name] = f
        for q, rc in self.raw.items():
            if rc.outer is None:
                self.top_level.setdefault(rc.package, {})[rc.simple_name] = q
            elif rc.outer in self.raw and q == f"{rc.outer}${rc.simple_name}":
                self.members.setdefault(rc.outer, {})[rc.simple_name] = q
        # dotted source names, e.g. a.Outer.Inner -> a.Outer$Inner
        names = {q: q for q, rc in self.raw.items() if rc.outer is None}
        self.dotted.update(names)
        for q in sorted(self.raw, key=len):
            for simple, inner in self.members.get(q, {}).items():
                if q in names:
                    names[inner] = f"{names[q]}.{simple}"
                    self.dotted[names[inner]] = inner

    # -- stubs ---------------------------------------------------------

    def stub(self, name: str) -> str:
        if name not in self.stubs and name not in self.raw:
            simple = name.rsplit(".", 1)[-1]
            self.stubs[name] = ClassEntity(qualified_name=name, kind="class", simple_name=simple, is_external=True)
        return name

    # -- type names ----------------------------------------------------

    def supertypes(self, q: str) -> tuple[str | None, tuple[str, ...]]:
        if q in self._supers:
            return self._supers[q]
        if q in self._in_progress or q not in self.raw:
            return None, ()
        self._in_progress.add(q)
        rc = self.raw[q]
        ctx = rc.outer
        file = self.file_of[q]
        sup = self.resolve_raw(rc.superclass, ctx, file) if rc.superclass else None
        ifaces = [self.resolve_raw(t, ctx, file) for t in rc.interfaces]
        if rc.anonymous_base is not None:
            base = self.resolve_raw(rc.anonymous_base, ctx, file)
            if base and base in self.raw and self.raw[base].kind == "interface":
                ifaces.append(base)
            elif base and base != q:
                sup = base
        if sup == q:
            sup = None
        result = (sup, tuple(dict.fromkeys(i for i in ifaces if i and i != q)))
        self._in_progress.discard(q)
        self._supers[q] = result
        return result

    def hierarchy(self, q: str) -> list[str]:
        """``q`` and its corpus supertypes, superclass chain before interfaces."""
        if q in self._hier:
            return self._hier[q]
        order: list[str] = []
        queue = [q]
        while queue:
            cur = queue.pop(0)
            if cur in order or cur not in self.raw:
                continue
            order.append(cur)
            sup, ifaces = self.supertypes(cur)
            if sup:
                queue.append(sup)
            queue.extend(ifaces)
        self._hier[q] = order
        return order

    def external_ancestor(self, q: str) -> str | None:
        for h in self.hierarchy(q):
            sup, ifaces = self.supertypes(h)
            for s in (sup, *ifaces):
                if s and s not in self.raw:
                    return s
        return None

    def member_type(self, q: str, name: str) -> str | None:
        for h in self.hierarchy(q):
            inner = self.members.get(h, {}).get(name)
            if inner:
                return inner
        return None

    def resolve_simple(self, name: str, ctx: str | None, file: ParsedFile) -> str | None:
        cur = ctx
        while cur:
            rc = self.raw[cur]
            if not rc.is_anonymous and rc.simple_name == name:
                return cur
            found = self.member_type(cur, name) or rc.local_types.get(name)
            if found:
                return found
            cur = rc.outer
        for imp in file.imports:
            if not imp.on_demand and not imp.static and imp.name.rsplit(".", 1)[-1] == name:
                return self.dotted.get(imp.name)
        found = self.top_level.get(file.package, {}).get(name)
        if found:
            return found
        for imp in file.imports:
            if imp.on_demand and not imp.static:
                found = self.dotted.get(f"{imp.name}.{name}")
                if found:
                    return found
        return None

    def resolve_name(self, name: str, ctx: str | None, file: ParsedFile) -> str | None:
        """Corpus class for a (possibly dotted) source type name, or None."""
        if "." not in name:
            return self.resolve_simple(name, ctx, file)
        head, *rest = name.split(".")
        cur = self.resolve_simple(head, ctx, file)
        if cur is not None:
            for part in rest:
                cur = self.member_type(cur, part)
                if cur is None:
                    break
            if cur is not None:
                return cur
        return self.dotted.get(name)

    def external_name(self, name: str, file: ParsedFile) -> str:
        head = name.split(".", 1)[0]
        for imp in file.imports:
            if not imp.on_demand and not imp.static and imp.name.rsplit(".", 1)[-1] == head:
                return imp.name + name[len(head):]
        if head in JAVA_LANG:
            return "java.lang." + name
        return name

    def resolve_raw(self, rt: RawType | None, ctx: str | None, file: ParsedFile) -> str | None:
        """Corpus class or external stub for a written type; None for type variables."""
        if rt is None or rt.is_type_var:
            return None
        if rt.local_qname and rt.local_qname in self.raw:
            return rt.local_qname
        found = self.resolve_name(rt.name, ctx, file)
        if found:
            return found
        return self.stub(self.external_name(rt.name, file))

    # -- members -------------------------------------------------------

    def index_members(self, fields: dict[FieldRef, FieldEntity]) -> None:
        for q, rc in self.raw.items():
            file = self.file_of[q]
            for f in rc.fields:
                ref = FieldRef(q, f.name)
                if ref in fields:
                    continue
                ftype = self.resolve_raw(f.type, q, file) if f.type and f.type.dims == 0 else None
                fields[ref] = FieldEntity(q, f.name, f.is_public, f.is_static, ftype)
                self.field_types[ref] = ftype
            index: dict[str, list[tuple[int, bool, MethodRef]]] = {}
            seen: set[str] = set()
            for m in rc.methods:
                sig = _signature(m)
                n = 2
                while sig in seen:
                    sig = f"{_signature(m)}#{n}"
                    n += 1
                seen.add(sig)
                ref = MethodRef(q, sig)
                m.signature = sig
                if m.kind == "method":
                    index.setdefault(m.name, []).append((m.arity, m.varargs, ref))
                    rt = m.return_type
                    self.return_types[ref] = (
                        self.resolve_raw(rt, q, file) if rt is not None and rt.dims == 0 else None
                    )
            self.method_index[q] = index

    def find_method(self, q: str, name: str, arity: int) -> MethodRef | None:
        hier = self.hierarchy(q)
        for h in hier:
            for ar, varargs, ref in self.method_index.get(h, {}).get(name, ()):
                if arity < 0 or ar == arity or (varargs and arity >= ar - 1):
                    return ref
        for h in hier:
            cands = self.method_index.get(h, {}).get(name)
            if cands:
                return cands[0][2]
        return None

    def find_field(self, q: str, name: str) -> FieldRef | None:
        for h in self.hierarchy(q):
            ref = FieldRef(h, name)
            if ref in self.field_types:
                return ref
        return None

    def bare_field(self, name: str, q: str) -> FieldRef | None:
        cur: str | None = q
        while cur:
            ref = self.find_field(cur, name)
            if ref:
                return ref
            cur = self.raw[cur].outer
        file = self.file_of[q]
        for imp in file.imports:
            if not imp.static:
                continue
            owner_name = imp.name if imp.on_demand else imp.name.rsplit(".", 1)[0]
            if not imp.on_demand and imp.name.rsplit(".", 1)[-1] != name:
                continue
            owner = self.dotted.get(owner_name)
            if owner:
                ref = self.find_field(owner, name)
                if ref:
                    return ref
        return None

    # -- expressions ---------------------------------------------------

    def type_of(self, expr: Expr | None, q: str) -> str | None:
        file = self.file_of[q]
        if isinstance(expr, ThisExpr):
            if expr.qualifier is None:
                return q
            return self.resolve_name(expr.qualifier, q, file)
        if isinstance(expr, SuperExpr):
            return self.supertypes(q)[0]
        if isinstance(expr, NameExpr):
            ref = self.bare_field(expr.name, q)
            if ref:
                return self.field_types.get(ref)
            found = self.resolve_name(expr.name, q, file)
            if found:
                return found
            if expr.name[:1].isupper():
                return self.stub(self.external_name(expr.name, file))
            return None
        if isinstance(expr, TypedExpr):
            rt = expr.type
            if rt is None or rt.dims:
                return None
            return self.resolve_raw(rt, q, file)
        if isinstance(expr, FieldOfExpr):
            owner = self.type_of(expr.target, q)
            if owner is None:
                dotted = _dotted(expr)
                if dotted:
                    found = self.resolve_name(dotted, q, file)
                    if found:
                        return found
                    if expr.name[:1].isupper() and _dotted(expr.target):
                        return self.stub(dotted)
                return None
            if owner not in self.raw:
                return None
            ref = self.find_field(owner, expr.name)
            if ref:
                return self.field_types.get(ref)
            return self.member_type(owner, expr.name)
        if isinstance(expr, CallOfExpr):
            target = self.resolve_call(expr.call, q)
            return self.return_types.get(target)
        return None

    def _fallback(self, q: str | None, name: str, arity: int) -> MethodRef:
        owner = (self.external_ancestor(q) if q else None) or (OBJECT if q else UNKNOWN_CLASS)
        return MethodRef(self.stub(owner), f"{name}/{arity}")

    def resolve_call(self, call: RawCall, q: str) -> MethodRef:
        if call.receiver is None:
            cur: str | None = q
            while cur:
                ref = self.find_method(cur, call.name, call.arity)
                if ref:
                    return ref
                cur = self.raw[cur].outer
            for imp in self.file_of[q].imports:
                if not imp.static:
                    continue
                if imp.on_demand:
                    owner = self.dotted.get(imp.name)
                elif imp.name.rsplit(".", 1)[-1] == call.name:
                    owner = self.dotted.get(imp.name.rsplit(".", 1)[0])
                    if owner is None:
                        return MethodRef(self.stub(imp.name.rsplit(".", 1)[0]), f"{call.name}/{call.arity}")
                else:
                    continue
                if owner:
                    ref = self.find_method(owner, call.name, call.arity)
                    if ref:
                        return ref
            return self._fallback(q, call.name, call.arity)
        owner = self.type_of(call.receiver, q)
        if owner is None:
            return MethodRef(self.stub(UNKNOWN_CLASS), f"{call.name}/{call.arity}")
        if owner not in self.raw:
            return MethodRef(self.stub(owner), f"{call.name}/{call.arity}")
        return self.find_method(owner, call.name, call.arity) or self._fallback(owner, call.name, call.arity)

    def resolve_field_use(self, receiver: Expr | None, name: str, q: str) -> FieldRef | None:
        if receiver is None:
            return self.bare_field(name, q)
        owner = self.type_of(receiver, q)
        if owner is None or owner not in self.raw:
            return None
        return self.find_field(owner, name)

    # -- assembly ------------------------------------------------------

    def build(self) -> CodeGraph:
        for q in self.raw:
            self.supertypes(q)
        classes: dict[str, ClassEntity] = {}
        for q, rc in self.raw.items():
            sup, ifaces = self.supertypes(q)
            classes[q] = ClassEntity(
                qualified_name=q,
                kind=rc.kind,
                simple_name=rc.simple_name,
                superclass_ref=sup,
                interface_refs=ifaces,
                has_class_comment=rc.has_comment,
                body_start_line=rc.start_line,
                body_end_line=rc.end_line,
                loc=rc.loc,
                package=rc.package,
                outer=rc.outer,
                source_path=self.file_of[q].unit.path,
                is_anonymous=rc.is_anonymous,
            )
        probe = CodeGraph(self.version_id, {**classes, **self.stubs})
        probe.check_acyclic()

        fields: dict[FieldRef, FieldEntity] = {}
        self.index_members(fields)
        methods: dict[MethodRef, MethodEntity] = {}
        uses: set[TypeUse] = set()
        for q, rc in self.raw.items():
            file = self.file_of[q]

            def use(rt: RawType | None, kind: str) -> None:
                if rt is None:
                    return
                for part in rt.walk():
                    target = self.resolve_raw(part, q, file)
                    if target and target != q:
                        uses.add(TypeUse(q, target, kind))

            for f in rc.fields:
                use(f.type, "field")
            for m in rc.methods:
                for rt in m.param_types:
                    use(rt, "param")
                if m.return_type is not None:
                    use(m.return_type, "return")
                for rt in m.local_types:
                    use(rt, "local")
                for rt in m.created_types:
                    use(rt, "new")
                invoked = tuple(self.resolve_call(c, q) for c in m.calls) if m.has_body else ()
                accessed = frozenset(
                    ref for u in m.field_uses
                    if (ref := self.resolve_field_use(u.receiver, u.name, q)) is not None
                )
                made = {self.resolve_raw(rt, q, file) for rt in m.created_types} if m.has_body else set()
                ref = MethodRef(q, m.signature)
                methods[ref] = MethodEntity(
                    owner=q,
                    name=m.name,
                    signature=ref.signature,
                    arity=m.arity,
                    kind=m.kind,
                    is_public=m.is_public,
                    is_static=m.is_static,
                    has_body=m.has_body,
                    has_comment=m.has_comment,
                    cyclomatic_complexity=m.complexity,
                    accessed_fields=accessed,
                    invoked_methods=invoked,
                    instantiated=frozenset(t for t in made if t),
                    return_type=self.return_types.get(ref),
                    line=m.line,
                )
        all_classes = {**classes, **self.stubs}
        return CodeGraph(
            version_id=self.version_id,
            classes=dict(sorted(all_classes.items())),
            methods=dict(sorted(methods.items())),
            fields=dict(sorted(fields.items())),
            type_usage_edges=frozenset(uses),
            units=self.units,
        )


def resolve_references(tree: ParsedTree) -> CodeGraph:
    """Resolve a parsed tree into an immutable :class:`CodeGraph`.

    Raises :class:`GraphError` when corpus classes form an inheritance cycle.
    """
    return _Resolver(tree).build()


__all__ = ["GraphError", "resolve_references"]
