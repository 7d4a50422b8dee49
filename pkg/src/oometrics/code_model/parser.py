"""Java front end built on tree-sitter.

Each file is parsed independently into a :class:`ParsedFile`.  Local variable
scoping is handled here, so a bare identifier that survives into the raw IR is
known not to be a local: it is a field, a type, or a package segment, which is
decided later by the resolver.
"""

from __future__ import annotations

import fnmatch
import logging
import sys
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable

import tree_sitter_java
from tree_sitter import Language, Node, Parser

from .model import SourceUnit
from .raw import (
    CallOfExpr,
    Expr,
    FieldOfExpr,
    Import,
    NameExpr,
    ParsedFile,
    ParsedTree,
    RawCall,
    RawClass,
    RawField,
    RawFieldUse,
    RawMethod,
    RawType,
    SuperExpr,
    ThisExpr,
    TypedExpr,
    UnknownExpr,
)
from .source import code_lines, effective_loc, physical_line_count, read_source

log = logging.getLogger(__name__)

JAVA = Language(tree_sitter_java.language())

TYPE_DECLARATIONS = {
    "class_declaration": "class",
    "interface_declaration": "interface",
    "enum_declaration": "enum",
    "record_declaration": "class",
    "annotation_type_declaration": "interface",
}
# variable name -> declared type (None when unknown)
Scope = dict[str, "RawType | None"]

PRIMITIVE_TYPES = {"integral_type", "floating_point_type", "boolean_type", "void_type"}
COMMENTS = {"line_comment", "block_comment"}
DECISION_STATEMENTS = {
    "if_statement",
    "for_statement",
    "enhanced_for_statement",
    "while_statement",
    "do_statement",
    "catch_clause",
    "ternary_expression",
}


class SourceTreeError(OSError):
    """The source root is missing or unreadable."""


def _text(node: Node | None) -> str:
    return node.text.decode("utf-8", "replace") if node is not None else ""


def _line(node: Node) -> int:
    return node.start_point[0] + 1


def _modifiers(node: Node) -> set[str]:
    for child in node.children:
        if child.type == "modifiers":
            return {c.type for c in child.children if not c.is_named}
    return set()


def _has_leading_comment(node: Node) -> bool:
    sib = node.prev_sibling
    if sib is None or sib.type not in COMMENTS:
        return False
    if _text(sib).startswith("/**"):
        return True
    return sib.end_point[0] >= node.start_point[0] - 1


def _arg_count(args: Node | None) -> int:
    if args is None:
        return 0
    return sum(1 for c in args.named_children if c.type not in COMMENTS)


class _FileParser:
    def __init__(self, source: bytes, text: str):
        self.source = source
        self.code = code_lines(text)
        self.package = ""
        self.imports: list[Import] = []
        self.classes: list[RawClass] = []
        self._anon = defaultdict(int)
        self._local = defaultdict(int)

    def run(self, root: Node) -> None:
        for child in root.named_children:
            if child.type == "package_declaration":
                for c in child.named_children:
                    if c.type in ("identifier", "scoped_identifier"):
                        self.package = _text(c)
            elif child.type == "import_declaration":
                self.imports.append(self._import(child))
            elif child.type in TYPE_DECLARATIONS:
                self.type_declaration(child, None, frozenset(), {})

    def _import(self, node: Node) -> Import:
        name = ""
        on_demand = False
        for c in node.named_children:
            if c.type in ("identifier", "scoped_identifier"):
                name = _text(c)
            elif c.type == "asterisk":
                on_demand = True
        static = any(c.type == "static" for c in node.children)
        return Import(name, static=static, on_demand=on_demand)

    # -- types ---------------------------------------------------------

    def raw_type(self, node: Node | None, type_vars: frozenset[str], local_types: dict[str, str]) -> RawType | None:
        if node is None or node.type in PRIMITIVE_TYPES:
            return None
        t = node.type
        if t == "type_identifier":
            name = _text(node)
            if name in type_vars:
                return RawType(name, is_type_var=True)
            return RawType(name, local_qname=local_types.get(name))
        if t == "scoped_type_identifier":
            parts = [_text(c) for c in node.named_children if c.type == "type_identifier"]
            inner = [c for c in node.named_children if c.type in ("scoped_type_identifier", "generic_type")]
            if inner:
                base = self.raw_type(inner[0], type_vars, local_types)
                parts = ([base.name] if base else []) + parts
            return RawType(".".join(parts))
        if t == "generic_type":
            base = None
            args: list[RawType] = []
            for c in node.named_children:
                if c.type == "type_arguments":
                    for a in c.named_children:
                        rt = self.raw_type(a, type_vars, local_types)
                        if rt is not None:
                            args.append(rt)
                elif base is None:
                    base = self.raw_type(c, type_vars, local_types)
            if base is None:
                return None
            return RawType(base.name, tuple(args), base.dims, base.local_qname, base.is_type_var)
        if t == "array_type":
            elem = self.raw_type(node.child_by_field_name("element"), type_vars, local_types)
            if elem is None:
                return None
            dims = _text(node.child_by_field_name("dimensions")).count("[")
            return RawType(elem.name, elem.args, elem.dims + dims, elem.local_qname, elem.is_type_var)
        if t in ("annotated_type", "wildcard"):
            for c in node.named_children:
                if c.type not in ("marker_annotation", "annotation"):
                    return self.raw_type(c, type_vars, local_types)
        return None

    # -- declarations --------------------------------------------------

    def _new_class(self, node: Node, qname: str, simple: str, kind: str, outer: str | None,
                   span: Node, **kw) -> RawClass:
        start, end = _line(span), span.end_point[0] + 1
        rc = RawClass(
            qualified_name=qname,
            simple_name=simple,
            kind=kind,
            package=self.package,
            outer=outer,
            start_line=start,
            end_line=end,
            loc=effective_loc(self.code, start, end),
            **kw,
        )
        self.classes.append(rc)
        return rc

    def type_declaration(self, node: Node, outer: str | None, type_vars: frozenset[str],
                         local_types: dict[str, str], local: bool = False,
                         captured: Scope | None = None) -> RawClass:
        kind = TYPE_DECLARATIONS[node.type]
        simple = _text(node.child_by_field_name("name"))
        if outer is None:
            qname = f"{self.package}.{simple}" if self.package else simple
        elif local:
            self._local[(outer, simple)] += 1
            qname = f"{outer}${self._local[(outer, simple)]}{simple}"
        else:
            qname = f"{outer}${simple}"
        params = set()
        tp = node.child_by_field_name("type_parameters")
        if tp is not None:
            for p in tp.named_children:
                for c in p.named_children:
                    if c.type in ("type_identifier", "identifier"):
                        params.add(_text(c))
                        break
        tv = type_vars | frozenset(params)
        # the class's own simple name must bind to itself inside its body
        scope_types = dict(local_types)
        if local:
            scope_types[simple] = qname

        rc = self._new_class(node, qname, simple, kind, outer, node,
                             has_comment=_has_leading_comment(node),
                             type_params=frozenset(params), local_types=scope_types)
        for c in node.named_children:
            if c.type == "superclass":
                rc.superclass = self.raw_type(c.named_children[0], tv, scope_types) if c.named_children else None
            elif c.type in ("super_interfaces", "extends_interfaces"):
                for tl in c.named_children:
                    for t in tl.named_children:
                        rt = self.raw_type(t, tv, scope_types)
                        if rt is not None:
                            rc.interfaces.append(rt)
        if node.type == "record_declaration":
            params_node = node.child_by_field_name("parameters")
            for p in params_node.named_children if params_node else ():
                if p.type == "formal_parameter":
                    rc.fields.append(RawField(
                        _text(p.child_by_field_name("name")),
                        self.raw_type(p.child_by_field_name("type"), tv, scope_types),
                        line=_line(p),
                    ))
        body = node.child_by_field_name("body")
        if body is not None:
            self.class_body(rc, body, tv, scope_types, captured)
        return rc

    def anonymous_class(self, body: Node, base: RawType | None, outer: str,
                        type_vars: frozenset[str], local_types: dict[str, str],
                        captured: Scope | None = None) -> RawClass:
        self._anon[outer] += 1
        k = str(self._anon[outer])
        rc = self._new_class(body, f"{outer}${k}", k, "class", outer, body,
                             is_anonymous=True, anonymous_base=base,
                             local_types=dict(local_types))
        self.class_body(rc, body, type_vars, local_types, captured)
        return rc

    def class_body(self, rc: RawClass, body: Node, type_vars: frozenset[str],
                   local_types: dict[str, str], captured: Scope | None = None) -> None:
        in_interface = rc.kind == "interface"
        if captured:
            # the class's own fields shadow enclosing locals
            own = {
                _text(d.child_by_field_name("name"))
                for m in body.named_children if m.type == "field_declaration"
                for d in m.children_by_field_name("declarator")
            }
            captured = {k: v for k, v in captured.items() if k not in own}
        init = {
            True: _BodyWalker(self, rc, type_vars, local_types, captured),
            False: _BodyWalker(self, rc, type_vars, local_types, captured),
        }
        has_block = {True: False, False: False}
        line = {True: 0, False: 0}
        members = list(body.named_children)
        i = 0
        while i < len(members):
            m = members[i]
            i += 1
            t = m.type
            if t == "enum_body_declarations":
                members[i:i] = list(m.named_children)
            elif t in ("field_declaration", "constant_declaration"):
                mods = _modifiers(m)
                static = "static" in mods or in_interface
                public = "public" in mods or in_interface
                ftype = self.raw_type(m.child_by_field_name("type"), type_vars, local_types)
                for d in m.children_by_field_name("declarator"):
                    dims = _text(d.child_by_field_name("dimensions")).count("[")
                    rt = ftype
                    if rt is not None and dims:
                        rt = RawType(rt.name, rt.args, rt.dims + dims, rt.local_qname, rt.is_type_var)
                    rc.fields.append(RawField(_text(d.child_by_field_name("name")), rt,
                                              is_public=public, is_static=static, line=_line(d)))
                    value = d.child_by_field_name("value")
                    if value is not None:
                        init[static].visit(value)
                        line[static] = line[static] or _line(m)
            elif t in ("method_declaration", "annotation_type_element_declaration"):
                rc.methods.append(self.method(rc, m, "method", type_vars, local_types, captured))
            elif t in ("constructor_declaration", "compact_constructor_declaration"):
                rc.methods.append(self.method(rc, m, "constructor", type_vars, local_types, captured))
            elif t == "static_initializer":
                for c in m.named_children:
                    init[True].visit(c)
                has_block[True] = True
                line[True] = line[True] or _line(m)
            elif t == "block":
                init[False].visit(m)
                has_block[False] = True
                line[False] = line[False] or _line(m)
            elif t in TYPE_DECLARATIONS:
                self.type_declaration(m, rc.qualified_name, type_vars, local_types, captured=captured)
            elif t == "enum_constant":
                rc.fields.append(RawField(_text(m.child_by_field_name("name")),
                                          RawType(rc.simple_name, local_qname=rc.qualified_name),
                                          is_public=True, is_static=True, line=_line(m)))
                args = m.child_by_field_name("arguments")
                if args is not None:
                    init[True].visit(args)
                    line[True] = line[True] or _line(m)
                cbody = m.child_by_field_name("body")
                if cbody is not None:
                    self.anonymous_class(cbody, RawType(rc.simple_name, local_qname=rc.qualified_name),
                                         rc.qualified_name, type_vars, local_types, captured)
        for static, name in ((True, "<clinit>"), (False, "<init-block>")):
            w = init[static]
            if has_block[static] or w.touched:
                rc.methods.append(w.to_method(
                    name, "initializer" if has_block[static] else "field-init",
                    [], is_static=static, line=line[static]))

    def method(self, rc: RawClass, node: Node, kind: str, type_vars: frozenset[str],
               local_types: dict[str, str], captured: Scope | None = None) -> RawMethod:
        mods = _modifiers(node)
        tv = type_vars
        tp = node.child_by_field_name("type_parameters")
        if tp is not None:
            names = set()
            for p in tp.named_children:
                for c in p.named_children:
                    if c.type in ("type_identifier", "identifier"):
                        names.add(_text(c))
                        break
            tv = tv | frozenset(names)
        walker = _BodyWalker(self, rc, tv, local_types, captured)
        params: list[RawType] = []
        varargs = False
        pnode = node.child_by_field_name("parameters")
        if node.type == "compact_constructor_declaration":
            params = [f.type or RawType("?") for f in rc.fields]
        for p in pnode.named_children if pnode is not None else ():
            if p.type == "formal_parameter":
                rt = self.raw_type(p.child_by_field_name("type"), tv, local_types)
                dims = _text(p.child_by_field_name("dimensions")).count("[")
                ptype = p.child_by_field_name("type")
                shown = rt or RawType(_text(ptype))
                if dims:
                    shown = RawType(shown.name, shown.args, shown.dims + dims)
                params.append(shown)
                walker.declare(_text(p.child_by_field_name("name")), rt)
            elif p.type == "spread_parameter":
                varargs = True
                ptype = next((c for c in p.named_children if c.type not in ("modifiers", "variable_declarator")), None)
                rt = self.raw_type(ptype, tv, local_types)
                shown = rt or RawType(_text(ptype))
                params.append(RawType(shown.name, shown.args, shown.dims + 1))
                for d in p.named_children:
                    if d.type == "variable_declarator":
                        walker.declare(_text(d.child_by_field_name("name")), rt)
        body = node.child_by_field_name("body")
        if node.type == "annotation_type_element_declaration":
            body = None
        if body is not None:
            walker.visit(body)
        is_public = "public" in mods or (rc.kind == "interface" and "private" not in mods)
        ret = None
        if kind == "method":
            ret = self.raw_type(node.child_by_field_name("type"), tv, local_types)
        return walker.to_method(
            _text(node.child_by_field_name("name")),
            kind,
            params,
            varargs=varargs,
            return_type=ret,
            is_public=is_public,
            is_static="static" in mods,
            has_body=body is not None,
            has_comment=_has_leading_comment(node),
            line=_line(node),
        )


class _BodyWalker:
    """Collects decisions and symbolic member uses from one executable body."""

    def __init__(self, fp: _FileParser, rc: RawClass, type_vars: frozenset[str],
                 local_types: dict[str, str], captured: Scope | None = None):
        self.fp = fp
        self.rc = rc
        self.tv = type_vars
        self.local_types = dict(local_types)
        # enclosing-method locals visible to local and anonymous classes
        self.scopes: list[Scope] = [dict(captured or {}), {}]
        self.decisions = 0
        self.calls: list[RawCall] = []
        self.field_uses: list[RawFieldUse] = []
        self.used_types: list[RawType] = []
        self.created: list[RawType] = []
        self.touched = False

    def to_method(self, name: str, kind: str, params: list[RawType], **kw) -> RawMethod:
        return RawMethod(
            name=name,
            kind=kind,
            param_types=params,
            decisions=self.decisions,
            calls=self.calls,
            field_uses=self.field_uses,
            local_types=self.used_types,
            created_types=self.created,
            **kw,
        )

    # -- scopes --------------------------------------------------------

    def declare(self, name: str, rtype: RawType | None) -> None:
        if name:
            self.scopes[-1][name] = rtype

    def lookup(self, name: str) -> tuple[bool, RawType | None]:
        for scope in reversed(self.scopes):
            if name in scope:
                return True, scope[name]
        return False, None

    def visible(self) -> Scope:
        out: Scope = {}
        for scope in self.scopes:
            out.update(scope)
        return out

    def _scoped(self, nodes: Iterable[Node]) -> None:
        self.scopes.append({})
        for c in nodes:
            self.visit(c)
        self.scopes.pop()

    def _type(self, node: Node | None) -> RawType | None:
        return self.fp.raw_type(node, self.tv, self.local_types)

    # -- traversal -----------------------------------------------------

    def visit(self, node: Node) -> None:
        t = node.type
        if t in COMMENTS:
            return
        self.touched = True
        if t in DECISION_STATEMENTS:
            self.decisions += 1
        elif t == "switch_label":
            if _text(node).startswith("case"):
                self.decisions += 1
        elif t == "binary_expression":
            op = node.child_by_field_name("operator")
            if op is not None and op.type in ("&&", "||"):
                self.decisions += 1
        handler = getattr(self, "_v_" + t, None)
        if handler is not None:
            handler(node)
        elif t in TYPE_DECLARATIONS:
            rc = self.fp.type_declaration(node, self.rc.qualified_name, self.tv, self.local_types,
                                          local=True, captured=self.visible())
            self.local_types[rc.simple_name] = rc.qualified_name
        else:
            for c in node.named_children:
                self.visit(c)

    def _v_identifier(self, node: Node) -> None:
        name = _text(node)
        if not self.lookup(name)[0]:
            self.field_uses.append(RawFieldUse(None, name, _line(node)))

    def _v_block(self, node: Node) -> None:
        self._scoped(node.named_children)

    _v_constructor_body = _v_block
    _v_switch_block = _v_block
    _v_for_statement = _v_block

    def _v_enhanced_for_statement(self, node: Node) -> None:
        value = node.child_by_field_name("value")
        if value is not None:
            self.visit(value)
        self.scopes.append({})
        rt = self._type(node.child_by_field_name("type"))
        if rt is not None:
            self.used_types.append(rt)
        name = node.child_by_field_name("name")
        if name is not None:
            self.declare(_text(name), rt)
        body = node.child_by_field_name("body")
        if body is not None:
            self.visit(body)
        self.scopes.pop()

    def _v_catch_clause(self, node: Node) -> None:
        self.scopes.append({})
        for c in node.named_children:
            if c.type == "catch_formal_parameter":
                ctype = next((x for x in c.named_children if x.type == "catch_type"), None)
                first = ctype.named_children[0] if ctype is not None and ctype.named_children else None
                self.declare(_text(c.child_by_field_name("name")), self._type(first))
            else:
                self.visit(c)
        self.scopes.pop()

    def _v_try_with_resources_statement(self, node: Node) -> None:
        self.scopes.append({})
        for c in node.named_children:
            if c.type == "resource_specification":
                for r in c.named_children:
                    if r.type == "resource" and r.child_by_field_name("name") is not None:
                        rt = self._type(r.child_by_field_name("type"))
                        value = r.child_by_field_name("value")
                        if value is not None:
                            self.visit(value)
                        if rt is not None:
                            self.used_types.append(rt)
                        self.declare(_text(r.child_by_field_name("name")), rt)
                    else:
                        self.visit(r)
            else:
                self.visit(c)
        self.scopes.pop()

    def _v_local_variable_declaration(self, node: Node) -> None:
        tnode = node.child_by_field_name("type")
        declared = None if _text(tnode) == "var" else self._type(tnode)
        if declared is not None:
            self.used_types.append(declared)
        for d in node.children_by_field_name("declarator"):
            value = d.child_by_field_name("value")
            rt = declared
            if value is not None:
                self.visit(value)
                if _text(tnode) == "var" and value.type in ("object_creation_expression", "cast_expression"):
                    rt = self._type(value.child_by_field_name("type"))
            self.declare(_text(d.child_by_field_name("name")), rt)

    def _v_lambda_expression(self, node: Node) -> None:
        self.scopes.append({})
        params = node.child_by_field_name("parameters")
        if params is not None:
            if params.type == "identifier":
                self.declare(_text(params), None)
            for p in params.named_children:
                if p.type == "identifier":
                    self.declare(_text(p), None)
                elif p.type in ("formal_parameter", "spread_parameter"):
                    name = p.child_by_field_name("name")
                    if name is None:
                        d = next((x for x in p.named_children if x.type == "variable_declarator"), None)
                        name = d.child_by_field_name("name") if d is not None else None
                    self.declare(_text(name), self._type(p.child_by_field_name("type")))
        body = node.child_by_field_name("body")
        if body is not None:
            self.visit(body)
        self.scopes.pop()

    def _v_instanceof_expression(self, node: Node) -> None:
        left = node.child_by_field_name("left")
        if left is not None:
            self.visit(left)
        name = node.child_by_field_name("name")
        if name is not None:
            self.declare(_text(name), self._type(node.child_by_field_name("right")))

    def _v_object_creation_expression(self, node: Node) -> None:
        rt = self._type(node.child_by_field_name("type"))
        if rt is not None:
            self.created.append(rt)
        for c in node.named_children:
            if c.type == "class_body":
                self.fp.anonymous_class(c, rt, self.rc.qualified_name, self.tv, self.local_types, self.visible())
            elif c.type in ("argument_list",) or c == node.child_by_field_name("object"):
                self.visit(c)

    def _call(self, node: Node) -> RawCall:
        obj = node.child_by_field_name("object")
        return RawCall(
            self.expr(obj) if obj is not None else None,
            _text(node.child_by_field_name("name")),
            _arg_count(node.child_by_field_name("arguments")),
            _line(node),
        )

    def _v_method_invocation(self, node: Node) -> None:
        self.calls.append(self._call(node))
        obj = node.child_by_field_name("object")
        if obj is not None and obj.type not in ("this", "super"):
            self.visit(obj)
        args = node.child_by_field_name("arguments")
        if args is not None:
            self.visit(args)

    def _v_method_reference(self, node: Node) -> None:
        kids = node.named_children
        if not kids:
            return
        target = kids[0]
        last = node.children[-1]
        if last.type == "identifier":
            self.calls.append(RawCall(self.expr(target), _text(last), -1, _line(node)))
        if target.type not in ("this", "super") and target.type not in (
            "type_identifier", "scoped_type_identifier", "generic_type", "array_type"
        ):
            self.visit(target)

    def _v_field_access(self, node: Node) -> None:
        obj = node.child_by_field_name("object")
        fld = node.child_by_field_name("field")
        if fld is None or fld.type in ("this", "super"):
            return
        self.field_uses.append(RawFieldUse(self.expr(obj), _text(fld), _line(node)))
        if obj is not None and obj.type not in ("this", "super"):
            self.visit(obj)

    def _v_explicit_constructor_invocation(self, node: Node) -> None:
        for c in node.named_children:
            if c.type == "argument_list" or c == node.child_by_field_name("object"):
                self.visit(c)

    def _v_labeled_statement(self, node: Node) -> None:
        for c in node.named_children:
            if c.type != "identifier":
                self.visit(c)

    def _v_cast_expression(self, node: Node) -> None:
        value = node.child_by_field_name("value")
        if value is not None:
            self.visit(value)

    def _skip(self, node: Node) -> None:
        pass

    _v_break_statement = _skip
    _v_continue_statement = _skip
    _v_annotation = _skip
    _v_marker_annotation = _skip
    _v_class_literal = _skip

    # -- receiver expressions -----------------------------------------

    def expr(self, node: Node | None) -> Expr:
        if node is None:
            return UnknownExpr()
        t = node.type
        if t == "this":
            return ThisExpr()
        if t == "super":
            return SuperExpr()
        if t == "identifier":
            name = _text(node)
            found, rt = self.lookup(name)
            return TypedExpr(rt) if found else NameExpr(name)
        if t == "field_access":
            obj = node.child_by_field_name("object")
            fld = node.child_by_field_name("field")
            if fld is not None and fld.type == "this":
                return ThisExpr(_text(obj))
            if fld is not None and fld.type == "super":
                return SuperExpr()
            return FieldOfExpr(self.expr(obj), _text(fld))
        if t == "method_invocation":
            return CallOfExpr(self._call(node))
        if t in ("object_creation_expression", "cast_expression"):
            return TypedExpr(self._type(node.child_by_field_name("type")))
        if t == "parenthesized_expression":
            inner = [c for c in node.named_children if c.type not in COMMENTS]
            return self.expr(inner[0]) if inner else UnknownExpr()
        if t == "string_literal":
            return TypedExpr(RawType("String"))
        if t in ("type_identifier", "scoped_type_identifier", "generic_type"):
            return TypedExpr(self._type(node))
        return UnknownExpr()


_PARSER: Parser | None = None


def _get_parser() -> Parser:
    global _PARSER
    if _PARSER is None:
        _PARSER = Parser(JAVA)
    return _PARSER


def parse_source(text: str, path: str = "<memory>", version_id: str = "",
                 lenient: bool = False) -> ParsedFile:
    """Parse one compilation unit given as text."""
    source = text.encode("utf-8")
    tree = _get_parser().parse(source)
    root = tree.root_node
    lines = physical_line_count(text)
    if root.has_error and not lenient:
        bad = _first_error(root)
        where = f" near line {_line(bad)}" if bad is not None else ""
        return ParsedFile(SourceUnit(path, version_id, lines, "failed", f"syntax error{where}"))
    fp = _FileParser(source, text)
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 20000))
    try:
        fp.run(root)
    finally:
        sys.setrecursionlimit(limit)
    status = "partial" if root.has_error else "ok"
    return ParsedFile(SourceUnit(path, version_id, lines, status), fp.package, fp.imports, fp.classes)


def _first_error(node: Node) -> Node | None:
    if node.type == "ERROR" or node.is_missing:
        return node
    for c in node.children:
        if c.has_error:
            found = _first_error(c)
            if found is not None:
                return found
    return None


def parse_file(path: Path, rel_path: str, version_id: str = "", lenient: bool = False) -> ParsedFile:
    try:
        text, _ = read_source(path)
    except OSError as exc:
        log.warning("cannot read %s: %s", rel_path, exc)
        return ParsedFile(SourceUnit(rel_path, version_id, 0, "failed", str(exc)))
    parsed = parse_source(text, rel_path, version_id, lenient)
    if parsed.unit.parse_status != "ok":
        log.warning("%s: %s (%s)", rel_path, parsed.unit.parse_status, parsed.unit.message or "recovered")
    return parsed


def _is_excluded(rel: str, excludes: Iterable[str]) -> bool:
    for pat in excludes:
        pat = pat.rstrip("/")
        if fnmatch.fnmatch(rel, pat) or fnmatch.fnmatch(rel, pat + "/*"):
            return True
    return False


def java_files(root: Path, excludes: Iterable[str] = ()) -> list[tuple[Path, str]]:
    """Sorted ``(path, relative posix path)`` pairs of non-excluded ``.java`` files."""
    excludes = list(excludes)
    out = []
    for p in root.rglob("*.java"):
        if not p.is_file():
            continue
        rel = p.relative_to(root).as_posix()
        if not _is_excluded(rel, excludes):
            out.append((p, rel))
    return sorted(out, key=lambda x: x[1])


def _parse_job(args: tuple[Path, str, str, bool]) -> ParsedFile:
    return parse_file(*args)


def parse_source_tree(root: str | Path, excludes: Iterable[str] = (), version_id: str = "",
                      jobs: int = 1, lenient: bool = False) -> ParsedTree:
    """Parse every non-excluded ``.java`` file below ``root``.

    Raises :class:`SourceTreeError` if ``root`` is not a readable directory.
    Individual files that fail to parse are kept as failed units and skipped.
    """
    root = Path(root)
    if not root.is_dir():
        raise SourceTreeError(f"source directory not found: {root}")
    try:
        files = java_files(root, excludes)
    except OSError as exc:
        raise SourceTreeError(f"cannot read source directory {root}: {exc}") from exc
    jobs_args = [(p, rel, version_id, lenient) for p, rel in files]
    if jobs > 1 and len(jobs_args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parsed = list(pool.map(_parse_job, jobs_args, chunksize=8))
    else:
        parsed = [_parse_job(a) for a in jobs_args]
    return ParsedTree(version_id, parsed)

