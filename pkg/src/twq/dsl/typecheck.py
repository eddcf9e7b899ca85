"""Static checking of queries against a schema.

Every node gets an :class:`Info`: its collection kind and, where it can be
known, the attribute names its elements carry. Attribute references in
predicates, projections and aggregation specs are checked against those
names, so a query that typechecks cannot fail at run time on a kind or
attribute error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from twq.algebra import predicates as P
from twq.algebra.collections import Kind
from twq.dsl.query import Call, Name, Node, Query, Range, SIGNATURES
from twq.model import Diagnostic, WarehouseSchema
from twq.names import resolve

Shape = Optional[frozenset]

SET_KINDS = (Kind.OBJECTS, Kind.STATES, Kind.TUPLES)
NESTED = {Kind.STATE_SETS: Kind.STATES, Kind.OBJECT_SETS: Kind.OBJECTS}
STATE_OPS_OUT = {"Current": Kind.STATES, "Past": Kind.STATE_SETS, "Archive": Kind.STATE_SETS}
GROUP_SHAPE = frozenset({"domT", "values"})


@dataclass(frozen=True)
class Info:
    kind: Kind
    shape: Shape = None
    past: Shape = None  # objects only: structure of their past and archive states
    archive: Shape = None


@dataclass
class Typed:
    query: Query
    infos: dict = field(default_factory=dict)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.diagnostics

    @property
    def kind(self) -> Optional[Kind]:
        info = self.infos.get(self.query.result)
        return info.kind if info else None


class _Checker:
    def __init__(self, schema: WarehouseSchema, out: Typed):
        self.schema = schema
        self.out = out
        self.names: dict[str, Info] = {}

    def diag(self, code: str, message: str, node: Node) -> None:
        where = node.op if isinstance(node, Call) else getattr(node, "name", "")
        self.out.diagnostics.append(Diagnostic(code, message, where))

    # -- attribute checks --

    def _has(self, shape: Shape, name: str, extra: tuple[str, ...] = ()) -> bool:
        if shape is None:
            return True
        return resolve(name, tuple(shape) + extra) is not None

    def check_ref(self, ref: P.AttrRef, scope: dict[str, Info], node: Node) -> None:
        if ref.var not in scope:
            self.diag("unbound-variable", f"unbound variable {ref.var}", node)
            return
        info = scope[ref.var]
        if not ref.path:
            return
        first = ref.path[0]
        if isinstance(first, int):
            self.diag("bad-path", f"{ref}: cannot index an element", node)
            return
        extra: tuple[str, ...] = ()
        if info.kind is Kind.OBJECTS:
            extra = ("oid",)
        elif info.kind in (Kind.STATES, Kind.SERIES):
            extra = (P.DOMAIN_ATTR,)
        elif info.kind is Kind.TUPLES and info.shape != GROUP_SHAPE:
            extra = ("left", "right")
        if not self._has(info.shape, first, extra):
            self.diag("unknown-attribute", f"{ref}: no attribute {first!r} "
                      f"(available: {', '.join(sorted(info.shape))})", node)

    def check_pred(self, pred: P.Expr, scope: dict[str, Info], node: Node) -> None:
        for ref in P.attr_refs(pred):
            self.check_ref(ref, scope, node)

    def expect(self, info: Info, kinds: tuple[Kind, ...], node: Call, what: str = "") -> bool:
        if info.kind in kinds:
            return True
        names = " or ".join(k.value for k in kinds)
        self.diag("kind", f"{node.op}{what} expects {names}, got {info.kind.value}", node)
        return False

    # -- nodes --

    def name(self, node: Name) -> Optional[Info]:
        if node.name in self.names:
            return self.names[node.name]
        key = resolve(node.name, [c.name for c in self.schema.classes])
        if key is None:
            self.diag("unknown-name", f"unknown class or binding {node.name!r}", node)
            return None
        c = self.schema.cls(key)
        past = frozenset(c.temporal_filter.properties) if c.temporal_filter else None
        arch = frozenset(c.archive_filter.attributes) if c.archive_filter else None
        return Info(Kind.OBJECTS, frozenset(c.attribute_names), past, arch)

    def node(self, node: Node) -> Optional[Info]:
        info = self.name(node) if isinstance(node, Name) else self.call(node)
        if info is not None:
            self.out.infos[node] = info
        return info

    def call(self, node: Call) -> Optional[Info]:
        op, args = node.op, node.args
        shapes = SIGNATURES[op]
        subs = []
        for shape, a in zip(shapes, args):
            if shape == "expr":
                subs.append(self.node(a))
            elif shape == "range":
                subs.append(self.node(a.expr))
        if any(s is None for s in subs):
            return None
        return getattr(self, "op_" + op.lower())(node, *subs)

    def _scope(self, rng: Range, info: Info, default: str = "") -> dict[str, Info]:
        var = rng.var or default
        return {var: info} if var else {}

    def op_select(self, node: Call, a: Info) -> Optional[Info]:
        if not self.expect(a, SET_KINDS, node):
            return None
        self.check_pred(node.args[1], self._scope(node.args[0], a), node)
        return a

    def op_project(self, node: Call, a: Info) -> Optional[Info]:
        if not self.expect(a, SET_KINDS, node):
            return None
        rng, items = node.args
        scope = self._scope(rng, a)
        keep, past, arch = [], [], []
        for alias, ref in items:
            if ref.path == (P.DOMAIN_ATTR,):
                if ref.var not in scope:
                    self.diag("unbound-variable", f"unbound variable {ref.var}", node)
                continue
            self.check_ref(ref, scope, node)
            keep.append(alias)
            if ref.path and isinstance(ref.path[0], str):
                if a.past is not None and self._has(a.past, ref.path[0]):
                    past.append(alias)
                if a.archive is not None and self._has(a.archive, ref.path[0]):
                    arch.append(alias)
        if a.kind is Kind.OBJECTS:
            return Info(a.kind, frozenset(keep),
                        frozenset(past) if a.past is not None else None,
                        frozenset(arch) if a.archive is not None else None)
        return Info(a.kind, frozenset(keep))

    def _concat(self, x: Shape, y: Shape) -> Shape:
        if x is None or y is None:
            return None
        clash = x & y
        return frozenset({f"left.{k}" if k in clash else k for k in x}
                         | {f"right.{k}" if k in clash else k for k in y})

    def op_join(self, node: Call, a: Info, b: Info) -> Optional[Info]:
        ok = self.expect(a, (Kind.OBJECTS, Kind.STATES), node)
        ok = self.expect(b, (Kind.OBJECTS, Kind.STATES), node) and ok
        if not ok:
            return None
        scope = {**self._scope(node.args[0], a), **self._scope(node.args[1], b)}
        self.check_pred(node.args[2], scope, node)
        return Info(Kind.TUPLES, self._concat(a.shape, b.shape))

    def op_flatten(self, node: Call, a: Info) -> Optional[Info]:
        if not self.expect(a, tuple(NESTED), node):
            return None
        return Info(NESTED[a.kind], a.shape, a.past, a.archive)

    def op_dupelim(self, node: Call, a: Info) -> Optional[Info]:
        return a if self.expect(a, SET_KINDS, node) else None

    def op_emptyelim(self, node: Call, a: Info) -> Optional[Info]:
        return a if self.expect(a, tuple(NESTED), node) else None

    def _nest_attr(self, node: Call, a: Info) -> bool:
        if not self.expect(a, (Kind.STATES,), node):
            return False
        if not self._has(a.shape, node.args[1]):
            self.diag("unknown-attribute", f"no attribute {node.args[1]!r}", node)
            return False
        return True

    def op_nest(self, node: Call, a: Info) -> Optional[Info]:
        return a if self._nest_attr(node, a) else None

    def op_unnest(self, node: Call, a: Info) -> Optional[Info]:
        return a if self._nest_attr(node, a) else None

    def _setop(self, node: Call, a: Info, b: Info, identity: bool) -> Optional[Info]:
        kinds = (Kind.OBJECTS,) if identity else SET_KINDS
        ok = self.expect(a, kinds, node) and self.expect(b, kinds, node)
        if not ok:
            return None
        if a.kind is not b.kind:
            self.diag("kind", f"{node.op} combines {a.kind.value} with {b.kind.value}", node)
            return None
        shape = a.shape & b.shape if a.shape is not None and b.shape is not None else None
        if node.op.endswith("Union"):
            shape = a.shape if a.shape == b.shape else (
                shape if a.shape is not None and b.shape is not None else None)
        return Info(a.kind, shape)

    def op_vunion(self, node, a, b):
        return self._setop(node, a, b, False)

    op_vintersect = op_vdifference = op_vunion

    def op_iunion(self, node, a, b):
        return self._setop(node, a, b, True)

    op_iintersect = op_idifference = op_iunion

    def op_current(self, node: Call, a: Info) -> Optional[Info]:
        return Info(Kind.STATES, a.shape) if self.expect(a, (Kind.OBJECTS,), node) else None

    def op_past(self, node: Call, a: Info) -> Optional[Info]:
        if not self.expect(a, (Kind.OBJECTS,), node):
            return None
        return Info(Kind.STATE_SETS, a.past if a.past is not None else frozenset())

    def op_archive(self, node: Call, a: Info) -> Optional[Info]:
        if not self.expect(a, (Kind.OBJECTS,), node):
            return None
        return Info(Kind.STATE_SETS, a.archive if a.archive is not None else frozenset())

    def op_state(self, node: Call, a: Info) -> Optional[Info]:
        if not self.expect(a, (Kind.OBJECTS, Kind.STATES), node):
            return None
        if a.kind is Kind.STATES:
            return a
        shape = a.shape
        for extra in (a.past, a.archive):
            if extra is not None and shape is not None:
                shape = shape & extra
        return Info(Kind.STATES, shape)

    def _tjoin(self, node: Call, a: Info, b: Info) -> Optional[Info]:
        ok = self.expect(a, (Kind.STATES,), node)
        ok = self.expect(b, (Kind.STATES,), node) and ok
        if not ok:
            return None
        scope = {**self._scope(node.args[1], b, "right"), **self._scope(node.args[0], a, "left")}
        self.check_pred(node.args[2], scope, node)
        return Info(Kind.STATES, self._concat(a.shape, b.shape))

    op_ijoin = op_ujoin = _tjoin

    def op_ugroup(self, node: Call, a: Info) -> Optional[Info]:
        return Info(Kind.TUPLES, GROUP_SHAPE) if self.expect(a, (Kind.STATES,), node) else None

    op_dgroup = op_ugroup

    def op_makeserie(self, node: Call, a: Info) -> Optional[Info]:
        return Info(Kind.SERIES, a.shape) if self.expect(a, (Kind.STATES,), node) else None

    def _agg(self, node: Call, a: Info, entries, out_kind: Kind) -> Optional[Info]:
        if not self.expect(a, (Kind.SERIES,), node):
            return None
        for e in entries:
            if not self._has(a.shape, e.source):
                self.diag("unknown-attribute", f"series elements have no attribute {e.source!r}", node)
        return Info(out_kind, frozenset(e.attribute for e in entries))

    def op_agreg(self, node: Call, a: Info) -> Optional[Info]:
        return self._agg(node, a, node.args[1], Kind.VALUE)

    def op_acum(self, node: Call, a: Info) -> Optional[Info]:
        return self._agg(node, a, node.args[1], Kind.SERIES)

    def op_amove(self, node: Call, a: Info) -> Optional[Info]:
        return self._agg(node, a, node.args[1], Kind.SERIES)

    def op_scaleup(self, node: Call, a: Info) -> Optional[Info]:
        return self._agg(node, a, node.args[2], Kind.SERIES)

    def op_scaledown(self, node: Call, a: Info) -> Optional[Info]:
        return a if self.expect(a, (Kind.SERIES,), node) else None


def typecheck(q: Query, schema: WarehouseSchema) -> Typed:
    """Annotate every node with its kind; problems become diagnostics."""
    out = Typed(q)
    checker = _Checker(schema, out)
    for name, node in q.bindings:
        info = checker.node(node)
        if info is not None:
            checker.names[name] = info
    if not (isinstance(q.result, Name) and q.result.name in checker.names and
            q.bindings and q.result.name == q.bindings[-1][0]):
        checker.node(q.result)
    else:
        out.infos[q.result] = checker.names[q.result.name]
    return out
