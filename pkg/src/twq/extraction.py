"""Source snapshots and construction (mapping) functions.

A mapping is an expression tree over source classes built from PROJECT,
SELECT, JOIN and the set combinators UNION/INTERSECT/DIFFERENCE. Evaluation
binds range variables to source objects; every output row keeps the tuple of
source keys it was built from, which is what gives warehouse objects a stable
identity across refreshes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence, Union

from twq.algebra import predicates as P
from twq.chrono import Instant
from twq.errors import (
    PredicateTypeError,
    SnapshotError,
    UnknownAttribute,
    UnknownSourceClass,
    UnresolvedReference,
)
from twq.model import Diagnostic, SourceInterface, WarehouseClass
from twq.names import resolve
from twq.values import Record, Ref, freeze


# -- snapshots ----------------------------------------------------------------

@dataclass(frozen=True)
class Link:
    """Value of a relationship: the source keys it points to."""

    keys: tuple[str, ...]
    target: str = ""

    def __eq__(self, other: object) -> bool:
        if isinstance(other, SourceObject):
            return other.key in self.keys and (not self.target or other.source_class == self.target)
        if isinstance(other, Link):
            return self.keys == other.keys
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.keys)


@dataclass(frozen=True)
class SourceObject:
    source_class: str
    key: str
    attributes: Record = field(default_factory=Record)
    relationships: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def lookup(self, name: str) -> Any:
        key = resolve(name, self.attributes.keys())
        if key is not None:
            return self.attributes[key]
        rels = dict(self.relationships)
        rel = resolve(name, rels.keys())
        if rel is not None:
            return Link(rels[rel])
        raise UnknownAttribute(f"{self.source_class} {self.key!r} has no attribute {name!r}")


@dataclass(frozen=True)
class SourceSnapshot:
    objects: tuple[SourceObject, ...]
    timestamp: Optional[Instant] = None

    def __post_init__(self) -> None:
        seen = set()
        for o in self.objects:
            ident = (o.source_class, o.key)
            if ident in seen:
                raise SnapshotError(f"duplicate source object {o.source_class}/{o.key}")
            seen.add(ident)

    def of_class(self, name: str) -> list[SourceObject]:
        return [o for o in self.objects if o.source_class == name]

    @property
    def class_names(self) -> set[str]:
        return {o.source_class for o in self.objects}

    def check_references(self) -> None:
        keys = {o.key for o in self.objects}
        for o in self.objects:
            for rel, targets in o.relationships:
                for k in targets:
                    if k not in keys:
                        raise UnresolvedReference(
                            f"{o.source_class}/{o.key}.{rel} points to missing key {k!r}")


def parse_snapshot(lines: Iterable[str], timestamp: Optional[Instant] = None) -> SourceSnapshot:
    """Read line-delimited JSON records ``{"class", "key", "attributes", "relationships"}``."""
    objects = []
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SnapshotError(f"line {lineno}: {exc}") from None
        if not isinstance(rec, dict) or "class" not in rec or "key" not in rec:
            raise SnapshotError(f"line {lineno}: record needs 'class' and 'key'")
        rels = []
        for name, target in (rec.get("relationships") or {}).items():
            targets = (target,) if isinstance(target, str) else tuple(target)
            rels.append((name, tuple(str(t) for t in targets)))
        objects.append(SourceObject(
            rec["class"], str(rec["key"]), freeze(rec.get("attributes") or {}), tuple(rels)))
    snap = SourceSnapshot(tuple(objects), timestamp)
    snap.check_references()
    return snap


def load_snapshot(path: str | Path, timestamp: Optional[Instant] = None) -> SourceSnapshot:
    with open(path, encoding="utf-8") as fh:
        return parse_snapshot(fh, timestamp)


def dump_snapshot(snapshot: SourceSnapshot) -> str:
    from twq.values import thaw

    out = []
    for o in snapshot.objects:
        rec = {"class": o.source_class, "key": o.key, "attributes": thaw(o.attributes),
               "relationships": {n: list(t) if len(t) != 1 else t[0] for n, t in o.relationships}}
        out.append(json.dumps(rec, ensure_ascii=False))
    return "\n".join(out) + ("\n" if out else "")


# -- mapping expressions ------------------------------------------------------

@dataclass(frozen=True)
class Source:
    var: str
    class_name: str


@dataclass(frozen=True)
class Project:
    child: "MappingExpr"
    assignments: tuple[tuple[str, P.AttrRef], ...]
    alias: str = ""


@dataclass(frozen=True)
class Select:
    child: "MappingExpr"
    predicate: P.Expr


@dataclass(frozen=True)
class Join:
    left: "MappingExpr"
    right: "MappingExpr"
    predicate: P.Expr


@dataclass(frozen=True)
class SetOp:
    op: str  # UNION | INTERSECT | DIFFERENCE
    left: "MappingExpr"
    right: "MappingExpr"


MappingExpr = Union[Source, Project, Select, Join, SetOp]


class _RowView:
    """The whole binding seen as one element (a PROJECT alias)."""

    def __init__(self, env: Mapping[str, Any]):
        self._env = env

    def lookup(self, name: str) -> Any:
        hits = []
        for obj in self._env.values():
            if isinstance(obj, SourceObject):
                try:
                    hits.append(obj.lookup(name))
                except UnknownAttribute:
                    pass
        if not hits:
            raise UnknownAttribute(f"no bound object has attribute {name!r}")
        if len(hits) > 1:
            raise PredicateTypeError(f"attribute {name!r} is ambiguous in the binding")
        return hits[0]


@dataclass
class _Row:
    keys: tuple[str, ...]
    env: dict
    value: Optional[Record] = None


def _link_value(v: Any) -> Any:
    if isinstance(v, Link):
        refs = tuple(Ref(k) for k in v.keys)
        return refs[0] if len(refs) == 1 else refs
    return v


def _rows(m: MappingExpr, snap: SourceSnapshot, catalog: Optional[Sequence[SourceInterface]]) -> list[_Row]:
    if isinstance(m, Source):
        if catalog is not None and resolve(m.class_name, [c.name for c in catalog]) is None:
            raise UnknownSourceClass(f"unknown source class {m.class_name}")
        name = resolve(m.class_name, snap.class_names) or m.class_name
        return [_Row((o.key,), {m.var: o}) for o in snap.of_class(name)]
    if isinstance(m, Select):
        return [r for r in _rows(m.child, snap, catalog) if P.holds(m.predicate, r.env)]
    if isinstance(m, Join):
        left = _rows(m.left, snap, catalog)
        right = _rows(m.right, snap, catalog)
        out = []
        for a in left:
            for b in right:
                env = {**a.env, **b.env}
                if P.holds(m.predicate, env):
                    out.append(_Row(a.keys + b.keys, env))
        return out
    if isinstance(m, Project):
        out = []
        for r in _rows(m.child, snap, catalog):
            env = dict(r.env)
            if m.alias:
                env[m.alias] = _RowView(r.env)
            value = Record((target, _link_value(P.value_of(ref, env))) for target, ref in m.assignments)
            out.append(_Row(r.keys, env, value))
        return out
    if isinstance(m, SetOp):
        left = _rows(m.left, snap, catalog)
        right_keys = {r.keys for r in _rows(m.right, snap, catalog)}
        if m.op == "UNION":
            left_keys = {r.keys for r in left}
            extra = [r for r in _rows(m.right, snap, catalog) if r.keys not in left_keys]
            return left + extra
        if m.op == "INTERSECT":
            return [r for r in left if r.keys in right_keys]
        if m.op == "DIFFERENCE":
            return [r for r in left if r.keys not in right_keys]
        raise ValueError(f"unknown set combinator {m.op}")
    raise TypeError(f"not a mapping expression: {m!r}")


def _default_value(row: _Row) -> Record:
    objs = [o for o in row.env.values() if isinstance(o, SourceObject)]
    if len(objs) == 1:
        return objs[0].attributes
    merged: dict[str, Any] = {}
    for var, o in row.env.items():
        if isinstance(o, SourceObject):
            for k, v in o.attributes.items():
                merged[f"{var}.{k}"] = v
    return Record(merged)


def evaluate_mapping(
    m: MappingExpr,
    snapshot: SourceSnapshot,
    catalog: Optional[Sequence[SourceInterface]] = None,
) -> list[tuple[tuple[str, ...], Record]]:
    """Rows ``(source keys, value)`` produced by a mapping, sorted by keys."""
    rows = _rows(m, snapshot, catalog)
    out = {}
    for r in rows:
        out.setdefault(r.keys, r.value if r.value is not None else _default_value(r))
    return sorted(out.items())


# -- validation ---------------------------------------------------------------

def _scope(m: MappingExpr, catalog: Sequence[SourceInterface], out: list[Diagnostic]) -> dict:
    """Variables bound by ``m`` mapped to their source interface (None if unknown)."""
    if isinstance(m, Source):
        key = resolve(m.class_name, [c.name for c in catalog])
        if key is None:
            out.append(Diagnostic("unknown-source", f"unknown source class {m.class_name}"))
            return {m.var: None}
        return {m.var: next(c for c in catalog if c.name == key)}
    if isinstance(m, Select):
        scope = _scope(m.child, catalog, out)
        _check_predicate(m.predicate, scope, out)
        return scope
    if isinstance(m, Join):
        scope = {**_scope(m.left, catalog, out), **_scope(m.right, catalog, out)}
        _check_predicate(m.predicate, scope, out)
        return scope
    if isinstance(m, Project):
        scope = _scope(m.child, catalog, out)
        inner = dict(scope)
        if m.alias:
            inner[m.alias] = ("alias", scope)
        for _, ref in m.assignments:
            _check_ref(ref, inner, out)
        return scope
    if isinstance(m, SetOp):
        left = _scope(m.left, catalog, out)
        _scope(m.right, catalog, out)
        return left
    return {}


def _resolve_ref(ref: P.AttrRef, scope: dict) -> tuple[str, Any]:
    """Classify a reference: ('object', iface) | ('attr', Attribute) | ('unknown', msg)."""
    if ref.var not in scope:
        return "unknown", f"unbound variable {ref.var}"
    target = scope[ref.var]
    if not ref.path:
        return "object", target
    if isinstance(target, tuple) and target[0] == "alias":
        candidates = [i for i in target[1].values() if i is not None]
        hits = []
        for iface in candidates:
            key = resolve(ref.path[0], iface.attribute_names)
            if key is not None:
                hits.append(iface.attribute(key))
        if not candidates:
            return "attr", None
        if len(hits) != 1:
            what = "unknown" if not hits else "ambiguous"
            return "unknown", f"{what} attribute {ref.path[0]} in {ref.var}"
        return "attr", hits[0]
    if target is None:
        return "attr", None
    key = resolve(str(ref.path[0]), target.attribute_names)
    if key is None:
        return "unknown", f"{target.name} has no attribute {ref.path[0]}"
    return "attr", target.attribute(key)


def _check_ref(ref: P.AttrRef, scope: dict, out: list[Diagnostic]) -> tuple[str, Any]:
    kind, info = _resolve_ref(ref, scope)
    if kind == "unknown":
        out.append(Diagnostic("unknown-attribute", info, str(ref)))
    elif kind == "attr" and info is not None and len(ref.path) > 1:
        t = info.type
        for step in ref.path[1:]:
            if isinstance(step, int) and t.kind == "list":
                t = t.elem
            elif isinstance(step, str) and t.kind == "struct":
                names = [n for n, _ in t.fields]
                key = resolve(step, names)
                if key is None:
                    out.append(Diagnostic("unknown-attribute", f"no field {step}", str(ref)))
                    break
                t = dict(t.fields)[key]
            else:
                out.append(Diagnostic("bad-path", f"cannot apply {step!r} to {t.describe()}", str(ref)))
                break
    return kind, info


def _check_predicate(pred: P.Expr, scope: dict, out: list[Diagnostic]) -> None:
    if isinstance(pred, (P.And, P.Or)):
        for p in pred.items:
            _check_predicate(p, scope, out)
        return
    if isinstance(pred, P.Not):
        _check_predicate(pred.item, scope, out)
        return
    if isinstance(pred, P.Compare):
        sides = []
        for side in (pred.left, pred.right):
            if isinstance(side, P.AttrRef):
                sides.append(_check_ref(side, scope, out))
            else:
                sides.append(("literal", None))
        rel = [s for s in sides if s[0] == "attr" and s[1] is not None and s[1].relationship]
        if rel:
            other = sides[1] if sides[0] in rel else sides[0]
            if len(rel) == 2 or other[0] != "object":
                out.append(Diagnostic(
                    "relationship-compare", "relationship compared to a non-object operand"))
            elif other[1] is not None and rel[0][1].type.name and \
                    resolve(rel[0][1].type.name, [other[1].name]) is None:
                out.append(Diagnostic(
                    "relationship-compare",
                    f"relationship targets {rel[0][1].type.name}, operand is {other[1].name}"))
        elif any(s[0] == "object" for s in sides):
            out.append(Diagnostic("object-compare", "object compared to a non-relationship operand"))
        return
    for ref in P.attr_refs(pred):
        _check_ref(ref, scope, out)


def validate_mapping(
    m: MappingExpr,
    catalog: Sequence[SourceInterface],
    target: Optional[WarehouseClass] = None,
) -> list[Diagnostic]:
    """Static checks of a mapping against the source catalog (and target class)."""
    out: list[Diagnostic] = []
    _scope(m, catalog, out)
    if target is not None:
        top = m
        while isinstance(top, (Select, SetOp)):
            top = top.child if isinstance(top, Select) else top.left
        if isinstance(top, Project):
            produced = [t for t, _ in top.assignments]
            for t in produced:
                if resolve(t, target.attribute_names) is None:
                    out.append(Diagnostic(
                        "mapping-target", f"projection target {t} is not an attribute of {target.name}"))
            for a in target.attribute_names:
                if resolve(a, produced) is None:
                    out.append(Diagnostic(
                        "mapping-target", f"attribute {a} of {target.name} is not produced"))
    return out
