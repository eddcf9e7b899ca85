"""Classical, state-access and temporal operators over object and state sets."""

from __future__ import annotations

from typing import Any, Callable, Iterable, Optional, Sequence, Union

from twq import chrono
from twq.algebra import predicates as P
from twq.algebra.collections import (
    Collection,
    GroupTuple,
    JoinRow,
    Kind,
    element_value,
    objects,
    states,
    unit_of_states,
)
from twq.chrono import AllenRelation, Duration, Instant, TemporalDomain, TemporalUnit
from twq.errors import (
    IdentityOnStates,
    KindMismatch,
    MixedUnits,
    NotCoarser,
    UnknownAttribute,
)
from twq.model import Role, State, WarehouseObject
from twq.names import resolve
from twq.values import Record, sort_key

Predicate = Union[P.Expr, Callable[[dict], bool]]


def _test(pred: Predicate, env: dict) -> bool:
    if callable(pred):
        return bool(pred(env))
    return P.holds(pred, env)


# -- set operators ------------------------------------------------------------

def _value_key(e: Any) -> Any:
    if isinstance(e, WarehouseObject):
        return ("object", e.class_name, e.current, e.since, e.past, e.archive)
    if isinstance(e, State):
        return ("state", e.value, e.domain)
    return ("other", e)


def _dedupe(items: Iterable[Any], key: Callable[[Any], Any]) -> tuple:
    seen = set()
    out = []
    for e in items:
        k = key(e)
        if k not in seen:
            seen.add(k)
            out.append(e)
    return tuple(out)


def set_combine(op: str, eq: str, a: Collection, b: Collection) -> Collection:
    """Union/intersection/difference under value or identity equality."""
    if a.kind is not b.kind:
        raise KindMismatch(f"cannot combine {a.kind.value} with {b.kind.value}")
    if eq == "identity":
        if a.kind is Kind.STATES:
            raise IdentityOnStates("identity equality is only defined on objects")
        a.expect(Kind.OBJECTS, op=f"I{op}")
        key = lambda o: o.oid  # noqa: E731
    elif eq == "value":
        a.expect(Kind.OBJECTS, Kind.STATES, Kind.TUPLES, op=f"V{op}")
        key = _value_key
    else:
        raise ValueError(f"unknown equality {eq!r}")
    op = op.lower()
    right = {key(e) for e in b}
    if op == "union":
        items = a.items + b.items
    elif op == "intersect":
        items = tuple(e for e in a if key(e) in right)
    elif op == "difference":
        items = tuple(e for e in a if key(e) not in right)
    else:
        raise ValueError(f"unknown set operator {op!r}")
    return Collection(a.kind, _dedupe(items, key))


def flatten(a: Collection) -> Collection:
    a.expect(Kind.STATE_SETS, Kind.OBJECT_SETS, op="Flatten")
    kind = Kind.STATES if a.kind is Kind.STATE_SETS else Kind.OBJECTS
    return Collection(kind, tuple(e for inner in a for e in inner))


def dup_elim(a: Collection) -> Collection:
    a.expect(Kind.OBJECTS, Kind.STATES, Kind.TUPLES, op="DupElim")
    return Collection(a.kind, _dedupe(a.items, _value_key))


def empty_elim(a: Collection) -> Collection:
    a.expect(Kind.STATE_SETS, Kind.OBJECT_SETS, op="EmptyElim")
    return Collection(a.kind, tuple(inner for inner in a if inner))


# -- select / project / join / nest ------------------------------------------

def select(a: Collection, var: str, pred: Predicate) -> Collection:
    a.expect(Kind.OBJECTS, Kind.STATES, Kind.TUPLES, op="Select")
    return Collection(a.kind, tuple(e for e in a if _test(pred, {var: e})))


def _is_domain_ref(ref: P.AttrRef) -> bool:
    return len(ref.path) == 1 and ref.path[0] == P.DOMAIN_ATTR


def _project_record(e: Any, var: str, attrs: Sequence[tuple[str, P.AttrRef]], strict: bool) -> Record:
    out = []
    for alias, ref in attrs:
        if _is_domain_ref(ref):
            continue
        if ref.var != var:
            raise UnknownAttribute(f"projection references {ref.var}, expected {var}")
        try:
            out.append((alias, P.follow(e, ref.path)))
        except UnknownAttribute:
            if strict:
                raise
    return Record(out)


def project(a: Collection, var: str, attrs: Sequence[tuple[str, P.AttrRef]]) -> Collection:
    """Keep the listed attributes; state domains are always kept."""
    a.expect(Kind.OBJECTS, Kind.STATES, Kind.TUPLES, op="Project")
    out = []
    for e in a:
        if isinstance(e, State):
            out.append(State(_project_record(e, var, attrs, True), e.domain, e.role, e.owner))
        elif isinstance(e, WarehouseObject):
            def proj(s: State) -> State:
                return State(_project_record(s, var, attrs, False), s.domain, s.role, s.owner)

            out.append(e.replace(
                current=_project_record(e, var, attrs, True),
                past=tuple(proj(s) for s in e.past),
                archive=tuple(proj(s) for s in e.archive),
            ))
        else:
            out.append(JoinRow(_project_record(e, var, attrs, True),
                               getattr(e, "left", None), getattr(e, "right", None)))
    return Collection(a.kind, tuple(out))


def concat_values(left: Record, right: Record) -> Record:
    """Concatenate two records, prefixing clashing names with left./right."""
    clash = set(left) & set(right)
    items = [(f"left.{k}" if k in clash else k, v) for k, v in left.items()]
    items += [(f"right.{k}" if k in clash else k, v) for k, v in right.items()]
    return Record(items)


def join(a: Collection, a_var: str, b: Collection, b_var: str, pred: Predicate) -> Collection:
    """Non-temporal join: concatenated values of every satisfying pair."""
    a.expect(Kind.OBJECTS, Kind.STATES, op="Join")
    b.expect(Kind.OBJECTS, Kind.STATES, op="Join")
    rows = []
    for x in a:
        for y in b:
            if _test(pred, {a_var: x, b_var: y}):
                rows.append(JoinRow(concat_values(element_value(x), element_value(y)), x, y))
    return Collection(Kind.TUPLES, tuple(rows))


def nest(a: Collection, attr: str) -> Collection:
    """Group states by their remaining attributes and domain; ``attr`` becomes set-valued."""
    a.expect(Kind.STATES, op="Nest")
    groups: dict = {}
    order = []
    for s in a:
        key_name = resolve(attr, s.value.keys())
        if key_name is None:
            raise UnknownAttribute(f"state has no attribute {attr!r}")
        rest = s.value.without([key_name])
        k = (rest, s.domain, s.role, s.owner, key_name)
        if k not in groups:
            groups[k] = []
            order.append(k)
        if s.value[key_name] not in groups[k]:
            groups[k].append(s.value[key_name])
    out = []
    for k in order:
        rest, domain, role, owner, key_name = k
        vals = tuple(sorted(groups[k], key=sort_key))
        out.append(State(rest.merged({key_name: vals}), domain, role, owner))
    return states(out)


def unnest(a: Collection, attr: str) -> Collection:
    a.expect(Kind.STATES, op="UnNest")
    out = []
    for s in a:
        key_name = resolve(attr, s.value.keys())
        if key_name is None:
            raise UnknownAttribute(f"state has no attribute {attr!r}")
        vals = s.value[key_name]
        if not isinstance(vals, tuple):
            raise KindMismatch(f"attribute {attr!r} is not set-valued")
        for v in vals:
            out.append(State(s.value.merged({key_name: v}), s.domain, s.role, s.owner))
    return states(out)


# -- state access -------------------------------------------------------------

def _by_time(items: Iterable[State]) -> tuple[State, ...]:
    return tuple(sorted(items, key=lambda s: (s.domain.spans[0][0] if s.domain.spans else 0,
                                              sort_key(s.value))))


def current(objs: Collection, as_of: Optional[Instant] = None) -> Collection:
    objs.expect(Kind.OBJECTS, op="Current")
    return states(o.current_state(as_of) for o in objs)


def past(objs: Collection) -> Collection:
    objs.expect(Kind.OBJECTS, op="Past")
    return Collection(Kind.STATE_SETS, tuple(_by_time(o.past) for o in objs))


def archive(objs: Collection) -> Collection:
    objs.expect(Kind.OBJECTS, op="Archive")
    return Collection(Kind.STATE_SETS, tuple(_by_time(o.archive) for o in objs))


def all_states(objs: Collection, as_of: Optional[Instant] = None) -> Collection:
    objs.expect(Kind.OBJECTS)
    out = []
    for o in objs:
        out.append(o.current_state(as_of))
        out.extend(_by_time(o.past))
        out.extend(_by_time(o.archive))
    return states(out)


RestrictRelation = Union[AllenRelation, str]


def restriction_test(rel: RestrictRelation) -> Callable[[TemporalDomain, TemporalDomain], bool]:
    """Test applied as ``test(state_domain, window)``.

    ``during`` is inclusive containment of the state domain in the window;
    ``strict_during`` and every other name use the Allen relation formulas.
    """
    if isinstance(rel, str):
        key = rel.strip().lower()
        if key == "during":
            return lambda d, t: chrono.contains(t, d)
        if key in ("strict_during", "strictduring"):
            rel = AllenRelation.DURING
        elif key == "contains":
            return lambda d, t: chrono.contains(d, t)
        else:
            rel = AllenRelation.parse(rel)
    return lambda d, t: chrono.allen_relate(d, t, rel)


def state_restrict(e: Collection, window: TemporalDomain, rel: RestrictRelation,
                   as_of: Optional[Instant] = None) -> Collection:
    """Keep the states whose domain stands in ``rel`` with ``window``."""
    if e.kind is Kind.OBJECTS:
        e = all_states(e, as_of)
    e.expect(Kind.STATES, op="State")
    test = restriction_test(rel)
    unit = unit_of_states(e)
    if unit is not None and window.unit is not None and unit is not window.unit:
        raise MixedUnits(f"window unit {window.unit.value} differs from states' {unit.value}")
    if window.is_empty():
        return states(())
    return states(s for s in e if s.domain and test(s.domain, window))


# -- temporal joins -----------------------------------------------------------

def _temporal_join(e1: Collection, v1: str, e2: Collection, v2: str, pred: Predicate,
                   combine: Callable[[TemporalDomain, TemporalDomain], TemporalDomain],
                   op: str) -> Collection:
    e1.expect(Kind.STATES, op=op)
    e2.expect(Kind.STATES, op=op)
    u1, u2 = unit_of_states(e1), unit_of_states(e2)
    if u1 is not None and u2 is not None and u1 is not u2:
        raise MixedUnits(f"{op} operands use {u1.value} and {u2.value}")
    acc: dict[Record, TemporalDomain] = {}
    for s1 in e1:
        for s2 in e2:
            common = chrono.domain_intersect(s1.domain, s2.domain)
            if common.is_empty():
                continue
            if not _test(pred, {v1: s1, v2: s2}):
                continue
            val = concat_values(s1.value, s2.value)
            dom = combine(s1.domain, s2.domain)
            acc[val] = chrono.domain_union(acc[val], dom) if val in acc else dom
    out = [State(v, d, Role.DERIVED) for v, d in acc.items()]
    return states(_by_time(out))


def ijoin(e1: Collection, e2: Collection, pred: Predicate,
          v1: str = "left", v2: str = "right") -> Collection:
    """Join on the intersection of domains, grouped by concatenated value."""
    return _temporal_join(e1, v1, e2, v2, pred, chrono.domain_intersect, "IJoin")


def ujoin(e1: Collection, e2: Collection, pred: Predicate,
          v1: str = "left", v2: str = "right") -> Collection:
    """Join pairs that meet on some grain; the result spans the union of both domains."""
    return _temporal_join(e1, v1, e2, v2, pred, chrono.domain_union, "UJoin")


# -- temporal grouping --------------------------------------------------------

def _group(e: Collection, windows_of: Callable[[int, int], range],
           window_domain: Callable[[int], TemporalDomain]) -> Collection:
    members: dict[int, list[State]] = {}
    for s in _by_time(e):
        hit = set()
        for lo, hi in s.domain.spans:
            hit.update(windows_of(lo, hi))
        for w in hit:
            members.setdefault(w, []).append(s)
    out = [GroupTuple(window_domain(w), tuple(s.value for s in members[w])) for w in sorted(members)]
    return Collection(Kind.TUPLES, tuple(out))


def ugroup(e: Collection, unit: TemporalUnit) -> Collection:
    """Group states by the coarser-unit grains they intersect."""
    e.expect(Kind.STATES, op="UGroup")
    base = unit_of_states(e)
    if base is None:
        return Collection(Kind.TUPLES, ())
    if not unit.coarser_than(base):
        raise NotCoarser(f"{unit.value} is not coarser than {base.value}")

    def windows(lo: int, hi: int) -> range:
        return range(chrono.coarse_ordinal(base, lo, unit), chrono.coarse_ordinal(base, hi, unit) + 1)

    return _group(e, windows, lambda w: TemporalDomain(unit, ((w, w),)))


def dgroup(e: Collection, duration: Duration) -> Collection:
    """Group states by successive windows of ``duration`` from the earliest instant."""
    e.expect(Kind.STATES, op="DGroup")
    base = unit_of_states(e)
    if base is None:
        return Collection(Kind.TUPLES, ())
    if duration.unit is not base:
        raise MixedUnits(f"duration in {duration.unit.value}, states in {base.value}")
    origin = min(s.domain.spans[0][0] for s in e if s.domain)
    n = duration.count

    def windows(lo: int, hi: int) -> range:
        return range((lo - origin) // n, (hi - origin) // n + 1)

    return _group(e, windows, lambda w: TemporalDomain(base, ((origin + w * n, origin + w * n + n - 1),)))


def objects_of(items: Iterable[WarehouseObject]) -> Collection:
    return objects(sorted(items, key=lambda o: _oid_key(o.oid)))


def _oid_key(oid: str) -> tuple:
    digits = "".join(c for c in oid if c.isdigit())
    return (oid.rstrip("0123456789"), int(digits) if digits else -1, oid)


__all__ = [
    "set_combine", "flatten", "dup_elim", "empty_elim", "select", "project", "join",
    "nest", "unnest", "current", "past", "archive", "all_states", "state_restrict",
    "ijoin", "ujoin", "ugroup", "dgroup", "concat_values", "objects_of",
]
