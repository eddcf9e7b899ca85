"""Warehouse data model: states, warehouse objects, classes, environments, schema."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, Optional, Union

from twq import chrono
from twq.aggregate import AggregationFn, Summary
from twq.chrono import Instant, TemporalDomain, TemporalUnit
from twq.errors import MissingAttribute, TypeMismatch, UnknownAttribute
from twq.names import resolve
from twq.values import Record, Ref, is_number

if TYPE_CHECKING:
    from twq.algebra.predicates import Expr
    from twq.extraction import MappingExpr


# -- declared types -----------------------------------------------------------

SCALAR_TYPES = {
    "integer": "integer", "int": "integer", "long": "integer", "short": "integer",
    "float": "decimal", "double": "decimal", "decimal": "decimal", "real": "decimal",
    "string": "string", "char": "string",
    "boolean": "boolean", "bool": "boolean",
    "date": "date",
}


@dataclass(frozen=True)
class TypeSpec:
    """Declared attribute type.

    ``kind`` is one of integer, decimal, string, boolean, date, struct, list or
    ref. ``name`` keeps the spelling used in the declaration.
    """

    kind: str
    name: str = ""
    fields: tuple[tuple[str, "TypeSpec"], ...] = ()
    elem: Optional["TypeSpec"] = None

    def check(self, value: Any, where: str = "") -> None:
        if value is None:
            return
        ok = True
        if self.kind == "integer":
            ok = isinstance(value, int) and not isinstance(value, bool)
        elif self.kind == "decimal":
            ok = is_number(value)
        elif self.kind in ("string", "date"):
            ok = isinstance(value, str)
        elif self.kind == "boolean":
            ok = isinstance(value, bool)
        elif self.kind == "list":
            ok = isinstance(value, tuple)
            if ok:
                for i, item in enumerate(value):
                    self.elem.check(item, f"{where}[{i}]")
        elif self.kind == "struct":
            ok = isinstance(value, Record) and set(value) == {n for n, _ in self.fields}
            if ok:
                for n, t in self.fields:
                    t.check(value[n], f"{where}.{n}")
        elif self.kind == "ref":
            ok = isinstance(value, Ref)
        if not ok:
            raise TypeMismatch(f"{where or 'value'}: {value!r} is not {self.describe()}")

    def describe(self) -> str:
        if self.kind == "struct":
            return f"Struct {self.name}"
        if self.kind == "list":
            return f"List<{self.elem.describe()}>"
        return self.name or self.kind


@dataclass(frozen=True)
class Attribute:
    name: str
    type: TypeSpec
    relationship: bool = False
    inverse: str = ""


@dataclass(frozen=True)
class Operation:
    """Declared operation signature (stored, never invoked)."""

    name: str
    returns: str
    params: tuple[str, ...] = ()


# -- filters ------------------------------------------------------------------

@dataclass(frozen=True)
class TemporalFilter:
    """``(property, source)`` pairs; properties listed in ``calls`` are ``f()``-backed."""

    entries: tuple[tuple[str, str], ...] = ()
    calls: frozenset[str] = frozenset()

    @property
    def properties(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)


@dataclass(frozen=True)
class ArchiveEntry:
    attribute: str
    fn: AggregationFn
    source: str


@dataclass(frozen=True)
class ArchiveFilter:
    entries: tuple[ArchiveEntry, ...] = ()
    grain: Optional[tuple[TemporalUnit, int]] = None

    @property
    def attributes(self) -> tuple[str, ...]:
        return tuple(e.attribute for e in self.entries)

    @property
    def moderate(self) -> bool:
        return any(e.fn.moderate for e in self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)


# -- schema -------------------------------------------------------------------

@dataclass(frozen=True)
class WarehouseClass:
    name: str
    attributes: tuple[Attribute, ...] = ()
    supers: tuple[str, ...] = ()
    mapping: Optional["MappingExpr"] = None
    temporal_filter: TemporalFilter = TemporalFilter()
    archive_filter: ArchiveFilter = ArchiveFilter()
    operations: tuple[Operation, ...] = ()

    def attribute(self, name: str) -> Attribute:
        key = resolve(name, [a.name for a in self.attributes])
        if key is None:
            raise UnknownAttribute(f"{self.name} has no attribute {name!r}")
        return next(a for a in self.attributes if a.name == key)

    @property
    def attribute_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)


# source interfaces share the class shape; only name/attributes/operations matter
SourceInterface = WarehouseClass


@dataclass(frozen=True)
class SelectionCondition:
    """``select T from P in C, T in P.PastStates() where pred``."""

    state_var: str
    object_var: str
    class_name: str
    where: Optional["Expr"] = None


@dataclass(frozen=True)
class ConfigRule:
    name: str
    on: str
    event: str
    condition: Union["Expr", SelectionCondition]
    action: str = "archive"
    action_var: str = ""


@dataclass(frozen=True)
class Environment:
    name: str
    class_names: tuple[str, ...]
    rules: tuple[ConfigRule, ...] = ()


@dataclass(frozen=True)
class WarehouseSchema:
    name: str = "warehouse"
    classes: tuple[WarehouseClass, ...] = ()
    environments: tuple[Environment, ...] = ()
    sources: tuple[SourceInterface, ...] = ()
    config: tuple[tuple[str, Any], ...] = ()

    def cls(self, name: str) -> WarehouseClass:
        key = resolve(name, [c.name for c in self.classes])
        if key is None:
            raise KeyError(f"unknown class {name!r}")
        return next(c for c in self.classes if c.name == key)

    def has_class(self, name: str) -> bool:
        return resolve(name, [c.name for c in self.classes]) is not None

    def environment_of(self, class_name: str) -> Optional[Environment]:
        for env in self.environments:
            if class_name in env.class_names:
                return env
        return None


# -- states and objects -------------------------------------------------------

class Role(Enum):
    CURRENT = "current"
    PAST = "past"
    ARCHIVE = "archive"
    DERIVED = "derived"


@dataclass(frozen=True)
class State:
    """A structural value with the temporal domain over which it was current.

    Archive states additionally carry the mergeable statistics of every
    archived attribute (``stats``) and, for moderate archiving, the block key.
    """

    value: Record
    domain: TemporalDomain
    role: Role = Role.PAST
    owner: Optional[str] = None
    stats: tuple[tuple[str, Summary], ...] = field(default=(), compare=False)
    block: Optional[int] = field(default=None, compare=False)

    def lookup(self, name: str) -> Any:
        if name == "domT":
            return self.domain
        key = resolve(name, self.value.keys())
        if key is None:
            raise UnknownAttribute(f"state has no attribute {name!r}")
        return self.value[key]

    def same_value(self, other: "State") -> bool:
        return self.value == other.value and self.domain == other.domain


@dataclass(frozen=True)
class WarehouseObject:
    """The (oid, current, past, archive) quadruplet plus bookkeeping.

    The current state is stored as a value and the instant it became current;
    its domain is open-ended and is closed at the store's last refresh when
    materialized by :meth:`current_state`.
    """

    oid: str
    class_name: str
    current: Record
    since: Instant
    past: tuple[State, ...] = ()
    archive: tuple[State, ...] = ()
    key: tuple[str, ...] = ()
    active: bool = True

    def lookup(self, name: str) -> Any:
        if name == "oid":
            return Ref(self.oid)
        key = resolve(name, self.current.keys())
        if key is None:
            raise UnknownAttribute(f"{self.class_name} object has no attribute {name!r}")
        return self.current[key]

    def current_state(self, as_of: Optional[Instant] = None) -> State:
        end = as_of if as_of is not None and as_of.ordinal >= self.since.ordinal else self.since
        return State(self.current, chrono.interval_domain(self.since, end), Role.CURRENT, self.oid)

    def replace(self, **changes: Any) -> "WarehouseObject":
        return dataclasses.replace(self, **changes)


# -- diagnostics --------------------------------------------------------------

@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    location: str = ""
    severity: str = "error"

    def __str__(self) -> str:
        loc = f"{self.location}: " if self.location else ""
        return f"{self.severity}: {loc}{self.message} [{self.code}]"


def validate_schema(s: WarehouseSchema) -> list[Diagnostic]:
    """Check the schema invariants; returns diagnostics instead of raising."""
    out: list[Diagnostic] = []
    seen: set[str] = set()
    for c in s.classes:
        if c.name in seen:
            out.append(Diagnostic("duplicate-class", f"class {c.name} declared twice", c.name))
        seen.add(c.name)
        out.extend(_validate_class(c, s))

    owner: dict[str, str] = {}
    for env in s.environments:
        where = f"environment {env.name}"
        if not env.class_names:
            out.append(Diagnostic("empty-environment", "environment has no class", where))
        for name in env.class_names:
            if not s.has_class(name):
                out.append(Diagnostic("unknown-class", f"unknown class {name}", where))
                continue
            if name in owner:
                out.append(Diagnostic(
                    "shared-class", f"class {name} already belongs to {owner[name]}", where))
            owner[name] = env.name
        for rule in env.rules:
            out.extend(_validate_rule(rule, env, s))
    return out


def _validate_class(c: WarehouseClass, s: WarehouseSchema) -> list[Diagnostic]:
    out = []
    where = f"class {c.name}"
    names = c.attribute_names
    if len(set(names)) != len(names):
        out.append(Diagnostic("duplicate-attribute", "attribute declared twice", where))
    if c.supers:
        out.append(Diagnostic(
            "super-ignored", f"super classes {', '.join(c.supers)} are stored without "
            "inheritance semantics", where, severity="warning"))

    tf = c.temporal_filter
    props = tf.properties
    if len(set(props)) != len(props):
        out.append(Diagnostic("duplicate-temporal", "temporal property listed twice", where))
    for prop, source in tf.entries:
        if prop in tf.calls:
            out.append(Diagnostic(
                "temporal-function", f"temporal property {prop} is backed by operation "
                f"{source}(); only attribute-backed properties are supported", where))
        elif resolve(source, names) is None:
            out.append(Diagnostic(
                "temporal-unknown", f"temporal property {prop} references unknown attribute "
                f"{source}", where))

    af = c.archive_filter
    for e in af.entries:
        if resolve(e.attribute, props) is None:
            out.append(Diagnostic(
                "archive-not-temporal", f"archived attribute not temporal: {e.attribute}", where))
        elif resolve(e.source, props) is None:
            out.append(Diagnostic(
                "archive-not-temporal", f"aggregated attribute not temporal: {e.source}", where))
    if af.entries:
        kinds = {e.fn.moderate for e in af.entries}
        if len(kinds) > 1:
            out.append(Diagnostic(
                "archive-mixed", "archive filter mixes strong and moderate functions", where))
        if af.moderate and af.grain is None:
            out.append(Diagnostic("archive-grain", "moderate archiving requires a by-clause", where))
        if not af.moderate and af.grain is not None:
            out.append(Diagnostic("archive-grain", "by-clause given for strong archiving", where))
    elif af.grain is not None:
        out.append(Diagnostic("archive-grain", "by-clause without archive filter", where))
    if af.grain is not None and af.grain[1] < 1:
        out.append(Diagnostic("archive-grain", "archive grain count must be >= 1", where))

    if c.mapping is not None and s.sources:
        from twq.extraction import validate_mapping

        for d in validate_mapping(c.mapping, s.sources, target=c):
            out.append(dataclasses.replace(d, location=f"{where} mapping"))
    return out


def _validate_rule(rule: ConfigRule, env: Environment, s: WarehouseSchema) -> list[Diagnostic]:
    out = []
    where = f"rule {rule.name}"
    if rule.on != env.name:
        out.append(Diagnostic("rule-environment", f"rule is attached to {rule.on}", where))
    cond = rule.condition
    if isinstance(cond, SelectionCondition):
        if not s.has_class(cond.class_name):
            out.append(Diagnostic("unknown-class", f"unknown class {cond.class_name}", where))
        elif s.cls(cond.class_name).name not in env.class_names:
            out.append(Diagnostic(
                "rule-scope", f"class {cond.class_name} is outside environment {env.name}", where))
        if rule.action_var and rule.action_var != cond.state_var:
            out.append(Diagnostic(
                "rule-action", f"action targets {rule.action_var}, selection binds "
                f"{cond.state_var}", where))
        if cond.where is not None:
            from twq.algebra.predicates import variables

            unbound = variables(cond.where) - {cond.state_var, cond.object_var}
            for v in sorted(unbound):
                out.append(Diagnostic("unbound-variable", f"unbound variable {v}", where))
    return out


def state_structural_projection(c: WarehouseClass, v: Record, role: Role | str) -> Record:
    """Restrict a full object value to the structure of past or archive states."""
    role = Role(role) if isinstance(role, str) else role
    if role is Role.PAST:
        pairs = c.temporal_filter.entries
    elif role is Role.ARCHIVE:
        pairs = tuple((a, a) for a in c.archive_filter.attributes)
    else:
        return v
    out = []
    for prop, source in pairs:
        key = resolve(source, v.keys())
        if key is None:
            key = resolve(prop, v.keys())
        if key is None:
            raise MissingAttribute(f"{c.name}: value lacks {source!r}")
        out.append((prop, v[key]))
    return Record(out)
