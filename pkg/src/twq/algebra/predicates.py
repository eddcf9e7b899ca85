"""Predicate and attribute-reference trees, and their evaluation.

Range variables are bound to elements (objects, states, join rows or plain
records). Attribute access goes through :func:`lookup`, so any element type
with a ``lookup(name)`` method can be bound.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any, Union

from twq import chrono
from twq.chrono import AllenRelation, Instant, TemporalDomain
from twq.errors import EmptyDomain, MixedUnits, PredicateTypeError, UnknownAttribute
from twq.names import resolve
from twq.values import is_number


@dataclass(frozen=True)
class Literal:
    value: Any


@dataclass(frozen=True)
class DateLit:
    instant: Instant


@dataclass(frozen=True)
class DomTLit:
    """``DomT(a, b)``: the closed window from ``a`` to the grain before ``b``."""

    start: Instant
    stop: Instant

    @property
    def domain(self) -> TemporalDomain:
        if self.stop.ordinal <= self.start.ordinal:
            return TemporalDomain.empty(self.start.unit)
        return chrono.interval_domain(self.start, self.stop.shift(-1))


@dataclass(frozen=True)
class AttrRef:
    """``var.a.b[0]``; an empty path designates the bound element itself."""

    var: str
    path: tuple[Union[str, int], ...] = ()

    def __str__(self) -> str:
        out = self.var
        for step in self.path:
            out += f"[{step}]" if isinstance(step, int) else f".{step}"
        return out


@dataclass(frozen=True)
class Compare:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class And:
    items: tuple["Expr", ...]


@dataclass(frozen=True)
class Or:
    items: tuple["Expr", ...]


@dataclass(frozen=True)
class Not:
    item: "Expr"


@dataclass(frozen=True)
class TemporalTest:
    """``rel(x, y)`` for an Allen relation name, or ``contains(x, y)``."""

    name: str
    left: "Expr"
    right: "Expr"


Expr = Union[Literal, DateLit, DomTLit, AttrRef, Compare, And, Or, Not, TemporalTest]

COMPARISONS = ("=", "!=", "<", "<=", ">", ">=")
DOMAIN_ATTR = "domT"


def lookup(element: Any, name: str) -> Any:
    if hasattr(element, "lookup"):
        return element.lookup(name)
    if isinstance(element, Mapping):
        key = resolve(name, element.keys())
        if key is None:
            raise UnknownAttribute(f"no attribute {name!r}")
        return element[key]
    raise UnknownAttribute(f"cannot read {name!r} from {type(element).__name__}")


def follow(value: Any, path: tuple) -> Any:
    for step in path:
        if isinstance(step, int):
            if not isinstance(value, tuple):
                raise PredicateTypeError(f"index [{step}] applied to non-list")
            if not -len(value) <= step < len(value):
                raise PredicateTypeError(f"index [{step}] out of range")
            value = value[step]
        else:
            value = lookup(value, step)
    return value


def _as_domain(v: Any) -> TemporalDomain:
    if isinstance(v, TemporalDomain):
        return v
    if isinstance(v, Instant):
        return chrono.interval_domain(v)
    raise PredicateTypeError(f"expected a temporal value, got {v!r}")


def _compare(op: str, a: Any, b: Any) -> bool:
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if isinstance(a, Instant) and isinstance(b, Instant):
        pass
    elif is_number(a) and is_number(b):
        pass
    elif isinstance(a, str) and isinstance(b, str):
        pass
    else:
        raise PredicateTypeError(f"cannot order {a!r} and {b!r}")
    try:
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        if op == ">=":
            return a >= b
    except MixedUnits as exc:
        raise PredicateTypeError(str(exc)) from None
    raise PredicateTypeError(f"unknown comparison {op!r}")


def temporal_test(name: str, x: TemporalDomain, y: TemporalDomain) -> bool:
    try:
        if name.lower() == "contains":
            return chrono.contains(x, y)
        rel = AllenRelation.parse(name)
        if x.is_empty() or y.is_empty():
            return False
        return chrono.allen_relate(x, y, rel)
    except (MixedUnits, EmptyDomain) as exc:
        raise PredicateTypeError(str(exc)) from None
    except ValueError as exc:
        raise PredicateTypeError(str(exc)) from None


def value_of(expr: Expr, env: Mapping[str, Any]) -> Any:
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, DateLit):
        return expr.instant
    if isinstance(expr, DomTLit):
        return expr.domain
    if isinstance(expr, AttrRef):
        if expr.var not in env:
            raise PredicateTypeError(f"unbound variable {expr.var!r}")
        return follow(env[expr.var], expr.path)
    return holds(expr, env)


def holds(pred: Expr, env: Mapping[str, Any]) -> bool:
    """Evaluate a predicate under variable bindings."""
    if isinstance(pred, And):
        return all(holds(p, env) for p in pred.items)
    if isinstance(pred, Or):
        return any(holds(p, env) for p in pred.items)
    if isinstance(pred, Not):
        return not holds(pred.item, env)
    if isinstance(pred, Compare):
        return _compare(pred.op, value_of(pred.left, env), value_of(pred.right, env))
    if isinstance(pred, TemporalTest):
        x = _as_domain(value_of(pred.left, env))
        y = _as_domain(value_of(pred.right, env))
        return temporal_test(pred.name, x, y)
    v = value_of(pred, env)
    if not isinstance(v, bool):
        raise PredicateTypeError(f"predicate evaluated to non-boolean {v!r}")
    return v


def variables(expr: Expr) -> set[str]:
    """Range variables referenced by an expression."""
    if isinstance(expr, AttrRef):
        return {expr.var}
    if isinstance(expr, (And, Or)):
        return set().union(*(variables(p) for p in expr.items)) if expr.items else set()
    if isinstance(expr, Not):
        return variables(expr.item)
    if isinstance(expr, (Compare, TemporalTest)):
        return variables(expr.left) | variables(expr.right)
    return set()


def attr_refs(expr: Expr) -> list[AttrRef]:
    if isinstance(expr, AttrRef):
        return [expr]
    if isinstance(expr, (And, Or)):
        return [r for p in expr.items for r in attr_refs(p)]
    if isinstance(expr, Not):
        return attr_refs(expr.item)
    if isinstance(expr, (Compare, TemporalTest)):
        return attr_refs(expr.left) + attr_refs(expr.right)
    return []


TRUE = Literal(True)

__all__ = [
    "Literal", "DateLit", "DomTLit", "AttrRef", "Compare", "And", "Or", "Not",
    "TemporalTest", "Expr", "holds", "value_of", "lookup", "follow", "variables",
    "attr_refs", "COMPARISONS", "DOMAIN_ATTR", "TRUE",
]
