"""Aggregation functions and mergeable summaries.

Composite values (records such as ``tension {min, max}``) aggregate
componentwise for avg/sum/min/max; ``count`` counts contributions.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Any, Iterable

from twq.errors import TypeMismatch
from twq.values import Record, freeze, is_number, normalize_number, thaw


class AggKind(Enum):
    AVG = "avg"
    SUM = "sum"
    COUNT = "count"
    MAX = "max"
    MIN = "min"


@dataclass(frozen=True)
class AggregationFn:
    """An aggregation and its archiving mode.

    Moderate functions are spelled ``t_avg`` (as in archive filters) or
    ``avg_t``; both parse to ``moderate=True``.
    """

    kind: AggKind
    moderate: bool = False

    @classmethod
    def parse(cls, name: str) -> "AggregationFn":
        key = name.strip().lower()
        moderate = False
        if key.startswith("t_"):
            key, moderate = key[2:], True
        elif key.endswith("_t"):
            key, moderate = key[:-2], True
        try:
            return cls(AggKind(key), moderate)
        except ValueError:
            raise ValueError(f"unknown aggregation function {name!r}") from None

    @property
    def name(self) -> str:
        return f"t_{self.kind.value}" if self.moderate else self.kind.value


def _add(a: Any, b: Any) -> Any:
    if a is None or b is None:
        return None
    if isinstance(a, Record):
        return Record((k, _add(a[k], b[k])) for k in a)
    if isinstance(a, float) or isinstance(b, float):
        return float(a) + float(b)
    return a + b


def _pick(a: Any, b: Any, smaller: bool) -> Any:
    if isinstance(a, Record):
        return Record((k, _pick(a[k], b[k], smaller)) for k in a)
    if smaller:
        return b if b < a else a
    return b if b > a else a


def _div(total: Any, n: int) -> Any:
    if isinstance(total, Record):
        return Record((k, _div(v, n)) for k, v in total.items())
    if isinstance(total, float):
        return total / n
    return normalize_number(Fraction(total, n))


def _summable(v: Any) -> Any:
    if isinstance(v, Record):
        parts = {k: _summable(x) for k, x in v.items()}
        return None if any(p is None for p in parts.values()) else Record(parts)
    if is_number(v):
        return v
    return None


def _check_shape(ref: Any, v: Any) -> None:
    if isinstance(ref, Record) != isinstance(v, Record):
        raise TypeMismatch(f"cannot aggregate {ref!r} with {v!r}")
    if isinstance(ref, Record) and set(ref) != set(v):
        raise TypeMismatch(f"composite fields differ: {sorted(ref)} vs {sorted(v)}")
    if isinstance(v, tuple):
        raise TypeMismatch("list values cannot be aggregated")


@dataclass(frozen=True)
class Summary:
    """Sufficient statistics for every aggregation kind; merging is exact."""

    count: int
    total: Any
    low: Any
    high: Any

    @classmethod
    def of(cls, values: Iterable[Any]) -> "Summary":
        values = list(values)
        if not values:
            raise ValueError("cannot summarize zero values")
        first = values[0]
        out = cls(1, _summable(first), first, first)
        for v in values[1:]:
            out = out.merge(cls(1, _summable(v), v, v))
        return out

    def merge(self, other: "Summary") -> "Summary":
        _check_shape(self.low, other.low)
        return Summary(
            self.count + other.count,
            _add(self.total, other.total),
            _pick(self.low, other.low, smaller=True),
            _pick(self.high, other.high, smaller=False),
        )

    def result(self, kind: AggKind) -> Any:
        if kind is AggKind.COUNT:
            return self.count
        if kind is AggKind.MIN:
            return self.low
        if kind is AggKind.MAX:
            return self.high
        if self.total is None:
            raise TypeMismatch(f"{kind.value} needs numeric values")
        if kind is AggKind.SUM:
            return self.total
        return _div(self.total, self.count)

    def to_json(self) -> dict:
        return {"count": self.count, "total": thaw(self.total),
                "low": thaw(self.low), "high": thaw(self.high)}

    @classmethod
    def from_json(cls, data: dict) -> "Summary":
        return cls(data["count"], freeze(data["total"]), freeze(data["low"]), freeze(data["high"]))


def aggregate(kind: AggKind, values: Iterable[Any]) -> Any:
    return Summary.of(values).result(kind)
