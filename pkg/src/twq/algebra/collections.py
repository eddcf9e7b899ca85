"""Typed collections flowing between algebra operators."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterator, Optional

from twq.chrono import TemporalDomain, TemporalUnit
from twq.errors import KindMismatch, MixedUnits, UnknownAttribute
from twq.model import State, WarehouseObject
from twq.names import resolve
from twq.values import Record


class Kind(Enum):
    OBJECTS = "ObjectSet"
    STATES = "StateSet"
    OBJECT_SETS = "ObjectSetSet"
    STATE_SETS = "StateSetSet"
    TUPLES = "TupleSet"
    SERIES = "Series"
    VALUE = "Value"


@dataclass(frozen=True)
class Collection:
    """A homogeneous bag of elements tagged with its kind.

    Set-of-set kinds hold tuples of elements. A VALUE collection holds a
    single record.
    """

    kind: Kind
    items: tuple = ()

    def __iter__(self) -> Iterator[Any]:
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def expect(self, *kinds: Kind, op: str = "") -> "Collection":
        if self.kind not in kinds:
            names = " or ".join(k.value for k in kinds)
            raise KindMismatch(f"{op or 'operator'} expects {names}, got {self.kind.value}")
        return self

    @property
    def value(self) -> Record:
        self.expect(Kind.VALUE)
        return self.items[0]


def objects(items) -> Collection:
    return Collection(Kind.OBJECTS, tuple(items))


def states(items) -> Collection:
    return Collection(Kind.STATES, tuple(items))


def value(record: Record) -> Collection:
    return Collection(Kind.VALUE, (record,))


def series(items, cumulative: bool = False) -> Collection:
    items = tuple(items)
    check_series(items, cumulative)
    return Collection(Kind.SERIES, items)


def check_series(items: tuple[State, ...], cumulative: bool = False) -> None:
    """Single-interval domains, one unit, strictly chronological.

    A cumulative series (the output of ACum) has nested prefix domains, so
    only its end instants are required to increase strictly.
    """
    unit = None
    prev_end = None
    for s in items:
        if not s.domain.is_interval():
            raise KindMismatch("series elements need single-interval domains")
        if unit is None:
            unit = s.domain.unit
        elif s.domain.unit is not unit:
            raise MixedUnits("series elements must share one unit")
        start, end = s.domain.spans[0]
        if prev_end is not None and not prev_end < (end if cumulative else start):
            raise KindMismatch("series elements must be chronologically ordered")
        prev_end = end


def unit_of_states(items) -> Optional[TemporalUnit]:
    unit = None
    for s in items:
        u = s.domain.unit
        if u is None:
            continue
        if unit is None:
            unit = u
        elif u is not unit:
            raise MixedUnits(f"states mix {unit.value} and {u.value}")
    return unit


@dataclass(frozen=True)
class GroupTuple:
    """Output of temporal grouping: a window and the values falling in it."""

    domain: TemporalDomain
    values: tuple[Record, ...]

    def lookup(self, name: str) -> Any:
        if name == "domT":
            return self.domain
        if name == "values":
            return self.values
        raise UnknownAttribute(f"group tuple has no attribute {name!r}")


@dataclass(frozen=True)
class JoinRow:
    """Concatenated value of a join pair; ``left``/``right`` give the operands."""

    value: Record
    left: Any = None
    right: Any = None

    def lookup(self, name: str) -> Any:
        key = resolve(name, self.value.keys())
        if key is not None:
            return self.value[key]
        if name == "left":
            return self.left
        if name == "right":
            return self.right
        raise UnknownAttribute(f"join row has no attribute {name!r}")


def element_value(e: Any) -> Record:
    if isinstance(e, WarehouseObject):
        return e.current
    if isinstance(e, (State, JoinRow)):
        return e.value
    if isinstance(e, Record):
        return e
    raise KindMismatch(f"element {type(e).__name__} has no structural value")
