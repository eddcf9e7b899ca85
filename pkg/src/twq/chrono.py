"""Temporal kernel: calendar units, instants, intervals and multi-interval domains.

Time is discrete. Every unit partitions the calendar into grains and each grain
is addressed by an integer ordinal, so all interval arithmetic reduces to
integer comparisons. Intervals are closed on both ends and a single grain
(``start == end``) is a legal interval.

A :class:`TemporalDomain` is kept in normal form at all times: its intervals
are sorted, pairwise disjoint and separated by at least one grain.
"""

from __future__ import annotations

import calendar
import datetime as _dt
import re
from bisect import bisect_left
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Sequence

from twq.errors import (
    EmptyDomain,
    IncomparableUnits,
    InstantSyntaxError,
    MixedUnits,
)


class TemporalUnit(Enum):
    DAY = "day"
    MONTH = "month"
    QUARTER = "quarter"
    SEMESTER = "semester"
    YEAR = "year"

    @classmethod
    def parse(cls, name: str) -> "TemporalUnit":
        key = name.strip().lower()
        try:
            return _UNIT_ALIASES[key]
        except KeyError:
            raise InstantSyntaxError(f"unknown temporal unit {name!r}") from None

    def finer_than(self, other: "TemporalUnit") -> bool:
        """Strict ``est-plus-fine`` order; a total chain for the built-in units."""
        _check_comparable(self, other)
        return _RANK[self] < _RANK[other]

    def coarser_than(self, other: "TemporalUnit") -> bool:
        _check_comparable(self, other)
        return _RANK[self] > _RANK[other]


_RANK = {
    TemporalUnit.DAY: 0,
    TemporalUnit.MONTH: 1,
    TemporalUnit.QUARTER: 2,
    TemporalUnit.SEMESTER: 3,
    TemporalUnit.YEAR: 4,
}

# months per grain; the day unit is handled through the Gregorian calendar
_MONTHS = {
    TemporalUnit.MONTH: 1,
    TemporalUnit.QUARTER: 3,
    TemporalUnit.SEMESTER: 6,
    TemporalUnit.YEAR: 12,
}

_UNIT_ALIASES = {
    "day": TemporalUnit.DAY,
    "days": TemporalUnit.DAY,
    "jour": TemporalUnit.DAY,
    "month": TemporalUnit.MONTH,
    "months": TemporalUnit.MONTH,
    "mois": TemporalUnit.MONTH,
    "quarter": TemporalUnit.QUARTER,
    "quarters": TemporalUnit.QUARTER,
    "trimestre": TemporalUnit.QUARTER,
    "semester": TemporalUnit.SEMESTER,
    "semesters": TemporalUnit.SEMESTER,
    "semestre": TemporalUnit.SEMESTER,
    "year": TemporalUnit.YEAR,
    "years": TemporalUnit.YEAR,
    "annee": TemporalUnit.YEAR,
    "année": TemporalUnit.YEAR,
    "an": TemporalUnit.YEAR,
}


def _check_comparable(a: TemporalUnit, b: TemporalUnit) -> None:
    if a not in _RANK or b not in _RANK:
        raise IncomparableUnits(f"{a} and {b} are not ordered by finer-than")


def _check_same_unit(a: TemporalUnit | None, b: TemporalUnit | None) -> None:
    if a is not None and b is not None and a is not b:
        raise MixedUnits(f"cannot combine {a.value} with {b.value}")


# -- instants -----------------------------------------------------------------

_PATTERNS = [
    (re.compile(r"^(\d{4})-(\d{2})-(\d{2})$"), TemporalUnit.DAY),
    (re.compile(r"^(\d{4})-(\d{2})$"), TemporalUnit.MONTH),
    (re.compile(r"^(\d{4})-[Qq]([1-4])$"), TemporalUnit.QUARTER),
    (re.compile(r"^(\d{4})-[Ss]([12])$"), TemporalUnit.SEMESTER),
    (re.compile(r"^(\d{4})$"), TemporalUnit.YEAR),
]


@dataclass(frozen=True)
class Instant:
    """One grain of a unit, addressed by its ordinal.

    Ordinals: ``year*12 + month-1`` for months, ``year*4 + q-1`` for quarters,
    ``year*2 + s-1`` for semesters, the year itself for years and the proleptic
    Gregorian ordinal for days.
    """

    unit: TemporalUnit
    ordinal: int

    @classmethod
    def parse(cls, text: str) -> "Instant":
        text = text.strip()
        for pattern, unit in _PATTERNS:
            m = pattern.match(text)
            if not m:
                continue
            year = int(m.group(1))
            if unit is TemporalUnit.DAY:
                try:
                    day = _dt.date(year, int(m.group(2)), int(m.group(3)))
                except ValueError as exc:
                    raise InstantSyntaxError(f"bad date {text!r}: {exc}") from None
                return cls(unit, day.toordinal())
            if unit is TemporalUnit.YEAR:
                return cls(unit, year)
            index = int(m.group(2))
            if unit is TemporalUnit.MONTH and not 1 <= index <= 12:
                raise InstantSyntaxError(f"bad month in {text!r}")
            return cls(unit, year * (12 // _MONTHS[unit]) + index - 1)
        raise InstantSyntaxError(f"unrecognised instant {text!r}")

    @classmethod
    def month(cls, year: int, month: int) -> "Instant":
        return cls(TemporalUnit.MONTH, year * 12 + month - 1)

    @property
    def year(self) -> int:
        if self.unit is TemporalUnit.DAY:
            return _dt.date.fromordinal(self.ordinal).year
        return self.ordinal // (12 // _MONTHS[self.unit])

    @property
    def index(self) -> int:
        """1-based position inside the year (month number, quarter number...)."""
        if self.unit is TemporalUnit.DAY:
            return _dt.date.fromordinal(self.ordinal).timetuple().tm_yday
        return self.ordinal % (12 // _MONTHS[self.unit]) + 1

    def shift(self, grains: int) -> "Instant":
        return Instant(self.unit, self.ordinal + grains)

    def _cmp_key(self, other: "Instant") -> int:
        if not isinstance(other, Instant):
            return NotImplemented
        _check_same_unit(self.unit, other.unit)
        return other.ordinal

    def __lt__(self, other: "Instant") -> bool:
        return self.ordinal < self._cmp_key(other)

    def __le__(self, other: "Instant") -> bool:
        return self.ordinal <= self._cmp_key(other)

    def __gt__(self, other: "Instant") -> bool:
        return self.ordinal > self._cmp_key(other)

    def __ge__(self, other: "Instant") -> bool:
        return self.ordinal >= self._cmp_key(other)

    def __str__(self) -> str:
        return format_ordinal(self.unit, self.ordinal)


def format_ordinal(unit: TemporalUnit, ordinal: int) -> str:
    if unit is TemporalUnit.DAY:
        return _dt.date.fromordinal(ordinal).isoformat()
    if unit is TemporalUnit.YEAR:
        return f"{ordinal:04d}"
    per_year = 12 // _MONTHS[unit]
    year, idx = divmod(ordinal, per_year)
    if unit is TemporalUnit.MONTH:
        return f"{year:04d}-{idx + 1:02d}"
    prefix = "Q" if unit is TemporalUnit.QUARTER else "S"
    return f"{year:04d}-{prefix}{idx + 1}"


# -- intervals ----------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    """Closed interval ``[start, end]`` of grains of one unit."""

    start: Instant
    end: Instant

    def __post_init__(self) -> None:
        _check_same_unit(self.start.unit, self.end.unit)
        if self.start.ordinal > self.end.ordinal:
            raise ValueError(f"interval start {self.start} after end {self.end}")

    @classmethod
    def of(cls, start: str | Instant, end: str | Instant | None = None) -> "Interval":
        s = Instant.parse(start) if isinstance(start, str) else start
        if end is None:
            return cls(s, s)
        e = Instant.parse(end) if isinstance(end, str) else end
        return cls(s, e)

    @property
    def unit(self) -> TemporalUnit:
        return self.start.unit

    @property
    def span(self) -> tuple[int, int]:
        return (self.start.ordinal, self.end.ordinal)

    def __len__(self) -> int:
        return self.end.ordinal - self.start.ordinal + 1

    def __str__(self) -> str:
        return f"[{self.start},{self.end}]"


@dataclass(frozen=True)
class Duration:
    count: int
    unit: TemporalUnit

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ValueError("duration count must be >= 1")

    def __str__(self) -> str:
        return f"{self.count} {self.unit.value}"


# -- domains ------------------------------------------------------------------

Span = tuple[int, int]


@dataclass(frozen=True)
class TemporalDomain:
    """Normalized ordered set of closed intervals sharing one unit.

    Build domains with :func:`normalize` or the ``of``/``parse`` helpers; the
    constructor only validates that the spans are already in normal form.
    An empty domain may carry ``unit=None``.
    """

    unit: TemporalUnit | None
    spans: tuple[Span, ...] = ()

    def __post_init__(self) -> None:
        prev_end = None
        for s, e in self.spans:
            if s > e:
                raise ValueError(f"empty span ({s}, {e})")
            if prev_end is not None and s <= prev_end + 1:
                raise ValueError("domain spans must be sorted, disjoint and non-adjacent")
            prev_end = e
        if self.spans and self.unit is None:
            raise ValueError("non-empty domain needs a unit")

    @classmethod
    def empty(cls, unit: TemporalUnit | None = None) -> "TemporalDomain":
        return cls(unit, ())

    @classmethod
    def of(cls, *intervals: tuple[str, str] | str | Interval) -> "TemporalDomain":
        """``TemporalDomain.of(("2000-07", "2000-08"), "2000-11")``."""
        items = []
        for item in intervals:
            if isinstance(item, Interval):
                items.append(item)
            elif isinstance(item, str):
                items.append(Interval.of(item))
            else:
                items.append(Interval.of(*item))
        return normalize(items)

    @classmethod
    def from_grains(cls, unit: TemporalUnit, grains: Iterable[int]) -> "TemporalDomain":
        return _from_sorted_spans(unit, ((g, g) for g in sorted(set(grains))))

    @classmethod
    def parse(cls, text: str) -> "TemporalDomain":
        text = text.strip()
        if not (text.startswith("<") and text.endswith(">")):
            raise InstantSyntaxError(f"domain must be written <...>: {text!r}")
        body = text[1:-1].strip()
        if not body:
            return cls.empty()
        items = []
        for part in body.split(";"):
            part = part.strip()
            if not (part.startswith("[") and part.endswith("]")):
                raise InstantSyntaxError(f"bad interval {part!r}")
            bounds = part[1:-1].split(",")
            if len(bounds) != 2:
                raise InstantSyntaxError(f"bad interval {part!r}")
            items.append(Interval.of(bounds[0].strip(), bounds[1].strip()))
        return normalize(items)

    @property
    def intervals(self) -> tuple[Interval, ...]:
        unit = self.unit
        return tuple(Interval(Instant(unit, s), Instant(unit, e)) for s, e in self.spans)

    def is_empty(self) -> bool:
        return not self.spans

    def __bool__(self) -> bool:
        return bool(self.spans)

    @property
    def first(self) -> Instant:
        if not self.spans:
            raise EmptyDomain("empty domain has no first instant")
        return Instant(self.unit, self.spans[0][0])

    @property
    def last(self) -> Instant:
        if not self.spans:
            raise EmptyDomain("empty domain has no last instant")
        return Instant(self.unit, self.spans[-1][1])

    def grains(self) -> Iterator[int]:
        for s, e in self.spans:
            yield from range(s, e + 1)

    def grain_count(self) -> int:
        return sum(e - s + 1 for s, e in self.spans)

    def is_interval(self) -> bool:
        return len(self.spans) == 1

    def __str__(self) -> str:
        if self.unit is None:
            return "<>"
        return "<" + ";".join(
            f"[{format_ordinal(self.unit, s)},{format_ordinal(self.unit, e)}]" for s, e in self.spans
        ) + ">"

    def __repr__(self) -> str:
        return f"TemporalDomain({self})"


def _from_sorted_spans(unit: TemporalUnit | None, spans: Iterable[Span]) -> TemporalDomain:
    merged: list[list[int]] = []
    for s, e in spans:
        if merged and s <= merged[-1][1] + 1:
            if e > merged[-1][1]:
                merged[-1][1] = e
        else:
            merged.append([s, e])
    return TemporalDomain(unit, tuple((s, e) for s, e in merged))


def normalize(raw: Sequence[Interval], unit: TemporalUnit | None = None) -> TemporalDomain:
    """Sort and merge overlapping or adjacent intervals into a domain."""
    for item in raw:
        if unit is None:
            unit = item.unit
        elif item.unit is not unit:
            raise MixedUnits(f"cannot mix {unit.value} and {item.unit.value} intervals")
    return _from_sorted_spans(unit, sorted(i.span for i in raw))


def interval_domain(start: Instant, end: Instant | None = None) -> TemporalDomain:
    end = start if end is None else end
    return normalize([Interval(start, end)])


def _unit_of(x: TemporalDomain, y: TemporalDomain) -> TemporalUnit | None:
    _check_same_unit(x.unit, y.unit)
    return x.unit if x.unit is not None else y.unit


def domain_union(x: TemporalDomain, y: TemporalDomain) -> TemporalDomain:
    unit = _unit_of(x, y)
    return _from_sorted_spans(unit, sorted(x.spans + y.spans))


def domain_intersect(x: TemporalDomain, y: TemporalDomain) -> TemporalDomain:
    unit = _unit_of(x, y)
    out: list[Span] = []
    i = j = 0
    while i < len(x.spans) and j < len(y.spans):
        xs, xe = x.spans[i]
        ys, ye = y.spans[j]
        lo, hi = max(xs, ys), min(xe, ye)
        if lo <= hi:
            out.append((lo, hi))
        if xe < ye:
            i += 1
        else:
            j += 1
    return TemporalDomain(unit if out else unit, tuple(out))


def domain_difference(x: TemporalDomain, y: TemporalDomain) -> TemporalDomain:
    unit = _unit_of(x, y)
    out: list[Span] = []
    j = 0
    for xs, xe in x.spans:
        cur = xs
        while j < len(y.spans) and y.spans[j][1] < cur:
            j += 1
        k = j
        while k < len(y.spans) and y.spans[k][0] <= xe:
            ys, ye = y.spans[k]
            if ys > cur:
                out.append((cur, ys - 1))
            cur = max(cur, ye + 1)
            if cur > xe:
                break
            k += 1
        if cur <= xe:
            out.append((cur, xe))
    return TemporalDomain(unit, tuple(out))


def contains(x: TemporalDomain, y: TemporalDomain) -> bool:
    """True iff every grain of ``y`` is a grain of ``x``."""
    _unit_of(x, y)
    starts = [s for s, _ in x.spans]
    for ys, ye in y.spans:
        k = bisect_left(starts, ys + 1) - 1
        if k < 0 or x.spans[k][1] < ye:
            return False
    return True


# -- Allen relations ----------------------------------------------------------

class AllenRelation(Enum):
    PRECEDES = "Precedes"
    FOLLOWS = "Follows"
    MEETS = "Meets"
    IS_MEETED = "IsMeeted"
    OVERLAPS = "Overlaps"
    IS_OVERLAPED = "IsOverlaped"
    DURING = "During"
    IS_DURING = "IsDuring"
    STARTS = "Starts"
    IS_STARTED = "IsStarted"
    ENDS = "Ends"
    IS_FINISHED = "IsFinished"
    EQUALS = "Equals"

    @classmethod
    def parse(cls, name: str) -> "AllenRelation":
        key = name.strip().lower().replace("_", "")
        for rel in cls:
            if rel.value.lower() == key:
                return rel
        raise ValueError(f"unknown Allen relation {name!r}")

    @property
    def reciprocal(self) -> "AllenRelation":
        return _RECIPROCAL[self]


_BASE = {
    AllenRelation.FOLLOWS: AllenRelation.PRECEDES,
    AllenRelation.IS_MEETED: AllenRelation.MEETS,
    AllenRelation.IS_OVERLAPED: AllenRelation.OVERLAPS,
    AllenRelation.IS_DURING: AllenRelation.DURING,
    AllenRelation.IS_STARTED: AllenRelation.STARTS,
    AllenRelation.IS_FINISHED: AllenRelation.ENDS,
}
_RECIPROCAL = {AllenRelation.EQUALS: AllenRelation.EQUALS}
for _inv, _base in _BASE.items():
    _RECIPROCAL[_inv] = _base
    _RECIPROCAL[_base] = _inv


def _overlaps(x: TemporalDomain, y: TemporalDomain) -> bool:
    # some X interval [a,b] and Y interval [c,d] with a < c < b < d
    y_starts = [s for s, _ in y.spans]
    for a, b in x.spans:
        lo = bisect_left(y_starts, a + 1)
        hi = bisect_left(y_starts, b) - 1
        # ends grow with starts, so the last candidate has the largest end
        if lo <= hi and y.spans[hi][1] > b:
            return True
    return False


def _during(x: TemporalDomain, y: TemporalDomain) -> bool:
    # every X interval [a,b] strictly inside some Y interval [c,d]: c < a, b < d
    y_starts = [s for s, _ in y.spans]
    for a, b in x.spans:
        k = bisect_left(y_starts, a) - 1
        if k < 0 or not y.spans[k][1] > b:
            return False
    return True


def allen_relate(x: TemporalDomain, y: TemporalDomain, rel: AllenRelation) -> bool:
    """Evaluate one of the 13 relations between two non-empty domains."""
    _unit_of(x, y)
    if not x.spans or not y.spans:
        raise EmptyDomain("Allen relations need non-empty domains")
    if rel in _BASE:
        x, y, rel = y, x, _BASE[rel]
    if rel is AllenRelation.PRECEDES:
        return x.spans[-1][1] < y.spans[0][0]
    if rel is AllenRelation.MEETS:
        return x.spans[-1][1] == y.spans[0][0]
    if rel is AllenRelation.OVERLAPS:
        return _overlaps(x, y)
    if rel is AllenRelation.DURING:
        return _during(x, y)
    if rel is AllenRelation.STARTS:
        return x.spans[0][0] == y.spans[0][0]
    if rel is AllenRelation.ENDS:
        return x.spans[-1][1] == y.spans[-1][1]
    return x.spans == y.spans


# -- grain conversion ---------------------------------------------------------

def _month_span(unit: TemporalUnit, ordinal: int) -> tuple[int, int]:
    per = _MONTHS[unit]
    return ordinal * per, ordinal * per + per - 1


def _day_span(unit: TemporalUnit, ordinal: int) -> tuple[int, int]:
    if unit is TemporalUnit.DAY:
        return ordinal, ordinal
    first, last = _month_span(unit, ordinal)
    fy, fm = divmod(first, 12)
    ly, lm = divmod(last, 12)
    start = _dt.date(fy, fm + 1, 1).toordinal()
    end = _dt.date(ly, lm + 1, calendar.monthrange(ly, lm + 1)[1]).toordinal()
    return start, end


def _ordinal_of_day(day: int, unit: TemporalUnit) -> int:
    if unit is TemporalUnit.DAY:
        return day
    d = _dt.date.fromordinal(day)
    return (d.year * 12 + d.month - 1) // _MONTHS[unit]


def convert_grain(i: Instant, target: TemporalUnit) -> Interval:
    """Re-express one grain at another unit.

    Coarsening yields the singleton interval of the enclosing coarse grain;
    refining yields the full span of finer grains covering ``i``.
    """
    _check_comparable(i.unit, target)
    if target is i.unit:
        return Interval(i, i)
    if TemporalUnit.DAY in (i.unit, target):
        lo, hi = _day_span(i.unit, i.ordinal)
        s, e = _ordinal_of_day(lo, target), _ordinal_of_day(hi, target)
    else:
        lo, hi = _month_span(i.unit, i.ordinal)
        per = _MONTHS[target]
        s, e = lo // per, hi // per
    return Interval(Instant(target, s), Instant(target, e))


def coarse_ordinal(unit: TemporalUnit, ordinal: int, target: TemporalUnit) -> int:
    """Ordinal of the ``target`` grain containing the given finer grain."""
    return convert_grain(Instant(unit, ordinal), target).start.ordinal
