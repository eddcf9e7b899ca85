"""Series restructuring and analytic operators.

Every analytic operator weights by series element: an element contributes
once to each window (or cumulative prefix, or coarse grain) it intersects,
whatever the number of grains it covers there.
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence, Union

from twq import chrono
from twq.aggregate import AggregationFn, Summary
from twq.algebra.collections import Collection, Kind, series, states, unit_of_states, value
from twq.chrono import Duration, TemporalDomain, TemporalUnit
from twq.errors import EmptySeries, MixedUnits, NotCoarser, NotFiner, OverlappingStates, UnknownAttribute
from twq.model import ArchiveEntry, Role, State
from twq.names import resolve
from twq.values import Record, sort_key

AggSpec = Union[ArchiveEntry, tuple]


def agg_entries(spec: Iterable[AggSpec]) -> tuple[ArchiveEntry, ...]:
    """Accept ArchiveEntry objects or ``(attr, fn)`` / ``(attr, fn, source)`` tuples."""
    out = []
    for item in spec:
        if isinstance(item, ArchiveEntry):
            out.append(item)
            continue
        attr, fn = item[0], item[1]
        source = item[2] if len(item) > 2 else attr
        if isinstance(fn, str):
            fn = AggregationFn.parse(fn)
        out.append(ArchiveEntry(attr, fn, source))
    return tuple(out)


def make_serie(e: Collection) -> Collection:
    """Split multi-interval states into one element per interval, in time order."""
    e.expect(Kind.STATES, op="MakeSerie")
    unit_of_states(e)
    pieces = []
    for s in e:
        for span in s.domain.spans:
            pieces.append(State(s.value, TemporalDomain(s.domain.unit, (span,)), s.role, s.owner))
    pieces.sort(key=lambda s: (s.domain.spans[0][0], sort_key(s.value)))
    for prev, nxt in zip(pieces, pieces[1:]):
        if nxt.domain.spans[0][0] <= prev.domain.spans[0][1]:
            raise OverlappingStates(
                f"states {dict(prev.value)} and {dict(nxt.value)} share grains "
                f"({prev.domain} / {nxt.domain})")
    return series(pieces)


def _summaries(elements: Sequence[State], entries: Sequence[ArchiveEntry]) -> list[Summary]:
    out = []
    for entry in entries:
        vals = []
        for s in elements:
            key = resolve(entry.source, s.value.keys())
            if key is None:
                raise UnknownAttribute(f"series element lacks {entry.source!r}")
            vals.append(s.value[key])
        out.append(Summary.of(vals))
    return out


def _result(summaries: Sequence[Summary], entries: Sequence[ArchiveEntry]) -> Record:
    return Record((e.attribute, s.result(e.fn.kind)) for e, s in zip(entries, summaries))


def _check(sr: Collection, op: str) -> tuple[State, ...]:
    sr.expect(Kind.SERIES, op=op)
    if not sr.items:
        raise EmptySeries(f"{op} needs a non-empty series")
    return sr.items


def _derived(value: Record, unit: TemporalUnit, lo: int, hi: int) -> State:
    return State(value, TemporalDomain(unit, ((lo, hi),)), Role.DERIVED)


def agreg(sr: Collection, spec: Iterable[AggSpec]) -> Collection:
    """Aggregate the whole series into one value."""
    items = _check(sr, "Agreg")
    entries = agg_entries(spec)
    return value(_result(_summaries(items, entries), entries))


def acum(sr: Collection, spec: Iterable[AggSpec]) -> Collection:
    """Cumulative aggregate: one element per grain from the origin to the last grain."""
    items = _check(sr, "ACum")
    entries = agg_entries(spec)
    unit = items[0].domain.unit
    origin = items[0].domain.spans[0][0]
    last = items[-1].domain.spans[0][1]
    out = []
    running: Optional[list[Summary]] = None
    k = 0
    for g in range(origin, last + 1):
        while k < len(items) and items[k].domain.spans[0][0] <= g:
            step = _summaries([items[k]], entries)
            running = step if running is None else [a.merge(b) for a, b in zip(running, step)]
            k += 1
        out.append(_derived(_result(running, entries), unit, origin, g))
    return series(out, cumulative=True)


def _windowed(items: Sequence[State], entries, unit, windows_of, bounds) -> list[State]:
    members: dict[int, list[State]] = {}
    for s in items:
        lo, hi = s.domain.spans[0]
        for w in windows_of(lo, hi):
            members.setdefault(w, []).append(s)
    out = []
    for w in sorted(members):
        lo, hi = bounds(w)
        out.append(_derived(_result(_summaries(members[w], entries), entries), unit, lo, hi))
    return out


def amove(sr: Collection, spec: Iterable[AggSpec], duration: Duration) -> Collection:
    """Aggregate over consecutive windows of ``duration`` tiled from the series origin."""
    items = _check(sr, "AMove")
    entries = agg_entries(spec)
    unit = items[0].domain.unit
    if duration.unit is not unit:
        raise MixedUnits(f"duration in {duration.unit.value}, series in {unit.value}")
    origin = items[0].domain.spans[0][0]
    n = duration.count
    out = _windowed(
        items, entries, unit,
        lambda lo, hi: range((lo - origin) // n, (hi - origin) // n + 1),
        lambda w: (origin + w * n, origin + w * n + n - 1),
    )
    return series(out)


def scale_up(sr: Collection, unit: TemporalUnit, spec: Iterable[AggSpec]) -> Collection:
    """Re-express the series at a coarser unit, aggregating per coarse grain."""
    items = _check(sr, "ScaleUp")
    entries = agg_entries(spec)
    base = items[0].domain.unit
    if not unit.coarser_than(base):
        raise NotCoarser(f"{unit.value} is not coarser than {base.value}")
    out = _windowed(
        items, entries, unit,
        lambda lo, hi: range(chrono.coarse_ordinal(base, lo, unit),
                             chrono.coarse_ordinal(base, hi, unit) + 1),
        lambda w: (w, w),
    )
    return series(out)


def scale_down(sr: Collection, unit: TemporalUnit, spec: Iterable[AggSpec] = ()) -> Collection:
    """Re-express the series at a finer unit by replicating each value.

    Consecutive elements that end up adjacent with equal values are merged.
    ``spec`` is accepted for symmetry with :func:`scale_up` and ignored.
    """
    sr.expect(Kind.SERIES, op="ScaleDown")
    if not sr.items:
        raise EmptySeries("ScaleDown needs a non-empty series")
    base = sr.items[0].domain.unit
    if not unit.finer_than(base):
        raise NotFiner(f"{unit.value} is not finer than {base.value}")
    out: list[State] = []
    for s in sr.items:
        lo, hi = s.domain.spans[0]
        a = chrono.convert_grain(chrono.Instant(base, lo), unit).start.ordinal
        b = chrono.convert_grain(chrono.Instant(base, hi), unit).end.ordinal
        if out and out[-1].value == s.value and out[-1].domain.spans[0][1] + 1 == a:
            a = out.pop().domain.spans[0][0]
        out.append(_derived(s.value, unit, a, b))
    return series(out)


def series_states(sr: Collection) -> Collection:
    sr.expect(Kind.SERIES)
    return states(sr.items)
