"""Historization and archival.

``refresh`` folds a source snapshot into the store: changed temporal values
are demoted to past states, whose domains are coalesced per value. After
every refresh the environments' configuration rules run and may archive
selected past states through the class archive filter.

Strong archiving weights by state (one contribution per past state) and
yields one archive state per object. Moderate archiving weights by grain and
yields one archive state per calendar-aligned block of the filter's grain.
Archive states keep mergeable statistics, so a later pass that lands in an
existing block re-aggregates exactly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

from twq import chrono
from twq.aggregate import Summary
from twq.algebra import predicates as P
from twq.chrono import Instant, TemporalDomain
from twq.errors import (
    BlockCollision,
    MappingError,
    MixedUnits,
    NoArchiveFilter,
    NonMonotonicTimestamp,
    NotCoarser,
    OverlapDetected,
    PredicateTypeError,
    RuleEvaluationError,
    SelectionNotPast,
    TwqError,
    TypeMismatch,
    UnknownAttribute,
)
from twq.extraction import SourceSnapshot, evaluate_mapping
from twq.model import (
    ConfigRule,
    Environment,
    Role,
    SelectionCondition,
    State,
    WarehouseClass,
    WarehouseObject,
    state_structural_projection,
)
from twq.names import resolve
from twq.store import Store
from twq.values import Record, sort_key

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Firing:
    rule: str
    oid: str
    states: int
    error: str = ""


@dataclass
class RefreshReport:
    at: Instant
    created: int = 0
    updated: int = 0
    demoted: int = 0
    inactive: int = 0
    archived: int = 0
    firings: list[Firing] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    def render(self) -> str:
        lines = [
            f"refresh at {self.at}",
            f"  created:  {self.created}",
            f"  updated:  {self.updated}",
            f"  demoted:  {self.demoted}",
            f"  inactive: {self.inactive}",
            f"  archived: {self.archived}",
        ]
        for f in self.firings:
            lines.append(f"  rule {f.rule} fired on {f.oid}: {f.states} state(s) archived")
        for e in self.errors:
            lines.append(f"  error: {e}")
        return "\n".join(lines)


# -- coalescing ---------------------------------------------------------------

def _check_disjoint(states: Iterable[State]) -> None:
    spans = sorted((lo, hi, i) for i, s in enumerate(states) for lo, hi in s.domain.spans)
    for (lo1, hi1, i), (lo2, hi2, j) in zip(spans, spans[1:]):
        if lo2 <= hi1:
            raise OverlapDetected(f"past states overlap on grains {lo2}..{min(hi1, hi2)}")


def _by_time(states: Iterable[State]) -> tuple[State, ...]:
    return tuple(sorted(states, key=lambda s: (s.domain.spans[0][0] if s.domain.spans else 0,
                                               sort_key(s.value))))


def coalesce(past: Iterable[State]) -> tuple[State, ...]:
    """Merge past states carrying equal values; domains become the union."""
    past = list(past)
    _check_disjoint(past)
    merged: dict[Record, State] = {}
    for s in past:
        if s.value in merged:
            prev = merged[s.value]
            merged[s.value] = State(s.value, chrono.domain_union(prev.domain, s.domain),
                                    prev.role, prev.owner)
        else:
            merged[s.value] = s
    return _by_time(merged.values())


# -- archival -----------------------------------------------------------------

def _values_of(states: Iterable[State], source: str) -> list[Any]:
    out = []
    for s in states:
        key = resolve(source, s.value.keys())
        if key is None:
            raise UnknownAttribute(f"past state lacks archived attribute {source!r}")
        out.append(s.value[key])
    return out


def _archive_state(owner: str, entries, stats: list[Summary], domain: TemporalDomain,
                   block: Optional[int]) -> State:
    value = Record((e.attribute, s.result(e.fn.kind)) for e, s in zip(entries, stats))
    return State(value, domain, Role.ARCHIVE, owner,
                 tuple((e.attribute, s) for e, s in zip(entries, stats)), block)


def _merge_into(existing: Optional[State], fresh: State, entries) -> State:
    if existing is None:
        return fresh
    if not existing.stats or {a for a, _ in existing.stats} != {e.attribute for e in entries}:
        raise BlockCollision(f"archive block {existing.domain} has no mergeable statistics")
    if not chrono.domain_intersect(existing.domain, fresh.domain).is_empty():
        raise BlockCollision(f"archive block {existing.domain} already covers {fresh.domain}")
    old = dict(existing.stats)
    new = dict(fresh.stats)
    stats = [old[e.attribute].merge(new[e.attribute]) for e in entries]
    return _archive_state(fresh.owner, entries, stats,
                          chrono.domain_union(existing.domain, fresh.domain), fresh.block)


def archive_states(cls: WarehouseClass, obj: WarehouseObject,
                   selected: Iterable[State]) -> WarehouseObject:
    """Summarize ``selected`` past states into archive states and drop them."""
    selected = list(dict.fromkeys(selected))
    if not selected:
        return obj
    af = cls.archive_filter
    if not af:
        raise NoArchiveFilter(f"class {cls.name} has no archive filter")
    for s in selected:
        if s not in obj.past:
            raise SelectionNotPast(f"{obj.oid}: selected state on {s.domain} is not a past state")
    entries = af.entries
    fresh: list[State] = []
    if af.moderate:
        if af.grain is None:
            raise NoArchiveFilter(f"class {cls.name}: moderate archiving needs a grain")
        unit, n = af.grain
        blocks: dict[int, dict[str, list]] = {}
        grains: dict[int, list[int]] = {}
        base = None
        for s in selected:
            base = s.domain.unit
            if unit is not base and not unit.coarser_than(base):
                raise NotCoarser(f"archive grain {unit.value} is finer than {base.value}")
            for g in s.domain.grains():
                b = chrono.coarse_ordinal(base, g, unit) // n
                grains.setdefault(b, []).append(g)
                per = blocks.setdefault(b, {e.attribute: [] for e in entries})
                for e in entries:
                    per[e.attribute].extend(_values_of([s], e.source))
        for b in sorted(blocks):
            stats = [Summary.of(blocks[b][e.attribute]) for e in entries]
            fresh.append(_archive_state(obj.oid, entries, stats,
                                        TemporalDomain.from_grains(base, grains[b]), b))
    else:
        stats = [Summary.of(_values_of(selected, e.source)) for e in entries]
        domain = TemporalDomain.empty(selected[0].domain.unit)
        for s in selected:
            domain = chrono.domain_union(domain, s.domain)
        fresh.append(_archive_state(obj.oid, entries, stats, domain, None))

    archive = {(s.block, s.block is None): s for s in obj.archive}
    kept = [s for s in obj.archive]
    for f in fresh:
        key = (f.block, f.block is None)
        existing = archive.get(key)
        merged = _merge_into(existing, f, entries)
        if existing is not None:
            kept.remove(existing)
        kept.append(merged)
        archive[key] = merged
    remaining = tuple(s for s in obj.past if s not in selected)
    return obj.replace(past=remaining, archive=_by_time(kept))


# -- rules --------------------------------------------------------------------

def _select_states(store: Store, env: Environment, rule: ConfigRule) -> dict[str, list[State]]:
    cond = rule.condition
    picked: dict[str, list[State]] = {}
    if isinstance(cond, SelectionCondition):
        cls = store.schema.cls(cond.class_name)
        if cls.name not in env.class_names:
            raise RuleEvaluationError(f"class {cls.name} is outside environment {env.name}")
        for obj in store.extension(cls.name):
            for s in obj.past:
                bindings = {cond.object_var: obj, cond.state_var: s}
                if cond.where is None or P.holds(cond.where, bindings):
                    picked.setdefault(obj.oid, []).append(s)
        return picked
    if not P.holds(cond, {}):
        return picked
    for name in env.class_names:
        for obj in store.extension(name):
            if obj.past:
                picked[obj.oid] = list(obj.past)
    return picked


def apply_rules(store: Store, env: Environment, t: Instant) -> list[Firing]:
    """Fire the refresh rules of ``env``; archives the states each rule selects.

    A rule that fails to evaluate is skipped as a whole and reported as a
    firing carrying an error message.
    """
    firings: list[Firing] = []
    for rule in env.rules:
        if rule.event != "refresh":
            continue
        try:
            picked = _select_states(store, env, rule)
            updates = {}
            for oid, chosen in picked.items():
                obj = store.objects[oid]
                updates[oid] = archive_states(store.schema.cls(obj.class_name), obj, chosen)
        except (TwqError, KeyError) as exc:
            log.warning("rule %s skipped: %s", rule.name, exc)
            firings.append(Firing(rule.name, "", 0, f"{type(exc).__name__}: {exc}"))
            continue
        for oid in sorted(updates, key=store.oid_order):
            store.objects[oid] = updates[oid]
            firings.append(Firing(rule.name, oid, len(picked[oid])))
            log.info("rule %s fired on %s (%d states)", rule.name, oid, len(picked[oid]))
    return firings


# -- refresh ------------------------------------------------------------------

def _conform(cls: WarehouseClass, value: Record) -> Record:
    names = cls.attribute_names
    out = {n: None for n in names}
    for k, v in value.items():
        key = resolve(k, names)
        if key is None:
            raise TypeMismatch(f"{cls.name}: mapping produced undeclared attribute {k!r}")
        out[key] = v
    for a in cls.attributes:
        a.type.check(out[a.name], f"{cls.name}.{a.name}")
    return Record(out)


def refresh(store: Store, snapshot: SourceSnapshot, t: Instant) -> RefreshReport:
    """Fold one source snapshot into the store at extraction instant ``t``.

    All-or-nothing: mapping or typing failures leave the store untouched.
    """
    if store.last_refresh is not None:
        if store.last_refresh.unit is not t.unit:
            raise MixedUnits(f"store is refreshed in {store.last_refresh.unit.value}, got {t.unit.value}")
        if not t.ordinal > store.last_refresh.ordinal:
            raise NonMonotonicTimestamp(f"refresh at {t} is not after {store.last_refresh}")
    work = store.copy()
    report = RefreshReport(t)
    catalog = store.schema.sources or None
    for cls in store.schema.classes:
        if cls.mapping is None:
            continue
        try:
            rows = evaluate_mapping(cls.mapping, snapshot, catalog)
        except MappingError:
            raise
        except (PredicateTypeError, UnknownAttribute, TypeError) as exc:
            raise MappingError(f"mapping of {cls.name} failed: {exc}") from exc
        seen = set()
        for keys, raw in rows:
            value = _conform(cls, raw)
            ident = (cls.name, keys)
            oid = work.keys.get(ident)
            if oid is None:
                oid = work.allocate_oid(ident)
                work.objects[oid] = WarehouseObject(oid, cls.name, value, t, key=keys)
                report.created += 1
                seen.add(oid)
                continue
            seen.add(oid)
            obj = work.objects[oid]
            if cls.temporal_filter:
                old_p = state_structural_projection(cls, obj.current, Role.PAST)
                new_p = state_structural_projection(cls, value, Role.PAST)
            else:
                old_p = new_p = None
            if old_p != new_p:
                demoted = State(old_p, chrono.interval_domain(obj.since, t.shift(-1)), Role.PAST, oid)
                obj = obj.replace(current=value, since=t, past=coalesce(obj.past + (demoted,)),
                                  active=True)
                report.demoted += 1
            elif value != obj.current or not obj.active:
                obj = obj.replace(current=value, active=True)
                report.updated += 1
            work.objects[oid] = obj
        for obj in list(work.extension(cls.name)):
            if obj.oid not in seen and obj.active:
                work.objects[obj.oid] = obj.replace(active=False)
                report.inactive += 1
    work.last_refresh = t
    for env in store.schema.environments:
        for f in apply_rules(work, env, t):
            if f.error:
                report.errors.append(f"rule {f.rule}: {f.error}")
            else:
                report.firings.append(f)
                report.archived += f.states
    work.journal.extend(
        {"at": str(t), "rule": f.rule, "oid": f.oid, "states": f.states} for f in report.firings)
    store.commit(work)
    return report
