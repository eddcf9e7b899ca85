"""Rendering of query results and object histories.

Three modes:

``text``
    one element per line, ISO-like instants, full numeric precision.
``paper``
    the bracketed notation ``[poids=79 ; domT=<[08-2000;08-2000]>]``, with
    numbers truncated (not rounded) to one decimal and a decimal comma,
    and coarse grains written as their month span.
``json``
    a JSON document.
"""

from __future__ import annotations

import datetime as _dt
import json
import math
from fractions import Fraction
from typing import Any, Optional

from twq import chrono
from twq.algebra.collections import Collection, GroupTuple, JoinRow, Kind
from twq.chrono import Instant, TemporalDomain, TemporalUnit
from twq.model import State, WarehouseObject
from twq.values import Record, Ref, is_number

MODES = ("text", "paper", "json")


# -- scalars ------------------------------------------------------------------

def paper_number(x: Any) -> str:
    """One decimal, truncated toward zero, comma separator; integers stay bare."""
    q = Fraction(x) if not isinstance(x, float) else Fraction(repr(x))
    tenths = math.trunc(q * 10)
    whole, frac = divmod(abs(tenths), 10)
    sign = "-" if tenths < 0 else ""
    return f"{sign}{whole}" if frac == 0 else f"{sign}{whole},{frac}"


def text_number(x: Any) -> str:
    if isinstance(x, Fraction):
        return format(float(x), ".10g")
    return repr(x)


def _scalar(v: Any, paper: bool) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if is_number(v):
        return paper_number(v) if paper else text_number(v)
    if isinstance(v, Ref):
        return str(v)
    if isinstance(v, str):
        return v if paper else json.dumps(v, ensure_ascii=False)
    return str(v)


# -- domains ------------------------------------------------------------------

def _paper_grain(unit: TemporalUnit, ordinal: int, end: bool) -> str:
    if unit is TemporalUnit.DAY:
        day = _dt.date.fromordinal(ordinal)
        return f"{day.day:02d}-{day.month:02d}-{day.year:04d}"
    span = chrono.convert_grain(Instant(unit, ordinal), TemporalUnit.MONTH)
    m = span.end if end else span.start
    return f"{m.index:02d}-{m.year:04d}"


def paper_domain(d: TemporalDomain, open_end: bool = False) -> str:
    if d.unit is None or d.is_empty():
        return "<>"
    parts = []
    for i, (s, e) in enumerate(d.spans):
        last = "*" if open_end and i == len(d.spans) - 1 else _paper_grain(d.unit, e, True)
        parts.append(f"[{_paper_grain(d.unit, s, False)};{last}]")
    return "<" + " ; ".join(parts) + ">"


def text_domain(d: TemporalDomain, open_end: bool = False) -> str:
    text = str(d)
    if open_end and d.spans:
        cut = text.rfind(",")
        text = text[:cut + 1] + "*]>"
    return text


# -- values -------------------------------------------------------------------

def _value(v: Any, paper: bool, top: bool = False) -> str:
    if isinstance(v, Record):
        if paper:
            sep = " ; " if top else " ;"
            return "[" + sep.join(f"{k}={_value(x, True)}" for k, x in v.items()) + "]"
        return "{" + ", ".join(f"{k}: {_value(x, False)}" for k, x in v.items()) + "}"
    if isinstance(v, tuple):
        return "{" + ", ".join(_value(x, paper) for x in v) + "}"
    return _scalar(v, paper)


def _with_domain(value: Record, domain: TemporalDomain, paper: bool, open_end: bool = False) -> str:
    if paper:
        fields = [f"{k}={_value(x, True)}" for k, x in value.items()]
        fields.append(f"domT={paper_domain(domain, open_end)}")
        return "[" + " ; ".join(fields) + "]"
    return f"{_value(value, False)} @ {text_domain(domain, open_end)}"


def render_element(e: Any, mode: str = "text", as_of: Optional[Instant] = None) -> str:
    paper = mode == "paper"
    if isinstance(e, State):
        return _with_domain(e.value, e.domain, paper)
    if isinstance(e, WarehouseObject):
        body = _with_domain(e.current, e.current_state(as_of).domain, paper, open_end=True)
        return f"{e.oid} {body}"
    if isinstance(e, GroupTuple):
        vals = "{" + (" ; " if paper else ", ").join(_value(v, paper) for v in e.values) + "}"
        if paper:
            return f"[values={vals} ; domT={paper_domain(e.domain)}]"
        return f"{vals} @ {text_domain(e.domain)}"
    if isinstance(e, JoinRow):
        return _value(e.value, paper, top=True)
    if isinstance(e, Record):
        return _value(e, paper, top=True)
    return _scalar(e, paper)


# -- collections --------------------------------------------------------------

def _paper(c: Collection, as_of: Optional[Instant]) -> str:
    if c.kind is Kind.VALUE:
        return _value(c.value, True, top=True)
    if c.kind in (Kind.STATE_SETS, Kind.OBJECT_SETS):
        return "{" + " ;\n".join(_paper_set(inner, as_of) for inner in c.items) + "}"
    if c.kind is Kind.SERIES:
        return "<" + " ;\n".join(render_element(e, "paper", as_of) for e in c.items) + ">"
    return _paper_set(c.items, as_of)


def _paper_set(items, as_of: Optional[Instant]) -> str:
    return "{" + " ;\n".join(render_element(e, "paper", as_of) for e in items) + "}"


def _text(c: Collection, as_of: Optional[Instant]) -> str:
    head = f"{c.kind.value} ({len(c.items)})" if c.kind is not Kind.VALUE else c.kind.value
    lines = [head]
    if c.kind is Kind.VALUE:
        lines.append("  " + _value(c.value, False))
    elif c.kind in (Kind.STATE_SETS, Kind.OBJECT_SETS):
        for i, inner in enumerate(c.items, 1):
            lines.append(f"  #{i}")
            lines.extend("    " + render_element(e, "text", as_of) for e in inner)
    else:
        lines.extend("  " + render_element(e, "text", as_of) for e in c.items)
    return "\n".join(lines)


def to_jsonable(v: Any) -> Any:
    if isinstance(v, Record):
        return {k: to_jsonable(x) for k, x in v.items()}
    if isinstance(v, tuple):
        return [to_jsonable(x) for x in v]
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else float(v)
    if isinstance(v, Ref):
        return {"$ref": v.oid}
    if isinstance(v, TemporalDomain):
        return str(v)
    return v


def _json_element(e: Any, as_of: Optional[Instant]) -> Any:
    if isinstance(e, State):
        return {"value": to_jsonable(e.value), "domT": str(e.domain), "role": e.role.value}
    if isinstance(e, WarehouseObject):
        return {"oid": e.oid, "class": e.class_name, "value": to_jsonable(e.current),
                "since": str(e.since), "domT": str(e.current_state(as_of).domain)}
    if isinstance(e, GroupTuple):
        return {"domT": str(e.domain), "values": to_jsonable(e.values)}
    if isinstance(e, JoinRow):
        return to_jsonable(e.value)
    if isinstance(e, tuple):
        return [_json_element(x, as_of) for x in e]
    return to_jsonable(e)


def render(c: Collection, mode: str = "text", as_of: Optional[Instant] = None) -> str:
    if mode not in MODES:
        raise ValueError(f"unknown output mode {mode!r}")
    if mode == "paper":
        return _paper(c, as_of)
    if mode == "json":
        items = to_jsonable(c.value) if c.kind is Kind.VALUE else [_json_element(e, as_of) for e in c.items]
        return json.dumps({"kind": c.kind.value, "items": items}, ensure_ascii=False, indent=2)
    return _text(c, as_of)


def render_history(obj: WarehouseObject, mode: str = "text", as_of: Optional[Instant] = None) -> str:
    """Current, past and archive states of one object."""
    if mode == "json":
        return json.dumps({
            "oid": obj.oid, "class": obj.class_name, "key": list(obj.key), "active": obj.active,
            "current": {"value": to_jsonable(obj.current), "since": str(obj.since)},
            "past": [_json_element(s, as_of) for s in obj.past],
            "archive": [_json_element(s, as_of) for s in obj.archive],
        }, ensure_ascii=False, indent=2)
    paper = mode == "paper"
    status = "" if obj.active else " (inactive)"
    open_dom = chrono.interval_domain(obj.since)
    lines = [f"{obj.oid} {obj.class_name}{status}",
             "  current: " + _with_domain(obj.current, open_dom, paper, open_end=True)]
    for label, group in (("past", obj.past), ("archive", obj.archive)):
        lines.append(f"  {label}:" + ("" if group else " none"))
        ordered = sorted(group, key=lambda s: s.domain.spans[0][0] if s.domain.spans else 0)
        lines.extend("    " + _with_domain(s.value, s.domain, paper) for s in ordered)
    return "\n".join(lines)
