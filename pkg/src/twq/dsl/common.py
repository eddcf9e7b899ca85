"""Grammar fragments shared by the three languages: predicates and literals."""

from __future__ import annotations

import datetime as _dt
import re
from fractions import Fraction
from typing import Any, Optional

from twq.algebra import predicates as P
from twq.chrono import AllenRelation, Instant, TemporalUnit
from twq.dsl.lexer import TokenStream
from twq.errors import DslSyntaxError, InstantSyntaxError

TEMPORAL_TESTS = {r.value.lower(): r.value for r in AllenRelation} | {"contains": "contains"}
AND_WORDS = ("and",)
OR_WORDS = ("or",)
COMPARE_OPS = {"=": "=", "!=": "!=", "<>": "!=", "<": "<", "<=": "<=", ">": ">", ">=": ">="}

_FORMATS = {
    "mm-aaaa": (r"(\d{1,2})-(\d{4})", "month"),
    "mm-yyyy": (r"(\d{1,2})-(\d{4})", "month"),
    "aaaa-mm": (r"(\d{4})-(\d{1,2})", "month_iso"),
    "yyyy-mm": (r"(\d{4})-(\d{1,2})", "month_iso"),
    "jj-mm-aaaa": (r"(\d{1,2})-(\d{1,2})-(\d{4})", "day"),
    "dd-mm-yyyy": (r"(\d{1,2})-(\d{1,2})-(\d{4})", "day"),
    "aaaa": (r"(\d{4})", "year"),
    "yyyy": (r"(\d{4})", "year"),
}


def parse_instant(text: str, fmt: Optional[str] = None) -> Instant:
    """Instant from a DSL literal; ``fmt`` is the paper-style pattern such as ``mm-aaaa``."""
    if fmt is None:
        return Instant.parse(text)
    spec = _FORMATS.get(fmt.strip().lower())
    if spec is None:
        raise InstantSyntaxError(f"unknown date format {fmt!r}")
    pattern, shape = spec
    m = re.fullmatch(pattern, text.strip())
    if not m:
        raise InstantSyntaxError(f"{text!r} does not match format {fmt!r}")
    g = [int(x) for x in m.groups()]
    if shape == "month":
        if not 1 <= g[0] <= 12:
            raise InstantSyntaxError(f"bad month in {text!r}")
        return Instant.month(g[1], g[0])
    if shape == "month_iso":
        if not 1 <= g[1] <= 12:
            raise InstantSyntaxError(f"bad month in {text!r}")
        return Instant.month(g[0], g[1])
    if shape == "day":
        try:
            return Instant(TemporalUnit.DAY, _dt.date(g[2], g[1], g[0]).toordinal())
        except ValueError as exc:
            raise InstantSyntaxError(f"bad date {text!r}: {exc}") from None
    return Instant(TemporalUnit.YEAR, g[0])


def format_instant(i: Instant) -> str:
    """Printed form of a date literal's arguments."""
    if i.unit is TemporalUnit.MONTH:
        return f"'{i.index:02d}-{i.year:04d}', 'mm-aaaa'"
    return f"'{i}'"


def quote(s: str) -> str:
    if '"' not in s:
        return f'"{s}"'
    if "'" not in s:
        return f"'{s}'"
    return f"«{s}»"


def format_number(v: Any) -> str:
    if isinstance(v, Fraction):
        v = float(v)
    return repr(v)


# -- predicate grammar --------------------------------------------------------
#   or      := and ( ('or' | '||') and )*
#   and     := unary ( ('and' | '^' | '&&') unary )*
#   unary   := ('not' | '!') unary | compare
#   compare := operand ( compop operand )?
#   operand := literal | Date(..) | DomT(..) | allen '(' operand ',' operand ')'
#            | ref | '(' or ')'

def _instant_args(ts: TokenStream) -> list[str]:
    ts.expect("(")
    args = []
    for _ in ts.iter_until(")"):
        args.append(ts.string("date string"))
    return args


def _date(ts: TokenStream, tok) -> P.DateLit:
    args = _instant_args(ts)
    if len(args) not in (1, 2):
        raise DslSyntaxError("Date takes a value and an optional format", tok.line, tok.col)
    try:
        return P.DateLit(parse_instant(args[0], args[1] if len(args) == 2 else None))
    except InstantSyntaxError as exc:
        raise DslSyntaxError(str(exc), tok.line, tok.col) from None


def _domt(ts: TokenStream, tok) -> P.DomTLit:
    args = _instant_args(ts)
    if len(args) not in (2, 3):
        raise DslSyntaxError("DomT takes two bounds and an optional format", tok.line, tok.col)
    fmt = args[2] if len(args) == 3 else None
    try:
        a, b = parse_instant(args[0], fmt), parse_instant(args[1], fmt)
    except InstantSyntaxError as exc:
        raise DslSyntaxError(str(exc), tok.line, tok.col) from None
    if a.unit is not b.unit:
        raise DslSyntaxError("DomT bounds use different units", tok.line, tok.col)
    return P.DomTLit(a, b)


def parse_ref(ts: TokenStream, first: Optional[str] = None) -> P.AttrRef:
    var = first if first is not None else ts.ident("variable")
    path: list = []
    while True:
        if ts.peek().is_("."):
            if ts.peek(1).kind != "ident":
                break
            ts.next()
            path.append(ts.ident("attribute"))
        elif ts.peek().is_("["):
            ts.next()
            path.append(ts.number("index"))
            ts.expect("]")
        else:
            break
    return P.AttrRef(var, tuple(path))


def parse_operand(ts: TokenStream) -> P.Expr:
    tok = ts.peek()
    if tok.kind == "number":
        ts.next()
        return P.Literal(tok.value)
    if tok.is_("-") and ts.peek(1).kind == "number":
        ts.next()
        return P.Literal(-ts.next().value)
    if tok.kind == "string":
        ts.next()
        return P.Literal(tok.value)
    if tok.is_("("):
        ts.next()
        inner = parse_predicate(ts)
        ts.expect(")")
        return inner
    if tok.kind == "ident":
        word = tok.text.lower()
        if word in ("true", "false"):
            ts.next()
            return P.Literal(word == "true")
        if word == "null":
            ts.next()
            return P.Literal(None)
        if ts.peek(1).is_("("):
            if word == "date":
                ts.next()
                return _date(ts, tok)
            if word == "domt":
                ts.next()
                return _domt(ts, tok)
            key = word.replace("_", "")
            if key in TEMPORAL_TESTS:
                ts.next()
                ts.expect("(")
                left = parse_operand(ts)
                ts.expect(",")
                right = parse_operand(ts)
                ts.expect(")")
                return P.TemporalTest(TEMPORAL_TESTS[key], left, right)
            raise ts.error(f"unknown function {tok.text}")
        ts.next()
        return parse_ref(ts, tok.text)
    raise ts.error("expected an operand")


def _compare(ts: TokenStream) -> P.Expr:
    left = parse_operand(ts)
    tok = ts.peek()
    if tok.kind == "punct" and tok.text in COMPARE_OPS:
        ts.next()
        right = parse_operand(ts)
        return P.Compare(COMPARE_OPS[tok.text], left, right)
    return left


def _unary(ts: TokenStream) -> P.Expr:
    if ts.accept_word("not") or ts.accept("!"):
        return P.Not(_unary(ts))
    return _compare(ts)


def _and(ts: TokenStream) -> P.Expr:
    items = [_unary(ts)]
    while ts.accept_word(*AND_WORDS) or ts.accept("^", "&&"):
        items.append(_unary(ts))
    return items[0] if len(items) == 1 else P.And(tuple(items))


def parse_predicate(ts: TokenStream) -> P.Expr:
    items = [_and(ts)]
    while ts.accept_word(*OR_WORDS) or ts.accept("||"):
        items.append(_and(ts))
    return items[0] if len(items) == 1 else P.Or(tuple(items))


def _operand(e: P.Expr) -> str:
    text = format_predicate(e, False)
    return f"({text})" if isinstance(e, (P.Compare, P.Not)) else text


def format_predicate(e: P.Expr, top: bool = True) -> str:
    if isinstance(e, P.Literal):
        v = e.value
        if v is None:
            return "null"
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, str):
            return quote(v)
        return format_number(v)
    if isinstance(e, P.DateLit):
        return f"Date({format_instant(e.instant)})"
    if isinstance(e, P.DomTLit):
        if e.start.unit is TemporalUnit.MONTH:
            a, b = e.start, e.stop
            return f"DomT('{a.index:02d}-{a.year:04d}', '{b.index:02d}-{b.year:04d}', 'mm-aaaa')"
        return f"DomT('{e.start}', '{e.stop}')"
    if isinstance(e, P.AttrRef):
        return str(e)
    if isinstance(e, P.Compare):
        return f"{_operand(e.left)} {e.op} {_operand(e.right)}"
    if isinstance(e, P.TemporalTest):
        name = e.name if e.name == "contains" else e.name[0].lower() + e.name[1:]
        return f"{name}({format_predicate(e.left, False)}, {format_predicate(e.right, False)})"
    if isinstance(e, P.Not):
        return f"not {format_predicate(e.item, False)}"
    if isinstance(e, (P.And, P.Or)):
        word = " and " if isinstance(e, P.And) else " or "
        body = word.join(format_predicate(p, False) for p in e.items)
        return body if top else f"({body})"
    raise TypeError(f"cannot print predicate {e!r}")
