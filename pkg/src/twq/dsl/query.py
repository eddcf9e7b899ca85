"""Query language: AST, parser and printer.

A query is a sequence of bindings followed by one expression::

    SR = MakeSerie(Project(pp Flatten(Past(Select(p Patient, p.nom = "Dupond"))),
                           {pp.poids, pp.domT})) ;
    Agreg(SR, {(poids, avg(poids))})

Operator names follow the algebra (Select, Project, Join, Flatten, DupElim,
EmptyElim, Nest, UnNest, VUnion, VIntersect, VDifference, IUnion, IIntersect,
IDifference, Current, Past, Archive, State, IJoin, UJoin, UGroup, DGroup,
MakeSerie, Agreg, ACum, AMove, ScaleUp, ScaleDown) and are matched without
regard to case. An operand written ``v expr`` binds the range variable ``v``
to the elements of ``expr``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from twq.algebra import predicates as P
from twq.chrono import Duration, TemporalUnit
from twq.dsl.common import format_predicate, parse_operand, parse_predicate, parse_ref
from twq.dsl.ddl import format_agg_entries, parse_agg_entries, parse_unit
from twq.dsl.lexer import TokenStream
from twq.errors import DslSyntaxError

# argument shapes: expr, range, pred, proj, attr, window, rel, unit, duration, agg
SIGNATURES: dict[str, tuple[str, ...]] = {
    "Select": ("range", "pred"),
    "Project": ("range", "proj"),
    "Join": ("range", "range", "pred"),
    "Flatten": ("expr",),
    "DupElim": ("expr",),
    "EmptyElim": ("expr",),
    "Nest": ("expr", "attr"),
    "UnNest": ("expr", "attr"),
    "VUnion": ("expr", "expr"),
    "VIntersect": ("expr", "expr"),
    "VDifference": ("expr", "expr"),
    "IUnion": ("expr", "expr"),
    "IIntersect": ("expr", "expr"),
    "IDifference": ("expr", "expr"),
    "Current": ("expr",),
    "Past": ("expr",),
    "Archive": ("expr",),
    "State": ("expr", "window", "rel"),
    "IJoin": ("range", "range", "pred"),
    "UJoin": ("range", "range", "pred"),
    "UGroup": ("expr", "unit"),
    "DGroup": ("expr", "duration"),
    "MakeSerie": ("expr",),
    "Agreg": ("expr", "agg"),
    "ACum": ("expr", "agg"),
    "AMove": ("expr", "agg", "duration"),
    "ScaleUp": ("expr", "unit", "agg"),
    "ScaleDown": ("expr", "unit", "agg?"),
}
_CANONICAL = {name.lower(): name for name in SIGNATURES}
RESTRICT_RELATIONS = ("during", "strict_during", "contains", "precedes", "follows", "meets",
                      "ismeeted", "overlaps", "isoverlaped", "isduring", "starts", "isstarted",
                      "ends", "isfinished", "equals")


@dataclass(frozen=True)
class Name:
    """A class extent or an earlier binding."""

    name: str


@dataclass(frozen=True)
class Range:
    """``var expr``; ``var`` is empty when the operand is not named."""

    var: str
    expr: "Node"


@dataclass(frozen=True)
class Call:
    op: str
    args: tuple

    def __str__(self) -> str:
        return self.op


Node = Union[Name, Call]
ProjItem = tuple[str, P.AttrRef]


@dataclass(frozen=True)
class Query:
    bindings: tuple[tuple[str, Node], ...]
    result: Node


# -- parsing ------------------------------------------------------------------

def _is_range_start(ts: TokenStream) -> bool:
    a, b = ts.peek(), ts.peek(1)
    return a.kind == "ident" and b.kind == "ident"


def _range(ts: TokenStream) -> Range:
    if _is_range_start(ts):
        var = ts.ident()
        return Range(var, _node(ts))
    return Range("", _node(ts))


def _proj(ts: TokenStream) -> tuple[ProjItem, ...]:
    ts.expect("{")
    items = []
    for _ in ts.iter_until("}"):
        if ts.peek().kind == "ident" and ts.peek(1).is_(":") and not ts.peek(1).is_("::"):
            alias = ts.ident()
            ts.next()
            ref = parse_ref(ts)
        else:
            ref = parse_ref(ts)
            last = [s for s in ref.path if isinstance(s, str)]
            alias = last[-1] if last else ref.var
        items.append((alias, ref))
    return tuple(items)


def _duration(ts: TokenStream) -> Duration:
    tok = ts.peek()
    if not tok.is_word("duration"):
        raise ts.error("expected Duration(n, unit)")
    ts.next()
    ts.expect("(")
    n = ts.number("duration count")
    ts.expect(",")
    unit = parse_unit(ts)
    ts.expect(")")
    if n < 1:
        raise DslSyntaxError("duration count must be >= 1", tok.line, tok.col)
    return Duration(n, unit)


def _window(ts: TokenStream) -> P.Expr:
    tok = ts.peek()
    e = parse_operand(ts)
    if not isinstance(e, (P.DomTLit, P.DateLit)):
        raise DslSyntaxError("expected a DomT(...) or Date(...) window", tok.line, tok.col)
    return e


def _rel(ts: TokenStream) -> str:
    tok = ts.peek()
    name = ts.string() if tok.kind == "string" else ts.ident("Allen relation")
    if name.lower().replace("_", "") not in {r.replace("_", "") for r in RESTRICT_RELATIONS}:
        raise DslSyntaxError(f"unknown temporal relation {name!r}", tok.line, tok.col)
    key = name.lower()
    return "strict_during" if key.replace("_", "") == "strictduring" else key.replace("_", "")


def _node(ts: TokenStream) -> Node:
    tok = ts.peek()
    if tok.kind != "ident":
        raise ts.error("expected an operator or a name")
    if not ts.peek(1).is_("("):
        ts.next()
        return Name(tok.text)
    op = _CANONICAL.get(tok.text.lower())
    if op is None:
        raise DslSyntaxError(f"unknown operator {tok.text!r}", tok.line, tok.col)
    ts.next()
    ts.expect("(")
    args = []
    shapes = SIGNATURES[op]
    for i, shape in enumerate(shapes):
        optional = shape.endswith("?")
        shape = shape.rstrip("?")
        if i:
            if optional and ts.peek().is_(")"):
                break
            ts.expect(",")
        if shape == "expr":
            args.append(_node(ts))
        elif shape == "range":
            args.append(_range(ts))
        elif shape == "pred":
            args.append(parse_predicate(ts))
        elif shape == "proj":
            args.append(_proj(ts))
        elif shape == "attr":
            args.append(ts.ident("attribute"))
        elif shape == "window":
            args.append(_window(ts))
        elif shape == "rel":
            args.append(_rel(ts))
        elif shape == "unit":
            args.append(parse_unit(ts))
        elif shape == "duration":
            args.append(_duration(ts))
        elif shape == "agg":
            args.append(parse_agg_entries(ts))
    ts.expect(")")
    return Call(op, tuple(args))


def parse_query(text: str) -> Query:
    ts = TokenStream(text)
    bindings = []
    while ts.peek().kind == "ident" and ts.peek(1).is_("="):
        name = ts.ident()
        ts.next()
        bindings.append((name, _node(ts)))
        ts.expect(";")
    if ts.at_end() and bindings:
        # a script of bindings only yields its last binding
        result: Node = Name(bindings[-1][0])
    else:
        result = _node(ts)
        ts.accept(";")
    if not ts.at_end():
        raise ts.error("unexpected text after query")
    return Query(tuple(bindings), result)


# -- printing -----------------------------------------------------------------

def _format_unit(u: TemporalUnit) -> str:
    return u.value


def _format_arg(shape: str, arg, depth: int) -> str:
    shape = shape.rstrip("?")
    if shape == "expr":
        return format_node(arg, depth)
    if shape == "range":
        head = f"{arg.var} " if arg.var else ""
        return head + format_node(arg.expr, depth)
    if shape in ("pred", "window"):
        return format_predicate(arg)
    if shape == "proj":
        parts = []
        for alias, ref in arg:
            last = [s for s in ref.path if isinstance(s, str)]
            natural = last[-1] if last else ref.var
            parts.append(str(ref) if alias == natural else f"{alias}: {ref}")
        return "{" + ", ".join(parts) + "}"
    if shape in ("attr", "rel"):
        return arg
    if shape == "unit":
        return _format_unit(arg)
    if shape == "duration":
        return f"Duration({arg.count}, {_format_unit(arg.unit)})"
    if shape == "agg":
        return format_agg_entries(arg)
    raise TypeError(shape)


def format_node(node: Node, depth: int = 0) -> str:
    if isinstance(node, Name):
        return node.name
    shapes = SIGNATURES[node.op]
    args = [_format_arg(s, a, depth + 1) for s, a in zip(shapes, node.args)]
    flat = f"{node.op}({', '.join(args)})"
    if len(flat) + 2 * depth <= 78:
        return flat
    pad = "  " * (depth + 1)
    return f"{node.op}(\n{pad}" + f",\n{pad}".join(args) + ")"


def print_query(q: Query) -> str:
    lines = [f"{name} = {format_node(node)} ;" for name, node in q.bindings]
    if not (q.bindings and q.result == Name(q.bindings[-1][0])):
        lines.append(format_node(q.result))
    return "\n".join(lines) + "\n"


def walk(node: Node):
    """Yield every node of a tree, parents before children."""
    yield node
    if isinstance(node, Call):
        for a in node.args:
            if isinstance(a, Range):
                yield from walk(a.expr)
            elif isinstance(a, (Name, Call)):
                yield from walk(a)


def find_binding(q: Query, name: str) -> Optional[Node]:
    for n, node in q.bindings:
        if n == name:
            return node
    return None
