"""Query evaluation against a store."""

from __future__ import annotations

from typing import Optional

from twq import algebra as A
from twq.algebra import predicates as P
from twq.algebra.collections import Collection
from twq.chrono import Instant, interval_domain
from twq.dsl.query import Call, Name, Node, Query, Range
from twq.errors import QueryError, TwqError
from twq.names import resolve
from twq.store import Store


class _Evaluator:
    def __init__(self, store: Store, as_of: Optional[Instant]):
        self.store = store
        self.as_of = as_of if as_of is not None else store.last_refresh
        self.names: dict[str, Collection] = {}

    def name(self, node: Name) -> Collection:
        if node.name in self.names:
            return self.names[node.name]
        schema = self.store.schema
        key = resolve(node.name, [c.name for c in schema.classes])
        if key is None:
            raise QueryError(node.name, KeyError(f"unknown class or binding {node.name!r}"))
        return A.objects_of(self.store.extension(key))

    def node(self, node: Node) -> Collection:
        if isinstance(node, Name):
            return self.name(node)
        sub = [self.node(a.expr if isinstance(a, Range) else a)
               if isinstance(a, (Range, Name, Call)) else a for a in node.args]
        try:
            return self.apply(node, sub)
        except QueryError:
            raise
        except TwqError as exc:
            raise QueryError(node.op, exc) from exc

    def apply(self, node: Call, sub: list) -> Collection:
        op, args = node.op, node.args

        def var(i: int, default: str = "") -> str:
            return args[i].var or default

        if op == "Select":
            return A.select(sub[0], var(0), sub[1])
        if op == "Project":
            return A.project(sub[0], var(0), sub[1])
        if op == "Join":
            return A.join(sub[0], var(0), sub[1], var(1), sub[2])
        if op == "Flatten":
            return A.flatten(sub[0])
        if op == "DupElim":
            return A.dup_elim(sub[0])
        if op == "EmptyElim":
            return A.empty_elim(sub[0])
        if op == "Nest":
            return A.nest(sub[0], sub[1])
        if op == "UnNest":
            return A.unnest(sub[0], sub[1])
        if op[1:] in ("Union", "Intersect", "Difference"):
            eq = "value" if op[0] == "V" else "identity"
            return A.set_combine(op[1:].lower(), eq, sub[0], sub[1])
        if op == "Current":
            return A.current(sub[0], self.as_of)
        if op == "Past":
            return A.past(sub[0])
        if op == "Archive":
            return A.archive(sub[0])
        if op == "State":
            window = sub[1]
            dom = window.domain if isinstance(window, P.DomTLit) else interval_domain(window.instant)
            return A.state_restrict(sub[0], dom, sub[2], self.as_of)
        if op == "IJoin":
            return A.ijoin(sub[0], sub[1], sub[2], var(0, "left"), var(1, "right"))
        if op == "UJoin":
            return A.ujoin(sub[0], sub[1], sub[2], var(0, "left"), var(1, "right"))
        if op == "UGroup":
            return A.ugroup(sub[0], sub[1])
        if op == "DGroup":
            return A.dgroup(sub[0], sub[1])
        if op == "MakeSerie":
            return A.make_serie(sub[0])
        if op == "Agreg":
            return A.agreg(sub[0], sub[1])
        if op == "ACum":
            return A.acum(sub[0], sub[1])
        if op == "AMove":
            return A.amove(sub[0], sub[1], sub[2])
        if op == "ScaleUp":
            return A.scale_up(sub[0], sub[1], sub[2])
        if op == "ScaleDown":
            return A.scale_down(sub[0], sub[1], sub[2] if len(sub) > 2 else ())
        raise QueryError(op, KeyError(f"unknown operator {op}"))


def evaluate(q: Query, store: Store, as_of: Optional[Instant] = None) -> Collection:
    """Evaluate ``q``; current states are read as of ``as_of`` (default: last refresh)."""
    ev = _Evaluator(store, as_of)
    for name, node in q.bindings:
        ev.names[name] = ev.node(node)
    return ev.node(q.result)
