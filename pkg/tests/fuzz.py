"""Random query ASTs for the print/parse round trip."""

from __future__ import annotations

import random

from twq.aggregate import AggKind, AggregationFn
from twq.algebra import predicates as P
from twq.chrono import AllenRelation, Duration, Instant, TemporalUnit
from twq.dsl.query import RESTRICT_RELATIONS, SIGNATURES, Call, Name, Query, Range, parse_query, print_query
from twq.model import ArchiveEntry

IDENTS = ("p", "pp", "x", "poids", "tension", "nom", "prénom", "SR", "Patient", "v_1")
STRINGS = ("Dupond", "Michel", "d'Artagnan", 'say "hi"', 'l\'"x"', "", "été")
UNITS = (TemporalUnit.DAY, TemporalUnit.MONTH, TemporalUnit.QUARTER, TemporalUnit.YEAR)
RELS = tuple(r if r == "strict_during" else r.replace("_", "") for r in RESTRICT_RELATIONS)
TESTS = tuple(r.value for r in AllenRelation) + ("contains",)
OPS = tuple(SIGNATURES)


def _instant(rng: random.Random, unit: TemporalUnit) -> Instant:
    if unit is TemporalUnit.DAY:
        return Instant(unit, rng.randint(730000, 740000))
    if unit is TemporalUnit.YEAR:
        return Instant(unit, rng.randint(1990, 2010))
    return Instant(unit, rng.randint(23900, 24200) // (3 if unit is TemporalUnit.QUARTER else 1))


def _ref(rng: random.Random) -> P.AttrRef:
    path = []
    for _ in range(rng.randint(0, 2)):
        path.append(rng.choice(IDENTS[3:7]))
    if path and rng.random() < 0.2:
        path.append(rng.randint(0, 3))
    return P.AttrRef(rng.choice(IDENTS[:3]), tuple(path))


def _atom(rng: random.Random) -> P.Expr:
    r = rng.random()
    if r < 0.4:
        return _ref(rng)
    if r < 0.55:
        return P.Literal(rng.randint(-50, 200))
    if r < 0.7:
        return P.Literal(rng.choice(STRINGS))
    if r < 0.75:
        return P.Literal(rng.choice((True, False, None)))
    unit = rng.choice(UNITS)
    if r < 0.85:
        return P.DateLit(_instant(rng, unit))
    a, b = sorted((_instant(rng, unit), _instant(rng, unit)), key=lambda i: i.ordinal)
    return P.DomTLit(a, b)


def random_predicate(rng: random.Random, depth: int = 0) -> P.Expr:
    r = rng.random() if depth < 3 else 0.0
    if r < 0.45:
        return P.Compare(rng.choice(("=", "!=", "<", "<=", ">", ">=")), _atom(rng), _atom(rng))
    if r < 0.55:
        return P.TemporalTest(rng.choice(TESTS), _atom(rng), _atom(rng))
    if r < 0.65:
        return _atom(rng)
    if r < 0.75:
        return P.Not(random_predicate(rng, depth + 1))
    items = tuple(random_predicate(rng, depth + 1) for _ in range(rng.randint(2, 3)))
    return P.And(items) if r < 0.88 else P.Or(items)


def _agg(rng: random.Random) -> tuple:
    return tuple(ArchiveEntry(rng.choice(IDENTS[3:7]),
                              AggregationFn(rng.choice(list(AggKind)), rng.random() < 0.3),
                              rng.choice(IDENTS[3:7]))
                 for _ in range(rng.randint(1, 3)))


def random_node(rng: random.Random, depth: int = 0) -> Call | Name:
    if depth >= 4 or rng.random() < 0.2:
        return Name(rng.choice(IDENTS[7:]))
    op = rng.choice(OPS)
    args = []
    for shape in SIGNATURES[op]:
        if shape == "agg?":
            if rng.random() < 0.5:
                args.append(_agg(rng))
            continue
        if shape == "expr":
            args.append(random_node(rng, depth + 1))
        elif shape == "range":
            args.append(Range(rng.choice(("", "p", "pp")), random_node(rng, depth + 1)))
        elif shape == "pred":
            args.append(random_predicate(rng))
        elif shape == "proj":
            items = []
            for _ in range(rng.randint(1, 3)):
                ref = _ref(rng)
                last = [s for s in ref.path if isinstance(s, str)]
                natural = last[-1] if last else ref.var
                items.append((rng.choice((natural, "alias")), ref))
            args.append(tuple(items))
        elif shape == "attr":
            args.append(rng.choice(IDENTS[3:7]))
        elif shape == "window":
            unit = rng.choice(UNITS)
            a, b = sorted((_instant(rng, unit), _instant(rng, unit)), key=lambda i: i.ordinal)
            args.append(P.DomTLit(a, b) if rng.random() < 0.7 else P.DateLit(a))
        elif shape == "rel":
            args.append(rng.choice(RELS))
        elif shape == "unit":
            args.append(rng.choice(UNITS))
        elif shape == "duration":
            args.append(Duration(rng.randint(1, 12), rng.choice(UNITS)))
        elif shape == "agg":
            args.append(_agg(rng))
    return Call(op, tuple(args))


def random_query(rng: random.Random) -> Query:
    bindings = tuple((f"B{i}", random_node(rng)) for i in range(rng.randint(0, 2)))
    return Query(bindings, random_node(rng))


def roundtrip_failures(count: int = 1000, seed: int = 0) -> list[Query]:
    rng = random.Random(seed)
    bad = []
    for _ in range(count):
        q = random_query(rng)
        try:
            back = parse_query(print_query(q))
        except Exception:  # a parse failure counts as a mismatch
            back = None
        if back != q:
            bad.append(q)
    return bad
