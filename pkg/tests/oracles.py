"""Grain-expansion oracles for the temporal and analytic operators.

Every state is expanded to its (grain, value) pairs; each oracle recomputes
an operator's result from those pairs alone and the suite compares.
"""

from __future__ import annotations

import random
from fractions import Fraction

from twq import algebra as A
from twq.algebra.collections import Collection
from twq import chrono
from twq.chrono import AllenRelation as R, Duration, TemporalDomain, TemporalUnit
from twq.lifecycle import coalesce
from twq.model import Role, State
from twq.values import Record, sort_key

from support import all_domains

M = TemporalUnit.MONTH
ORIGIN = 24006  # 2000-07
FNS = ("avg", "sum", "count", "min", "max")
OPS = ("ijoin", "ujoin", "ugroup", "dgroup", "acum", "amove", "scale_up")


def random_fixture(rng: random.Random) -> list[tuple[State, ...]]:
    """Up to 4 objects, each with coalesced past states over at most 12 months."""
    objects = []
    for o in range(rng.randint(1, 4)):
        span = rng.randint(1, 12)
        start = ORIGIN + rng.randint(0, 12 - span)
        table = {g: rng.randint(1, 4) for g in range(start, start + span) if rng.random() < 0.8}
        if not table:
            table = {start: 1}
        raw = [State(Record(poids=v), TemporalDomain.from_grains(M, [g]), Role.PAST, f"OID{o + 1}")
               for g, v in table.items()]
        objects.append(coalesce(raw))
    return objects


def expand(states) -> list[tuple[int, int, Record]]:
    """(state index, grain, value) triples."""
    return [(i, g, s.value) for i, s in enumerate(states) for g in s.domain.grains()]


def _norm(pairs: dict) -> dict:
    return {k: TemporalDomain.from_grains(M, gs) for k, gs in pairs.items() if gs}


def _as_map(coll: Collection) -> dict:
    return {s.value: s.domain for s in coll}


def _concat(a: Record, b: Record) -> Record:
    return Record({"left.poids": a["poids"], "right.poids": b["poids"]})


def oracle_ijoin(e1, e2, test) -> dict:
    out: dict = {}
    for _, g1, v1 in expand(e1):
        for _, g2, v2 in expand(e2):
            if g1 == g2 and test(v1, v2):
                out.setdefault(_concat(v1, v2), set()).add(g1)
    return _norm(out)


def oracle_ujoin(e1, e2, test) -> dict:
    x1, x2 = expand(e1), expand(e2)
    out: dict = {}
    for i, g1, v1 in x1:
        for j, g2, v2 in x2:
            if g1 == g2 and test(v1, v2):
                grains = {g for k, g, _ in x1 if k == i} | {g for k, g, _ in x2 if k == j}
                out.setdefault(_concat(v1, v2), set()).update(grains)
    return _norm(out)


def _groups(states, window_of) -> list:
    members: dict = {}
    for i, g, v in expand(states):
        members.setdefault(window_of(g), {})[i] = v
    return [(w, sorted(members[w].values(), key=sort_key)) for w in sorted(members)]


def oracle_ugroup(states) -> list:
    return _groups(states, lambda g: (g // 3, g // 3))


def oracle_dgroup(states, n) -> list:
    origin = min(g for _, g, _ in expand(states))
    return _groups(states, lambda g: (origin + (g - origin) // n * n, origin + (g - origin) // n * n + n - 1))


def aggregate(fn: str, values: list):
    if fn == "avg":
        return Fraction(sum(values), len(values))
    if fn == "sum":
        return sum(values)
    if fn == "count":
        return len(values)
    return min(values) if fn == "min" else max(values)


def serie_elements(states) -> list[tuple[int, int, int]]:
    """(lo, hi, poids) per interval, in time order."""
    return sorted((lo, hi, s.value["poids"]) for s in states for lo, hi in s.domain.spans)


def oracle_acum(states, fn) -> list:
    els = serie_elements(states)
    origin, last = els[0][0], els[-1][1]
    return [((origin, g), aggregate(fn, [v for lo, _, v in els if lo <= g]))
            for g in range(origin, last + 1)]


def _windowed(els, fn, window_of) -> list:
    members: dict = {}
    for idx, (lo, hi, v) in enumerate(els):
        for g in range(lo, hi + 1):
            members.setdefault(window_of(g), {})[idx] = v
    return [(w, aggregate(fn, list(members[w].values()))) for w in sorted(members)]


def oracle_amove(states, fn, n) -> list:
    els = serie_elements(states)
    origin = els[0][0]
    return _windowed(els, fn, lambda g: (origin + (g - origin) // n * n,
                                         origin + (g - origin) // n * n + n - 1))


def oracle_scale_up(states, fn) -> list:
    return _windowed(serie_elements(states), fn, lambda g: (g // 3, g // 3))


def _series_pairs(coll: Collection) -> list:
    return [(s.domain.spans[0], s.value["poids"]) for s in coll]


def _group_pairs(coll: Collection) -> list:
    return [(t.domain.spans[0], sorted(t.values, key=sort_key)) for t in coll]


def check_fixture(seed: int) -> dict[str, int]:
    """Mismatch count per operator for the fixture drawn from ``seed``."""
    rng = random.Random(seed)
    objs = random_fixture(rng)
    e1 = objs[0]
    e2 = objs[rng.randrange(len(objs))] if len(objs) > 1 else objs[0]
    everything = tuple(s for o in objs for s in o)
    op = rng.choice(["<", "=", "!="])
    test = {"<": lambda a, b: a["poids"] < b["poids"], "=": lambda a, b: a["poids"] == b["poids"],
            "!=": lambda a, b: a["poids"] != b["poids"]}[op]
    pred = lambda env: test(env["left"].value, env["right"].value)  # noqa: E731
    fn = rng.choice(FNS)
    n = rng.randint(1, 4)
    spec = [("poids", fn)]
    sr = A.make_serie(A.states(e1))
    miss = dict.fromkeys(OPS, 0)
    checks = {
        "ijoin": (lambda: _as_map(A.ijoin(A.states(e1), A.states(e2), pred)),
                  lambda: oracle_ijoin(e1, e2, test)),
        "ujoin": (lambda: _as_map(A.ujoin(A.states(e1), A.states(e2), pred)),
                  lambda: oracle_ujoin(e1, e2, test)),
        "ugroup": (lambda: _group_pairs(A.ugroup(A.states(everything), TemporalUnit.QUARTER)),
                   lambda: oracle_ugroup(everything)),
        "dgroup": (lambda: _group_pairs(A.dgroup(A.states(everything), Duration(n, M))),
                   lambda: oracle_dgroup(everything, n)),
        "acum": (lambda: _series_pairs(A.acum(sr, spec)), lambda: oracle_acum(e1, fn)),
        "amove": (lambda: _series_pairs(A.amove(sr, spec, Duration(n, M))),
                  lambda: oracle_amove(e1, fn, n)),
        "scale_up": (lambda: _series_pairs(A.scale_up(sr, TemporalUnit.QUARTER, spec)),
                     lambda: oracle_scale_up(e1, fn)),
    }
    for name, (got, want) in checks.items():
        if got() != want():
            miss[name] += 1
    return miss


def run_suite(count: int = 500) -> dict[str, int]:
    total = dict.fromkeys(OPS, 0)
    for seed in range(count):
        for k, v in check_fixture(seed).items():
            total[k] += v
    return total


# -- Allen oracle ----------------------------------------------------------------
# Table of definitions evaluated literally over the interval lists.

def allen_oracle(x, y, rel):
    X, Y = x.spans, y.spans
    if rel is R.PRECEDES:
        return X[-1][1] < Y[0][0]
    if rel is R.MEETS:
        return X[-1][1] == Y[0][0]
    if rel is R.OVERLAPS:
        return any(a < c and c < b and b < d for a, b in X for c, d in Y)
    if rel is R.DURING:
        return all(any(a > c and b < d for c, d in Y) for a, b in X)
    if rel is R.STARTS:
        return X[0][0] == Y[0][0]
    if rel is R.ENDS:
        return X[-1][1] == Y[-1][1]
    if rel is R.EQUALS:
        return len(X) == len(Y) and all(p == q for p, q in zip(X, Y))
    return allen_oracle(y, x, rel.reciprocal)


def check_allen_universe(n):
    """Mismatches and reciprocity failures over every pair of an ``n``-grain universe."""
    doms = all_domains(n)
    mismatches, recip, pairs = 0, 0, 0
    for x in doms:
        for y in doms:
            pairs += 1
            for rel in R:
                got = chrono.allen_relate(x, y, rel)
                if got != allen_oracle(x, y, rel):
                    mismatches += 1
                if got != chrono.allen_relate(y, x, rel.reciprocal):
                    recip += 1
    return pairs, mismatches, recip
