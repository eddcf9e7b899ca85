"""Shared fixtures and brute-force oracles for the test suite."""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from twq import lifecycle
from twq.chrono import Instant, TemporalDomain, TemporalUnit
from twq.dsl import parse_ddl
from twq.extraction import load_snapshot, parse_snapshot
from twq.store import Store

FIXTURES = Path(__file__).parent / "fixtures"
PATIENT_DDL = FIXTURES / "patient.ddl"
DUPOND = sorted((FIXTURES / "dupond").glob("*.jsonl"))
M = TemporalUnit.MONTH

SELECT_DUPOND = 'Select(p Patient, p.nom=<«Dupond» ^ p.prénom=<«Michel»)'
SR_BINDING = ("SR = MakeSerie(Project(pp Flatten(Past(" + SELECT_DUPOND + ")),"
              " {pp.poids, pp.domT})) ;\n")


def month(text: str) -> Instant:
    return Instant.parse(text)


def dom(*spans) -> TemporalDomain:
    """``dom(("2000-07", "2000-07"), "2000-09")`` shorthand."""
    return TemporalDomain.of(*spans)


def patient_doc():
    return parse_ddl(PATIENT_DDL.read_text(encoding="utf-8"))


def replay(paths=DUPOND, store: Store | None = None) -> Store:
    st = store or Store(patient_doc().schema)
    for path in paths:
        t = Instant.parse(path.stem)
        lifecycle.refresh(st, load_snapshot(path, t), t)
    return st


def snapshot(poids, tension=(10, 16), key="1", nom="Dupond", extra=()):
    rows = [("P" + key, "V" + key, nom, poids, tension)] + list(extra)
    lines = []
    for pk, vk, n, w, (lo, hi) in rows:
        lines.append(json.dumps({"class": "Personnes", "key": pk,
                                 "attributes": {"nom": n, "prenom": ["Michel"]},
                                 "relationships": {"parametres": vk}}))
        lines.append(json.dumps({"class": "Variables", "key": vk,
                                 "attributes": {"poids": w, "tension": {"min": lo, "max": hi},
                                                "hematocrite": 40, "plaquettes": 200, "uree": 5},
                                 "relationships": {"patient": pk}}))
    return parse_snapshot(lines)


def grains(d: TemporalDomain) -> set[int]:
    return set(d.grains())


def all_domains(n: int, unit: TemporalUnit = M, origin: int = 24000):
    """Every non-empty domain over an ``n``-grain universe."""
    out = []
    for mask in range(1, 1 << n):
        out.append(TemporalDomain.from_grains(unit, (origin + i for i in range(n) if mask >> i & 1)))
    return out


def avg(values) -> Fraction:
    values = list(values)
    return Fraction(sum(values), len(values))
