import functools
import random

import pytest
from hypothesis import given, settings, strategies as st

from twq.algebra import predicates as P
from twq.algebra.collections import Kind
from twq.chrono import Duration, Instant, TemporalUnit
from twq.dsl import evaluate, parse_ddl, parse_query, parse_rule, print_ddl, print_query, typecheck
from twq.dsl.query import Call, Name, Query, Range
from twq.errors import (
    DslSyntaxError,
    KindMismatch,
    QueryError,
    UnknownAttribute,
    UnsupportedAction,
    UnsupportedEvent,
)
from twq.model import SelectionCondition
from twq.store import Store
from twq.values import Record

import fuzz
from support import SELECT_DUPOND, SR_BINDING, M, replay

AVG = "{(poids, avg(poids))}"


@functools.cache
def dupond():
    return replay()


# -- DDL -----------------------------------------------------------------------

def test_patient_ddl(patient_doc):
    (cls,) = patient_doc.schema.classes
    assert cls.name == "PATIENT"
    assert [e[0] for e in cls.temporal_filter.entries] == ["poids", "tension"]
    (entry,) = cls.archive_filter.entries
    assert (entry.attribute, entry.fn.name, entry.source) == ("poids", "t_avg", "poids")
    assert cls.archive_filter.grain == (M, 6)
    (env,) = patient_doc.schema.environments
    assert env.class_names == ("PATIENT",) and [r.name for r in env.rules] == ["critere_archive"]


def test_ddl_round_trip(patient_doc):
    text = print_ddl(patient_doc)
    again = parse_ddl(text)
    assert again.schema == patient_doc.schema
    assert print_ddl(again) == text


def test_ddl_syntax_errors_carry_positions():
    with pytest.raises(DslSyntaxError) as err:
        parse_ddl("schema s ;\ninterface A {\n  attribute Integer ;\n}")
    assert err.value.line == 3
    with pytest.raises(DslSyntaxError, match="undeclared environment"):
        parse_ddl("rule r on Nowhere when self.refresh() if true then archive() ;")


def test_parse_rule():
    r = parse_rule("rule r on Evolution when self.refresh() if select e from p in PATIENT, "
                   "e in p.PastStates() where e.poids < 70 then e.archive() ;")
    assert (r.name, r.on, r.event, r.action) == ("r", "Evolution", "refresh", "archive")
    assert isinstance(r.condition, SelectionCondition) and r.condition.class_name == "PATIENT"
    with pytest.raises(UnsupportedEvent):
        parse_rule("rule r on E when self.delete() if true then archive() ;")
    with pytest.raises(UnsupportedAction):
        parse_rule("rule r on E when self.refresh() if true then e.purge() ;")


# -- query syntax --------------------------------------------------------------------

def test_parse_query_examples():
    q = parse_query(SR_BINDING + "Agreg(SR, " + AVG + ")")
    assert [name for name, _ in q.bindings] == ["SR"]
    assert q.result.op == "Agreg" and q.result.args[0] == Name("SR")
    sel = parse_query(SELECT_DUPOND).result
    assert sel.args[0] == Range("p", Name("Patient"))
    assert sel.args[1] == P.And((P.Compare("=", P.AttrRef("p", ("nom",)), P.Literal("Dupond")),
                                 P.Compare("=", P.AttrRef("p", ("prénom",)), P.Literal("Michel"))))
    amove = parse_query("amove(SR, {(poids, avg(poids))}, Duration(2, month))").result
    assert amove.op == "AMove" and amove.args[2] == Duration(2, M)
    state = parse_query("State(SR, DomT('07-2000', '12-2000', 'mm-aaaa'), During)").result
    assert state.args[1] == P.DomTLit(Instant.parse("2000-07"), Instant.parse("2000-12"))
    assert state.args[2] == "during"


@pytest.mark.parametrize("text", ["Select(p Patient)", "Frobnicate(Patient)", "Patient Patient",
                                  "AMove(SR, {(poids, avg(poids))}, Duration(0, month))",
                                  "State(SR, 3, during)", "Agreg(SR, {(poids, median(poids))})"])
def test_query_syntax_errors(text):
    with pytest.raises(DslSyntaxError):
        parse_query(text)


def test_print_parse_round_trip_1000_asts():
    assert fuzz.roundtrip_failures(1000, seed=0) == []


@given(st.randoms(use_true_random=False))
def test_print_parse_round_trip_property(rng):
    q = fuzz.random_query(rng)
    assert parse_query(print_query(q)) == q


# -- typing --------------------------------------------------------------------------

def _kinds(text, schema):
    typed = typecheck(parse_query(text), schema)
    return typed.kind, [d.code for d in typed.diagnostics], [d.message for d in typed.diagnostics]


def test_typecheck(patient_doc):
    schema = patient_doc.schema
    assert _kinds(SR_BINDING + "SR", schema)[:2] == (Kind.SERIES, [])
    assert _kinds(SR_BINDING + "Agreg(SR, " + AVG + ")", schema)[:2] == (Kind.VALUE, [])
    assert _kinds("Past(Patient)", schema)[:2] == (Kind.STATE_SETS, [])
    _, codes, msgs = _kinds("Agreg(Patient, " + AVG + ")", schema)
    assert codes == ["kind"] and "expects Series" in msgs[0]
    assert _kinds("Select(p Patient, q.nom = 1)", schema)[1] == ["unbound-variable"]
    assert _kinds("Select(p Patient, p.age = 1)", schema)[1] == ["unknown-attribute"]
    assert _kinds("Doctors", schema)[1] == ["unknown-name"]
    assert _kinds(SR_BINDING + "Agreg(SR, {(nom, avg(nom))})", schema)[1] == ["unknown-attribute"]


ATTRS = ("poids", "tension", "nom", "domT", "age")
STEPS = ("Select", "Project", "Current", "Past", "Archive", "Flatten", "DupElim", "EmptyElim",
         "MakeSerie", "Agreg", "ACum", "AMove", "ScaleUp", "ScaleDown", "UGroup", "DGroup",
         "State", "Nest", "UnNest", "IJoin", "UJoin", "VUnion", "IDifference")


def _agg(rng):
    attr = rng.choice(ATTRS)
    return parse_query(f"Agreg(X, {{({attr}, {rng.choice(('avg', 'max', 'count'))}({attr}))}})").result.args[1]


def _chain(rng: random.Random) -> Query:
    """A pipeline over Patient; most are ill-typed, a useful fraction are not."""
    node = Name("Patient")
    for _ in range(rng.randint(1, 5)):
        op = rng.choice(STEPS)
        attr = rng.choice(ATTRS)
        unit = rng.choice((TemporalUnit.MONTH, TemporalUnit.QUARTER, TemporalUnit.YEAR))
        if op == "Select":
            pred = P.Compare(rng.choice(("=", ">")), P.AttrRef("v", (attr,)), P.Literal(rng.choice((79, "Dupond"))))
            node = Call(op, (Range("v", node), pred))
        elif op == "Project":
            node = Call(op, (Range("v", node), tuple((a, P.AttrRef("v", (a,))) for a in {attr, "domT"})))
        elif op in ("Agreg", "ACum"):
            node = Call(op, (node, _agg(rng)))
        elif op == "AMove":
            node = Call(op, (node, _agg(rng), Duration(rng.randint(1, 3), M)))
        elif op in ("ScaleUp", "ScaleDown"):
            node = Call(op, (node, unit, _agg(rng)))
        elif op == "UGroup":
            node = Call(op, (node, unit))
        elif op == "DGroup":
            node = Call(op, (node, Duration(rng.randint(1, 3), unit)))
        elif op == "State":
            window = P.DomTLit(Instant.parse("2000-07"), Instant.parse(rng.choice(("2000-09", "2001-06"))))
            node = Call(op, (node, window, rng.choice(("during", "overlaps", "starts"))))
        elif op in ("Nest", "UnNest"):
            node = Call(op, (node, attr))
        elif op in ("IJoin", "UJoin"):
            node = Call(op, (Range("", node), Range("", node), P.TRUE))
        elif op in ("VUnion", "IDifference"):
            node = Call(op, (node, node))
        else:
            node = Call(op, (node,))
    return Query((), node)


@settings(max_examples=400, deadline=None)
@given(st.randoms(use_true_random=False))
def test_well_typed_queries_do_not_fail_on_kinds_or_attributes(patient_doc, rng):
    q = _chain(rng)
    if not typecheck(q, patient_doc.schema).ok:
        return
    try:
        evaluate(q, dupond())
    except QueryError as exc:
        assert not isinstance(exc.cause, (KindMismatch, UnknownAttribute)), print_query(q)


def test_chain_generator_yields_well_typed_queries(patient_doc):
    rng = random.Random(1)
    ok = sum(typecheck(_chain(rng), patient_doc.schema).ok for _ in range(400))
    assert ok >= 25


# -- evaluation ----------------------------------------------------------------------

def test_evaluate_examples():
    store = dupond()
    assert [o.oid for o in evaluate(parse_query(SELECT_DUPOND), store)] == ["OID1"]
    avg = evaluate(parse_query(SR_BINDING + "Agreg(SR, " + AVG + ")"), store)
    assert avg.value == Record(poids=79)
    sr = evaluate(parse_query(SR_BINDING + "SR"), store)
    assert [x.value["poids"] for x in sr] == [80, 79, 80, 77]
    cur = evaluate(parse_query("Current(Patient)"), store, Instant.parse("2001-03"))
    assert str(cur.items[0].domain) == "<[2001-01,2001-03]>"


def test_evaluate_on_empty_extension(patient_doc):
    empty = Store(patient_doc.schema)
    assert len(evaluate(parse_query(SELECT_DUPOND), empty)) == 0
    assert len(evaluate(parse_query("Flatten(Past(Patient))"), empty)) == 0


def test_runtime_errors_name_the_operator():
    with pytest.raises(QueryError) as err:
        evaluate(parse_query("Agreg(MakeSerie(Flatten(Archive(Select(p Patient, p.nom = 'X')))), "
                             + AVG + ")"), dupond())
    assert err.value.node == "Agreg"
