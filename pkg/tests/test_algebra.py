from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from twq import algebra as A
from twq.algebra import predicates as P
from twq.algebra.collections import Collection, Kind, series
from twq.chrono import Duration, Instant, TemporalDomain, TemporalUnit
from twq.errors import (
    EmptySeries,
    IdentityOnStates,
    KindMismatch,
    MixedUnits,
    NotCoarser,
    NotFiner,
    OverlappingStates,
    UnknownAttribute,
)
from twq.lifecycle import coalesce
from twq.model import Role, State
from twq.values import Record

import oracles
from support import M, dom, grains

Q = TemporalUnit.QUARTER


def s(v, *spans, **extra):
    return State(Record(poids=v, **extra), dom(*spans), Role.PAST, "OID1")


# the four poids states of the running example, as a state set and a series
POIDS = (s(80, "2000-07", ("2000-09", "2000-10")), s(79, "2000-08"), s(77, ("2000-11", "2000-12")))
SR = A.make_serie(A.states(POIDS))
AVG = [("poids", "avg")]


def series_view(c):
    return [(str(x.domain), x.value["poids"]) for x in c]


# -- classical operators -----------------------------------------------------------

def test_set_combine(dupond_store):
    objs = A.objects_of(dupond_store.objects.values())
    o1 = objs.items[0]
    two = A.objects([o1, o1.replace(oid="OID2")])
    three = A.objects([o1.replace(oid="OID2"), o1.replace(oid="OID3")])
    assert [o.oid for o in A.set_combine("union", "identity", two, three)] == ["OID1", "OID2", "OID3"]
    states = A.states(POIDS)
    assert len(A.set_combine("difference", "value", states, states)) == 0
    shared = A.states([POIDS[1], s(60, "1999-01")])
    assert A.set_combine("intersect", "value", states, shared).items == (POIDS[1],)
    with pytest.raises(IdentityOnStates):
        A.set_combine("union", "identity", states, states)
    with pytest.raises(KindMismatch):
        A.set_combine("union", "value", states, objs)


def test_flatten_dup_and_empty_elim():
    s1, s2, s3 = POIDS
    nested = Collection(Kind.STATE_SETS, ((s1,), (s2, s3)))
    assert A.flatten(nested).items == (s1, s2, s3)
    twin = State(s1.value, s1.domain, Role.PAST, "OID9")
    assert A.dup_elim(A.states([s1, twin])).items == (s1,)
    assert A.empty_elim(Collection(Kind.STATE_SETS, ((), (s1,)))).items == ((s1,),)
    with pytest.raises(KindMismatch):
        A.flatten(A.states(POIDS))


def test_select_project_join(dupond_store):
    objs = A.objects_of(dupond_store.objects.values())
    pred = P.And((P.Compare("=", P.AttrRef("p", ("nom",)), P.Literal("Dupond")),
                  P.Compare("=", P.AttrRef("p", ("prenom",)), P.Literal("Michel"))))
    assert [o.oid for o in A.select(objs, "p", pred)] == ["OID1"]
    past = A.flatten(A.past(objs))
    proj = A.project(past, "pp", [("poids", P.AttrRef("pp", ("poids",))),
                                  ("domT", P.AttrRef("pp", ("domT",)))])
    assert [(dict(x.value), x.domain) for x in proj] == [(dict(poids=x.value["poids"]), x.domain) for x in past]
    with pytest.raises(UnknownAttribute):
        A.project(past, "pp", [("age", P.AttrRef("pp", ("age",)))])
    rows = A.join(A.states(POIDS), "a", A.states(POIDS), "b",
                  P.Compare("<", P.AttrRef("a", ("poids",)), P.AttrRef("b", ("poids",))))
    assert sorted((r.value["left.poids"], r.value["right.poids"]) for r in rows) == \
        [(77, 79), (77, 80), (79, 80)]


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 2), st.integers(24000, 24003)),
                max_size=8, unique=True))
def test_unnest_inverts_nest(rows):
    states = A.states(State(Record(k=k, a=a), TemporalDomain.from_grains(M, [g]), Role.PAST)
                      for k, a, g in rows)
    back = A.unnest(A.nest(states, "a"), "a")
    assert sorted(map(hash, back)) == sorted(map(hash, states))
    assert set(back) == set(states)


# -- state access and restriction ----------------------------------------------

def test_state_access(dupond_store):
    objs = A.objects_of(dupond_store.objects.values())
    (inner,) = A.past(objs)
    assert [(x.value["poids"], x.domain) for x in inner] == [
        (80, dom("2000-07", ("2000-09", "2000-10"))), (79, dom("2000-08")),
        (77, dom(("2000-11", "2000-12")))]
    assert len(A.current(A.objects([]))) == 0
    fresh = objs.items[0].replace(archive=())
    assert A.archive(A.objects([fresh])).items == ((),)
    cur = A.current(objs, Instant.parse("2001-03")).items[0]
    assert cur.domain == dom(("2001-01", "2001-03")) and cur.role is Role.CURRENT


def test_state_restrict():
    window = dom(("2000-07", "2001-01"))
    assert A.state_restrict(A.states(POIDS), window, "during").items == POIDS
    assert A.state_restrict(A.states(POIDS), POIDS[1].domain, "equals").items == (POIDS[1],)
    assert len(A.state_restrict(A.states(POIDS), dom(("1999-01", "1999-03")), "during")) == 0
    # strict During rejects the July state, whose domain starts with the window
    strict = A.state_restrict(A.states(POIDS), window, "strict_during")
    assert POIDS[0] not in strict.items and POIDS[1] in strict.items
    with pytest.raises(MixedUnits):
        A.state_restrict(A.states(POIDS), dom("2000-Q3"), "during")


# -- temporal joins and grouping -------------------------------------------------

def test_ijoin_examples():
    left = (s(80, ("2000-07", "2000-08")),)
    right = (s(70, ("2000-10", "2000-11")),)
    assert len(A.ijoin(A.states(left), A.states(right), P.TRUE)) == 0
    same = P.Compare("=", P.AttrRef("left", ("poids",)), P.AttrRef("right", ("poids",)))
    out = A.ijoin(A.states(POIDS), A.states(POIDS), same)
    assert {x.value["left.poids"]: x.domain for x in out} == {x.value["poids"]: x.domain for x in POIDS}


def test_ujoin_examples():
    left = (s(80, ("2000-07", "2000-08")),)
    right = (s(70, ("2000-10", "2000-11")),)
    assert len(A.ujoin(A.states(left), A.states(right), P.TRUE)) == 0
    a, b = s(80, ("2000-07", "2000-09")), s(70, ("2000-09", "2000-10"))
    (row,) = A.ujoin(A.states([a]), A.states([b]), P.TRUE)
    assert row.domain == dom(("2000-07", "2000-10"))


def test_ugroup_and_dgroup_examples():
    groups = A.ugroup(A.states(POIDS), Q)
    assert [(str(t.domain), sorted(v["poids"] for v in t.values)) for t in groups] == [
        ("<[2000-Q3,2000-Q3]>", [79, 80]), ("<[2000-Q4,2000-Q4]>", [77, 80])]
    windows = A.dgroup(A.states(POIDS), Duration(2, M))
    assert [(str(t.domain), sorted(v["poids"] for v in t.values)) for t in windows] == [
        ("<[2000-07,2000-08]>", [79, 80]), ("<[2000-09,2000-10]>", [80]),
        ("<[2000-11,2000-12]>", [77])]
    assert len(A.ugroup(A.states([]), Q)) == 0
    assert len(A.dgroup(A.states([]), Duration(1, M))) == 0
    assert [len(t.values) for t in A.ugroup(A.states([s(1, "2000-08")]), Q)] == [1]
    assert len(A.dgroup(A.states(POIDS), Duration(1, M))) == 6
    with pytest.raises(NotCoarser):
        A.ugroup(A.states(POIDS), M)


# -- series --------------------------------------------------------------------------

def test_make_serie():
    assert series_view(SR) == [("<[2000-07,2000-07]>", 80), ("<[2000-08,2000-08]>", 79),
                               ("<[2000-09,2000-10]>", 80), ("<[2000-11,2000-12]>", 77)]
    assert len(A.make_serie(A.states([POIDS[1]]))) == 1
    with pytest.raises(OverlappingStates):
        A.make_serie(A.states([s(1, ("2000-07", "2000-08")), s(2, "2000-08")]))


def test_agreg():
    assert A.agreg(SR, AVG).value == Record(poids=79)
    assert A.agreg(SR, [("poids", "count")]).value == Record(poids=4)
    single = A.make_serie(A.states([POIDS[1]]))
    assert A.agreg(single, AVG).value == Record(poids=79)
    with pytest.raises(EmptySeries):
        A.agreg(series([]), AVG)
    with pytest.raises(UnknownAttribute):
        A.agreg(SR, [("age", "avg")])


def test_agreg_is_componentwise_on_composites():
    sr = A.make_serie(A.states([
        State(Record(tension=Record(min=10, max=16)), dom("2000-07"), Role.PAST),
        State(Record(tension=Record(min=8, max=15)), dom("2000-08"), Role.PAST)]))
    assert A.agreg(sr, [("tension", "max")]).value == Record(tension=Record(min=10, max=16))
    assert A.agreg(sr, [("tension", "count")]).value == Record(tension=2)


def test_acum():
    got = A.acum(SR, AVG)
    assert [x.domain for x in got] == [dom(("2000-07", m)) for m in
                                       ("2000-07", "2000-08", "2000-09", "2000-10", "2000-11", "2000-12")]
    assert [x.value["poids"] for x in got] == [80, Fraction(159, 2), Fraction(239, 3),
                                               Fraction(239, 3), 79, 79]
    assert got.items[-1].value == A.agreg(SR, AVG).value
    single = A.make_serie(A.states([POIDS[1]]))
    assert [x.value for x in A.acum(single, AVG)] == [Record(poids=79)]


def test_amove():
    assert series_view(A.amove(SR, AVG, Duration(2, M))) == [
        ("<[2000-07,2000-08]>", Fraction(159, 2)), ("<[2000-09,2000-10]>", 80),
        ("<[2000-11,2000-12]>", 77)]
    (whole,) = A.amove(SR, AVG, Duration(6, M))
    assert whole.value == A.agreg(SR, AVG).value
    assert [x.value["poids"] for x in A.amove(SR, AVG, Duration(1, M))] == [80, 79, 80, 80, 77, 77]
    with pytest.raises(MixedUnits):
        A.amove(SR, AVG, Duration(1, Q))


def test_scale_up():
    assert series_view(A.scale_up(SR, Q, AVG)) == [
        ("<[2000-Q3,2000-Q3]>", Fraction(239, 3)), ("<[2000-Q4,2000-Q4]>", Fraction(157, 2))]
    inside = A.make_serie(A.states([POIDS[1]]))
    assert [x.value for x in A.scale_up(inside, Q, AVG)] == [A.agreg(inside, AVG).value]
    assert [x.value["poids"] for x in A.scale_up(SR, Q, [("poids", "min")])] == [79, 77]
    assert [x.value["poids"] for x in A.scale_up(SR, Q, [("poids", "max")])] == [80, 80]
    with pytest.raises(NotCoarser):
        A.scale_up(SR, M, AVG)


def test_scale_down():
    q3 = series([State(Record(poids=Fraction(239, 3)), dom("2000-Q3"), Role.DERIVED)])
    assert series_view(A.scale_down(q3, M)) == [("<[2000-07,2000-09]>", Fraction(239, 3))]
    up = A.scale_up(SR, Q, AVG)
    down = A.scale_down(up, M, AVG)
    assert (down.items[0].domain.spans[0][0], down.items[-1].domain.spans[0][1]) == \
        (SR.items[0].domain.spans[0][0], SR.items[-1].domain.spans[0][1])
    assert [x.value for x in A.scale_up(down, Q, AVG)] == [x.value for x in up]
    with pytest.raises(NotFiner):
        A.scale_down(SR, Q)


# -- oracle suite and properties --------------------------------------------------

def test_per_grain_oracle_500_fixtures():
    assert oracles.run_suite(500) == dict.fromkeys(oracles.OPS, 0)


grain_tables = st.dictionaries(st.integers(24000, 24011), st.integers(1, 4), min_size=1)


def _states(table):
    return coalesce(State(Record(poids=v), TemporalDomain.from_grains(M, [g]), Role.PAST)
                    for g, v in table.items())


@given(grain_tables)
def test_make_serie_preserves_grain_values(table):
    sr = A.make_serie(A.states(_states(table)))
    got = {g: x.value["poids"] for x in sr for g in grains(x.domain)}
    assert got == table
    ends = [x.domain.spans[0] for x in sr]
    assert all(x.domain.is_interval() for x in sr)
    assert all(a[1] < b[0] for a, b in zip(ends, ends[1:]))


@given(grain_tables, st.sampled_from(oracles.FNS))
def test_acum_ends_at_agreg(table, fn):
    sr = A.make_serie(A.states(_states(table)))
    assert A.acum(sr, [("poids", fn)]).items[-1].value == A.agreg(sr, [("poids", fn)]).value


@settings(max_examples=30)
@given(grain_tables)
def test_operators_are_pure(table):
    states = A.states(_states(table))
    for op in (lambda: A.ugroup(states, Q), lambda: A.acum(A.make_serie(states), AVG),
               lambda: A.ijoin(states, states, P.TRUE)):
        assert op() == op()
