from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from error_handler import CarrierEscapeError, ConfigError, IncompatibleLayersError, KindMismatchError
from monads import BOTTOM, Choices, Distribution, EffectKind, Emitted, Just, Raised, monad_for
from relators import (
    Base,
    Compose,
    Converse,
    Intersect,
    Relation,
    converse,
    fits,
    flow_check,
    kinds,
    lift_holds,
    parse_relator,
    subset_check,
    symmetrize,
)

CARRIER = [0, 1]
LESS = Relation.of([(0, 1)], CARRIER, CARRIER)
EQUAL = Relation.identity(CARRIER)

weights = st.dictionaries(st.integers(0, 7), st.integers(1, 8).map(lambda k: Fraction(k, 8)), max_size=8)
relations = st.frozensets(st.tuples(st.integers(0, 7), st.integers(0, 7)), max_size=20)


def test_relation_algebra():
    r = Relation.of([(0, 1)], CARRIER, CARRIER)
    assert r.converse().holds(1, 0)
    assert r.then(EQUAL).pairs == r.pairs
    assert r.intersect(EQUAL).pairs == frozenset()
    assert r.image([0]) == frozenset({1})
    assert Relation.full(CARRIER, CARRIER).issubset(Relation.full(CARRIER, CARRIER))


@settings(max_examples=100, deadline=None)
@given(relations)
def test_converse_is_an_involution(pairs):
    r = Relation.of(pairs, range(8), range(8))
    assert r.converse().converse() == r
    spec = Base("gdist")
    assert converse(converse(spec)) == spec


def test_partiality_liftings():
    gbot = Base("gbot")
    assert lift_holds(gbot, LESS, Just(0), Just(1))
    assert not lift_holds(gbot, LESS, Just(1), Just(0))
    assert lift_holds(gbot, LESS, BOTTOM, Just(0))
    assert not lift_holds(gbot, LESS, Just(0), BOTTOM)
    assert not lift_holds(Base("dbot"), LESS, BOTTOM, Just(0))
    assert lift_holds(Base("dbot"), LESS, BOTTOM, BOTTOM)


def test_exception_liftings():
    assert lift_holds(Base("gexc"), EQUAL, Raised("e"), Raised("e"))
    assert not lift_holds(Base("gexc"), EQUAL, Raised("e"), Just(0))
    assert lift_holds(Base("gexc"), EQUAL, BOTTOM, Raised("e"))
    assert not lift_holds(Base("dexc"), EQUAL, BOTTOM, Raised("e"))


def test_powerset_liftings():
    small, big = Choices(frozenset({0})), Choices(frozenset({0, 1}))
    assert lift_holds(Base("gpow"), EQUAL, small, big)
    assert not lift_holds(Base("gpow"), EQUAL, big, small)
    assert not lift_holds(Base("dpow"), EQUAL, small, big)
    assert lift_holds(Base("gpow-exists"), EQUAL, big, small)


def test_distribution_liftings():
    half0 = Distribution.of({0: Fraction(1, 2)})
    half1 = Distribution.of({1: Fraction(1, 2)})
    quarter1 = Distribution.of({1: Fraction(1, 4)})
    assert lift_holds(Base("gdist"), LESS, half0, half1)
    assert not lift_holds(Base("gdist"), LESS, half0, quarter1)
    assert lift_holds(Base("gdist"), LESS, Distribution(), half1)
    assert not lift_holds(Base("ddist"), LESS, half0, Distribution.of({1: Fraction(3, 4)}))


def test_state_and_output_liftings():
    m = monad_for("state")
    assert lift_holds(Base("gstate"), EQUAL, m.bottom(), m.unit(0))
    assert not lift_holds(Base("dstate"), EQUAL, m.bottom(), m.unit(0))
    assert not lift_holds(Base("gstate"), EQUAL, m.unit(0), m.interpret_op("write_false", [m.unit(0)]))
    assert lift_holds(Base("gout"), EQUAL, Emitted(("a",), BOTTOM), Emitted(("a", "b"), Just(0)))
    assert not lift_holds(Base("gout"), EQUAL, Emitted(("a",), Just(0)), Emitted(("a", "b"), Just(0)))


def test_composed_relator_over_probabilistic_exceptions():
    spec = parse_relator("comp(gdist,gexc)")
    assert spec == Compose(Base("gdist"), Base("gexc"))
    assert kinds(spec) == frozenset({EffectKind.PROB_EXCEPTIONS})
    u = Distribution.of({Raised("e"): Fraction(1, 2), Just(0): Fraction(1, 2)})
    v = Distribution.of({Raised("e"): Fraction(1, 2), Just(1): Fraction(1, 2)})
    assert lift_holds(spec, LESS, u, v)
    assert not lift_holds(spec, LESS, v, u)
    w = Distribution.of({Just(1): Fraction(1, 2)})
    assert not lift_holds(spec, LESS, u, w)


def test_expression_parser():
    assert parse_relator("conv(gbot)") == Converse(Base("gbot"))
    assert parse_relator("and(gpow, conv(gpow))") == Intersect(Base("gpow"), Converse(Base("gpow")))
    assert symmetrize(Base("gpow")) == parse_relator("and(gpow,conv(gpow))")
    with pytest.raises(ConfigError):
        parse_relator("comp(gdist")
    with pytest.raises(ConfigError):
        parse_relator("gnothing")
    with pytest.raises(IncompatibleLayersError):
        parse_relator("comp(gpow,gexc)")


def test_fits():
    assert fits(Base("gexc"), "exc")
    assert fits(Base("gexc"), EffectKind.PARTIALITY_EXCEPTIONS)
    assert not fits(Base("gbot"), "dist")
    assert not fits(Intersect(Base("gbot"), Base("gdist")), "partial")


def test_misuse_is_reported():
    with pytest.raises(CarrierEscapeError):
        lift_holds(Base("gbot"), EQUAL, Just(5), Just(0))
    with pytest.raises(KindMismatchError):
        lift_holds(Base("gbot"), EQUAL, Choices(frozenset({0})), Just(0))


def test_zero_mass_is_below_everything():
    assert flow_check({}, {0: Fraction(1, 2)}, EQUAL)


@settings(max_examples=300, deadline=None)
@given(weights, weights, relations)
def test_flow_agrees_with_subset_oracle(mu, nu, pairs):
    r = Relation.of(pairs, mu, nu)
    assert flow_check(mu, nu, r) == subset_check(mu, nu, r)
