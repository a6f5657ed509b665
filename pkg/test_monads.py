from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from error_handler import (
    ArityMismatchError,
    ConfigError,
    KindMismatchError,
    MassOverflowError,
    UninterpretableOperationError,
)
from monads import (
    BOTTOM,
    Choices,
    Distribution,
    EffectKind,
    Emitted,
    Just,
    MonadSpec,
    NonStrictPartialityMonad,
    Raised,
    Stored,
    build_monad,
    monad_for,
    render,
)

CARRIER = [0, 1]
KINDS = [k.value for k in EffectKind]


def _space(kind):
    m = monad_for(kind)
    return m, m.sample_space(CARRIER)


def _kleisli(data, space):
    return {x: data.draw(st.sampled_from(space)) for x in CARRIER}


@pytest.mark.parametrize("kind", KINDS)
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_left_unit(kind, data):
    m, space = _space(kind)
    f = _kleisli(data, space)
    x = data.draw(st.sampled_from(CARRIER))
    assert m.bind(m.unit(x), f.__getitem__) == f[x]


@pytest.mark.parametrize("kind", KINDS)
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_right_unit(kind, data):
    m, space = _space(kind)
    u = data.draw(st.sampled_from(space))
    assert m.bind(u, m.unit) == u


@pytest.mark.parametrize("kind", KINDS)
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_bind_associative(kind, data):
    m, space = _space(kind)
    u = data.draw(st.sampled_from(space))
    f = _kleisli(data, space)
    g = _kleisli(data, space)
    lhs = m.bind(m.bind(u, f.__getitem__), g.__getitem__)
    rhs = m.bind(u, lambda x: m.bind(f[x], g.__getitem__))
    assert lhs == rhs


@pytest.mark.parametrize("kind", KINDS)
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_bottom_is_least_and_order_reflexive(kind, data):
    m, space = _space(kind)
    u = data.draw(st.sampled_from(space))
    assert m.leq(m.bottom(), u)
    assert m.leq(u, u)


@pytest.mark.parametrize("kind", KINDS)
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_bind_monotone_in_first_argument(kind, data):
    m, space = _space(kind)
    u = data.draw(st.sampled_from(space))
    above = [v for v in space if m.leq(u, v)]
    v = data.draw(st.sampled_from(above))
    f = _kleisli(data, space)
    assert m.leq(m.bind(u, f.__getitem__), m.bind(v, f.__getitem__))


@pytest.mark.parametrize("kind", KINDS)
def test_bind_is_strict(kind):
    m = monad_for(kind)
    assert m.bind(m.bottom(), lambda x: m.unit(x)) == m.bottom()


@pytest.mark.parametrize("kind", KINDS)
@settings(max_examples=30, deadline=None)
@given(data=st.data())
def test_fmap_agrees_with_bind(kind, data):
    m, space = _space(kind)
    u = data.draw(st.sampled_from(space))
    assert m.fmap(u, lambda x: 1 - x) == m.bind(u, lambda x: m.unit(1 - x))


def test_nondeterministic_choice():
    m = monad_for("nondet")
    assert m.interpret_op("or", [m.unit(0), m.unit(1)]) == Choices(frozenset({0, 1}))
    assert m.interpret_op("or", [m.bottom(), m.unit(1)]) == m.unit(1)


def test_biased_probabilistic_choice():
    m = monad_for("dist")
    u = m.interpret_op("or_1_3", [m.unit(0), m.unit(1)])
    assert u[0] == Fraction(1, 3)
    assert u[1] == Fraction(2, 3)
    half = m.interpret_op("or", [m.unit(0), m.bottom()])
    assert half.mass == Fraction(1, 2)
    assert m.observe(half).as_dict()["mass"] == Fraction(1, 2)


def test_mass_overflow_is_not_clamped():
    with pytest.raises(MassOverflowError):
        Distribution.of({0: Fraction(3, 4), 1: Fraction(1, 2)})


def test_exceptions():
    m = monad_for("partial-exc", exceptions=("e", "f"))
    assert m.interpret_op("raise_f", []) == Raised("f")
    assert m.bind(Raised("e"), lambda x: m.unit(x)) == Raised("e")
    with pytest.raises(UninterpretableOperationError):
        m.interpret_op("raise_g", [])
    assert m.observe(Raised("e")).as_dict() == {"outcome": "raise:e"}


def test_probabilistic_exceptions_keep_raised_mass():
    m = monad_for("dist-exc")
    u = m.interpret_op("or", [m.interpret_op("raise_e", []), m.unit(0)])
    assert u[Raised("e")] == Fraction(1, 2)
    assert m.values_of(u) == frozenset({0})
    assert m.observe(u).as_dict()["raised"] == (("e", Fraction(1, 2)),)


def test_probabilistic_exceptions_observe_returned_mass_only():
    m = monad_for("dist-exc")
    u = Distribution.of({Raised("e"): Fraction(1, 2), Just(0): Fraction(1, 4)})
    obs = m.observe(u).as_dict()
    assert obs["mass"] == Fraction(1, 4)
    assert obs["raised"] == (("e", Fraction(1, 2)),)
    assert m.observe(m.interpret_op("raise_e", [])).as_dict()["mass"] == 0


def test_global_state_read_and_write():
    m = monad_for("state")
    at_true = m.interpret_op("write_true", [m.unit(0)])
    assert at_true.at("false") == Stored(0, "true")
    branch = m.interpret_op("read", [m.unit(0), m.unit(1)])
    assert branch.at("true") == Stored(0, "true")
    assert branch.at("false") == Stored(1, "false")
    with pytest.raises(ArityMismatchError):
        m.interpret_op("read", [m.unit(0)])


def test_output_prefixes():
    m = monad_for("output")
    u = m.interpret_op("print_a", [m.unit(0)])
    assert u == Emitted(("a",), Just(0))
    v = m.bind(u, lambda x: m.interpret_op("print_b", [m.bottom()]))
    assert v == Emitted(("a", "b"), BOTTOM)
    assert m.leq(Emitted(("a",), BOTTOM), v)
    assert not m.leq(Emitted(("b",), BOTTOM), v)


def test_default_signatures():
    assert monad_for("dist-exc").signature().arity("raise_e") == 0
    assert monad_for("state").signature().arity("read") == 2
    assert monad_for("output", alphabet=("c",)).signature().names == frozenset({"print_c"})


def test_spec_validation():
    with pytest.raises(ConfigError):
        MonadSpec(EffectKind.EXCEPTIONS, exceptions=("e", "e"))
    with pytest.raises(ConfigError):
        MonadSpec(EffectKind.GLOBAL_STATE, states=())
    assert build_monad(MonadSpec("partial")) is build_monad(MonadSpec("partial"))


def test_non_strict_mutant_breaks_strictness():
    m = NonStrictPartialityMonad(MonadSpec("partial"))
    assert m.bind(BOTTOM, lambda x: m.unit(x)) == Just(0)


def test_render_is_json_friendly():
    assert render(Fraction(1, 2)) == "1/2"
    assert render(BOTTOM) == "⊥"
    assert render(Just(1)) == {"just": 1}
    dist = Distribution.of({0: Fraction(1, 4)})
    assert render(dist) == {"dist": [[0, "1/4"]]}


@pytest.mark.parametrize("kind", KINDS)
def test_order_rejects_elements_of_another_monad(kind):
    m = monad_for(kind)
    other = monad_for("dist" if kind in ("nondet", "partial", "exc", "partial-exc") else "nondet")
    foreign = other.unit(0)
    with pytest.raises(KindMismatchError) as info:
        m.leq(m.unit(0), foreign)
    assert info.value.details == {"name": kind, "got": type(foreign).__name__}
    with pytest.raises(KindMismatchError):
        m.leq(foreign, m.unit(0))
