import pytest
from hypothesis import given, settings, strategies as st

from error_handler import (
    ArityMismatchError,
    BudgetExceededError,
    ConfigError,
    TermSyntaxError,
    UnknownMacroError,
    UnknownOperationError,
)
from evaluator import approximate
from monads import Just, MonadSpec
from syntax import (
    DELTA,
    IDENTITY,
    PURE,
    App,
    Bound,
    Lam,
    Op,
    Return,
    Seq,
    Signature,
    Var,
    alpha_eq,
    close,
    comp,
    depth,
    enumerate_terms,
    enumerate_values,
    fix_value,
    free_vars,
    instantiate,
    is_closed,
    lam,
    numeral,
    open_binder,
    parse_term,
    parse_value,
    pretty,
    seq,
    substitute,
    subterms,
)

OR = Signature.of({"or": 2})
OR_RAISE = Signature.of({"or": 2, "raise_e": 0})

OPEN_TERMS = enumerate_terms(OR, ("x",), 3)
TWO_VAR_TERMS = enumerate_terms(PURE, ("x", "y"), 2)
CLOSED_VALUES = enumerate_values(PURE, (), 2)


def test_parse_basic_forms():
    assert parse_term("return x") == Return(Var("x"))
    assert parse_value(r"\x. return x") == IDENTITY
    assert parse_value(r"λx. x x") == DELTA
    assert parse_term("x y") == App(Var("x"), Var("y"))
    assert parse_term("return y to x. return x") == Seq(Return(Var("y")), Return(Bound(0)))


def test_parse_operations_against_signature():
    term = parse_term("or(return x, return y)", OR)
    assert term == Op("or", (Return(Var("x")), Return(Var("y"))))
    assert parse_term("raise_e()", OR_RAISE) == Op("raise_e", ())


def test_unknown_operation_is_rejected():
    with pytest.raises(UnknownOperationError):
        parse_term("foo(return x)")


def test_arity_mismatch_is_rejected():
    with pytest.raises(ArityMismatchError):
        parse_term("or(return x)", OR)


def test_syntax_error_carries_position():
    with pytest.raises(TermSyntaxError) as info:
        parse_term("return")
    assert info.value.line == 1
    assert "column" in info.value.details


def test_value_is_not_a_term():
    with pytest.raises(TermSyntaxError):
        parse_term(r"\x. return x")


def test_macros():
    assert parse_value(r"COMP(\x. return x, \y. return y)") == comp(IDENTITY, IDENTITY)
    assert parse_value("NUM(2)") == numeral(2)
    assert parse_value("FIX") == fix_value()
    with pytest.raises(UnknownMacroError):
        parse_value("FOO")
    with pytest.raises(ConfigError):
        numeral(-1)


def test_binder_names_do_not_matter():
    assert parse_value(r"\x. return x") == parse_value(r"\y. return y")
    assert parse_term("return z to a. return a") == parse_term("return z to b. return b")
    assert parse_value(r"\x. return y") != parse_value(r"\x. return x")
    assert alpha_eq(lam("a", Return(Var("a"))), IDENTITY)
    assert not alpha_eq(lam("a", Return(Var("b"))), IDENTITY)


def test_substitution_avoids_capture():
    # (\y. x y)[y/x] must not bind the substituted y
    body = parse_value(r"\y. x y")
    result = substitute(body, "x", Var("y"))
    assert result == Lam(App(Var("y"), Bound(0)))
    assert free_vars(result) == frozenset({"y"})


def test_substitution_only_touches_free_occurrences():
    term = parse_term(r"(\x. return x) x")
    assert substitute(term, "x", DELTA) == App(IDENTITY, DELTA)


def test_instantiate_opens_binder():
    assert instantiate(IDENTITY.body, DELTA) == Return(DELTA)
    assert open_binder(DELTA.body, "q") == App(Var("q"), Var("q"))


def test_depth_measure():
    assert depth(Var("x")) == 0
    assert depth(IDENTITY) == 2
    assert depth(App(DELTA, DELTA)) == 3
    assert depth(Op("raise_e", ())) == 0


def test_free_vars_and_closedness():
    term = parse_term("x y to z. return z")
    assert free_vars(term) == frozenset({"x", "y"})
    assert not is_closed(term)
    assert is_closed(App(DELTA, DELTA))


def test_subterms_walks_pre_order():
    term = Return(Var("x"))
    assert list(subterms(term)) == [term, Var("x")]
    assert IDENTITY.body in list(subterms(IDENTITY))


def test_signature_parsing():
    sig = Signature.parse("or/2, raise_e/0\n# comment\nread/2")
    assert sig.arity("or") == 2
    assert sig.arity("raise_e") == 0
    assert "read" in sig
    with pytest.raises(ConfigError):
        Signature.parse("or")
    with pytest.raises(ConfigError):
        Signature.parse("or/2 or/2")


def test_closed_enumeration_golden_counts():
    closed = enumerate_terms(PURE, (), 3)
    assert len(closed) == 6
    assert set(closed) == {
        Return(IDENTITY), Return(DELTA),
        App(IDENTITY, IDENTITY), App(IDENTITY, DELTA), App(DELTA, IDENTITY), App(DELTA, DELTA),
    }
    assert set(enumerate_values(PURE, (), 2)) == {IDENTITY, DELTA}
    assert len(enumerate_values(PURE, (), 3)) == 14
    assert enumerate_values(PURE, ("x",), 1) == [Var("x")]
    assert enumerate_terms(OR, (), 1) == []


def test_enumeration_is_alpha_canonical():
    terms = enumerate_terms(OR, ("x",), 2)
    assert len(terms) == len(set(terms))


def test_enumeration_cap():
    with pytest.raises(BudgetExceededError):
        enumerate_terms(OR, (), 4, cap=100)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(OPEN_TERMS))
def test_pretty_reparses_to_same_term(term):
    assert parse_term(pretty(term), OR) == term


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(TWO_VAR_TERMS), st.sampled_from(CLOSED_VALUES), st.sampled_from(CLOSED_VALUES))
def test_substitution_of_closed_values_commutes(term, v, w):
    left = substitute(substitute(term, "x", v), "y", w)
    right = substitute(substitute(term, "y", w), "x", v)
    assert left == right
    assert free_vars(left) == free_vars(term) - {"x", "y"}


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(enumerate_values(PURE, (), 3)))
def test_close_inverts_open(value):
    assert close(open_binder(value.body, "q"), "q") == value.body
    assert lam("q", open_binder(value.body, "q")) == value


def test_seq_helper_closes_the_bound_name():
    assert seq(Return(Var("y")), "x", Return(Var("x"))) == Seq(Return(Var("y")), Return(Bound(0)))


def test_numeral_case_analysis_selects_the_branch():
    spec = MonadSpec("partial")
    zero = parse_term(r"NUM(0) (\u. return u) to c. c (\m. return m)")
    assert approximate(zero, 20, spec) == Just(IDENTITY)
    one = parse_term(r"NUM(1) (\u. return u) to c. c (\m. return m)")
    assert approximate(one, 20, spec) == Just(numeral(0))


def test_fixed_point_unfolds_until_zero():
    assert is_closed(fix_value())
    countdown = parse_value(r"\f. return (\n. n (\u. return u) to c. c f)")
    for k in range(4):
        program = seq(App(fix_value(), countdown), "r", App(Var("r"), numeral(k)))
        assert is_closed(program)
        assert approximate(program, 200, MonadSpec("partial")) == Just(IDENTITY)


def test_identifiers_are_lower_case_words():
    assert parse_term("return x_1") == Return(Var("x_1"))
    for text in ("return _x", "return x'"):
        with pytest.raises(TermSyntaxError):
            parse_term(text)
    with pytest.raises(ConfigError):
        Signature.of({"_op": 0})
