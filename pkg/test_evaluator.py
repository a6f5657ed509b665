from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from error_handler import OpenTermError
from evaluator import Evaluator, approximate, evaluate
from monads import BOTTOM, Distribution, EffectKind, Just, MonadSpec, build_monad
from programs import OMEGA, w_program, w_unfolding, z_program, z_unfolding
from syntax import DELTA, IDENTITY, App, Return, Var, enumerate_terms, parse_term

KINDS = [k.value for k in EffectKind]
SAMPLES = {kind: enumerate_terms(build_monad(MonadSpec(kind)).signature(), (), 3) for kind in KINDS}


def _evaluator(kind: str) -> Evaluator:
    return Evaluator(build_monad(MonadSpec(kind)), spill_dir=None)


def _masses(profile):
    return [obs.as_dict()["mass"] for _, obs in profile]


@pytest.mark.parametrize("kind", KINDS)
def test_omega_never_converges(kind):
    ev = _evaluator(kind)
    for n in range(51):
        assert ev.approximate(OMEGA, n) == ev.monad.bottom()


def test_index_zero_is_bottom():
    spec = MonadSpec("partial")
    assert approximate(Return(IDENTITY), 0, spec) == BOTTOM
    assert approximate(Return(IDENTITY), 1, spec) == Just(IDENTITY)


def test_application_and_sequencing_rules():
    spec = MonadSpec("partial")
    # (\x. x x) I -> I I -> return I
    assert approximate(App(DELTA, IDENTITY), 2, spec) == BOTTOM
    assert approximate(App(DELTA, IDENTITY), 3, spec) == Just(IDENTITY)
    term = parse_term(r"return (\x. return x) to f. f f")
    assert approximate(term, 2, spec) == BOTTOM
    assert approximate(term, 3, spec) == Just(IDENTITY)


def test_open_terms_are_rejected():
    with pytest.raises(OpenTermError):
        approximate(App(Var("x"), IDENTITY), 3, MonadSpec("partial"))


def test_w_convergence_mass():
    ev = _evaluator("dist")
    profile = ev.convergence_profile(w_program(), 30)
    assert [k for k, _ in profile] == [3 * k for k in range(1, 11)]
    assert _masses(profile) == [1 - Fraction(1, 2 ** k) for k in range(1, 11)]


def test_w_unfoldings_appear_with_halving_weights():
    ev = _evaluator("dist")
    assert ev.approximate(w_program(), 6) == Distribution.of({
        w_unfolding(1): Fraction(1, 2),
        w_unfolding(2): Fraction(1, 4),
    })


def test_z_mass_matches_w_at_each_unfolding():
    ev = _evaluator("dist")
    profile = ev.convergence_profile(z_program(), 96)
    # z_k completes at index 6 + 9k
    assert [k for k, _ in profile] == [6 + 9 * k for k in range(1, 11)]
    assert _masses(profile) == [1 - Fraction(1, 2 ** k) for k in range(1, 11)]
    u = ev.approximate(z_program(), 96)
    assert u[z_unfolding(1)] == Fraction(1, 2)
    assert u[z_unfolding(2)] == Fraction(1, 4)


def test_evaluate_reports_stability():
    ev = _evaluator("dist")
    assert ev.evaluate(Return(IDENTITY), 5).stable
    result = ev.evaluate(w_program(), 5)
    assert not result.stable
    assert result.value.mass == Fraction(1, 2)


def test_step_budget_is_reported_not_raised():
    ev = Evaluator(build_monad(MonadSpec("dist")), max_steps=5, spill_dir=None)
    result = ev.evaluate(w_program(), 30)
    assert result.exhausted
    assert result.index < 30


def test_shared_evaluator_matches_fresh_one():
    spec = MonadSpec("dist")
    assert evaluate(w_program(), 9, spec).value == _evaluator("dist").approximate(w_program(), 9)


def test_memo_spill_round_trip(tmp_path):
    monad = build_monad(MonadSpec("dist"))
    ev = Evaluator(monad, spill_dir=tmp_path)
    expected = ev.approximate(w_program(), 9)
    path = ev.save()
    assert path is not None and path.exists()
    again = Evaluator(monad, spill_dir=tmp_path)
    assert again.memo_entries > 0
    assert again.approximate(w_program(), 9) == expected


def test_derivation_tree_shape():
    ev = _evaluator("partial")
    tree = ev.derive(App(DELTA, IDENTITY), 3)
    assert tree.rule == "app"
    assert tree.result == Just(IDENTITY)
    assert tree.size() == 3


@pytest.mark.parametrize("kind", KINDS)
def test_every_small_term_agrees_and_chains(kind):
    ev = _evaluator(kind)
    for term in SAMPLES[kind]:
        previous = ev.monad.bottom()
        for n in range(8):
            current = ev.approximate(term, n)
            assert ev.derive(term, n).result == current
            assert ev.monad.leq(previous, current)
            previous = current


@pytest.mark.parametrize("kind", KINDS)
@settings(max_examples=10_000, deadline=None)
@given(data=st.data())
def test_derivation_agrees_with_memoised_semantics(kind, data):
    term = data.draw(st.sampled_from(SAMPLES[kind]))
    n = data.draw(st.integers(min_value=0, max_value=12))
    ev = _evaluator(kind)
    derived = ev.derive(term, n).result
    assert derived == ev.approximate(term, n)
    assert ev.monad.leq(derived, ev.approximate(term, n + 1))
