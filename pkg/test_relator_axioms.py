import pytest

from monads import MonadSpec, NonStrictPartialityMonad
from relator_axioms import check_inductive_sigma, check_lax_axioms, check_relator_axioms, default_monad
from relators import Base, parse_relator
from reports import Verdict

BUDGET = 1_000

SHIPPED = ["gbot", "dbot", "gexc", "dexc", "gpow", "dpow", "gdist", "ddist", "gstate", "dstate", "gout", "dout",
           "comp(gdist,gexc)"]
LAX = ["gbot", "gexc", "gpow", "gdist", "gstate", "gout", "comp(gdist,gexc)"]


@pytest.mark.parametrize("expr", SHIPPED)
def test_shipped_relators_satisfy_the_relator_laws(expr):
    report = check_relator_axioms(parse_relator(expr), carrier_size=2, sample_budget=BUDGET)
    assert report.verdict == Verdict.PASS, report.to_json()
    assert report.bounds["exhaustive"]["Rel-2"]


@pytest.mark.parametrize("expr", ["gbot", "dbot", "gexc", "dexc", "gpow", "dpow"])
def test_relator_laws_cover_every_relation_on_three_elements(expr):
    report = check_relator_axioms(parse_relator(expr), carrier_size=3, sample_budget=BUDGET)
    assert report.verdict == Verdict.PASS, report.to_json()
    assert report.bounds["relations"] == 512
    exhaustive = report.bounds["exhaustive"]
    assert exhaustive["Rel-1"] and exhaustive["Rel-2"] and exhaustive["Rel-4"]


def test_composition_failure_is_found_on_three_elements():
    report = check_relator_axioms(Base("gpow-exists"), carrier_size=3, sample_budget=BUDGET)
    assert "Rel-2" in report.clauses()


@pytest.mark.parametrize("expr", LAX)
def test_simulation_relators_are_lax_extensions(expr):
    report = check_lax_axioms(parse_relator(expr), carrier_size=2, sample_budget=BUDGET)
    assert report.verdict != Verdict.FAIL, report.to_json()


def test_partiality_passes_every_suite():
    gbot = Base("gbot")
    assert check_relator_axioms(gbot, sample_budget=BUDGET).passed
    assert check_lax_axioms(gbot, sample_budget=BUDGET).passed
    assert check_inductive_sigma(gbot, sample_budget=BUDGET).passed


def test_existential_powerset_lifting_breaks_composition():
    report = check_relator_axioms(Base("gpow-exists"), carrier_size=2, sample_budget=BUDGET)
    assert report.verdict == Verdict.FAIL
    assert "Rel-2" in report.clauses()


def test_non_strict_bind_breaks_lax_bind():
    mutant = NonStrictPartialityMonad(MonadSpec("partial"))
    report = check_lax_axioms(Base("gbot"), monad=mutant, carrier_size=2, sample_budget=BUDGET)
    assert report.verdict == Verdict.FAIL
    assert report.clauses() == ["Lax-Bind"]
    assert report.bounds["monad_class"] == "NonStrictPartialityMonad"


def test_symmetric_partiality_is_not_inductive():
    report = check_inductive_sigma(Base("dbot"), sample_budget=BUDGET)
    assert "omega-comp-1" in report.clauses()


def test_suites_are_reproducible():
    spec = Base("gpow")
    first = check_relator_axioms(spec, carrier_size=4, sample_budget=100, seed=7)
    second = check_relator_axioms(spec, carrier_size=4, sample_budget=100, seed=7)
    assert first.to_json() == second.to_json()
    assert not first.bounds["exhaustive"]["relations"]


def test_default_monad_follows_the_relator():
    assert default_monad(Base("gpow")).kind.value == "nondet"
    assert default_monad(parse_relator("comp(gdist,gexc)")).kind.value == "dist-exc"
