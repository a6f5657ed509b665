import json

from error_handler import (
    BudgetExceededError,
    ConfigError,
    EXIT_COUNTEREXAMPLE,
    EXIT_INCONCLUSIVE,
    EXIT_PASS,
    EXIT_USAGE,
    OpenTermError,
    exit_code_for,
)
from programs import OMEGA
from reports import CheckReport, SCHEMA_VERSION, Verdict, digest, merge_reports
from syntax import DELTA, IDENTITY, pretty


def test_verdict_exit_codes():
    assert Verdict.PASS.exit_code == EXIT_PASS
    assert Verdict.FAIL.exit_code == EXIT_COUNTEREXAMPLE
    assert Verdict.INCONCLUSIVE.exit_code == EXIT_INCONCLUSIVE


def test_failures_outrank_inconclusive_results():
    report = CheckReport(check="demo")
    assert report.passed
    report.unsure("universe escape", left=OMEGA)
    assert report.verdict == Verdict.INCONCLUSIVE
    report.fail("Sim-1", left=OMEGA, right=IDENTITY)
    report.unsure("again")
    assert report.verdict == Verdict.FAIL
    assert report.clauses() == ["Sim-1"]


def test_witnesses_render_as_text():
    report = CheckReport(check="demo").fail("Sim-2", left=IDENTITY, right=DELTA)
    data = json.loads(report.to_json())
    assert data["schema_version"] == SCHEMA_VERSION
    assert data["verdict"] == "FAIL"
    assert data["counterexamples"][0]["witness"] == {"left": pretty(IDENTITY), "right": pretty(DELTA)}


def test_merge_keeps_the_worst_verdict():
    ok = CheckReport(check="a")
    unsure = CheckReport(check="b").unsure("budget")
    bad = CheckReport(check="c").fail("Rel-2")
    assert merge_reports("all", [ok, unsure]).verdict == Verdict.INCONCLUSIVE
    merged = merge_reports("all", [ok, unsure, bad], seed=3)
    assert merged.verdict == Verdict.FAIL
    assert merged.clauses() == ["c:Rel-2"]
    assert merged.inconclusive[0]["check"] == "b"
    assert merged.bounds == {"seed": 3}
    assert merge_reports("all", [ok]).passed


def test_digest_ignores_order():
    assert digest([IDENTITY, DELTA]) == digest([DELTA, IDENTITY])
    assert digest([IDENTITY]) != digest([DELTA])


def test_exit_codes_for_errors():
    assert exit_code_for(ConfigError("bad")) == EXIT_USAGE
    assert exit_code_for(BudgetExceededError("step", 3)) == EXIT_INCONCLUSIVE
    assert exit_code_for(OpenTermError({"x"})) == EXIT_USAGE
    assert exit_code_for(RuntimeError("boom")) == EXIT_USAGE
    assert ConfigError("bad", "f.txt", 4).details == {"path": "f.txt", "line": 4}
