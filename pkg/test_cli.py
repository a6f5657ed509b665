import json

import pytest

from cli import run
from programs import OMEGA
from syntax import DELTA, IDENTITY, Return, pretty


@pytest.fixture(autouse=True)
def no_spill(monkeypatch):
    monkeypatch.delenv("RELATORLAB_CACHE_DIR", raising=False)


@pytest.fixture
def args_file(tmp_path):
    path = tmp_path / "args.txt"
    path.write_text(f"{pretty(IDENTITY)}\n{pretty(DELTA)}\n", encoding="utf-8")
    return str(path)


def _report(capsys):
    return json.loads(capsys.readouterr().out)


def test_eval_builtin_program(capsys):
    assert run(["eval", "--monad", "dist", "--program", "w", "--n", "9"]) == 0
    row = _report(capsys)["stats"]["results"][0]
    assert row["observation"]["mass"] == "7/8"


def test_eval_budget_is_inconclusive(capsys):
    assert run(["eval", "--monad", "dist", "--program", "w", "--n", "30", "--max-steps", "3"]) == 2
    assert _report(capsys)["verdict"] == "INCONCLUSIVE"


def test_eval_without_input_is_a_usage_error():
    assert run(["eval", "--monad", "partial"]) == 3


def test_eval_term_file(tmp_path, capsys):
    path = tmp_path / "terms.txt"
    path.write_text(f"# two terms\n{pretty(OMEGA)}\n{pretty(Return(IDENTITY))}\n", encoding="utf-8")
    assert run(["eval", "--monad", "partial", "--n", "5", str(path)]) == 0
    rows = _report(capsys)["stats"]["results"]
    assert [r["value"] for r in rows] == ["⊥", {"just": pretty(IDENTITY)}]


def test_axioms(capsys):
    assert run(["axioms", "--relator", "gbot", "--samples", "200"]) == 0
    assert _report(capsys)["verdict"] == "PASS"
    assert run(["axioms", "--relator", "gpow-exists", "--samples", "200"]) == 1
    assert run(["axioms", "--relator", "gbot", "--monad", "dist"]) == 3
    assert run(["axioms", "--relator", "comp(gpow,gexc)"]) == 3


def test_simcheck_raise_candidate(args_file, capsys):
    code = run(["simcheck", "--relator", "comp(gdist,gexc)", "--monad", "dist-exc", "--n", "12",
                "--slack", "24", "--candidate", "w-z-raise", "--args", args_file])
    assert code == 0
    assert _report(capsys)["check"] == "simulation"


def test_similarity_and_bisimilarity(args_file, capsys):
    common = ["--relator", "gbot", "--monad", "partial", "--n", "10", "--depth", "3", "--args", args_file]
    assert run(["similarity", *common]) == 0
    terms = _report(capsys)["stats"]["relation"]["terms"]
    assert [pretty(Return(DELTA)), pretty(Return(IDENTITY))] in terms
    assert [pretty(Return(IDENTITY)), pretty(Return(DELTA))] not in terms
    assert run(["bisimilarity", *common]) == 0
    assert _report(capsys)["check"] == "bisimilarity"


def test_howe_checks(capsys):
    code = run(["howe", "--relator", "gbot", "--monad", "partial", "--n", "8", "--depth", "3",
                "--check", "compat", "--check", "fixed"])
    assert code == 0
    report = _report(capsys)
    assert report["stats"]["closure"]["terms"] > 0


def test_preadequate(tmp_path):
    forward = tmp_path / "forward.tsv"
    forward.write_text(f"{pretty(OMEGA)}\t{pretty(Return(IDENTITY))}\n", encoding="utf-8")
    backward = tmp_path / "backward.tsv"
    backward.write_text(f"{pretty(Return(IDENTITY))}\t{pretty(OMEGA)}\n", encoding="utf-8")
    common = ["preadequate", "--relator", "gbot", "--monad", "partial", "--n", "10", "--relation"]
    assert run([*common, str(forward)]) == 0
    assert run([*common, str(backward)]) == 1


def test_unknown_command_is_a_usage_error():
    assert run(["frobnicate"]) == 3


def test_report_file(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert run(["--report", str(out), "eval", "--monad", "partial", "--program", "identity", "--n", "2"]) == 0
    assert json.loads(out.read_text(encoding="utf-8")) == _report(capsys)
