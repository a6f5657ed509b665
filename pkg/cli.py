"""
CLI - Relator Lab
Command-line front end: evaluation, relator axiom suites, simulation checks,
bounded (bi)similarity, Howe closure checks and preadequacy.

Every command prints one JSON report on stdout and a status line on stderr.
Exit codes: 0 pass, 1 counterexample, 2 inconclusive, 3 usage or configuration error.
"""

from __future__ import annotations

import functools
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import click

from error_handler import EXIT_PASS, EXIT_USAGE, BudgetExceededError, ConfigError, RelatorLabError, exit_code_for
from evaluator import Evaluator
from howe import (
    check_absorbs,
    check_compatibility,
    check_fixed_point,
    check_key_lemma,
    check_value_substitutive,
    howe_closure,
    open_extension,
)
from lab_config import (
    CARRIER_SIZE,
    MAX_CONTEXT_VARS,
    SAMPLE_BUDGET,
    RunConfig,
    load_relation,
    load_terms,
    load_values,
    log_level,
    make_run_config,
)
from monads import EffectKind, build_monad, render
from programs import PROGRAMS, program, raise_candidate_relation
from relator_axioms import check_inductive_sigma, check_lax_axioms, check_relator_axioms, default_monad
from relators import parse_relator
from reports import CheckReport, Verdict, digest, merge_reports
from similarity import (
    ClosedRelationPair,
    SimConfig,
    bisimilarity,
    bounded_similarity,
    build_universe,
    check_preadequate,
    check_simulation,
    two_way_similarity,
)
from syntax import enumerate_terms, enumerate_values, is_value, pretty
from universe import Universe

logger = logging.getLogger(__name__)

STATUS = {Verdict.PASS: "✅", Verdict.FAIL: "❌", Verdict.INCONCLUSIVE: "⚠️"}
TEST_ARG_DEPTH = 2


def _split(text: str) -> Tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def monad_options(required: bool = True):
    """--monad plus the monad parameters and an optional signature file."""
    def decorate(fn):
        fn = click.option("--signature", "signature_file", type=click.Path(path_type=Path), default=None,
                          help="signature file of name/arity lines")(fn)
        fn = click.option("--alphabet", default="a,b", show_default=True, help="output alphabet")(fn)
        fn = click.option("--states", default="true,false", show_default=True, help="global states")(fn)
        fn = click.option("--exceptions", default="e", show_default=True, help="exception names")(fn)
        fn = click.option("--monad", required=required, default=None,
                          type=click.Choice([k.value for k in EffectKind]), help="effect kind")(fn)
        return fn
    return decorate


def precision_options(fn):
    fn = click.option("--slack", type=int, default=0, show_default=True,
                      help="extra indices for the right-hand side")(fn)
    fn = click.option("--n", "precision", type=int, default=20, show_default=True, help="approximation index")(fn)
    return fn


def _config(ctx: click.Context, monad: Optional[str], exceptions: str, states: str, alphabet: str,
            signature_file: Optional[Path], **options) -> RunConfig:
    return make_run_config(monad=monad, exceptions=_split(exceptions), states=_split(states),
                           alphabet=_split(alphabet), signature_file=signature_file,
                           seed=ctx.obj["seed"], **options)


def _finish(ctx: click.Context, report: CheckReport) -> int:
    text = report.to_json()
    click.echo(text)
    path: Optional[Path] = ctx.obj.get("report")
    if path is not None:
        path.write_text(text + "\n", encoding="utf-8")
    click.echo(f"{STATUS[report.verdict]} {report.check}: {report.verdict.value}", err=True)
    return report.verdict.exit_code


def budgeted(fn):
    """Turns an exhausted budget into an INCONCLUSIVE report."""
    @functools.wraps(fn)
    def wrapper(ctx: click.Context, *args, **kwargs):
        try:
            return fn(ctx, *args, **kwargs)
        except BudgetExceededError as e:
            logger.warning("%s", e.message)
            report = CheckReport(check=ctx.info_name or "run")
            report.unsure(e.message, **e.details)
            return _finish(ctx, report)
    return wrapper


def _test_args(cfg: RunConfig, args_file: Optional[Path]) -> List:
    if args_file is not None:
        return load_values(args_file, cfg.signature())
    return enumerate_values(cfg.signature(), (), TEST_ARG_DEPTH)


def _split_pairs(pairs: Sequence[Tuple[Any, Any]]) -> Tuple[List, List]:
    terms = [p for p in pairs if not is_value(p[0])]
    values = [p for p in pairs if is_value(p[0])]
    return terms, values


def _relation_from_file(cfg: RunConfig, path: Path, terms=(), values=()) -> ClosedRelationPair:
    term_pairs, value_pairs = _split_pairs(load_relation(path, cfg.signature()))
    carrier_terms = list(terms) + [t for p in term_pairs for t in p]
    carrier_values = list(values) + [v for p in value_pairs for v in p]
    return ClosedRelationPair.of(term_pairs, value_pairs, carrier_terms, carrier_values, reflexive=True)


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="debug logging")
@click.option("--progress", is_flag=True, help="progress bars for long loops")
@click.option("--report", "report_path", type=click.Path(path_type=Path), default=None,
              help="also write the JSON report here")
@click.option("--seed", type=int, default=0, show_default=True, help="seed for sampled suites")
@click.pass_context
def cli(ctx: click.Context, verbose: bool, progress: bool, report_path: Optional[Path], seed: int):
    """Relator Lab: effectful program equivalence, checked within explicit bounds."""
    logging.basicConfig(level=log_level(verbose), stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    ctx.ensure_object(dict)
    ctx.obj.update(progress=progress, report=report_path, seed=seed)


@cli.command("eval")
@monad_options()
@click.option("--n", "precision", type=int, default=20, show_default=True, help="approximation index")
@click.option("--program", "program_name", type=click.Choice(sorted(PROGRAMS)), default=None,
              help="evaluate a built-in program instead of a file")
@click.option("--profile", is_flag=True, help="list the indices where the observation changes")
@click.option("--max-steps", type=int, default=None, help="evaluation step budget")
@click.argument("term_file", required=False, type=click.Path(path_type=Path))
@click.pass_context
@budgeted
def eval_command(ctx, precision, program_name, profile, max_steps, term_file, **monad):
    """Approximant of each term at index N."""
    cfg = _config(ctx, precision=precision, **monad)
    if program_name is not None:
        terms = [program(program_name)]
    elif term_file is not None:
        terms = load_terms(term_file, cfg.signature())
    else:
        raise ConfigError("give a term file or --program")
    ev = Evaluator(build_monad(cfg.monad_spec()), max_steps=max_steps)
    report = CheckReport(check="eval", bounds={"precision": precision, "monad": cfg.monad_spec().describe()})
    results = []
    for term in terms:
        result = ev.evaluate(term, precision)
        row: Dict[str, Any] = {
            "term": pretty(term),
            "index": result.index,
            "value": render(result.value),
            "observation": render(ev.monad.observe(result.value)),
            "stable": result.stable,
            "exhausted": result.exhausted,
        }
        if profile and not result.exhausted:
            row["profile"] = [[k, render(obs)] for k, obs in ev.convergence_profile(term, precision)]
        if result.exhausted:
            report.unsure("evaluation budget exhausted", term=term, index=result.index)
        results.append(row)
    report.stats = {"results": results, "memo_entries": ev.memo_entries}
    ev.save()
    return _finish(ctx, report)


@cli.command()
@click.option("--relator", required=True, help="relator expression, e.g. comp(gdist,gexc)")
@monad_options(required=False)
@click.option("--carrier-size", type=int, default=CARRIER_SIZE, show_default=True)
@click.option("--samples", type=int, default=SAMPLE_BUDGET, show_default=True, help="sample budget")
@click.option("--grain", type=int, default=2, show_default=True, help="weight grid of sampled distributions")
@click.option("--suite", type=click.Choice(["all", "relator", "lax", "inductive"]), default="relator",
              show_default=True)
@click.pass_context
@budgeted
def axioms(ctx, relator, carrier_size, samples, grain, suite, **monad):
    """Relator, lax-extension and inductivity laws on small carriers."""
    spec = parse_relator(relator)
    if monad["monad"] is None:
        monad["monad"] = default_monad(spec).kind.value
    cfg = _config(ctx, relator=relator, carrier_size=carrier_size, samples=samples, **monad)
    m = build_monad(cfg.monad_spec())
    common = dict(monad=m, carrier_size=cfg.carrier_size, sample_budget=cfg.samples, seed=cfg.seed,
                  grain=grain, progress=ctx.obj["progress"])
    parts = []
    if suite in ("all", "relator"):
        parts.append(check_relator_axioms(spec, **common))
    if suite in ("all", "lax"):
        parts.append(check_lax_axioms(spec, **common))
    if suite in ("all", "inductive"):
        parts.append(check_inductive_sigma(spec, sig=cfg.signature(), **common))
    report = merge_reports("axioms", parts, relator=str(spec), monad=cfg.monad_spec().describe(),
                           carrier_size=cfg.carrier_size, samples=cfg.samples, seed=cfg.seed)
    return _finish(ctx, report)


@cli.command()
@click.option("--relator", required=True)
@monad_options()
@precision_options
@click.option("--args", "args_file", type=click.Path(path_type=Path), default=None,
              help="test arguments, one value per line")
@click.option("--relation", "relation_file", type=click.Path(path_type=Path), default=None,
              help="candidate relation, TERM<TAB>TERM lines")
@click.option("--candidate", type=click.Choice(["w-z-raise"]), default=None, help="built-in candidate relation")
@click.option("--candidate-depth", type=int, default=4, show_default=True)
@click.pass_context
@budgeted
def simcheck(ctx, relator, precision, slack, args_file, relation_file, candidate, candidate_depth, **monad):
    """Checks that a candidate relation is an applicative simulation."""
    cfg = _config(ctx, relator=relator, precision=precision, slack=slack, **monad)
    test_args = _test_args(cfg, args_file)
    if candidate is not None:
        r = raise_candidate_relation(test_args, candidate_depth)
    elif relation_file is not None:
        r = _relation_from_file(cfg, relation_file)
    else:
        raise ConfigError("give --relation or --candidate")
    sim = SimConfig(parse_relator(relator), cfg.monad_spec(), precision, tuple(test_args), slack=slack)
    report = check_simulation(r, sim)
    return _finish(ctx, report)


def _similarity_config(ctx, relator, precision, slack, args_file, universe_file, depth, rounds, monad) -> SimConfig:
    cfg = _config(ctx, relator=relator, precision=precision, slack=slack, depth=depth, **monad)
    sig = cfg.signature()
    test_args = _test_args(cfg, args_file)
    terms = load_terms(universe_file, sig) if universe_file is not None else enumerate_terms(sig, (), depth)
    values: Tuple = ()
    if rounds:
        terms, values = build_universe(terms, test_args, cfg.monad_spec(), precision, slack, rounds)
    return SimConfig(parse_relator(relator), cfg.monad_spec(), precision, tuple(test_args),
                     tuple(terms), tuple(values), slack)


def similarity_options(fn):
    fn = click.option("--rounds", type=int, default=0, show_default=True,
                      help="close the universe under application to the test arguments")(fn)
    fn = click.option("--depth", type=int, default=3, show_default=True,
                      help="enumeration depth when no universe file is given")(fn)
    fn = click.option("--universe", "universe_file", type=click.Path(path_type=Path), default=None,
                      help="closed terms, one per line")(fn)
    fn = click.option("--args", "args_file", type=click.Path(path_type=Path), default=None)(fn)
    fn = precision_options(fn)
    fn = monad_options()(fn)
    fn = click.option("--relator", required=True)(fn)
    return fn


@cli.command()
@similarity_options
@click.option("--two-way", is_flag=True, help="intersect with the converse")
@click.pass_context
@budgeted
def similarity(ctx, relator, precision, slack, args_file, universe_file, depth, rounds, two_way, **monad):
    """Bounded applicative similarity on a finite universe."""
    sim = _similarity_config(ctx, relator, precision, slack, args_file, universe_file, depth, rounds, monad)
    run = two_way_similarity if two_way else bounded_similarity
    return _finish(ctx, run(sim, progress=ctx.obj["progress"]).report)


@cli.command("bisimilarity")
@similarity_options
@click.pass_context
@budgeted
def bisimilarity_command(ctx, relator, precision, slack, args_file, universe_file, depth, rounds, **monad):
    """Bounded applicative bisimilarity: similarity for the symmetrised relator."""
    sim = _similarity_config(ctx, relator, precision, slack, args_file, universe_file, depth, rounds, monad)
    return _finish(ctx, bisimilarity(sim, progress=ctx.obj["progress"]).report)


@cli.command()
@click.option("--relator", required=True)
@monad_options()
@precision_options
@click.option("--relation", "relation_file", type=click.Path(path_type=Path), default=None,
              help="base relation; bounded similarity on the universe when omitted")
@click.option("--universe", "universe_file", type=click.Path(path_type=Path), default=None,
              help="seed terms, closed under subterms")
@click.option("--depth", type=int, default=3, show_default=True,
              help="enumeration depth when no universe file is given")
@click.option("--closing", "closing_file", type=click.Path(path_type=Path), default=None,
              help="closing values for the open extension")
@click.option("--args", "args_file", type=click.Path(path_type=Path), default=None)
@click.option("--max-vars", type=int, default=MAX_CONTEXT_VARS, show_default=True)
@click.option("--check", "checks", multiple=True, default=("compat",), show_default=True,
              type=click.Choice(["compat", "subst", "key", "fixed", "absorb"]))
@click.option("--m-bound", type=int, default=24, show_default=True, help="witness search bound of the key check")
@click.pass_context
@budgeted
def howe(ctx, relator, precision, slack, relation_file, universe_file, depth, closing_file, args_file,
         max_vars, checks, m_bound, **monad):
    """Howe closure of a relation on a finite open universe, with bounded checks."""
    cfg = _config(ctx, relator=relator, precision=precision, slack=slack, depth=depth, **monad)
    sig = cfg.signature()
    if universe_file is not None:
        universe = Universe.from_nodes(load_terms(universe_file, sig), max_vars)
    else:
        universe = Universe.enumerate(sig, depth, max_vars)
    closing = load_values(closing_file, sig) if closing_file is not None else universe.closed_values
    spec = parse_relator(relator)
    ev = Evaluator(build_monad(cfg.monad_spec()))
    if relation_file is not None:
        r = _relation_from_file(cfg, relation_file, universe.closed_terms, universe.closed_values)
    else:
        test_args = load_values(args_file, sig) if args_file is not None else universe.closed_values
        sim = SimConfig(spec, cfg.monad_spec(), precision, tuple(test_args), tuple(universe.closed_terms),
                        tuple(universe.closed_values), slack)
        r = bounded_similarity(sim, ev, ctx.obj["progress"]).relation
    r_open = open_extension(r, universe, closing)
    closure = howe_closure(r, universe, closing, r_open, progress=ctx.obj["progress"])
    parts = []
    for name in checks:
        if name == "compat":
            parts.append(check_compatibility(closure))
        elif name == "subst":
            parts.append(check_value_substitutive(closure))
        elif name == "fixed":
            parts.append(check_fixed_point(closure, r_open))
        elif name == "absorb":
            parts.append(check_absorbs(r_open, closure))
        else:
            closed = sorted(closure.closed_part().on_terms.pairs, key=lambda p: (pretty(p[0]), pretty(p[1])))
            parts += [check_key_lemma(a, b, closure, spec, ev, precision, m_bound) for a, b in closed if a != b]
    report = merge_reports("howe", parts, relator=str(spec), precision=precision, slack=slack,
                           universe=universe.size(), closing=digest(closing), m_bound=m_bound)
    report.stats["closure"] = closure.size()
    return _finish(ctx, report)


@cli.command()
@click.option("--relator", required=True)
@monad_options()
@precision_options
@click.option("--relation", "relation_file", type=click.Path(path_type=Path), required=True)
@click.pass_context
@budgeted
def preadequate(ctx, relator, precision, slack, relation_file, **monad):
    """Each related pair has observations related by the lifting of the total relation."""
    cfg = _config(ctx, relator=relator, precision=precision, slack=slack, **monad)
    term_pairs, _ = _split_pairs(load_relation(relation_file, cfg.signature()))
    report = check_preadequate(term_pairs, parse_relator(relator), cfg.monad_spec(), precision, slack)
    return _finish(ctx, report)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Runs one command and returns its exit code."""
    try:
        code = cli.main(args=list(argv) if argv is not None else None, prog_name="relatorlab",
                        standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except RelatorLabError as e:
        logger.debug("command failed", exc_info=True)
        click.echo(f"❌ {type(e).__name__}: {e.message}", err=True)
        return exit_code_for(e)
    return code if isinstance(code, int) else EXIT_PASS


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
