"""
SIMILARITY - Relator Lab
Applicative (bi)similarity over finite universes of closed terms.

A relation pair (R_T on terms, R_V on values) is a simulation when
  Sim-1: M R_T N  implies  [M] Gamma(R_V) [N]
  Sim-2: V R_V W  implies  V U R_T W U  for every test argument U.
Similarity is the greatest such pair, computed by iterating the simulation
functional downward from the full relations. Everything is bounded by the
approximation index and the chosen universe; pairs whose Sim-2 obligations
leave the universe are kept and reported as inconclusive.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Tuple

from tqdm import tqdm

from evaluator import Evaluator, evaluator_for
from monads import MonadSpec
from relators import Relation, RelatorSpec, lift_holds, symmetrize
from reports import CheckReport, digest
from syntax import App, Term, Value, pretty
from universe import sort_nodes

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClosedRelationPair:
    """Relation on closed terms and on closed values; ``reflexive`` adds the diagonal beyond the carriers."""

    on_terms: Relation
    on_values: Relation
    reflexive: bool = False

    @classmethod
    def of(cls, term_pairs: Iterable[Tuple[Term, Term]], value_pairs: Iterable[Tuple[Value, Value]] = (),
           terms: Iterable[Term] = (), values: Iterable[Value] = (), reflexive: bool = False) -> "ClosedRelationPair":
        terms, values = list(terms), list(values)
        return cls(Relation.of(term_pairs, terms, terms), Relation.of(value_pairs, values, values), reflexive)

    def holds_terms(self, a: Term, b: Term) -> bool:
        return self.on_terms.holds(a, b) or (self.reflexive and a == b)

    def holds_values(self, a: Value, b: Value) -> bool:
        return self.on_values.holds(a, b) or (self.reflexive and a == b)

    def converse(self) -> "ClosedRelationPair":
        return ClosedRelationPair(self.on_terms.converse(), self.on_values.converse(), self.reflexive)

    def intersect(self, other: "ClosedRelationPair") -> "ClosedRelationPair":
        return ClosedRelationPair(self.on_terms.intersect(other.on_terms), self.on_values.intersect(other.on_values),
                                  self.reflexive and other.reflexive)

    def is_symmetric(self) -> bool:
        return self.on_terms.pairs == self.on_terms.converse().pairs and \
            self.on_values.pairs == self.on_values.converse().pairs

    def value_relation(self, extra: Iterable[Value] = ()) -> Relation:
        """Value relation over carriers widened by ``extra``, with the diagonal when reflexive."""
        extra = frozenset(extra)
        pairs = self.on_values.pairs
        if self.reflexive:
            pairs = pairs | {(x, x) for x in extra | self.on_values.left | self.on_values.right}
        return Relation(frozenset(pairs), self.on_values.left | extra, self.on_values.right | extra)

    def describe(self) -> Dict[str, Any]:
        return {
            "terms": sorted([pretty(a), pretty(b)] for a, b in self.on_terms.pairs),
            "values": sorted([pretty(a), pretty(b)] for a, b in self.on_values.pairs),
        }


@dataclass(frozen=True)
class SimConfig:
    relator: RelatorSpec
    monad: MonadSpec
    precision: int
    test_args: Tuple[Value, ...]
    terms: Tuple[Term, ...] = ()
    values: Tuple[Value, ...] = ()
    slack: int = 0

    def bounds(self) -> Dict[str, Any]:
        return {
            "relator": str(self.relator),
            "monad": self.monad.describe(),
            "precision": self.precision,
            "slack": self.slack,
            "test_args": digest(self.test_args),
            "universe_terms": len(self.terms),
            "universe_values": len(self.values),
        }


@dataclass
class SimilarityResult:
    relation: ClosedRelationPair
    report: CheckReport
    kept: FrozenSet[Tuple[Value, Value]] = frozenset()
    iterations: int = 0


def _evaluator(cfg: SimConfig, evaluator: Optional[Evaluator]) -> Evaluator:
    return evaluator if evaluator is not None else evaluator_for(cfg.monad)


def build_universe(terms: Iterable[Term], test_args: Iterable[Value], monad: MonadSpec, precision: int,
                   slack: int = 0, rounds: int = 2,
                   evaluator: Optional[Evaluator] = None) -> Tuple[Tuple[Term, ...], Tuple[Value, ...]]:
    """Closed term universe plus the values its approximants produce, closed under application to the
    test arguments for a bounded number of rounds."""
    ev = evaluator if evaluator is not None else evaluator_for(monad)
    args = list(test_args)
    term_set = set(terms)
    value_set = set(args)
    pending = list(term_set)
    for round_no in range(rounds + 1):
        for t in pending:
            for n in {precision, precision + slack}:
                value_set |= ev.monad.values_of(ev.approximate(t, n))
        if round_no == rounds:
            break
        pending = [App(v, w) for v in value_set for w in args if App(v, w) not in term_set]
        term_set.update(pending)
        if not pending:
            break
    return tuple(sort_nodes(term_set)), tuple(sort_nodes(value_set))


def check_simulation(r: ClosedRelationPair, cfg: SimConfig, evaluator: Optional[Evaluator] = None) -> CheckReport:
    """Checks Sim-1 and Sim-2 for a candidate relation at the configured precision."""
    ev = _evaluator(cfg, evaluator)
    report = CheckReport(check="simulation", bounds=cfg.bounds())
    for a, b in sorted(r.on_terms.pairs, key=lambda p: (pretty(p[0]), pretty(p[1]))):
        u = ev.approximate(a, cfg.precision)
        v = ev.approximate(b, cfg.precision + cfg.slack)
        rel = r.value_relation(ev.monad.values_of(u) | ev.monad.values_of(v))
        if not lift_holds(cfg.relator, rel, u, v):
            report.fail("Sim-1", left=a, right=b, left_approximant=u, right_approximant=v)
    universe = r.on_terms.left | r.on_terms.right
    for v, w in sorted(r.on_values.pairs, key=lambda p: (pretty(p[0]), pretty(p[1]))):
        for arg in cfg.test_args:
            a, b = App(v, arg), App(w, arg)
            if r.holds_terms(a, b):
                continue
            if a not in universe or b not in universe:
                report.unsure("universe escape", left=a, right=b)
            else:
                report.fail("Sim-2", left=v, right=w, argument=arg)
    report.stats = {"term_pairs": len(r.on_terms), "value_pairs": len(r.on_values)}
    return report


def bounded_similarity(cfg: SimConfig, evaluator: Optional[Evaluator] = None,
                       progress: bool = False) -> SimilarityResult:
    """Greatest fixed point of the simulation functional restricted to the configured universe."""
    ev = _evaluator(cfg, evaluator)
    terms = list(cfg.terms)
    left = {t: ev.approximate(t, cfg.precision) for t in terms}
    right = {t: ev.approximate(t, cfg.precision + cfg.slack) for t in terms}
    values = set(cfg.values)
    for t in terms:
        values |= ev.monad.values_of(left[t]) | ev.monad.values_of(right[t])
    values = sort_nodes(values)
    term_set = set(terms)

    rt = {(a, b) for a in terms for b in terms}
    rv = {(v, w) for v in values for w in values}
    kept: set = set()
    iterations = 0
    bar = tqdm(desc="similarity", disable=not progress, leave=False)
    while True:
        iterations += 1
        bar.update(1)
        rel_v = Relation(frozenset(rv), frozenset(values), frozenset(values))
        new_rt = {(a, b) for a, b in rt if lift_holds(cfg.relator, rel_v, left[a], right[b])}
        new_rv = set()
        kept = set()
        for v, w in rv:
            escaped = False
            ok = True
            for arg in cfg.test_args:
                a, b = App(v, arg), App(w, arg)
                if a not in term_set or b not in term_set:
                    escaped = True
                elif (a, b) not in rt:
                    ok = False
                    break
            if ok:
                new_rv.add((v, w))
                if escaped:
                    kept.add((v, w))
        if new_rt == rt and new_rv == rv:
            break
        rt, rv = new_rt, new_rv
    bar.close()

    relation = ClosedRelationPair(Relation(frozenset(rt), frozenset(terms), frozenset(terms)),
                                  Relation(frozenset(rv), frozenset(values), frozenset(values)), reflexive=True)
    report = CheckReport(check="similarity", bounds=cfg.bounds())
    for v, w in sort_nodes_pairs(kept):
        report.unsure("kept without full Sim-2 evidence", left=v, right=w)
    report.stats = {"iterations": iterations, "term_pairs": len(rt), "value_pairs": len(rv),
                    "relation": relation.describe()}
    logger.info("similarity: %d term pairs, %d value pairs after %d iterations", len(rt), len(rv), iterations)
    return SimilarityResult(relation, report, frozenset(kept), iterations)


def sort_nodes_pairs(pairs: Iterable[Tuple[Any, Any]]) -> List[Tuple[Any, Any]]:
    return sorted(pairs, key=lambda p: (pretty(p[0]), pretty(p[1])))


def bisimilarity(cfg: SimConfig, evaluator: Optional[Evaluator] = None, progress: bool = False) -> SimilarityResult:
    """Similarity for the symmetrised relator ``Gamma /\\ Gamma^c``."""
    result = bounded_similarity(replace(cfg, relator=symmetrize(cfg.relator)), evaluator, progress)
    result.report.check = "bisimilarity"
    return result


def two_way_similarity(cfg: SimConfig, evaluator: Optional[Evaluator] = None,
                       progress: bool = False) -> SimilarityResult:
    """Similarity intersected with its converse."""
    result = bounded_similarity(cfg, evaluator, progress)
    both = result.relation.intersect(result.relation.converse())
    result.relation = both
    result.report.check = "two-way-similarity"
    result.report.stats["term_pairs"] = len(both.on_terms)
    result.report.stats["value_pairs"] = len(both.on_values)
    result.report.stats["relation"] = both.describe()
    return result


def check_preadequate(pairs: Iterable[Tuple[Term, Term]], relator: RelatorSpec, monad: MonadSpec, precision: int,
                      slack: int = 0, evaluator: Optional[Evaluator] = None) -> CheckReport:
    """Each pair is related by the lifting of the total value relation: observations agree as the relator demands."""
    ev = evaluator if evaluator is not None else evaluator_for(monad)
    report = CheckReport(check="preadequacy", bounds={"relator": str(relator), "monad": monad.describe(),
                                                      "precision": precision, "slack": slack})
    count = 0
    for a, b in pairs:
        count += 1
        u = ev.approximate(a, precision)
        v = ev.approximate(b, precision + slack)
        everything = Relation.full(ev.monad.values_of(u), ev.monad.values_of(v))
        if not lift_holds(relator, everything, u, v):
            report.fail("preadequacy", left=a, right=b, left_observation=ev.monad.observe(u),
                        right_observation=ev.monad.observe(v))
    report.stats = {"pairs": count}
    return report


def check_preorder(r: ClosedRelationPair) -> CheckReport:
    """Reflexivity and transitivity on the relation's term carrier."""
    report = CheckReport(check="preorder")
    carrier = r.on_terms.left & r.on_terms.right
    for t in sort_nodes(carrier):
        if not r.holds_terms(t, t):
            report.fail("reflexive", term=t)
            break
    composed = r.on_terms.then(r.on_terms)
    for a, c in sort_nodes_pairs(composed.pairs - r.on_terms.pairs):
        if a != c:
            report.fail("transitive", left=a, right=c)
            break
    return report
