"""
HOWE - Relator Lab
Open relations over a finite universe: open extension, compatible refinement,
the Howe closure, and bounded checks of compatibility, value-substitutivity and
Key Lemma instances.

The Howe closure of R is the least S with S = R° ∘ Ŝ (first a compatible
refinement step, then a step of the open extension). It is computed by
saturation from the empty relation; every step stays inside the universe.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import product
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from tqdm import tqdm

from error_handler import BudgetExceededError, ConfigError
from evaluator import Evaluator
from reports import CheckReport
from relators import Relation, RelatorSpec, lift_holds
from similarity import ClosedRelationPair
from syntax import App, Lam, Node, Op, Return, Seq, Term, Value, Var, close, close_with, pretty, substitute
from universe import Context, Universe, sort_nodes

logger = logging.getLogger(__name__)

Triple = Tuple[Context, Node, Node]

COMPATIBILITY_RULES = {
    "Comp1": "variables",
    "Comp2": "abstraction",
    "Comp3": "return",
    "Comp4": "application",
    "Comp5": "sequencing",
    "Comp6": "operations",
}


@dataclass(frozen=True)
class OpenRelation:
    """Triples (context, left, right) on terms and on values of a universe."""

    universe: Universe
    on_terms: FrozenSet[Triple]
    on_values: FrozenSet[Triple]

    @classmethod
    def empty(cls, universe: Universe) -> "OpenRelation":
        return cls(universe, frozenset(), frozenset())

    @classmethod
    def identity(cls, universe: Universe) -> "OpenRelation":
        return cls(universe,
                   frozenset((c, t, t) for c in universe.contexts for t in universe.terms[c]),
                   frozenset((c, v, v) for c in universe.contexts for v in universe.values[c]))

    @classmethod
    def full(cls, universe: Universe) -> "OpenRelation":
        return cls(universe,
                   frozenset((c, a, b) for c in universe.contexts for a in universe.terms[c] for b in universe.terms[c]),
                   frozenset((c, a, b) for c in universe.contexts for a in universe.values[c]
                             for b in universe.values[c]))

    def holds(self, ctx: Context, a: Node, b: Node) -> bool:
        return (ctx, a, b) in self.on_terms or (ctx, a, b) in self.on_values

    def at(self, ctx: Context, values: bool = False) -> List[Tuple[Node, Node]]:
        source = self.on_values if values else self.on_terms
        return [(a, b) for c, a, b in source if c == ctx]

    def union(self, other: "OpenRelation") -> "OpenRelation":
        return OpenRelation(self.universe, self.on_terms | other.on_terms, self.on_values | other.on_values)

    def issubset(self, other: "OpenRelation") -> bool:
        return self.on_terms <= other.on_terms and self.on_values <= other.on_values

    def closed_part(self) -> ClosedRelationPair:
        terms = self.universe.terms[()]
        values = self.universe.values[()]
        return ClosedRelationPair(
            Relation(frozenset((a, b) for c, a, b in self.on_terms if c == ()), terms, terms),
            Relation(frozenset((a, b) for c, a, b in self.on_values if c == ()), values, values))

    def size(self) -> Dict[str, int]:
        return {"terms": len(self.on_terms), "values": len(self.on_values)}

    def describe(self) -> Dict[str, Any]:
        return {
            "terms": sorted([list(c), pretty(a), pretty(b)] for c, a, b in self.on_terms),
            "values": sorted([list(c), pretty(a), pretty(b)] for c, a, b in self.on_values),
        }


def _closings(ctx: Context, closing_values: Sequence[Value]) -> List[Dict[str, Value]]:
    return [dict(zip(ctx, combo)) for combo in product(closing_values, repeat=len(ctx))]


def open_extension(r: ClosedRelationPair, universe: Universe, closing_values: Sequence[Value]) -> OpenRelation:
    """(c, M, N) is related iff every closing substitution drawn from closing_values lands in r."""
    closing_values = sort_nodes(closing_values)
    terms: Set[Triple] = set()
    values: Set[Triple] = set()
    for ctx in universe.contexts:
        sigmas = _closings(ctx, closing_values)
        for bucket, out, holds in ((universe.terms[ctx], terms, r.holds_terms),
                                   (universe.values[ctx], values, r.holds_values)):
            nodes = sort_nodes(bucket)
            closed = {n: [close_with(n, s) for s in sigmas] for n in nodes}
            for a in nodes:
                for b in nodes:
                    if all(holds(x, y) for x, y in zip(closed[a], closed[b])):
                        out.add((ctx, a, b))
    return OpenRelation(universe, frozenset(terms), frozenset(values))


def refinement_by_rule(s: OpenRelation) -> Dict[str, Set[Triple]]:
    """One application of the compatible refinement rules, restricted to the universe, keyed by clause."""
    u = s.universe
    out: Dict[str, Set[Triple]] = {rule: set() for rule in COMPATIBILITY_RULES}
    for ctx in u.contexts:
        sv = s.at(ctx, values=True)
        st = s.at(ctx)
        inner = u.extend(ctx)
        for x in ctx:
            if u.has_value(ctx, Var(x)):
                out["Comp1"].add((ctx, Var(x), Var(x)))
        if inner is not None:
            x = inner[-1]
            for m, n in s.at(inner):
                a, b = Lam(close(m, x), x), Lam(close(n, x), x)
                if u.has_value(ctx, a) and u.has_value(ctx, b):
                    out["Comp2"].add((ctx, a, b))
        for v, w in sv:
            a, b = Return(v), Return(w)
            if u.has_term(ctx, a) and u.has_term(ctx, b):
                out["Comp3"].add((ctx, a, b))
        for v, v2 in sv:
            for w, w2 in sv:
                a, b = App(v, w), App(v2, w2)
                if u.has_term(ctx, a) and u.has_term(ctx, b):
                    out["Comp4"].add((ctx, a, b))
        if inner is not None:
            x = inner[-1]
            bodies = [(close(n, x), close(n2, x)) for n, n2 in s.at(inner)]
            for m, m2 in st:
                for n, n2 in bodies:
                    a, b = Seq(m, n, x), Seq(m2, n2, x)
                    if u.has_term(ctx, a) and u.has_term(ctx, b):
                        out["Comp5"].add((ctx, a, b))
        ops = sorted({(t.name, len(t.args)) for t in u.terms[ctx] if isinstance(t, Op)})
        for name, arity in ops:
            for combo in product(st, repeat=arity):
                a = Op(name, tuple(p[0] for p in combo))
                b = Op(name, tuple(p[1] for p in combo))
                if u.has_term(ctx, a) and u.has_term(ctx, b):
                    out["Comp6"].add((ctx, a, b))
    return out


def compatible_refinement(s: OpenRelation) -> OpenRelation:
    rules = refinement_by_rule(s)
    values = rules["Comp1"] | rules["Comp2"]
    terms = set().union(*(rules[k] for k in ("Comp3", "Comp4", "Comp5", "Comp6")))
    return OpenRelation(s.universe, frozenset(terms), frozenset(values))


def compose_open(first: OpenRelation, second: OpenRelation) -> OpenRelation:
    """Triples (c, M, N) with (c, M, L) in first and (c, L, N) in second."""
    def join(a: FrozenSet[Triple], b: FrozenSet[Triple]) -> FrozenSet[Triple]:
        index: Dict[Tuple[Context, Node], List[Node]] = {}
        for c, l, n in b:
            index.setdefault((c, l), []).append(n)
        return frozenset((c, m, n) for c, m, l in a for n in index.get((c, l), ()))
    return OpenRelation(first.universe, join(first.on_terms, second.on_terms), join(first.on_values, second.on_values))


def howe_step(current: OpenRelation, r_open: OpenRelation) -> OpenRelation:
    return compose_open(compatible_refinement(current), r_open)


def howe_closure(r: ClosedRelationPair, universe: Universe, closing_values: Sequence[Value],
                 r_open: Optional[OpenRelation] = None, max_rounds: int = 10_000,
                 progress: bool = False) -> OpenRelation:
    """Least S with S = R° ∘ Ŝ on the universe."""
    if r_open is None:
        r_open = open_extension(r, universe, closing_values)
    current = OpenRelation.empty(universe)
    bar = tqdm(desc="howe", disable=not progress, leave=False)
    for round_no in range(1, max_rounds + 1):
        bar.update(1)
        nxt = howe_step(current, r_open)
        if nxt.issubset(current):
            bar.close()
            logger.info("howe closure saturated after %d rounds: %s", round_no, current.size())
            return current
        current = nxt.union(current)
    bar.close()
    raise BudgetExceededError("Howe saturation round", max_rounds)


def check_fixed_point(closure: OpenRelation, r_open: OpenRelation) -> CheckReport:
    report = CheckReport(check="howe-fixed-point", stats=closure.size())
    again = howe_step(closure, r_open)
    for c, a, b in sorted(again.on_terms - closure.on_terms, key=repr)[:1]:
        report.fail("missing", context=list(c), left=a, right=b)
    for c, a, b in sorted(closure.on_terms - again.on_terms, key=repr)[:1]:
        report.fail("extra", context=list(c), left=a, right=b)
    if again.on_values != closure.on_values:
        report.fail("values", difference=len(again.on_values ^ closure.on_values))
    return report


def _is_preorder(s: OpenRelation) -> bool:
    u = s.universe
    for c in u.contexts:
        if any((c, t, t) not in s.on_terms for t in u.terms[c]):
            return False
        if any((c, v, v) not in s.on_values for v in u.values[c]):
            return False
    composed = compose_open(s, s)
    return composed.issubset(s)


def _first(witnesses: Iterable[Triple]) -> Optional[Triple]:
    ordered = sorted(witnesses, key=lambda t: (len(t[0]), pretty(t[1]), pretty(t[2])))
    return ordered[0] if ordered else None


def check_compatibility(s: OpenRelation) -> CheckReport:
    """Ŝ ⊆ S on the universe, clause by clause; the unidirectional clauses too when S is a preorder."""
    u = s.universe
    report = CheckReport(check="compatibility", bounds={"universe": u.size()}, stats=s.size())
    for rule, triples in refinement_by_rule(s).items():
        missing = [t for t in triples if not s.holds(*t)]
        if missing:
            c, a, b = _first(missing)
            report.fail(rule, context=list(c), left=a, right=b, violations=len(missing))
    if not _is_preorder(s):
        report.stats["preorder"] = False
        return report
    report.stats["preorder"] = True
    for rule, required in _unidirectional(s).items():
        missing = [t for t in required if not s.holds(*t)]
        if missing:
            c, a, b = _first(missing)
            report.fail(rule, context=list(c), left=a, right=b, violations=len(missing))
    return report


def _unidirectional(s: OpenRelation) -> Dict[str, Set[Triple]]:
    u = s.universe
    out: Dict[str, Set[Triple]] = {k: set() for k in ("Comp4L", "Comp4R", "Comp5L", "Comp5R", "Comp6C")}
    for ctx in u.contexts:
        vals = u.values[ctx]
        for v, v2 in s.at(ctx, values=True):
            for w in vals:
                for rule, a, b in (("Comp4L", App(v, w), App(v2, w)), ("Comp4R", App(w, v), App(w, v2))):
                    if u.has_term(ctx, a) and u.has_term(ctx, b):
                        out[rule].add((ctx, a, b))
        related: Dict[Node, List[Node]] = {}
        for m, m2 in s.at(ctx):
            related.setdefault(m, []).append(m2)
        inner = u.extend(ctx)
        inner_related: Dict[Node, List[Node]] = {}
        if inner is not None:
            x = inner[-1]
            for n, n2 in s.at(inner):
                inner_related.setdefault(close(n, x), []).append(close(n2, x))
        for t in u.terms[ctx]:
            if isinstance(t, Seq):
                for m2 in related.get(t.first, ()):
                    b = Seq(m2, t.then, t.hint)
                    if u.has_term(ctx, b):
                        out["Comp5L"].add((ctx, t, b))
                for n2 in inner_related.get(t.then, ()):
                    b = Seq(t.first, n2, t.hint)
                    if u.has_term(ctx, b):
                        out["Comp5R"].add((ctx, t, b))
            elif isinstance(t, Op):
                for i, arg in enumerate(t.args):
                    for n in related.get(arg, ()):
                        b = Op(t.name, t.args[:i] + (n,) + t.args[i + 1:])
                        if u.has_term(ctx, b):
                            out["Comp6C"].add((ctx, t, b))
    return out


def value_substitution_samples(s: OpenRelation) -> List[Tuple[Triple, Triple]]:
    """All pairs of a one-variable term triple and a closed value triple."""
    u = s.universe
    one = u.extend(())
    if one is None:
        return []
    terms = sorted(((one, a, b) for a, b in s.at(one)), key=repr)
    values = sorted((((), a, b) for a, b in s.at((), values=True)), key=repr)
    return [(t, v) for t in terms for v in values]


def check_value_substitutive(s: OpenRelation, samples: Optional[Sequence[Tuple[Triple, Triple]]] = None) -> CheckReport:
    """({x} ⊢ M S N) and (⊢ V S W) imply (⊢ M[V/x] S N[W/x]), whenever both instances are in the universe."""
    u = s.universe
    samples = value_substitution_samples(s) if samples is None else list(samples)
    report = CheckReport(check="value-substitutivity", bounds={"universe": u.size()})
    checked = outside = 0
    for (ctx, m, n), (_, v, w) in samples:
        x = ctx[-1]
        a, b = substitute(m, x, v), substitute(n, x, w)
        target = ctx[:-1]
        if not (u.has_term(target, a) and u.has_term(target, b)):
            outside += 1
            continue
        checked += 1
        if (target, a, b) not in s.on_terms:
            report.fail("value-substitutive", left=m, right=n, value_left=v, value_right=w,
                        result_left=a, result_right=b)
            break
    if outside:
        report.unsure("substitution instances outside the universe", count=outside)
    report.stats = {"samples": len(samples), "checked": checked, "outside_universe": outside}
    return report


def check_key_lemma(m: Term, n_target: Term, s: OpenRelation, relator: RelatorSpec, evaluator: Evaluator,
                    n: int, m_bound: int) -> CheckReport:
    """PASS when some approximant of the right side up to m_bound lifts the closed value part of S; never FAIL."""
    if ((), m, n_target) not in s.on_terms:
        raise ConfigError(f"pair is not in the relation: {pretty(m)} / {pretty(n_target)}")
    report = CheckReport(check="key-lemma", bounds={"n": n, "m_bound": m_bound, "relator": str(relator)})
    closed = s.closed_part()
    u = evaluator.approximate(m, n)
    for k in range(m_bound + 1):
        v = evaluator.approximate(n_target, k)
        extra = evaluator.monad.values_of(u) | evaluator.monad.values_of(v)
        # S is reflexive, so values outside the universe are related to themselves
        outside = extra - (closed.on_values.left | closed.on_values.right)
        rel = Relation(closed.on_values.pairs | {(x, x) for x in outside},
                       closed.on_values.left | extra, closed.on_values.right | extra)
        if lift_holds(relator, rel, u, v):
            report.stats = {"witness_index": k}
            return report
    report.unsure("no witness index within bound", left=m, right=n_target)
    return report


def check_absorbs(r_open: OpenRelation, closure: OpenRelation) -> CheckReport:
    """A closure step followed by a step of the open extension stays in the closure."""
    report = CheckReport(check="howe-absorption", stats=closure.size())
    composed = compose_open(closure, r_open)
    missing = [t for t in composed.on_terms | composed.on_values if not closure.holds(*t)]
    if missing:
        c, a, b = _first(missing)
        report.fail("absorption", context=list(c), left=a, right=b, violations=len(missing))
    return report
