"""
RELATOR AXIOMS - Relator Lab
Bounded checks of the relator laws over small abstract carriers:
Rel-1..Rel-4, Lax-Unit / Lax-Bind, and inductivity with Sigma-compatibility.

Carriers are the integers 0..k-1; monadic values come from the monad's finite
sample space. Quantifiers are exhaustive when the instance count fits the
sample budget and sampled with a seeded numpy generator otherwise; the report
records which.
"""

from __future__ import annotations

import logging
from itertools import product
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from lab_config import CARRIER_SIZE, SAMPLE_BUDGET
from monads import Monad, MonadSpec, build_monad
from relators import Relation, RelatorSpec, kinds, lift_holds
from reports import CheckReport
from syntax import Signature

logger = logging.getLogger(__name__)

EXHAUSTIVE_RELATIONS = 512
SAMPLED_RELATIONS = 32


def default_monad(spec: RelatorSpec) -> Monad:
    kind = sorted(kinds(spec), key=lambda k: k.value)[0]
    return build_monad(MonadSpec(kind))


def _relation_str(r: Relation) -> List[List[int]]:
    return sorted([a, b] for a, b in r.pairs)


class _Suite:
    """Shared state of one bounded suite: carrier, sample space, relation pool, lift tables."""

    def __init__(self, name: str, spec: RelatorSpec, monad: Optional[Monad], carrier_size: int,
                 sample_budget: int, seed: int, grain: int, progress: bool):
        self.spec = spec
        self.monad = monad or default_monad(spec)
        self.carrier = list(range(carrier_size))
        self.space = self.monad.sample_space(self.carrier, grain)
        self.budget = sample_budget
        self.rng = np.random.default_rng(seed)
        self.progress = progress
        self.tables: Dict[Relation, FrozenSet[Tuple[int, int]]] = {}
        self.matrices: Dict[Relation, np.ndarray] = {}
        all_pairs = list(product(self.carrier, self.carrier))
        self.exhaustive_relations = 2 ** len(all_pairs) <= EXHAUSTIVE_RELATIONS
        if self.exhaustive_relations:
            self.relations = [self._relation([p for i, p in enumerate(all_pairs) if mask >> i & 1])
                              for mask in range(2 ** len(all_pairs))]
        else:
            picks = self.rng.random((SAMPLED_RELATIONS, len(all_pairs))) < 0.5
            self.relations = [self._relation([p for p, keep in zip(all_pairs, row) if keep]) for row in picks]
            self.relations += [self._relation([]), self._relation(all_pairs), Relation.identity(self.carrier)]
        self.report = CheckReport(check=name, bounds={
            "relator": str(spec),
            "monad": self.monad.kind.value,
            "monad_class": type(self.monad).__name__,
            "carrier_size": carrier_size,
            "sample_space": len(self.space),
            "grain": grain,
            "sample_budget": sample_budget,
            "seed": seed,
            "relations": len(self.relations),
        })
        self.exhaustive: Dict[str, bool] = {"relations": self.exhaustive_relations}
        self.instances: Dict[str, int] = {}

    def _relation(self, pairs) -> Relation:
        return Relation(frozenset(pairs), frozenset(self.carrier), frozenset(self.carrier))

    def lift(self, r: Relation, u, v) -> bool:
        return lift_holds(self.spec, r, u, v)

    def table(self, r: Relation) -> FrozenSet[Tuple[int, int]]:
        """Indices (i, j) of sample-space pairs related by the lifting of r."""
        if r not in self.tables:
            n = len(self.space)
            self.tables[r] = frozenset((i, j) for i in range(n) for j in range(n)
                                       if self.lift(r, self.space[i], self.space[j]))
        return self.tables[r]

    def matrix(self, r: Relation) -> np.ndarray:
        """The lift table of r as an integer 0/1 matrix over sample-space indices."""
        if r not in self.matrices:
            n = len(self.space)
            mat = np.zeros((n, n), dtype=np.int64)
            for i, j in self.table(r):
                mat[i, j] = 1
            self.matrices[r] = mat
        return self.matrices[r]

    def count(self, clause: str, n: int = 1):
        self.instances[clause] = self.instances.get(clause, 0) + n

    def iterate(self, items, desc: str):
        return tqdm(items, desc=desc, disable=not self.progress, leave=False)

    def finish(self) -> CheckReport:
        self.report.bounds["exhaustive"] = self.exhaustive
        self.report.stats["instances"] = self.instances
        logger.info("%s for %s: %s", self.report.check, self.spec, self.report.verdict.value)
        return self.report


def check_relator_axioms(spec: RelatorSpec, carrier_size: int = CARRIER_SIZE, sample_budget: int = SAMPLE_BUDGET,
                         monad: Optional[Monad] = None, seed: int = 0, grain: int = 2,
                         progress: bool = False) -> CheckReport:
    """Rel-1 (identity), Rel-2 (composition), Rel-3 (inverse images), Rel-4 (monotonicity)."""
    s = _Suite("relator-axioms", spec, monad, carrier_size, sample_budget, seed, grain, progress)
    space = s.space
    identity = Relation.identity(s.carrier)

    for u in space:
        s.count("Rel-1")
        if not s.lift(identity, u, u):
            s.report.fail("Rel-1", u=u)
            break
    s.exhaustive["Rel-1"] = True

    for r in s.iterate(s.relations, "Rel-4"):
        for t in s.relations:
            if r.pairs < t.pairs:
                s.count("Rel-4")
                missing = s.table(r) - s.table(t)
                if missing:
                    i, j = min(missing)
                    s.report.fail("Rel-4", r=_relation_str(r), s=_relation_str(t), u=space[i], v=space[j])
                    break
        if "Rel-4" in s.report.clauses():
            break
    s.exhaustive["Rel-4"] = s.exhaustive_relations

    found = False
    for r in s.iterate(s.relations, "Rel-2"):
        left = s.matrix(r)
        for t in s.relations:
            right = s.matrix(t)
            s.count("Rel-2")
            # lift(r) ; lift(t) must lie inside lift(r ; t)
            outside = ((left @ right) > 0) & (s.matrix(r.then(t)) == 0)
            if outside.any():
                i, k = (int(x) for x in np.argwhere(outside)[0])
                j = int(np.argmax(left[i] * right[:, k]))
                s.report.fail("Rel-2", r=_relation_str(r), s=_relation_str(t),
                              u=space[i], v=space[j], w=space[k])
                found = True
                break
        if found:
            break
    s.exhaustive["Rel-2"] = s.exhaustive_relations

    _check_inverse_images(s)
    return s.finish()


def _check_inverse_images(s: _Suite):
    carrier = s.carrier
    functions = [dict(zip(carrier, images)) for images in product(carrier, repeat=len(carrier))]
    n = len(s.space)
    total = len(functions) ** 2 * len(s.relations) * n * n
    s.exhaustive["Rel-3"] = total <= s.budget
    if s.exhaustive["Rel-3"]:
        instances = [(f, g, r, i, j) for f in range(len(functions)) for g in range(len(functions))
                     for r in range(len(s.relations)) for i in range(n) for j in range(n)]
    else:
        draws = s.rng.integers(0, [len(functions), len(functions), len(s.relations), n, n],
                               size=(s.budget, 5))
        instances = [tuple(int(x) for x in row) for row in draws]
    for fi, gi, ri, i, j in s.iterate(instances, "Rel-3"):
        f, g, r = functions[fi], functions[gi], s.relations[ri]
        u, v = s.space[i], s.space[j]
        pulled = r.preimage(f.__getitem__, g.__getitem__, carrier, carrier)
        s.count("Rel-3")
        lhs = s.lift(pulled, u, v)
        rhs = s.lift(r, s.monad.fmap(u, f.__getitem__), s.monad.fmap(v, g.__getitem__))
        if lhs != rhs:
            s.report.fail("Rel-3", f=sorted(f.items()), g=sorted(g.items()), r=_relation_str(r), u=u, v=v,
                          lhs=lhs, rhs=rhs)
            return


def check_lax_axioms(spec: RelatorSpec, monad: Optional[Monad] = None, carrier_size: int = CARRIER_SIZE,
                     sample_budget: int = SAMPLE_BUDGET, seed: int = 0, grain: int = 2,
                     progress: bool = False) -> CheckReport:
    """Lax-Unit and Lax-Bind: the lifting is a lax extension of the monad."""
    s = _Suite("lax-axioms", spec, monad, carrier_size, sample_budget, seed, grain, progress)
    m = s.monad

    for r in s.relations:
        for x, y in sorted(r.pairs):
            s.count("Lax-Unit")
            if not s.lift(r, m.unit(x), m.unit(y)):
                s.report.fail("Lax-Unit", r=_relation_str(r), x=x, y=y)
                break
        if "Lax-Unit" in s.report.clauses():
            break
    s.exhaustive["Lax-Unit"] = s.exhaustive_relations

    n = len(s.space)
    attempts = 0
    checked = 0
    s.exhaustive["Lax-Bind"] = False
    while checked < s.budget and attempts < 50 * s.budget:
        attempts += 1
        r = s.relations[int(s.rng.integers(len(s.relations)))]
        t = s.relations[int(s.rng.integers(len(s.relations)))]
        f = {x: int(s.rng.integers(n)) for x in s.carrier}
        t_table = s.table(t)
        g: Dict[int, int] = {}
        for y in s.carrier:
            sources = [f[x] for x in s.carrier if r.holds(x, y)]
            candidates = [k for k in range(n) if all((i, k) in t_table for i in sources)]
            if not candidates:
                break
            g[y] = candidates[int(s.rng.integers(len(candidates)))]
        if len(g) < len(s.carrier):
            continue
        kf = {x: s.space[i] for x, i in f.items()}
        kg = {y: s.space[k] for y, k in g.items()}
        for i, j in sorted(s.table(r)):
            u, v = s.space[i], s.space[j]
            checked += 1
            s.count("Lax-Bind")
            if not s.lift(t, m.bind(u, kf.__getitem__), m.bind(v, kg.__getitem__)):
                s.report.fail("Lax-Bind", r=_relation_str(r), s=_relation_str(t), u=u, v=v,
                              f=sorted(kf.items()), g=sorted(kg.items()))
                return s.finish()
            if checked >= s.budget:
                break
    if checked < s.budget:
        s.report.unsure("Lax-Bind sampling could not build enough instances", checked=checked)
    return s.finish()


def check_inductive_sigma(spec: RelatorSpec, monad: Optional[Monad] = None, sig: Optional[Signature] = None,
                          carrier_size: int = CARRIER_SIZE, sample_budget: int = SAMPLE_BUDGET, seed: int = 0,
                          grain: int = 2, progress: bool = False) -> CheckReport:
    """Bottom is below everything, stationary chains are admissible, and operations respect the lifting."""
    s = _Suite("inductive-sigma", spec, monad, carrier_size, sample_budget, seed, grain, progress)
    m = s.monad
    sig = sig if sig is not None else m.signature()
    bottom = m.bottom()
    n = len(s.space)

    for r in s.relations:
        for v in s.space:
            s.count("omega-comp-1")
            if not s.lift(r, bottom, v):
                s.report.fail("omega-comp-1", r=_relation_str(r), v=v)
                break
        if "omega-comp-1" in s.report.clauses():
            break
    s.exhaustive["omega-comp-1"] = s.exhaustive_relations

    above = {i: [k for k in range(n) if m.leq(s.space[i], s.space[k])] for i in range(n)}
    for _ in range(min(s.budget, 200)):
        r = s.relations[int(s.rng.integers(len(s.relations)))]
        chain = [int(s.rng.integers(n))]
        for _ in range(int(s.rng.integers(1, 4))):
            nxt = above[chain[-1]]
            chain.append(nxt[int(s.rng.integers(len(nxt)))])
        j = int(s.rng.integers(n))
        s.count("omega-comp-2")
        table = s.table(r)
        if all((i, j) in table for i in chain) and (chain[-1], j) not in table:
            s.report.fail("omega-comp-2", r=_relation_str(r), chain=[s.space[i] for i in chain], v=s.space[j])
            break
    s.exhaustive["omega-comp-2"] = False

    for name, arity in sig.ops:
        for _ in range(max(1, s.budget // max(1, len(sig.ops)))):
            r = s.relations[int(s.rng.integers(len(s.relations)))]
            related = sorted(s.table(r))
            if arity and not related:
                continue
            picks = [related[int(s.rng.integers(len(related)))] for _ in range(arity)]
            us = [s.space[i] for i, _ in picks]
            vs = [s.space[j] for _, j in picks]
            s.count("Sigma-comp")
            if not s.lift(r, m.interpret_op(name, us), m.interpret_op(name, vs)):
                s.report.fail("Sigma-comp", op=name, r=_relation_str(r), us=us, vs=vs)
                return s.finish()
            if arity == 0:
                break
    s.exhaustive["Sigma-comp"] = False
    return s.finish()
