"""
EVALUATOR - Relator Lab
Indexed big-step semantics: the n-th approximant of a closed term in a monad.

    M^0                 = bottom
    (return V)^(n+1)    = unit V
    ((\\x.M) V)^(n+1)   = (M[V/x])^n
    (M to x.N)^(n+1)    = M^n >>= (V -> (N[V/x])^n)
    op(M1..Mk)^(n+1)    = op_T(M1^n .. Mk^n)

Approximants are memoised on (term, n); the memo can spill to disk.
"""

from __future__ import annotations

import hashlib
import logging
import sys
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import joblib
from cachetools import LRUCache

from error_handler import BudgetExceededError, OpenTermError
from lab_config import MEMO_SIZE, cache_dir
from monads import Monad, MonadSpec, build_monad
from syntax import App, Lam, Op, Return, Seq, Term, free_vars, instantiate, pretty

logger = logging.getLogger(__name__)

# one index level costs a handful of Python frames
sys.setrecursionlimit(max(sys.getrecursionlimit(), 20_000))


@dataclass(frozen=True)
class ApproxResult:
    term: Term
    index: int
    value: Any
    stable: bool
    exhausted: bool = False


@dataclass(frozen=True)
class Judgment:
    """One rule application ``term^(index) = result`` with its premises."""

    rule: str
    term: Term
    index: int
    result: Any
    premises: Tuple["Judgment", ...] = field(default_factory=tuple)

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premises)


def _stuck(term) -> TypeError:
    return TypeError(f"closed term cannot be evaluated: {pretty(term)}")


class Evaluator:
    """Computes approximants of closed terms in one monad."""

    def __init__(self, monad: Monad, memo_size: int = MEMO_SIZE, max_steps: Optional[int] = None,
                 spill_dir: Optional[Path] = None):
        self.monad = monad
        self.max_steps = max_steps
        self.steps = 0
        self._memo: LRUCache = LRUCache(maxsize=memo_size)
        self._lock = threading.RLock()
        self._spill_path = self._spill_file(spill_dir if spill_dir is not None else cache_dir())
        self._load_spill()

    # --- memo spill ---

    def _spill_file(self, directory: Optional[Path]) -> Optional[Path]:
        if directory is None:
            return None
        key = repr(sorted(self.monad.spec.describe().items())) + type(self.monad).__name__
        digest = hashlib.sha256(key.encode()).hexdigest()[:16]
        return Path(directory) / f"memo-{self.monad.kind.value}-{digest}.joblib"

    def _load_spill(self):
        if self._spill_path is None or not self._spill_path.exists():
            return
        try:
            entries = joblib.load(self._spill_path)
        except Exception as e:
            logger.warning("ignoring unreadable memo spill %s: %s", self._spill_path, e)
            return
        with self._lock:
            for key, value in entries.items():
                self._memo[key] = value
        logger.info("loaded %d memo entries from %s", len(entries), self._spill_path)

    def save(self) -> Optional[Path]:
        """Dumps the memo to the cache directory, if one is configured."""
        if self._spill_path is None:
            return None
        with self._lock:
            snapshot = dict(self._memo.items())
        joblib.dump(snapshot, self._spill_path)
        logger.info("spilled %d memo entries to %s", len(snapshot), self._spill_path)
        return self._spill_path

    def clear(self):
        with self._lock:
            self._memo.clear()
        self.steps = 0

    @property
    def memo_entries(self) -> int:
        return len(self._memo)

    # --- semantics ---

    def approximate(self, term: Term, n: int):
        """The n-th approximant of a closed term."""
        fv = free_vars(term)
        if fv:
            raise OpenTermError(fv)
        if n < 0:
            raise ValueError("approximation index must be non-negative")
        return self._approx(term, n)

    def _approx(self, term: Term, n: int):
        if n == 0:
            return self.monad.bottom()
        key = (term, n)
        with self._lock:
            hit = self._memo.get(key)
            if hit is not None:
                return hit
            self.steps += 1
            if self.max_steps is not None and self.steps > self.max_steps:
                raise BudgetExceededError("evaluation step", self.max_steps)
            result = self._rule(term, n)
            self._memo[key] = result
            return result

    def _rule(self, term: Term, n: int):
        m = self.monad
        if isinstance(term, Return):
            return m.unit(term.value)
        if isinstance(term, App):
            if not isinstance(term.fun, Lam):
                raise _stuck(term)
            return self._approx(instantiate(term.fun.body, term.arg), n - 1)
        if isinstance(term, Seq):
            first = self._approx(term.first, n - 1)
            return m.bind(first, lambda v: self._approx(instantiate(term.then, v), n - 1))
        if isinstance(term, Op):
            return m.interpret_op(term.name, [self._approx(a, n - 1) for a in term.args])
        raise _stuck(term)

    def derive(self, term: Term, n: int) -> Judgment:
        """Judgment tree by explicit rule application, without the memo."""
        fv = free_vars(term)
        if fv:
            raise OpenTermError(fv)
        return self._derive(term, n)

    def _derive(self, term: Term, n: int) -> Judgment:
        m = self.monad
        if n == 0:
            return Judgment("bot", term, 0, m.bottom())
        if isinstance(term, Return):
            return Judgment("ret", term, n, m.unit(term.value))
        if isinstance(term, App):
            if not isinstance(term.fun, Lam):
                raise _stuck(term)
            premise = self._derive(instantiate(term.fun.body, term.arg), n - 1)
            return Judgment("app", term, n, premise.result, (premise,))
        if isinstance(term, Seq):
            first = self._derive(term.first, n - 1)
            continuations: Dict[Any, Judgment] = {
                v: self._derive(instantiate(term.then, v), n - 1) for v in m.values_of(first.result)}
            result = m.bind(first.result, lambda v: continuations[v].result)
            ordered = sorted(continuations.values(), key=lambda j: pretty(j.term))
            return Judgment("seq", term, n, result, (first, *ordered))
        if isinstance(term, Op):
            premises = tuple(self._derive(a, n - 1) for a in term.args)
            return Judgment("op", term, n, m.interpret_op(term.name, [p.result for p in premises]), premises)
        raise _stuck(term)

    def evaluate(self, term: Term, max_n: int) -> ApproxResult:
        """Approximant at max_n; stable when the next index adds nothing."""
        fv = free_vars(term)
        if fv:
            raise OpenTermError(fv)
        last = self.monad.bottom()
        for k in range(1, max_n + 1):
            try:
                last = self._approx(term, k)
            except BudgetExceededError:
                logger.info("evaluation budget exhausted at index %d", k)
                return ApproxResult(term, k - 1, last, stable=False, exhausted=True)
        try:
            stable = self._approx(term, max_n + 1) == last
        except BudgetExceededError:
            return ApproxResult(term, max_n, last, stable=False, exhausted=True)
        return ApproxResult(term, max_n, last, stable)

    def convergence_profile(self, term: Term, max_n: int) -> List[Tuple[int, Any]]:
        """Indices at which the observation of the approximant changes, with the new observation."""
        profile: List[Tuple[int, Any]] = []
        previous = self.monad.observe(self.monad.bottom())
        for k in range(1, max_n + 1):
            obs = self.monad.observe(self.approximate(term, k))
            if obs != previous:
                profile.append((k, obs))
                previous = obs
        return profile


_EVALUATORS: Dict[MonadSpec, Evaluator] = {}
_EVALUATORS_LOCK = threading.Lock()


def evaluator_for(spec: MonadSpec) -> Evaluator:
    """Shared evaluator per monad spec."""
    with _EVALUATORS_LOCK:
        if spec not in _EVALUATORS:
            _EVALUATORS[spec] = Evaluator(build_monad(spec))
        return _EVALUATORS[spec]


def approximate(term: Term, n: int, spec: MonadSpec):
    return evaluator_for(spec).approximate(term, n)


def evaluate(term: Term, max_n: int, spec: MonadSpec) -> ApproxResult:
    return evaluator_for(spec).evaluate(term, max_n)
