"""
MONADS - Relator Lab
Finite representations of the effect monads the evaluator runs in: each one
is an omega-cppo-ordered Kleisli triple together with the interpretation of its
algebraic operations and a finite, effect-specific observation.
"""

from __future__ import annotations

import logging
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from typing import Any, Callable, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

from error_handler import (
    ArityMismatchError,
    ConfigError,
    KindMismatchError,
    MassOverflowError,
    UninterpretableOperationError,
)
from syntax import TERM_TYPES, VALUE_TYPES, Signature, pretty

logger = logging.getLogger(__name__)


class EffectKind(str, Enum):
    PARTIALITY = "partial"
    EXCEPTIONS = "exc"
    PARTIALITY_EXCEPTIONS = "partial-exc"
    FINITE_NONDET = "nondet"
    SUBDISTRIBUTION = "dist"
    GLOBAL_STATE = "state"
    OUTPUT = "output"
    PROB_EXCEPTIONS = "dist-exc"


@dataclass(frozen=True)
class MonadSpec:
    kind: EffectKind
    exceptions: Tuple[str, ...] = ("e",)
    states: Tuple[str, ...] = ("true", "false")
    alphabet: Tuple[str, ...] = ("a", "b")

    def __post_init__(self):
        object.__setattr__(self, "kind", EffectKind(self.kind))
        for label, names in (("exception", self.exceptions), ("state", self.states),
                             ("output symbol", self.alphabet)):
            if len(set(names)) != len(names):
                raise ConfigError(f"duplicate {label} names: {list(names)}")
            for name in names:
                if not re.match(r"^[A-Za-z0-9_]+$", name):
                    raise ConfigError(f"invalid {label} name '{name}'")
        if self.kind == EffectKind.GLOBAL_STATE and not self.states:
            raise ConfigError("global state needs at least one state")

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "exceptions": list(self.exceptions),
                "states": list(self.states), "alphabet": list(self.alphabet)}


# --- monadic values ---------------------------------------------------------------

@dataclass(frozen=True)
class Diverge:
    """The bottom element of a lifted set."""


BOTTOM = Diverge()


@dataclass(frozen=True)
class Just:
    value: Any


@dataclass(frozen=True)
class Raised:
    exception: str


@dataclass(frozen=True)
class Choices:
    items: FrozenSet[Any] = frozenset()


@dataclass(frozen=True)
class Distribution:
    """Finitely supported subdistribution with exact rational, strictly positive weights."""

    weights: FrozenSet[Tuple[Any, Fraction]] = frozenset()

    @classmethod
    def of(cls, mapping: Mapping[Any, Fraction]) -> "Distribution":
        clean = {k: Fraction(w) for k, w in mapping.items() if w != 0}
        if any(w < 0 for w in clean.values()):
            raise ConfigError("negative weight in distribution")
        total = sum(clean.values(), Fraction(0))
        if total > 1:
            raise MassOverflowError(total)
        return cls(frozenset(clean.items()))

    def as_dict(self) -> Dict[Any, Fraction]:
        cached = self.__dict__.get("_dict")
        if cached is None:
            cached = dict(self.weights)
            object.__setattr__(self, "_dict", cached)
        return cached

    def __getitem__(self, elem) -> Fraction:
        return self.as_dict().get(elem, Fraction(0))

    @property
    def support(self) -> FrozenSet[Any]:
        return frozenset(self.as_dict())

    @property
    def mass(self) -> Fraction:
        return sum(self.as_dict().values(), Fraction(0))

    def __getstate__(self):
        return {"weights": self.weights}


@dataclass(frozen=True)
class Stored:
    value: Any
    state: str


@dataclass(frozen=True)
class StateTable:
    """Total map from initial states to BOTTOM or a (value, final state) pair."""

    outcomes: Tuple[Tuple[str, Any], ...]

    def at(self, state: str):
        for s, outcome in self.outcomes:
            if s == state:
                return outcome
        raise KeyError(state)


@dataclass(frozen=True)
class Emitted:
    """Output produced so far, followed by BOTTOM or a returned value."""

    prefix: Tuple[str, ...] = ()
    tail: Any = BOTTOM


@dataclass(frozen=True)
class Observation:
    kind: str
    items: Tuple[Tuple[str, Any], ...] = field(default_factory=tuple)

    def as_dict(self) -> Dict[str, Any]:
        return {k: v for k, v in self.items}


# --- rendering ----------------------------------------------------------------

def render(elem: Any) -> Any:
    """JSON-friendly, deterministic rendering of carrier elements and monadic values."""
    if isinstance(elem, Fraction):
        return f"{elem.numerator}/{elem.denominator}"
    if isinstance(elem, VALUE_TYPES + TERM_TYPES):
        return pretty(elem)
    if isinstance(elem, Diverge):
        return "⊥"
    if isinstance(elem, Just):
        return {"just": render(elem.value)}
    if isinstance(elem, Raised):
        return {"raise": elem.exception}
    if isinstance(elem, Choices):
        return {"set": sorted((render(x) for x in elem.items), key=repr)}
    if isinstance(elem, Distribution):
        rows = [[render(k), render(w)] for k, w in elem.weights]
        return {"dist": sorted(rows, key=repr)}
    if isinstance(elem, StateTable):
        return {"table": {s: render(o) for s, o in elem.outcomes}}
    if isinstance(elem, Stored):
        return {"value": render(elem.value), "state": elem.state}
    if isinstance(elem, Emitted):
        return {"prefix": "".join(elem.prefix), "tail": render(elem.tail)}
    if isinstance(elem, Observation):
        return {"kind": elem.kind, **{k: render(v) for k, v in elem.items}}
    if isinstance(elem, (tuple, list)):
        return [render(x) for x in elem]
    if isinstance(elem, (set, frozenset)):
        return sorted((render(x) for x in elem), key=repr)
    if isinstance(elem, dict):
        return {str(k): render(v) for k, v in elem.items()}
    return elem


def _bias(name: str) -> Optional[Fraction]:
    if name == "or":
        return Fraction(1, 2)
    m = re.match(r"^or_(\d+)_(\d+)$", name)
    if m and int(m.group(2)) > 0 and int(m.group(1)) <= int(m.group(2)):
        return Fraction(int(m.group(1)), int(m.group(2)))
    return None


def _weight_grid(elements: Sequence[Any], grain: int) -> List[Distribution]:
    """All subdistributions over elements with weights in multiples of 1/grain."""
    out = []
    for counts in product(range(grain + 1), repeat=len(elements)):
        if sum(counts) <= grain:
            out.append(Distribution.of({e: Fraction(c, grain) for e, c in zip(elements, counts)}))
    return out


# --- monads -------------------------------------------------------------------

class Monad(ABC):
    """Kleisli triple on an omega-cppo with algebraic operations."""

    kind: EffectKind
    carrier: Tuple[type, ...] = ()

    def __init__(self, spec: MonadSpec):
        self.spec = spec

    def _check(self, *us) -> None:
        for u in us:
            if not isinstance(u, self.carrier):
                raise KindMismatchError(self.kind.value, type(u).__name__)

    @abstractmethod
    def unit(self, x):
        ...

    @abstractmethod
    def bind(self, u, f: Callable[[Any], Any]):
        ...

    @abstractmethod
    def bottom(self):
        ...

    @abstractmethod
    def leq(self, u, v) -> bool:
        ...

    @abstractmethod
    def observe(self, u) -> Observation:
        ...

    @abstractmethod
    def fmap(self, u, f: Callable[[Any], Any]):
        ...

    @abstractmethod
    def elements(self, u) -> FrozenSet[Any]:
        """Elements one layer below the monad: what the outermost relator lifts over."""

    @abstractmethod
    def sample_space(self, carrier: Sequence[Any], grain: int = 2) -> List[Any]:
        ...

    def values_of(self, u) -> FrozenSet[Any]:
        """Carrier values occurring in u."""
        found = set()
        for e in self.elements(u):
            if isinstance(e, (Just, Stored)):
                found.add(e.value)
            elif not isinstance(e, (Raised, Diverge)):
                found.add(e)
        return frozenset(found)

    def interprets(self, name: str) -> Optional[int]:
        return None

    def signature(self) -> Signature:
        return Signature()

    def interpret_op(self, name: str, args: Sequence[Any]):
        arity = self.interprets(name)
        if arity is None:
            raise UninterpretableOperationError(name, self.kind.value)
        if arity != len(args):
            raise ArityMismatchError(name, arity, len(args))
        return self._apply_op(name, list(args))

    def _apply_op(self, name: str, args: List[Any]):
        raise UninterpretableOperationError(name, self.kind.value)

    def check_signature(self, sig: Signature) -> None:
        for name, arity in sig.ops:
            expected = self.interprets(name)
            if expected is None:
                raise UninterpretableOperationError(name, self.kind.value)
            if expected != arity:
                raise ArityMismatchError(name, expected, arity)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.kind.value})"


class PartialityMonad(Monad):
    kind = EffectKind.PARTIALITY
    carrier = (Diverge, Just)

    def unit(self, x):
        return Just(x)

    def bind(self, u, f):
        return BOTTOM if isinstance(u, Diverge) else f(u.value)

    def bottom(self):
        return BOTTOM

    def leq(self, u, v):
        self._check(u, v)
        return isinstance(u, Diverge) or u == v

    def observe(self, u):
        return Observation(self.kind.value, (("converges", isinstance(u, Just)),))

    def fmap(self, u, f):
        return u if isinstance(u, Diverge) else Just(f(u.value))

    def elements(self, u):
        return frozenset() if isinstance(u, Diverge) else frozenset({u})

    def values_of(self, u):
        return frozenset() if isinstance(u, Diverge) else frozenset({u.value})

    def sample_space(self, carrier, grain=2):
        return [BOTTOM] + [Just(x) for x in carrier]


class NonStrictPartialityMonad(PartialityMonad):
    """Deliberately broken partiality: binding divergence runs the continuation on a default."""

    def __init__(self, spec: MonadSpec, default: Any = 0):
        super().__init__(spec)
        self.default = default

    def bind(self, u, f):
        return f(self.default) if isinstance(u, Diverge) else f(u.value)


class ExceptionMonad(Monad):
    """``(X + E)`` lifted with a bottom; strict in both bottom and raised exceptions."""

    carrier = (Diverge, Just, Raised)

    def __init__(self, spec: MonadSpec, kind: EffectKind = EffectKind.PARTIALITY_EXCEPTIONS):
        super().__init__(spec)
        self.kind = kind

    def unit(self, x):
        return Just(x)

    def bind(self, u, f):
        return f(u.value) if isinstance(u, Just) else u

    def bottom(self):
        return BOTTOM

    def leq(self, u, v):
        self._check(u, v)
        return isinstance(u, Diverge) or u == v

    def observe(self, u):
        if isinstance(u, Just):
            outcome = "converge"
        elif isinstance(u, Raised):
            outcome = f"raise:{u.exception}"
        else:
            outcome = "diverge"
        return Observation(self.kind.value, (("outcome", outcome),))

    def fmap(self, u, f):
        return Just(f(u.value)) if isinstance(u, Just) else u

    def elements(self, u):
        return frozenset() if isinstance(u, Diverge) else frozenset({u})

    def values_of(self, u):
        return frozenset({u.value}) if isinstance(u, Just) else frozenset()

    def interprets(self, name):
        if name.startswith("raise_") and name[len("raise_"):] in self.spec.exceptions:
            return 0
        return None

    def signature(self):
        return Signature.of({f"raise_{e}": 0 for e in self.spec.exceptions})

    def _apply_op(self, name, args):
        return Raised(name[len("raise_"):])

    def sample_space(self, carrier, grain=2):
        return [BOTTOM] + [Raised(e) for e in self.spec.exceptions] + [Just(x) for x in carrier]


class PowersetMonad(Monad):
    """Finite nondeterminism with may-convergence; the empty set is bottom."""

    kind = EffectKind.FINITE_NONDET
    carrier = (Choices,)

    def unit(self, x):
        return Choices(frozenset({x}))

    def bind(self, u, f):
        out = set()
        for x in u.items:
            out |= f(x).items
        return Choices(frozenset(out))

    def bottom(self):
        return Choices()

    def leq(self, u, v):
        self._check(u, v)
        return u.items <= v.items

    def observe(self, u):
        return Observation(self.kind.value, (("may_converge", bool(u.items)),))

    def fmap(self, u, f):
        return Choices(frozenset(f(x) for x in u.items))

    def elements(self, u):
        return u.items

    def values_of(self, u):
        return u.items

    def interprets(self, name):
        return 2 if name == "or" else None

    def signature(self):
        return Signature.of({"or": 2})

    def _apply_op(self, name, args):
        return Choices(args[0].items | args[1].items)

    def sample_space(self, carrier, grain=2):
        carrier = list(carrier)
        return [Choices(frozenset(c)) for r in range(len(carrier) + 1) for c in combinations(carrier, r)]


class SubdistributionMonad(Monad):
    """Finitely supported subdistributions; probabilistic choice is a convex combination."""

    kind = EffectKind.SUBDISTRIBUTION
    carrier = (Distribution,)

    def unit(self, x):
        return Distribution(frozenset({(x, Fraction(1))}))

    def bind(self, u, f):
        acc: Dict[Any, Fraction] = {}
        for x, w in u.weights:
            for y, w2 in f(x).weights:
                acc[y] = acc.get(y, Fraction(0)) + w * w2
        return Distribution.of(acc)

    def bottom(self):
        return Distribution()

    def leq(self, u, v):
        self._check(u, v)
        return all(w <= v[x] for x, w in u.weights)

    def observe(self, u):
        return Observation(self.kind.value, (("mass", u.mass),))

    def fmap(self, u, f):
        acc: Dict[Any, Fraction] = {}
        for x, w in u.weights:
            y = f(x)
            acc[y] = acc.get(y, Fraction(0)) + w
        return Distribution.of(acc)

    def elements(self, u):
        return u.support

    def values_of(self, u):
        return u.support

    def interprets(self, name):
        return 2 if _bias(name) is not None else None

    def signature(self):
        return Signature.of({"or": 2})

    def _apply_op(self, name, args):
        p = _bias(name)
        acc: Dict[Any, Fraction] = {}
        for weight, dist in ((p, args[0]), (1 - p, args[1])):
            for x, w in dist.weights:
                acc[x] = acc.get(x, Fraction(0)) + weight * w
        return Distribution.of(acc)

    def sample_space(self, carrier, grain=2):
        return _weight_grid(list(carrier), grain)


class ProbExceptionMonad(SubdistributionMonad):
    """Subdistributions over exception-or-value outcomes: the composite of the two monads."""

    kind = EffectKind.PROB_EXCEPTIONS

    def unit(self, x):
        return Distribution(frozenset({(Just(x), Fraction(1))}))

    def bind(self, u, f):
        acc: Dict[Any, Fraction] = {}
        for outcome, w in u.weights:
            inner = f(outcome.value) if isinstance(outcome, Just) else Distribution(frozenset({(outcome, Fraction(1))}))
            for y, w2 in inner.weights:
                acc[y] = acc.get(y, Fraction(0)) + w * w2
        return Distribution.of(acc)

    def observe(self, u):
        raised: Dict[str, Fraction] = {}
        converged = Fraction(0)
        for outcome, w in u.weights:
            if isinstance(outcome, Raised):
                raised[outcome.exception] = raised.get(outcome.exception, Fraction(0)) + w
            else:
                converged += w
        # mass counts returned values only; raised mass is reported per exception
        return Observation(self.kind.value, (("mass", converged), ("raised", tuple(sorted(raised.items())))))

    def fmap(self, u, f):
        return super().fmap(u, lambda o: Just(f(o.value)) if isinstance(o, Just) else o)

    def values_of(self, u):
        return frozenset(o.value for o in u.support if isinstance(o, Just))

    def interprets(self, name):
        if name.startswith("raise_") and name[len("raise_"):] in self.spec.exceptions:
            return 0
        return super().interprets(name)

    def signature(self):
        return Signature.of({"or": 2, **{f"raise_{e}": 0 for e in self.spec.exceptions}})

    def _apply_op(self, name, args):
        if name.startswith("raise_"):
            return Distribution(frozenset({(Raised(name[len("raise_"):]), Fraction(1))}))
        return super()._apply_op(name, args)

    def sample_space(self, carrier, grain=2):
        outcomes = [Raised(e) for e in self.spec.exceptions] + [Just(x) for x in carrier]
        return _weight_grid(outcomes, grain)


class GlobalStateMonad(Monad):
    """Partial state transformers ``S -> (X x S)_bottom`` over a finite state set."""

    kind = EffectKind.GLOBAL_STATE
    carrier = (StateTable,)

    @property
    def states(self) -> Tuple[str, ...]:
        return self.spec.states

    def _table(self, fn: Callable[[str], Any]) -> StateTable:
        return StateTable(tuple((s, fn(s)) for s in self.states))

    def unit(self, x):
        return self._table(lambda s: Stored(x, s))

    def bind(self, u, f):
        def run(s):
            outcome = u.at(s)
            if isinstance(outcome, Diverge):
                return BOTTOM
            return f(outcome.value).at(outcome.state)
        return self._table(run)

    def bottom(self):
        return self._table(lambda s: BOTTOM)

    def leq(self, u, v):
        self._check(u, v)
        return all(isinstance(o, Diverge) or o == v.at(s) for s, o in u.outcomes)

    def observe(self, u):
        return Observation(self.kind.value, tuple(
            (s, None if isinstance(o, Diverge) else o.state) for s, o in u.outcomes))

    def fmap(self, u, f):
        return StateTable(tuple((s, o if isinstance(o, Diverge) else Stored(f(o.value), o.state))
                                for s, o in u.outcomes))

    def elements(self, u):
        return frozenset(o for _, o in u.outcomes if not isinstance(o, Diverge))

    def interprets(self, name):
        if name == "read":
            return len(self.states)
        if name.startswith("write_") and name[len("write_"):] in self.states:
            return 1
        return None

    def signature(self):
        return Signature.of({"read": len(self.states), **{f"write_{s}": 1 for s in self.states}})

    def _apply_op(self, name, args):
        if name == "read":
            return self._table(lambda s: args[self.states.index(s)].at(s))
        target = name[len("write_"):]
        return self._table(lambda s: args[0].at(target))

    def sample_space(self, carrier, grain=2):
        options = [BOTTOM] + [Stored(x, s) for x in carrier for s in self.states]
        return [StateTable(tuple(zip(self.states, combo)))
                for combo in product(options, repeat=len(self.states))]


class OutputMonad(Monad):
    """Finite output prefixes followed by divergence or a value."""

    kind = EffectKind.OUTPUT
    carrier = (Emitted,)
    max_sample_prefix = 2

    def unit(self, x):
        return Emitted((), Just(x))

    def bind(self, u, f):
        if isinstance(u.tail, Diverge):
            return u
        rest = f(u.tail.value)
        return Emitted(u.prefix + rest.prefix, rest.tail)

    def bottom(self):
        return Emitted((), BOTTOM)

    def leq(self, u, v):
        self._check(u, v)
        if isinstance(u.tail, Diverge):
            return v.prefix[:len(u.prefix)] == u.prefix
        return u == v

    def observe(self, u):
        return Observation(self.kind.value, (("prefix", "".join(u.prefix)),
                                             ("converges", isinstance(u.tail, Just))))

    def fmap(self, u, f):
        return u if isinstance(u.tail, Diverge) else Emitted(u.prefix, Just(f(u.tail.value)))

    def elements(self, u):
        return frozenset() if isinstance(u.tail, Diverge) else frozenset({u.tail})

    def interprets(self, name):
        if name.startswith("print_") and name[len("print_"):] in self.spec.alphabet:
            return 1
        return None

    def signature(self):
        return Signature.of({f"print_{c}": 1 for c in self.spec.alphabet})

    def _apply_op(self, name, args):
        return Emitted((name[len("print_"):],) + args[0].prefix, args[0].tail)

    def sample_space(self, carrier, grain=2):
        prefixes = [()]
        for length in range(1, self.max_sample_prefix + 1):
            prefixes.extend(product(self.spec.alphabet, repeat=length))
        tails = [BOTTOM] + [Just(x) for x in carrier]
        return [Emitted(tuple(p), t) for p in prefixes for t in tails]


@lru_cache(maxsize=None)
def build_monad(spec: MonadSpec) -> Monad:
    kind = spec.kind
    if kind == EffectKind.PARTIALITY:
        return PartialityMonad(spec)
    if kind in (EffectKind.EXCEPTIONS, EffectKind.PARTIALITY_EXCEPTIONS):
        return ExceptionMonad(spec, kind)
    if kind == EffectKind.FINITE_NONDET:
        return PowersetMonad(spec)
    if kind == EffectKind.SUBDISTRIBUTION:
        return SubdistributionMonad(spec)
    if kind == EffectKind.PROB_EXCEPTIONS:
        return ProbExceptionMonad(spec)
    if kind == EffectKind.GLOBAL_STATE:
        return GlobalStateMonad(spec)
    if kind == EffectKind.OUTPUT:
        return OutputMonad(spec)
    raise ConfigError(f"unknown monad kind '{kind}'")


def monad_for(kind: str, **options) -> Monad:
    return build_monad(MonadSpec(EffectKind(kind), **options))
