"""
RELATORS - Relator Lab
Finite relations and their liftings along the effect monads.

A relator expression is a base lifting (``gdist``, ``dpow`` ...) or one of
``conv(E)``, ``and(E, F)``, ``comp(OUTER, INNER)``. ``lift_holds`` decides
``u Gamma(R) v`` for concrete monadic values; the probabilistic liftings are
decided by max-flow over exact rationals.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Any, Callable, Dict, FrozenSet, Iterable, Mapping, Tuple, Union

import networkx as nx
import pyparsing as pp
from cachetools import LRUCache
from networkx.algorithms.flow import edmonds_karp

from error_handler import (
    BudgetExceededError,
    CarrierEscapeError,
    ConfigError,
    IncompatibleLayersError,
    KindMismatchError,
)
from monads import (
    Choices,
    Distribution,
    Diverge,
    Emitted,
    EffectKind,
    Just,
    Raised,
    StateTable,
    Stored,
    render,
)

logger = logging.getLogger(__name__)

SUBSET_ORACLE_LIMIT = 14


# --- relations ------------------------------------------------------------------

@dataclass(frozen=True)
class Relation:
    """Finite relation between explicit carriers."""

    pairs: FrozenSet[Tuple[Any, Any]]
    left: FrozenSet[Any]
    right: FrozenSet[Any]

    @classmethod
    def of(cls, pairs: Iterable[Tuple[Any, Any]], left: Iterable[Any] = (), right: Iterable[Any] = ()) -> "Relation":
        pairs = frozenset(pairs)
        return cls(pairs, frozenset(left) | {a for a, _ in pairs}, frozenset(right) | {b for _, b in pairs})

    @classmethod
    def identity(cls, carrier: Iterable[Any]) -> "Relation":
        carrier = frozenset(carrier)
        return cls(frozenset((x, x) for x in carrier), carrier, carrier)

    @classmethod
    def full(cls, left: Iterable[Any], right: Iterable[Any]) -> "Relation":
        left, right = frozenset(left), frozenset(right)
        return cls(frozenset((a, b) for a in left for b in right), left, right)

    def holds(self, a, b) -> bool:
        return (a, b) in self.pairs

    def converse(self) -> "Relation":
        return Relation(frozenset((b, a) for a, b in self.pairs), self.right, self.left)

    def then(self, other: "Relation") -> "Relation":
        """Relational composition: first self, then other."""
        forward: Dict[Any, set] = {}
        for b, c in other.pairs:
            forward.setdefault(b, set()).add(c)
        pairs = {(a, c) for a, b in self.pairs for c in forward.get(b, ())}
        return Relation(frozenset(pairs), self.left, other.right)

    def intersect(self, other: "Relation") -> "Relation":
        return Relation(self.pairs & other.pairs, self.left & other.left, self.right & other.right)

    def image(self, subset: Iterable[Any]) -> FrozenSet[Any]:
        subset = set(subset)
        return frozenset(b for a, b in self.pairs if a in subset)

    def preimage(self, f: Callable, g: Callable, left: Iterable[Any], right: Iterable[Any]) -> "Relation":
        """``(f x g)^-1 R`` over the given carriers."""
        left, right = frozenset(left), frozenset(right)
        return Relation(frozenset((z, w) for z in left for w in right if (f(z), g(w)) in self.pairs), left, right)

    def issubset(self, other: "Relation") -> bool:
        return self.pairs <= other.pairs

    def __len__(self) -> int:
        return len(self.pairs)


# --- relator expressions ----------------------------------------------------------

@dataclass(frozen=True)
class Base:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Converse:
    inner: "RelatorSpec"

    def __str__(self):
        return f"conv({self.inner})"


@dataclass(frozen=True)
class Intersect:
    left: "RelatorSpec"
    right: "RelatorSpec"

    def __str__(self):
        return f"and({self.left},{self.right})"


@dataclass(frozen=True)
class Compose:
    outer: "RelatorSpec"
    inner: "RelatorSpec"

    def __str__(self):
        return f"comp({self.outer},{self.inner})"


RelatorSpec = Union[Base, Converse, Intersect, Compose]

_EXC_KINDS = frozenset({EffectKind.EXCEPTIONS, EffectKind.PARTIALITY_EXCEPTIONS})


def _ensure(ok: bool, relator: str, value) -> None:
    if not ok:
        raise KindMismatchError(relator, type(value).__name__)


def _in_carrier(elem, carrier, side: str) -> None:
    if elem not in carrier:
        raise CarrierEscapeError(str(render(elem)), side)


def flow_check(mu: Mapping[Any, Fraction], nu: Mapping[Any, Fraction], r: Relation) -> bool:
    """``mu(U) <= nu(R[U])`` for every U, via a max-flow of value ``mu(X)``."""
    total = sum(mu.values(), Fraction(0))
    if total == 0:
        return True
    if sum(nu.values(), Fraction(0)) < total:
        return False
    source, sink = ("source",), ("sink",)
    g = nx.DiGraph()
    g.add_node(source)
    g.add_node(sink)
    unbounded = total + 1
    for x, w in mu.items():
        g.add_edge(source, ("L", x), capacity=w)
    for y, w in nu.items():
        g.add_edge(("R", y), sink, capacity=w)
    for x in mu:
        for y in nu:
            if r.holds(x, y):
                g.add_edge(("L", x), ("R", y), capacity=unbounded)
    value = nx.maximum_flow_value(g, source, sink, flow_func=edmonds_karp)
    return value >= total


def subset_check(mu: Mapping[Any, Fraction], nu: Mapping[Any, Fraction], r: Relation) -> bool:
    """Exhaustive oracle for ``flow_check``."""
    support = list(mu)
    if len(support) > SUBSET_ORACLE_LIMIT:
        raise BudgetExceededError("subset oracle support", SUBSET_ORACLE_LIMIT)
    for size in range(1, len(support) + 1):
        for subset in combinations(support, size):
            lhs = sum((mu[x] for x in subset), Fraction(0))
            rhs = sum((nu[y] for y in r.image(subset) if y in nu), Fraction(0))
            if lhs > rhs:
                return False
    return True


# --- base liftings ------------------------------------------------------------

def _gbot(r, u, v):
    _ensure(isinstance(u, (Diverge, Just)), "gbot", u)
    _ensure(isinstance(v, (Diverge, Just)), "gbot", v)
    if isinstance(u, Diverge):
        return True
    _in_carrier(u.value, r.left, "left")
    if isinstance(v, Just):
        _in_carrier(v.value, r.right, "right")
        return r.holds(u.value, v.value)
    return False


def _dbot(r, u, v):
    if isinstance(u, Diverge) or isinstance(v, Diverge):
        _ensure(isinstance(u, (Diverge, Just)) and isinstance(v, (Diverge, Just)), "dbot", u)
        return isinstance(u, Diverge) and isinstance(v, Diverge)
    return _gbot(r, u, v)


def _exc_outcome(r, u, v):
    if isinstance(u, Raised):
        return v == u
    _in_carrier(u.value, r.left, "left")
    if isinstance(v, Just):
        _in_carrier(v.value, r.right, "right")
        return r.holds(u.value, v.value)
    return False


def _gexc(r, u, v):
    for w in (u, v):
        _ensure(isinstance(w, (Diverge, Raised, Just)), "gexc", w)
    if isinstance(u, Diverge):
        return True
    return _exc_outcome(r, u, v)


def _dexc(r, u, v):
    for w in (u, v):
        _ensure(isinstance(w, (Diverge, Raised, Just)), "dexc", w)
    if isinstance(u, Diverge) or isinstance(v, Diverge):
        return isinstance(u, Diverge) and isinstance(v, Diverge)
    return _exc_outcome(r, u, v)


def _pow_carriers(r, u, v, name):
    _ensure(isinstance(u, Choices), name, u)
    _ensure(isinstance(v, Choices), name, v)
    for x in u.items:
        _in_carrier(x, r.left, "left")
    for y in v.items:
        _in_carrier(y, r.right, "right")


def _gpow(r, u, v):
    _pow_carriers(r, u, v, "gpow")
    return all(any(r.holds(x, y) for y in v.items) for x in u.items)


def _dpow(r, u, v):
    _pow_carriers(r, u, v, "dpow")
    return (all(any(r.holds(x, y) for y in v.items) for x in u.items)
            and all(any(r.holds(x, y) for x in u.items) for y in v.items))


def _gpow_exists(r, u, v):
    """Broken powerset lifting: one related pair suffices."""
    _pow_carriers(r, u, v, "gpow-exists")
    return not u.items or any(r.holds(x, y) for x in u.items for y in v.items)


def _dist_carriers(r, u, v, name):
    _ensure(isinstance(u, Distribution), name, u)
    _ensure(isinstance(v, Distribution), name, v)
    for x in u.support:
        _in_carrier(x, r.left, "left")
    for y in v.support:
        _in_carrier(y, r.right, "right")


def _gdist(r, u, v):
    _dist_carriers(r, u, v, "gdist")
    return flow_check(u.as_dict(), v.as_dict(), r)


def _ddist(r, u, v):
    _dist_carriers(r, u, v, "ddist")
    return flow_check(u.as_dict(), v.as_dict(), r) and flow_check(v.as_dict(), u.as_dict(), r.converse())


def _state_outcomes(r, u, v, name):
    _ensure(isinstance(u, StateTable), name, u)
    _ensure(isinstance(v, StateTable), name, v)
    for s, left in u.outcomes:
        right = v.at(s)
        if isinstance(left, Stored):
            _in_carrier(left.value, r.left, "left")
        if isinstance(right, Stored):
            _in_carrier(right.value, r.right, "right")
        yield left, right


def _stored_match(r, left, right):
    return (isinstance(right, Stored) and left.state == right.state and r.holds(left.value, right.value))


def _gstate(r, u, v):
    return all(isinstance(left, Diverge) or _stored_match(r, left, right)
               for left, right in _state_outcomes(r, u, v, "gstate"))


def _dstate(r, u, v):
    for left, right in _state_outcomes(r, u, v, "dstate"):
        if isinstance(left, Diverge) or isinstance(right, Diverge):
            if not (isinstance(left, Diverge) and isinstance(right, Diverge)):
                return False
        elif not _stored_match(r, left, right):
            return False
    return True


def _gout(r, u, v):
    _ensure(isinstance(u, Emitted), "gout", u)
    _ensure(isinstance(v, Emitted), "gout", v)
    if isinstance(u.tail, Diverge):
        return v.prefix[:len(u.prefix)] == u.prefix
    _in_carrier(u.tail.value, r.left, "left")
    if isinstance(v.tail, Just):
        _in_carrier(v.tail.value, r.right, "right")
        return u.prefix == v.prefix and r.holds(u.tail.value, v.tail.value)
    return False


def _dout(r, u, v):
    return _gout(r, u, v) and _gout(r.converse(), v, u)


BASE_RELATORS: Dict[str, Tuple[FrozenSet[EffectKind], Callable]] = {
    "gbot": (frozenset({EffectKind.PARTIALITY}), _gbot),
    "dbot": (frozenset({EffectKind.PARTIALITY}), _dbot),
    "gexc": (_EXC_KINDS, _gexc),
    "dexc": (_EXC_KINDS, _dexc),
    "gpow": (frozenset({EffectKind.FINITE_NONDET}), _gpow),
    "dpow": (frozenset({EffectKind.FINITE_NONDET}), _dpow),
    "gpow-exists": (frozenset({EffectKind.FINITE_NONDET}), _gpow_exists),
    "gdist": (frozenset({EffectKind.SUBDISTRIBUTION}), _gdist),
    "ddist": (frozenset({EffectKind.SUBDISTRIBUTION}), _ddist),
    "gstate": (frozenset({EffectKind.GLOBAL_STATE}), _gstate),
    "dstate": (frozenset({EffectKind.GLOBAL_STATE}), _dstate),
    "gout": (frozenset({EffectKind.OUTPUT}), _gout),
    "dout": (frozenset({EffectKind.OUTPUT}), _dout),
}

# relators whose monad is a container of the inner layer's values
_CONTAINERS = {EffectKind.SUBDISTRIBUTION: EffectKind.PROB_EXCEPTIONS}


def kinds(spec: RelatorSpec) -> FrozenSet[EffectKind]:
    """Monad kinds a relator expression applies to."""
    if isinstance(spec, Base):
        if spec.name not in BASE_RELATORS:
            raise ConfigError(f"unknown relator '{spec.name}'")
        return BASE_RELATORS[spec.name][0]
    if isinstance(spec, Converse):
        return kinds(spec.inner)
    if isinstance(spec, Intersect):
        return kinds(spec.left) & kinds(spec.right)
    if isinstance(spec, Compose):
        outer, inner = kinds(spec.outer), kinds(spec.inner)
        found = {_CONTAINERS[k] for k in outer if k in _CONTAINERS and inner & _EXC_KINDS}
        if not found:
            raise IncompatibleLayersError(str(spec.outer), str(spec.inner))
        return frozenset(found)
    raise TypeError(f"not a relator expression: {spec!r}")


def fits(spec: RelatorSpec, kind: EffectKind) -> bool:
    return EffectKind(kind) in kinds(spec)


def compose(outer: RelatorSpec, inner: RelatorSpec) -> Compose:
    spec = Compose(outer, inner)
    kinds(spec)
    return spec


def converse(spec: RelatorSpec) -> RelatorSpec:
    return spec.inner if isinstance(spec, Converse) else Converse(spec)


def intersect(left: RelatorSpec, right: RelatorSpec) -> Intersect:
    return Intersect(left, right)


def symmetrize(spec: RelatorSpec) -> Intersect:
    """``Gamma /\\ Gamma^c``: the bisimulation relator of a simulation relator."""
    return Intersect(spec, Converse(spec))


# --- deciding liftings ---------------------------------------------------------

_LIFT_CACHE: LRUCache = LRUCache(maxsize=1 << 18)
_LIFT_LOCK = threading.Lock()


def _layer(u) -> FrozenSet[Any]:
    if isinstance(u, Distribution):
        return u.support
    if isinstance(u, Choices):
        return u.items
    raise KindMismatchError("comp", type(u).__name__)


def _lift(spec: RelatorSpec, r: Relation, u, v) -> bool:
    if isinstance(spec, Base):
        if spec.name not in BASE_RELATORS:
            raise ConfigError(f"unknown relator '{spec.name}'")
        return BASE_RELATORS[spec.name][1](r, u, v)
    if isinstance(spec, Converse):
        return lift_holds(spec.inner, r.converse(), v, u)
    if isinstance(spec, Intersect):
        return lift_holds(spec.left, r, u, v) and lift_holds(spec.right, r, u, v)
    if isinstance(spec, Compose):
        left, right = _layer(u), _layer(v)
        inner = Relation(frozenset((a, b) for a in left for b in right if lift_holds(spec.inner, r, a, b)),
                         left, right)
        return lift_holds(spec.outer, inner, u, v)
    raise TypeError(f"not a relator expression: {spec!r}")


def lift_holds(spec: RelatorSpec, r: Relation, u, v) -> bool:
    """Decides ``u Gamma(r) v``."""
    key = (spec, r, u, v)
    with _LIFT_LOCK:
        hit = _LIFT_CACHE.get(key)
    if hit is not None:
        return hit
    result = _lift(spec, r, u, v)
    with _LIFT_LOCK:
        _LIFT_CACHE[key] = result
    return result


# --- expression parser ------------------------------------------------------------

@lru_cache(maxsize=None)
def _relator_grammar() -> pp.ParserElement:
    lpar, rpar, comma = map(pp.Suppress, "(),")
    expr = pp.Forward()
    base = pp.Regex(r"[a-z][a-z-]*").set_parse_action(lambda t: Base(t[0]))
    conv = (pp.Suppress(pp.Keyword("conv")) + lpar + expr + rpar).set_parse_action(lambda t: Converse(t[0]))
    both = (pp.Suppress(pp.Keyword("and")) + lpar + expr + comma + expr + rpar).set_parse_action(
        lambda t: Intersect(t[0], t[1]))
    comp = (pp.Suppress(pp.Keyword("comp")) + lpar + expr + comma + expr + rpar).set_parse_action(
        lambda t: Compose(t[0], t[1]))
    expr <<= conv | both | comp | base
    return expr + pp.StringEnd()


def parse_relator(text: str) -> RelatorSpec:
    try:
        spec = _relator_grammar().parse_string(text.strip(), parse_all=True)[0]
    except pp.ParseException as e:
        raise ConfigError(f"cannot parse relator expression '{text}': {e.msg}") from None
    kinds(spec)
    return spec
