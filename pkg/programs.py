"""
PROGRAMS - Relator Lab
The example programs: divergence, identity, self-application, and the two
recursive probabilistic programs W and Z together with their raising variants.

    W       -> V or COMP(V, W)
    Z       -> T 1,   T n -> (R n) or T (n+1),   R 0 -> I,   R (n+1) -> COMP(R n, V)

Recursion is encoded by direct self-application (a function receiving itself as
its first argument), so one unfolding of W costs three approximation indices.
"""

from __future__ import annotations

from typing import Callable, Dict, Iterable, List, Tuple

from error_handler import ConfigError
from similarity import ClosedRelationPair
from syntax import (
    DELTA,
    IDENTITY,
    App,
    Op,
    Return,
    Term,
    Value,
    Var,
    comp,
    lam,
    numeral,
    seq,
    successor,
)

OMEGA: Term = App(DELTA, DELTA)
RAISE_E: Term = Op("raise_e", ())


def _choice(first: Term, second: Term) -> Term:
    return Op("or", (first, second))


def _maybe_raise(branch: Term, raising: bool) -> Term:
    return _choice(branch, RAISE_E) if raising else branch


def _w_self(v: Value, raising: bool) -> Value:
    # \w. [raise?] (return V) or ((w w) to f. return COMP(V, f))
    again = seq(App(Var("w"), Var("w")), "f", Return(comp(v, Var("f"))))
    return lam("w", _choice(_maybe_raise(Return(v), raising), again))


def _r_self(v: Value) -> Value:
    # \r. return (\n. case n of 0 -> return I | m+1 -> (R m) to g. return COMP(g, V))
    recurse = seq(seq(App(Var("r"), Var("r")), "q", App(Var("q"), Var("m"))), "g", Return(comp(Var("g"), v)))
    case = seq(App(Var("n"), lam("d", Return(IDENTITY))), "h", App(Var("h"), lam("m", recurse)))
    return lam("r", Return(lam("n", case)))


def _t_self(v: Value, raising: bool) -> Value:
    # \t. return (\n. [raise?] (R n) or ((t t) to u. u (n+1)))
    r_self = _r_self(v)
    here = seq(App(r_self, r_self), "q", App(Var("q"), Var("n")))
    later = seq(App(Var("t"), Var("t")), "u", App(Var("u"), successor(Var("n"))))
    return lam("t", Return(lam("n", _choice(_maybe_raise(here, raising), later))))


def w_program(v: Value = IDENTITY) -> Term:
    w_self = _w_self(v, raising=False)
    return App(w_self, w_self)


def w_raise_program(v: Value = IDENTITY) -> Term:
    w_self = _w_self(v, raising=True)
    return App(w_self, w_self)


def z_program(v: Value = IDENTITY) -> Term:
    t_self = _t_self(v, raising=False)
    return seq(App(t_self, t_self), "tf", App(Var("tf"), numeral(1)))


def z_raise_program(v: Value = IDENTITY) -> Term:
    t_self = _t_self(v, raising=True)
    return seq(App(t_self, t_self), "tf", App(Var("tf"), numeral(1)))


def w_unfolding(k: int, v: Value = IDENTITY) -> Value:
    """Value W returns after k unfoldings: w_1 = V, w_(k+1) = COMP(V, w_k)."""
    if k < 1:
        raise ConfigError(f"W unfoldings start at 1, got {k}")
    w = v
    for _ in range(k - 1):
        w = comp(v, w)
    return w


def z_unfolding(k: int, v: Value = IDENTITY) -> Value:
    """Value R k: z_0 = I, z_(k+1) = COMP(z_k, V)."""
    if k < 0:
        raise ConfigError(f"Z unfoldings start at 0, got {k}")
    z: Value = IDENTITY
    for _ in range(k):
        z = comp(z, v)
    return z


def unfolding_pairs(depth: int, v: Value = IDENTITY) -> List[Tuple[Value, Value]]:
    return [(w_unfolding(k, v), z_unfolding(k, v)) for k in range(1, depth + 1)]


def raise_candidate_relation(test_args: Iterable[Value], depth: int = 4,
                             v: Value = IDENTITY) -> ClosedRelationPair:
    """(W^raise, Z^raise), the matching unfoldings, and their applications to the test arguments.

    The pair is reflexive so results shared by both sides are related without listing them.
    """
    args = list(test_args)
    values = unfolding_pairs(depth, v)
    terms = [(w_raise_program(v), z_raise_program(v))]
    terms += [(App(w, a), App(z, a)) for w, z in values for a in args]
    carrier_terms = [t for pair in terms for t in pair]
    carrier_values = [x for pair in values for x in pair]
    return ClosedRelationPair.of(terms, values, carrier_terms, carrier_values, reflexive=True)


PROGRAMS: Dict[str, Callable[[], Term]] = {
    "omega": lambda: OMEGA,
    "identity": lambda: Return(IDENTITY),
    "delta": lambda: Return(DELTA),
    "w": w_program,
    "z": z_program,
    "w-raise": w_raise_program,
    "z-raise": z_raise_program,
}


def program(name: str) -> Term:
    try:
        return PROGRAMS[name]()
    except KeyError:
        raise ConfigError(f"unknown program '{name}', known: {', '.join(sorted(PROGRAMS))}") from None
