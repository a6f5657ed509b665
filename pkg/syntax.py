"""
SYNTAX - Relator Lab
Fine-grain call-by-value terms over an operation signature.

Terms use a locally nameless representation: variables bound by a lambda or a
sequencing binder are de Bruijn indices (``Bound``), free variables are names
(``Var``). Binder names survive only as display hints, so structural equality is
alpha-equivalence and substitution never captures.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, fields
from functools import lru_cache
from itertools import product
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import pyparsing as pp

from error_handler import (
    ArityMismatchError,
    BudgetExceededError,
    ConfigError,
    TermSyntaxError,
    UnknownMacroError,
    UnknownOperationError,
)

logger = logging.getLogger(__name__)

pp.ParserElement.enable_packrat()

KEYWORDS = frozenset({"return", "to"})
IDENT_RE = re.compile(r"^[a-z][A-Za-z0-9_]*$")
DEFAULT_TERM_CAP = 50_000
_HINTS = "xyzuvwpqrst"


# --- AST ----------------------------------------------------------------------

def _cached_hash(self) -> int:
    h = self.__dict__.get("_hash")
    if h is None:
        h = hash((type(self).__name__,) + tuple(getattr(self, name) for name in self._key))
        object.__setattr__(self, "_hash", h)
    return h


def _getstate(self) -> dict:
    # hashes of str are salted per process, never persist them
    return {k: v for k, v in self.__dict__.items() if k != "_hash"}


@dataclass(frozen=True)
class Var:
    """Free variable."""
    name: str


@dataclass(frozen=True)
class Bound:
    """Bound variable as a de Bruijn index (0 = nearest binder)."""
    index: int


@dataclass(frozen=True)
class Lam:
    body: "Term"
    hint: str = field(default="x", compare=False)


@dataclass(frozen=True)
class Return:
    value: "Value"


@dataclass(frozen=True)
class App:
    fun: "Value"
    arg: "Value"


@dataclass(frozen=True)
class Seq:
    """``first to x. then``; ``then`` has one extra bound variable."""
    first: "Term"
    then: "Term"
    hint: str = field(default="x", compare=False)


@dataclass(frozen=True)
class Op:
    name: str
    args: Tuple["Term", ...] = ()


Value = Union[Var, Bound, Lam]
Term = Union[Return, App, Seq, Op]
Node = Union[Value, Term]

for _cls in (Var, Bound, Lam, Return, App, Seq, Op):
    _cls._key = tuple(f.name for f in fields(_cls) if f.compare)
    _cls.__hash__ = _cached_hash
    _cls.__getstate__ = _getstate

VALUE_TYPES = (Var, Bound, Lam)
TERM_TYPES = (Return, App, Seq, Op)


def is_value(node: Node) -> bool:
    return isinstance(node, VALUE_TYPES)


# --- signature ----------------------------------------------------------------

@dataclass(frozen=True)
class Signature:
    """Finite set of operation symbols with arities."""

    ops: Tuple[Tuple[str, int], ...] = ()

    def __post_init__(self):
        seen = set()
        for name, arity in self.ops:
            if not IDENT_RE.match(name) or name in KEYWORDS:
                raise ConfigError(f"invalid operation symbol '{name}'")
            if arity < 0:
                raise ConfigError(f"negative arity for '{name}'")
            if name in seen:
                raise ConfigError(f"operation '{name}' declared twice")
            seen.add(name)

    @classmethod
    def of(cls, mapping: Mapping[str, int]) -> "Signature":
        return cls(tuple(sorted(mapping.items())))

    @classmethod
    def parse(cls, text: str) -> "Signature":
        """Reads ``name/arity`` entries separated by commas, spaces or newlines."""
        entries: Dict[str, int] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0]
            for chunk in re.split(r"[,\s]+", line.strip()):
                if not chunk:
                    continue
                name, sep, arity = chunk.partition("/")
                if not sep or not arity.isdigit():
                    raise ConfigError(f"expected name/arity, got '{chunk}'", "<signature>", lineno)
                if name in entries:
                    raise ConfigError(f"operation '{name}' declared twice", "<signature>", lineno)
                entries[name] = int(arity)
        return cls.of(entries)

    @property
    def names(self) -> FrozenSet[str]:
        return frozenset(name for name, _ in self.ops)

    def arity(self, name: str) -> Optional[int]:
        for op_name, arity in self.ops:
            if op_name == name:
                return arity
        return None

    def __contains__(self, name: str) -> bool:
        return self.arity(name) is not None

    def union(self, other: "Signature") -> "Signature":
        merged = dict(self.ops)
        for name, arity in other.ops:
            if merged.get(name, arity) != arity:
                raise ConfigError(f"operation '{name}' declared with two arities")
            merged[name] = arity
        return Signature.of(merged)

    def __str__(self) -> str:
        return ", ".join(f"{name}/{arity}" for name, arity in self.ops)


PURE = Signature()


# --- binding operations ----------------------------------------------------------

def _rewrite(node: Node, level: int, on_var, on_bound) -> Node:
    if isinstance(node, Var):
        return on_var(node, level)
    if isinstance(node, Bound):
        return on_bound(node, level)
    if isinstance(node, Lam):
        return Lam(_rewrite(node.body, level + 1, on_var, on_bound), node.hint)
    if isinstance(node, Return):
        return Return(_rewrite(node.value, level, on_var, on_bound))
    if isinstance(node, App):
        return App(_rewrite(node.fun, level, on_var, on_bound), _rewrite(node.arg, level, on_var, on_bound))
    if isinstance(node, Seq):
        return Seq(_rewrite(node.first, level, on_var, on_bound),
                   _rewrite(node.then, level + 1, on_var, on_bound), node.hint)
    if isinstance(node, Op):
        return Op(node.name, tuple(_rewrite(a, level, on_var, on_bound) for a in node.args))
    raise TypeError(f"not a term or value: {node!r}")


def _keep(node, level):
    return node


def close(node: Node, name: str) -> Node:
    """Turns free occurrences of ``name`` into the index of a new outermost binder."""
    return _rewrite(node, 0, lambda v, lvl: Bound(lvl) if v.name == name else v, _keep)


def instantiate(body: Node, value: Value) -> Node:
    """Replaces the dangling index 0 of a binder body by ``value``."""
    return _rewrite(body, 0, _keep, lambda b, lvl: value if b.index == lvl else b)


def open_binder(body: Node, name: str) -> Node:
    return instantiate(body, Var(name))


def lam(name: str, body: Term) -> Lam:
    return Lam(close(body, name), name)


def seq(first: Term, name: str, then: Term) -> Seq:
    return Seq(first, close(then, name), name)


def substitute(node: Node, name: str, value: Value) -> Node:
    """``node[value/name]`` for a free variable ``name``."""
    return _rewrite(node, 0, lambda v, lvl: value if v.name == name else v, _keep)


def close_with(node: Node, mapping: Mapping[str, Value]) -> Node:
    """Simultaneous substitution of closed values for free variables."""
    if not mapping:
        return node
    return _rewrite(node, 0, lambda v, lvl: mapping.get(v.name, v), _keep)


def free_vars(node: Node) -> FrozenSet[str]:
    found = set()

    def walk(n):
        if isinstance(n, Var):
            found.add(n.name)
        elif isinstance(n, Lam):
            walk(n.body)
        elif isinstance(n, Return):
            walk(n.value)
        elif isinstance(n, App):
            walk(n.fun)
            walk(n.arg)
        elif isinstance(n, Seq):
            walk(n.first)
            walk(n.then)
        elif isinstance(n, Op):
            for a in n.args:
                walk(a)

    walk(node)
    return frozenset(found)


def is_closed(node: Node) -> bool:
    return not free_vars(node)


def alpha_eq(a: Node, b: Node) -> bool:
    return a == b


def depth(node: Node) -> int:
    """Leaves (variables, nullary operations) have depth 0."""
    if isinstance(node, (Var, Bound)):
        return 0
    if isinstance(node, Lam):
        return 1 + depth(node.body)
    if isinstance(node, Return):
        return 1 + depth(node.value)
    if isinstance(node, App):
        return 1 + max(depth(node.fun), depth(node.arg))
    if isinstance(node, Seq):
        return 1 + max(depth(node.first), depth(node.then))
    if isinstance(node, Op):
        return 1 + max(depth(a) for a in node.args) if node.args else 0
    raise TypeError(f"not a term or value: {node!r}")


def operations(node: Node) -> Iterator[Tuple[str, int]]:
    if isinstance(node, Lam):
        yield from operations(node.body)
    elif isinstance(node, Return):
        yield from operations(node.value)
    elif isinstance(node, App):
        yield from operations(node.fun)
        yield from operations(node.arg)
    elif isinstance(node, Seq):
        yield from operations(node.first)
        yield from operations(node.then)
    elif isinstance(node, Op):
        yield node.name, len(node.args)
        for a in node.args:
            yield from operations(a)


def subterms(node: Node) -> Iterator[Node]:
    """Pre-order walk; binder bodies are yielded as they are, with dangling indices."""
    yield node
    if isinstance(node, Lam):
        yield from subterms(node.body)
    elif isinstance(node, Return):
        yield from subterms(node.value)
    elif isinstance(node, App):
        yield from subterms(node.fun)
        yield from subterms(node.arg)
    elif isinstance(node, Seq):
        yield from subterms(node.first)
        yield from subterms(node.then)
    elif isinstance(node, Op):
        for a in node.args:
            yield from subterms(a)


def check_signature(node: Node, sig: Signature) -> Node:
    for name, got in operations(node):
        expected = sig.arity(name)
        if expected is None:
            raise UnknownOperationError(name)
        if expected != got:
            raise ArityMismatchError(name, expected, got)
    return node


# --- macros -------------------------------------------------------------------

IDENTITY = lam("x", Return(Var("x")))
DELTA = lam("x", App(Var("x"), Var("x")))


def comp(outer: Value, inner: Value) -> Lam:
    """``COMP(V, W)`` = ``\\y. (W y) to z. V z``: first ``inner``, then ``outer``."""
    return Lam(Seq(App(inner, Bound(0)), App(outer, Bound(0)), "z"), "y")


def fix_value() -> Lam:
    """Call-by-value fixed-point combinator: ``\\f. D D``, ``D = \\x. f (\\v. (x x) to g. g v)``."""
    delayed = lam("v", seq(App(Var("x"), Var("x")), "g", App(Var("g"), Var("v"))))
    d = lam("x", App(Var("f"), delayed))
    return lam("f", App(d, d))


def numeral(k: int) -> Lam:
    """Scott numeral: zero = ``\\z. return (\\s. z I)``, succ n = ``\\z. return (\\s. s n)``."""
    if k < 0:
        raise ConfigError(f"numerals are non-negative, got {k}")
    n: Lam = lam("z", Return(lam("s", App(Var("z"), IDENTITY))))
    for _ in range(k):
        n = lam("z", Return(lam("s", App(Var("s"), n))))
    return n


def successor(n: Value) -> Lam:
    return lam("z", Return(lam("s", App(Var("s"), n))))


def _expand_macro(name: str, args: Sequence) -> Value:
    if name == "FIX" and not args:
        return fix_value()
    if name == "COMP" and len(args) == 2 and all(is_value(a) for a in args):
        return comp(args[0], args[1])
    if name == "NUM" and len(args) == 1 and isinstance(args[0], int):
        return numeral(args[0])
    if name in ("FIX", "COMP", "NUM"):
        raise ArityMismatchError(name, {"FIX": 0, "COMP": 2, "NUM": 1}[name], len(args))
    raise UnknownMacroError(name)


# --- parser -------------------------------------------------------------------

@lru_cache(maxsize=None)
def _grammar() -> Tuple[pp.ParserElement, pp.ParserElement]:
    lpar, rpar, dot = map(pp.Suppress, "().")
    binder = pp.Suppress(pp.Literal("\\") | pp.Literal("λ"))
    kw_return = pp.Suppress(pp.Keyword("return"))
    kw_to = pp.Suppress(pp.Keyword("to"))
    ident = pp.Regex(r"(?!(?:return|to)(?![A-Za-z0-9_]))[a-z][A-Za-z0-9_]*")
    macro_name = pp.Regex(r"[A-Z][A-Z0-9_]*")
    integer = pp.Regex(r"\d+").set_parse_action(lambda t: int(t[0]))

    term = pp.Forward()
    value = pp.Forward()

    lam_v = (binder + ident + dot + term).set_parse_action(lambda t: lam(t[0], t[1]))
    var_v = ident.copy().set_parse_action(lambda t: Var(t[0]))
    macro_args = pp.Group(pp.Optional(pp.DelimitedList(integer | value)))
    macro_v = (macro_name + pp.Optional(lpar + macro_args + rpar)).set_parse_action(
        lambda t: _expand_macro(t[0], list(t[1]) if len(t) > 1 else []))
    value <<= lam_v | macro_v | var_v | (lpar + value + rpar)

    ret_t = (kw_return + value).set_parse_action(lambda t: Return(t[0]))
    op_t = (ident + lpar + pp.Group(pp.Optional(pp.DelimitedList(term))) + rpar).set_parse_action(
        lambda t: Op(t[0], tuple(t[1])))
    app_t = (value + value).set_parse_action(lambda t: App(t[0], t[1]))
    paren_t = lpar + term + rpar
    atom = ret_t | op_t | app_t | paren_t
    term <<= (atom + pp.Optional(kw_to + ident + dot + term)).set_parse_action(
        lambda t: t[0] if len(t) == 1 else seq(t[0], t[1], t[2]))

    return term + pp.StringEnd(), value + pp.StringEnd()


def _run(parser: pp.ParserElement, text: str):
    try:
        return parser.parse_string(text, parse_all=True)[0]
    except pp.ParseException as e:
        raise TermSyntaxError(f"cannot parse: {e.msg}", e.lineno, e.col, text) from None


def parse_term(text: str, sig: Signature = PURE) -> Term:
    term = _run(_grammar()[0], text)
    return check_signature(term, sig)


def parse_value(text: str, sig: Signature = PURE) -> Value:
    value = _run(_grammar()[1], text)
    return check_signature(value, sig)


# --- printer ------------------------------------------------------------------

def _fresh(hint: str, avoid: Iterable[str]) -> str:
    base = hint if hint and IDENT_RE.match(hint) and hint not in KEYWORDS else "x"
    avoid = set(avoid)
    if base not in avoid:
        return base
    i = 1
    while f"{base}{i}" in avoid:
        i += 1
    return f"{base}{i}"


def pretty(node: Node) -> str:
    """Surface syntax that parses back to an alpha-equivalent node."""
    taken = set(free_vars(node)) | {name for name, _ in operations(node)} | KEYWORDS

    def val(v, scope):
        if isinstance(v, Var):
            return v.name
        if isinstance(v, Bound):
            return scope[-1 - v.index]
        name = _fresh(v.hint, taken | set(scope))
        return f"(\\{name}. {trm(v.body, scope + (name,))})"

    def trm(t, scope):
        if isinstance(t, Return):
            return f"return {val(t.value, scope)}"
        if isinstance(t, App):
            return f"{val(t.fun, scope)} {val(t.arg, scope)}"
        if isinstance(t, Seq):
            first = trm(t.first, scope)
            if isinstance(t.first, Seq):
                first = f"({first})"
            name = _fresh(t.hint, taken | set(scope))
            return f"{first} to {name}. {trm(t.then, scope + (name,))}"
        if isinstance(t, Op):
            return f"{t.name}({', '.join(trm(a, scope) for a in t.args)})"
        if is_value(t):
            return val(t, scope)
        raise TypeError(f"not a term or value: {t!r}")

    return trm(node, ())


# --- enumeration ----------------------------------------------------------------

class _Enumerator:
    """Memoised generation of nodes of depth <= d under b enclosing binders."""

    def __init__(self, sig: Signature, ctx: Iterable[str], cap: int):
        self.sig = sig
        self.ctx = tuple(sorted(ctx))
        self.cap = cap
        self.produced = 0
        self._values: Dict[Tuple[int, int], List[Value]] = {}
        self._terms: Dict[Tuple[int, int], List[Term]] = {}

    def _charge(self, n: int):
        self.produced += n
        if self.produced > self.cap:
            raise BudgetExceededError("term enumeration", self.cap)

    def values(self, d: int, b: int) -> List[Value]:
        if d < 0:
            return []
        key = (d, b)
        if key not in self._values:
            out: List[Value] = [Var(x) for x in self.ctx] + [Bound(i) for i in range(b)]
            if d >= 1:
                bodies = self.terms(d - 1, b + 1)
                self._charge(len(bodies))
                hint = _HINTS[b % len(_HINTS)]
                out.extend(Lam(t, hint) for t in bodies)
            self._values[key] = out
        return self._values[key]

    def terms(self, d: int, b: int) -> List[Term]:
        if d < 0:
            return []
        key = (d, b)
        if key not in self._terms:
            out: List[Term] = [Op(name, ()) for name, arity in self.sig.ops if arity == 0]
            if d >= 1:
                vs = self.values(d - 1, b)
                ts = self.terms(d - 1, b)
                bodies = self.terms(d - 1, b + 1)
                self._charge(len(vs) + len(vs) ** 2 + len(ts) * len(bodies))
                out.extend(Return(v) for v in vs)
                out.extend(App(v, w) for v in vs for w in vs)
                hint = _HINTS[b % len(_HINTS)]
                out.extend(Seq(m, n, hint) for m in ts for n in bodies)
                for name, arity in self.sig.ops:
                    if arity == 0:
                        continue
                    self._charge(len(ts) ** arity)
                    out.extend(Op(name, args) for args in product(ts, repeat=arity))
            self._terms[key] = out
        return self._terms[key]


def enumerate_values(sig: Signature, ctx: Iterable[str], max_depth: int,
                     cap: int = DEFAULT_TERM_CAP) -> List[Value]:
    """All values of depth <= max_depth with free variables in ctx, one per alpha-class."""
    found = _Enumerator(sig, ctx, cap).values(max_depth, 0)
    logger.debug("enumerated %d values (depth %d, ctx %s)", len(found), max_depth, sorted(ctx))
    return list(found)


def enumerate_terms(sig: Signature, ctx: Iterable[str], max_depth: int,
                    cap: int = DEFAULT_TERM_CAP) -> List[Term]:
    """All terms of depth <= max_depth with free variables in ctx, one per alpha-class."""
    found = _Enumerator(sig, ctx, cap).terms(max_depth, 0)
    logger.debug("enumerated %d terms (depth %d, ctx %s)", len(found), max_depth, sorted(ctx))
    return list(found)
