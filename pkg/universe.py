"""
UNIVERSE - Relator Lab
Finite term/value universes indexed by variable contexts.

Contexts form the chain (), (x,), (x, y), ... over a variable pool. Opening a
binder in context c always uses the next pool variable, so every binder body
of a universe member lives in the next context of the chain.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from error_handler import ConfigError
from lab_config import MAX_CONTEXT_VARS, TERM_CAP, VARIABLE_POOL
from syntax import (
    App,
    Lam,
    Node,
    Op,
    Return,
    Seq,
    Signature,
    Term,
    Value,
    enumerate_terms,
    enumerate_values,
    free_vars,
    is_value,
    open_binder,
    pretty,
)

logger = logging.getLogger(__name__)

Context = Tuple[str, ...]


def sort_nodes(nodes: Iterable[Node]) -> List[Node]:
    """Deterministic order: by size of rendering, then text."""
    return sorted(nodes, key=lambda n: (len(pretty(n)), pretty(n)))


def binder_depth(node: Node) -> int:
    """Deepest nesting of binders (lambdas and sequencing bodies)."""
    if isinstance(node, Lam):
        return 1 + binder_depth(node.body)
    if isinstance(node, Return):
        return binder_depth(node.value)
    if isinstance(node, App):
        return max(binder_depth(node.fun), binder_depth(node.arg))
    if isinstance(node, Seq):
        return max(binder_depth(node.first), 1 + binder_depth(node.then))
    if isinstance(node, Op):
        return max((binder_depth(a) for a in node.args), default=0)
    return 0


@dataclass
class Universe:
    pool: Tuple[str, ...] = VARIABLE_POOL
    max_vars: int = MAX_CONTEXT_VARS
    terms: Dict[Context, FrozenSet[Term]] = field(default_factory=dict)
    values: Dict[Context, FrozenSet[Value]] = field(default_factory=dict)

    def __post_init__(self):
        if self.max_vars > len(self.pool):
            raise ConfigError(f"context limit {self.max_vars} exceeds the variable pool {list(self.pool)}")
        for k in range(self.max_vars + 1):
            ctx = self.pool[:k]
            self.terms.setdefault(ctx, frozenset())
            self.values.setdefault(ctx, frozenset())

    @property
    def contexts(self) -> List[Context]:
        return [self.pool[:k] for k in range(self.max_vars + 1)]

    def fresh(self, ctx: Context) -> Optional[str]:
        """Variable bound when opening a binder in ctx; None at the end of the chain."""
        return self.pool[len(ctx)] if len(ctx) < self.max_vars else None

    def extend(self, ctx: Context) -> Optional[Context]:
        x = self.fresh(ctx)
        return None if x is None else ctx + (x,)

    def context_of(self, node: Node) -> Context:
        fv = free_vars(node)
        for ctx in self.contexts:
            if fv <= set(ctx):
                return ctx
        raise ConfigError(f"free variables {sorted(fv)} are outside the context chain {list(self.pool[:self.max_vars])}")

    def room(self, ctx: Context, node: Node) -> bool:
        """Every binder of node can be opened along the context chain starting at ctx."""
        return binder_depth(node) <= self.max_vars - len(ctx)

    def has_term(self, ctx: Context, term: Term) -> bool:
        return term in self.terms.get(ctx, ())

    def has_value(self, ctx: Context, value: Value) -> bool:
        return value in self.values.get(ctx, ())

    @property
    def closed_terms(self) -> List[Term]:
        return sort_nodes(self.terms[()])

    @property
    def closed_values(self) -> List[Value]:
        return sort_nodes(self.values[()])

    def size(self) -> Dict[str, int]:
        return {"terms": sum(len(t) for t in self.terms.values()),
                "values": sum(len(v) for v in self.values.values())}

    # --- construction ---

    @classmethod
    def enumerate(cls, sig: Signature, depth: int, max_vars: int = MAX_CONTEXT_VARS,
                  pool: Sequence[str] = VARIABLE_POOL, cap: int = TERM_CAP) -> "Universe":
        """All nodes of context c up to depth ``depth - len(c)`` whose binders fit the chain."""
        u = cls(tuple(pool), max_vars)
        for ctx in u.contexts:
            d = depth - len(ctx)
            u.terms[ctx] = frozenset(t for t in enumerate_terms(sig, ctx, d, cap) if u.room(ctx, t))
            u.values[ctx] = frozenset(v for v in enumerate_values(sig, ctx, d, cap) if u.room(ctx, v))
        logger.info("enumerated universe depth %d: %s", depth, u.size())
        return u

    @classmethod
    def from_nodes(cls, nodes: Iterable[Node], max_vars: int = MAX_CONTEXT_VARS,
                   pool: Sequence[str] = VARIABLE_POOL) -> "Universe":
        """Smallest universe containing the nodes and closed under subterms and weakening."""
        u = cls(tuple(pool), max_vars)
        terms: Dict[Context, set] = {ctx: set() for ctx in u.contexts}
        values: Dict[Context, set] = {ctx: set() for ctx in u.contexts}

        def walk(node: Node, ctx: Context):
            bucket = values if is_value(node) else terms
            if node in bucket[ctx] or not u.room(ctx, node):
                return
            bucket[ctx].add(node)
            inner = u.extend(ctx)
            if isinstance(node, Lam):
                if inner is not None:
                    walk(open_binder(node.body, inner[-1]), inner)
            elif isinstance(node, Return):
                walk(node.value, ctx)
            elif isinstance(node, App):
                walk(node.fun, ctx)
                walk(node.arg, ctx)
            elif isinstance(node, Seq):
                walk(node.first, ctx)
                if inner is not None:
                    walk(open_binder(node.then, inner[-1]), inner)
            elif isinstance(node, Op):
                for a in node.args:
                    walk(a, ctx)

        for node in nodes:
            ctx = u.context_of(node)
            if not u.room(ctx, node):
                raise ConfigError(f"{pretty(node)} nests {binder_depth(node)} binders, more than the context chain allows")
            walk(node, ctx)
        # weakening: what lives in a context also lives in every larger one
        contexts = u.contexts
        for i, ctx in enumerate(contexts):
            for larger in contexts[i + 1:]:
                for node in list(terms[ctx]):
                    walk(node, larger)
                for node in list(values[ctx]):
                    walk(node, larger)
        for ctx in contexts:
            u.terms[ctx] = frozenset(terms[ctx])
            u.values[ctx] = frozenset(values[ctx])
        return u
