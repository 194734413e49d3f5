"""Static constraint-first variable ordering for the pattern graph."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .graph import LabeledDigraph

__all__ = [
    "EmptyPattern",
    "OrderingOptions",
    "VariableOrdering",
    "weight_m",
    "weight_n",
    "build_ordering",
    "format_ordering",
]


class EmptyPattern(ValueError):
    pass


@dataclass(frozen=True)
class OrderingOptions:
    singleton_first: bool = False
    domain_tiebreak: bool = False
    domain_sizes: Optional[Sequence[int]] = None

    def __post_init__(self):
        if (self.singleton_first or self.domain_tiebreak) and self.domain_sizes is None:
            raise ValueError("domain-aware ordering needs domain_sizes")


@dataclass(frozen=True)
class VariableOrdering:
    """Visit order ``mu`` and, per position, the parent pattern node.

    ``parents[i]`` is the earliest node of ``mu`` adjacent to ``mu[i]``
    (either direction) or ``None``.
    """

    mu: tuple
    parents: tuple

    def __len__(self):
        return len(self.mu)

    def position(self) -> list:
        """Inverse permutation: ``position()[node] -> index in mu``."""
        pos = [0] * len(self.mu)
        for i, v in enumerate(self.mu):
            pos[v] = i
        return pos


def weight_m(mu_prefix, v: int, g: LabeledDigraph) -> int:
    """Number of neighbors of ``v`` already in the prefix."""
    return sum(1 for u in g.neighbors[v] if u in mu_prefix)


def weight_n(mu_prefix, v: int, g: LabeledDigraph) -> int:
    """Number of prefix nodes sharing a non-prefix neighbor with ``v``."""
    reached = set()
    for x in g.neighbors[v]:
        if x in mu_prefix:
            continue
        for w in g.neighbors[x]:
            if w in mu_prefix:
                reached.add(w)
    return len(reached)


def build_ordering(
    g_p: LabeledDigraph, opts: OrderingOptions = OrderingOptions()
) -> VariableOrdering:
    """Greedy ordering on the key (w_m, w_n, degree[, -domain size], -id).

    The first pick, made with an empty prefix, reduces to the node of
    maximum total degree.  With ``singleton_first`` the nodes whose
    domain holds a single target are moved to the front, keeping their
    relative greedy order.
    """
    n = g_p.node_count
    if n == 0:
        raise EmptyPattern("pattern graph has no nodes")
    sizes = opts.domain_sizes
    tiebreak = opts.domain_tiebreak
    degree = [g_p.degree(v) for v in range(n)]

    in_mu: set = set()
    # incremental w_m counts; w_n is recomputed since it depends on the
    # shrinking set of non-prefix witnesses
    wm = [0] * n
    mu = []
    remaining = set(range(n))
    while remaining:
        best = None
        best_key = None
        for v in remaining:
            key = (wm[v], weight_n(in_mu, v, g_p) if in_mu else 0, degree[v],
                   -sizes[v] if tiebreak else 0, -v)
            if best_key is None or key > best_key:
                best, best_key = v, key
        mu.append(best)
        in_mu.add(best)
        remaining.discard(best)
        for u in g_p.neighbors[best]:
            wm[u] += 1

    if opts.singleton_first:
        mu = [v for v in mu if sizes[v] == 1] + [v for v in mu if sizes[v] != 1]

    pos = {v: i for i, v in enumerate(mu)}
    parents = []
    for i, v in enumerate(mu):
        earlier = [pos[u] for u in g_p.neighbors[v] if pos[u] < i]
        parents.append(mu[min(earlier)] if earlier else None)
    return VariableOrdering(tuple(mu), tuple(parents))


def format_ordering(ordering: VariableOrdering) -> str:
    """Lines ``pos node parent`` with ``-`` for a missing parent."""
    rows = []
    for i, (v, p) in enumerate(zip(ordering.mu, ordering.parents)):
        rows.append("%d %d %s" % (i, v, "-" if p is None else p))
    return "\n".join(rows) + "\n"
