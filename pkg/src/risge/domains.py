"""Per-pattern-node candidate domains stored as integer bitmasks.

Bit ``t`` of ``bits[p]`` is set when target node ``t`` is still a
possible image of pattern node ``p``.
"""
from __future__ import annotations

from typing import Iterable, Optional

from .graph import LabeledDigraph, NO_ARC_LABEL

__all__ = [
    "ConflictingSingletons",
    "DomainTable",
    "LabelMap",
    "initial_domains",
    "refine_arc_consistency",
    "forward_check_singletons",
    "any_empty",
    "format_domains",
]


class ConflictingSingletons(Exception):
    """Two pattern nodes are pinned to the same target node."""

    def __init__(self, first: int, second: int, target: int):
        self.nodes = (first, second)
        self.target = target
        super().__init__(
            "pattern nodes %d and %d both pinned to target %d" % (first, second, target))


def _bits_of(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class DomainTable:
    """Immutable tuple of bitmasks with cached cardinalities."""

    __slots__ = ("bits", "sizes", "_members")

    def __init__(self, bits: Iterable[int]):
        self.bits = tuple(bits)
        self.sizes = tuple(b.bit_count() for b in self.bits)
        self._members = None

    @classmethod
    def from_sets(cls, sets) -> "DomainTable":
        masks = []
        for s in sets:
            m = 0
            for t in s:
                m |= 1 << t
            masks.append(m)
        return cls(masks)

    def __len__(self):
        return len(self.bits)

    def __eq__(self, other):
        return isinstance(other, DomainTable) and self.bits == other.bits

    def __hash__(self):
        return hash(self.bits)

    def __repr__(self):
        return "DomainTable(%r)" % (self.as_lists(),)

    def contains(self, p: int, t: int) -> bool:
        return (self.bits[p] >> t) & 1 == 1

    def members(self, p: int) -> list:
        """Sorted target ids in the domain of ``p``."""
        return list(_bits_of(self.bits[p]))

    def as_lists(self) -> list:
        return [self.members(p) for p in range(len(self.bits))]

    def member_sets(self) -> tuple:
        """Frozensets per pattern node, cached for O(1) membership tests."""
        if self._members is None:
            self._members = tuple(frozenset(_bits_of(b)) for b in self.bits)
        return self._members

    def is_subset_of(self, other: "DomainTable") -> bool:
        return all(a & ~b == 0 for a, b in zip(self.bits, other.bits))


class LabelMap:
    """Translates pattern label ids into the target graph's id space.

    Labels missing from the target map to -1, which equals no target id.
    """

    def __init__(self, g_p: LabeledDigraph, g_t: LabeledDigraph):
        if g_p.registry is g_t.registry:
            self.node = list(g_p.node_labels)
            self._arc = None
        else:
            reg_p, reg_t = g_p.registry, g_t.registry
            self.node = []
            for lab in g_p.node_labels:
                tid = reg_t.lookup_node(reg_p.node_name(lab))
                self.node.append(-1 if tid is None else tid)
            self._arc = [
                reg_t.lookup_arc(reg_p.arc_name(i))
                for i in range(reg_p.arc_label_count)
            ]
            self._arc = [-1 if x is None else x for x in self._arc]

    def arc(self, label_id: int) -> int:
        return label_id if self._arc is None else self._arc[label_id]


def initial_domains(
    g_p: LabeledDigraph, g_t: LabeledDigraph, labels: Optional[LabelMap] = None
) -> DomainTable:
    """Label-equal targets with in- and out-degree at least the pattern's."""
    labels = labels or LabelMap(g_p, g_t)
    by_label: dict[int, list] = {}
    for t in range(g_t.node_count):
        by_label.setdefault(g_t.node_labels[t], []).append(t)
    t_in = [len(a) for a in g_t.in_adj]
    t_out = [len(a) for a in g_t.out_adj]
    masks = []
    for p in range(g_p.node_count):
        din, dout = len(g_p.in_adj[p]), len(g_p.out_adj[p])
        m = 0
        for t in by_label.get(labels.node[p], ()):
            if t_in[t] >= din and t_out[t] >= dout:
                m |= 1 << t
        masks.append(m)
    return DomainTable(masks)


class _SupportIndex:
    """Target out/in neighbor masks split by arc label id."""

    def __init__(self, g_t: LabeledDigraph):
        n = g_t.node_count
        self.out: list[dict[int, int]] = [dict() for _ in range(n)]
        self.inn: list[dict[int, int]] = [dict() for _ in range(n)]
        labs = g_t.arc_labels
        for i, (u, v) in enumerate(g_t.arcs):
            lab = labs[i] if labs is not None else NO_ARC_LABEL
            self.out[u][lab] = self.out[u].get(lab, 0) | (1 << v)
            self.inn[v][lab] = self.inn[v].get(lab, 0) | (1 << u)


def _pattern_constraints(g_p: LabeledDigraph, labels: LabelMap):
    """Per pattern node: (out arcs, in arcs) as (other node, target arc label)."""
    cons = []
    for p in range(g_p.node_count):
        outs = [(w, labels.arc(g_p.arc_label(p, w))) for w in g_p.out_adj[p]]
        ins = [(w, labels.arc(g_p.arc_label(w, p))) for w in g_p.in_adj[p]]
        cons.append((outs, ins))
    return cons


def refine_arc_consistency(
    dt: DomainTable,
    g_p: LabeledDigraph,
    g_t: LabeledDigraph,
    passes: Optional[int] = None,
    labels: Optional[LabelMap] = None,
) -> DomainTable:
    """Drop targets lacking a supporting arc into a neighbor's domain.

    ``passes=None`` iterates to a fixpoint; ``passes=1`` does a single
    in-place sweep over the pattern nodes.
    """
    labels = labels or LabelMap(g_p, g_t)
    index = _SupportIndex(g_t)
    cons = _pattern_constraints(g_p, labels)
    bits = list(dt.bits)
    n = len(bits)
    dirty = [True] * n
    sweeps = 0
    while any(dirty) and (passes is None or sweeps < passes):
        sweeps += 1
        changed_nodes = set()
        for p in range(n):
            outs, ins = cons[p]
            # only revisit p when a neighbor it depends on lost values
            if not (dirty[p] or any(dirty[w] for w, _ in outs) or any(dirty[w] for w, _ in ins)):
                continue
            keep = 0
            for t in _bits_of(bits[p]):
                t_out, t_in = index.out[t], index.inn[t]
                ok = True
                for w, lab in outs:
                    if not (t_out.get(lab, 0) & bits[w]):
                        ok = False
                        break
                if ok:
                    for w, lab in ins:
                        if not (t_in.get(lab, 0) & bits[w]):
                            ok = False
                            break
                if ok:
                    keep |= 1 << t
            if keep != bits[p]:
                bits[p] = keep
                changed_nodes.add(p)
        dirty = [p in changed_nodes for p in range(n)]
    return DomainTable(bits)


def forward_check_singletons(dt: DomainTable) -> DomainTable:
    """Remove each singleton's target from every other domain, to a fixpoint."""
    bits = list(dt.bits)
    done = set()
    owner: dict[int, int] = {}
    frontier = [p for p, b in enumerate(bits) if b and b & (b - 1) == 0]
    while frontier:
        nxt = []
        for p in frontier:
            if p in done:
                continue
            done.add(p)
            t = bits[p].bit_length() - 1
            if t in owner:
                raise ConflictingSingletons(owner[t], p, t)
            owner[t] = p
            mask = ~(1 << t)
            for q in range(len(bits)):
                if q == p or not (bits[q] >> t) & 1:
                    continue
                if bits[q] == 1 << t:
                    raise ConflictingSingletons(min(p, q), max(p, q), t)
                bits[q] &= mask
                b = bits[q]
                if b & (b - 1) == 0:
                    nxt.append(q)
        frontier = nxt
    return DomainTable(bits)


def any_empty(dt: DomainTable) -> bool:
    return any(s == 0 for s in dt.sizes)


def format_domains(dt: DomainTable) -> str:
    """One line per pattern node: ``node: t1 t2 ...``."""
    return "".join(
        "%d: %s\n" % (p, " ".join(map(str, dt.members(p)))) for p in range(len(dt))
    )
