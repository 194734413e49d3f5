"""Labeled directed graphs and their text format.

The on-disk format is line oriented::

    #<name>
    <node count N>
    <label of node 0>
    ...
    <label of node N-1>
    <arc count M>
    <u> <v>            (or "<u> <v> <arc label>")
    ...

Node ids are 0-based and fields are separated by a single space.
"""
from __future__ import annotations

from typing import Iterable, Optional, Sequence, Union

__all__ = [
    "LabelRegistry",
    "LabeledDigraph",
    "GraphFormatError",
    "MalformedHeader",
    "MalformedLine",
    "NodeIndexOutOfRange",
    "DuplicateArc",
    "SelfLoop",
    "parse_graph",
    "serialize_graph",
    "read_graph",
    "write_graph",
    "neighborhood",
]

#: arc label id used for arcs that carry no label
NO_ARC_LABEL = 0


class GraphFormatError(ValueError):
    """Base class for parse failures; ``lineno`` is 1-based."""

    def __init__(self, lineno: int, message: str):
        self.lineno = lineno
        super().__init__("line %d: %s" % (lineno, message))


class MalformedHeader(GraphFormatError):
    pass


class MalformedLine(GraphFormatError):
    pass


class NodeIndexOutOfRange(GraphFormatError):
    pass


class DuplicateArc(GraphFormatError):
    pass


class SelfLoop(GraphFormatError):
    pass


class LabelRegistry:
    """Interns node and arc label strings to dense integer ids.

    Node and arc labels live in separate id spaces.  The empty arc
    label is always interned first so that unlabeled arcs get id 0.
    """

    def __init__(self):
        self._node_ids: dict[str, int] = {}
        self._node_names: list[str] = []
        self._arc_ids: dict[str, int] = {"": NO_ARC_LABEL}
        self._arc_names: list[str] = [""]

    def node_id(self, name: str) -> int:
        i = self._node_ids.get(name)
        if i is None:
            i = self._node_ids[name] = len(self._node_names)
            self._node_names.append(name)
        return i

    def arc_id(self, name: str) -> int:
        i = self._arc_ids.get(name)
        if i is None:
            i = self._arc_ids[name] = len(self._arc_names)
            self._arc_names.append(name)
        return i

    def lookup_node(self, name: str) -> Optional[int]:
        return self._node_ids.get(name)

    def lookup_arc(self, name: str) -> Optional[int]:
        return self._arc_ids.get(name)

    def node_name(self, i: int) -> str:
        return self._node_names[i]

    def arc_name(self, i: int) -> str:
        return self._arc_names[i]

    @property
    def node_label_count(self) -> int:
        return len(self._node_names)

    @property
    def arc_label_count(self) -> int:
        return len(self._arc_names)


class LabeledDigraph:
    """Immutable labeled digraph without self-loops or parallel arcs.

    Adjacency is kept three ways: sorted out-neighbors, sorted
    in-neighbors and the sorted undirected neighborhood.  ``out_sets``
    gives constant-time arc tests for the matcher.
    """

    __slots__ = (
        "name", "node_count", "node_labels", "arcs", "arc_labels",
        "registry", "out_adj", "in_adj", "neighbors", "out_sets",
        "_arc_label_map",
    )

    def __init__(
        self,
        node_labels: Sequence[str],
        arcs: Iterable[tuple],
        name: str = "graph",
        registry: Optional[LabelRegistry] = None,
    ):
        """Build a graph from label strings and ``(u, v[, label])`` arcs.

        Raises ``ValueError`` on self-loops, duplicates or bad node ids;
        :func:`parse_graph` performs the same checks with line numbers.
        """
        reg = registry if registry is not None else LabelRegistry()
        n = len(node_labels)
        labels = tuple(reg.node_id(str(s)) for s in node_labels)
        seen: dict[tuple[int, int], int] = {}
        for arc in arcs:
            u, v = int(arc[0]), int(arc[1])
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError("arc (%d, %d) references a node outside 0..%d" % (u, v, n - 1))
            if u == v:
                raise ValueError("self-loop on node %d" % u)
            if (u, v) in seen:
                raise ValueError("duplicate arc (%d, %d)" % (u, v))
            lab = reg.arc_id(str(arc[2])) if len(arc) > 2 and arc[2] is not None else NO_ARC_LABEL
            seen[(u, v)] = lab
        self._init(name, labels, seen, reg)

    @classmethod
    def _from_ids(cls, name, labels, arc_map, registry) -> "LabeledDigraph":
        g = cls.__new__(cls)
        g._init(name, tuple(labels), arc_map, registry)
        return g

    def _init(self, name, labels, arc_map, registry):
        n = len(labels)
        self.name = name
        self.node_count = n
        self.node_labels = labels
        self.registry = registry
        self.arcs = tuple(sorted(arc_map))
        if any(arc_map.values()):
            self.arc_labels = tuple(arc_map[a] for a in self.arcs)
        else:
            self.arc_labels = None
        self._arc_label_map = arc_map
        out_adj = [[] for _ in range(n)]
        in_adj = [[] for _ in range(n)]
        for u, v in self.arcs:
            out_adj[u].append(v)
            in_adj[v].append(u)
        self.out_adj = tuple(tuple(a) for a in out_adj)
        self.in_adj = tuple(tuple(sorted(a)) for a in in_adj)
        self.neighbors = tuple(
            tuple(sorted(set(out_adj[v]).union(in_adj[v]))) for v in range(n)
        )
        self.out_sets = tuple(frozenset(a) for a in out_adj)

    @property
    def arc_count(self) -> int:
        return len(self.arcs)

    def out_degree(self, v: int) -> int:
        return len(self.out_adj[v])

    def in_degree(self, v: int) -> int:
        return len(self.in_adj[v])

    def degree(self, v: int) -> int:
        """Total degree ``deg-(v) + deg+(v)``, ignoring direction."""
        return len(self.out_adj[v]) + len(self.in_adj[v])

    def has_arc(self, u: int, v: int) -> bool:
        return v in self.out_sets[u]

    def arc_label(self, u: int, v: int) -> int:
        """Label id of arc ``(u, v)``; ``KeyError`` if absent."""
        return self._arc_label_map[(u, v)]

    def label_name(self, v: int) -> str:
        return self.registry.node_name(self.node_labels[v])

    def arc_label_name(self, u: int, v: int) -> str:
        return self.registry.arc_name(self._arc_label_map[(u, v)])

    def __repr__(self):
        return "LabeledDigraph(name=%r, nodes=%d, arcs=%d)" % (
            self.name, self.node_count, self.arc_count)


def neighborhood(g: LabeledDigraph, v: int) -> tuple:
    """Nodes joined to ``v`` by an arc in either direction, sorted."""
    return g.neighbors[v]


def _int_field(token: str, lineno: int, exc=MalformedLine, what="integer") -> int:
    if not token.isdigit():
        raise exc(lineno, "expected non-negative %s, got %r" % (what, token))
    return int(token)


def parse_graph(
    text: Union[str, bytes],
    registry: Optional[LabelRegistry] = None,
) -> LabeledDigraph:
    """Parse the text format into a :class:`LabeledDigraph`."""
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    reg = registry if registry is not None else LabelRegistry()

    def line(i):
        if i >= len(lines):
            raise MalformedLine(i + 1, "unexpected end of input")
        return lines[i].rstrip("\r")

    head = line(0)
    if not head.startswith("#"):
        raise MalformedHeader(1, "first line must be '#<name>'")
    name = head[1:]
    n = _int_field(line(1), 2, MalformedHeader, "node count")
    labels = [reg.node_id(line(2 + i)) for i in range(n)]
    m_line = 2 + n
    m = _int_field(line(m_line), m_line + 1, MalformedHeader, "arc count")
    arc_map: dict[tuple[int, int], int] = {}
    for k in range(m):
        i = m_line + 1 + k
        lineno = i + 1
        parts = line(i).split(" ")
        if len(parts) not in (2, 3):
            raise MalformedLine(lineno, "expected 'u v' or 'u v label'")
        u = _int_field(parts[0], lineno, what="node id")
        v = _int_field(parts[1], lineno, what="node id")
        if u >= n or v >= n:
            raise NodeIndexOutOfRange(
                lineno, "node id %d out of range 0..%d" % (max(u, v), n - 1))
        if u == v:
            raise SelfLoop(lineno, "self-loop on node %d" % u)
        if (u, v) in arc_map:
            raise DuplicateArc(lineno, "duplicate arc %d %d" % (u, v))
        if len(parts) == 3:
            if parts[2] == "":
                raise MalformedLine(lineno, "empty arc label")
            arc_map[(u, v)] = reg.arc_id(parts[2])
        else:
            arc_map[(u, v)] = NO_ARC_LABEL
    extra = len(lines) - (m_line + 1 + m)
    if extra > 0:
        raise MalformedLine(m_line + 2 + m, "trailing content after %d arcs" % m)
    return LabeledDigraph._from_ids(name, labels, arc_map, reg)


def serialize_graph(g: LabeledDigraph) -> str:
    """Canonical text form: arcs sorted by ``(u, v)``, ``\\n`` endings."""
    out = ["#" + g.name, str(g.node_count)]
    out.extend(g.label_name(v) for v in range(g.node_count))
    out.append(str(g.arc_count))
    for i, (u, v) in enumerate(g.arcs):
        lab = g.arc_labels[i] if g.arc_labels is not None else NO_ARC_LABEL
        if lab == NO_ARC_LABEL:
            out.append("%d %d" % (u, v))
        else:
            out.append("%d %d %s" % (u, v, g.registry.arc_name(lab)))
    return "\n".join(out) + "\n"


def read_graph(path, registry: Optional[LabelRegistry] = None) -> LabeledDigraph:
    with open(path, "rb") as fh:
        return parse_graph(fh.read(), registry)


def write_graph(g: LabeledDigraph, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(serialize_graph(g))
