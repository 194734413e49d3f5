"""Synthetic target graphs and embeddable patterns extracted from them."""
from __future__ import annotations

import bisect
import itertools
import random
from dataclasses import dataclass
from typing import Optional

from .graph import LabeledDigraph, LabelRegistry

__all__ = [
    "GeneratorSpec",
    "InfeasibleSpec",
    "generate_target",
    "extract_pattern",
    "generate_instance",
    "random_small_instance",
]

MODES = ("dense", "semi-dense", "sparse")


class InfeasibleSpec(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters for one generated (target, pattern) pair.

    ``arc_density`` is the fraction of the ``n(n-1)`` possible arcs.
    ``degree_exponent`` switches from uniform arcs to a Chung-Lu style
    heavy-tailed degree sequence with that power-law exponent.
    """

    nodes: int = 200
    arc_density: float = 0.02
    alphabet: int = 4
    label_distribution: str = "uniform"
    pattern_edges: int = 8
    mode: str = "sparse"
    seed: int = 0
    degree_exponent: Optional[float] = None
    arc_alphabet: int = 0
    label_sigma: Optional[float] = None
    label_mean: Optional[float] = None

    def __post_init__(self):
        if self.nodes < 2:
            raise InfeasibleSpec("need at least two target nodes")
        if not 0.0 < self.arc_density <= 1.0:
            raise InfeasibleSpec("arc_density must lie in (0, 1]")
        if self.alphabet < 1:
            raise InfeasibleSpec("alphabet must be >= 1")
        if self.label_distribution not in ("uniform", "normal"):
            raise InfeasibleSpec("label_distribution must be 'uniform' or 'normal'")
        if self.mode not in MODES:
            raise InfeasibleSpec("mode must be one of %s" % ", ".join(MODES))
        if self.pattern_edges < 1:
            raise InfeasibleSpec("pattern_edges must be >= 1")
        if self.pattern_edges > self.arc_count:
            raise InfeasibleSpec("pattern needs %d arcs but target has %d"
                                 % (self.pattern_edges, self.arc_count))

    @property
    def arc_count(self) -> int:
        return max(1, round(self.arc_density * self.nodes * (self.nodes - 1)))


def _label_names(alphabet):
    return ["L%d" % i for i in range(alphabet)]


def _draw_labels(rng, n, alphabet, distribution, sigma=None, mean=None):
    if distribution == "uniform":
        return [rng.randrange(alphabet) for _ in range(n)]
    sigma = alphabet / 6.0 if sigma is None else sigma
    mean = alphabet / 2.0 if mean is None else mean
    top = alphabet - 1
    return [min(top, max(0, round(rng.gauss(mean, sigma)))) for _ in range(n)]


def generate_target(spec: GeneratorSpec, name: str = "target") -> LabeledDigraph:
    rng = random.Random(spec.seed)
    n, m = spec.nodes, spec.arc_count
    if spec.degree_exponent is not None:
        weights = [(i + 1) ** (-1.0 / (spec.degree_exponent - 1.0)) for i in range(n)]
        rng.shuffle(weights)
        cum = list(itertools.accumulate(weights))
        total = cum[-1]

        def draw():
            return bisect.bisect_right(cum, rng.random() * total)
    else:
        def draw():
            return rng.randrange(n)

    arcs = set()
    limit = 50 * m + 1000
    tries = 0
    if m > n * (n - 1) // 2:
        # dense: sample from the full arc list
        everything = [(u, v) for u in range(n) for v in range(n) if u != v]
        arcs = set(rng.sample(everything, m))
    while len(arcs) < m:
        tries += 1
        if tries > limit:
            raise InfeasibleSpec("could not place %d distinct arcs" % m)
        u, v = draw(), draw()
        if u != v:
            arcs.add((u, v))
    names = _label_names(spec.alphabet)
    labels = [names[i] for i in _draw_labels(rng, n, spec.alphabet, spec.label_distribution,
                                             spec.label_sigma, spec.label_mean)]
    arc_list = sorted(arcs)
    if spec.arc_alphabet > 0:
        arc_list = [(u, v, "e%d" % rng.randrange(spec.arc_alphabet)) for u, v in arc_list]
    return LabeledDigraph(labels, arc_list, name=name)


def extract_pattern(
    target: LabeledDigraph,
    edges: int,
    mode: str = "sparse",
    seed: int = 0,
    name: str = "pattern",
    attempts: int = 50,
) -> LabeledDigraph:
    """Grow a connected subgraph of ``target`` with exactly ``edges`` arcs.

    ``sparse`` prefers arcs that reach a new node, ``dense`` prefers
    arcs between nodes already taken, ``semi-dense`` flips a coin.
    """
    if mode not in MODES:
        raise InfeasibleSpec("mode must be one of %s" % ", ".join(MODES))
    if edges > target.arc_count:
        raise InfeasibleSpec("pattern needs %d arcs but target has %d" % (edges, target.arc_count))
    rng = random.Random(seed)
    starts = [v for v in range(target.node_count) if target.neighbors[v]]
    if not starts:
        raise InfeasibleSpec("target has no arcs")
    incident = [
        [(v, w) for w in target.out_adj[v]] + [(u, v) for u in target.in_adj[v]]
        for v in range(target.node_count)
    ]
    for _ in range(attempts):
        nodes = {rng.choice(starts)}
        chosen = set()
        internal, external = set(), set()
        for a in incident[next(iter(nodes))]:
            external.add(a)
        while len(chosen) < edges and (internal or external):
            if mode == "sparse":
                use_internal = not external
            elif mode == "dense":
                use_internal = bool(internal)
            else:
                use_internal = bool(internal) and (not external or rng.random() < 0.5)
            pool = internal if use_internal else external
            arc = rng.choice(sorted(pool))
            pool.discard(arc)
            chosen.add(arc)
            if not use_internal:
                new = arc[1] if arc[0] in nodes else arc[0]
                nodes.add(new)
                for a in incident[new]:
                    if a in chosen:
                        continue
                    if a in external:
                        external.discard(a)
                        internal.add(a)
                    else:
                        external.add(a)
        if len(chosen) == edges:
            break
    else:
        raise InfeasibleSpec("no connected component offers %d arcs" % edges)

    order = sorted(nodes)
    index = {v: i for i, v in enumerate(order)}
    labels = [target.label_name(v) for v in order]
    arcs = []
    for u, v in sorted(chosen):
        lab = target.arc_label_name(u, v)
        arcs.append((index[u], index[v], lab or None))
    return LabeledDigraph(labels, arcs, name=name)


def generate_instance(spec: GeneratorSpec, name: str = "gen"):
    """Return ``(target, pattern)``; the pattern always embeds in the target."""
    target = generate_target(spec, name="%s-target" % name)
    pattern = extract_pattern(target, spec.pattern_edges, spec.mode, seed=spec.seed + 1,
                              name="%s-pattern" % name)
    return target, pattern


def random_small_instance(rng: random.Random, max_pattern=6, max_target=10, max_alphabet=4,
                          arc_labels=False):
    """Small random pair for oracle checks.

    Half the time the pattern is extracted from the target (so matches
    exist); otherwise it is an unrelated random graph.  Both graphs use
    one label registry.
    """
    reg = LabelRegistry()
    alphabet = rng.randint(1, max_alphabet)
    names = _label_names(alphabet)
    arc_names = ["a", "b"] if arc_labels else [None]

    def rand_graph(n, p, name):
        arcs = [(u, v, rng.choice(arc_names)) for u in range(n) for v in range(n)
                if u != v and rng.random() < p]
        return LabeledDigraph([rng.choice(names) for _ in range(n)], arcs, name=name, registry=reg)

    n_t = rng.randint(1, max_target)
    target = rand_graph(n_t, rng.uniform(0.1, 0.6), "t")
    if target.arc_count and rng.random() < 0.5:
        edges = rng.randint(1, min(target.arc_count, 8))
        try:
            pat = extract_pattern(target, edges, rng.choice(MODES), seed=rng.randrange(1 << 30),
                                  attempts=5)
            if pat.node_count <= max_pattern:
                return LabeledDigraph([pat.label_name(v) for v in range(pat.node_count)],
                                      [(u, v, pat.arc_label_name(u, v) or None) for u, v in pat.arcs],
                                      name="p", registry=reg), target
        except InfeasibleSpec:
            pass
    n_p = rng.randint(1, min(max_pattern, max(1, n_t)))
    return rand_graph(n_p, rng.uniform(0.0, 0.6), "p"), target
