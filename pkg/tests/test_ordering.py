import random

import pytest
from hypothesis import given, settings, strategies as st

from risge.graph import LabeledDigraph
from risge.ordering import (
    EmptyPattern,
    OrderingOptions,
    build_ordering,
    format_ordering,
    weight_m,
    weight_n,
)


def graph(n, arcs):
    return LabeledDigraph(["A"] * n, arcs)


TRIANGLE = graph(3, [(0, 1), (1, 2), (2, 0)])
PATH = graph(3, [(0, 1), (1, 2)])


def brute_wm(prefix, v, g):
    return len(set(g.neighbors[v]) & set(prefix))


def brute_wn(prefix, v, g):
    # exhaustive witness scan over every node x
    count = 0
    for w in prefix:
        for x in range(g.node_count):
            if x in prefix or x == v:
                continue
            if v in g.neighbors[x] and w in g.neighbors[x]:
                count += 1
                break
    return count


def test_weight_examples():
    assert weight_m(set(), 1, TRIANGLE) == 0
    assert weight_n(set(), 1, TRIANGLE) == 0
    assert weight_m({0}, 1, TRIANGLE) == 1
    assert weight_n({0}, 2, PATH) == 1
    assert weight_n({0}, 1, TRIANGLE) == 1


@st.composite
def graph_and_prefix(draw):
    n = draw(st.integers(2, 9))
    pairs = draw(st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=25))
    g = graph(n, [(u, v) for u, v in pairs if u != v])
    prefix = draw(st.sets(st.integers(0, n - 1), max_size=n - 1))
    v = draw(st.sampled_from([x for x in range(n) if x not in prefix]))
    return g, prefix, v


@given(graph_and_prefix())
@settings(max_examples=200, deadline=None)
def test_weights_match_oracles(case):
    g, prefix, v = case
    assert weight_m(prefix, v, g) == brute_wm(prefix, v, g)
    assert weight_n(prefix, v, g) == brute_wn(prefix, v, g)


def test_star_center_first():
    star = graph(4, [(1, 0), (1, 2), (1, 3)])
    assert build_ordering(star).mu[0] == 1


def test_path_ordering():
    o = build_ordering(PATH)
    assert o.mu == (1, 0, 2)
    assert o.parents == (None, 1, 1)


def test_domain_size_breaks_symmetric_tie():
    fork = graph(3, [(0, 1), (0, 2)])
    assert build_ordering(fork).mu == (0, 1, 2)
    opts = OrderingOptions(domain_tiebreak=True, domain_sizes=[9, 5, 2])
    assert build_ordering(fork, opts).mu == (0, 2, 1)


def test_singletons_move_to_front_in_greedy_order():
    p = graph(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
    base = build_ordering(p).mu
    sizes = [3, 3, 3, 1, 1]
    o = build_ordering(p, OrderingOptions(singleton_first=True, domain_sizes=sizes))
    singles = [v for v in base if sizes[v] == 1]
    rest = [v for v in base if sizes[v] != 1]
    assert list(o.mu) == singles + rest
    assert o.parents[0] is None


def test_options_require_domain_sizes():
    with pytest.raises(ValueError):
        OrderingOptions(domain_tiebreak=True)


def test_empty_pattern_rejected():
    with pytest.raises(EmptyPattern):
        build_ordering(graph(0, []))


def test_disconnected_pattern_has_parentless_nodes():
    p = graph(4, [(0, 1), (2, 3)])
    o = build_ordering(p)
    assert sorted(o.mu) == [0, 1, 2, 3]
    assert sum(1 for x in o.parents if x is None) == 2


def test_format_ordering():
    assert format_ordering(build_ordering(PATH)) == "0 1 -\n1 0 1\n2 2 1\n"


def _connected(g):
    seen, stack = {0}, [0]
    while stack:
        for w in g.neighbors[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == g.node_count


@given(graph_and_prefix(), st.booleans(), st.booleans(), st.integers(0, 10 ** 6))
@settings(max_examples=150, deadline=None)
def test_ordering_invariants(case, singleton_first, tiebreak, seed):
    g = case[0]
    rng = random.Random(seed)
    sizes = [rng.randint(1, 4) for _ in range(g.node_count)]
    opts = OrderingOptions(singleton_first, tiebreak, sizes if (singleton_first or tiebreak) else None)
    o = build_ordering(g, opts)
    assert sorted(o.mu) == list(range(g.node_count))
    assert o.parents[0] is None
    pos = o.position()
    for i, (v, p) in enumerate(zip(o.mu, o.parents)):
        earlier = [u for u in g.neighbors[v] if pos[u] < i]
        if p is None:
            assert not earlier
        else:
            assert p in g.neighbors[v] and pos[p] < i
            assert pos[p] == min(pos[u] for u in earlier)
    if not singleton_first:
        assert g.degree(o.mu[0]) == max(g.degree(v) for v in range(g.node_count))
    assert build_ordering(g, opts) == o
    if _connected(g) and not singleton_first:
        assert all(p is not None for p in o.parents[1:])
