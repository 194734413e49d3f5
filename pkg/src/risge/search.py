"""Sequential backtracking enumeration of non-induced pattern occurrences.

A :class:`Plan` holds everything the search needs after preprocessing:
the variable ordering, optional domains and per-depth constraint
tables.  Both the sequential driver here and the parallel workers in
:mod:`risge.scheduler` run candidate checks through the same plan.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .domains import (
    ConflictingSingletons,
    DomainTable,
    LabelMap,
    any_empty,
    forward_check_singletons,
    initial_domains,
    refine_arc_consistency,
)
from .graph import LabeledDigraph
from .ordering import EmptyPattern, OrderingOptions, VariableOrdering, build_ordering

__all__ = [
    "ALGORITHMS",
    "EngineConfig",
    "SearchStats",
    "SearchState",
    "MatchSink",
    "CountingSink",
    "ListSink",
    "Plan",
    "InstanceTooLarge",
    "prepare",
    "candidate_targets",
    "check_candidate",
    "enumerate_sequential",
    "enumerate_bruteforce",
]

ALGORITHMS = ("ri", "ri-ds", "ri-ds-si", "ri-ds-si-fc")

#: candidate checks between two deadline tests
TIME_CHECK_INTERVAL = 4096


class InstanceTooLarge(ValueError):
    pass


class _Timeout(Exception):
    pass


@dataclass(frozen=True)
class EngineConfig:
    algorithm: str = "ri"
    ac_passes: Optional[int] = None  # None: iterate to a fixpoint
    time_limit: Optional[float] = 180.0
    count_only: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError("unknown algorithm %r; expected one of %s"
                             % (self.algorithm, ", ".join(ALGORITHMS)))
        if self.ac_passes is not None and self.ac_passes < 1:
            raise ValueError("ac_passes must be >= 1 or None")

    @property
    def uses_domains(self) -> bool:
        return self.algorithm != "ri"


@dataclass
class SearchStats:
    preprocessing_time: float = 0.0
    matching_time: float = 0.0
    total_time: float = 0.0
    search_space_size: int = 0
    match_count: int = 0
    steals_ok: int = 0
    steals_failed: int = 0
    timed_out: bool = False
    # per-worker executed task counts; empty for the sequential engine
    worker_tasks: list = field(default_factory=list)


class MatchSink:
    """Receives each complete mapping as a tuple indexed by pattern node."""

    wants_mappings = True

    def __call__(self, mapping: tuple) -> None:
        raise NotImplementedError


class CountingSink(MatchSink):
    wants_mappings = False

    def __init__(self):
        self.count = 0

    def __call__(self, mapping):
        self.count += 1


class ListSink(MatchSink):
    def __init__(self):
        self.matches: list = []

    def __call__(self, mapping):
        self.matches.append(mapping)


class _CallbackSink(MatchSink):
    def __init__(self, fn):
        self.fn = fn

    def __call__(self, mapping):
        self.fn(mapping)


def as_sink(sink) -> Optional[MatchSink]:
    if sink is None or isinstance(sink, MatchSink):
        return sink
    if callable(sink):
        return _CallbackSink(sink)
    raise TypeError("sink must be a MatchSink or a callable")


class SearchState:
    """Depth-indexed mapping stack plus the set of used target nodes."""

    __slots__ = ("mapping", "used", "depth", "checks")

    def __init__(self, pattern_size: int, target_size: int):
        self.mapping = [0] * pattern_size
        self.used = bytearray(target_size)
        self.depth = 0
        self.checks = 0

    def push(self, v_t: int) -> None:
        self.mapping[self.depth] = v_t
        self.used[v_t] = 1
        self.depth += 1

    def pop(self) -> int:
        self.depth -= 1
        v = self.mapping[self.depth]
        self.used[v] = 0
        return v

    def truncate(self, depth: int) -> None:
        while self.depth > depth:
            self.pop()

    def load(self, prefix) -> None:
        self.truncate(0)
        for v in prefix:
            self.push(v)


class Plan:
    """Compiled per-depth tables for one (pattern, target, algorithm) triple."""

    def __init__(
        self,
        g_p: LabeledDigraph,
        g_t: LabeledDigraph,
        ordering: VariableOrdering,
        domains: Optional[DomainTable] = None,
        labels: Optional[LabelMap] = None,
        empty: bool = False,
    ):
        labels = labels or LabelMap(g_p, g_t)
        self.g_p = g_p
        self.g_t = g_t
        self.ordering = ordering
        self.domains = domains
        self.empty = empty
        mu = ordering.mu
        n = len(mu)
        self.n = n
        self.target_size = g_t.node_count
        pos = ordering.position()

        self.parent_pos = tuple(-1 if p is None else pos[p] for p in ordering.parents)
        self.label = tuple(labels.node[p] for p in mu)
        self.in_deg = tuple(g_p.in_degree(p) for p in mu)
        self.out_deg = tuple(g_p.out_degree(p) for p in mu)
        # arcs to already-mapped positions, split by direction
        out_checks, in_checks = [], []
        for d, p in enumerate(mu):
            out_checks.append(tuple(
                (pos[w], labels.arc(g_p.arc_label(p, w)))
                for w in g_p.out_adj[p] if pos[w] < d))
            in_checks.append(tuple(
                (pos[w], labels.arc(g_p.arc_label(w, p)))
                for w in g_p.in_adj[p] if pos[w] < d))
        self.out_checks = tuple(out_checks)
        self.in_checks = tuple(in_checks)
        self.check_arc_labels = g_p.arc_labels is not None or g_t.arc_labels is not None

        self.t_label = g_t.node_labels
        self.t_in = tuple(len(a) for a in g_t.in_adj)
        self.t_out = tuple(len(a) for a in g_t.out_adj)
        self.t_nbrs = g_t.neighbors
        self.t_out_sets = g_t.out_sets
        if domains is not None:
            sets = domains.member_sets()
            self.dom = tuple(sets[p] for p in mu)
            self.dom_sorted = tuple(tuple(domains.members(p)) for p in mu)
        else:
            self.dom = None
            self.dom_sorted = None
        self.all_targets = tuple(range(g_t.node_count))

    def candidates(self, depth: int, mapping) -> tuple:
        pp = self.parent_pos[depth]
        if pp >= 0:
            return self.t_nbrs[mapping[pp]]
        if self.dom_sorted is not None:
            return self.dom_sorted[depth]
        return self.all_targets

    def accept(self, depth: int, v: int, mapping, used) -> bool:
        # rule 0: domain membership (domain variants only)
        if self.dom is not None and v not in self.dom[depth]:
            return False
        # rule 1: injectivity
        if used[v]:
            return False
        # rule 2: node label equivalence
        if self.t_label[v] != self.label[depth]:
            return False
        # rule 3: degrees
        if self.t_in[v] < self.in_deg[depth] or self.t_out[v] < self.out_deg[depth]:
            return False
        # rule 4: pattern arcs to mapped nodes exist with equal labels
        return self._arcs_ok(depth, v, mapping)

    def _arcs_ok(self, depth, v, mapping) -> bool:
        out_sets = self.t_out_sets
        succ = out_sets[v]
        if self.check_arc_labels:
            arc_label = self.g_t._arc_label_map.get
            for j, lab in self.out_checks[depth]:
                if arc_label((v, mapping[j])) != lab:
                    return False
            for j, lab in self.in_checks[depth]:
                if arc_label((mapping[j], v)) != lab:
                    return False
            return True
        for j, _ in self.out_checks[depth]:
            if mapping[j] not in succ:
                return False
        for j, _ in self.in_checks[depth]:
            if v not in out_sets[mapping[j]]:
                return False
        return True

    def root_candidates(self) -> tuple:
        return self.candidates(0, ())

    def to_pattern_order(self, mapping) -> tuple:
        out = [0] * self.n
        for d, p in enumerate(self.ordering.mu):
            out[p] = mapping[d]
        return tuple(out)


def prepare(g_p: LabeledDigraph, g_t: LabeledDigraph, cfg: EngineConfig) -> Plan:
    """Preprocessing: domains (domain variants) and the variable ordering."""
    if g_p.node_count == 0:
        raise EmptyPattern("pattern graph has no nodes")
    labels = LabelMap(g_p, g_t)
    if not cfg.uses_domains:
        return Plan(g_p, g_t, build_ordering(g_p), labels=labels)

    dt = initial_domains(g_p, g_t, labels)
    empty = any_empty(dt)
    if not empty:
        dt = refine_arc_consistency(dt, g_p, g_t, passes=cfg.ac_passes, labels=labels)
        empty = any_empty(dt)
    if not empty and cfg.algorithm == "ri-ds-si-fc":
        try:
            dt = forward_check_singletons(dt)
        except ConflictingSingletons:
            empty = True
    opts = OrderingOptions(
        singleton_first=True,
        domain_tiebreak=cfg.algorithm in ("ri-ds-si", "ri-ds-si-fc"),
        domain_sizes=dt.sizes,
    )
    return Plan(g_p, g_t, build_ordering(g_p, opts), dt, labels, empty=empty)


def candidate_targets(state: SearchState, depth: int, plan: Plan) -> Iterable[int]:
    """Targets to try for ``mu[depth]`` in ascending id order."""
    return iter(plan.candidates(depth, state.mapping))


def check_candidate(state: SearchState, depth: int, v_t: int, plan: Plan) -> bool:
    """Apply pruning rules 0-4 to extending ``state`` with ``mu[depth] -> v_t``."""
    state.checks += 1
    return plan.accept(depth, v_t, state.mapping, state.used)


def enumerate_sequential(
    g_p: LabeledDigraph,
    g_t: LabeledDigraph,
    cfg: EngineConfig = EngineConfig(),
    sink=None,
    plan: Optional[Plan] = None,
) -> SearchStats:
    """Depth-first enumeration of every match, in deterministic order.

    On timeout the returned stats carry ``timed_out=True`` and the counts
    reached so far.
    """
    sink = as_sink(sink)
    t0 = time.perf_counter()
    if plan is None:
        plan = prepare(g_p, g_t, cfg)
    t1 = time.perf_counter()
    stats = SearchStats(preprocessing_time=t1 - t0)
    if not plan.empty:
        _run_dfs(plan, cfg, sink, stats, t1)
    t2 = time.perf_counter()
    stats.matching_time = t2 - t1
    stats.total_time = t2 - t0
    return stats


def _run_dfs(plan: Plan, cfg: EngineConfig, sink, stats: SearchStats, start: float):
    n = plan.n
    last = n - 1
    mapping = [0] * n
    used = bytearray(plan.target_size)
    candidates = plan.candidates
    accept = plan.accept
    emit = sink if (sink is not None and sink.wants_mappings) else None
    deadline = None if cfg.time_limit is None else start + cfg.time_limit
    counters = [0, 0, TIME_CHECK_INTERVAL]  # checks, matches, next time check

    def dfs(d):
        for v in candidates(d, mapping):
            counters[0] += 1
            if counters[0] >= counters[2]:
                counters[2] += TIME_CHECK_INTERVAL
                if deadline is not None and time.perf_counter() > deadline:
                    raise _Timeout
            if not accept(d, v, mapping, used):
                continue
            mapping[d] = v
            if d == last:
                counters[1] += 1
                if emit is not None:
                    emit(plan.to_pattern_order(mapping))
                continue
            used[v] = 1
            dfs(d + 1)
            used[v] = 0

    try:
        dfs(0)
    except _Timeout:
        stats.timed_out = True
    stats.search_space_size = counters[0]
    stats.match_count = counters[1]
    if sink is not None and emit is None:
        sink.count += counters[1]


def enumerate_bruteforce(g_p: LabeledDigraph, g_t: LabeledDigraph):
    """All injective mappings preserving pattern arcs and labels.

    Compares label *strings* and scans the arc lists directly so that it
    shares no code with the search engine.  Returns ``(count, matches)``
    where ``matches`` is a set of tuples indexed by pattern node.
    """
    n_p, n_t = g_p.node_count, g_t.node_count
    if n_p > 8 or n_t > 12:
        raise InstanceTooLarge("brute force limited to 8 pattern / 12 target nodes")
    p_lab = [g_p.label_name(v) for v in range(n_p)]
    t_lab = [g_t.label_name(v) for v in range(n_t)]
    p_arcs = [(u, v, g_p.arc_label_name(u, v)) for u, v in g_p.arcs]
    t_arcs = {(u, v): g_t.arc_label_name(u, v) for u, v in g_t.arcs}
    found = set()
    for f in itertools.permutations(range(n_t), n_p):
        if any(p_lab[i] != t_lab[f[i]] for i in range(n_p)):
            continue
        if all(t_arcs.get((f[u], f[v])) == lab for u, v, lab in p_arcs):
            found.add(f)
    return len(found), found
