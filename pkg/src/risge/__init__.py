"""Parallel enumeration of labeled subgraph occurrences (RI / RI-DS family)."""

from .domains import (
    ConflictingSingletons,
    DomainTable,
    any_empty,
    forward_check_singletons,
    initial_domains,
    refine_arc_consistency,
)
from .graph import (
    LabeledDigraph,
    LabelRegistry,
    neighborhood,
    parse_graph,
    read_graph,
    serialize_graph,
    write_graph,
)
from .ordering import OrderingOptions, VariableOrdering, build_ordering, weight_m, weight_n
from .scheduler import initial_distribution, run_parallel, simulate_schedule
from .search import (
    ALGORITHMS,
    CountingSink,
    EngineConfig,
    ListSink,
    SearchStats,
    enumerate_bruteforce,
    enumerate_sequential,
    prepare,
)

__version__ = "0.1.0"
