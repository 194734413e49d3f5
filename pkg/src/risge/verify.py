"""Cross-check every engine configuration against brute force."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .generate import random_small_instance
from .graph import serialize_graph
from .scheduler import run_parallel
from .search import ALGORITHMS, EngineConfig, ListSink, enumerate_bruteforce, enumerate_sequential

__all__ = ["VerifyReport", "verify"]


@dataclass
class VerifyReport:
    instances: int = 0
    runs: int = 0
    divergence: Optional[str] = None
    failures: int = 0
    details: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        line = "%s: %d instances, %d runs, %d divergent" % (
            status, self.instances, self.runs, self.failures)
        if self.divergence:
            line += "\nfirst divergence:\n" + self.divergence
        return line


def _describe(g_p, g_t, label, got, want):
    missing = sorted(want - got)[:5]
    extra = sorted(got - want)[:5]
    return (
        "%s: got %d matches, expected %d\n  missing %s\n  extra %s\n"
        "--- pattern\n%s--- target\n%s"
        % (label, len(got), len(want), missing, extra, serialize_graph(g_p), serialize_graph(g_t))
    )


def verify(
    count: int = 200,
    seed: int = 0,
    algorithms: Sequence[str] = ALGORITHMS,
    workers: Sequence[int] = (1, 2, 4),
    group_size: int = 4,
    backend: str = "process",
    max_pattern: int = 6,
    max_target: int = 10,
    max_alphabet: int = 4,
    stop_at_first: bool = False,
) -> VerifyReport:
    """Run ``count`` random small instances through every configuration.

    Workers count 1 runs both the sequential engine and the single-worker
    scheduler; the report keeps the first divergence verbatim.
    """
    rng = random.Random(seed)
    report = VerifyReport()
    for k in range(count):
        g_p, g_t = random_small_instance(rng, max_pattern, max_target, max_alphabet,
                                         arc_labels=rng.random() < 0.25)
        _, truth = enumerate_bruteforce(g_p, g_t)
        report.instances += 1
        for alg in algorithms:
            cfg = EngineConfig(alg, time_limit=None)
            runs = [("instance %d %s sequential" % (k, alg), None)]
            runs += [("instance %d %s workers=%d" % (k, alg, w), w) for w in workers]
            for label, w in runs:
                sink = ListSink()
                if w is None:
                    enumerate_sequential(g_p, g_t, cfg, sink)
                else:
                    run_parallel(g_p, g_t, cfg, workers=w, group_size=group_size, sink=sink,
                                 seed=seed + k, backend=backend)
                report.runs += 1
                got = set(sink.matches)
                if got != truth or len(sink.matches) != len(got):
                    report.failures += 1
                    report.details.append(label)
                    if report.divergence is None:
                        report.divergence = _describe(g_p, g_t, label, got, truth)
                    if stop_at_first:
                        return report
    return report
