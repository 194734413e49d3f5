"""Benchmark records, their CSV form, and a sweep runner."""
from __future__ import annotations

import csv
import dataclasses
import io
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

from .graph import read_graph
from .scheduler import run_parallel
from .search import EngineConfig, SearchStats

__all__ = ["SCHEMA_VERSION", "BenchRecord", "FIELDS", "write_csv", "read_csv", "run_config", "sweep"]

SCHEMA_VERSION = 1


@dataclass
class BenchRecord:
    pattern: str
    target: str
    algorithm: str
    workers: int
    group_size: int
    preprocessing_time: float = 0.0
    matching_time: float = 0.0
    total_time: float = 0.0
    search_space_size: int = 0
    match_count: int = 0
    steals_ok: int = 0
    steals_failed: int = 0
    timed_out: bool = False
    repetition: int = 0
    error: str = ""
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_stats(cls, pattern, target, algorithm, workers, group_size, stats: SearchStats,
                   repetition=0) -> "BenchRecord":
        return cls(
            pattern, target, algorithm, workers, group_size,
            stats.preprocessing_time, stats.matching_time, stats.total_time,
            stats.search_space_size, stats.match_count, stats.steals_ok,
            stats.steals_failed, stats.timed_out, repetition,
        )


FIELDS = tuple(f.name for f in dataclasses.fields(BenchRecord))
_TYPES = {f.name: f.type for f in dataclasses.fields(BenchRecord)}


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(name, text):
    kind = _TYPES[name]
    if kind == "bool":
        if text not in ("true", "false"):
            raise ValueError("bad boolean %r in column %s" % (text, name))
        return text == "true"
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    return text


def write_csv(records: Iterable[BenchRecord], out, header: bool = True) -> None:
    w = csv.writer(out, lineterminator="\n")
    if header:
        w.writerow(FIELDS)
    for r in records:
        w.writerow([_fmt(getattr(r, f)) for f in FIELDS])


def read_csv(src) -> list:
    if isinstance(src, str):
        src = io.StringIO(src)
    reader = csv.reader(src)
    head = next(reader)
    if tuple(head) != FIELDS:
        raise ValueError("unexpected CSV header: %r" % (head,))
    return [BenchRecord(**{f: _parse(f, v) for f, v in zip(FIELDS, row)}) for row in reader]


def run_config(g_p, g_t, cfg: EngineConfig, workers: int, group_size: int, seed: int = 0,
               steal: bool = True) -> SearchStats:
    return run_parallel(g_p, g_t, cfg, workers=workers, group_size=group_size, seed=seed, steal=steal)


def sweep(
    pattern_paths: Sequence[str],
    target_path: str,
    algorithms: Sequence[str] = ("ri",),
    workers: Sequence[int] = (1,),
    group_sizes: Sequence[int] = (4,),
    repetitions: int = 1,
    time_limit: Optional[float] = 180.0,
    ac_passes: Optional[int] = None,
    seed: int = 0,
) -> Iterator[BenchRecord]:
    """Yield one record per (pattern, algorithm, workers, group size, repetition).

    Failures of a single instance are reported in the ``error`` column.
    """
    target_name = os.path.basename(target_path)
    try:
        g_t = read_graph(target_path)
        target_error = ""
    except (OSError, ValueError) as exc:
        g_t = None
        target_error = "target: %s" % exc
    for ppath in pattern_paths:
        pname = os.path.basename(ppath)
        try:
            g_p = read_graph(ppath) if g_t is not None else None
            perr = target_error
        except (OSError, ValueError) as exc:
            g_p, perr = None, "pattern: %s" % exc
        for alg in algorithms:
            for w in workers:
                for gs in group_sizes:
                    for rep in range(repetitions):
                        if g_p is None:
                            yield BenchRecord(pname, target_name, alg, w, gs, repetition=rep, error=perr)
                            continue
                        try:
                            cfg = EngineConfig(alg, ac_passes, time_limit, count_only=True)
                            stats = run_config(g_p, g_t, cfg, w, gs, seed)
                            yield BenchRecord.from_stats(pname, target_name, alg, w, gs, stats, rep)
                        except Exception as exc:  # recorded, never aborts the sweep
                            yield BenchRecord(pname, target_name, alg, w, gs, repetition=rep,
                                              error="%s: %s" % (type(exc).__name__, exc))
