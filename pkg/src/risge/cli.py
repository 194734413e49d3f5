"""Command line entry point: ``risge enumerate|bench|generate|verify``."""
from __future__ import annotations

import argparse
import glob
import json
import os
import sys
import time

from . import bench
from .domains import format_domains
from .generate import GeneratorSpec, InfeasibleSpec, extract_pattern, generate_target
from .graph import GraphFormatError, read_graph, write_graph
from .ordering import EmptyPattern, format_ordering
from .scheduler import run_parallel
from .search import ALGORITHMS, EngineConfig, prepare
from .verify import verify

EXIT_OK, EXIT_INPUT, EXIT_TIMEOUT = 0, 1, 2


def _ac_passes(text):
    if text == "fixpoint":
        return None
    if text == "1":
        return 1
    raise argparse.ArgumentTypeError("expected '1' or 'fixpoint'")


def _group_size(text):
    g = int(text)
    if not 1 <= g <= 64:
        raise argparse.ArgumentTypeError("task group size must be in 1..64")
    return g


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _int_list(text):
    return [int(x) for x in text.split(",") if x]


def _time_limit(text):
    v = float(text)
    return None if v <= 0 else v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="risge", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    e = sub.add_parser("enumerate", help="list or count pattern occurrences")
    e.add_argument("-p", "--pattern", required=True)
    e.add_argument("-t", "--target", required=True)
    e.add_argument("--algorithm", choices=ALGORITHMS, default="ri")
    e.add_argument("--workers", type=_positive, default=1)
    e.add_argument("--task-group-size", type=_group_size, default=4)
    e.add_argument("--time-limit", type=_time_limit, default=180.0,
                   help="seconds; 0 disables the limit")
    e.add_argument("--count-only", action="store_true")
    e.add_argument("--output", choices=("text", "csv", "json"), default="text")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--ac-passes", type=_ac_passes, default=None, metavar="{1,fixpoint}")
    e.add_argument("--backend", choices=("process", "thread"), default="process")
    e.add_argument("--dump-ordering", action="store_true")
    e.add_argument("--dump-domains", action="store_true")

    b = sub.add_parser("bench", help="run a configuration matrix and emit CSV")
    b.add_argument("--patterns", required=True, help="directory of pattern files")
    b.add_argument("-t", "--target", required=True)
    b.add_argument("--algorithms", default="ri",
                   help="comma separated subset of %s" % ",".join(ALGORITHMS))
    b.add_argument("--workers", type=_int_list, default=[1])
    b.add_argument("--task-group-sizes", type=_int_list, default=[4])
    b.add_argument("--repetitions", type=_positive, default=1)
    b.add_argument("--time-limit", type=_time_limit, default=180.0)
    b.add_argument("--ac-passes", type=_ac_passes, default=None, metavar="{1,fixpoint}")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("-o", "--out", help="CSV file (default: stdout)")

    g = sub.add_parser("generate", help="write a synthetic target and embedded pattern")
    g.add_argument("--nodes", type=_positive, default=200)
    g.add_argument("--density", type=float, default=0.02, help="fraction of possible arcs")
    g.add_argument("--alphabet", type=_positive, default=4)
    g.add_argument("--labels", choices=("uniform", "normal"), default="uniform")
    g.add_argument("--label-sigma", type=float, default=None)
    g.add_argument("--label-mean", type=float, default=None)
    g.add_argument("--pattern-edges", type=int, default=8)
    g.add_argument("--mode", choices=("dense", "semi-dense", "sparse"), default="sparse")
    g.add_argument("--degree-exponent", type=float, default=None)
    g.add_argument("--arc-alphabet", type=int, default=0)
    g.add_argument("--patterns", type=_positive, default=1, help="number of patterns to extract")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")

    v = sub.add_parser("verify", help="compare all engines against brute force")
    v.add_argument("--count", type=_positive, default=200)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--backend", choices=("process", "thread"), default="process")
    return ap


def _cmd_enumerate(args, out, err) -> int:
    try:
        g_p = read_graph(args.pattern)
        g_t = read_graph(args.target)
    except OSError as exc:
        print("error: cannot read %s: %s" % (exc.filename, exc.strerror), file=err)
        return EXIT_INPUT
    except GraphFormatError as exc:
        print("error: %s" % exc, file=err)
        return EXIT_INPUT
    cfg = EngineConfig(args.algorithm, args.ac_passes, args.time_limit, args.count_only)
    t0 = time.perf_counter()
    try:
        plan = prepare(g_p, g_t, cfg)
    except EmptyPattern as exc:
        print("error: %s: %s" % (args.pattern, exc), file=err)
        return EXIT_INPUT
    t1 = time.perf_counter()
    if args.dump_ordering:
        out.write(format_ordering(plan.ordering))
    if args.dump_domains and plan.domains is not None:
        out.write(format_domains(plan.domains))

    def show(mapping):
        out.write(" ".join(map(str, mapping)) + "\n")

    sink = None if args.count_only or args.output != "text" else show
    matches = [] if not args.count_only and args.output == "json" else None
    if matches is not None:
        sink = matches.append
    stats = run_parallel(g_p, g_t, cfg, workers=args.workers, group_size=args.task_group_size,
                         sink=sink, seed=args.seed, backend=args.backend, plan=plan)
    stats.preprocessing_time = t1 - t0
    stats.total_time = stats.preprocessing_time + stats.matching_time
    rec = bench.BenchRecord.from_stats(os.path.basename(args.pattern), os.path.basename(args.target),
                                       args.algorithm, args.workers, args.task_group_size, stats)
    if args.output == "csv":
        bench.write_csv([rec], out)
    elif args.output == "json":
        doc = {f: getattr(rec, f) for f in bench.FIELDS}
        if matches is not None:
            doc["matches"] = [list(m) for m in matches]
        out.write(json.dumps(doc) + "\n")
    else:
        out.write(
            "matches=%d search_space=%d preprocessing=%.6fs matching=%.6fs total=%.6fs "
            "steals_ok=%d steals_failed=%d timed_out=%s\n"
            % (stats.match_count, stats.search_space_size, stats.preprocessing_time,
               stats.matching_time, stats.total_time, stats.steals_ok, stats.steals_failed,
               "true" if stats.timed_out else "false"))
    return EXIT_TIMEOUT if stats.timed_out else EXIT_OK


def _cmd_bench(args, out, err) -> int:
    if not os.path.isdir(args.patterns):
        print("error: pattern directory %s not found" % args.patterns, file=err)
        return EXIT_INPUT
    algorithms = [a for a in args.algorithms.split(",") if a]
    bad = [a for a in algorithms if a not in ALGORITHMS]
    if bad:
        print("error: unknown algorithm(s) %s" % ",".join(bad), file=err)
        return EXIT_INPUT
    paths = sorted(p for p in glob.glob(os.path.join(args.patterns, "*")) if os.path.isfile(p))
    records = bench.sweep(paths, args.target, algorithms, args.workers, args.task_group_sizes,
                          args.repetitions, args.time_limit, args.ac_passes, args.seed)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            bench.write_csv(records, fh)
    else:
        bench.write_csv(records, out)
    return EXIT_OK


def _cmd_generate(args, out, err) -> int:
    try:
        spec = GeneratorSpec(args.nodes, args.density, args.alphabet, args.labels,
                             args.pattern_edges, args.mode, args.seed, args.degree_exponent,
                             args.arc_alphabet, args.label_sigma, args.label_mean)
        target = generate_target(spec, name="target")
        patterns = [extract_pattern(target, spec.pattern_edges, spec.mode, seed=spec.seed + 1 + i,
                                    name="pattern%d" % i) for i in range(args.patterns)]
    except InfeasibleSpec as exc:
        print("error: %s" % exc, file=err)
        return EXIT_INPUT
    os.makedirs(os.path.join(args.out, "patterns"), exist_ok=True)
    tpath = os.path.join(args.out, "target.graph")
    write_graph(target, tpath)
    for i, p in enumerate(patterns):
        write_graph(p, os.path.join(args.out, "patterns", "pattern%03d.graph" % i))
    out.write("target: %s (%d nodes, %d arcs); %d pattern(s) with %d arcs\n"
              % (tpath, target.node_count, target.arc_count, len(patterns), spec.pattern_edges))
    return EXIT_OK


def _cmd_verify(args, out, err) -> int:
    report = verify(args.count, args.seed, backend=args.backend)
    out.write(report.summary() + "\n")
    return EXIT_OK if report.passed else EXIT_INPUT


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    handler = {
        "enumerate": _cmd_enumerate,
        "bench": _cmd_bench,
        "generate": _cmd_generate,
        "verify": _cmd_verify,
    }[args.command]
    return handler(args, out, err)


if __name__ == "__main__":
    sys.exit(main())
