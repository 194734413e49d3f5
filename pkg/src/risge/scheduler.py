"""Receiver-initiated work stealing over private deques.

Each worker owns a deque of :class:`TaskGroup` objects.  The front
(right end) is worked in depth-first order so the worker's own mapping
stack is always a valid prefix for every queued group; idle workers ask
a random busy peer for work through three shared arrays:

``work_available[i]``
    1 while worker ``i`` has queued groups (may be stale).
``requests[i]``
    id of the worker asking ``i`` for work, or ``EMPTY``.  Written only
    through :meth:`WorkerCells.compare_exchange`.
``transfers[j]``
    reply to worker ``j``: ``NOTHING``, ``NO_WORK`` or a payload holding
    the back group of the victim plus the victim's mapping prefix.

Termination uses a token passed around the ring of workers: a worker
that handed work to a peer since it last forwarded the token turns the
token black; worker 0 declares termination once a white token returns
to it while it is itself white and idle.

:class:`Worker` is a non-blocking state machine (:meth:`Worker.step`)
so the same code runs in forked processes, in threads, or under
:func:`simulate_schedule`, which interleaves workers at random inside
one thread to stress the protocol.
"""
from __future__ import annotations

import collections
import multiprocessing
import random
import threading
import time
import traceback
from ctypes import c_int64
from typing import Optional

from .search import (
    TIME_CHECK_INTERVAL,
    EngineConfig,
    Plan,
    SearchStats,
    as_sink,
    prepare,
)

__all__ = [
    "Task",
    "TaskGroup",
    "WorkerCells",
    "Worker",
    "initial_distribution",
    "run_parallel",
    "simulate_schedule",
    "WorkerFailed",
]

EMPTY = -1
NOTHING, NO_WORK, PAYLOAD = 0, 1, 2
WHITE, BLACK = 0, 1
BUSY, IDLE, DONE = "busy", "idle", "done"

# control block slots
_TERMINATED, _TIMED_OUT, _TOKEN_HOLDER, _TOKEN_COLOR = range(4)
# transfer cell header: state, depth, count, group id
_HEADER = 4
# int64 slots per cache line
_LINE = 8

_GID_SHIFT = 40


class WorkerFailed(RuntimeError):
    pass


Task = collections.namedtuple("Task", "depth target")


class TaskGroup:
    """Sibling tasks sharing a depth; ``pos`` is the next task to run."""

    __slots__ = ("depth", "targets", "pos", "gid")

    def __init__(self, depth: int, targets, gid: int = 0, pos: int = 0):
        self.depth = depth
        self.targets = targets
        self.pos = pos
        self.gid = gid

    def remaining(self):
        return self.targets[self.pos:]

    def tasks(self):
        return [Task(self.depth, t) for t in self.remaining()]

    def __len__(self):
        return len(self.targets) - self.pos

    def __repr__(self):
        return "TaskGroup(depth=%d, targets=%r)" % (self.depth, list(self.remaining()))


def _chunks(seq, size):
    return [tuple(seq[i:i + size]) for i in range(0, len(seq), size)]


def initial_distribution(root_candidates, workers: int, group_size: int = 4) -> list:
    """Deal root candidates round-robin, then coalesce each share.

    Returns one list of depth-0 :class:`TaskGroup` per worker, ordered
    front first.
    """
    if workers < 1 or group_size < 1:
        raise ValueError("workers and group_size must be >= 1")
    shares = [list(root_candidates[w::workers]) for w in range(workers)]
    return [[TaskGroup(0, c) for c in _chunks(share, group_size)] for share in shares]


class WorkerCells:
    """Shared communication arrays for ``workers`` workers.

    ``lock_factory`` decides the sharing domain: ``multiprocessing``
    locks for forked workers, ``threading.Lock`` otherwise.  Arrays are
    raw shared memory either way.
    """

    def __init__(self, workers: int, group_size: int, pattern_size: int, lock_factory=threading.Lock):
        from multiprocessing.sharedctypes import RawArray

        self.workers = workers
        self.group_size = group_size
        self.work_available = RawArray("b", workers)
        self.requests = RawArray("i", [EMPTY] * workers)
        self.stride = -(-(_HEADER + group_size + pattern_size) // _LINE) * _LINE
        self.transfers = RawArray(c_int64, self.stride * workers)
        self.control = RawArray(c_int64, _LINE)
        self.locks = [lock_factory() for _ in range(workers)]

    def compare_exchange(self, cell: int, expected: int, new: int) -> bool:
        with self.locks[cell]:
            if self.requests[cell] != expected:
                return False
            self.requests[cell] = new
            return True

    @property
    def terminated(self) -> bool:
        return self.control[_TERMINATED] != 0

    @property
    def timed_out(self) -> bool:
        return self.control[_TIMED_OUT] != 0

    def transfer_state(self, wid: int) -> int:
        return self.transfers[wid * self.stride]

    def send(self, to: int, group: TaskGroup, prefix) -> None:
        base = to * self.stride
        tr = self.transfers
        targets = group.remaining()
        tr[base + 1] = group.depth
        tr[base + 2] = len(targets)
        tr[base + 3] = group.gid
        off = base + _HEADER
        for i, t in enumerate(targets):
            tr[off + i] = t
        off += self.group_size
        for i in range(group.depth):
            tr[off + i] = prefix[i]
        # publish after the body; the lock acts as a release barrier
        with self.locks[to]:
            tr[base] = PAYLOAD

    def refuse(self, to: int) -> None:
        with self.locks[to]:
            self.transfers[to * self.stride] = NO_WORK

    def receive(self, wid: int):
        """Consume a payload: ``(TaskGroup, prefix)``; resets the cell."""
        base = wid * self.stride
        tr = self.transfers
        with self.locks[wid]:
            depth, count, gid = tr[base + 1], tr[base + 2], tr[base + 3]
            off = base + _HEADER
            targets = tuple(tr[off:off + count])
            off += self.group_size
            prefix = tuple(tr[off:off + depth])
            tr[base] = NOTHING
        return TaskGroup(depth, targets, gid), prefix

    def clear_reply(self, wid: int) -> None:
        self.transfers[wid * self.stride] = NOTHING


class Worker:
    """One search worker; drive it by calling :meth:`step` until DONE."""

    def __init__(
        self,
        wid: int,
        plan: Plan,
        cells: WorkerCells,
        emit=None,
        seed: int = 0,
        steal: bool = True,
        deadline: Optional[float] = None,
        accounting: bool = False,
    ):
        self.wid = wid
        self.plan = plan
        self.cells = cells
        self.workers = cells.workers
        self.group_size = cells.group_size
        self.emit = emit
        self.rng = random.Random(seed * 1000003 + wid)
        self.steal = steal
        self.deadline = deadline

        self.deque: collections.deque = collections.deque()
        self.mapping = [0] * plan.n
        self.used = bytearray(plan.target_size)
        self.depth = 0
        self.color = WHITE
        self.round_active = False
        self.waiting: Optional[int] = None
        self._serial = 0
        self._next_time_check = TIME_CHECK_INTERVAL

        self.checks = 0
        self.matches = 0
        self.tasks_executed = 0
        self.steals_ok = 0
        self.steals_failed = 0
        self.groups_created = 0
        self.groups_finished = 0
        self.accounting = accounting
        self.created_ids: list = []
        self.finished_ids: list = []

    # -- deque -----------------------------------------------------------

    def new_group(self, depth, targets) -> TaskGroup:
        self._serial += 1
        gid = (self.wid << _GID_SHIFT) | self._serial
        self.groups_created += 1
        if self.accounting:
            self.created_ids.append(gid)
        return TaskGroup(depth, targets, gid)

    def load(self, groups) -> None:
        """Place initial groups; ``groups[0]`` ends up at the front."""
        for g in reversed(groups):
            self.deque.append(self.new_group(g.depth, g.targets))
        self.cells.work_available[self.wid] = 1 if self.deque else 0

    def _finish(self, group: TaskGroup):
        self.groups_finished += 1
        if self.accounting:
            self.finished_ids.append(group.gid)

    def take_task(self):
        group = self.deque[-1]
        t = group.targets[group.pos]
        group.pos += 1
        if group.pos == len(group.targets):
            self.deque.pop()
            self._finish(group)
        return group.depth, t

    # -- main loop -------------------------------------------------------

    def step(self) -> str:
        cells = self.cells
        if cells.control[_TERMINATED]:
            return DONE
        if self.deque:
            depth, t = self.take_task()
            cells.work_available[self.wid] = 1 if self.deque else 0
            self.process_task_requests()
            self.execute_task(depth, t)
            return BUSY
        if cells.work_available[self.wid]:
            cells.work_available[self.wid] = 0
        if self.acquire_step():
            return BUSY
        return DONE if cells.control[_TERMINATED] else IDLE

    def execute_task(self, depth: int, t: int) -> None:
        """Extend the mapping with ``mu[depth] -> t`` and spawn checked children."""
        mapping, used = self.mapping, self.used
        for k in range(depth, self.depth):
            used[mapping[k]] = 0
        mapping[depth] = t
        self.tasks_executed += 1
        nxt = depth + 1
        plan = self.plan
        if nxt == plan.n:
            self.depth = depth
            self.matches += 1
            if self.emit is not None:
                self.emit(plan.to_pattern_order(mapping))
            return
        used[t] = 1
        self.depth = nxt
        accept = plan.accept
        accepted = [v for v in plan.candidates(nxt, mapping) if accept(nxt, v, mapping, used)]
        self.checks += len(plan.candidates(nxt, mapping))
        if self.checks >= self._next_time_check:
            self._next_time_check = self.checks + TIME_CHECK_INTERVAL
            if self.deadline is not None and time.perf_counter() > self.deadline:
                self.cells.control[_TIMED_OUT] = 1
                self.cells.control[_TERMINATED] = 1
        if not accepted:
            used[t] = 0
            self.depth = depth
            return
        for chunk in reversed(_chunks(accepted, self.group_size)):
            self.deque.append(self.new_group(nxt, chunk))
        self.cells.work_available[self.wid] = 1

    def execute_task_group(self, group: TaskGroup) -> None:
        """Run every task of ``group`` to completion, depth first."""
        self.deque.append(group)
        base = len(self.deque) - 1
        while len(self.deque) > base:
            depth, t = self.take_task()
            self.execute_task(depth, t)

    def process_task_requests(self) -> None:
        cells = self.cells
        thief = cells.requests[self.wid]
        if thief == EMPTY:
            return
        if self.deque:
            group = self.deque.popleft()
            cells.send(thief, group, self.mapping)
            self.color = BLACK
            cells.work_available[self.wid] = 1 if self.deque else 0
        else:
            cells.refuse(thief)
        cells.compare_exchange(self.wid, thief, EMPTY)

    def acquire_step(self) -> bool:
        """One non-blocking round of the idle protocol; True once work arrived."""
        cells = self.cells
        self.process_task_requests()
        if self.waiting is not None:
            state = cells.transfer_state(self.wid)
            if state == PAYLOAD:
                group, prefix = cells.receive(self.wid)
                self._install(group, prefix)
                self.waiting = None
                self.steals_ok += 1
                return True
            if state == NO_WORK:
                cells.clear_reply(self.wid)
                self.waiting = None
                self.steals_failed += 1
        elif self.steal and self.workers > 1:
            avail = cells.work_available
            victims = [i for i in range(self.workers) if i != self.wid and avail[i]]
            if victims:
                victim = victims[self.rng.randrange(len(victims))]
                if cells.compare_exchange(victim, EMPTY, self.wid):
                    self.waiting = victim
        self.termination_round()
        return False

    def _install(self, group: TaskGroup, prefix) -> None:
        mapping, used = self.mapping, self.used
        for k in range(self.depth):
            used[mapping[k]] = 0
        for k, v in enumerate(prefix):
            mapping[k] = v
            used[v] = 1
        self.depth = len(prefix)
        self.deque.append(group)
        self.cells.work_available[self.wid] = 1

    def termination_round(self) -> str:
        """Token handling for an idle worker: 'terminate' or 'continue'."""
        ctrl = self.cells.control
        if ctrl[_TOKEN_HOLDER] != self.wid:
            return "continue"
        nxt = (self.wid + 1) % self.workers
        if self.wid == 0:
            if self.round_active and ctrl[_TOKEN_COLOR] == WHITE and self.color == WHITE:
                ctrl[_TERMINATED] = 1
                return "terminate"
            self.round_active = True
            self.color = WHITE
            ctrl[_TOKEN_COLOR] = WHITE
        else:
            if self.color == BLACK:
                ctrl[_TOKEN_COLOR] = BLACK
            self.color = WHITE
        ctrl[_TOKEN_HOLDER] = nxt
        return "continue"

    def holds_work(self) -> bool:
        return bool(self.deque)

    def summary(self) -> dict:
        return {
            "wid": self.wid,
            "checks": self.checks,
            "matches": self.matches,
            "tasks": self.tasks_executed,
            "steals_ok": self.steals_ok,
            "steals_failed": self.steals_failed,
            "groups_created": self.groups_created,
            "groups_finished": self.groups_finished,
            "created_ids": self.created_ids,
            "finished_ids": self.finished_ids,
        }


def _drive(worker: Worker) -> None:
    """Run ``worker`` to termination with bounded backoff while idle."""
    pause = 0.0
    step = worker.step
    while True:
        status = step()
        if status == BUSY:
            pause = 0.0
        elif status == IDLE:
            time.sleep(pause)
            pause = min(pause * 2 or 1e-5, 1e-3)
        else:
            return


def _root_groups(plan: Plan, workers: int, group_size: int):
    """Check the root candidates once; returns (groups per worker, checks)."""
    used = bytearray(plan.target_size)
    cands = plan.root_candidates()
    roots = [v for v in cands if plan.accept(0, v, (), used)]
    return initial_distribution(roots, workers, group_size), len(cands)


def _aggregate(stats: SearchStats, summaries, root_checks: int) -> None:
    summaries = sorted(summaries, key=lambda s: s["wid"])
    stats.search_space_size = root_checks + sum(s["checks"] for s in summaries)
    stats.match_count = sum(s["matches"] for s in summaries)
    stats.steals_ok = sum(s["steals_ok"] for s in summaries)
    stats.steals_failed = sum(s["steals_failed"] for s in summaries)
    stats.worker_tasks = [s["tasks"] for s in summaries]


class _BatchEmitter:
    def __init__(self, queue, wid, size=512):
        self.queue = queue
        self.wid = wid
        self.size = size
        self.buf = []

    def __call__(self, mapping):
        self.buf.append(mapping)
        if len(self.buf) >= self.size:
            self.flush()

    def flush(self):
        if self.buf:
            self.queue.put(("matches", self.wid, self.buf))
            self.buf = []


def _process_main(wid, plan, cells, groups, queue, want_matches, seed, steal, deadline, accounting):
    try:
        emit = _BatchEmitter(queue, wid) if want_matches else None
        w = Worker(wid, plan, cells, emit, seed, steal, deadline, accounting)
        w.load(groups)
        _drive(w)
        if emit is not None:
            emit.flush()
        queue.put(("done", wid, w.summary()))
    except BaseException:
        cells.control[_TERMINATED] = 1
        queue.put(("error", wid, traceback.format_exc()))


def run_parallel(
    g_p,
    g_t,
    cfg: EngineConfig = EngineConfig(),
    workers: int = 1,
    group_size: int = 4,
    sink=None,
    seed: int = 0,
    steal: bool = True,
    backend: str = "process",
    plan: Optional[Plan] = None,
    accounting: bool = False,
) -> SearchStats:
    """Enumerate all matches with ``workers`` work-stealing workers.

    ``backend`` is ``"process"`` (forked processes, real parallelism) or
    ``"thread"``.  A single worker always runs in the calling process.
    ``steal=False`` freezes work requests so workers only run their
    initial share.  With ``accounting`` the returned stats carry a
    ``groups`` attribute listing created and finished group ids.
    """
    if workers < 1 or group_size < 1:
        raise ValueError("workers and group_size must be >= 1")
    if backend not in ("process", "thread"):
        raise ValueError("backend must be 'process' or 'thread'")
    sink = as_sink(sink)
    want_matches = sink is not None and sink.wants_mappings
    t0 = time.perf_counter()
    if plan is None:
        plan = prepare(g_p, g_t, cfg)
    t1 = time.perf_counter()
    stats = SearchStats(preprocessing_time=t1 - t0)
    deadline = None if cfg.time_limit is None else t1 + cfg.time_limit
    summaries = []
    root_checks = 0
    if not plan.empty:
        groups, root_checks = _root_groups(plan, workers, group_size)
        if workers == 1 or backend == "thread":
            summaries = _run_threads(plan, groups, workers, group_size, sink if want_matches else None,
                                     seed, steal, deadline, accounting)
        else:
            summaries = _run_processes(plan, groups, workers, group_size, sink if want_matches else None,
                                       seed, steal, deadline, accounting)
        stats.timed_out = any(s.get("timed_out") for s in summaries)
    _aggregate(stats, summaries, root_checks)
    if sink is not None and not want_matches:
        sink.count += stats.match_count
    t2 = time.perf_counter()
    stats.matching_time = t2 - t1
    stats.total_time = t2 - t0
    if accounting:
        stats.groups = {
            "created": [i for s in summaries for i in s["created_ids"]],
            "finished": [i for s in summaries for i in s["finished_ids"]],
        }
    return stats


def _run_threads(plan, groups, workers, group_size, sink, seed, steal, deadline, accounting):
    cells = WorkerCells(workers, group_size, plan.n)
    lock = threading.Lock()

    def emit(mapping):
        with lock:
            sink(mapping)

    ws = [Worker(i, plan, cells, emit if sink is not None else None, seed, steal, deadline, accounting)
          for i in range(workers)]
    for w, g in zip(ws, groups):
        w.load(g)
    if workers == 1:
        _drive(ws[0])
    else:
        threads = [threading.Thread(target=_drive, args=(w,), daemon=True) for w in ws]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
    out = [w.summary() for w in ws]
    if cells.timed_out:
        for s in out:
            s["timed_out"] = True
    return out


def _run_processes(plan, groups, workers, group_size, sink, seed, steal, deadline, accounting):
    ctx = multiprocessing.get_context("fork")
    cells = WorkerCells(workers, group_size, plan.n, lock_factory=ctx.Lock)
    queue = ctx.Queue(maxsize=4 * workers)
    procs = [
        ctx.Process(
            target=_process_main,
            args=(i, plan, cells, groups[i], queue, sink is not None, seed, steal, deadline, accounting),
            daemon=True,
        )
        for i in range(workers)
    ]
    for p in procs:
        p.start()
    summaries, errors = [], []
    pending = workers
    while pending:
        try:
            kind, wid, payload = queue.get(timeout=0.5)
        except Exception:
            if not any(p.is_alive() for p in procs) and queue.empty():
                errors.append("worker exited without reporting")
                break
            continue
        if kind == "matches":
            for m in payload:
                sink(m)
        elif kind == "done":
            summaries.append(payload)
            pending -= 1
        else:
            errors.append("worker %d: %s" % (wid, payload))
            pending -= 1
    for p in procs:
        p.join(timeout=5)
        if p.is_alive():
            p.terminate()
    queue.close()
    if errors:
        raise WorkerFailed("; ".join(errors))
    if cells.timed_out:
        for s in summaries:
            s["timed_out"] = True
    return summaries


def simulate_schedule(
    plan: Plan,
    workers: int,
    group_size: int = 4,
    seed: int = 0,
    steal: bool = True,
    max_burst: int = 3,
    max_steps: int = 10_000_000,
) -> dict:
    """Run the protocol in one thread under a random interleaving.

    At each tick a uniformly random live worker performs 1..max_burst
    steps.  After every step the global work inventory is inspected;
    returns a report with match/check totals, group accounting and any
    safety violations (termination declared while work remained).
    """
    rng = random.Random(seed)
    cells = WorkerCells(workers, group_size, plan.n)
    matches = []
    ws = [Worker(i, plan, cells, matches.append, seed, steal, None, True) for i in range(workers)]
    root_checks = 0
    if not plan.empty:
        groups, root_checks = _root_groups(plan, workers, group_size)
        for w, g in zip(ws, groups):
            w.load(g)
    violations = []
    steps = 0
    live = list(range(workers))
    while live and steps < max_steps:
        w = ws[rng.choice(live)]
        for _ in range(rng.randint(1, max_burst)):
            steps += 1
            status = w.step()
            if cells.terminated:
                remaining = [x.wid for x in ws if x.holds_work()]
                in_flight = [i for i in range(workers) if cells.transfer_state(i) == PAYLOAD]
                if remaining or in_flight:
                    violations.append((steps, remaining, in_flight))
            if status == DONE:
                live.remove(w.wid)
                break
    summaries = [w.summary() for w in ws]
    stats = SearchStats()
    _aggregate(stats, summaries, root_checks)
    return {
        "stats": stats,
        "matches": matches,
        "created": [i for s in summaries for i in s["created_ids"]],
        "finished": [i for s in summaries for i in s["finished_ids"]],
        "violations": violations,
        "steps": steps,
        "completed": not live,
    }
