import collections
import random

import pytest

from risge.generate import GeneratorSpec, generate_instance, random_small_instance
from risge.graph import LabeledDigraph, LabelRegistry
from risge.scheduler import (
    BUSY,
    DONE,
    EMPTY,
    NO_WORK,
    NOTHING,
    PAYLOAD,
    TaskGroup,
    Worker,
    WorkerCells,
    initial_distribution,
    run_parallel,
    simulate_schedule,
)
from risge.search import ALGORITHMS, EngineConfig, ListSink, Plan, enumerate_sequential, prepare


def pair(p_labels, p_arcs, t_labels, t_arcs):
    reg = LabelRegistry()
    return (LabeledDigraph(p_labels, p_arcs, registry=reg),
            LabeledDigraph(t_labels, t_arcs, registry=reg))


@pytest.fixture(scope="module")
def medium():
    t, p = generate_instance(GeneratorSpec(nodes=250, arc_density=0.03, alphabet=3,
                                           pattern_edges=6, mode="semi-dense", seed=5))
    return p, t


# -- initial distribution ------------------------------------------------

def test_distribution_examples():
    shares = initial_distribution(list(range(8)), 4, 4)
    assert [len(s) for s in shares] == [1, 1, 1, 1]
    assert [list(s[0].targets) for s in shares] == [[0, 4], [1, 5], [2, 6], [3, 7]]
    shares = initial_distribution([9], 4, 4)
    assert [len(s) for s in shares] == [1, 0, 0, 0]


def test_distribution_partitions_candidates():
    rng = random.Random(1)
    for _ in range(200):
        cands = rng.sample(range(1000), rng.randint(0, 100))
        w, g = rng.randint(1, 16), rng.randint(1, 8)
        shares = initial_distribution(cands, w, g)
        assert len(shares) == w
        flat = [t for s in shares for grp in s for t in grp.targets]
        assert collections.Counter(flat) == collections.Counter(cands)
        for s in shares:
            assert all(1 <= len(grp) <= g and grp.depth == 0 for grp in s)
        sizes = [sum(len(grp) for grp in s) for s in shares]
        assert max(sizes) - min(sizes) <= 1


# -- single worker mechanics ---------------------------------------------

def _worker(plan, workers=1, wid=0, cells=None, **kw):
    cells = cells or WorkerCells(workers, 4, plan.n)
    return Worker(wid, plan, cells, **kw), cells


def test_final_depth_group_reports_each_task():
    g_p, g_t = pair(["A", "B"], [(0, 1)], ["A", "B", "B", "B"], [(0, 1), (0, 2), (0, 3)])
    plan = prepare(g_p, g_t, EngineConfig("ri"))
    found = []
    w, _ = _worker(plan, emit=found.append)
    w.execute_task_group(TaskGroup(0, (0,)))
    assert w.matches == 3
    assert sorted(found) == sorted(enumerate_sequential_matches(g_p, g_t))
    w2, _ = _worker(plan)
    w2.mapping[0], w2.used[0], w2.depth = 0, 1, 1
    w2.execute_task_group(TaskGroup(1, (1, 2, 3)))
    assert w2.matches == 3


def enumerate_sequential_matches(g_p, g_t):
    sink = ListSink()
    enumerate_sequential(g_p, g_t, EngineConfig("ri"), sink)
    return sink.matches


def test_dead_end_pushes_nothing_and_retracts():
    g_p, g_t = pair(["A", "B"], [(0, 1)], ["A", "B"], [(1, 0)])
    plan = Plan(g_p, g_t, prepare(g_p, g_t, EngineConfig("ri")).ordering)
    w, _ = _worker(plan)
    w.execute_task_group(TaskGroup(0, (0,)))
    assert not w.deque and w.depth == 0 and not any(w.used)
    assert w.matches == 0


def test_no_request_is_a_noop(medium):
    plan = prepare(*medium, EngineConfig("ri"))
    w, cells = _worker(plan, workers=2)
    w.deque.append(TaskGroup(0, (1, 2)))
    w.process_task_requests()
    assert len(w.deque) == 1
    assert cells.transfer_state(1) == NOTHING


def test_request_is_answered_from_the_back(medium):
    plan = prepare(*medium, EngineConfig("ri"))
    w, cells = _worker(plan, workers=2)
    w.mapping[:3] = [7, 8, 9]
    w.deque.append(TaskGroup(0, (1, 2), gid=11))
    w.deque.append(TaskGroup(3, (4,), gid=12))
    assert cells.compare_exchange(0, EMPTY, 1)
    assert not cells.compare_exchange(0, EMPTY, 1)
    w.process_task_requests()
    assert cells.transfer_state(1) == PAYLOAD
    group, prefix = cells.receive(1)
    assert (group.depth, group.targets, group.gid, prefix) == (0, (1, 2), 11, ())
    assert [g.gid for g in w.deque] == [12]
    assert cells.requests[0] == EMPTY
    assert cells.transfer_state(1) == NOTHING


def test_empty_victim_refuses(medium):
    plan = prepare(*medium, EngineConfig("ri"))
    w, cells = _worker(plan, workers=2)
    cells.compare_exchange(0, EMPTY, 1)
    w.process_task_requests()
    assert cells.transfer_state(1) == NO_WORK
    assert cells.requests[0] == EMPTY


def test_sole_worker_terminates():
    g_p, g_t = pair(["A"], [], ["B"], [])
    plan = prepare(g_p, g_t, EngineConfig("ri"))
    w, cells = _worker(plan)
    statuses = [w.step() for _ in range(3)]
    assert DONE in statuses and cells.terminated
    assert w.steals_ok == w.steals_failed == 0


def test_two_worker_steal_handshake(medium):
    plan = prepare(*medium, EngineConfig("ri"))
    cells = WorkerCells(2, 4, plan.n)
    victim = Worker(0, plan, cells)
    thief = Worker(1, plan, cells)
    victim.load(initial_distribution(list(plan.root_candidates())[:8], 1, 4)[0])
    assert victim.step() == BUSY
    thief.step()                       # places request
    assert cells.requests[0] == 1 and thief.waiting == 0
    victim.step()                      # answers it
    thief.step()                       # consumes the payload
    assert thief.steals_ok == 1 and thief.deque
    assert thief.mapping[:thief.depth] == victim.mapping[:thief.depth]
    assert victim.color == 1


def test_termination_round_white_and_black(medium):
    plan = prepare(*medium, EngineConfig("ri"))
    cells = WorkerCells(3, 4, plan.n)
    ws = [Worker(i, plan, cells) for i in range(3)]
    # all idle: one white circuit then termination
    for _ in range(3):
        for w in ws:
            w.termination_round()
    assert cells.terminated

    cells = WorkerCells(3, 4, plan.n)
    ws = [Worker(i, plan, cells) for i in range(3)]
    ws[0].termination_round()          # start round, token to 1
    ws[1].color = 1                    # 1 handed work away
    ws[1].termination_round()
    ws[2].termination_round()
    assert ws[0].termination_round() == "continue"   # black token: new round
    assert not cells.terminated
    ws[1].termination_round(), ws[2].termination_round()
    assert ws[0].termination_round() == "terminate"


# -- whole runs ----------------------------------------------------------

def test_single_worker_reproduces_sequential(medium):
    p, t = medium
    for alg in ALGORITHMS:
        cfg = EngineConfig(alg)
        a, b = ListSink(), ListSink()
        s1 = enumerate_sequential(p, t, cfg, a)
        s2 = run_parallel(p, t, cfg, workers=1, sink=b)
        assert a.matches == b.matches
        assert s1.search_space_size == s2.search_space_size
        assert s2.steals_ok == s2.steals_failed == 0


@pytest.mark.parametrize("backend", ["process", "thread"])
def test_parallel_counts_match_sequential(backend):
    rng = random.Random(8)
    for k in range(12):
        spec = GeneratorSpec(nodes=rng.randint(40, 120), arc_density=0.04, alphabet=rng.randint(1, 4),
                             pattern_edges=rng.randint(2, 5), mode=rng.choice(["sparse", "dense"]),
                             seed=k)
        t, p = generate_instance(spec)
        alg = ALGORITHMS[k % 4]
        want = enumerate_sequential(p, t, EngineConfig(alg))
        for w in (2, 4, 8):
            sink = ListSink()
            got = run_parallel(p, t, EngineConfig(alg), workers=w, group_size=rng.randint(1, 6),
                               sink=sink, seed=k, backend=backend)
            assert got.match_count == want.match_count == len(sink.matches)
            assert len(set(sink.matches)) == len(sink.matches)
            assert got.search_space_size == want.search_space_size


def test_parallel_match_sets_small_instances():
    rng = random.Random(10)
    for k in range(40):
        g_p, g_t = random_small_instance(rng)
        want = set(enumerate_sequential_matches(g_p, g_t))
        sink = ListSink()
        run_parallel(g_p, g_t, EngineConfig("ri-ds"), workers=3, sink=sink, seed=k)
        assert set(sink.matches) == want and len(sink.matches) == len(want)


def test_empty_search_terminates():
    g_p, g_t = pair(["Z", "Z"], [(0, 1)], ["A", "B"], [(0, 1)])
    for w in (1, 4):
        s = run_parallel(g_p, g_t, EngineConfig("ri-ds"), workers=w)
        assert s.match_count == 0
        s = run_parallel(g_p, g_t, EngineConfig("ri"), workers=w)
        assert s.match_count == 0


def test_visited_states_equal_sequential(medium, monkeypatch):
    """Multiset of accepted (depth, prefix, target) extensions is unchanged."""
    p, t = medium
    seen = []
    original = Plan.accept

    def spy(self, depth, v, mapping, used):
        ok = original(self, depth, v, mapping, used)
        if ok:
            seen.append((depth, tuple(mapping[:depth]), v))
        return ok

    monkeypatch.setattr(Plan, "accept", spy)
    enumerate_sequential(p, t, EngineConfig("ri"))
    seq = collections.Counter(seen)
    for w in (1, 4):
        seen.clear()
        run_parallel(p, t, EngineConfig("ri"), workers=w, backend="thread")
        assert collections.Counter(seen) == seq


def test_transferred_prefix_is_valid(medium, monkeypatch):
    p, t = medium
    plan = prepare(p, t, EngineConfig("ri"))
    sent = []
    original = WorkerCells.send

    def checked_send(self, to, group, prefix):
        prefix = list(prefix[:group.depth])
        used = bytearray(plan.target_size)
        for d, v in enumerate(prefix):
            assert plan.accept(d, v, prefix, used)
            used[v] = 1
        sent.append(tuple(prefix))
        return original(self, to, group, prefix + [0] * (plan.n - len(prefix)))

    monkeypatch.setattr(WorkerCells, "send", checked_send)
    for seed in range(20):
        rep = simulate_schedule(plan, workers=4, group_size=2, seed=seed)
        assert rep["completed"] and not rep["violations"]
    assert sent


def test_stealing_disabled_still_correct(medium):
    p, t = medium
    want = enumerate_sequential(p, t, EngineConfig("ri")).match_count
    s = run_parallel(p, t, EngineConfig("ri"), workers=4, steal=False)
    assert s.match_count == want
    assert s.steals_ok == s.steals_failed == 0


def test_parallel_timeout_is_cooperative():
    t, p = generate_instance(GeneratorSpec(nodes=300, arc_density=0.2, alphabet=1,
                                           pattern_edges=12, mode="dense", seed=1))
    for backend in ("process", "thread"):
        s = run_parallel(p, t, EngineConfig("ri", time_limit=0.2), workers=3, backend=backend)
        assert s.timed_out
        assert s.matching_time < 5.0


def test_simulated_schedules_account_for_every_group(medium):
    plan = prepare(*medium, EngineConfig("ri-ds"))
    want = enumerate_sequential(*medium, EngineConfig("ri-ds")).match_count
    for seed in range(30):
        rep = simulate_schedule(plan, workers=2 + seed % 7, group_size=1 + seed % 4, seed=seed)
        assert rep["completed"] and not rep["violations"]
        assert sorted(rep["created"]) == sorted(rep["finished"])
        assert len(set(rep["created"])) == len(rep["created"])
        assert rep["stats"].match_count == want


def test_accounting_in_real_runs(medium):
    p, t = medium
    s = run_parallel(p, t, EngineConfig("ri"), workers=4, group_size=2, accounting=True)
    assert sorted(s.groups["created"]) == sorted(s.groups["finished"])
    assert len(set(s.groups["created"])) == len(s.groups["created"])


def test_argument_validation(medium):
    with pytest.raises(ValueError):
        run_parallel(*medium, workers=0)
    with pytest.raises(ValueError):
        run_parallel(*medium, group_size=0)
    with pytest.raises(ValueError):
        run_parallel(*medium, backend="mpi")
