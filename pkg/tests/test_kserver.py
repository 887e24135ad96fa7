import random

import pytest
from hypothesis import given, strategies as st

from mfbst import AccessSequence, InvalidArgument, KeyNotFound, ResourceLimit
from mfbst.constants import load
from mfbst.fingers import optimal_k_finger_cost, verify_trace
from mfbst.kserver import (ServerState, TreeMetric, dc_run, double_coverage_step,
                           epoch_length, expert_runs, expert_universe,
                           lazy_wrap, mw_meta, switch_norm, switch_state)
from mfbst.seq import gen_random
from mfbst.tree import MutableTree, balanced_tree, path_tree, random_treap

C = load()


def test_dc_two_servers_converge():
    T = path_tree([1, 2, 3, 4, 5])
    st_ = ServerState.start(T, [1, 5])
    _, moved = double_coverage_step(st_, 3)
    assert moved == [2, 2] and st_.positions() == [3, 3]


def test_dc_zero_move_and_single_server():
    T = balanced_tree(range(1, 8))
    st_ = ServerState.start(T, [4, 1])
    assert double_coverage_step(st_, 1)[1] == [0, 0]
    X = [3, 7, 1, 6]
    rep = dc_run(T, X, 1, [4])
    walk = [4] + X
    assert rep.movement == sum(T.distance(a, b) for a, b in zip(walk, walk[1:]))
    assert rep.cost == rep.movement + len(X)
    with pytest.raises(KeyNotFound):
        double_coverage_step(st_, 99)


def test_constant_sequence_costs_m():
    T = balanced_tree(range(1, 8))
    rep = dc_run(T, [5] * 9, 2, [5, 1])
    assert rep.movement == 0 and rep.cost == 9


def test_lazy_example():
    T = path_tree([1, 2, 3, 4, 5])
    rep = dc_run(T, [3], 2, [1, 5])
    assert rep.snapshots == [[3, 3]] and rep.lazy_movement == 2
    moves = lazy_wrap(TreeMetric(T), [1, 5], [3], rep.snapshots)
    assert moves == [(0, 1, 3)]


def test_lazy_single_mover_unchanged():
    T = path_tree([1, 2, 3, 4, 5])
    rep = dc_run(T, [3, 4, 5], 2, [1, 2])
    # server 0 always has server 1 between it and the request
    assert rep.movement == rep.lazy_movement == 3


@given(st.integers(1, 12), st.integers(1, 3), st.integers(1, 40), st.integers(0, 10**6))
def test_dc_against_dp(n, k, m, seed):
    k = min(k, n)
    T = random_treap(n, seed)
    X = gen_random(n, m, seed + 1)
    pl = random.Random(seed).sample(range(1, n + 1), k)
    rep = dc_run(T, X, k, pl)
    assert verify_trace(rep.trace, X).ok
    assert rep.lazy_movement <= rep.movement
    for snap, x in zip(rep.snapshots, X):
        assert x in snap
    dp = optimal_k_finger_cost(T, X, k, initial=pl)
    assert rep.movement <= k * dp.movement + k * n


@given(st.integers(2, 24), st.integers(1, 3), st.integers(0, 10**6))
def test_switch_replays_to_target(n, k, seed):
    rng = random.Random(seed)
    A, B = random_treap(n, seed), random_treap(n, seed + 1)
    pos = [rng.randint(1, n) for _ in range(k)]
    goal = [rng.randint(1, n) for _ in range(k)]
    seg = switch_state(A, pos, B, goal)
    assert verify_trace(seg, []).ok
    mt = MutableTree(A)
    where = list(pos)
    for s in seg.steps:
        if s.op == "rotate":
            mt.rotate(where[s.finger])
        else:
            where[s.finger] = s.key
    assert mt.freeze() == B and where == goal
    assert len(seg.steps) <= C["c_switch"] * switch_norm(n)


def test_switch_path_to_balanced():
    P, B = path_tree(list(range(1, 8))), balanced_tree(range(1, 8))
    seg = switch_state(P, [1], B, [4])
    mt = MutableTree(P)
    for s in seg.steps:
        if s.op == "rotate":
            mt.rotate(s.key)
    assert mt.freeze() == B
    same = switch_state(B, [4], B, [4])
    assert len(same.steps) <= C["c_switch"] * 7
    with pytest.raises(InvalidArgument):
        switch_state(P, [1], balanced_tree(range(1, 9)), [1])


def test_universe_cap():
    with pytest.raises(ResourceLimit):
        expert_universe(9, 3)
    ex, sampled = expert_universe(9, 3, sample=50, seed=1)
    assert len(ex) == 50 and sampled


def test_single_expert():
    n, k = 4, 1
    ex, _ = expert_universe(n, k)
    one = ex[5:6]
    X = gen_random(n, 3 * epoch_length(n), 2)
    trace, rep, costs = mw_meta(X, n, k, 0.5, 0, experts=one)
    assert rep.switches == 1
    assert rep.mw_cost == costs[0] + rep.switch_cost
    assert verify_trace(trace, X).ok


def test_mw_bound_adversarial():
    n, k = 4, 1
    M = epoch_length(n)
    X = AccessSequence(n, tuple([1, 2] * (10 * M)))
    for eps in (0.25, 0.5):
        trace, rep, costs = mw_meta(X, n, k, eps, 3)
        assert verify_trace(trace, X).ok and trace.cost() == rep.mw_cost
        assert rep.best_expert_cost == min(costs)
        assert rep.holds()
        assert rep.switch_cost <= rep.switches * C["c_switch"] * switch_norm(n)


def test_mw_deterministic():
    n, k = 4, 2
    ex, _ = expert_universe(n, k)
    X = gen_random(n, 20 * epoch_length(n), 5)
    runs = expert_runs(list(X), ex, epoch_length(n))
    a = mw_meta(X, n, k, 0.5, 11, ex, runs)
    b = mw_meta(X, n, k, 0.5, 11, ex, runs)
    assert a[0].steps == b[0].steps and a[1] == b[1]
    with pytest.raises(InvalidArgument):
        mw_meta(X, n, k, 1.0, 0, ex, runs)
