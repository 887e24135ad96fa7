import json

import pytest
from hypothesis import given, strategies as st

from mfbst import AccessSequence, InvalidArgument, ResourceLimit
from mfbst.fingers import (FingerStep, FingerTrace, hierarchy_strategy, hierarchy_tree,
                           k_finger_costs_over_trees, monotone_strategy,
                           optimal_k_finger_cost, optimal_k_finger_cost_over_trees,
                           strategy_to_trace, verify_trace)
from mfbst.seq import (decompose_monotone, gen_k_monotone, gen_random,
                       gen_tilted_grid)
from mfbst.tree import balanced_tree, path_tree, random_treap, strip_auxiliary

HIERARCHY_C = 3


def brute_force_cost(T, X, k):
    """Exhaustive search over placements and assignments (tiny inputs only)."""
    from itertools import combinations, product
    best = None
    for start in combinations(T.inorder(), k):
        for assign in product(range(k), repeat=len(X)):
            pos = list(start)
            c = 0
            for x, f in zip(X, assign):
                c += 1 + T.distance(pos[f], x)
                pos[f] = x
            best = c if best is None else min(best, c)
    return best


def test_small_examples():
    T = balanced_tree([1, 2, 3])
    X = [1, 3, 1, 3]
    assert optimal_k_finger_cost(T, X, 1).cost == 10
    assert optimal_k_finger_cost(T, X, 2).cost == 4
    cost, best = optimal_k_finger_cost_over_trees(AccessSequence(2, (1, 2)), 1)
    assert cost == 3 and best.validate()


@given(st.integers(1, 5), st.integers(0, 10**6), st.integers(1, 5), st.integers(1, 2))
def test_dp_matches_brute_force(n, seed, m, k):
    T = random_treap(n, seed)
    X = list(gen_random(n, m, seed))
    k = min(k, n)
    assert optimal_k_finger_cost(T, X, k).cost == brute_force_cost(T, X, k)


@given(st.integers(1, 9), st.integers(0, 10**6), st.integers(1, 25))
def test_dp_monotone_in_k_and_trace_round_trip(n, seed, m):
    T = random_treap(n, seed)
    X = gen_random(n, m, seed + 1)
    prev = None
    for k in range(1, n + 1):
        r = optimal_k_finger_cost(T, X, k)
        if prev is not None:
            assert r.cost <= prev
        prev = r.cost
        tr = strategy_to_trace(T, r.placement, r.assignment, X)
        rep = verify_trace(tr, X)
        assert rep.ok, rep.message
        assert rep.move_steps == r.movement == r.cost - m
    assert prev == m


@given(st.integers(1, 10), st.integers(0, 10**6), st.integers(1, 30), st.integers(1, 4))
def test_private_fingers(n, seed, m, k):
    import random
    rng = random.Random(seed)
    keys = rng.sample(range(1, n + 1), min(k, n))
    X = [rng.choice(keys) for _ in range(m)]
    assert optimal_k_finger_cost(random_treap(n, seed), X, k).cost == m


def test_fixed_initial_placement():
    T = path_tree([1, 2, 3, 4])
    r = optimal_k_finger_cost(T, [4], 1, initial=[1])
    assert r.cost == 1 + 3 and r.placement == [1]


def test_cap():
    with pytest.raises(ResourceLimit):
        optimal_k_finger_cost(balanced_tree(list(range(1, 40))), [1], 8)


def test_monotone_chain_over_trees():
    X = gen_random(5, 8, 3)
    res = k_finger_costs_over_trees(X, range(1, 6))
    costs = [res[k][0] for k in range(1, 6)]
    assert costs == sorted(costs, reverse=True)
    assert costs[-1] == len(X)


def test_trace_edge_cases():
    T = path_tree([1, 2, 3], root_at_min=True)
    tr = strategy_to_trace(T, [1], [0], [3])
    assert [s.op for s in tr.steps] == ["move", "move", "serve"]
    assert [s.key for s in tr.steps[:2]] == [2, 3]
    tr = strategy_to_trace(T, [2], [0], [2])
    assert len(tr.steps) == 1
    assert verify_trace(FingerTrace(T, [1], []), []).ok
    with pytest.raises(InvalidArgument):
        strategy_to_trace(T, [1], [1], [3])


def test_verify_rejects_bad_steps():
    T = balanced_tree([1, 2, 3])
    bad = FingerTrace(T, [2], [FingerStep("serve", 0, 2, 1)])
    rep = verify_trace(bad, [1])
    assert not rep.ok and rep.error_index == 0
    jump = FingerTrace(T, [1], [FingerStep("move", 0, 3), FingerStep("serve", 0, 3, 1)])
    assert verify_trace(jump, [3]).error_index == 0
    rot = FingerTrace(T, [1], [FingerStep("rotate", 0, 1), FingerStep("serve", 0, 1, 1)])
    rep = verify_trace(rot, [1])
    assert rep.ok and rep.rotation_steps == 1


def test_trace_jsonl_round_trip():
    T = hierarchy_tree(6, 2)
    _, tr = hierarchy_strategy(6, 2)
    steps = FingerTrace.steps_from_jsonl(tr.to_jsonl())
    assert steps == tr.steps
    assert all(set(json.loads(line)) == {"op", "finger", "key", "t"}
               for line in tr.to_jsonl().splitlines())
    assert T == tr.tree


def test_monotone_strategy_examples():
    T = path_tree(list(range(1, 8)), root_at_min=True)
    X = AccessSequence(7, tuple(range(1, 8)))
    tr = monotone_strategy(T, X, decompose_monotone(X))
    assert verify_trace(tr, X).move_steps == 6
    X = gen_tilted_grid(6, 2)
    T = balanced_tree(list(range(1, 7)))
    tr = monotone_strategy(T, X, decompose_monotone(X))
    assert verify_trace(tr, X).move_steps <= 2 * 2 * 5


@given(st.integers(1, 64), st.integers(1, 6), st.integers(1, 64), st.integers(0, 10**6))
def test_monotone_strategy_bound(n, k, m, seed):
    if n < k:
        return
    X = gen_k_monotone(n, k, m, seed)
    part = decompose_monotone(X)
    T = random_treap(n, seed)
    tr = monotone_strategy(T, X, part)
    rep = verify_trace(tr, X)
    assert rep.ok
    assert rep.move_steps + len(X) <= len(X) + 3 * len(part.chains) * n


def test_monotone_strategy_rejects_bad_partition():
    from mfbst.seq import MonotonePartition
    X = AccessSequence(3, (3, 1))
    with pytest.raises(InvalidArgument):
        monotone_strategy(balanced_tree([1, 2, 3]), X, MonotonePartition([[0, 1]]))


@pytest.mark.parametrize("n,k", [(6, 2), (8, 1), (16, 4), (64, 8), (1024, 4)])
def test_hierarchy_strategy(n, k):
    T, tr = hierarchy_strategy(n, k)
    assert T.validate() and sorted(T.real_keys) == list(range(1, n + 1))
    X = gen_tilted_grid(n, k)
    rep = verify_trace(tr, X)
    assert rep.ok
    assert tr.cost() <= HIERARCHY_C * n


def test_hierarchy_strategy_dominates_dp():
    T, tr = hierarchy_strategy(8, 2)
    X = gen_tilted_grid(8, 2)
    assert optimal_k_finger_cost_over_trees(X, 2)[0] <= tr.cost()
    T, tr = hierarchy_strategy(16, 4)
    X = gen_tilted_grid(16, 4)
    assert optimal_k_finger_cost(T, X, 4).cost <= tr.cost()
    assert optimal_k_finger_cost(strip_auxiliary(T), X, 4).cost <= tr.cost()


def test_hierarchy_needs_divisor():
    with pytest.raises(InvalidArgument):
        hierarchy_strategy(7, 2)
