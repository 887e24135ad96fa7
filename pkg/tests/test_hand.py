import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from mfbst import InvalidArgument, KeyNotFound
from mfbst.bstm import run_program
from mfbst.constants import load
from mfbst.fingers import FingerStep, FingerTrace, monotone_strategy, random_trace
from mfbst.hand import Unit, UnitTree, init_hand, simulate_step, simulate_trace, steiner_structure
from mfbst.seq import decompose_monotone, gen_k_monotone
from mfbst.tree import MutableTree, StaticTree, balanced_tree, path_tree, random_treap

C = load()


def zigzag():
    # 1 -> r 5 -> l 2 -> r 4 -> l 3
    left = {1: None, 5: 2, 2: None, 4: 3, 3: None}
    right = {1: 5, 5: None, 2: 4, 4: None, 3: None}
    return StaticTree(1, left, right)


def test_single_finger_at_root():
    T = balanced_tree(list(range(1, 8)))
    hs, Tp = init_hand(T, [4])
    assert hs.dump() == [{"kind": "pseudofinger", "lo": 4, "hi": 4, "size": 1}]
    assert Tp == T


def test_tendon_splits_around_lower_end():
    T = zigzag()
    st_ = steiner_structure(MutableTree(T), [3])
    assert st_.pseudo == {1, 3}
    assert st_.runs == [("p", [1]), ("h", [2]), ("p", [3]), ("h", [4, 5])]
    hs, Tp = init_hand(T, [3])
    assert Tp.validate() and sorted(Tp.nodes) == [1, 2, 3, 4, 5]


def test_knuckles_keep_their_shape():
    T = random_treap(60, 4)
    hs, Tp = init_hand(T, [T.inorder()[10]])
    for gap, root in hs.struct.knuckles.items():
        stack = [root]
        while stack:
            v = stack.pop()
            assert Tp.left[v] == T.left[v] and Tp.right[v] == T.right[v]
            stack += [c for c in (T.left[v], T.right[v]) if c is not None]


def test_bad_steps_rejected():
    T = balanced_tree([1, 2, 3])
    hs, _ = init_hand(T, [2])
    with pytest.raises(InvalidArgument):
        simulate_step(hs, FingerStep("move", 0, 2))
    with pytest.raises(InvalidArgument):
        simulate_step(hs, FingerStep("rotate", 0))
    with pytest.raises(InvalidArgument):
        simulate_step(hs, FingerStep("serve", 0, 1, 1))
    with pytest.raises(KeyNotFound):
        init_hand(T, [9])


def test_unit_tree_stays_red_black():
    import random
    rng = random.Random(3)
    t, live = UnitTree([Unit([i], "p") for i in range(7)]), {}
    for u in t:
        live[u.lo] = u
    for _ in range(3000):
        if live and rng.random() < 0.5:
            t.delete(live.pop(rng.choice(list(live))))
        else:
            key = Fraction(rng.randrange(10**6), 997)
            if key not in live:
                live[key] = Unit([key], "p")
                t.insert(live[key])
        assert t.check()
    assert [u.lo for u in t] == sorted(live)


def test_empty_trace_costs_only_the_build():
    T = random_treap(40, 2)
    rep = simulate_trace(T, [1, 40], FingerTrace(T, [1, 40], []), [])
    assert rep.step_cost == 0 and rep.cost == rep.init_cost
    assert rep.init_cost <= C["c_init"] * 40


def test_single_finger_child_move_is_constant():
    T = balanced_tree(list(range(1, 16)))
    hs, _ = init_hand(T, [8])
    seg = simulate_step(hs, FingerStep("move", 0, 4))[1]
    assert len(seg) <= C["c_sim"]


def test_monotone_trace_k1():
    n = 50
    T = random_treap(n, 7)
    X = gen_k_monotone(n, 1, n, 7)
    tr = monotone_strategy(T, X, decompose_monotone(X))
    rep = simulate_trace(T, tr.placement, tr, X)
    assert run_program(rep.program, X).ok
    assert rep.cost <= C["c_sim"] * len(tr.steps) + C["c_init"] * n


@given(st.integers(5, 80), st.sampled_from([1, 2, 3, 5]), st.integers(0, 10**6),
       st.floats(0, 0.3))
def test_random_traces_certified(n, k, seed, rot):
    T = random_treap(n, seed)
    tr, X = random_trace(T, k, 300, seed, rotate_rate=rot)
    rep = simulate_trace(T, tr.placement, tr, X)
    run = run_program(rep.program, X)
    assert run.ok, run.message
    assert sorted(run.final.nodes) == sorted(T.nodes)
    assert rep.max_units <= 6 * k
    assert rep.max_pseudo_depth <= C["c_h"] * math.log2(k + 1)
    assert rep.max_unit_delta <= C["c_delta"]


def test_program_is_online():
    T = random_treap(50, 1)
    tr, X = random_trace(T, 3, 200, 1, rotate_rate=0.1)
    full = simulate_trace(T, tr.placement, tr, X).program.ops
    half = FingerTrace(T, tr.placement, tr.steps[:100])
    prefix = simulate_trace(T, tr.placement, half).program.ops
    assert full[:len(prefix)] == prefix
