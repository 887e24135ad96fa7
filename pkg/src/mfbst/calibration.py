"""Measure the constants that the checks assert against.

Randomized quantities get a 25% margin on top of the worst value seen;
quantities computed exhaustively over the whole checked domain are frozen
at their exact maximum. Values are rounded up to a multiple of 0.25.
"""
from __future__ import annotations

import math
import random

from .bstm import DequeTree
from .checks import HIER_KS, hierarchy_sizes, strip_distortion
from .constants import NAMES
from .decomp import gen_decomposable, reference_tree
from .fingers import (hierarchy_strategy, monotone_strategy, random_trace,
                      strategy_to_trace)
from .hand import simulate_trace
from .kserver import switch_norm, switch_state
from .seq import AccessSequence, decompose_monotone, gen_k_monotone
from .tree import balanced_tree, path_tree, random_treap

MARGIN = 1.25


def _rng(tag, seed):
    # string seeds keep calibration draws apart from the checks' own streams
    return random.Random(f"calibrate-{tag}-{seed}")


def _up(x, margin=MARGIN):
    return math.ceil(x * margin * 4 - 1e-9) / 4


def _hand_traces(n, seed, steps):
    rng = _rng("hand", seed)
    for k in (1, 2, 3, 4, 8, 16):
        T = random_treap(n, rng.randrange(10**6))
        for rot in (0.0, 0.05, 0.2):
            tr, _ = random_trace(T, k, steps, rng.randrange(10**6), rotate_rate=rot)
            yield "random", T, tr
        X = gen_k_monotone(n, k, n, rng.randrange(10**6))
        yield "sweep", T, monotone_strategy(T, X, decompose_monotone(X))
        keys = T.inorder()
        a, b = keys[0], keys[-1]
        X = AccessSequence(n, tuple([a, b] * (steps // (4 * n) + 2)))
        yield "oscillation", T, strategy_to_trace(T, [T.root] * k, [0] * len(X), X)
    for T in (path_tree(list(range(1, n + 1))), balanced_tree(range(1, n + 1))):
        tr, _ = random_trace(T, 4, steps, seed)
        yield "shape", T, tr


def measure_hand(n=200, seed=0, steps=3000):
    out = {"c_sim": 0.0, "c_init": 0.0, "c_h": 0.0, "c_delta": 0}
    for _, T, tr in _hand_traces(n, seed, steps):
        rep = simulate_trace(T, tr.placement, tr, check=True)
        lg = math.log2(tr.k + 1)
        out["c_sim"] = max(out["c_sim"], rep.per_step_cost() / lg)
        out["c_init"] = max(out["c_init"], rep.init_cost / len(T))
        out["c_h"] = max(out["c_h"], rep.max_pseudo_depth / lg)
        out["c_delta"] = max(out["c_delta"], rep.max_unit_delta)
    return out


def measure_deque(seed=0, ops=20_000):
    worst = 0.0
    rng = _rng("deque", seed)
    for weights in ((1, 1, 1, 1), (0, 3, 1, 1), (1, 0, 0, 1), (3, 3, 2, 2), (1, 1, 3, 3)):
        for start in (0, 1, 5, 50):
            dq = DequeTree(range(start))
            lo, hi, size = -1, start, start
            for i in range(1, ops // 20 + 1):
                op = rng.choices(range(4), weights)[0]
                if op == 0:
                    dq.push_min(lo)
                    lo -= 1
                    size += 1
                elif op == 1:
                    dq.push_max(hi)
                    hi += 1
                    size += 1
                elif size:
                    (dq.pop_min if op == 2 else dq.pop_max)()
                    size -= 1
                worst = max(worst, dq.cost / i)
    return worst


def measure_switch(seed=0, count=300):
    rng = _rng("switch", seed)
    worst = 0.0
    for _ in range(count):
        n = rng.randint(1, 40)
        k = rng.randint(1, 3)
        A = rng.choice([random_treap(n, rng.randrange(10**6)), path_tree(list(range(1, n + 1))),
                        path_tree(list(range(1, n + 1)), root_at_min=False)])
        B = random_treap(n, rng.randrange(10**6))
        pos = [rng.randint(1, n) for _ in range(k)]
        goal = [rng.randint(1, n) for _ in range(k)]
        worst = max(worst, len(switch_state(A, pos, B, goal).steps) / switch_norm(n))
    return worst


def measure_strip(seed=0, count=400, nmax=64):
    rng = _rng("strip", seed)
    worst = 0.0
    for _ in range(count):
        _, D = gen_decomposable(rng.choice((2, 3, 4)), rng.randint(1, nmax), rng.randrange(10**6))
        worst = max(worst, strip_distortion(reference_tree(D)))
    return worst


def measure_hierarchy():
    worst = 0.0
    for k in HIER_KS:
        for n in hierarchy_sizes(k):
            worst = max(worst, hierarchy_strategy(n, k)[1].cost() / n)
    return worst


def calibrate(seed=0, quick=False):
    """Returns (frozen constants, raw measurements)."""
    raw = measure_hand(n=60 if quick else 200, seed=seed, steps=500 if quick else 3000)
    raw["c_dq"] = measure_deque(seed, 4000 if quick else 20_000)
    raw["c_switch"] = measure_switch(seed, 60 if quick else 300)
    raw["c_strip"] = measure_strip(seed, 60 if quick else 400)
    raw["c_hier"] = measure_hierarchy()
    frozen = {name: _up(raw[name]) for name in ("c_sim", "c_init", "c_h", "c_dq",
                                                "c_switch", "c_strip")}
    frozen["c_delta"] = math.ceil(raw["c_delta"] * MARGIN)
    frozen["c_hier"] = _up(raw["c_hier"], 1.0)
    assert set(frozen) == set(NAMES)
    return frozen, raw
