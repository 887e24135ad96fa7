"""Desk-scale verification runs shared by ``mfbst verify`` and the test suite.

Every check returns a :class:`Check` with the measured quantities next to
the asserted ones, so a failure says by how much it failed.
"""
from __future__ import annotations

import collections
import math
import random
from dataclasses import dataclass, field

import numpy as np

from .bounds import df, dist_tree, so, ub_window
from .bstm import DequeTree, run_program
from .constants import load
from .decomp import gen_decomposable, one_finger_bound, one_finger_trace, reference_tree
from .fingers import (hierarchy_strategy, k_finger_costs_over_trees, monotone_strategy,
                      optimal_k_finger_cost, random_trace, verify_trace)
from .hand import simulate_trace
from .kserver import (dc_run, epoch_length, expert_runs, expert_universe, mw_meta,
                      switch_norm)
from .seq import AccessSequence, decompose_monotone, gen_k_monotone, gen_random, gen_tilted_grid
from .tree import (balanced_tree, enumerate_trees, path_tree, random_treap,
                   strip_auxiliary)
from .vtree import build_virtual_tree, decompose, body_checks, nf, run_strategy


@dataclass
class Check:
    name: str
    ok: bool
    measured: dict = field(default_factory=dict)
    message: str = ""

    def line(self) -> str:
        vals = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"{'PASS' if self.ok else 'FAIL'} {self.name}: {vals}{' | ' + self.message if self.message else ''}"


def _fmt(v):
    return f"{v:.4g}" if isinstance(v, float) else str(v)


def monotone_chain(count=50, nmax=8, mmax=20, seed=0) -> Check:
    rng = random.Random(seed)
    bad = []
    for i in range(count):
        n, m = rng.randint(1, nmax), rng.randint(1, mmax)
        X = gen_random(n, m, rng.randrange(10**9))
        costs = k_finger_costs_over_trees(X, range(1, n + 1))
        seq = [costs[k][0] for k in range(1, n + 1)]
        if any(a < b for a, b in zip(seq, seq[1:])) or seq[-1] != m:
            bad.append((i, seq))
    return Check("monotone chain", not bad, {"instances": count, "violations": len(bad)},
                 f"first bad {bad[0]}" if bad else "")


def private_fingers(count=40, seed=0) -> Check:
    rng = random.Random(seed)
    bad = 0
    for _ in range(count):
        n = rng.randint(1, 10)
        k = rng.randint(1, min(4, n))
        keys = rng.sample(range(1, n + 1), rng.randint(1, k))
        X = AccessSequence(n, tuple(rng.choice(keys) for _ in range(rng.randint(1, 25))))
        trees = [random_treap(n, rng.randrange(10**6)), balanced_tree(range(1, n + 1)),
                 path_tree(list(range(1, n + 1)))]
        for T in trees:
            if optimal_k_finger_cost(T, X, k).cost != len(X):
                bad += 1
    return Check("private fingers", bad == 0, {"instances": count, "violations": bad})


def hand_engine(n=200, ks=(2, 4, 8, 16), steps=10_000, seed=0, rotate_rate=0.05,
                consts=None) -> Check:
    c = consts or load()
    per = {}
    ok, notes = True, []
    for k in ks:
        T = random_treap(n, seed + k)
        tr, X = random_trace(T, k, steps, seed + k, rotate_rate=rotate_rate)
        rep = simulate_trace(T, tr.placement, tr, X, check=True)
        run = run_program(rep.program, X)
        if not run.ok:
            ok = False
            notes.append(f"k={k}: {run.message}")
        per[k] = rep.cost / rep.steps
        if per[k] > c["c_sim"] * math.log2(k + 1):
            ok = False
            notes.append(f"k={k}: cost/step {per[k]:.3f} above c_sim log2(k+1)")
    measured = {f"cost_per_step_k{k}": v for k, v in per.items()}
    measured.update({f"norm_k{k}": v / math.log2(k + 1) for k, v in per.items()})
    lo, hi = min(ks), max(ks)
    if lo != hi:
        growth = per[hi] / per[lo]
        allowed = 1.5 * math.log2(hi + 1) / math.log2(lo + 1)
        measured.update(growth=growth, growth_allowed=allowed)
        if growth > allowed:
            ok = False
            notes.append("cost growth across k too steep")
    return Check("hand simulation", ok, measured, "; ".join(notes))


def deque_fuzz(ops=100_000, seed=0, consts=None) -> Check:
    c = consts or load()
    rng = random.Random(seed)
    dq, ref = DequeTree(), collections.deque()
    lo, hi = 0, 1
    worst = 0.0
    mismatch = 0
    for i in range(1, ops + 1):
        op = rng.randrange(4)
        if op == 0:
            dq.push_min(lo)
            ref.appendleft(lo)
            lo -= 1
        elif op == 1:
            dq.push_max(hi)
            ref.append(hi)
            hi += 1
        elif ref:
            got = dq.pop_min()[0] if op == 2 else dq.pop_max()[0]
            want = ref.popleft() if op == 2 else ref.pop()
            mismatch += got != want
        worst = max(worst, dq.cost / i)
    same = dq._sorted() == list(ref) and dq.check_layout()
    ok = mismatch == 0 and same and worst <= c["c_dq"]
    return Check("deque", ok, {"ops": ops, "mismatches": mismatch, "prefix_max_ops_per_op": worst,
                               "amortized": dq.cost / ops, "c_dq": c["c_dq"]})


def dc_competitive(count=200, nmax=12, kmax=3, mmax=40, seed=0) -> Check:
    rng = random.Random(seed)
    bad, worst = 0, 0.0
    for _ in range(count):
        n = rng.randint(1, nmax)
        k = rng.randint(1, min(kmax, n))
        m = rng.randint(1, mmax)
        T = random_treap(n, rng.randrange(10**6))
        X = gen_random(n, m, rng.randrange(10**6))
        pl = rng.sample(range(1, n + 1), k)
        rep = dc_run(T, X, k, pl)
        dp = optimal_k_finger_cost(T, X, k, initial=pl).movement
        if rep.movement > k * dp + k * n or not verify_trace(rep.trace, X).ok:
            bad += 1
        if dp:
            worst = max(worst, rep.movement / dp)
    return Check("double coverage", bad == 0,
                 {"instances": count, "violations": bad, "max_dc_over_dp": worst})


MW_SHAPES = ((3, 1), (4, 1), (4, 2), (5, 1), (5, 2))


def mw_bound(seeds=20, eps_list=(0.25, 0.5), consts=None) -> Check:
    """Realized service cost and weighted-mean cost against the MW right-hand
    side; switching is checked separately against c_switch per switch."""
    c = consts or load()
    bad = switch_bad = with_switch_over = 0
    slack = math.inf
    runs_total = 0
    for s in range(seeds):
        n, k = MW_SHAPES[s % len(MW_SHAPES)]
        M = epoch_length(n)
        X = gen_random(n, 20 * M, 1000 + s)
        ex, _ = expert_universe(n, k)
        runs = expert_runs(list(X), ex, M)
        for eps in eps_list:
            trace, rep, _ = mw_meta(X, n, k, eps, s, ex, runs)
            runs_total += 1
            if not (rep.holds() and verify_trace(trace, X).ok):
                bad += 1
            if rep.switch_cost > rep.switches * c["c_switch"] * switch_norm(n):
                switch_bad += 1
            with_switch_over += rep.mw_cost > rep.bound_rhs
            slack = min(slack, rep.bound_rhs - rep.service_cost)
    return Check("mw meta", bad == 0 and switch_bad == 0,
                 {"runs": runs_total, "violations": bad, "switch_violations": switch_bad,
                  "min_slack": slack, "runs_where_switching_exceeds_rhs": with_switch_over})


def vtree_inequality(per_ell=100, ells=(1, 2, 3), nmax=32, mmax=60, seed=0) -> Check:
    rng = random.Random(seed)
    bad = struct = 0
    worst = 0.0
    for ell in ells:
        for _ in range(per_ell):
            n, m = rng.randint(1, nmax), rng.randint(1, mmax)
            T = random_treap(n, rng.randrange(10**6))
            X = gen_random(n, m, rng.randrange(10**6))
            vt = build_virtual_tree(T, X, ell)
            dec = decompose(vt)
            if dec.check() or vt.total_weight() != dist_tree(X, T, ell):
                struct += 1
            res = run_strategy(vt, dec)
            bound = 2 * math.factorial(ell) * dist_tree(X, T, ell)
            if (res.trace.cost() > bound or body_checks(dec, res)
                    or not verify_trace(res.trace, X).ok or res.trace.k != nf(ell)):
                bad += 1
            worst = max(worst, res.trace.cost() / bound)
    return Check("virtual tree", bad == 0 and struct == 0,
                 {"instances": per_ell * len(ells), "violations": bad,
                  "structural_violations": struct, "max_cost_over_bound": worst})


def decomposable(count=100, seed=0) -> Check:
    rng = random.Random(seed)
    bad, worst = 0, 0.0
    for _ in range(count):
        d = rng.choice((2, 3, 4))
        size = rng.randint(1, 64)
        X, D = gen_decomposable(d, size, rng.randrange(10**6))
        T = reference_tree(D)
        tr = one_finger_trace(T, X, D)
        rep = verify_trace(tr, X)
        bound = one_finger_bound(size, d)
        if not rep.ok or rep.move_steps > bound:
            bad += 1
        if bound:
            worst = max(worst, rep.move_steps / bound)
    return Check("decomposable", bad == 0,
                 {"instances": count, "violations": bad, "max_moves_over_bound": worst})


def k_monotone(count=60, seed=0, dp_count=40) -> Check:
    rng = random.Random(seed)
    bad = dp_bad = 0
    worst = 0.0
    for i in range(count + dp_count):
        tiny = i >= count
        k = rng.randint(1, 3 if tiny else 6)
        n = rng.randint(k, 6 if tiny else 64)
        X = gen_k_monotone(n, k, rng.randint(1, n), rng.randrange(10**6))
        part = decompose_monotone(X)
        T = random_treap(n, rng.randrange(10**6))
        tr = monotone_strategy(T, X, part)
        rep = verify_trace(tr, X)
        limit = len(X) + 3 * k * n
        if not rep.ok or tr.cost() > limit or len(part.chains) > k:
            bad += 1
        worst = max(worst, (tr.cost() - len(X)) / (k * n))
        if tiny and optimal_k_finger_cost(T, X, k).cost > tr.cost():
            dp_bad += 1
    return Check("k-monotone", bad == 0 and dp_bad == 0,
                 {"instances": count + dp_count, "violations": bad, "dp_violations": dp_bad,
                  "max_extra_over_kn": worst})


HIER_KS = (2, 4, 8)


def hierarchy_sizes(k, max_n=1024):
    return range(k, max_n + 1, k)


def hierarchy(ns=(4, 8, 12), max_n=1024, ks=HIER_KS, consts=None) -> Check:
    """Exact F1/F2 ratios on the tilted grid, then the explicit strategy on
    every n up to max_n that k divides."""
    c = consts or load()
    ratios = []
    for n in ns:
        X = gen_tilted_grid(n, 2)
        costs = k_finger_costs_over_trees(X, (1, 2))
        ratios.append(costs[1][0] / costs[2][0])
    increasing = all(a < b for a, b in zip(ratios, ratios[1:]))
    worst = 0.0
    bad = 0
    for k in ks:
        for n in hierarchy_sizes(k, max_n):
            T, tr = hierarchy_strategy(n, k)
            if not verify_trace(tr, gen_tilted_grid(n, k)).ok:
                bad += 1
            worst = max(worst, tr.cost() / n)
    ok = increasing and bad == 0 and worst <= c["c_hier"]
    measured = {f"ratio_n{n}": r for n, r in zip(ns, ratios)}
    measured.update(max_cost_per_key=worst, c_hier=c["c_hier"], invalid_traces=bad)
    return Check("hierarchy", ok, measured)


def bound_calculators(count=100, seed=0) -> Check:
    rng = random.Random(seed)
    chain_bad = df_bad = so_bad = 0
    for _ in range(count):
        n = rng.randint(1, 12)
        m = rng.randint(n, 40)
        X = gen_random(n, m, rng.randrange(10**6))
        ub = [ub_window(X, ell) for ell in range(1, m + 1)]
        chain_bad += any(b > a + 1e-9 for a, b in zip(ub, ub[1:]))
        df_bad += abs(ub[0] - df(X)) > m + 1e-9
    for n in range(1, 7):
        trees = list(enumerate_trees(n))
        for s in range(5):
            X = gen_random(n, 15, 7 * n + s)
            so_bad += so(X) != min(sum(T.depth(x) + 1 for x in X) for T in trees)
    ok = not (chain_bad or df_bad or so_bad)
    return Check("bound calculators", ok,
                 {"sequences": count, "ub_chain_violations": chain_bad,
                  "ub1_df_violations": df_bad, "so_mismatches": so_bad})


def strip_distortion(T) -> float:
    S = strip_auxiliary(T)
    keys = sorted(T.real_keys)
    ia = [T.index[k] for k in keys]
    aux = T.distance_matrix()[np.ix_(ia, ia)]
    return float((S.distance_matrix() / (aux + 1)).max())


def stripping(count=300, nmax=64, seed=0, consts=None) -> Check:
    c = consts or load()
    rng = random.Random(seed)
    worst = 0.0
    for _ in range(count):
        d = rng.choice((2, 3, 4))
        _, D = gen_decomposable(d, rng.randint(1, nmax), rng.randrange(10**6))
        worst = max(worst, strip_distortion(reference_tree(D)))
    return Check("stripping", worst <= c["c_strip"],
                 {"trees": count, "max_distortion": worst, "c_strip": c["c_strip"]})


CRITERIA = {
    1: ("monotone-chain", monotone_chain),
    2: ("private", private_fingers),
    3: ("hand", hand_engine),
    4: ("deque", deque_fuzz),
    5: ("dc", dc_competitive),
    6: ("mw", mw_bound),
    7: ("vtree", vtree_inequality),
    8: ("decomp", decomposable),
    9: ("kmono", k_monotone),
    10: ("hierarchy", hierarchy),
    11: ("bounds", bound_calculators),
    12: ("strip", stripping),
}
BY_NAME = {name: fn for name, fn in CRITERIA.values()}
