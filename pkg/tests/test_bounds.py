import csv

import pytest
from hypothesis import given, strategies as st

from mfbst import AccessSequence, InvalidArgument, KeyNotFound, ResourceLimit
from mfbst.bounds import (bound_report, df, dist_tree, logcap, rho, sf, so, ub,
                          ub_window, ws)
from mfbst.seq import gen_random
from mfbst.tree import balanced_tree, enumerate_trees, random_treap


def sequences(max_n=12, max_m=30):
    return st.integers(1, max_n).flatmap(
        lambda n: st.lists(st.integers(1, n), min_size=1, max_size=max_m).map(
            lambda r: AccessSequence(n, r)))


def ub_window_slow(X, ell):
    total = logcap(X.n)
    for t in range(2, len(X) + 1):
        total += min(logcap(abs(X[t - 1] - X[tp - 1]) + rho(X, t, X[tp - 1]))
                     for tp in range(max(1, t - ell), t))
    return total


def test_logcap():
    assert logcap(0) == 1 and logcap(2) == 1 and logcap(8) == 3
    with pytest.raises(InvalidArgument):
        logcap(-1)


def test_rho_examples():
    assert rho(AccessSequence(1, (1, 1)), 2, 1) == 1
    assert rho(AccessSequence(3, (1, 2, 1)), 3, 1) == 2
    assert rho(AccessSequence(7, (2, 3)), 1, 2) == 7
    with pytest.raises(InvalidArgument):
        rho(AccessSequence(3, (1, 2)), 3, 1)


def test_closed_forms():
    assert ws(AccessSequence(1, (1, 1, 1))) == 3
    assert df(AccessSequence(3, (1, 2, 3))) == 2
    assert sf(AccessSequence(9, (4,) * 6)) == 6
    assert so(AccessSequence(3, (2, 2, 2))) == 3


def test_so_cap():
    with pytest.raises(ResourceLimit):
        so(AccessSequence(10, (1,)), cap=5)


def test_ub_examples():
    X = AccessSequence(9, (5, 5, 5, 5))
    assert ub_window(X, 1) == logcap(9) + 3
    X = gen_random(10, 25, 1)
    assert ub_window(X, len(X)) == ub(X)
    with pytest.raises(InvalidArgument):
        ub_window(X, 0)


@given(sequences())
def test_ub_matches_direct_definition(X):
    for ell in (1, 2, 4):
        assert ub_window(X, ell) == pytest.approx(ub_window_slow(X, ell))


@given(sequences())
def test_ub_window_monotone(X):
    vals = [ub_window(X, ell) for ell in range(1, len(X) + 1)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


@given(sequences())
def test_bounds_at_least_m(X):
    m = len(X)
    assert so(X) >= m
    for v in (ws(X), sf(X), ub_window(X, 1)):
        assert v >= m
    assert df(X) >= m - 1


def test_dist_tree_examples():
    T = balanced_tree([1, 2, 3])
    assert dist_tree(AccessSequence(3, (2, 3)), T, 1) == 3
    X = AccessSequence(3, (3,) * 5)
    assert dist_tree(X, T, 1) == T.depth(3) + 1 + 4
    with pytest.raises(KeyNotFound):
        dist_tree(AccessSequence(4, (4,)), T, 1)


@given(st.integers(1, 20), st.integers(0, 10**6), st.integers(1, 30))
def test_dist_tree_window_monotone(n, seed, m):
    X = gen_random(n, m, seed)
    T = random_treap(n, seed)
    vals = [dist_tree(X, T, ell) for ell in (1, 2, 3, m)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_so_matches_exhaustive_trees():
    for n in range(1, 7):
        for seed in range(5):
            X = gen_random(n, 15, seed)
            brute = min(sum(T.depth(x) + 1 for x in X) for T in enumerate_trees(n))
            assert so(X) == brute


def test_report_serialization():
    X = gen_random(8, 20, 0)
    rep = bound_report(X, ells=(1, 2), tree=balanced_tree(list(range(1, 9))))
    flat = rep.to_flat()
    for name in ("ws", "df", "sf", "so", "ub_1", "ub_2", "dist_tree_1", "dist_tree_2"):
        assert name in flat and flat[name] >= 0
    assert flat["ub_2"] <= flat["ub_1"]
    row = next(csv.reader([rep.to_csv_row()]))
    assert len(row) == len(rep.csv_header())
