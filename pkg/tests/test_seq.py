import warnings

import pytest
from hypothesis import given, strategies as st

from mfbst import AccessSequence, InvalidArgument
from mfbst.bounds import rho
from mfbst.seq import (decompose_monotone, gen_k_monotone, gen_phased, gen_random,
                       gen_tilted_grid)


def test_single_key_universe():
    assert list(gen_random(1, 3, 7)) == [1, 1, 1]


def test_gen_random_deterministic():
    assert gen_random(5, 4, 11) == gen_random(5, 4, 11)


def test_gen_random_frequencies_roughly_uniform():
    X = gen_random(5, 10000, 3)
    for key in range(1, 6):
        c = X.requests.count(key)
        assert 2000 / 5 <= c <= 2000 * 5


@pytest.mark.parametrize("n,m", [(0, 3), (3, 0)])
def test_gen_random_rejects_empty(n, m):
    with pytest.raises(InvalidArgument):
        gen_random(n, m, 0)


def test_requests_out_of_range():
    with pytest.raises(InvalidArgument):
        AccessSequence(3, (1, 4))


@pytest.mark.parametrize("n,k,want", [
    (6, 2, [1, 4, 2, 5, 3, 6]),
    (4, 1, [1, 2, 3, 4]),
    (9, 3, [1, 4, 7, 2, 5, 8, 3, 6, 9]),
])
def test_tilted_grid(n, k, want):
    assert list(gen_tilted_grid(n, k)) == want


def test_tilted_grid_needs_divisor():
    with pytest.raises(InvalidArgument):
        gen_tilted_grid(7, 2)


@given(st.integers(1, 8), st.integers(1, 6))
def test_tilted_grid_is_permutation_and_k_monotone(ell, k):
    X = gen_tilted_grid(ell * k, k)
    assert sorted(X) == list(range(1, ell * k + 1))
    assert len(decompose_monotone(X).chains) <= k


def test_k_monotone_single_chain_is_increasing():
    X = list(gen_k_monotone(6, 1, 6, 5))
    assert X == sorted(X) and len(set(X)) == len(X)


@given(st.integers(1, 40), st.integers(1, 6), st.integers(1, 60), st.integers(0, 10**6))
def test_k_monotone_decomposes_into_k_chains(n, k, m, seed):
    if n < k:
        with pytest.raises(InvalidArgument):
            gen_k_monotone(n, k, m, seed)
        return
    X = gen_k_monotone(n, k, m, seed)
    part = decompose_monotone(X)
    assert part.validate(X)
    assert len(part.chains) <= k
    assert gen_k_monotone(n, k, m, seed) == X


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_phased_small():
    X = gen_phased(4, 1, 4, 1, 9)
    assert len(X) == 4
    assert len(set(X)) == 2
    assert X[0] == X[2] and X[1] == X[3]


def test_phased_phases_are_permutations():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        X = gen_phased(4, 2, 4, 2, 1)
    assert len(X) == 8
    assert sorted(X[:4]) == [1, 2, 3, 4] and sorted(X[4:]) == [1, 2, 3, 4]


def test_phased_working_set_stays_small():
    n, k, L, Y = 64, 2, 40, 3
    X = gen_phased(n, k, L, Y, 2)
    for p in range(Y):
        for t in range(p * L + 2 * k + 1, (p + 1) * L + 1):
            assert rho(X, t, X[t - 1]) <= 2 * k


@pytest.mark.parametrize("args", [(4, 1, 3, 1), (3, 2, 4, 1)])
def test_phased_rejects(args):
    with pytest.raises(InvalidArgument):
        gen_phased(*args, seed=0)


def test_phased_short_phase_warns():
    with pytest.warns(UserWarning):
        gen_phased(1000, 1, 2, 1, 0)


def test_decompose_examples():
    assert len(decompose_monotone(AccessSequence(3, (1, 2, 3))).chains) == 1
    assert len(decompose_monotone(AccessSequence(3, (3, 2, 1))).chains) == 3
    X = AccessSequence(6, (1, 4, 2, 5, 3, 6))
    part = decompose_monotone(X, strict=True)
    assert len(part.chains) == 2 and part.validate(X)


@given(st.lists(st.integers(1, 12), min_size=1, max_size=40))
def test_decompose_partitions_positions(reqs):
    X = AccessSequence(12, reqs)
    part = decompose_monotone(X)
    assert sorted(p for c in part.chains for p in c) == list(range(len(reqs)))
    assert part.validate(X, strict=False)


def test_serialization_round_trip():
    X = gen_random(9, 20, 4)
    assert AccessSequence.from_json(X.to_json()) == X
    assert AccessSequence.from_text(X.to_text(), n=9) == X
