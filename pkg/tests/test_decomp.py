import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mfbst import InvalidArgument
from mfbst.constants import load
from mfbst.decomp import (Deflation, contains_pattern, gadget_depths_ok, gen_decomposable,
                          one_finger_bound, one_finger_trace, reference_tree)
from mfbst.fingers import verify_trace
from mfbst.tree import strip_auxiliary

C = load()


def strip_distortion(T):
    S = strip_auxiliary(T)
    keys = sorted(T.real_keys)
    ia = [T.index[k] for k in keys]
    aux = T.distance_matrix()[np.ix_(ia, ia)]
    return float((S.distance_matrix() / (aux + 1)).max())


def test_base_case():
    X, D = gen_decomposable(3, 1, 5)
    assert list(X) == [1] and D.is_leaf
    T = reference_tree(D)
    assert len(T) == 1
    tr = one_finger_trace(T, X, D)
    assert tr.cost() == 1


def test_two_leaves():
    D = Deflation((1, 2), (Deflation(), Deflation()))
    T = reference_tree(D)
    assert T.height() == 2 and T.root not in T.real_keys
    tr = one_finger_trace(T, D.flatten(), D)
    assert verify_trace(tr, D.flatten()).move_steps <= 4 * 1 * 1


def test_bad_arity():
    with pytest.raises(InvalidArgument):
        gen_decomposable(1, 5, 0)


def test_mismatched_inputs():
    X, D = gen_decomposable(3, 6, 1)
    with pytest.raises(InvalidArgument):
        one_finger_trace(reference_tree(D), list(X)[::-1], D)


@pytest.mark.parametrize("seed", range(40))
def test_separable_avoids_forbidden_patterns(seed):
    X, _ = gen_decomposable(2, 1 + seed % 8, seed)
    assert not contains_pattern(list(X), (2, 4, 1, 3))
    assert not contains_pattern(list(X), (3, 1, 4, 2))


def test_pattern_detector():
    assert contains_pattern([2, 4, 1, 3], (2, 4, 1, 3))
    assert not contains_pattern([1, 2, 3, 4], (2, 1))


@given(st.integers(2, 6), st.integers(1, 40), st.integers(0, 10**6))
def test_deflation_round_trips(d, size, seed):
    X, D = gen_decomposable(d, size, seed)
    assert sorted(X) == list(range(1, size + 1))
    assert D.validate(d) and D.size == size
    back = Deflation.from_json(D.to_json())
    assert back == D and back.flatten() == list(X)


@given(st.integers(2, 6), st.integers(1, 64), st.integers(0, 10**6))
def test_one_finger_inequality(d, size, seed):
    X, D = gen_decomposable(d, size, seed)
    T = reference_tree(D)
    assert T.validate()
    assert gadget_depths_ok(D, T)
    rep = verify_trace(one_finger_trace(T, X, D), X)
    assert rep.ok
    # the recursion only ever needs the widest level actually used
    assert rep.move_steps <= one_finger_bound(size, max(2, D.arity()))


def test_example_d3_size27():
    X, D = gen_decomposable(3, 27, 2024)
    rep = verify_trace(one_finger_trace(reference_tree(D), X, D), X)
    assert rep.move_steps <= 4 * 26 * 2


@given(st.integers(2, 5), st.integers(2, 64), st.integers(0, 10**6))
def test_stripping_distortion(d, size, seed):
    _, D = gen_decomposable(d, size, seed)
    assert strip_distortion(reference_tree(D)) <= C["c_strip"]
