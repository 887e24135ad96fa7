"""Permutations built by recursive block substitution (deflations), the
reference tree with auxiliary gadget keys, and a single-finger walk."""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .errors import InvalidArgument
from .fingers import FingerTrace, strategy_to_trace
from .seq import AccessSequence
from .tree import StaticTree


@dataclass(frozen=True)
class Deflation:
    """Leaf when ``children`` is empty; otherwise child i (in position order)
    takes the skeleton[i]-th block of keys."""
    skeleton: tuple = ()
    children: tuple = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def size(self) -> int:
        return 1 if self.is_leaf else sum(c.size for c in self.children)

    def arity(self) -> int:
        """Largest number of blocks at any level (1 for a leaf)."""
        if self.is_leaf:
            return 1
        return max(len(self.children), *(c.arity() for c in self.children))

    def key_ranges(self, offset: int = 0):
        """First key of each child's block, children in position order."""
        sizes = [c.size for c in self.children]
        by_rank = sorted(range(len(sizes)), key=lambda i: self.skeleton[i])
        start, out = offset, [0] * len(sizes)
        for i in by_rank:
            out[i] = start
            start += sizes[i]
        return out

    def flatten(self, offset: int = 0) -> list:
        if self.is_leaf:
            return [offset + 1]
        out = []
        for c, lo in zip(self.children, self.key_ranges(offset)):
            out.extend(c.flatten(lo))
        return out

    def validate(self, d: int | None = None) -> bool:
        if self.is_leaf:
            return not self.skeleton
        j = len(self.children)
        if sorted(self.skeleton) != list(range(1, j + 1)) or j < 2:
            return False
        if d is not None and j > d:
            return False
        return all(c.validate(d) for c in self.children)

    def to_obj(self):
        if self.is_leaf:
            return []
        return [list(self.skeleton)] + [c.to_obj() for c in self.children]

    @classmethod
    def from_obj(cls, o) -> "Deflation":
        if not o:
            return cls()
        return cls(tuple(o[0]), tuple(cls.from_obj(c) for c in o[1:]))

    def to_json(self) -> str:
        return json.dumps(self.to_obj())

    @classmethod
    def from_json(cls, text: str) -> "Deflation":
        return cls.from_obj(json.loads(text))


def _random_deflation(d: int, size: int, rng: random.Random) -> Deflation:
    if size == 1:
        return Deflation()
    j = rng.randint(2, min(d, size))
    cuts = sorted(rng.sample(range(1, size), j - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [size])]
    skel = list(range(1, j + 1))
    rng.shuffle(skel)
    return Deflation(tuple(skel), tuple(_random_deflation(d, p, rng) for p in parts))


def gen_decomposable(d: int, size: int, seed: int):
    """Random d-decomposable permutation of exactly ``size`` keys, with its witness."""
    if d < 2:
        raise InvalidArgument("arity must be at least 2")
    if size < 1:
        raise InvalidArgument("size must be positive")
    D = _random_deflation(d, size, random.Random(seed))
    return AccessSequence(size, tuple(D.flatten())), D


def contains_pattern(perm, pattern) -> bool:
    k = len(pattern)
    for idx in combinations(range(len(perm)), k):
        vals = [perm[i] for i in idx]
        order = sorted(range(k), key=lambda i: vals[i])
        ranks = [0] * k
        for r, i in enumerate(order):
            ranks[i] = r + 1
        if tuple(ranks) == tuple(pattern):
            return True
    return False


def reference_tree(D: Deflation) -> StaticTree:
    """Leaves of a balanced gadget over the blocks (in key order) are the
    roots of the blocks' own trees; gadget keys are gap midpoints a + 1/2."""
    left, right = {}, {}

    def build(node: Deflation, offset: int):
        # returns (root, lowest key, highest key)
        if node.is_leaf:
            k = offset + 1
            left[k] = right[k] = None
            return k, k, k
        starts = node.key_ranges(offset)
        subs = sorted((build(c, lo) for c, lo in zip(node.children, starts)), key=lambda s: s[1])
        return gadget(subs, 0, len(subs) - 1)

    def gadget(subs, lo, hi):
        if lo == hi:
            return subs[lo]
        mid = (lo + hi + 1) // 2  # left half gets the extra leaf
        l = gadget(subs, lo, mid - 1)
        r = gadget(subs, mid, hi)
        key = Fraction(2 * l[2] + 1, 2)
        left[key], right[key] = l[0], r[0]
        return key, l[1], r[2]

    root = build(D, 0)[0]
    return StaticTree(root, left, right, range(1, D.size + 1))


def gadget_depths_ok(D: Deflation, T: StaticTree) -> bool:
    """Every block root sits within ceil(log2 j) of its parent gadget root."""
    def rec(node, offset, top):
        if node.is_leaf:
            return True
        j = len(node.children)
        for c, lo in zip(node.children, node.key_ranges(offset)):
            r = _block_root(c, lo, T)
            if T.distance(top, r) > math.ceil(math.log2(j)):
                return False
            if not rec(c, lo, r):
                return False
        return True

    return rec(D, 0, T.root)


def _block_root(node: Deflation, offset: int, T: StaticTree):
    # the block's root is the shallowest node inside its key span
    lo, hi = offset + 1, offset + node.size
    v = T.root
    while not lo <= v <= hi:
        v = T.left[v] if v > hi else T.right[v]
    return v


def one_finger_trace(T: StaticTree, X, D: Deflation) -> FingerTrace:
    """One finger starts at the root and walks to each access in turn."""
    reqs = list(X)
    if reqs != D.flatten():
        raise InvalidArgument("sequence is not the flattening of the deflation")
    if set(T.real_keys) != set(reqs):
        raise InvalidArgument("tree keys do not match the sequence")
    return strategy_to_trace(T, [T.root], [0] * len(reqs), reqs)


def one_finger_bound(size: int, d: int) -> int:
    return 4 * (size - 1) * math.ceil(math.log2(d))
