"""Binary search trees over an ordered key universe.

Keys are ints or ``fractions.Fraction`` so auxiliary keys between integers
compare exactly. A tree stores child/parent maps keyed by node key; the
root has depth 0.
"""
from __future__ import annotations

import json
import math
import random
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import InvalidArgument, KeyNotFound, ResourceLimit

ENUM_CAP = 12


class StaticTree:
    def __init__(self, root, left: dict, right: dict, real_keys=None):
        self.root = root
        self.left = dict(left)
        self.right = dict(right)
        self.parent = {root: None}
        for maps in (self.left, self.right):
            for p, c in maps.items():
                if c is not None:
                    self.parent[c] = p
        for k in self.parent:
            self.left.setdefault(k, None)
            self.right.setdefault(k, None)
        if real_keys is None:
            real_keys = [k for k in self.parent if _is_integral(k)]
        self.real_keys = frozenset(real_keys)
        self._depth = None
        self._index = None
        self._dist = None

    # -- basic queries -------------------------------------------------
    @property
    def nodes(self):
        return self.parent.keys()

    def __len__(self):
        return len(self.parent)

    def __contains__(self, key):
        return key in self.parent

    def inorder(self) -> list:
        out, stack, cur = [], [], self.root
        while stack or cur is not None:
            while cur is not None:
                stack.append(cur)
                cur = self.left[cur]
            cur = stack.pop()
            out.append(cur)
            cur = self.right[cur]
        return out

    @property
    def depths(self) -> dict:
        if self._depth is None:
            d = {self.root: 0}
            stack = [self.root]
            while stack:
                v = stack.pop()
                for c in (self.left[v], self.right[v]):
                    if c is not None:
                        d[c] = d[v] + 1
                        stack.append(c)
            self._depth = d
        return self._depth

    def depth(self, key) -> int:
        self._check(key)
        return self.depths[key]

    def height(self) -> int:
        """Number of levels (root alone has height 1)."""
        return max(self.depths.values()) + 1

    def _check(self, key):
        if key not in self.parent:
            raise KeyNotFound(key)

    def lca(self, a, b):
        self._check(a)
        self._check(b)
        d = self.depths
        while d[a] > d[b]:
            a = self.parent[a]
        while d[b] > d[a]:
            b = self.parent[b]
        while a != b:
            a, b = self.parent[a], self.parent[b]
        return a

    def distance(self, a, b) -> int:
        c = self.lca(a, b)
        d = self.depths
        return d[a] + d[b] - 2 * d[c]

    def path(self, a, b) -> list:
        """Nodes on the a-b path, both ends included."""
        c = self.lca(a, b)
        up, down = [a], [b]
        while up[-1] != c:
            up.append(self.parent[up[-1]])
        while down[-1] != c:
            down.append(self.parent[down[-1]])
        return up + down[-2::-1]

    def neighbors(self, v):
        return [u for u in (self.parent[v], self.left[v], self.right[v]) if u is not None]

    # -- dense views used by the dynamic programs ----------------------
    @property
    def index(self) -> dict:
        if self._index is None:
            self._index = {k: i for i, k in enumerate(self.inorder())}
        return self._index

    def distance_matrix(self) -> np.ndarray:
        """All-pairs edge distances, rows/cols in symmetric order.

        Subtrees are contiguous in symmetric order, so a child's row is its
        parent's row plus one, minus two on the child's own subtree range.
        """
        if self._dist is None:
            idx = self.index
            n = len(idx)
            lo, hi = {}, {}
            for v in self._postorder():
                l, r = self.left[v], self.right[v]
                lo[v] = lo[l] if l is not None else idx[v]
                hi[v] = hi[r] if r is not None else idx[v] + 1
            D = np.empty((n, n), dtype=np.int64)
            root = self.root
            D[idx[root]] = [self.depths[k] for k in self.inorder()]
            stack = [root]
            while stack:
                v = stack.pop()
                for c in (self.left[v], self.right[v]):
                    if c is None:
                        continue
                    row = D[idx[v]] + 1
                    row[lo[c]:hi[c]] -= 2
                    D[idx[c]] = row
                    stack.append(c)
            self._dist = D
        return self._dist

    def _postorder(self):
        out, stack = [], [self.root]
        while stack:
            v = stack.pop()
            out.append(v)
            for c in (self.left[v], self.right[v]):
                if c is not None:
                    stack.append(c)
        return out[::-1]

    # -- validation / comparison ---------------------------------------
    def validate(self) -> bool:
        seen = set()
        stack = [(self.root, None, None)]
        while stack:
            v, lo, hi = stack.pop()
            if v in seen:
                return False
            seen.add(v)
            if (lo is not None and not v > lo) or (hi is not None and not v < hi):
                return False
            l, r = self.left[v], self.right[v]
            if l is not None:
                if self.parent.get(l) != v:
                    return False
                stack.append((l, lo, v))
            if r is not None:
                if self.parent.get(r) != v:
                    return False
                stack.append((r, v, hi))
        return seen == set(self.parent) and self.real_keys <= seen

    def shape(self):
        """Nested (key, left, right) tuples; hashable."""
        return _iter_shape(self, self.root)

    def copy(self) -> "StaticTree":
        return StaticTree(self.root, self.left, self.right, self.real_keys)

    def __eq__(self, other):
        return (isinstance(other, StaticTree) and self.root == other.root
                and self.left == other.left and self.right == other.right)

    def __hash__(self):
        return hash(self.shape())

    def __repr__(self):
        return f"StaticTree(root={self.root!r}, size={len(self)})"

    # -- serialization -------------------------------------------------
    def to_obj(self):
        def rec(v):
            if v is None:
                return None
            return {"key": _key_str(v), "real": v in self.real_keys,
                    "left": rec(self.left[v]), "right": rec(self.right[v])}
        return _iter_obj(self, rec)

    def to_json(self) -> str:
        return json.dumps(self.to_obj())

    @classmethod
    def from_obj(cls, obj) -> "StaticTree":
        left, right, real = {}, {}, []
        stack = [obj]
        while stack:
            o = stack.pop()
            k = _parse_key(o["key"])
            if o.get("real", _is_integral(k)):
                real.append(k)
            for side, maps in (("left", left), ("right", right)):
                c = o.get(side)
                maps[k] = _parse_key(c["key"]) if c else None
                if c:
                    stack.append(c)
        return cls(_parse_key(obj["key"]), left, right, real)

    @classmethod
    def from_json(cls, text: str) -> "StaticTree":
        return cls.from_obj(json.loads(text))


def _iter_shape(t, v):
    # iterative post-order to avoid recursion limits on path-shaped trees
    out = {}
    stack = [(v, False)]
    while stack:
        u, done = stack.pop()
        if u is None:
            continue
        if done:
            out[u] = (u, out.get(t.left[u]), out.get(t.right[u]))
        else:
            stack.append((u, True))
            stack.append((t.left[u], False))
            stack.append((t.right[u], False))
    return out[v]


def _iter_obj(t, rec):
    import sys
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * len(t) + 100))
    try:
        return rec(t.root)
    finally:
        sys.setrecursionlimit(limit)


def _is_integral(k) -> bool:
    return isinstance(k, int) or (isinstance(k, Fraction) and k.denominator == 1)


def _key_str(k):
    if isinstance(k, Fraction) and k.denominator != 1:
        return f"{k.numerator}/{k.denominator}"
    return int(k)


def _parse_key(s):
    if isinstance(s, str):
        f = Fraction(s)
        return int(f) if f.denominator == 1 else f
    return s


# -- constructions ------------------------------------------------------

def from_parent_order(keys_in_insert_order) -> StaticTree:
    """Plain BST insertion, useful for building small hand-made trees."""
    it = iter(keys_in_insert_order)
    root = next(it)
    left, right = {root: None}, {root: None}
    for k in it:
        v = root
        while True:
            side = left if k < v else right
            if side[v] is None:
                side[v] = k
                left[k] = right[k] = None
                break
            v = side[v]
    return StaticTree(root, left, right)


def balanced_tree(keys) -> StaticTree:
    keys = sorted(keys)
    if not keys:
        raise InvalidArgument("need at least one key")
    if len(set(keys)) != len(keys):
        raise InvalidArgument("duplicate keys")
    left, right = {}, {}

    def build(lo, hi):
        if lo > hi:
            return None
        mid = (lo + hi) // 2
        k = keys[mid]
        left[k] = build(lo, mid - 1)
        right[k] = build(mid + 1, hi)
        return k

    root = build(0, len(keys) - 1)
    return StaticTree(root, left, right)


def path_tree(keys, root_at_min: bool = True) -> StaticTree:
    """A single spine: right path from the minimum (or left path from the max)."""
    keys = sorted(keys)
    left, right = {}, {}
    if root_at_min:
        for a, b in zip(keys, keys[1:]):
            right[a] = b
        return StaticTree(keys[0], left, right)
    for a, b in zip(keys, keys[1:]):
        left[b] = a
    return StaticTree(keys[-1], left, right)


@lru_cache(maxsize=None)
def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


def _shapes(lo, hi):
    if lo > hi:
        yield None, {}, {}
        return
    for r in range(lo, hi + 1):
        for lroot, ll, lr in _shapes(lo, r - 1):
            for rroot, rl, rr in _shapes(r + 1, hi):
                left = {**ll, **rl, r: lroot}
                right = {**lr, **rr, r: rroot}
                yield r, left, right


def enumerate_trees(n: int, cap: int = ENUM_CAP):
    """Yield every BST on keys 1..n exactly once (Catalan(n) trees)."""
    if n < 1:
        raise InvalidArgument("n must be positive")
    if n > cap:
        raise ResourceLimit(f"n={n} exceeds enumeration cap {cap}")
    for root, left, right in _shapes(1, n):
        yield StaticTree(root, left, right)


def random_treap(n: int, seed: int) -> StaticTree:
    """Treap on 1..n with uniform random priorities (a random BST)."""
    if n < 1:
        raise InvalidArgument("n must be positive")
    rng = random.Random(seed)
    prio = [rng.random() for _ in range(n)]
    # Cartesian tree by stack: max priority at the root
    left, right, stack = {}, {}, []
    for k in range(1, n + 1):
        last = None
        while stack and prio[stack[-1] - 1] < prio[k - 1]:
            last = stack.pop()
        left[k] = last
        if stack:
            right[stack[-1]] = k
        stack.append(k)
    return StaticTree(stack[0], left, right)


def tree_from_weights(weights, method: str = "median") -> StaticTree:
    """BST whose key depths follow the weights.

    ``weights`` maps key -> positive weight (or is a sequence for keys 1..n).
    ``median`` roots each subtree at the weighted median, giving
    depth(i) <= log2(W / w(i)). ``spine`` is the left-anchored construction:
    the first key at the root, a right spine of block endpoints j_i with
    w[1:j_i] >= 2^i w_1, and each block built recursively to its left.
    """
    if not isinstance(weights, dict):
        weights = {i + 1: w for i, w in enumerate(weights)}
    if not weights:
        raise InvalidArgument("empty weight vector")
    if any(w <= 0 for w in weights.values()):
        raise InvalidArgument("weights must be positive")
    keys = sorted(weights)
    w = [Fraction(weights[k]) for k in keys]
    prefix = [Fraction(0)]
    for x in w:
        prefix.append(prefix[-1] + x)
    left, right = {}, {}
    if method == "median":
        root = _median_build(keys, prefix, 0, len(keys) - 1, left, right)
    elif method == "spine":
        root = _spine_build(keys, w, prefix, 0, len(keys) - 1, left, right)
    else:
        raise InvalidArgument(f"unknown method {method!r}")
    return StaticTree(root, left, right, keys)


def _median_build(keys, prefix, lo, hi, left, right):
    stack = [(lo, hi, None, None)]
    root = None
    while stack:
        a, b, par, side = stack.pop()
        if a > b:
            if par is not None:
                (left if side == "L" else right)[par] = None
            continue
        # smallest r whose prefix reaches half of the range weight
        half = (prefix[a] + prefix[b + 1]) / 2
        r = a
        while prefix[r + 1] < half:
            r += 1
        k = keys[r]
        if par is None:
            root = k
        else:
            (left if side == "L" else right)[par] = k
        stack.append((a, r - 1, k, "L"))
        stack.append((r + 1, b, k, "R"))
    return root


def _spine_build(keys, w, prefix, lo, hi, left, right):
    if lo > hi:
        return None
    root = keys[lo]
    left[root] = None
    w1 = w[lo]
    spine_prev = root
    start = lo + 1
    i = 1
    while start <= hi:
        # j_i: minimal index with w[lo..j] >= 2^i * w1
        target = (2 ** i) * w1
        j = start
        while j < hi and prefix[j + 1] - prefix[lo] < target:
            j += 1
        node = keys[j]
        right[spine_prev] = node
        left[node] = _spine_build(keys, w, prefix, start, j - 1, left, right)
        spine_prev = node
        start = j + 1
        i += 1
    right[spine_prev] = None
    return root


def strip_auxiliary(t_aux: StaticTree, method: str = "median") -> StaticTree:
    """Tree on the real keys only, weighting key i by 4^-depth(i)."""
    if not t_aux.real_keys:
        raise InvalidArgument("no real keys")
    d = t_aux.depths
    weights = {k: Fraction(1, 4 ** d[k]) for k in t_aux.real_keys}
    return tree_from_weights(weights, method)


class MutableTree:
    """Rotatable BST with the same child/parent maps as StaticTree."""

    def __init__(self, t: StaticTree | None = None):
        if t is None:
            self.root, self.left, self.right, self.parent = None, {}, {}, {}
            self.real_keys = frozenset()
            return
        self.root = t.root
        self.left = dict(t.left)
        self.right = dict(t.right)
        self.parent = dict(t.parent)
        self.real_keys = t.real_keys

    def __contains__(self, key):
        return key in self.parent

    def is_adjacent(self, a, b) -> bool:
        return self.parent.get(a) == b or self.parent.get(b) == a

    def rotate(self, x):
        """Rotate x above its parent; x keeps its key."""
        p = self.parent[x]
        if p is None:
            raise InvalidArgument(f"cannot rotate the root {x!r}")
        g = self.parent[p]
        if self.left[p] == x:
            b = self.right[x]
            self.left[p] = b
            self.right[x] = p
        else:
            b = self.left[x]
            self.right[p] = b
            self.left[x] = p
        if b is not None:
            self.parent[b] = p
        self.parent[p] = x
        self.parent[x] = g
        if g is None:
            self.root = x
        elif self.left[g] == p:
            self.left[g] = x
        else:
            self.right[g] = x

    def depth(self, x) -> int:
        d = 0
        while self.parent[x] is not None:
            x = self.parent[x]
            d += 1
        return d

    def path(self, a, b) -> list:
        anc = []
        v = a
        while v is not None:
            anc.append(v)
            v = self.parent[v]
        pos = {v: i for i, v in enumerate(anc)}
        down = []
        v = b
        while v not in pos:
            down.append(v)
            v = self.parent[v]
        return anc[:pos[v] + 1] + down[::-1]

    def freeze(self) -> StaticTree:
        return StaticTree(self.root, self.left, self.right, self.real_keys)


def tree_distance(T: StaticTree, a, b) -> int:
    return T.distance(a, b)
