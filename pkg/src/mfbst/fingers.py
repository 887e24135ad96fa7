"""k-finger traces, the exact offline k-finger optimum, and explicit
finger strategies.

Cost convention: serving access t costs 1 plus the number of edges the
serving finger walks. Movement and the per-access surcharge are kept
apart so k-server code can reuse the movement-only numbers.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import InvalidArgument, KeyNotFound, ResourceLimit
from .seq import AccessSequence, MonotonePartition
from .tree import (ENUM_CAP, MutableTree, StaticTree, _key_str, _parse_key,
                   enumerate_trees)

DP_CAP = 2_000_000

MOVE, ROTATE, SERVE = "move", "rotate", "serve"


@dataclass(frozen=True)
class FingerStep:
    op: str
    finger: int
    key: object = None  # move target / node rotated / node served
    t: int = 0  # 1-based access index, serve steps only

    def to_obj(self):
        return {"op": self.op, "finger": self.finger,
                "key": None if self.key is None else _key_str(self.key), "t": self.t}

    @classmethod
    def from_obj(cls, o):
        key = o.get("key")
        return cls(o["op"], o["finger"], None if key is None else _parse_key(key), o.get("t", 0))


@dataclass
class FingerTrace:
    tree: StaticTree
    placement: list  # finger id -> initial key
    steps: list = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.placement)

    @property
    def move_steps(self) -> int:
        return sum(1 for s in self.steps if s.op == MOVE)

    @property
    def rotation_steps(self) -> int:
        return sum(1 for s in self.steps if s.op == ROTATE)

    def cost(self) -> int:
        """Moves plus rotations plus one per served access."""
        return len(self.steps)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(s.to_obj()) + "\n" for s in self.steps)

    @staticmethod
    def steps_from_jsonl(text: str) -> list:
        return [FingerStep.from_obj(json.loads(line)) for line in text.splitlines() if line.strip()]


@dataclass
class TraceReport:
    ok: bool
    move_steps: int = 0
    rotation_steps: int = 0
    error_index: int | None = None
    message: str = ""


def verify_trace(trace: FingerTrace, X) -> TraceReport:
    """Replay ``trace`` and check every step plus serve coverage of X."""
    reqs = list(X)
    tree = MutableTree(trace.tree)
    pos = list(trace.placement)
    for f, key in enumerate(pos):
        if key not in tree:
            return TraceReport(False, error_index=-1, message=f"finger {f} placed off-tree")
    moves = rots = 0
    next_t = 1
    for i, s in enumerate(trace.steps):
        if not 0 <= s.finger < len(pos):
            return TraceReport(False, moves, rots, i, "unknown finger")
        cur = pos[s.finger]
        if s.op == MOVE:
            if s.key not in tree or not tree.is_adjacent(cur, s.key):
                return TraceReport(False, moves, rots, i, "move to a non-neighbor")
            pos[s.finger] = s.key
            moves += 1
        elif s.op == ROTATE:
            if tree.parent[cur] is None:
                return TraceReport(False, moves, rots, i, "rotation at the root")
            tree.rotate(cur)
            rots += 1
        elif s.op == SERVE:
            if s.t != next_t or next_t > len(reqs):
                return TraceReport(False, moves, rots, i, "serve out of order")
            if cur != reqs[next_t - 1]:
                return TraceReport(False, moves, rots, i, "serve on the wrong node")
            next_t += 1
        else:
            return TraceReport(False, moves, rots, i, f"unknown op {s.op!r}")
    if next_t != len(reqs) + 1:
        return TraceReport(False, moves, rots, len(trace.steps), "not every access served")
    return TraceReport(True, moves, rots)


# -- exact optimum --------------------------------------------------------

@lru_cache(maxsize=64)
def _config_tables(n: int, k: int):
    """Configurations are k-subsets of node indices, stored as bitmasks.

    For each node x: the configurations containing x, and for each of them
    the predecessor configurations where one finger sat on f (not in the
    configuration) and walked to x.
    """
    configs = [sum(1 << i for i in c) for c in combinations(range(n), k)]
    index = {c: i for i, c in enumerate(configs)}
    per_x = []
    for x in range(n):
        bit = 1 << x
        hold = [c for c in configs if c & bit]
        fs = [f for f in range(n)]
        nbr = np.zeros((len(hold), n - k), dtype=np.int64)
        fcol = np.zeros((len(hold), n - k), dtype=np.int64)
        for r, c in enumerate(hold):
            outside = [f for f in fs if not c >> f & 1]
            for j, f in enumerate(outside):
                nbr[r, j] = index[(c & ~bit) | (1 << f)]
                fcol[r, j] = f
        per_x.append((np.array([index[c] for c in hold], dtype=np.int64), nbr, fcol))
    return configs, index, per_x


def _check_cap(n, k, cap):
    load = math.comb(n - 1, k - 1) * (n - k + 1)
    if load > cap:
        raise ResourceLimit(f"{load} transitions per access exceeds cap {cap}")


def _dp_movement(D: np.ndarray, xs, k: int, init=None, back: bool = False):
    """Min-movement DP over a batch of distance matrices D[b, i, j].

    Returns final cost arrays (B, C) and optional back pointers (single
    batch only): per step, the node the serving finger came from or -1.
    """
    B, n, _ = D.shape
    configs, index, per_x = _config_tables(n, k)
    C = len(configs)
    if init is None:
        cost = np.zeros((B, C), dtype=np.int64)
    else:
        cost = np.full((B, C), np.iinfo(np.int64).max // 4, dtype=np.int64)
        cost[:, index[init]] = 0
    big = np.iinfo(np.int64).max // 4
    backs = []
    for x in xs:
        hold, nbr, fcol = per_x[x]
        stay = cost[:, hold]
        new = np.full((B, C), big, dtype=np.int64)
        if nbr.shape[1]:
            mv = cost[:, nbr] + D[:, fcol, x]
            arg = mv.argmin(axis=-1)
            mvmin = np.take_along_axis(mv, arg[..., None], axis=-1)[..., 0]
            best = np.minimum(stay, mvmin)
            if back:
                choice = np.where(stay[0] <= mvmin[0], -1, fcol[np.arange(len(hold)), arg[0]])
                backs.append(choice)
        else:
            best = stay
            if back:
                backs.append(np.full(len(hold), -1))
        new[:, hold] = np.minimum(best, big)
        cost = new
    return cost, backs


@dataclass
class KFingerResult:
    cost: int  # movement + m
    movement: int
    assignment: list  # finger id serving each access
    placement: list  # finger id -> initial key


def optimal_k_finger_cost(T: StaticTree, X, k: int, cap: int = DP_CAP,
                          initial=None) -> KFingerResult:
    """Exact offline optimum of sum_t (1 + d_T(x_t, serving finger)).

    Minimised over assignments and (unless ``initial`` is given) over all
    initial placements. Fingers occupy distinct nodes; k beyond the tree
    size behaves like k = |T|.
    """
    if k < 1:
        raise InvalidArgument("k must be >= 1")
    reqs = list(X)
    keys = T.inorder()
    idx = T.index
    n = len(keys)
    kk = min(k, n)
    _check_cap(n, kk, cap)
    for x in reqs:
        if x not in idx:
            raise KeyNotFound(x)
    xs = [idx[x] for x in reqs]
    init_mask = None
    if initial is not None:
        if len(set(initial)) != kk:
            raise InvalidArgument("initial placement must be distinct keys, one per finger")
        init_mask = sum(1 << idx[v] for v in initial)
    D = T.distance_matrix()[None]
    cost, backs = _dp_movement(D, xs, kk, init_mask, back=True)
    configs, index, per_x = _config_tables(n, kk)
    final = int(cost[0].argmin())
    movement = int(cost[0, final])
    # walk back to the initial configuration
    chosen = []
    c = configs[final]
    for step in range(len(xs) - 1, -1, -1):
        x = xs[step]
        hold = per_x[x][0]
        r = int(np.searchsorted(hold, index[c]))
        f = int(backs[step][r])
        chosen.append(f)
        if f >= 0:
            c = (c & ~(1 << x)) | (1 << f)
    chosen.reverse()
    init_nodes = [i for i in range(n) if c >> i & 1]
    placement = [keys[i] for i in init_nodes]
    where = {node: fid for fid, node in enumerate(init_nodes)}
    assignment = []
    for x, f in zip(xs, chosen):
        if f < 0:
            fid = where[x]
        else:
            fid = where.pop(f)
            where[x] = fid
        assignment.append(fid)
    # pad extra fingers (k > |T|) onto already-occupied nodes; they never move
    placement += [placement[0]] * (k - kk)
    return KFingerResult(movement + len(xs), movement, assignment, placement)


def k_finger_costs_over_trees(X: AccessSequence, ks, cap: int = ENUM_CAP, batch: int = 4096):
    """Exact F^k(X) for every k in ``ks`` by enumerating all trees on [n].

    Returns {k: (cost, best tree)}.
    """
    trees = list(enumerate_trees(X.n, cap))
    xs = [x - 1 for x in X]
    out = {}
    for k in ks:
        kk = min(k, X.n)
        best, best_tree = None, None
        for lo in range(0, len(trees), batch):
            chunk = trees[lo:lo + batch]
            D = np.stack([t.distance_matrix() for t in chunk])
            cost, _ = _dp_movement(D, xs, kk)
            per_tree = cost.min(axis=1)
            j = int(per_tree.argmin())
            if best is None or per_tree[j] < best:
                best, best_tree = int(per_tree[j]), chunk[j]
        out[k] = (best + len(xs), best_tree)
    return out


def optimal_k_finger_cost_over_trees(X: AccessSequence, k: int, cap: int = ENUM_CAP):
    return k_finger_costs_over_trees(X, [k], cap)[k]


# -- traces from strategies ----------------------------------------------

def strategy_to_trace(T: StaticTree, placement, assignment, X) -> FingerTrace:
    """Expand an assignment into edge-by-edge moves followed by serves."""
    reqs = list(X)
    if len(assignment) != len(reqs):
        raise InvalidArgument("assignment length differs from the sequence")
    for v in placement:
        if v not in T:
            raise InvalidArgument(f"placement key {v!r} not in tree")
    pos = list(placement)
    steps = []
    for t, (x, f) in enumerate(zip(reqs, assignment), start=1):
        if not 0 <= f < len(pos):
            raise InvalidArgument(f"finger {f} not placed")
        for v in T.path(pos[f], x)[1:]:
            steps.append(FingerStep(MOVE, f, v))
        pos[f] = x
        steps.append(FingerStep(SERVE, f, x, t))
    return FingerTrace(T, list(placement), steps)


def monotone_strategy(T: StaticTree, X: AccessSequence, partition: MonotonePartition) -> FingerTrace:
    """Finger i serves chain i; all fingers start on the smallest key."""
    if not partition.validate(X, strict=False):
        raise InvalidArgument("partition does not split X into increasing chains")
    owner = {}
    for ci, chain in enumerate(partition.chains):
        for pos in chain:
            owner[pos] = ci
    start = min(T.real_keys) if T.real_keys else T.inorder()[0]
    placement = [start] * len(partition.chains)
    assignment = [owner[p] for p in range(len(X))]
    return strategy_to_trace(T, placement, assignment, X)


def hierarchy_tree(n: int, k: int) -> StaticTree:
    """Reference tree for the tilted grid: a balanced gadget over k block
    anchors l(i-1)+1/2, each carrying its block as a right path."""
    if k < 1 or n % k:
        raise InvalidArgument("k must divide n")
    ell = n // k
    left, right = {}, {}
    anchors = [Fraction(2 * ell * i + 1, 2) for i in range(k)]
    for i, a in enumerate(anchors):
        block = list(range(ell * i + 1, ell * (i + 1) + 1))
        left[a] = None
        right[a] = block[0]
        for u, v in zip(block, block[1:]):
            right[u] = v
        for u in block:
            left.setdefault(u, None)
        right.setdefault(block[-1], None)
    gaps = [Fraction(4 * ell * (i + 1) + 1, 4) for i in range(k - 1)]

    def build(lo, hi):
        if lo == hi:
            return anchors[lo]
        mid = (lo + hi) // 2
        g = gaps[mid]
        left[g] = build(lo, mid)
        right[g] = build(mid + 1, hi)
        return g

    root = build(0, k - 1)
    return StaticTree(root, left, right, range(1, n + 1))


def hierarchy_strategy(n: int, k: int):
    """Serve the tilted grid with one finger per block, all starting at the root."""
    T = hierarchy_tree(n, k)
    ell = n // k
    from .seq import gen_tilted_grid
    X = gen_tilted_grid(n, k)
    assignment = [(x - 1) // ell for x in X]
    return T, strategy_to_trace(T, [T.root] * k, assignment, X)


def random_trace(T: StaticTree, k: int, steps: int, seed: int,
                 serve_rate: float = 0.15, rotate_rate: float = 0.0):
    """Random walk of k fingers with occasional serves and rotations.

    Returns (trace, X) where X lists the served keys in order.
    """
    import random
    rng = random.Random(seed)
    shadow = MutableTree(T)
    keys = T.inorder()
    pos = [rng.choice(keys) for _ in range(k)]
    placement = list(pos)
    out, served = [], []
    for _ in range(steps):
        f = rng.randrange(k)
        r = rng.random()
        v = pos[f]
        if r < serve_rate:
            served.append(v)
            out.append(FingerStep(SERVE, f, v, len(served)))
        elif r < serve_rate + rotate_rate and shadow.parent[v] is not None:
            shadow.rotate(v)
            out.append(FingerStep(ROTATE, f, v))
        else:
            nbrs = [u for u in (shadow.parent[v], shadow.left[v], shadow.right[v]) if u is not None]
            if not nbrs:
                served.append(v)
                out.append(FingerStep(SERVE, f, v, len(served)))
                continue
            pos[f] = rng.choice(nbrs)
            out.append(FingerStep(MOVE, f, pos[f]))
    return FingerTrace(T, placement, out), served
