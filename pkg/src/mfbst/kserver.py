"""Online k-server on a static tree: double coverage, its lazy form, and a
multiplicative-weights meta-algorithm that hops between (tree, placement)
experts once per epoch."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from itertools import combinations

from .errors import InvalidArgument, KeyNotFound, ResourceLimit
from .fingers import MOVE, ROTATE, SERVE, FingerStep, FingerTrace
from .tree import MutableTree, StaticTree, balanced_tree, enumerate_trees

EXPERT_CAP = 5000


class TreeMetric:
    """Distances and next hops between the real keys of a tree."""

    def __init__(self, T: StaticTree):
        self.tree = T
        self.keys = T.inorder()
        self.index = {k: i for i, k in enumerate(self.keys)}
        D = T.distance_matrix()
        self.dist = D.tolist()
        n = len(self.keys)
        self.nxt = [[None] * n for _ in range(n)]
        for a in range(n):
            for b in range(n):
                if a != b:
                    self.nxt[a][b] = self.index[T.path(self.keys[a], self.keys[b])[1]]


@dataclass
class ServerState:
    metric: TreeMetric
    virtual: list  # key indices
    actual: list
    movement: int = 0  # double coverage (virtual) movement
    lazy_movement: int = 0

    @classmethod
    def start(cls, T, placement, metric=None):
        metric = metric or TreeMetric(T)
        try:
            pos = [metric.index[p] for p in placement]
        except KeyError as e:
            raise KeyNotFound(e.args[0]) from None
        return cls(metric, list(pos), list(pos))

    @property
    def k(self):
        return len(self.virtual)

    def positions(self, lazy=False):
        keys = self.metric.keys
        return [keys[i] for i in (self.actual if lazy else self.virtual)]


def _active(pos, r, dist):
    act = []
    for s, p in enumerate(pos):
        d = dist[p][r]
        blocked = False
        for s2, q in enumerate(pos):
            if s2 == s:
                continue
            if q == p:
                if s2 < s:
                    blocked = True
                    break
            elif dist[p][q] + dist[q][r] == d:
                blocked = True
                break
        if not blocked:
            act.append(s)
    return act


def double_coverage_step(state: ServerState, request):
    """Advance every active server one edge toward the request until one
    arrives. Returns (state, per-server distance moved)."""
    m = state.metric
    if request not in m.index:
        raise KeyNotFound(request)
    r = m.index[request]
    pos = state.virtual
    moved = [0] * len(pos)
    while r not in pos:
        for s in _active(pos, r, m.dist):
            pos[s] = m.nxt[pos[s]][r]
            moved[s] += 1
    state.movement += sum(moved)
    return state, moved


def _lazy_serve(state: ServerState, r: int):
    # the lowest-id server virtually on the request carries its real copy there
    s = state.virtual.index(r)
    d = state.metric.dist[state.actual[s]][r]
    state.actual[s] = r
    state.lazy_movement += d
    return s, d


def lazy_wrap(metric: TreeMetric, initial, requests, snapshots):
    """Turn a double-coverage run (virtual positions after each request, as key
    lists) into physical moves: one (server, from, to) per request."""
    actual = [metric.index[p] for p in initial]
    out = []
    for req, snap in zip(requests, snapshots):
        r = metric.index[req]
        v = [metric.index[p] for p in snap]
        s = v.index(r)
        out.append((s, metric.keys[actual[s]], req))
        actual[s] = r
    return out


@dataclass
class DCReport:
    movement: int
    lazy_movement: int
    m: int
    trace: FingerTrace
    snapshots: list = field(repr=False, default_factory=list)

    @property
    def cost(self) -> int:
        return self.movement + self.m

    @property
    def lazy_cost(self) -> int:
        return self.lazy_movement + self.m

    def to_obj(self):
        return {"movement": self.movement, "cost": self.cost,
                "lazy_movement": self.lazy_movement, "lazy_cost": self.lazy_cost}


def dc_run(T: StaticTree, X, k: int, placement=None, metric=None) -> DCReport:
    """Double coverage over X; the returned trace follows the lazy schedule."""
    if k < 1:
        raise InvalidArgument("k must be >= 1")
    if placement is None:
        placement = [T.root] * k
    if len(placement) != k:
        raise InvalidArgument("placement size differs from k")
    st = ServerState.start(T, placement, metric)
    steps, snaps = [], []
    for t, x in enumerate(X, 1):
        double_coverage_step(st, x)
        snaps.append(st.positions())
        r = st.metric.index[x]
        s = st.virtual.index(r)
        src = st.metric.keys[st.actual[s]]
        steps.extend(FingerStep(MOVE, s, key) for key in T.path(src, x)[1:])
        _lazy_serve(st, r)
        steps.append(FingerStep(SERVE, s, x, t))
    return DCReport(st.movement, st.lazy_movement, len(snaps),
                    FingerTrace(T, list(placement), steps), snaps)


# -- epoch switching -------------------------------------------------------

def _walk(mt: MutableTree, pos: list, f: int, key, steps: list):
    for v in mt.path(pos[f], key)[1:]:
        steps.append(FingerStep(MOVE, f, v))
    pos[f] = key


def _to_spine(mt: MutableTree, pos, f, steps, record=None):
    v = mt.root
    _walk(mt, pos, f, v, steps)
    while v is not None:
        l = mt.left[v]
        if l is not None:
            _walk(mt, pos, f, l, steps)
            mt.rotate(l)
            steps.append(FingerStep(ROTATE, f, l))
            if record is not None:
                record.append((l, v))
            v = l
        else:
            v = mt.right[v]
            if v is not None:
                _walk(mt, pos, f, v, steps)


def reshape(mt: MutableTree, target: StaticTree, pos: list, f: int, steps: list):
    """Rotate ``mt`` into the shape of ``target`` using finger f: fold into a
    right spine, then undo the spine-folding of the target."""
    if mt.freeze() == target:
        return
    _to_spine(mt, pos, f, steps)
    rec = []
    _to_spine(MutableTree(target), [target.root], 0, [], rec)
    for x, p in reversed(rec):
        _walk(mt, pos, f, p, steps)
        mt.rotate(p)
        steps.append(FingerStep(ROTATE, f, p))


def switch_state(tree, positions, target: StaticTree, placement, f: int = 0) -> FingerTrace:
    """Segment taking (tree, finger positions) to (target, placement): go via a
    balanced tree, park the fingers, rotate into the target with finger f,
    then return f to its slot."""
    src = tree.freeze() if isinstance(tree, MutableTree) else tree
    if sorted(src.real_keys) != sorted(target.real_keys) or len(src) != len(target):
        raise InvalidArgument("trees hold different keys")
    if len(positions) != len(placement):
        raise InvalidArgument("finger counts differ")
    for p in placement:
        if p not in target:
            raise KeyNotFound(p)
    mt = MutableTree(src)
    pos = list(positions)
    steps = []
    reshape(mt, balanced_tree(src.inorder()), pos, f, steps)
    for g, key in enumerate(placement):
        _walk(mt, pos, g, key, steps)
    reshape(mt, target, pos, f, steps)
    _walk(mt, pos, f, placement[f], steps)
    return FingerTrace(src, list(positions), steps)


def switch_norm(n: int) -> float:
    return n * max(1.0, math.log2(n)) if n > 1 else 1.0


# -- multiplicative weights --------------------------------------------------

def epoch_length(n: int) -> int:
    return max(1, math.ceil(n * math.log2(n))) if n > 1 else 1


@dataclass
class Expert:
    tree: StaticTree
    placement: tuple


def expert_universe(n: int, k: int, sample: int | None = None, seed: int = 0):
    """All (tree, placement) pairs over keys 1..n, placements being k distinct
    keys; or a seeded sample of them."""
    if k < 1 or k > n:
        raise InvalidArgument("need 1 <= k <= n")
    trees = list(enumerate_trees(n))
    places = list(combinations(range(1, n + 1), k))
    total = len(trees) * len(places)
    if sample is None:
        if total > EXPERT_CAP:
            raise ResourceLimit(f"{total} experts; pass a sample size")
        return [Expert(t, p) for t in trees for p in places], False
    rng = random.Random(seed)
    picks = rng.sample(range(total), min(sample, total))
    return [Expert(trees[i // len(places)], places[i % len(places)]) for i in sorted(picks)], True


@dataclass
class ExpertRun:
    server: list  # serving server per access
    epoch_loss: list
    epoch_start: list  # actual positions (keys) at each epoch start
    total: int


def simulate_expert(e: Expert, X, M: int, metric=None) -> ExpertRun:
    st = ServerState.start(e.tree, e.placement, metric)
    server, losses, starts = [], [], []
    for t, x in enumerate(X):
        if t % M == 0:
            starts.append(st.positions(lazy=True))
            losses.append(0)
        double_coverage_step(st, x)
        s, d = _lazy_serve(st, st.metric.index[x])
        server.append(s)
        losses[-1] += d + 1
    return ExpertRun(server, losses, starts, sum(losses))


@dataclass
class MetaReport:
    mw_cost: int  # everything the meta trace spends, switching included
    service_cost: int  # accesses served by the live experts
    switch_cost: int
    expected_cost: float  # sum over epochs of the weighted mean loss
    best_expert_cost: int
    bound_rhs: float
    experts: int
    epochs: int
    switches: int
    M: int
    c_max: int
    eps: float
    sampled: bool
    seed: int

    def holds(self) -> bool:
        return self.service_cost <= self.bound_rhs and self.expected_cost <= self.bound_rhs

    def to_obj(self):
        return dict(self.__dict__)


def expert_runs(X, experts, M):
    metrics = {}
    runs = []
    for e in experts:
        key = id(e.tree)
        if key not in metrics:
            metrics[key] = TreeMetric(e.tree)
        runs.append(simulate_expert(e, X, M, metrics[key]))
    return runs


def mw_meta(X, n: int, k: int, eps: float, seed: int, experts=None, runs=None, sampled=False):
    """Returns (trace, MetaReport, per-expert total costs).

    ``experts`` defaults to the full universe; ``runs`` lets callers reuse
    expert simulations across several eps/seed values on the same X."""
    if not 0 < eps < 1:
        raise InvalidArgument("eps must lie in (0, 1)")
    reqs = list(X)
    if experts is None:
        experts, sampled = expert_universe(n, k)
    M = epoch_length(n)
    if runs is None:
        runs = expert_runs(reqs, experts, M)
    N = len(experts)
    c_max = n * M
    rng = random.Random(seed)
    logw = [0.0] * N
    start_tree = balanced_tree(range(1, n + 1))
    mt = MutableTree(start_tree)
    pos = [start_tree.root] * k
    steps = []
    live = None
    service = switch = switches = 0
    expected = 0.0
    epochs = len(runs[0].epoch_loss) if runs else 0
    for j in range(epochs):
        top = max(logw)
        w = [math.exp(x - top) for x in logw]
        tot = sum(w)
        expected += sum(wi * r.epoch_loss[j] for wi, r in zip(w, runs)) / tot
        pick = rng.choices(range(N), weights=w)[0]
        if pick != live:
            e = experts[pick]
            seg = switch_state(mt, pos, e.tree, runs[pick].epoch_start[j])
            steps.extend(seg.steps)
            switch += len(seg.steps)
            switches += 1
            mt = MutableTree(e.tree)
            pos = list(runs[pick].epoch_start[j])
            live = pick
        before = len(steps)
        for t in range(j * M, min(len(reqs), (j + 1) * M)):
            s, x = runs[live].server[t], reqs[t]
            _walk(mt, pos, s, x, steps)
            steps.append(FingerStep(SERVE, s, x, t + 1))
        spent = len(steps) - before
        if spent != runs[live].epoch_loss[j]:
            raise AssertionError("live replay disagrees with the expert simulation")
        service += spent
        for i, r in enumerate(runs):
            logw[i] += (r.epoch_loss[j] / c_max) * math.log1p(-eps)
    best = min(r.total for r in runs)
    rhs = (1 + eps) * best + c_max * math.log(N) / eps
    trace = FingerTrace(start_tree, [start_tree.root] * k, steps)
    rep = MetaReport(len(steps), service, switch, expected, best, rhs, N, epochs,
                     switches, M, c_max, eps, sampled, seed)
    return trace, rep, [r.total for r in runs]
