"""Virtual trees over time-stamped requests, their core/body decomposition,
and the recursive finger-group strategy that serves X through them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InvalidArgument, KeyNotFound
from .fingers import MOVE, SERVE, FingerStep, FingerTrace
from .tree import StaticTree

MAX_WINDOW = 4


def nf(i: int) -> int:
    """Fingers used by a level-i body: nf(1) = 1, nf(i) = 1 + (i-1) nf(i-1)."""
    if i < 1:
        raise InvalidArgument("level must be >= 1")
    out = 1
    for j in range(2, i + 1):
        out = 1 + (j - 1) * out
    return out


@dataclass
class VirtualTree:
    tree: StaticTree
    keys: list  # keys[t] = x_t, keys[0] = root of the reference tree
    parent: list  # parent[t] for t >= 1; parent[0] = None
    weight: list  # weight[t] = d_T(x_t, x_parent) + 1; weight[0] = 0
    ell: int

    @property
    def m(self) -> int:
        return len(self.keys) - 1

    def total_weight(self) -> int:
        return sum(self.weight)

    def children(self) -> list:
        kids = [[] for _ in self.keys]
        for v in range(1, len(self.keys)):
            kids[self.parent[v]].append(v)
        return kids

    def depth(self, v) -> int:
        d = 0
        while v:
            v = self.parent[v]
            d += 1
        return d

    def path(self, a: int, b: int) -> list:
        """Vertices on the tree path from a to b."""
        up, down = [a], [b]
        while up[-1] != down[-1]:
            # the later vertex is never an ancestor of the earlier one
            if up[-1] > down[-1]:
                up.append(self.parent[up[-1]])
            else:
                down.append(self.parent[down[-1]])
        return up + down[-2::-1]

    def path_weight(self, a: int, b: int) -> int:
        p = self.path(a, b)
        return sum(self.weight[v] if self.parent[v] == u else self.weight[u]
                   for u, v in zip(p, p[1:]))

    def active_edges(self, t: int) -> int:
        return sum(1 for v in range(1, len(self.keys)) if self.parent[v] < t <= v)


def build_virtual_tree(T: StaticTree, X, ell: int) -> VirtualTree:
    """Parent of request i is the closest (in T) of the previous ell requests,
    the root standing in as request 0; ties go to the latest request."""
    if ell < 1:
        raise InvalidArgument("window must be >= 1")
    keys = [T.root] + list(X)
    for x in keys[1:]:
        if x not in T:
            raise KeyNotFound(x)
    parent, weight = [None], [0]
    for i in range(1, len(keys)):
        best, arg = None, None
        for j in range(i - 1, max(0, i - ell) - 1, -1):
            d = T.distance(keys[i], keys[j])
            if best is None or d < best:
                best, arg = d, j
        parent.append(arg)
        weight.append(best + 1)
    return VirtualTree(T, keys, parent, weight, ell)


@dataclass
class Body:
    level: int
    start: int
    end: int
    vertices: list
    core: list
    children: list = field(default_factory=list)
    groups: list = field(default_factory=list)  # lists of child bodies
    parent: "Body | None" = None

    @property
    def span(self):
        return (self.start, self.end)

    def active(self, t: int) -> bool:
        return self.start < t <= self.end

    def core_weight(self, vt: VirtualTree) -> int:
        return sum(vt.weight[v] for v in self.core[1:])

    def core_plus_weight(self, vt: VirtualTree) -> int:
        return self.core_weight(vt) + sum(vt.weight[c.start] for c in self.children)


@dataclass
class BodyDecomposition:
    vt: VirtualTree
    root: Body
    bodies: list
    core_of: dict  # vertex -> body whose core holds it

    def check(self) -> list:
        """Structural checks; returns a list of violated properties (empty if fine)."""
        vt, bad = self.vt, []
        ell = vt.ell
        if any(vt.active_edges(t) > ell for t in range(1, vt.m + 1)):
            bad.append("more than ell active edges")
        seen = [v for b in self.bodies for v in b.core]
        if sorted(seen) != list(range(vt.m + 1)):
            bad.append("cores do not partition the vertices")
        for b in self.bodies:
            if b.level <= 0 and len(b.vertices) > 1:
                bad.append("body below level 1 has edges")
            for t in range(b.start + 1, b.end + 1):
                if sum(1 for c in b.children if c.active(t)) > max(0, b.level - 1):
                    bad.append("too many active child bodies")
                    break
            if len(b.groups) > max(0, b.level - 1):
                bad.append("too many groups")
            for g in b.groups:
                if any(x.end > y.start for x, y in zip(g, g[1:])):
                    bad.append("overlapping spans inside a group")
        return sorted(set(bad))

    def to_obj(self):
        def rec(b):
            return {"level": b.level, "span": [b.start, b.end], "core": b.core,
                    "groups": [[b.children.index(c) for c in g] for g in b.groups],
                    "children": [rec(c) for c in b.children]}
        return rec(self.root)

    def dump(self) -> str:
        lines = []

        def rec(b, indent):
            lines.append(f"{'  ' * indent}level {b.level} span ({b.start},{b.end}] core {b.core}")
            for c in b.children:
                rec(c, indent + 1)

        rec(self.root, 0)
        return "\n".join(lines)


def decompose(vt: VirtualTree, ell: int | None = None) -> BodyDecomposition:
    ell = vt.ell if ell is None else ell
    kids = vt.children()
    # every body is a full subtree; precompute subtree vertices and latest vertex
    order = list(range(vt.m + 1))
    latest = list(order)
    for v in reversed(order[1:]):
        p = vt.parent[v]
        latest[p] = max(latest[p], latest[v])

    def subtree(v):
        out, stack = [], [v]
        while stack:
            u = stack.pop()
            out.append(u)
            stack.extend(kids[u])
        return sorted(out)

    bodies, core_of = [], {}
    root = None
    stack = [(0, ell, None)]
    while stack:
        v, level, par = stack.pop()
        e = latest[v]
        core = [e]
        while core[-1] != v:
            core.append(vt.parent[core[-1]])
        core.reverse()
        b = Body(level, v, e, subtree(v), core, parent=par)
        bodies.append(b)
        for u in core:
            core_of[u] = b
        if par is None:
            root = b
        else:
            par.children.append(b)
        on_core = set(core)
        for u in core:
            for c in kids[u]:
                if c not in on_core:
                    stack.append((c, level - 1, b))
    for b in bodies:
        b.children.sort(key=lambda c: c.start)
        for c in b.children:
            for g in b.groups:
                if g[-1].end <= c.start:
                    g.append(c)
                    break
            else:
                b.groups.append([c])
    return BodyDecomposition(vt, root, bodies, core_of)


@dataclass
class StrategyResult:
    trace: FingerTrace
    virtual_cost: int  # sum of virtual path weights moved
    body_cost: dict  # id(body) -> own virtual cost


def vtree_strategy(vt: VirtualTree, dec: BodyDecomposition) -> FingerTrace:
    return run_strategy(vt, dec).trace


def run_strategy(vt: VirtualTree, dec: BodyDecomposition) -> StrategyResult:
    """Serve X with nf(ell) fingers that all start at the root of T, keeping
    per-body tallies of the virtual weight moved."""
    ell = dec.root.level
    if ell != vt.ell:
        raise InvalidArgument("decomposition level differs from the window")
    if ell > MAX_WINDOW:
        raise InvalidArgument(f"window above {MAX_WINDOW}")
    k = nf(ell)
    T = vt.tree
    where = [0] * k  # virtual vertex of each finger
    steps = []
    own = {id(b): 0 for b in dec.bodies}
    group_of = {}
    for b in dec.bodies:
        for j, g in enumerate(b.groups):
            for pos, c in enumerate(g):
                group_of[id(c)] = (j, pos, g)

    def move(f, target, body):
        src = where[f]
        if src == target:
            return
        path = vt.path(src, target)
        for a, c in zip(path, path[1:]):
            for key in T.path(vt.keys[a], vt.keys[c])[1:]:
                steps.append(FingerStep(MOVE, f, key))
        own[id(body)] += vt.path_weight(src, target)
        where[f] = target

    def chain(u):
        out, b = [], dec.core_of[u]
        while b is not None:
            out.append(b)
            b = b.parent
        return out[::-1]

    for u in range(1, vt.m + 1):
        bodies = chain(u)
        F = list(range(k))
        pending = []  # moves to run after the serve, innermost first
        for depth, H in enumerate(bodies):
            if H is bodies[-1]:
                f = F[-1]
                move(f, u, H)
                steps.append(FingerStep(SERVE, f, vt.keys[u], u))
                if u == H.end:
                    for g in F:
                        move(g, H.start, H)
                break
            child = bodies[depth + 1]
            j, pos, group = group_of[id(child)]
            size = nf(H.level - 1)
            Fj = F[j * size:(j + 1) * size]
            if u == child.start and pos == 0:
                for g in Fj:
                    move(g, child.start, H)
            if u == child.end:
                target = H.end if pos == len(group) - 1 else group[pos + 1].start
                pending.append((Fj, target, H))
            F = Fj
        for Fj, target, H in reversed(pending):
            for g in Fj:
                move(g, target, H)
    trace = FingerTrace(T, [T.root] * k, steps)
    return StrategyResult(trace, sum(own.values()), own)


def body_checks(dec: BodyDecomposition, res: StrategyResult) -> list:
    """Per-body own-cost bound 2 nf(i) w(C+(H)); returns offending bodies."""
    vt = dec.vt
    return [b for b in dec.bodies
            if res.body_cost[id(b)] > 2 * nf(max(1, b.level)) * b.core_plus_weight(vt)]


def strategy_bound(vt: VirtualTree) -> int:
    return 2 * math.factorial(vt.ell) * vt.total_weight()
