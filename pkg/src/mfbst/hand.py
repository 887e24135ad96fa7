"""Simulate a k-finger trace on a single-pointer BST.

A shadow copy of the reference tree T carries the fingers. The nodes on
root-to-finger paths form a Steiner tree S. Its branch nodes, the fingers
and the root are kept as singleton units; every other S node lies on a
path between two of them and is grouped with the path nodes on the same
side of the lower endpoint. Units are consecutive runs of S in key order,
so they form a small ordered set, stored as a red-black tree whose shape
decides the top of the simulating BST. Each run is laid out as a two-chain
deque, and the subtrees of T that hang off S (knuckles) keep their shape
and hang in the gaps between consecutive S keys.

After every finger step the target layout is recomputed and the machine
is rotated into it top-down, touching only the regions that changed.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field

from .bstm import BstProgram, Machine, deque_layout, relayout, transform_ops
from .errors import InvalidArgument, KeyNotFound
from .fingers import MOVE, ROTATE, SERVE, FingerStep, FingerTrace
from .tree import MutableTree, StaticTree

UNIT_LIMIT_PER_FINGER = 6


class Unit:
    __slots__ = ("elems", "nl", "kind", "left", "right", "parent", "red")

    def __init__(self, elems, kind, nl=None):
        self.elems = elems
        self.kind = kind  # "p" (pseudofinger) or "h" (half-tendon)
        self.nl = len(elems) // 2 if nl is None else nl
        self.left = self.right = self.parent = None
        self.red = False

    @property
    def lo(self):
        return self.elems[0]

    def __repr__(self):
        return f"Unit({self.kind}, {self.elems[0]}..{self.elems[-1]}, n={len(self.elems)})"


class UnitTree:
    """Red-black tree of units ordered by key range (CLRS, sentinel-free)."""

    def __init__(self, units=()):
        self.root = self._build(list(units), 0, len(units) - 1, None)
        if self.root is not None:
            h = self._height(self.root)
            self._color(self.root, 0, h)

    def _build(self, units, lo, hi, parent):
        if lo > hi:
            return None
        mid = (lo + hi) // 2
        u = units[mid]
        u.parent = parent
        u.red = False
        u.left = self._build(units, lo, mid - 1, u)
        u.right = self._build(units, mid + 1, hi, u)
        return u

    def _height(self, u):
        return 0 if u is None else 1 + max(self._height(u.left), self._height(u.right))

    def _color(self, u, depth, h):
        # median splits keep all empty slots on the last two levels
        if u is None:
            return
        u.red = depth == h - 1 and h > 1 and not self._full(h)
        self._color(u.left, depth + 1, h)
        self._color(u.right, depth + 1, h)

    def _full(self, h):
        return self.size() == 2 ** h - 1

    def size(self):
        return sum(1 for _ in self)

    def __iter__(self):
        stack, u = [], self.root
        while stack or u is not None:
            while u is not None:
                stack.append(u)
                u = u.left
            u = stack.pop()
            yield u
            u = u.right

    def depth(self, u) -> int:
        d = 0
        while u.parent is not None:
            u = u.parent
            d += 1
        return d

    def _rotate_left(self, x):
        y = x.right
        x.right = y.left
        if y.left is not None:
            y.left.parent = x
        self._replace(x, y)
        y.left = x
        x.parent = y

    def _rotate_right(self, x):
        y = x.left
        x.left = y.right
        if y.right is not None:
            y.right.parent = x
        self._replace(x, y)
        y.right = x
        x.parent = y

    def _replace(self, old, new):
        p = old.parent
        if new is not None:
            new.parent = p
        if p is None:
            self.root = new
        elif p.left is old:
            p.left = new
        else:
            p.right = new

    def insert(self, z: Unit):
        y, x = None, self.root
        while x is not None:
            y = x
            x = x.left if z.lo < x.lo else x.right
        z.parent, z.left, z.right, z.red = y, None, None, True
        if y is None:
            self.root = z
        elif z.lo < y.lo:
            y.left = z
        else:
            y.right = z
        while z.parent is not None and z.parent.red:
            p = z.parent
            g = p.parent
            if p is g.left:
                u = g.right
                if u is not None and u.red:
                    p.red = u.red = False
                    g.red = True
                    z = g
                else:
                    if z is p.right:
                        z = p
                        self._rotate_left(z)
                        p = z.parent
                    p.red = False
                    g.red = True
                    self._rotate_right(g)
            else:
                u = g.left
                if u is not None and u.red:
                    p.red = u.red = False
                    g.red = True
                    z = g
                else:
                    if z is p.left:
                        z = p
                        self._rotate_right(z)
                        p = z.parent
                    p.red = False
                    g.red = True
                    self._rotate_left(g)
        self.root.red = False

    def delete(self, z: Unit):
        # x may be None, so track its parent explicitly
        if z.left is None or z.right is None:
            y = z
        else:
            y = z.right
            while y.left is not None:
                y = y.left
        x = y.left if y.left is not None else y.right
        x_parent = y.parent
        y_red = y.red
        self._replace(y, x)
        if y is not z:
            # relink y into z's place
            if x_parent is z:
                x_parent = y
            y.left, y.right = z.left, z.right
            if y.left is not None:
                y.left.parent = y
            if y.right is not None:
                y.right.parent = y
            self._replace(z, y)
            y.red = z.red
        z.left = z.right = z.parent = None
        if not y_red:
            self._delete_fixup(x, x_parent)

    def _delete_fixup(self, x, parent):
        def red(u):
            return u is not None and u.red

        while x is not self.root and not red(x):
            if x is parent.left:
                w = parent.right
                if red(w):
                    w.red = False
                    parent.red = True
                    self._rotate_left(parent)
                    w = parent.right
                if not red(w.left) and not red(w.right):
                    w.red = True
                    x, parent = parent, parent.parent
                else:
                    if not red(w.right):
                        w.left.red = False
                        w.red = True
                        self._rotate_right(w)
                        w = parent.right
                    w.red = parent.red
                    parent.red = False
                    w.right.red = False
                    self._rotate_left(parent)
                    x, parent = self.root, None
            else:
                w = parent.left
                if red(w):
                    w.red = False
                    parent.red = True
                    self._rotate_right(parent)
                    w = parent.left
                if not red(w.left) and not red(w.right):
                    w.red = True
                    x, parent = parent, parent.parent
                else:
                    if not red(w.left):
                        w.right.red = False
                        w.red = True
                        self._rotate_left(w)
                        w = parent.left
                    w.red = parent.red
                    parent.red = False
                    w.left.red = False
                    self._rotate_right(parent)
                    x, parent = self.root, None
        if x is not None:
            x.red = False

    def check(self) -> bool:
        """Red-black rules plus parent links; raises AssertionError."""
        if self.root is None:
            return True
        assert not self.root.red and self.root.parent is None

        def rec(u):
            if u is None:
                return 1
            for c in (u.left, u.right):
                if c is not None:
                    assert c.parent is u
                    assert not (u.red and c.red)
            bl, br = rec(u.left), rec(u.right)
            assert bl == br
            return bl + (0 if u.red else 1)

        rec(self.root)
        units = list(self)
        assert all(a.elems[-1] < b.lo for a, b in zip(units, units[1:]))
        return True


# -- shadow structure -----------------------------------------------------

@dataclass
class Structure:
    skeys: list  # S in key order
    pseudo: set  # P
    runs: list  # list of (kind, sorted elems), in key order
    knuckles: dict  # gap index -> root of the hanging subtree


def steiner_structure(t: MutableTree, fingers) -> Structure:
    inS = {t.root}
    for f in fingers:
        v = f
        while v not in inS:
            inS.add(v)
            v = t.parent[v]
    sl = {v: t.left[v] if t.left[v] in inS else None for v in inS}
    sr = {v: t.right[v] if t.right[v] in inS else None for v in inS}
    pseudo = set(fingers) | {t.root}
    pseudo |= {v for v in inS if sl[v] is not None and sr[v] is not None}

    skeys, stack, v = [], [], t.root
    while stack or v is not None:
        while v is not None:
            stack.append(v)
            v = sl[v]
        v = stack.pop()
        skeys.append(v)
        v = sr[v]

    # each non-pseudofinger node joins the half of its path on its side of
    # the lower endpoint
    group = {}
    for x in pseudo:
        for c in (sl[x], sr[x]):
            path = []
            while c is not None and c not in pseudo:
                path.append(c)
                c = sl[c] if sl[c] is not None else sr[c]
            y = c
            for v in path:
                group[v] = (y, v < y)
    runs = []
    for v in skeys:
        if v in pseudo:
            runs.append(("p", [v]))
        elif runs and runs[-1][0] == "h" and group[runs[-1][1][-1]] == group[v]:
            runs[-1][1].append(v)
        else:
            runs.append(("h", [v]))

    knuckles = {}
    for v in inS:
        for c in (t.left[v], t.right[v]):
            if c is not None and c not in inS:
                knuckles[bisect.bisect_left(skeys, c)] = c
    return Structure(skeys, pseudo, runs, knuckles)


def _match_units(old_units, runs):
    """Pair old units with new runs by largest overlap (order preserving)."""
    owner = {}
    for u in old_units:
        for e in u.elems:
            owner[e] = u
    pairs = []
    for j, (kind, elems) in enumerate(runs):
        counts = {}
        for e in elems:
            u = owner.get(e)
            if u is not None:
                counts[u] = counts.get(u, 0) + 1
        for u, c in counts.items():
            pairs.append((c, u.kind == kind, j, u))
    pairs.sort(key=lambda p: (-p[0], not p[1], p[2]))
    taken, match = set(), {}
    for c, _, j, u in pairs:
        if j in match or u in taken:
            continue
        match[j] = u
        taken.add(u)
    return match


# -- hand state -----------------------------------------------------------

@dataclass
class StepStats:
    cost: int = 0
    unit_delta: int = 0
    relayouts: int = 0
    units: int = 0
    max_pseudo_depth: int = 0


class HandState:
    def __init__(self, T: StaticTree, placement, check: bool = True):
        self.T0 = T
        self.shadow = MutableTree(T)
        for key in placement:
            if key not in self.shadow:
                raise KeyNotFound(key)
        self.fingers = list(placement)
        self.k = len(self.fingers)
        self.check = check
        self.m = Machine(T)
        self.served = 0
        self.log: list[StepStats] = []
        st = steiner_structure(self.shadow, self.fingers)
        self.units = UnitTree([Unit(list(elems), kind) for kind, elems in st.runs])
        self.struct = st
        tl, tr, troot = self._target()
        transform_ops(self.m, StaticTree(troot, tl, tr))
        self.init_cost = self.m.cost
        if check:
            self._check_invariants()

    # target layout -----------------------------------------------------
    def _target(self):
        st = self.struct
        tl = dict(self.shadow.left)
        tr = dict(self.shadow.right)
        pos = {v: i for i, v in enumerate(st.skeys)}

        def place(u):
            if u is None:
                return None
            root, left, right = deque_layout(u.elems, u.nl)
            tl.update(left)
            tr.update(right)
            tl[u.elems[0]] = place(u.left)
            tr[u.elems[-1]] = place(u.right)
            return root

        troot = place(self.units.root)
        for v in st.skeys:
            if tl[v] is None:
                tl[v] = st.knuckles.get(pos[v])
            if tr[v] is None:
                tr[v] = st.knuckles.get(pos[v] + 1)
        return tl, tr, troot

    # fixer ---------------------------------------------------------------
    def _fix(self, tl, tr, troot):
        m = self.m
        dirty = sorted((v for v in m.parent if m.left[v] != tl[v] or m.right[v] != tr[v]))
        if not dirty and m.root == troot:
            return
        dset = set(dirty)

        def refresh(v):
            if v is None:
                return
            bad = m.left[v] != tl[v] or m.right[v] != tr[v]
            if bad and v not in dset:
                dset.add(v)
                bisect.insort(dirty, v)
            elif not bad and v in dset:
                dset.discard(v)
                dirty.pop(bisect.bisect_left(dirty, v))

        def any_dirty(lo, hi):
            i = 0 if lo is None else bisect.bisect_right(dirty, lo)
            return i < len(dirty) and (hi is None or dirty[i] < hi)

        tasks = [(None, None, troot, None, None)]
        while tasks:
            above, side, t, lo, hi = tasks.pop()
            cur = m.root if above is None else (m.left[above] if side == "L" else m.right[above])
            if cur != t:
                m.walk_to(t)
                while m.parent[t] != above:
                    p = m.parent[t]
                    g = m.parent[p]
                    m.rotate_ptr()
                    refresh(p)
                    refresh(t)
                    refresh(g)
            # right first so the left subtree is handled next (stack order)
            if tr[t] is not None and (m.right[t] != tr[t] or any_dirty(t, hi)):
                tasks.append((t, "R", tr[t], t, hi))
            if tl[t] is not None and (m.left[t] != tl[t] or any_dirty(lo, t)):
                tasks.append((t, "L", tl[t], lo, t))
        assert not dirty, "fixer left mismatches"

    # stepping ------------------------------------------------------------
    def step(self, s: FingerStep) -> list:
        start = self.m.cost
        stats = StepStats()
        if not 0 <= s.finger < self.k:
            raise InvalidArgument(f"unknown finger {s.finger}")
        cur = self.fingers[s.finger]
        if s.op == SERVE:
            self.m.descend_to(cur)
            if s.key is not None and s.key != cur:
                raise InvalidArgument(f"finger {s.finger} is on {cur!r}, not {s.key!r}")
            self.m.mark_serve(cur)
            self.served += 1
        elif s.op in (MOVE, ROTATE):
            if s.op == MOVE:
                if s.key not in self.shadow or not self.shadow.is_adjacent(cur, s.key):
                    raise InvalidArgument(f"move {cur!r} -> {s.key!r} is not along an edge")
                self.fingers[s.finger] = s.key
            else:
                if self.shadow.parent[cur] is None:
                    raise InvalidArgument("rotation at the root")
                self.shadow.rotate(cur)
            self._restructure(stats)
            self.m.walk_to(self.fingers[s.finger])
        else:
            raise InvalidArgument(f"unknown op {s.op!r}")
        stats.cost = self.m.cost - start
        if self.check:
            stats.units = len(self.struct.runs)
            stats.max_pseudo_depth = self._check_invariants()
        self.log.append(stats)
        return self.m.ops[start:]

    def _restructure(self, stats: StepStats):
        st = steiner_structure(self.shadow, self.fingers)
        old_units = list(self.units)
        match = _match_units(old_units, st.runs)
        matched = set(match.values())
        delta = 0
        # deque end updates, splitting first where a side would run dry
        for j, u in match.items():
            kind, elems = st.runs[j]
            new = set(elems)
            common = [e for e in u.elems if e in new]
            a = u.elems.index(common[0])
            b = len(u.elems) - 1 - u.elems.index(common[-1])
            c = elems.index(common[0])
            d = len(elems) - 1 - elems.index(common[-1])
            delta += a + b + c + d
            if u.nl < a or len(u.elems) - 1 - u.nl < b:
                nl2 = a + len(common) // 2
                relayout(self.m, u.elems, u.nl, nl2)
                u.nl = nl2
                stats.relayouts += 1
            u.nl = u.nl - a + c
            u.elems = list(elems)
            u.kind = kind
        for u in old_units:
            if u not in matched:
                self.units.delete(u)
                delta += 1
        for j, (kind, elems) in enumerate(st.runs):
            if j not in match:
                self.units.insert(Unit(list(elems), kind))
                delta += 1
        stats.unit_delta = delta
        self.struct = st
        self._fix(*self._target())

    # invariants ----------------------------------------------------------
    def _check_invariants(self) -> int:
        st = self.struct
        units = list(self.units)
        flat = [e for u in units for e in u.elems]
        assert flat == st.skeys, "units do not partition S in order"
        assert all(a.elems[-1] < b.elems[0] for a, b in zip(units, units[1:]))
        assert len(units) <= UNIT_LIMIT_PER_FINGER * max(1, self.k)
        for u in units:
            assert (u.kind == "p") == (u.elems[0] in st.pseudo)
        worst = 0
        for v in st.pseudo:
            worst = max(worst, self.m.depth(v))
        return worst

    def program(self) -> BstProgram:
        return self.m.program(self.T0)

    def dump(self) -> list:
        """Debug view: one entry per unit, in key order."""
        return [{"kind": "pseudofinger" if u.kind == "p" else "half-tendon",
                 "lo": u.elems[0], "hi": u.elems[-1], "size": len(u.elems)} for u in self.units]


def init_hand(T: StaticTree, placement, check: bool = True):
    hs = HandState(T, placement, check)
    return hs, hs.m.freeze()


def simulate_step(hs: HandState, step: FingerStep):
    return hs, hs.step(step)


@dataclass
class SimulationReport:
    program: BstProgram
    init_cost: int
    step_cost: int
    steps: int
    k: int
    max_unit_delta: int = 0
    max_units: int = 0
    max_pseudo_depth: int = 0
    relayouts: int = 0
    per_step: list = field(default_factory=list, repr=False)

    @property
    def cost(self) -> int:
        return self.init_cost + self.step_cost

    def per_step_cost(self) -> float:
        return self.step_cost / max(1, self.steps)


def simulate_trace(T: StaticTree, placement, trace: FingerTrace, X=None,
                   check: bool = True) -> SimulationReport:
    """Run every trace step through the hand and collect the BST program.

    Each segment depends only on the steps so far, so the simulation is online.
    """
    hs = HandState(T, placement, check)
    for s in trace.steps:
        hs.step(s)
    if X is not None and hs.served != len(list(X)):
        raise InvalidArgument("trace does not serve every access")
    log = hs.log
    return SimulationReport(
        program=hs.program(), init_cost=hs.init_cost, step_cost=hs.m.cost - hs.init_cost,
        steps=len(trace.steps), k=hs.k,
        max_unit_delta=max((s.unit_delta for s in log), default=0),
        max_units=max((s.units for s in log), default=0),
        max_pseudo_depth=max((s.max_pseudo_depth for s in log), default=0),
        relayouts=sum(s.relayouts for s in log),
        per_step=[s.cost for s in log])
