"""Single-pointer BST machine, programs, and a deque stored in a BST.

Ops are single letters: R (reset pointer to root), U (up), L (left child),
r (right child), t (rotate the pointer's node above its parent). Every op
costs 1. A program marks serves with ``*`` in its compact string form.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import EmptyContainer, InvalidArgument
from .tree import MutableTree, StaticTree

RESET, UP, LEFT, RIGHT, ROTATE = "R", "U", "L", "r", "t"
OPS = (RESET, UP, LEFT, RIGHT, ROTATE)
SERVE_MARK = "*"


class MachineError(InvalidArgument):
    pass


class Machine(MutableTree):
    """A rotatable BST with one pointer that records every op it performs."""

    def __init__(self, tree: StaticTree | None = None):
        super().__init__(tree)
        self.ptr = self.root
        self.ops: list[str] = []
        self.serves: list[int] = []  # op count at each serve

    @property
    def cost(self) -> int:
        return len(self.ops)

    def reset(self):
        self.ptr = self.root
        self.ops.append(RESET)

    def up(self):
        p = self.parent[self.ptr]
        if p is None:
            raise MachineError("up from the root")
        self.ptr = p
        self.ops.append(UP)

    def go_left(self):
        c = self.left[self.ptr]
        if c is None:
            raise MachineError(f"no left child at {self.ptr!r}")
        self.ptr = c
        self.ops.append(LEFT)

    def go_right(self):
        c = self.right[self.ptr]
        if c is None:
            raise MachineError(f"no right child at {self.ptr!r}")
        self.ptr = c
        self.ops.append(RIGHT)

    def rotate_ptr(self):
        if self.parent[self.ptr] is None:
            raise MachineError("rotate at the root")
        self.rotate(self.ptr)
        self.ops.append(ROTATE)

    def apply(self, op: str):
        {RESET: self.reset, UP: self.up, LEFT: self.go_left,
         RIGHT: self.go_right, ROTATE: self.rotate_ptr}[op]()

    def walk_to(self, key):
        """Move the pointer along the tree path to ``key``."""
        for v in self.path(self.ptr, key)[1:]:
            if v == self.parent[self.ptr]:
                self.up()
            elif v == self.left[self.ptr]:
                self.go_left()
            else:
                self.go_right()

    def descend_to(self, key):
        """Reset, then walk down from the root to ``key``."""
        self.reset()
        self.walk_to(key)

    def lift(self, key, above=None):
        """Walk to ``key`` and rotate it up until its parent is ``above``."""
        self.walk_to(key)
        while self.parent[key] != above:
            self.rotate_ptr()

    def mark_serve(self, key):
        if self.ptr != key:
            raise MachineError(f"pointer on {self.ptr!r}, not {key!r}")
        self.serves.append(len(self.ops))

    # free structural changes used by standalone containers
    def attach_root(self, key, side: str):
        """Make ``key`` the new root with the old tree as its ``side`` child."""
        old = self.root
        self.left[key] = old if side == "left" else None
        self.right[key] = old if side == "right" else None
        self.parent[key] = None
        if old is not None:
            self.parent[old] = key
        self.root = key
        self.ptr = key

    def detach_root(self):
        """Remove a root that has at most one child."""
        r = self.root
        l, rr = self.left[r], self.right[r]
        if l is not None and rr is not None:
            raise MachineError("root has two children")
        child = l if l is not None else rr
        for d in (self.left, self.right, self.parent):
            del d[r]
        if child is not None:
            self.parent[child] = None
        self.root = child
        self.ptr = child
        return r

    def program(self, initial: StaticTree) -> "BstProgram":
        return BstProgram(initial, list(self.ops), list(self.serves))


@dataclass
class BstProgram:
    initial: StaticTree
    ops: list = field(default_factory=list)
    serves: list = field(default_factory=list)

    @property
    def cost(self) -> int:
        return len(self.ops)

    def compact(self) -> str:
        out = []
        marks = iter(self.serves)
        nxt = next(marks, None)
        for i, op in enumerate(self.ops + [None]):
            while nxt == i:
                out.append(SERVE_MARK)
                nxt = next(marks, None)
            if op is not None:
                out.append(op)
        return "".join(out)

    @classmethod
    def from_compact(cls, initial: StaticTree, text: str) -> "BstProgram":
        ops, serves = [], []
        for ch in text:
            if ch == SERVE_MARK:
                serves.append(len(ops))
            elif ch in OPS:
                ops.append(ch)
            elif not ch.isspace():
                raise InvalidArgument(f"unknown op {ch!r}")
        return cls(initial, ops, serves)

    def to_json(self) -> str:
        return json.dumps({"initial": self.initial.to_obj(), "program": self.compact()})

    @classmethod
    def from_json(cls, text: str) -> "BstProgram":
        o = json.loads(text)
        return cls.from_compact(StaticTree.from_obj(o["initial"]), o["program"])


@dataclass
class RunReport:
    ok: bool
    cost: int
    final: StaticTree | None = None
    error_at: int | None = None
    message: str = ""


def run_program(P: BstProgram, X, check_every_op: bool = False) -> RunReport:
    """Replay P; each access must be served at its mark after a fresh Reset."""
    reqs = list(X)
    if len(P.serves) != len(reqs):
        return RunReport(False, P.cost, message=f"{len(P.serves)} serves for {len(reqs)} accesses")
    if any(b <= a for a, b in zip(P.serves, P.serves[1:])):
        return RunReport(False, P.cost, message="serve marks not strictly increasing")
    m = Machine(P.initial)
    keys = P.initial.inorder()
    t = 0
    reset_since_serve = False
    for i, op in enumerate(P.ops + [None]):
        while t < len(reqs) and P.serves[t] == i:
            if not reset_since_serve:
                return RunReport(False, P.cost, error_at=i, message="access does not start at the root")
            if m.ptr != reqs[t]:
                return RunReport(False, P.cost, error_at=i, message=f"access {t + 1} not served")
            reset_since_serve = False
            t += 1
        if op is None:
            break
        try:
            m.apply(op)
        except (MachineError, KeyError) as e:
            return RunReport(False, P.cost, error_at=i, message=str(e))
        if op == RESET:
            reset_since_serve = True
        if check_every_op and op == ROTATE and not m.freeze().validate():
            return RunReport(False, P.cost, error_at=i, message="tree invalid")
    final = m.freeze()
    if final.inorder() != keys or not final.validate():
        return RunReport(False, P.cost, final, message="final tree invalid")
    return RunReport(True, P.cost, final)


# -- deque ---------------------------------------------------------------

def deque_layout(elems, nl: int):
    """Canonical two-chain shape: root elems[nl]; elems[0] is the root's left
    child with elems[1..nl-1] continuing down-right; elems[-1] is the root's
    right child with elems[-2..nl+1] continuing down-left.

    Returns (root, left, right) maps over ``elems`` only.
    """
    s = len(elems)
    if s == 0:
        return None, {}, {}
    left = {e: None for e in elems}
    right = {e: None for e in elems}
    root = elems[nl]
    if nl > 0:
        left[root] = elems[0]
        for i in range(nl - 1):
            right[elems[i]] = elems[i + 1]
    if nl < s - 1:
        right[root] = elems[-1]
        for i in range(s - 1, nl + 1, -1):
            left[elems[i]] = elems[i - 1]
    return root, left, right


def relayout(m: Machine, elems, nl: int, nl2: int):
    """Turn the two-chain shape with root index nl into root index nl2 using
    a linear number of ops. The region may sit anywhere inside m."""
    if nl2 == nl:
        return
    s = len(elems)
    above = m.parent[elems[nl]]
    m.lift(elems[nl2], above)
    if nl2 > nl:
        for j in range(nl2 - 2, nl, -1):
            m.lift(elems[j], m.parent[m.parent[elems[j]]])
        for j in range(nl):
            m.lift(elems[j], m.parent[m.parent[elems[j]]])
    else:
        for j in range(nl2 + 2, nl):
            m.lift(elems[j], m.parent[m.parent[elems[j]]])
        for j in range(s - 1, nl, -1):
            m.lift(elems[j], m.parent[m.parent[elems[j]]])


class DequeTree:
    """Sorted double-ended container living in a BST machine.

    Pushes attach the new key as the machine root for free and pops detach
    a root for free; everything else is paid for in machine ops.
    """

    def __init__(self, keys=()):
        keys = sorted(keys)
        self.elems = list(keys)  # mirror used only for layout checks
        self.nl = len(keys) // 2
        if keys:
            root, left, right = deque_layout(keys, self.nl)
            self.m = Machine(StaticTree(root, left, right))
        else:
            self.m = Machine()
        self.ops_done = 0

    def __len__(self):
        return len(self.m.parent)

    @property
    def cost(self) -> int:
        return self.m.cost

    @property
    def potential(self) -> int:
        s = len(self)
        return abs(self.nl - (s - 1 - self.nl)) if s else 0

    def _min(self):
        r = self.m.root
        return self.m.left[r] if self.nl > 0 else r

    def _max(self):
        r = self.m.root
        return self.m.right[r] if self.nl < len(self) - 1 else r

    def _segment(self, start):
        return self.m.ops[start:]

    def _sorted(self):
        out, stack, v = [], [], self.m.root
        while stack or v is not None:
            while v is not None:
                stack.append(v)
                v = self.m.left[v]
            v = stack.pop()
            out.append(v)
            v = self.m.right[v]
        return out

    def push_min(self, key):
        start = len(self.m.ops)
        if len(self) and not key < self._min():
            raise InvalidArgument("push_min key must be below the minimum")
        old = self.m.root
        self.m.attach_root(key, "right")
        if old is not None:
            self.m.lift(old, None)
            self.nl += 1
        else:
            self.nl = 0
        self.ops_done += 1
        return self._segment(start)

    def push_max(self, key):
        start = len(self.m.ops)
        if len(self) and not key > self._max():
            raise InvalidArgument("push_max key must be above the maximum")
        old = self.m.root
        self.m.attach_root(key, "left")
        if old is not None:
            self.m.lift(old, None)
        else:
            self.nl = 0
        self.ops_done += 1
        return self._segment(start)

    def pop_min(self):
        start = len(self.m.ops)
        s = len(self)
        if s == 0:
            raise EmptyContainer("pop from an empty deque")
        if self.nl == 0 and s >= 3:
            self._split(s // 2)
        if self.nl >= 1:
            x = self._min()
            self.m.lift(x, None)
            self.nl -= 1
        x = self.m.detach_root()
        self.ops_done += 1
        return x, self._segment(start)

    def pop_max(self):
        start = len(self.m.ops)
        s = len(self)
        if s == 0:
            raise EmptyContainer("pop from an empty deque")
        if self.nl == s - 1 and s >= 3:
            self._split(s // 2)
        if self.nl < s - 1:
            x = self._max()
            self.m.lift(x, None)
        else:
            self.nl = max(0, self.nl - 1)
        x = self.m.detach_root()
        self.ops_done += 1
        return x, self._segment(start)

    def _split(self, nl2):
        relayout(self.m, self._sorted(), self.nl, nl2)
        self.nl = nl2

    def check_layout(self) -> bool:
        elems = self._sorted()
        root, left, right = deque_layout(elems, self.nl)
        return (root == self.m.root and all(self.m.left[e] == left[e] and self.m.right[e] == right[e]
                                            for e in elems))


def deque_push_min(dq: DequeTree, key):
    return dq.push_min(key)


def deque_push_max(dq: DequeTree, key):
    return dq.push_max(key)


def deque_pop_min(dq: DequeTree):
    return dq.pop_min()


def deque_pop_max(dq: DequeTree):
    return dq.pop_max()


def transform_ops(m: Machine, target: StaticTree):
    """Rotate m's tree into ``target`` (same key set) with O(n) ops: fold
    the current tree into a right spine, then unfold it into the target by
    replaying the target's own folding backwards."""
    _to_right_spine(m)
    # record how the target folds into a spine
    shadow = MutableTree(target)
    lifted = []
    v = shadow.root
    while v is not None:
        c = shadow.left[v]
        if c is not None:
            shadow.rotate(c)
            lifted.append(c)
            v = c
        else:
            v = shadow.right[v]
    for c in reversed(lifted):
        # c sits above its old parent p (now c's right child); put p back on top
        p = m.right[c]
        m.walk_to(p)
        m.rotate_ptr()


def _to_right_spine(m: Machine):
    m.walk_to(m.root)
    v = m.root
    while v is not None:
        c = m.left[v]
        if c is not None:
            m.go_left()
            m.rotate_ptr()
            v = c
        else:
            if m.right[v] is None:
                break
            m.go_right()
            v = m.right[v]
