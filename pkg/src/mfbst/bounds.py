"""Closed-form BST bounds: working set, dynamic/static finger, static
optimality, the windowed unified bound and the windowed tree-distance sum.

Times are 1-based throughout (t = 1..m), matching how the bounds are
usually written.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

from .errors import InvalidArgument, KeyNotFound, ResourceLimit
from .seq import AccessSequence

SO_CAP = 2000


def logcap(x) -> float:
    """log2(max(2, x))."""
    if x < 0:
        raise InvalidArgument("logcap of a negative number")
    return math.log2(max(2, x))


def _last_before(X, t, a):
    for s in range(t - 1, 0, -1):
        if X[s - 1] == a:
            return s
    return 0


def rho(X: AccessSequence, t: int, a: int) -> int:
    """Distinct keys accessed since the last access of ``a`` before time t.

    Every key counts as accessed at time zero, so a key never seen before
    gives n.
    """
    if not 1 <= t <= len(X):
        raise InvalidArgument(f"time {t} outside [1, {len(X)}]")
    last = _last_before(X, t, a)
    if last == 0:
        return X.n
    return len({X[s - 1] for s in range(last, t)})


def ws(X: AccessSequence) -> float:
    total = 0.0
    last = {}
    for t, x in enumerate(X, start=1):
        if x in last:
            total += logcap(len(set(X.requests[last[x] - 1:t - 1])))
        else:
            total += logcap(X.n)
        last[x] = t
    return total


def df(X: AccessSequence) -> float:
    return sum(logcap(abs(a - b)) for a, b in zip(X, X.requests[1:]))


def sf(X: AccessSequence) -> float:
    return min(sum(logcap(abs(x - j)) for x in X) for j in range(1, X.n + 1))


def optimal_static_cost(freq) -> int:
    """Min over BSTs of sum_i freq[i] * (depth_i + 1), Knuth's O(n^2) DP."""
    n = len(freq)
    if n == 0:
        return 0
    pre = [0]
    for f in freq:
        pre.append(pre[-1] + f)
    cost = [[0] * (n + 1) for _ in range(n + 2)]
    root = [[0] * (n + 1) for _ in range(n + 2)]
    for i in range(1, n + 1):
        cost[i][i] = freq[i - 1]
        root[i][i] = i
    for length in range(2, n + 1):
        for i in range(1, n - length + 2):
            j = i + length - 1
            best, arg = None, None
            lo = root[i][j - 1]
            hi = root[i + 1][j]
            for r in range(lo, hi + 1):
                c = (cost[i][r - 1] if r > i else 0) + (cost[r + 1][j] if r < j else 0)
                if best is None or c < best:
                    best, arg = c, r
            cost[i][j] = best + pre[j] - pre[i - 1]
            root[i][j] = arg
    return cost[1][n]


def so(X: AccessSequence, cap: int = SO_CAP) -> int:
    if X.n > cap:
        raise ResourceLimit(f"n={X.n} exceeds static-optimality cap {cap}")
    freq = [0] * X.n
    for x in X:
        freq[x - 1] += 1
    return optimal_static_cost(freq)


def ub_window(X: AccessSequence, ell: int) -> float:
    if ell < 1:
        raise InvalidArgument("window must be >= 1")
    total = logcap(X.n)  # t = 1: virtual accesses of every key at time zero
    for t in range(2, len(X) + 1):
        x = X[t - 1]
        # scanning back from t-1, the first sighting of y is its last access,
        # and the distinct keys seen so far are exactly rho_t(y)
        seen = set()
        best = math.inf
        for tp in range(t - 1, max(1, t - ell) - 1, -1):
            y = X[tp - 1]
            if y in seen:
                continue
            seen.add(y)
            best = min(best, logcap(abs(x - y) + len(seen)))
        total += best
    return total


def ub(X: AccessSequence) -> float:
    return ub_window(X, len(X))


def dist_tree(X: AccessSequence, T, ell: int) -> int:
    """sum_i min_{i-ell <= j < i} (d_T(x_i, x_j) + 1), with x_0 the root."""
    if ell < 1:
        raise InvalidArgument("window must be >= 1")
    for x in X:
        if x not in T:
            raise KeyNotFound(x)
    xs = [T.root] + list(X)
    total = 0
    for i in range(1, len(xs)):
        total += min(T.distance(xs[i], xs[j]) + 1 for j in range(max(0, i - ell), i))
    return total


@dataclass
class BoundReport:
    values: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    digest: str = ""

    def to_flat(self) -> dict:
        out = {"digest": self.digest}
        out.update(self.params)
        out.update(self.values)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_flat(), sort_keys=True)

    def csv_header(self) -> list:
        return list(self.to_flat())

    def to_csv_row(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerow(self.to_flat().values())
        return buf.getvalue()


def sequence_digest(X: AccessSequence) -> str:
    return hashlib.sha256(X.to_json().encode()).hexdigest()[:16]


def bound_report(X: AccessSequence, ells=(1, 2, 3), tree=None, so_cap: int = SO_CAP) -> BoundReport:
    vals = {"m": len(X), "n": X.n, "ws": ws(X), "df": df(X), "sf": sf(X)}
    vals["so"] = so(X, so_cap) if X.n <= so_cap else None
    for ell in ells:
        vals[f"ub_{ell}"] = ub_window(X, ell)
    if tree is not None:
        for ell in ells:
            vals[f"dist_tree_{ell}"] = dist_tree(X, tree, ell)
    params = {"ells": ";".join(map(str, ells)), "tree": "given" if tree is not None else ""}
    return BoundReport(vals, params, sequence_digest(X))
