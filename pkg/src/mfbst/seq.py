"""Access sequences and the generators used by the experiments."""
from __future__ import annotations

import json
import math
import random
import warnings
from bisect import bisect_left
from dataclasses import dataclass, field

from .errors import InvalidArgument


@dataclass(frozen=True)
class AccessSequence:
    n: int
    requests: tuple

    def __post_init__(self):
        object.__setattr__(self, "requests", tuple(int(x) for x in self.requests))
        if self.n < 1:
            raise InvalidArgument("n must be positive")
        for x in self.requests:
            if not 1 <= x <= self.n:
                raise InvalidArgument(f"request {x} outside [1, {self.n}]")

    @property
    def m(self) -> int:
        return len(self.requests)

    def __len__(self):
        return len(self.requests)

    def __iter__(self):
        return iter(self.requests)

    def __getitem__(self, i):
        return self.requests[i]

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "requests": list(self.requests)})

    @classmethod
    def from_json(cls, text: str) -> "AccessSequence":
        obj = json.loads(text)
        return cls(obj["n"], obj["requests"])

    def to_text(self) -> str:
        return "".join(f"{x}\n" for x in self.requests)

    @classmethod
    def from_text(cls, text: str, n: int | None = None) -> "AccessSequence":
        keys = [int(tok) for tok in text.split()]
        if not keys:
            raise InvalidArgument("empty sequence")
        return cls(n if n is not None else max(keys), keys)


@dataclass
class MonotonePartition:
    """Chains of 0-based positions; keys along each chain increase."""

    chains: list = field(default_factory=list)

    def __len__(self):
        return len(self.chains)

    def validate(self, X: AccessSequence, strict: bool = True) -> bool:
        seen = sorted(i for c in self.chains for i in c)
        if seen != list(range(len(X))):
            return False
        for c in self.chains:
            for a, b in zip(c, c[1:]):
                if a >= b:
                    return False
                if strict and not X[a] < X[b]:
                    return False
                if not strict and not X[a] <= X[b]:
                    return False
        return True


def gen_random(n: int, m: int, seed: int) -> AccessSequence:
    if n < 1 or m < 1:
        raise InvalidArgument("n and m must be positive")
    rng = random.Random(seed)
    return AccessSequence(n, [rng.randint(1, n) for _ in range(m)])


def gen_tilted_grid(n: int, k: int) -> AccessSequence:
    """Interleave increasing traversals of k consecutive key blocks."""
    if k < 1 or n < 1 or n % k:
        raise InvalidArgument("k must divide n")
    ell = n // k
    out = [ell * i + j + 1 for j in range(ell) for i in range(k)]
    return AccessSequence(n, out)


def gen_k_monotone(n: int, k: int, m: int, seed: int) -> AccessSequence:
    """Random interleaving of k strictly increasing runs.

    The key space is cut into k contiguous bands and chain i walks upward
    through band i, so every chain is strictly increasing. Chains that run
    out of keys stop contributing; m is therefore capped at n.
    """
    if k < 1 or n < k:
        raise InvalidArgument("need 1 <= k <= n")
    if m < 1:
        raise InvalidArgument("m must be positive")
    rng = random.Random(seed)
    m = min(m, n)
    bounds = [round(i * n / k) for i in range(k + 1)]
    bands = [list(range(bounds[i] + 1, bounds[i + 1] + 1)) for i in range(k)]
    # how many keys each chain emits, at most its band size
    quota = [0] * k
    for _ in range(m):
        open_ = [i for i in range(k) if quota[i] < len(bands[i])]
        quota[rng.choice(open_)] += 1
    picks = [sorted(rng.sample(bands[i], quota[i])) for i in range(k)]
    cursor = [0] * k
    out = []
    while len(out) < m:
        live = [i for i in range(k) if cursor[i] < len(picks[i])]
        i = rng.choice(live)
        out.append(picks[i][cursor[i]])
        cursor[i] += 1
    return AccessSequence(n, out)


def gen_phased(n: int, k: int, X: int, Y: int, seed: int) -> AccessSequence:
    """Y phases; each repeats an ordering of 2k random distinct keys X/2k times."""
    if k < 1 or X < 1 or Y < 1:
        raise InvalidArgument("k, X, Y must be positive")
    if X % (2 * k):
        raise InvalidArgument("2k must divide the phase length")
    if 2 * k > n:
        raise InvalidArgument("need 2k <= n")
    if X < 5 * k * math.log2(max(2, n)) / math.log2(max(2, 2 * k)):
        warnings.warn("phase length below 5k log n / log 2k", stacklevel=2)
    rng = random.Random(seed)
    out = []
    for _ in range(Y):
        keys = rng.sample(range(1, n + 1), 2 * k)
        out.extend(keys * (X // (2 * k)))
    return AccessSequence(n, out)


def decompose_monotone(X: AccessSequence, strict: bool = False) -> MonotonePartition:
    """Online greedy partition into increasing chains.

    Each request joins the chain whose last key is the largest key below it
    (at most it, unless ``strict``); otherwise it opens a new chain.
    """
    tails: list = []  # sorted (last key, chain index)
    chains: list = []
    for pos, x in enumerate(X):
        probe = (x, -1) if strict else (x, len(X) + 1)
        j = bisect_left(tails, probe) - 1
        if j >= 0:
            _, ci = tails.pop(j)
        else:
            ci = len(chains)
            chains.append([])
        chains[ci].append(pos)
        tails.insert(bisect_left(tails, (x, ci)), (x, ci))
    return MonotonePartition(chains)
