"""Command line front end: ``mfbst <command> [flags]``.

Exit codes: 0 pass, 1 a checked inequality failed, 2 bad usage or input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import random
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from . import checks
from .bounds import bound_report, dist_tree
from .bstm import run_program
from .constants import load, save
from .decomp import gen_decomposable
from .errors import InvalidArgument, KeyNotFound, ResourceLimit
from .fingers import (hierarchy_strategy, k_finger_costs_over_trees, optimal_k_finger_cost,
                      random_trace, verify_trace)
from .hand import simulate_trace
from .kserver import dc_run, epoch_length, mw_meta
from .seq import (AccessSequence, gen_k_monotone, gen_phased, gen_random,
                  gen_tilted_grid)
from .tree import balanced_tree, random_treap
from .vtree import build_virtual_tree, decompose, body_checks, run_strategy


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    pass


# -- helpers -----------------------------------------------------------------

def _emit(rows, args, stream=None):
    """Write a list of flat dicts as CSV or JSON lines to --out or stdout."""
    rows = list(rows)
    if args.format == "json":
        text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
    else:
        buf = io.StringIO()
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        text = buf.getvalue()
    if args.out:
        Path(args.out).write_text(text)
    else:
        (stream or sys.stdout).write(text)


def _sequence(args) -> AccessSequence:
    if getattr(args, "input", None):
        p = Path(args.input)
        if not p.exists():
            raise UsageError(f"no such file: {p}")
        text = p.read_text()
        if text.lstrip().startswith("{"):
            return AccessSequence.from_json(text)
        return AccessSequence.from_text(text, args.n)
    return generate(args.kind, args)


def generate(kind, args) -> AccessSequence:
    n, m, k, seed = args.n or 16, args.m or 64, args.k or 2, args.seed
    if kind == "random":
        return gen_random(n, m, _need_seed(seed))
    if kind == "tilted":
        return gen_tilted_grid(n, k)
    if kind == "monotone":
        return gen_k_monotone(n, k, m, _need_seed(seed))
    if kind == "phased":
        phase = 2 * k * max(1, math.ceil(5 * math.log2(max(2, n))))
        return gen_phased(n, k, phase, max(1, m // phase), _need_seed(seed))
    if kind == "decomposable":
        return gen_decomposable(max(2, k), n, _need_seed(seed))[0]
    raise UsageError(f"unknown sequence kind {kind!r}")


def _need_seed(seed):
    if seed is None:
        raise UsageError("randomized runs need --seed")
    return seed


def _meta(args):
    return {"seed": args.seed, "version": __version__}


def _ells(text):
    try:
        ells = [int(x) for x in str(text).split(",") if x]
    except ValueError:
        raise UsageError(f"bad --l value {text!r}") from None
    if not ells or min(ells) < 1:
        raise UsageError("--l needs positive integers")
    return ells


# -- commands ----------------------------------------------------------------

def cmd_gen(args):
    X = generate(args.kind, args)
    if args.format == "json":
        text = X.to_json() + "\n"
    else:
        text = "t,key\n" + "".join(f"{t},{x}\n" for t, x in enumerate(X, 1))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_bounds(args):
    X = _sequence(args)
    ells = _ells(args.l or "1,2,3")
    T = random_treap(X.n, args.seed) if args.seed is not None else None
    rep = bound_report(X, ells, tree=T)
    row = rep.to_flat()
    row.update(_meta(args))
    _emit([row], args)


def cmd_fingeropt(args):
    X = _sequence(args)
    k = args.k or 2
    cap = args.cap or 1430
    if args.tree == "all":
        res = k_finger_costs_over_trees(X, range(1, k + 1), cap=cap)
        rows = [{"k": j, "cost": c, "tree": t.to_json()} for j, (c, t) in res.items()]
    else:
        T = balanced_tree(range(1, X.n + 1)) if args.tree == "balanced" else random_treap(X.n, _need_seed(args.seed))
        rows = [{"k": j, "cost": optimal_k_finger_cost(T, X, j).cost, "tree": T.to_json()}
                for j in range(1, k + 1)]
    for r in rows:
        r.update(_meta(args))
    _emit(rows, args)


def cmd_simulate(args):
    n, k, steps = args.n or 200, args.k or 4, args.m or 2000
    seed = _need_seed(args.seed)
    T = random_treap(n, seed)
    tr, X = random_trace(T, k, steps, seed, rotate_rate=0.05)
    rep = simulate_trace(T, tr.placement, tr, X)
    run = run_program(rep.program, X)
    c = load()
    norm = rep.cost / rep.steps / math.log2(k + 1)
    row = {"n": n, "k": k, "steps": rep.steps, "cost": rep.cost, "init_cost": rep.init_cost,
           "cost_per_step": rep.cost / rep.steps, "normalized": norm, "c_sim": c["c_sim"],
           "certified": run.ok, "max_units": rep.max_units,
           "max_pseudo_depth": rep.max_pseudo_depth, **_meta(args)}
    _emit([row], args)
    if not run.ok or norm > c["c_sim"]:
        raise CheckFailed(run.message or "cost per step above c_sim log2(k+1)")


def cmd_kserver(args):
    n, k, m = args.n or 10, args.k or 2, args.m or 40
    seed = _need_seed(args.seed)
    if k > n:
        raise UsageError("need k <= n")
    rng = random.Random(seed)
    T = random_treap(n, seed)
    X = gen_random(n, m, seed)
    pl = rng.sample(range(1, n + 1), k)
    dc = dc_run(T, X, k, pl)
    dp = optimal_k_finger_cost(T, X, k, cap=args.cap or 2_000_000, initial=pl)
    row = {"n": n, "k": k, "m": m, "dc_cost": dc.cost, "dp_cost": dp.cost,
           "dc_movement": dc.movement, "dp_movement": dp.movement,
           "ratio": dc.movement / dp.movement if dp.movement else None,
           "bound": k * dp.movement + k * n, **_meta(args)}
    _emit([row], args)
    if dc.movement > k * dp.movement + k * n:
        raise CheckFailed("double coverage above k times the optimum plus k n")


def cmd_mw(args):
    n, k = args.n or 4, args.k or 1
    eps = args.eps if args.eps is not None else 0.5
    seed = _need_seed(args.seed)
    m = args.m or 20 * epoch_length(n)
    X = gen_random(n, m, seed)
    trace, rep, _ = mw_meta(X, n, k, eps, seed)
    row = rep.to_obj()
    row["version"] = __version__
    _emit([row], args)
    if not (rep.holds() and verify_trace(trace, X).ok):
        raise CheckFailed("meta cost above the multiplicative-weights bound")


def cmd_vtree(args):
    n, m, ell = args.n or 24, args.m or 60, int(args.l or 2)
    seed = _need_seed(args.seed)
    T = random_treap(n, seed)
    X = gen_random(n, m, seed + 1)
    vt = build_virtual_tree(T, X, ell)
    dec = decompose(vt)
    if args.dump:
        print(dec.dump(), file=sys.stderr)
    res = run_strategy(vt, dec)
    bound = 2 * math.factorial(ell) * dist_tree(X, T, ell)
    broken = dec.check()
    row = {"n": n, "m": m, "l": ell, "cost": res.trace.cost(), "bound": bound,
           "dist_tree": vt.total_weight(), "structure": ";".join(broken) or "ok",
           "per_body_ok": not body_checks(dec, res), **_meta(args)}
    _emit([row], args)
    if res.trace.cost() > bound or broken or not row["per_body_ok"]:
        raise CheckFailed("virtual tree strategy above its bound")


def _verify_kwargs(name, args):
    kw = {}
    seed = args.seed if args.seed is not None else 0
    if name == "hand":
        kw.update(n=args.n or 200, steps=args.m or 10_000, seed=seed)
        if args.k:
            kw["ks"] = (args.k,)
    elif name == "vtree":
        kw["seed"] = seed
        if args.l:
            kw["ells"] = tuple(_ells(args.l))
        if args.n:
            kw["nmax"] = args.n
    elif name == "monotone-chain":
        kw.update(nmax=args.n or 8, seed=seed)
    elif name == "mw" and args.eps is not None:
        kw["eps_list"] = (args.eps,)
    elif name == "hierarchy" and args.n:
        kw["max_n"] = args.n
    elif name in ("private", "dc", "decomp", "kmono", "bounds", "strip", "deque"):
        kw["seed"] = seed
    return kw


def cmd_verify(args):
    if args.check not in checks.BY_NAME:
        raise UsageError(f"unknown check {args.check!r}; try one of {sorted(checks.BY_NAME)}")
    res = checks.BY_NAME[args.check](**_verify_kwargs(args.check, args))
    print(res.line())
    if not res.ok:
        raise CheckFailed(res.message or res.name)


@dataclass
class ExperimentSpec:
    name: str
    params: dict = field(default_factory=dict)
    seed: int | None = None
    out: str | None = None  # CSV path; a .jsonl mirror is written next to it

    RANDOMIZED = ("dc_vs_dp", "bounds", "vtree", "simulate")

    @classmethod
    def from_file(cls, path) -> "ExperimentSpec":
        p = Path(path)
        if not p.exists():
            raise UsageError(f"no such file: {p}")
        try:
            obj = json.loads(p.read_text())
            spec = cls(obj["name"], obj.get("params", {}), obj.get("seed"), obj.get("out"))
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise UsageError(f"bad experiment spec: {e}") from None
        spec.validate()
        return spec

    def validate(self):
        if self.name not in EXPERIMENTS:
            raise UsageError(f"unknown experiment {self.name!r}")
        if self.name in self.RANDOMIZED and self.seed is None:
            raise UsageError("randomized experiments need a seed")


def _exp_hierarchy(spec):
    k = spec.params.get("k", 2)
    for n in spec.params.get("ns", [4, 8, 12]):
        X = gen_tilted_grid(n, k)
        res = k_finger_costs_over_trees(X, (k - 1, k), cap=spec.params.get("cap", 300_000))
        hi, lo = res[k - 1][0], res[k][0]
        _, tr = hierarchy_strategy(n, k)
        yield {"n": n, "k": k, f"F{k - 1}": hi, f"F{k}": lo, "ratio": hi / lo,
               "strategy_cost": tr.cost()}


def _exp_dc_vs_dp(spec):
    rng = random.Random(spec.seed)
    p = spec.params
    for i in range(p.get("count", 20)):
        n = rng.randint(1, p.get("nmax", 10))
        k = rng.randint(1, min(p.get("kmax", 3), n))
        m = rng.randint(1, p.get("mmax", 30))
        T = random_treap(n, rng.randrange(10**6))
        X = gen_random(n, m, rng.randrange(10**6))
        pl = rng.sample(range(1, n + 1), k)
        dc = dc_run(T, X, k, pl).movement
        dp = optimal_k_finger_cost(T, X, k, initial=pl).movement
        yield {"row": i, "n": n, "k": k, "m": m, "dc_movement": dc, "dp_movement": dp,
               "ratio": dc / dp if dp else 0.0, "within": dc <= k * dp + k * n}


def _exp_bounds(spec):
    rng = random.Random(spec.seed)
    p = spec.params
    ells = tuple(p.get("ells", (1, 2, 3)))
    for i in range(p.get("count", 10)):
        X = gen_random(p.get("n", 8), p.get("m", 40), rng.randrange(10**6))
        yield {"row": i, **bound_report(X, ells).to_flat()}


def _exp_vtree(spec):
    rng = random.Random(spec.seed)
    p = spec.params
    for i in range(p.get("count", 20)):
        ell = rng.choice(p.get("ells", [1, 2, 3]))
        n, m = rng.randint(1, p.get("nmax", 32)), rng.randint(1, p.get("mmax", 60))
        T = random_treap(n, rng.randrange(10**6))
        X = gen_random(n, m, rng.randrange(10**6))
        vt = build_virtual_tree(T, X, ell)
        res = run_strategy(vt, decompose(vt))
        bound = 2 * math.factorial(ell) * vt.total_weight()
        yield {"row": i, "n": n, "m": m, "l": ell, "cost": res.trace.cost(), "bound": bound,
               "ratio": res.trace.cost() / bound}


def _exp_simulate(spec):
    p = spec.params
    n = p.get("n", 200)
    for k in p.get("ks", [2, 4, 8]):
        T = random_treap(n, spec.seed + k)
        tr, X = random_trace(T, k, p.get("steps", 2000), spec.seed + k,
                             rotate_rate=p.get("rotate_rate", 0.05))
        rep = simulate_trace(T, tr.placement, tr, X)
        yield {"n": n, "k": k, "steps": rep.steps, "cost": rep.cost,
               "normalized": rep.cost / rep.steps / math.log2(k + 1)}


EXPERIMENTS = {"hierarchy": _exp_hierarchy, "dc_vs_dp": _exp_dc_vs_dp, "bounds": _exp_bounds,
               "vtree": _exp_vtree, "simulate": _exp_simulate}


def run_experiment(spec: ExperimentSpec) -> list:
    rows = []
    for r in EXPERIMENTS[spec.name](spec):
        r.update({"experiment": spec.name, "seed": spec.seed, "version": __version__})
        rows.append(r)
    return rows


def cmd_experiment(args):
    spec = ExperimentSpec.from_file(args.spec)
    rows = run_experiment(spec)
    out = args.out or spec.out
    if out:
        args.out = out
        args.format = "csv"
        _emit(rows, args)
        args.out = str(Path(out).with_suffix(".jsonl"))
        args.format = "json"
        _emit(rows, args)
    else:
        _emit(rows, args)


def cmd_calibrate(args):
    from .calibration import calibrate
    frozen, raw = calibrate(seed=args.seed or 0, quick=args.quick)
    save(frozen, args.out)
    print(json.dumps({"frozen": frozen, "measured": raw}, indent=2, sort_keys=True))


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int)
    common.add_argument("--k", type=int)
    common.add_argument("--l", help="window size, or a comma list for bounds")
    common.add_argument("--m", type=int)
    common.add_argument("--eps", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--cap", type=int)
    common.add_argument("--out")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    p = argparse.ArgumentParser(prog="mfbst", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"mfbst {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate an access sequence")
    g.add_argument("kind", choices=("random", "tilted", "monotone", "phased", "decomposable"))
    g.set_defaults(func=cmd_gen)

    for name, func, hlp in (("bounds", cmd_bounds, "classical bounds for a sequence"),
                            ("fingeropt", cmd_fingeropt, "exact k-finger optimum")):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("--input", help="sequence file (JSON or whitespace separated keys)")
        s.add_argument("--kind", default="random",
                       choices=("random", "tilted", "monotone", "phased", "decomposable"))
        if name == "fingeropt":
            s.add_argument("--tree", choices=("all", "treap", "balanced"), default="all")
        s.set_defaults(func=func)

    for name, func, hlp in (("simulate", cmd_simulate, "hand simulation of a random trace"),
                            ("kserver", cmd_kserver, "double coverage against the optimum"),
                            ("mw", cmd_mw, "multiplicative-weights meta run")):
        sub.add_parser(name, parents=[common], help=hlp).set_defaults(func=func)

    v = sub.add_parser("vtree", parents=[common], help="virtual tree strategy")
    v.add_argument("--dump", action="store_true", help="print the decomposition to stderr")
    v.set_defaults(func=cmd_vtree)

    ver = sub.add_parser("verify", parents=[common], help="run one acceptance check")
    ver.add_argument("check", help=", ".join(sorted(checks.BY_NAME)))
    ver.set_defaults(func=cmd_verify)

    e = sub.add_parser("experiment", parents=[common], help="run an experiment spec file")
    e.add_argument("spec")
    e.set_defaults(func=cmd_experiment)

    c = sub.add_parser("calibrate", parents=[common], help="measure and freeze constants")
    c.add_argument("--quick", action="store_true")
    c.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except CheckFailed as e:
        print(json.dumps({"error": "check failed", "detail": str(e)}), file=sys.stderr)
        return 1
    except (UsageError, InvalidArgument, KeyNotFound, ResourceLimit, ValueError) as e:
        print(json.dumps({"error": type(e).__name__, "detail": str(e)}), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
