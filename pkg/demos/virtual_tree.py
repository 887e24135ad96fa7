# Virtual tree over a short sequence, its body decomposition, and the
# finger-group strategy that walks it.
import math

from mfbst import AccessSequence
from mfbst.bounds import dist_tree
from mfbst.fingers import verify_trace
from mfbst.tree import balanced_tree
from mfbst.vtree import build_virtual_tree, decompose, nf, run_strategy

T = balanced_tree(range(1, 16))
X = AccessSequence(15, (1, 15, 2, 14, 3, 13, 8, 1, 15, 9))
for ell in (1, 2, 3):
    vt = build_virtual_tree(T, X, ell)
    dec = decompose(vt)
    res = run_strategy(vt, dec)
    print(f"l={ell}  fingers={nf(ell)}  parents={vt.parent[1:]}")
    print(f"      cost={res.trace.cost()}  bound={2 * math.factorial(ell) * dist_tree(X, T, ell)}"
          f"  valid={verify_trace(res.trace, X).ok}  structure={dec.check() or 'ok'}")

print(dec.dump())
