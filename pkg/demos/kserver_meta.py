# Double coverage against the offline optimum, then the experts meta-algorithm.
import random

from mfbst.fingers import optimal_k_finger_cost, verify_trace
from mfbst.kserver import dc_run, epoch_length, mw_meta
from mfbst.seq import gen_random
from mfbst.tree import path_tree, random_treap

# servers at both ends of a path squeeze toward the middle
T = path_tree([1, 2, 3, 4, 5])
print(dc_run(T, [3], 2, [1, 5]).to_obj())

rng = random.Random(0)
for i in range(5):
    n, k = rng.randint(5, 12), rng.randint(1, 3)
    T = random_treap(n, i)
    X = gen_random(n, 30, i)
    start = rng.sample(range(1, n + 1), k)
    dc = dc_run(T, X, k, start).movement
    dp = optimal_k_finger_cost(T, X, k, initial=start).movement
    print(f"n={n:2d} k={k}  dc={dc:3d}  opt={dp:3d}  k*opt+k*n={k * dp + k * n}")

n, k = 4, 1
X = gen_random(n, 20 * epoch_length(n), 1)
trace, rep, costs = mw_meta(X, n, k, 0.5, seed=7)
print(f"experts={rep.experts}  epochs={rep.epochs}  switches={rep.switches}")
print(f"served cost={rep.service_cost}  switching={rep.switch_cost}  best expert={min(costs)}")
print(f"right-hand side={rep.bound_rhs:.1f}  trace valid={verify_trace(trace, X).ok}")
