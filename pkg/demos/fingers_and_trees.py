# Exact k-finger costs on a tiny sequence, and the tilted grid that needs k fingers.
from mfbst import AccessSequence
from mfbst.fingers import k_finger_costs_over_trees, hierarchy_strategy, verify_trace
from mfbst.seq import gen_tilted_grid
from mfbst.tree import balanced_tree

X = AccessSequence(7, (1, 7, 1, 7, 4, 1, 7))
costs = k_finger_costs_over_trees(X, (1, 2, 3))
for k, (cost, tree) in costs.items():
    print(f"F^{k} = {cost}  best tree inorder {tree.inorder()}  root {tree.root}")

# every access costs at least 1, so F^3 = m = 7 means three fingers never walk
print("m =", len(X))

# tilted grid: one finger pays more and more per access as n grows
for n in (4, 8, 12):
    S = gen_tilted_grid(n, 2)
    c = k_finger_costs_over_trees(S, (1, 2))
    print(f"n={n:2d}  F1={c[1][0]:3d}  F2={c[2][0]:3d}  ratio={c[1][0] / c[2][0]:.3f}")

# the explicit strategy stays linear in n
for n in (64, 256, 1024):
    T, trace = hierarchy_strategy(n, 4)
    rep = verify_trace(trace, gen_tilted_grid(n, 4))
    print(f"n={n:4d}  cost/n={trace.cost() / n:.2f}  valid={rep.ok}")

print(balanced_tree(range(1, 8)).to_json())
