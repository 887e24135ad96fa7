# A random 3-decomposable permutation, the tree built from its block
# structure, and a single finger walking it.
from mfbst.decomp import gen_decomposable, one_finger_bound, one_finger_trace, reference_tree
from mfbst.fingers import verify_trace
from mfbst.tree import strip_auxiliary

X, D = gen_decomposable(3, 20, seed=11)
print("permutation:", list(X))
print("deflation:", D.to_json())

T = reference_tree(D)
trace = one_finger_trace(T, X, D)
moves = verify_trace(trace, X).move_steps
print(f"tree size {len(T)} (20 real keys), height {T.height()}")
print(f"one finger moves {moves}, bound {one_finger_bound(20, 3)}")

# dropping the gap keys leaves a tree on the real keys only
S = strip_auxiliary(T)
print("stripped inorder:", S.inorder())
