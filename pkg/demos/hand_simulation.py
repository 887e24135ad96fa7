# Run a random multi-finger trace through the hand and replay the emitted
# single-pointer BST program.
import math

from mfbst.bstm import run_program
from mfbst.fingers import random_trace
from mfbst.hand import simulate_trace
from mfbst.tree import random_treap

T = random_treap(120, seed=3)
for k in (1, 2, 4, 8):
    trace, X = random_trace(T, k, 3000, seed=k, rotate_rate=0.05)
    rep = simulate_trace(T, trace.placement, trace, X)
    run = run_program(rep.program, X)
    per = rep.cost / rep.steps
    print(f"k={k}  steps={rep.steps}  ops={rep.cost}  ops/step={per:.2f}  "
          f"/log2(k+1)={per / math.log2(k + 1):.2f}  certified={run.ok}  "
          f"units<={rep.max_units}  pseudo depth<={rep.max_pseudo_depth}")

# the program is plain text: R resets, L/r/U walk, t rotates, * serves
print(rep.program.compact()[:120], "...")
