"""A short end-to-end optimization run on a built-in benchmark.

Runs the information-lower-bound method on the gardner1 problem for a few
iterations and prints how the utility gap (distance of the recommendation
from the true constrained optimum) shrinks.
"""

from cmesibo.loop import BoConfig, run
from cmesibo.problems import gardner1

problem = gardner1()
gt = problem.ground_truth()
print(f"true constrained optimum f* = {gt.fstar:.4f} at {gt.argmax.round(3)}")

trace = run(problem, BoConfig(method="cmes-ibo", T=15, seed=0))
print("\niter  utility_gap  best_observed_gap  feasible_rec")
for r in trace.records:
    if r.q == 1 and r.iteration % 3 == 0:
        print(f"{r.iteration:4d}  {r.utility_gap:11.4f}  "
              f"{r.best_observed_gap:17.4f}  {int(r.feasible_by_rule):12d}")
