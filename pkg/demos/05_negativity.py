"""Why the direct entropy estimator needs many constraints to go wrong.

On a small 1-D state whose constraint score sits at -0.84 everywhere, the
direct estimator's mutual-information estimate dips below zero once more
than five constraints are stacked, while the lower-bound estimator stays
non-negative and keeps the same argmax as a kernel-density oracle.

Reduced Monte Carlo budgets keep this demo around a minute; the acceptance
suite runs the full-budget version.
"""

from cmesibo.validation import demo_negativity

report = demo_negativity(
    C_values=(4, 6), K=800, n_outer=60, n_inner=150, seed=0, out_dir=None
)
for cur in report.curves:
    print(
        f"C={cur.C}: min direct={cur.min_cmes:+.4f}  "
        f"min lower-bound={cur.min_cmes_ibo:+.4f}  "
        f"argmax lb/kde = {cur.argmax_cmes_ibo}/{cur.argmax_kde_mi}  "
        f"corr={cur.correlation:.2f}"
    )
print("\ndirect estimator goes negative at C=6, lower bound never does.")
