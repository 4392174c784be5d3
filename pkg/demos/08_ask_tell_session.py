"""Driving the optimizer ask/tell-style with session persistence.

The ask/tell stepper owns no evaluator: you fetch a batch, measure the
outputs however you like, and report them back.  A session file captures
the full state, so the loop can continue in a different process.
"""

import tempfile
from pathlib import Path

import numpy as np

from cmesibo.loop import BoConfig, Optimizer
from cmesibo.problems import gramacy
from cmesibo.session import load_session, problem_ref, save_session

problem = gramacy()
cfg = BoConfig(method="cmes-ibo", n_init=4, seed=0)
opt = Optimizer(problem, cfg)

X = opt.ask()  # initial space-filling design
rec = opt.tell(problem.evaluate(X))
print(f"after init: recommendation {rec.point.round(3)}, "
      f"passes rule: {rec.feasible_by_rule}")

with tempfile.TemporaryDirectory() as d:
    path = Path(d) / "session.json"
    save_session(opt, problem_ref(problem), path)
    print(f"session saved ({path.stat().st_size} bytes)")

    # ... later, possibly elsewhere ...
    opt2, _ = load_session(path)
    for _ in range(3):
        X = opt2.ask()
        rec = opt2.tell(problem.evaluate(X))
    print(f"after 3 more iterations: recommendation {rec.point.round(3)}, "
          f"predicted objective {rec.predicted_mean:.4f}")
    print(f"observations so far: {opt2.X.shape[0]}")
