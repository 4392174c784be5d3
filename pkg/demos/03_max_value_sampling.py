"""Sampling the constrained optimum f* from the joint GP posterior.

Each draw takes one sample path per function, maximizes the objective path
over the region where every constraint path clears its threshold, and
returns -inf when that sampled region is empty.  The state below is built
so that feasibility itself is uncertain: every constraint observation sits
just below the threshold, so roughly half the joint draws contain no
feasible point at all.
"""

import numpy as np

from cmesibo.domain import Box
from cmesibo.gp import GpModel, KernelSpec, ModelBundle
from cmesibo.maxvalue import SolverConfig, sample_max_values

rng = np.random.default_rng(0)
spec = KernelSpec(0.0, 1.0, np.array([0.25]))
Xf = np.linspace(0, 1, 6)[:, None]
Xg = np.array([[0.0], [0.5], [1.0]])
bundle = ModelBundle(
    GpModel(spec, Xf, np.sin(3 * Xf[:, 0])),
    # best constraint observation is a hair below the threshold of 0
    [GpModel(spec, Xg, np.array([-0.5, -0.02, -0.6]))],
    [0.0],
)

samples = sample_max_values(bundle, 200, Box([0.0], [1.0]), SolverConfig(), rng)
fstars = samples.max_values
finite = fstars[np.isfinite(fstars)]
print(f"draws                    : {fstars.size}")
print(f"empty feasible region    : {np.mean(np.isneginf(fstars)):.1%} of draws")
print(f"f* among feasible draws  : mean {finite.mean():.3f}, "
      f"[{finite.min():.3f}, {finite.max():.3f}]")
