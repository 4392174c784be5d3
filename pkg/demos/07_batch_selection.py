"""Greedy parallel batch selection with fantasy conditioning.

Selects a batch of Q=3 query points: the first by the sequential
acquisition, each later point by the same acquisition conditioned on
sampled (fantasy) outcomes at the pending points, which pushes the batch
apart instead of stacking it on one maximum.
"""

import numpy as np

from cmesibo.domain import Box
from cmesibo.gp import GpModel, KernelSpec, ModelBundle
from cmesibo.loop import BoConfig, select_batch

rng = np.random.default_rng(4)
spec = KernelSpec(0.0, 1.0, np.array([0.2]))
# Observations pinning both edges low, so the interesting region is interior.
X = np.array([[0.0], [0.25], [0.5], [0.75], [1.0]])
bundle = ModelBundle(
    GpModel(spec, X, np.array([-1.0, 0.6, -0.2, 0.8, -1.0])),
    [GpModel(spec, X, np.array([0.5, 0.3, -0.2, 0.4, 0.5]))],
    [0.0],
)

cfg = BoConfig(method="cmes-ibo", Q=3, K=10, acq_grid=101)
batch = select_batch(bundle, Box([0.0], [1.0]), cfg, rng)
print("selected batch:")
for q, x in enumerate(batch, start=1):
    print(f"  point {q}: x = {x[0]:.4f}")
spread = np.min(np.abs(batch[:, 0][:, None] - batch[:, 0][None, :])
                + np.eye(3))
print(f"minimum pairwise spacing: {spread:.4f}")
