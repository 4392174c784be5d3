"""Built-in constrained benchmark problems with grid-oracle ground truth.

All problems are maximization of f subject to g_c(x) >= z_c.  Ground truth
(the constrained optimum f*, the domain-wide minimum of f, and its
provenance) is computed once by a dense-grid oracle and cached, since the
utility gap needs both values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import Box
from .gp import KernelSpec
from .rff import build_feature_map

GRID_D2 = 2001  # per-axis oracle resolution for d = 2
GRID_D6 = 11  # per-axis oracle resolution for d = 6, refined by local ascent


@dataclass(frozen=True)
class GroundTruth:
    fstar: float
    argmax: np.ndarray
    min_f: float
    provenance: str  # "dense-grid" or "dense-grid+local"


@dataclass
class Problem:
    """A deterministic constrained problem over a box domain.

    Evaluators are vectorized: they map an (m, d) array to an (m,) array.
    """

    name: str
    domain: Box
    objective_fn: callable
    constraint_fns: list
    thresholds: list
    grid_per_axis: int = GRID_D2
    refine_ground_truth: bool = False
    _ground_truth: GroundTruth | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def num_constraints(self) -> int:
        return len(self.constraint_fns)

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """Simultaneous observation of all outputs; shape (m, C+1)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        cols = [self.objective_fn(X)] + [g(X) for g in self.constraint_fns]
        return np.stack(cols, axis=1)

    def is_feasible(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        ok = np.ones(X.shape[0], dtype=bool)
        for g, z in zip(self.constraint_fns, self.thresholds):
            ok &= g(X) >= z
        return ok

    def ground_truth(self) -> GroundTruth:
        if self._ground_truth is None:
            self._ground_truth = self._compute_ground_truth()
        return self._ground_truth

    def _compute_ground_truth(self) -> GroundTruth:
        # Chunked scan keeps memory bounded for feature-based evaluators.
        grid = self.domain.grid(self.grid_per_axis)
        f_star, x_star, min_f, x_min = -np.inf, None, np.inf, None
        for lo in range(0, grid.shape[0], 20000):
            block = grid[lo : lo + 20000]
            f = self.objective_fn(block)
            feas = self.is_feasible(block)
            jmin = int(np.argmin(f))
            if f[jmin] < min_f:
                min_f, x_min = float(f[jmin]), block[jmin].copy()
            if np.any(feas):
                idx = int(np.argmax(np.where(feas, f, -np.inf)))
                if f[idx] > f_star:
                    f_star, x_star = float(f[idx]), block[idx].copy()
        if x_star is None:
            raise ValueError(f"problem {self.name!r} has an empty feasible grid")
        provenance = "dense-grid"
        if self.refine_ground_truth:
            x_star, f_star = self._local_ascent(x_star)
            min_f = min(min_f, self._local_min_refine(x_min))
            provenance = "dense-grid+local"
        return GroundTruth(f_star, x_star, min_f, provenance)

    def _local_ascent(self, x0):
        """Feasible coordinate ascent from the best grid point."""
        x = np.array(x0, dtype=float)
        step = float(np.min(self.domain.lengths)) / (self.grid_per_axis - 1)
        v = float(self.objective_fn(x[None, :])[0])
        for _ in range(200):
            improved = False
            for j in range(self.dim):
                for sgn in (1.0, -1.0):
                    x1 = self.domain.clip(x + sgn * step * np.eye(self.dim)[j])
                    if not self.is_feasible(x1[None, :])[0]:
                        continue
                    v1 = float(self.objective_fn(x1[None, :])[0])
                    if v1 > v:
                        x, v, improved = x1, v1, True
            if not improved:
                step *= 0.5
                if step < 1e-10:
                    break
        return x, v

    def _local_min_refine(self, x0) -> float:
        x = np.array(x0, dtype=float)
        step = float(np.min(self.domain.lengths)) / (self.grid_per_axis - 1)
        v = float(self.objective_fn(x[None, :])[0])
        for _ in range(200):
            improved = False
            for j in range(self.dim):
                for sgn in (1.0, -1.0):
                    x1 = self.domain.clip(x + sgn * step * np.eye(self.dim)[j])
                    v1 = float(self.objective_fn(x1[None, :])[0])
                    if v1 < v:
                        x, v, improved = x1, v1, True
            if not improved:
                step *= 0.5
                if step < 1e-10:
                    break
        return v


# -- analytic benchmarks ---------------------------------------------------


def gardner1() -> Problem:
    def f(X):
        return -np.cos(2.0 * X[:, 0]) * np.cos(X[:, 1]) - np.sin(X[:, 0])

    def g1(X):
        return (
            -np.cos(X[:, 0]) * np.cos(X[:, 1])
            + np.sin(X[:, 0]) * np.sin(X[:, 1])
            + 0.5
        )

    return Problem("gardner1", Box([0.0, 0.0], [6.0, 6.0]), f, [g1], [0.0])


def gardner2() -> Problem:
    def f(X):
        return -np.sin(X[:, 0]) - X[:, 1]

    def g1(X):
        return -np.sin(X[:, 0]) * np.sin(X[:, 1]) - 0.95

    return Problem("gardner2", Box([0.0, 0.0], [6.0, 6.0]), f, [g1], [0.0])


def gramacy() -> Problem:
    def f(X):
        return -X[:, 0] - X[:, 1]

    def g1(X):
        return (
            0.5 * np.sin(2.0 * np.pi * (X[:, 0] ** 2 - 2.0 * X[:, 1]))
            + X[:, 0]
            + 2.0 * X[:, 1]
            - 1.5
        )

    def g2(X):
        return -X[:, 0] ** 2 - X[:, 1] ** 2 + 1.5

    return Problem("gramacy", Box([0.0, 0.0], [1.0, 1.0]), f, [g1, g2], [0.0, 0.0])


HARTMANN6_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
HARTMANN6_A = np.array(
    [
        [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
        [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
        [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
        [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
    ]
)
HARTMANN6_P = 1e-4 * np.array(
    [
        [1312.0, 1696.0, 5569.0, 124.0, 8283.0, 5886.0],
        [2329.0, 4135.0, 8307.0, 3736.0, 1004.0, 9991.0],
        [2348.0, 1451.0, 3522.0, 2883.0, 3047.0, 6650.0],
        [4047.0, 8828.0, 8732.0, 5743.0, 1091.0, 381.0],
    ]
)


def hartmann6(center: np.ndarray | None = None) -> Problem:
    """Six-dimensional 4-peak exponential sum with a norm-ball constraint.

    The constraint is g1(x) = 1 - ||x - center||; the center is a free
    configuration parameter and defaults to the domain center.
    """
    box = Box(np.zeros(6), np.ones(6))
    c = np.full(6, 0.5) if center is None else np.asarray(center, dtype=float)
    if c.shape != (6,):
        raise ValueError("center must be a 6-vector")

    def f(X):
        X = np.atleast_2d(X)
        sq = (X[:, None, :] - HARTMANN6_P[None, :, :]) ** 2
        inner = np.sum(HARTMANN6_A[None, :, :] * sq, axis=2)
        return np.sum(HARTMANN6_ALPHA * np.exp(-inner), axis=1)

    def g1(X):
        return 1.0 - np.linalg.norm(np.atleast_2d(X) - c, axis=1)

    return Problem(
        "hartmann6", box, f, [g1], [0.0],
        grid_per_axis=GRID_D6, refine_ground_truth=True,
    )


def gp_synthetic(
    seed: int,
    d: int = 2,
    C: int = 10,
    lengthscale: float = 0.2,
    threshold: float = -0.75,
    num_features: int = 2000,
    max_attempts: int = 20,
) -> Problem:
    """Objective and constraints drawn once from an RBF prior via features.

    Seeds whose dense-grid feasible set is empty are reseeded (the utility
    gap needs a finite constrained optimum); the accepted seed is recorded
    in the problem name.
    """
    box = Box(np.zeros(d), np.ones(d))
    spec = KernelSpec(0.0, 1.0, np.full(d, lengthscale))
    base = seed
    for attempt in range(max_attempts):
        rng = np.random.default_rng(base + attempt)
        fns = []
        for _ in range(C + 1):
            fmap = build_feature_map(spec, num_features, rng)
            w = rng.standard_normal(fmap.num_features)
            fns.append(lambda X, fm=fmap, w=w: fm.features(X) @ w)
        grid_n = GRID_D2 if d <= 2 else GRID_D6
        prob = Problem(
            f"gp-synthetic-{base + attempt}", box, fns[0], fns[1:],
            [threshold] * C, grid_per_axis=grid_n,
        )
        grid = box.grid(201 if d <= 2 else 9)
        if np.any(prob.is_feasible(grid)):
            return prob
    raise ValueError("no seed with a non-empty feasible set found")


BENCHMARKS = {
    "gardner1": gardner1,
    "gardner2": gardner2,
    "gramacy": gramacy,
    "hartmann6": hartmann6,
}


def get_problem(name: str) -> Problem:
    """Look up a benchmark by name; gp-synthetic-<seed> selects the generator."""
    if name in BENCHMARKS:
        return BENCHMARKS[name]()
    if name.startswith("gp-synthetic-"):
        return gp_synthetic(int(name.rsplit("-", 1)[1]))
    raise KeyError(f"unknown problem {name!r}; known: {sorted(BENCHMARKS)}")
