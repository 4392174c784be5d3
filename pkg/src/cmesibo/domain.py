"""Box domains and Latin hypercube initial designs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lower_i, upper_i]^d."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != hi.shape or np.any(hi <= lo):
            raise ValueError("box requires lower < upper per dimension")

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def lengths(self) -> np.ndarray:
        return self.upper - self.lower

    def clip(self, X: np.ndarray) -> np.ndarray:
        return np.clip(X, self.lower, self.upper)

    def contains(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.all((X >= self.lower) & (X <= self.upper), axis=1)

    def uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(n, self.dim))

    def grid(self, points_per_dim: int) -> np.ndarray:
        """Full tensor grid flattened to (points_per_dim^d, d) rows."""
        axes = [
            np.linspace(self.lower[i], self.upper[i], points_per_dim)
            for i in range(self.dim)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def latin_hypercube(
    d: int, n: int, box: Box, rng: np.random.Generator
) -> np.ndarray:
    """n points with exactly one sample per axis stratum in each dimension."""
    if n < 1:
        raise ValueError("n must be >= 1")
    u = np.empty((n, d))
    for j in range(d):
        perm = rng.permutation(n)
        u[:, j] = (perm + rng.uniform(size=n)) / n
    return box.lower + u * box.lengths
