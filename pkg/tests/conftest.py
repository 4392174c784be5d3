"""Shared analytic path stand-ins used across test modules."""

import numpy as np


class QuadraticPath:
    """Concave analytic stand-in for a sample path: peak at ``center``."""

    def __init__(self, center, scale=1.0, offset=0.0):
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.scale = scale
        self.offset = offset

    def __call__(self, X):
        X = np.atleast_2d(X)
        return self.offset - self.scale * np.sum((X - self.center) ** 2, axis=1)

    def eval_one(self, x):
        return float(self(np.atleast_1d(x)[None, :])[0])

    def grad(self, x):
        return -2.0 * self.scale * (np.atleast_1d(x) - self.center)


class ConstantPath:
    def __init__(self, value):
        self.value = float(value)

    def __call__(self, X):
        return np.full(np.atleast_2d(X).shape[0], self.value)

    def eval_one(self, x):
        return self.value

    def grad(self, x):
        return np.zeros_like(np.atleast_1d(x), dtype=float)
