"""Random-Fourier-feature approximation of GP posteriors.

A finite cosine feature basis turns each GP into a Bayesian linear model
``f(x) ~ w . phi(x)`` whose weight posterior is Gaussian, so a single weight
draw gives a continuous, differentiable sample path over the whole domain.
The linear kernel component is finite-dimensional and handled exactly by
appending scaled identity features.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .gp import GpModel, KernelSpec, Standardizer, _chol_with_jitter

DEFAULT_NUM_FEATURES = 500


@dataclass(frozen=True)
class FeatureMap:
    """Cosine features for the RBF part plus optional exact linear features.

    phi(x) = [sqrt(2 s2_rbf / D) * cos(W x + b), sqrt(s2_lin) * x]
    with W drawn from the RBF spectral density (Gaussian, scaled by 1/l_i).
    """

    frequencies: np.ndarray  # (D, d)
    phases: np.ndarray  # (D,)
    rbf_weight: float
    linear_weight: float  # sqrt(sigma2_lin); 0 disables the linear block

    @property
    def num_features(self) -> int:
        d = self.frequencies.shape[1]
        return self.frequencies.shape[0] + (d if self.linear_weight > 0 else 0)

    def features(self, X: np.ndarray) -> np.ndarray:
        """Feature matrix phi(X) with one row per input row."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        D = self.frequencies.shape[0]
        cos_block = self.rbf_weight * np.cos(X @ self.frequencies.T + self.phases)
        if self.linear_weight > 0:
            return np.hstack([cos_block, self.linear_weight * X])
        return cos_block

    def feature_grad(self, x: np.ndarray) -> np.ndarray:
        """Jacobian d phi / d x at a single point, shape (num_features, d)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        sin_block = np.sin(self.frequencies @ x + self.phases)
        grad = -self.rbf_weight * sin_block[:, None] * self.frequencies
        if self.linear_weight > 0:
            grad = np.vstack([grad, self.linear_weight * np.eye(x.shape[0])])
        return grad


def build_feature_map(
    spec: KernelSpec, D: int, rng: np.random.Generator
) -> FeatureMap:
    """Draw a D-feature map approximating the kernel of ``spec``."""
    if D < 1:
        raise ValueError("D must be >= 1")
    d = spec.dim
    freqs = rng.standard_normal((D, d)) / spec.lengthscales
    phases = rng.uniform(0.0, 2.0 * np.pi, size=D)
    rbf_weight = np.sqrt(2.0 * spec.sigma2_rbf / D)
    linear_weight = np.sqrt(spec.sigma2_lin) if spec.sigma2_lin > 0 else 0.0
    return FeatureMap(freqs, phases, rbf_weight, linear_weight)


@dataclass(frozen=True)
class LinearWeightPosterior:
    """Gaussian weight posterior N(mean, cov) with cov = factor factor^T."""

    mean: np.ndarray
    cov_factor: np.ndarray


def weight_posterior(model: GpModel, fmap: FeatureMap) -> LinearWeightPosterior:
    """Bayesian linear regression posterior for the weights of ``fmap``.

    Prior w ~ N(0, I); likelihood uses the model's standardized outputs and
    per-row noise.  n = 0 returns the prior.
    """
    m = fmap.num_features
    if model.n == 0:
        return LinearWeightPosterior(np.zeros(m), np.eye(m))
    Phi = fmap.features(model.X)
    noise = model._noise_diag
    A = np.eye(m) + (Phi.T / noise) @ Phi
    L, _ = _chol_with_jitter(A)
    y_std = model.standardizer.forward(model.y)
    mean = sla.cho_solve((L, True), Phi.T @ (y_std / noise))
    # cov = A^-1 = L^-T L^-1, so a valid factor is L^-T.
    cov_factor = sla.solve_triangular(L, np.eye(m), lower=True).T
    return LinearWeightPosterior(mean, cov_factor)


@dataclass(frozen=True)
class SamplePath:
    """One continuous posterior draw, evaluable anywhere with its gradient."""

    weights: np.ndarray
    feature_map: FeatureMap
    standardizer: Standardizer

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return self.standardizer.inverse(self.feature_map.features(X) @ self.weights)

    def eval_one(self, x: np.ndarray) -> float:
        return float(self(np.atleast_1d(x)[None, :])[0])

    def grad(self, x: np.ndarray) -> np.ndarray:
        g_std = self.feature_map.feature_grad(x).T @ self.weights
        return g_std * self.standardizer.scale


def draw_sample_path(
    post: LinearWeightPosterior,
    fmap: FeatureMap,
    standardizer: Standardizer,
    rng: np.random.Generator,
) -> SamplePath:
    z = rng.standard_normal(post.mean.shape[0])
    return SamplePath(post.mean + post.cov_factor @ z, fmap, standardizer)


@dataclass(frozen=True)
class PathSampler:
    """Feature map + weight posterior for one model; draws i.i.d. sample paths."""

    fmap: FeatureMap
    post: LinearWeightPosterior
    standardizer: Standardizer

    @classmethod
    def for_model(
        cls, model: GpModel, D: int, rng: np.random.Generator
    ) -> "PathSampler":
        fmap = build_feature_map(model.kernel, D, rng)
        return cls(fmap, weight_posterior(model, fmap), model.standardizer)

    def draw(self, rng: np.random.Generator) -> SamplePath:
        return draw_sample_path(self.post, self.fmap, self.standardizer, rng)
