"""Exact Gaussian process regression for the objective and constraint models.

Each function (objective or constraint) gets its own zero-mean GP with a
``sigma2_lin * (x . x') + sigma2_rbf * ARD-RBF`` kernel, fitted on
standardized outputs.  Models are immutable: fitting, conditioning, and
hyperparameter updates all return new objects, so posterior queries are safe
to run concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla
from scipy import optimize as sopt

DEFAULT_NOISE_VAR = 1e-6
FANTASY_NOISE_VAR = 1e-12
SCALE_FLOOR = 1e-8
_JITTERS = (0.0, 1e-10, 1e-6)


class NumericalError(RuntimeError):
    """Raised when a Gram matrix cannot be factorized even after jitter."""


@dataclass(frozen=True)
class KernelSpec:
    """Linear + ARD-RBF kernel: s2_lin * x.y + s2_rbf * exp(-0.5 sum((x-y)/l)^2)."""

    sigma2_lin: float
    sigma2_rbf: float
    lengthscales: np.ndarray

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        object.__setattr__(self, "lengthscales", ls)
        if self.sigma2_lin < 0 or self.sigma2_rbf < 0:
            raise ValueError("kernel weights must be non-negative")
        if np.any(ls <= 0):
            raise ValueError("lengthscales must be positive")

    @property
    def dim(self) -> int:
        return self.lengthscales.shape[0]


def kernel_matrix(spec: KernelSpec, X: np.ndarray, Y: np.ndarray | None = None) -> np.ndarray:
    """Dense kernel matrix k(X, Y); Y defaults to X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != spec.dim or Y.shape[1] != spec.dim:
        raise ValueError(
            f"input dimension {X.shape[1]}x{Y.shape[1]} does not match "
            f"kernel dimension {spec.dim}"
        )
    K = np.zeros((X.shape[0], Y.shape[0]))
    if spec.sigma2_lin > 0:
        K += spec.sigma2_lin * (X @ Y.T)
    if spec.sigma2_rbf > 0:
        Xs = X / spec.lengthscales
        Ys = Y / spec.lengthscales
        sq = (
            np.sum(Xs**2, axis=1)[:, None]
            - 2.0 * (Xs @ Ys.T)
            + np.sum(Ys**2, axis=1)[None, :]
        )
        K += spec.sigma2_rbf * np.exp(-0.5 * np.maximum(sq, 0.0))
    return K


def kernel_eval(spec: KernelSpec, x: np.ndarray, y: np.ndarray) -> float:
    """Scalar kernel value k(x, y)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != (spec.dim,) or y.shape != (spec.dim,):
        raise ValueError("point dimension does not match kernel dimension")
    return float(kernel_matrix(spec, x[None, :], y[None, :])[0, 0])


def kernel_diag(spec: KernelSpec, X: np.ndarray) -> np.ndarray:
    """Diagonal k(x, x) for each row of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.full(X.shape[0], spec.sigma2_rbf)
    if spec.sigma2_lin > 0:
        out = out + spec.sigma2_lin * np.sum(X * X, axis=1)
    return out


@dataclass(frozen=True)
class Standardizer:
    """Affine output map y_std = (y - shift) / scale with a scale floor."""

    shift: float = 0.0
    scale: float = 1.0

    @classmethod
    def fit(cls, y: np.ndarray) -> "Standardizer":
        y = np.asarray(y, dtype=float)
        if y.size == 0:
            return cls()
        shift = float(np.mean(y))
        scale = float(np.std(y))
        return cls(shift, max(scale, SCALE_FLOOR))

    def forward(self, y):
        return (np.asarray(y, dtype=float) - self.shift) / self.scale

    def inverse(self, y_std):
        return np.asarray(y_std, dtype=float) * self.scale + self.shift


def _chol_with_jitter(A: np.ndarray) -> tuple[np.ndarray, float]:
    for jitter in _JITTERS:
        try:
            M = A if jitter == 0.0 else A + jitter * np.eye(A.shape[0])
            return np.linalg.cholesky(M), jitter
        except np.linalg.LinAlgError:
            continue
    raise NumericalError("Gram matrix not positive definite after jitter escalation")


@dataclass(frozen=True)
class PosteriorGaussian:
    mean: float
    var: float


class GpModel:
    """Exact GP over one scalar function, in raw output units.

    Parameters
    ----------
    kernel : KernelSpec
    X : (n, d) array of inputs (may be empty with n = 0).
    y : (n,) array of raw outputs.
    noise_var : observation noise variance applied on standardized outputs.
    extra_noise : optional (n,) per-row noise override; rows with a
        non-None entry use that variance instead of ``noise_var`` (used for
        noiseless fantasy conditioning).
    standardizer : fixed output standardizer; fitted from ``y`` when None.
    """

    def __init__(
        self,
        kernel: KernelSpec,
        X: np.ndarray,
        y: np.ndarray,
        noise_var: float = DEFAULT_NOISE_VAR,
        extra_noise: np.ndarray | None = None,
        standardizer: Standardizer | None = None,
    ):
        X = np.asarray(X, dtype=float).reshape(-1, kernel.dim)
        y = np.asarray(y, dtype=float).reshape(-1)
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y row counts differ")
        if noise_var <= 0:
            raise ValueError("noise_var must be positive")
        self.kernel = kernel
        self.X = X
        self.y = y
        self.noise_var = float(noise_var)
        if extra_noise is None:
            noise_diag = np.full(X.shape[0], self.noise_var)
        else:
            noise_diag = np.asarray(extra_noise, dtype=float).reshape(-1)
            if noise_diag.shape[0] != X.shape[0]:
                raise ValueError("extra_noise length mismatch")
        self._noise_diag = noise_diag
        self.standardizer = (
            Standardizer.fit(y) if standardizer is None else standardizer
        )
        self._y_std = self.standardizer.forward(y)
        if X.shape[0] > 0:
            K = kernel_matrix(kernel, X)
            self._chol, self._jitter = _chol_with_jitter(K + np.diag(noise_diag))
            self._alpha = sla.cho_solve((self._chol, True), self._y_std)
        else:
            self._chol = np.zeros((0, 0))
            self._jitter = 0.0
            self._alpha = np.zeros(0)

    # -- basic properties -------------------------------------------------

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.kernel.dim

    @property
    def chol(self) -> np.ndarray:
        """Lower Cholesky factor of K + diag(noise) (+ jitter), standardized space."""
        return self._chol

    def with_kernel(self, spec: KernelSpec) -> "GpModel":
        return GpModel(spec, self.X, self.y, self.noise_var, None, None)

    # -- posterior queries ------------------------------------------------

    def posterior_batch(self, Xq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Marginal posterior mean and variance at each query row, raw units."""
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        prior_var = kernel_diag(self.kernel, Xq)
        if self.n == 0:
            mean_std = np.zeros(Xq.shape[0])
            var_std = prior_var
        else:
            Ks = kernel_matrix(self.kernel, Xq, self.X)
            mean_std = Ks @ self._alpha
            V = sla.solve_triangular(self._chol, Ks.T, lower=True)
            var_std = prior_var - np.sum(V * V, axis=0)
        var_std = np.maximum(var_std, 0.0)
        scale2 = self.standardizer.scale**2
        return self.standardizer.inverse(mean_std), var_std * scale2

    def posterior(self, x: np.ndarray) -> PosteriorGaussian:
        mean, var = self.posterior_batch(np.atleast_1d(x)[None, :])
        return PosteriorGaussian(float(mean[0]), float(var[0]))

    def joint_posterior(self, Xq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Joint posterior (mean vector, covariance matrix) at m points, raw units."""
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        Kqq = kernel_matrix(self.kernel, Xq)
        if self.n == 0:
            mean_std = np.zeros(Xq.shape[0])
            cov_std = Kqq
        else:
            Ks = kernel_matrix(self.kernel, Xq, self.X)
            mean_std = Ks @ self._alpha
            V = sla.solve_triangular(self._chol, Ks.T, lower=True)
            cov_std = Kqq - V.T @ V
        cov_std = 0.5 * (cov_std + cov_std.T)
        scale2 = self.standardizer.scale**2
        return self.standardizer.inverse(mean_std), cov_std * scale2

    def log_marginal_likelihood(self) -> float:
        """Gaussian log evidence of the standardized outputs."""
        if self.n == 0:
            raise ValueError("log marginal likelihood undefined for empty model")
        quad = float(self._y_std @ self._alpha)
        logdet = 2.0 * float(np.sum(np.log(np.diag(self._chol))))
        return -0.5 * (quad + logdet + self.n * np.log(2.0 * np.pi))

    # -- conditioning -----------------------------------------------------

    def condition_on(
        self,
        Xq: np.ndarray,
        values: np.ndarray,
        noise_var: float = FANTASY_NOISE_VAR,
    ) -> "GpModel":
        """Return a model additionally conditioned on noiseless function values.

        The fantasy values are latent draws from sample paths, so they enter
        with jitter-level noise and the existing standardizer is kept.
        """
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        values = np.atleast_1d(np.asarray(values, dtype=float))
        if Xq.shape[0] == 0:
            return self
        X_new = np.vstack([self.X, Xq]) if self.n else Xq
        y_new = np.concatenate([self.y, values])
        noise_new = np.concatenate(
            [self._noise_diag, np.full(Xq.shape[0], noise_var)]
        )
        return GpModel(
            self.kernel,
            X_new,
            y_new,
            self.noise_var,
            extra_noise=noise_new,
            standardizer=self.standardizer,
        )


@dataclass(frozen=True)
class ModelBundle:
    """One GP per function: the objective and each of C constraints.

    All models observe the same input list (simultaneous evaluation setting);
    ``thresholds`` are the raw-unit feasibility levels z_c for g_c >= z_c.
    """

    objective: GpModel
    constraints: list[GpModel] = field(default_factory=list)
    thresholds: list[float] = field(default_factory=list)

    def __post_init__(self):
        if len(self.constraints) != len(self.thresholds):
            raise ValueError("one threshold per constraint model required")

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    @property
    def dim(self) -> int:
        return self.objective.dim

    def models(self) -> list[GpModel]:
        return [self.objective, *self.constraints]

    def condition_on_fantasies(self, Xq: np.ndarray, H: np.ndarray) -> "ModelBundle":
        """Condition every model on fantasy outputs H[(q, C+1)] at points Xq."""
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        if Xq.shape[0] == 0:
            return self
        H = np.atleast_2d(np.asarray(H, dtype=float))
        obj = self.objective.condition_on(Xq, H[:, 0])
        cons = [
            m.condition_on(Xq, H[:, 1 + c]) for c, m in enumerate(self.constraints)
        ]
        return ModelBundle(obj, cons, list(self.thresholds))


# -- hyperparameter fitting ----------------------------------------------


@dataclass(frozen=True)
class HyperBounds:
    """Box bounds for (sigma2_lin, sigma2_rbf, lengthscales)."""

    sigma2_lin: tuple[float, float] = (0.0, 1.0)
    sigma2_rbf: tuple[float, float] = (0.0, 1.0)
    lengthscales: np.ndarray = None  # (d, 2)

    @classmethod
    def for_domain(cls, lower: np.ndarray, upper: np.ndarray) -> "HyperBounds":
        """Lengthscale interval [0.1 s_i, 10 s_i] from the domain side lengths."""
        s = np.asarray(upper, dtype=float) - np.asarray(lower, dtype=float)
        ls = np.stack([0.1 * s, 10.0 * s], axis=1)
        return cls(lengthscales=ls)


def _lml_of(spec: KernelSpec, model: GpModel) -> float:
    try:
        return model.with_kernel(spec).log_marginal_likelihood()
    except NumericalError:
        return -np.inf


def fit_hyperparameters(
    model: GpModel,
    bounds: HyperBounds,
    rng: np.random.Generator,
    n_starts: int = 8,
) -> KernelSpec:
    """Multi-start marginal-likelihood maximization over the kernel parameters.

    Starts from the model's current spec plus random draws inside the bounds;
    the returned spec never has lower evidence than any evaluated start.
    """
    if model.n < 2:
        raise ValueError("need at least 2 observations to fit hyperparameters")
    d = model.dim
    ls_b = bounds.lengthscales
    if ls_b is None:
        ls_b = np.tile([1e-3, 1e3], (d, 1))
    ls_b = np.asarray(ls_b, dtype=float).reshape(d, 2)
    lo = np.concatenate([[bounds.sigma2_lin[0], bounds.sigma2_rbf[0]], ls_b[:, 0]])
    hi = np.concatenate([[bounds.sigma2_lin[1], bounds.sigma2_rbf[1]], ls_b[:, 1]])

    def clip(theta):
        return np.clip(theta, lo, hi)

    def unpack(theta):
        return KernelSpec(theta[0], theta[1], np.maximum(theta[2:], 1e-12))

    def neg_lml(theta):
        return -_lml_of(unpack(clip(theta)), model)

    cur = model.kernel
    starts = [
        clip(np.concatenate([[cur.sigma2_lin, cur.sigma2_rbf], cur.lengthscales]))
    ]
    for _ in range(n_starts - 1):
        s2 = rng.uniform(lo[:2], np.maximum(hi[:2], lo[:2] + 1e-300))
        log_l = rng.uniform(
            np.log(np.maximum(lo[2:], 1e-12)),
            np.log(np.maximum(hi[2:], np.maximum(lo[2:], 1e-12) * (1 + 1e-12))),
        )
        starts.append(clip(np.concatenate([s2, np.exp(log_l)])))

    best_theta, best_val = None, np.inf
    point_bounds = np.all(hi <= lo)
    for theta0 in starts:
        f0 = neg_lml(theta0)
        if f0 < best_val:
            best_theta, best_val = theta0, f0
        if point_bounds or not np.isfinite(f0):
            continue
        try:
            res = sopt.minimize(
                neg_lml,
                theta0,
                method="L-BFGS-B",
                bounds=list(zip(lo, hi)),
                options={"maxiter": 80},
            )
        except NumericalError:
            continue
        if np.isfinite(res.fun) and res.fun < best_val:
            best_theta, best_val = clip(res.x), res.fun
    if best_theta is None or not np.isfinite(best_val):
        import warnings

        warnings.warn("hyperparameter fitting failed; keeping previous spec")
        return model.kernel
    return unpack(best_theta)
