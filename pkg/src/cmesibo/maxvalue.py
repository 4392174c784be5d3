"""Sampling the constrained max-value f* and joint fantasy outputs.

Each sample draws one posterior path per function (RFF-based on continuous
domains, joint multivariate normal on finite grids) and solves the induced
white-box constrained problem.  When a drawn path set has no feasible point
the sample is ``-inf``, which downstream acquisitions treat as the
no-feasible-region outcome rather than an error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import Box, latin_hypercube
from .gp import ModelBundle, _chol_with_jitter
from .rff import DEFAULT_NUM_FEATURES, PathSampler, SamplePath

FEASIBILITY_TOL = 1e-9
NEG_INF = float("-inf")


@dataclass(frozen=True)
class SolverConfig:
    """Multi-start ascent settings for maximizing a sampled path."""

    n_restarts: int = 10
    n_coarse: int = 256
    max_iters: int = 60
    step_init_frac: float = 0.1
    step_min_frac: float = 1e-6


@dataclass(frozen=True)
class DiscretePath:
    """A joint draw over a fixed grid, evaluable at grid rows only."""

    grid: np.ndarray  # (m, d)
    values: np.ndarray  # (m,)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty(X.shape[0])
        for i, x in enumerate(X):
            match = np.flatnonzero(np.all(np.isclose(self.grid, x), axis=1))
            if match.size == 0:
                raise ValueError("point is not on the sampling grid")
            out[i] = self.values[match[0]]
        return out

    def eval_one(self, x: np.ndarray) -> float:
        return float(self(np.atleast_1d(x)[None, :])[0])


@dataclass(frozen=True)
class PathBundle:
    """One joint draw: an objective path and one path per constraint."""

    objective_path: SamplePath | DiscretePath
    constraint_paths: list


@dataclass(frozen=True)
class SampleSet:
    """K pairs of (sampled max-value, retained path bundle)."""

    entries: list  # [(fstar: float, bundle: PathBundle)]

    def __len__(self):
        return len(self.entries)

    @property
    def max_values(self) -> np.ndarray:
        return np.array([fstar for fstar, _ in self.entries])


def _margins(bundle: PathBundle, thresholds, X: np.ndarray) -> np.ndarray:
    """Constraint slack g_c(x) - z_c, shape (m, C)."""
    X = np.atleast_2d(X)
    if not bundle.constraint_paths:
        return np.zeros((X.shape[0], 0))
    return np.stack(
        [p(X) - z for p, z in zip(bundle.constraint_paths, thresholds)], axis=1
    )


def _line_ascent(x0, direction, value_fn, ok_fn, box: Box, step0, step_min):
    """Backtracking step along ``direction``; returns improved point or None."""
    v0 = value_fn(x0)
    step = step0
    while step >= step_min:
        x1 = box.clip(x0 + step * direction)
        if ok_fn(x1) and value_fn(x1) > v0:
            return x1
        step *= 0.5
    return None


def solve_constrained_path_max(
    bundle: PathBundle,
    thresholds,
    domain: Box,
    cfg: SolverConfig,
    rng: np.random.Generator,
    return_point: bool = False,
):
    """Best feasible objective-path value found by multi-start ascent.

    Starts from a Latin hypercube prescan; infeasible starts first run a
    feasibility-restoration ascent on min_c(g_c - z_c).  Returns ``-inf``
    (with point None) when no feasible point is found anywhere.
    """
    d = domain.dim
    coarse = latin_hypercube(d, cfg.n_coarse, domain, rng)
    f_coarse = bundle.objective_path(coarse)
    margins = _margins(bundle, thresholds, coarse)
    min_margin = margins.min(axis=1) if margins.shape[1] else np.zeros(len(coarse))
    feasible = min_margin >= -FEASIBILITY_TOL

    best_x, best_val = None, NEG_INF
    if np.any(feasible):
        idx = np.argmax(np.where(feasible, f_coarse, NEG_INF))
        best_x, best_val = coarse[idx].copy(), float(f_coarse[idx])

    # Restart pool: best feasible points by objective, padded with the least
    # violated points for restoration.
    order_feas = np.argsort(np.where(feasible, -f_coarse, np.inf))
    order_rest = np.argsort(-min_margin)
    starts = []
    n_feas = int(np.count_nonzero(feasible))
    for i in order_feas[: min(cfg.n_restarts, n_feas)]:
        starts.append(coarse[i])
    for i in order_rest:
        if len(starts) >= cfg.n_restarts:
            break
        if not feasible[i]:
            starts.append(coarse[i])

    step0 = cfg.step_init_frac * float(np.min(domain.lengths))
    step_min = cfg.step_min_frac * float(np.min(domain.lengths))
    has_grad = hasattr(bundle.objective_path, "grad")

    def is_feasible(x):
        return bool(
            _margins(bundle, thresholds, x[None, :]).min(initial=np.inf)
            >= -FEASIBILITY_TOL
        )

    for x in starts:
        x = np.array(x, dtype=float)
        if not has_grad:
            continue
        # Phase A: restore feasibility by ascending the worst margin.
        for _ in range(cfg.max_iters):
            m = _margins(bundle, thresholds, x[None, :])[0]
            if m.size == 0 or m.min() >= -FEASIBILITY_TOL:
                break
            c = int(np.argmin(m))
            g = bundle.constraint_paths[c].grad(x)
            norm = np.linalg.norm(g)
            if norm < 1e-14:
                break
            x_new = _line_ascent(
                x,
                g / norm,
                lambda p: _margins(bundle, thresholds, p[None, :])[0].min(),
                lambda p: True,
                domain,
                step0,
                step_min,
            )
            if x_new is None:
                break
            x = x_new
        if not is_feasible(x):
            continue
        # Phase B: ascend the objective while staying feasible.
        for _ in range(cfg.max_iters):
            g = bundle.objective_path.grad(x)
            norm = np.linalg.norm(g)
            if norm < 1e-14:
                break
            x_new = _line_ascent(
                x,
                g / norm,
                lambda p: bundle.objective_path.eval_one(p),
                is_feasible,
                domain,
                step0,
                step_min,
            )
            if x_new is None:
                break
            x = x_new
        val = bundle.objective_path.eval_one(x)
        if val > best_val:
            best_x, best_val = x.copy(), val

    if return_point:
        return best_val, best_x
    return best_val


def sample_max_values(
    bundle: ModelBundle,
    K: int,
    domain: Box,
    cfg: SolverConfig,
    rng: np.random.Generator,
    num_features: int = DEFAULT_NUM_FEATURES,
) -> SampleSet:
    """K independent RFF path bundles, each solved for its constrained max.

    One feature map and weight posterior is built per function; the K draws
    differ only in their weight samples.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    samplers = [
        PathSampler.for_model(m, num_features, rng) for m in bundle.models()
    ]
    entries = []
    for _ in range(K):
        paths = [s.draw(rng) for s in samplers]
        pb = PathBundle(paths[0], paths[1:])
        fstar = solve_constrained_path_max(pb, bundle.thresholds, domain, cfg, rng)
        entries.append((fstar, pb))
    return SampleSet(entries)


def _grid_cholesky(bundle: ModelBundle, grid: np.ndarray):
    """Per-function joint posterior (mean, chol(cov + jitter)) on the grid."""
    out = []
    for m in bundle.models():
        mean, cov = m.joint_posterior(grid)
        L, _ = _chol_with_jitter(cov + 1e-10 * np.eye(cov.shape[0]))
        out.append((mean, L))
    return out


def _grid_max(f_draws: np.ndarray, feasible: np.ndarray) -> np.ndarray:
    """Per-column feasible maximum; -inf where a column has no feasible row."""
    masked = np.where(feasible, f_draws, NEG_INF)
    with np.errstate(invalid="ignore"):
        return masked.max(axis=0)


def sample_max_values_finite_domain(
    bundle: ModelBundle,
    K: int,
    grid: np.ndarray,
    rng: np.random.Generator,
) -> SampleSet:
    """Joint multivariate-normal draws over a finite candidate grid."""
    if K < 1:
        raise ValueError("K must be >= 1")
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    factors = _grid_cholesky(bundle, grid)
    m = grid.shape[0]
    entries = []
    for _ in range(K):
        draws = [mean + L @ rng.standard_normal(m) for mean, L in factors]
        feasible = np.ones(m, dtype=bool)
        for vals, z in zip(draws[1:], bundle.thresholds):
            feasible &= vals >= z
        fstar = float(_grid_max(draws[0][:, None], feasible[:, None])[0])
        pb = PathBundle(
            DiscretePath(grid, draws[0]),
            [DiscretePath(grid, v) for v in draws[1:]],
        )
        entries.append((fstar, pb))
    return SampleSet(entries)


def draw_max_values_grid(
    bundle: ModelBundle,
    grid: np.ndarray,
    n: int,
    rng: np.random.Generator,
    chunk: int = 2000,
) -> np.ndarray:
    """n vectorized finite-domain max-value draws (values only, no paths)."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    factors = _grid_cholesky(bundle, grid)
    m = grid.shape[0]
    out = np.empty(n)
    done = 0
    while done < n:
        b = min(chunk, n - done)
        f_mean, f_L = factors[0]
        f_draws = f_mean[:, None] + f_L @ rng.standard_normal((m, b))
        feasible = np.ones((m, b), dtype=bool)
        for (mean, L), z in zip(factors[1:], bundle.thresholds):
            g_draws = mean[:, None] + L @ rng.standard_normal((m, b))
            feasible &= g_draws >= z
        out[done : done + b] = _grid_max(f_draws, feasible)
        done += b
    return out


def fantasy_outputs(entry, Xq: np.ndarray) -> np.ndarray:
    """Evaluate one sample's retained paths at the pending points Xq.

    Returns a (q, C+1) array with the objective in column 0.
    """
    _, pb = entry
    Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
    if Xq.shape[0] == 0:
        return np.zeros((0, 1 + len(pb.constraint_paths)))
    cols = [pb.objective_path(Xq)] + [p(Xq) for p in pb.constraint_paths]
    return np.stack(cols, axis=1)
