"""Outer optimization loop: initialization, batch selection, recommendation.

The engine is an ask/tell stepper (``Optimizer``): ``ask`` returns the next
query batch, ``tell`` ingests the observed outputs, refits, recommends, and
records a utility-gap trace row per query.  ``run`` drives the same stepper
against an in-process problem, so file-driven ask/tell sessions and direct
runs follow one code path and produce identical traces for matched seeds.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr

from . import acquisition as acq
from .domain import Box, latin_hypercube
from .gp import GpModel, HyperBounds, KernelSpec, ModelBundle, fit_hyperparameters
from .maxvalue import PathBundle, SolverConfig, sample_max_values
from .rff import PathSampler

METHODS = ("cmes-ibo", "cmes", "eic", "tsc", "random")


@dataclass
class BoConfig:
    """Loop settings; defaults follow the sequential experimental protocol."""

    method: str = "cmes-ibo"
    K: int = 10  # Monte Carlo sample size for max-value draws
    Q: int = 1  # batch size (greedy conditional selection when > 1)
    T: int = 50
    n_init: int = 5
    rff_D: int = 500
    refit_period: int = 5
    seed: int = 0
    feasibility_confidence: float = 0.95
    acq_grid: int = 151  # exhaustive acquisition grid per axis for d <= 2
    acq_restarts: int = 20  # multi-start count for d > 2
    acq_local_iters: int = 40
    rec_grid: int = 201  # recommendation candidate grid per axis for d <= 2
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        for name in ("K", "Q", "T", "n_init", "rff_D", "refit_period"):
            if getattr(self, name) < (0 if name == "T" else 1):
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.feasibility_confidence < 1.0:
            raise ValueError("feasibility_confidence must be in (0, 1)")


@dataclass(frozen=True)
class Recommendation:
    point: np.ndarray
    feasible_by_rule: bool
    predicted_mean: float


@dataclass(frozen=True)
class TraceRecord:
    """One row per queried point; gap fields are NaN without ground truth."""

    iteration: int
    q: int
    query: np.ndarray
    recommendation: np.ndarray
    utility_gap: float
    best_observed_gap: float
    feasible_by_rule: bool


@dataclass
class UtilityGapTrace:
    dim: int
    records: list = field(default_factory=list)

    def header(self) -> list[str]:
        d = self.dim
        return (
            ["iteration", "q"]
            + [f"x{i + 1}" for i in range(d)]
            + [f"rec_x{i + 1}" for i in range(d)]
            + ["utility_gap", "best_observed_gap", "feasible_flag"]
        )

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.header())
            for r in self.records:
                w.writerow(
                    [r.iteration, r.q]
                    + [repr(float(v)) for v in r.query]
                    + [repr(float(v)) for v in r.recommendation]
                    + [
                        repr(float(r.utility_gap)),
                        repr(float(r.best_observed_gap)),
                        int(r.feasible_by_rule),
                    ]
                )


def latin_hypercube_init(
    d: int, n: int, domain: Box, rng: np.random.Generator
) -> np.ndarray:
    return latin_hypercube(d, n, domain, rng)


def _pattern_search(x0, value_fn, ok_fn, domain: Box, step0, iters):
    """Deterministic coordinate pattern search; only accepts ok, improving moves."""
    x = np.array(x0, dtype=float)
    v = value_fn(x)
    step = float(step0)
    for _ in range(iters):
        improved = False
        for j in range(x.shape[0]):
            for sgn in (1.0, -1.0):
                x1 = x.copy()
                x1[j] += sgn * step
                x1 = domain.clip(x1)
                if not ok_fn(x1):
                    continue
                v1 = value_fn(x1)
                if v1 > v:
                    x, v = x1, v1
                    improved = True
        if not improved:
            step *= 0.5
            if step < 1e-9 * float(np.min(domain.lengths)):
                break
    return x, v


def maximize_acquisition(
    acq_values, domain: Box, cfg: BoConfig, rng: np.random.Generator, candidates=None
) -> np.ndarray:
    """Argmax of a vectorized acquisition ``acq_values(X) -> (m,)``.

    Finite candidate sets are searched exhaustively with first-index tie
    break.  Continuous domains use an exhaustive coarse grid for d <= 2 or
    Latin hypercube restarts for d > 2, then a local pattern-search polish.
    """
    if candidates is not None:
        candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
        vals = acq_values(candidates)
        return candidates[int(np.argmax(vals))].copy()
    if domain.dim <= 2:
        starts = domain.grid(cfg.acq_grid)
        step0 = float(np.min(domain.lengths)) / (cfg.acq_grid - 1)
    else:
        starts = latin_hypercube(domain.dim, cfg.acq_restarts, domain, rng)
        step0 = 0.1 * float(np.min(domain.lengths))
    vals = acq_values(starts)
    x0 = starts[int(np.argmax(vals))]
    x, _ = _pattern_search(
        x0,
        lambda p: float(acq_values(p[None, :])[0]),
        lambda p: True,
        domain,
        step0,
        cfg.acq_local_iters,
    )
    return x


def _feasibility_log_probs(bundle: ModelBundle, X: np.ndarray) -> np.ndarray:
    """log Pr(g_c >= z_c) per constraint, shape (C, m)."""
    X = np.atleast_2d(X)
    out = np.empty((bundle.num_constraints, X.shape[0]))
    for c, (m, z) in enumerate(zip(bundle.constraints, bundle.thresholds)):
        mu, var = m.posterior_batch(X)
        sd = np.maximum(np.sqrt(var), acq.SD_FLOOR)
        out[c] = log_ndtr(-(z - mu) / sd)
    return out


def recommend(bundle: ModelBundle, where, cfg: BoConfig) -> Recommendation:
    """Best posterior-mean point passing the per-constraint probability rule.

    Each constraint must hold with probability >= confidence^(1/C) so the
    joint rule is at least the configured confidence under independence.
    When no candidate passes, returns the max joint-feasibility-probability
    point flagged infeasible.
    """
    if isinstance(where, Box):
        candidates = (
            where.grid(cfg.rec_grid)
            if where.dim <= 2
            else np.vstack([bundle.objective.X, where.grid(5)])
        )
        if bundle.objective.n:
            candidates = np.vstack([candidates, bundle.objective.X])
        domain = where
    else:
        candidates = np.atleast_2d(np.asarray(where, dtype=float))
        domain = None
    C = max(bundle.num_constraints, 1)
    log_level = np.log(cfg.feasibility_confidence) / C
    log_probs = _feasibility_log_probs(bundle, candidates)
    mean, _ = bundle.objective.posterior_batch(candidates)
    passing = (
        np.all(log_probs >= log_level, axis=0)
        if log_probs.shape[0]
        else np.ones(candidates.shape[0], dtype=bool)
    )

    def rule_ok(x):
        lp = _feasibility_log_probs(bundle, x[None, :])
        return bool(np.all(lp[:, 0] >= log_level)) if lp.shape[0] else True

    def mean_at(x):
        m, _ = bundle.objective.posterior_batch(x[None, :])
        return float(m[0])

    if np.any(passing):
        idx = int(np.argmax(np.where(passing, mean, -np.inf)))
        x, v = candidates[idx].copy(), float(mean[idx])
        if domain is not None:
            step0 = float(np.min(domain.lengths)) / max(cfg.rec_grid - 1, 1)
            x, v = _pattern_search(x, mean_at, rule_ok, domain, step0, cfg.acq_local_iters)
        return Recommendation(x, True, v)
    total = np.sum(log_probs, axis=0)
    idx = int(np.argmax(total))
    return Recommendation(candidates[idx].copy(), False, float(mean[idx]))


def select_batch(
    bundle: ModelBundle, domain: Box, cfg: BoConfig, rng: np.random.Generator
) -> np.ndarray:
    """Q query points for the configured method.

    Entropy methods pick the first point by the sequential acquisition and
    each later point by the same acquisition under fantasy-conditioned
    posteriors that reuse the retained sample paths.
    """
    d = domain.dim
    if cfg.method == "random":
        return domain.uniform(cfg.Q, rng)
    if cfg.method == "tsc":
        samplers = [PathSampler.for_model(m, cfg.rff_D, rng) for m in bundle.models()]
        out = np.empty((cfg.Q, d))
        for q in range(cfg.Q):
            paths = [s.draw(rng) for s in samplers]
            out[q] = acq.tsc_select(
                PathBundle(paths[0], paths[1:]), bundle.thresholds, domain, cfg.solver, rng
            )
        return out
    if cfg.method == "eic":
        out = np.empty((cfg.Q, d))
        cur = bundle
        for q in range(cfg.Q):
            best = acq.best_feasible_observation(cur)
            x = maximize_acquisition(
                lambda X: acq.eic_values(cur, X, best), domain, cfg, rng
            )
            out[q] = x
            if q + 1 < cfg.Q:
                # Believe the posterior mean at the pending point so repeats
                # are discouraged.
                H = np.array(
                    [[m.posterior(x).mean for m in cur.models()]]
                )
                cur = cur.condition_on_fantasies(x[None, :], H)
        return out

    samples = sample_max_values(bundle, cfg.K, domain, cfg.solver, rng, cfg.rff_D)
    with_cmes = cfg.method == "cmes"
    fstars = samples.max_values
    out = np.empty((cfg.Q, d))
    seq_values = acq.cmes_values if with_cmes else acq.cmes_ibo_values
    out[0] = maximize_acquisition(
        lambda X: seq_values(bundle, X, fstars), domain, cfg, rng
    )
    for q in range(1, cfg.Q):
        fantasies = acq.make_fantasy_set(bundle, samples, out[:q])
        par_values = (
            acq.parallel_cmes_values if with_cmes else acq.parallel_cmes_ibo_values
        )
        out[q] = maximize_acquisition(
            lambda X: par_values(bundle, X, fantasies), domain, cfg, rng
        )
    return out


def single_constraint_transform(problem):
    """Collapse C constraints into g(x) = min_c (g_c(x) - z_c) >= 0."""
    from .problems import Problem

    evaluators = list(problem.constraint_fns)
    thresholds = list(problem.thresholds)

    def merged(X):
        X = np.atleast_2d(X)
        vals = np.stack([g(X) - z for g, z in zip(evaluators, thresholds)], axis=0)
        return vals.min(axis=0)

    return Problem(
        name=problem.name + "-single-constraint",
        domain=problem.domain,
        objective_fn=problem.objective_fn,
        constraint_fns=[merged],
        thresholds=[0.0],
        grid_per_axis=problem.grid_per_axis,
    )


@dataclass(frozen=True)
class ProblemDescriptor:
    """What the loop needs to select queries: geometry, not evaluators."""

    name: str
    domain: Box
    thresholds: list


class StateError(RuntimeError):
    """ask/tell called out of order."""


class Optimizer:
    """Ask/tell stepper over one problem geometry.

    ``problem`` may be a full Problem (enabling utility-gap columns via its
    ground truth) or a bare ProblemDescriptor for external evaluators.
    """

    def __init__(self, problem, cfg: BoConfig, rng: np.random.Generator | None = None):
        self.problem = problem
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed) if rng is None else rng
        d = problem.domain.dim
        C = len(problem.thresholds)
        self.X = np.zeros((0, d))
        self.Y = np.zeros((0, C + 1))
        self.pending: np.ndarray | None = None
        self.initialized = False
        self.iteration = -1
        self.trace = UtilityGapTrace(dim=d)
        init_ls = 0.2 * problem.domain.lengths
        self.kernels = [KernelSpec(0.1, 0.9, init_ls) for _ in range(C + 1)]
        self._bounds = HyperBounds.for_domain(problem.domain.lower, problem.domain.upper)

    # -- model state ------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.problem.domain.dim

    @property
    def num_constraints(self) -> int:
        return len(self.problem.thresholds)

    def bundle(self) -> ModelBundle:
        obj = GpModel(self.kernels[0], self.X, self.Y[:, 0])
        cons = [
            GpModel(self.kernels[1 + c], self.X, self.Y[:, 1 + c])
            for c in range(self.num_constraints)
        ]
        return ModelBundle(obj, cons, [float(z) for z in self.problem.thresholds])

    def _refit(self):
        if self.X.shape[0] < 2 or self.iteration % self.cfg.refit_period != 0:
            return
        bundle = self.bundle()
        self.kernels = [
            fit_hyperparameters(m, self._bounds, self.rng) for m in bundle.models()
        ]

    # -- ask / tell -------------------------------------------------------

    def ask(self) -> np.ndarray:
        if self.pending is not None:
            raise StateError("previous batch is still pending; call tell first")
        if not self.initialized:
            Xq = latin_hypercube_init(
                self.dim, self.cfg.n_init, self.problem.domain, self.rng
            )
        else:
            Xq = select_batch(self.bundle(), self.problem.domain, self.cfg, self.rng)
        self.pending = Xq
        return Xq.copy()

    def tell(self, outputs: np.ndarray) -> Recommendation:
        if self.pending is None:
            raise StateError("no pending batch; call ask first")
        outputs = np.atleast_2d(np.asarray(outputs, dtype=float))
        want = (self.pending.shape[0], 1 + self.num_constraints)
        if outputs.shape != want:
            raise ValueError(f"expected outputs of shape {want}, got {outputs.shape}")
        queries = self.pending
        self.pending = None
        self.X = np.vstack([self.X, queries])
        self.Y = np.vstack([self.Y, outputs])
        self.iteration += 1
        self.initialized = True
        self._refit()
        rec = recommend(self.bundle(), self.problem.domain, self.cfg)
        self._record(queries, rec)
        return rec

    # -- trace ------------------------------------------------------------

    def _ground_truth(self):
        gt = getattr(self.problem, "ground_truth", None)
        return gt() if callable(gt) else None

    def _record(self, queries: np.ndarray, rec: Recommendation):
        gt = self._ground_truth()
        if gt is None:
            gap = best_gap = float("nan")
        else:
            gap = utility_gap(self.problem, rec)
            best_gap = self._best_observed_gap(gt)
        for q, x in enumerate(queries, start=1):
            self.trace.records.append(
                TraceRecord(
                    self.iteration, q, x.copy(), rec.point.copy(), gap, best_gap,
                    rec.feasible_by_rule,
                )
            )

    def _best_observed_gap(self, gt) -> float:
        feas = np.ones(self.X.shape[0], dtype=bool)
        for c, z in enumerate(self.problem.thresholds):
            feas &= self.Y[:, 1 + c] >= z
        if np.any(feas):
            return gt.fstar - float(np.max(self.Y[feas, 0]))
        return gt.fstar - gt.min_f


def utility_gap(problem, rec: Recommendation) -> float:
    """f* - f(point) when the point is truly feasible, else f* - min f.

    Feasibility here is evaluated on the problem's true constraints, not
    the posterior probability rule.
    """
    gt = problem.ground_truth()
    if gt is None:
        raise ValueError(f"problem {problem.name!r} carries no ground truth")
    x = np.atleast_1d(np.asarray(rec.point, dtype=float))[None, :]
    if bool(problem.is_feasible(x)[0]):
        return gt.fstar - float(problem.objective_fn(x)[0])
    return gt.fstar - gt.min_f


def run(problem, cfg: BoConfig) -> UtilityGapTrace:
    """Full loop: initial design, then T batch iterations on ``problem``."""
    opt = Optimizer(problem, cfg)
    opt.tell(problem.evaluate(opt.ask()))
    for _ in range(cfg.T):
        opt.tell(problem.evaluate(opt.ask()))
    return opt.trace
