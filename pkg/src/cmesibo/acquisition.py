"""Acquisition functions for constrained max-value entropy search.

``cmes_ibo`` is the Monte Carlo information-lower-bound estimator
``-(1/K) sum log Zbar``; ``cmes`` is the direct truncated-entropy extension,
which is allowed to go negative.  Both have greedy-batch variants that
evaluate the same formulas under fantasy-conditioned posteriors, plus the
EIC and Thompson-selection baselines.

All tail probabilities are computed in log space (``log_ndtr``) and Zbar is
floored at 1e-16 before taking logs, so certain-improvement states saturate
instead of overflowing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr

from .domain import Box, latin_hypercube
from .gp import ModelBundle
from .maxvalue import (
    FEASIBILITY_TOL,
    NEG_INF,
    PathBundle,
    SampleSet,
    SolverConfig,
    fantasy_outputs,
    solve_constrained_path_max,
)

ZBAR_FLOOR = 1e-16
SD_FLOOR = 1e-9
_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def a_gamma(gamma):
    """Hazard-weighted score a(gamma) = gamma * phi(gamma) / (1 - Phi(gamma)).

    Computed in log space; the gamma -> -inf limit is 0.
    """
    gamma = np.asarray(gamma, dtype=float)
    out = np.zeros_like(gamma)
    finite = np.isfinite(gamma) & (gamma != 0.0)
    g = gamma[finite]
    log_mag = np.log(np.abs(g)) - 0.5 * g * g - _LOG_SQRT_2PI - log_ndtr(-g)
    out[finite] = np.sign(g) * np.exp(log_mag)
    out[np.isposinf(gamma)] = np.inf
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class GammaStats:
    """Standardized scores of the improvement and feasibility thresholds."""

    gamma_f: float  # (fstar - mu_f) / sd_f; -inf for the infeasible sample
    gamma_g: np.ndarray  # (C,), (z_c - mu_gc) / sd_gc


@dataclass(frozen=True)
class ZBarValue:
    z: float  # Pr(h in A): probability of improvement from fstar
    z_bar: float  # 1 - z: normalizer of the truncated density


def _posterior_stats(bundle: ModelBundle, X: np.ndarray):
    """(mu_f, sd_f) each (m,) and (gamma_g, log_tail_g) each (C, m)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mu_f, var_f = bundle.objective.posterior_batch(X)
    sd_f = np.maximum(np.sqrt(var_f), SD_FLOOR)
    gamma_g = np.empty((bundle.num_constraints, X.shape[0]))
    for c, (model, z) in enumerate(zip(bundle.constraints, bundle.thresholds)):
        mu_g, var_g = model.posterior_batch(X)
        gamma_g[c] = (z - mu_g) / np.maximum(np.sqrt(var_g), SD_FLOOR)
    return mu_f, sd_f, gamma_g


def _log_z(mu_f, sd_f, gamma_g, fstars):
    """log Z for each (sample, point); shape (K, m)."""
    fstars = np.asarray(fstars, dtype=float)
    gamma_f = np.where(
        np.isneginf(fstars)[:, None], -np.inf, (fstars[:, None] - mu_f) / sd_f
    )
    log_z = log_ndtr(-gamma_f)  # exactly 0 for the -inf sample
    log_z = log_z + np.sum(log_ndtr(-gamma_g), axis=0)
    return log_z, gamma_f


def gamma_stats(bundle: ModelBundle, x: np.ndarray, fstar: float) -> GammaStats:
    mu_f, sd_f, gamma_g = _posterior_stats(bundle, np.atleast_1d(x)[None, :])
    gf = -np.inf if np.isneginf(fstar) else float((fstar - mu_f[0]) / sd_f[0])
    return GammaStats(gf, gamma_g[:, 0])


def z_bar(bundle: ModelBundle, x: np.ndarray, fstar: float) -> ZBarValue:
    """Z and Zbar = 1 - Z at one point for one max-value sample."""
    mu_f, sd_f, gamma_g = _posterior_stats(bundle, np.atleast_1d(x)[None, :])
    log_z, _ = _log_z(mu_f, sd_f, gamma_g, [fstar])
    z = float(np.exp(log_z[0, 0]))
    return ZBarValue(z, float(-np.expm1(log_z[0, 0])))


def _ibo_terms(log_z):
    zbar = np.maximum(-np.expm1(log_z), ZBAR_FLOOR)
    return -np.log(zbar), zbar


def cmes_ibo_values(bundle: ModelBundle, X: np.ndarray, fstars) -> np.ndarray:
    """CMES-IBO over rows of X: mean over samples of -log Zbar."""
    mu_f, sd_f, gamma_g = _posterior_stats(bundle, X)
    log_z, _ = _log_z(mu_f, sd_f, gamma_g, fstars)
    terms, _ = _ibo_terms(log_z)
    return terms.mean(axis=0)


def pi_values(bundle: ModelBundle, X: np.ndarray, fstars) -> np.ndarray:
    """Average probability of improvement; a lower bound of cmes_ibo."""
    mu_f, sd_f, gamma_g = _posterior_stats(bundle, X)
    log_z, _ = _log_z(mu_f, sd_f, gamma_g, fstars)
    return np.exp(log_z).mean(axis=0)


def cmes_values(bundle: ModelBundle, X: np.ndarray, fstars) -> np.ndarray:
    """Direct truncated-entropy estimator: mean of Z/(2 Zbar) R - log Zbar."""
    mu_f, sd_f, gamma_g = _posterior_stats(bundle, X)
    log_z, gamma_f = _log_z(mu_f, sd_f, gamma_g, fstars)
    terms, zbar = _ibo_terms(log_z)
    R = a_gamma(gamma_f) + np.sum(a_gamma(gamma_g), axis=0)
    return (np.exp(log_z) / (2.0 * zbar) * R + terms).mean(axis=0)


def cmes_ibo(bundle: ModelBundle, x: np.ndarray, samples: SampleSet) -> float:
    return float(cmes_ibo_values(bundle, _row(x), samples.max_values)[0])


def pi_lower_bound(bundle: ModelBundle, x: np.ndarray, samples: SampleSet) -> float:
    return float(pi_values(bundle, _row(x), samples.max_values)[0])


def cmes(bundle: ModelBundle, x: np.ndarray, samples: SampleSet) -> float:
    return float(cmes_values(bundle, _row(x), samples.max_values)[0])


def _row(x):
    return np.atleast_1d(np.asarray(x, dtype=float))[None, :]


# -- greedy-batch (fantasy-conditioned) variants --------------------------


@dataclass(frozen=True)
class FantasySet:
    """Per-sample fantasy-conditioned model bundles for a pending batch Xq."""

    pending: np.ndarray  # (q, d)
    entries: list  # [(fstar, conditioned ModelBundle)]


def make_fantasy_set(
    bundle: ModelBundle, samples: SampleSet, Xq: np.ndarray
) -> FantasySet:
    """Condition each sample's models on its own path values at Xq."""
    Xq = np.atleast_2d(np.asarray(Xq, dtype=float)) if len(np.shape(Xq)) else Xq
    Xq = np.asarray(Xq, dtype=float).reshape(-1, bundle.dim)
    entries = []
    for entry in samples.entries:
        H = fantasy_outputs(entry, Xq)
        entries.append((entry[0], bundle.condition_on_fantasies(Xq, H)))
    return FantasySet(Xq, entries)


def _parallel_values(fantasies: FantasySet, X: np.ndarray, with_cmes: bool):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    acc = np.zeros(X.shape[0])
    for fstar, cond in fantasies.entries:
        mu_f, sd_f, gamma_g = _posterior_stats(cond, X)
        log_z, gamma_f = _log_z(mu_f, sd_f, gamma_g, [fstar])
        terms, zbar = _ibo_terms(log_z)
        if with_cmes:
            R = a_gamma(gamma_f) + np.sum(a_gamma(gamma_g), axis=0)
            acc += (np.exp(log_z) / (2.0 * zbar) * R + terms)[0]
        else:
            acc += terms[0]
    return acc / len(fantasies.entries)


def parallel_cmes_ibo_values(
    bundle: ModelBundle, X: np.ndarray, fantasies: FantasySet
) -> np.ndarray:
    return _parallel_values(fantasies, X, with_cmes=False)


def parallel_cmes_values(
    bundle: ModelBundle, X: np.ndarray, fantasies: FantasySet
) -> np.ndarray:
    return _parallel_values(fantasies, X, with_cmes=True)


def parallel_cmes_ibo(bundle, x, fantasies: FantasySet) -> float:
    return float(parallel_cmes_ibo_values(bundle, _row(x), fantasies)[0])


def parallel_cmes(bundle, x, fantasies: FantasySet) -> float:
    return float(parallel_cmes_values(bundle, _row(x), fantasies)[0])


# -- baselines ------------------------------------------------------------


def eic_values(
    bundle: ModelBundle, X: np.ndarray, best_feasible: float | None
) -> np.ndarray:
    """Expected improvement with constraints (feasibility probability only
    while no feasible observation exists)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mu_f, sd_f, gamma_g = _posterior_stats(bundle, X)
    pf = np.exp(np.sum(log_ndtr(-gamma_g), axis=0))
    if best_feasible is None:
        return pf
    u = (mu_f - best_feasible) / sd_f
    phi = np.exp(-0.5 * u * u - _LOG_SQRT_2PI)
    ei = sd_f * (u * np.exp(log_ndtr(u)) + phi)
    return np.maximum(ei, 0.0) * pf


def eic(bundle: ModelBundle, x, best_feasible: float | None) -> float:
    return float(eic_values(bundle, _row(x), best_feasible)[0])


def best_feasible_observation(bundle: ModelBundle) -> float | None:
    """Max observed objective among rows whose observed constraints all meet
    their thresholds; None when no such row exists."""
    y_f = bundle.objective.y
    if y_f.size == 0:
        return None
    ok = np.ones(y_f.size, dtype=bool)
    for model, z in zip(bundle.constraints, bundle.thresholds):
        ok &= model.y >= z
    if not np.any(ok):
        return None
    return float(np.max(y_f[ok]))


def tsc_select(
    entry: PathBundle,
    thresholds,
    domain: Box,
    cfg: SolverConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Thompson selection: argmax of the sampled objective over the sampled
    feasible region, or the minimal-total-violation point when it is empty."""
    val, x = solve_constrained_path_max(
        entry, thresholds, domain, cfg, rng, return_point=True
    )
    if x is not None:
        return x
    return _minimize_violation(entry, thresholds, domain, cfg, rng)


def _total_violation(entry: PathBundle, thresholds, X):
    X = np.atleast_2d(X)
    v = np.zeros(X.shape[0])
    for p, z in zip(entry.constraint_paths, thresholds):
        v += np.maximum(z - p(X), 0.0)
    return v


def _minimize_violation(entry, thresholds, domain, cfg, rng):
    coarse = latin_hypercube(domain.dim, cfg.n_coarse, domain, rng)
    viol = _total_violation(entry, thresholds, coarse)
    order = np.argsort(viol)
    best_x = coarse[order[0]].copy()
    best_v = float(viol[order[0]])
    step0 = cfg.step_init_frac * float(np.min(domain.lengths))
    step_min = cfg.step_min_frac * float(np.min(domain.lengths))
    for i in order[: cfg.n_restarts]:
        x = np.array(coarse[i], dtype=float)
        for _ in range(cfg.max_iters):
            # Descend the violation: sum of gradients of the active terms.
            g = np.zeros(domain.dim)
            for p, z in zip(entry.constraint_paths, thresholds):
                if p.eval_one(x) < z:
                    g += p.grad(x)
            norm = np.linalg.norm(g)
            if norm < 1e-14:
                break
            v0 = float(_total_violation(entry, thresholds, x[None, :])[0])
            step = step0
            moved = False
            while step >= step_min:
                x1 = domain.clip(x + step * g / norm)
                if float(_total_violation(entry, thresholds, x1[None, :])[0]) < v0:
                    x = x1
                    moved = True
                    break
                step *= 0.5
            if not moved:
                break
        v = float(_total_violation(entry, thresholds, x[None, :])[0])
        if v < best_v:
            best_x, best_v = x.copy(), v
    return best_x
