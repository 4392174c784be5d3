"""Entropies of lower-truncated multivariate normals with independent axes.

The direct entropy-search acquisition rests on three closed forms: the
entropy of a 1-D normal truncated to ``[t, inf)``, its sum over independent
axes (box truncation), and the complement identity expressing the entropy
over the region where at least one axis falls below its threshold.  Each
closed form has a quadrature counterpart here so it can be checked against
an independent numerical oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import log_ndtr
from scipy.stats import norm

_LOG_SQRT_2PIE = 0.5 * np.log(2.0 * np.pi * np.e)
_QUAD_WINDOW = 12.0  # integration half-width in standard deviations


@dataclass(frozen=True)
class TruncatedNormalSpec:
    """N(mu, sigma^2) conditioned on the variable being >= lower_threshold."""

    mu: float
    sigma: float
    lower_threshold: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def entropy(self) -> float:
        return entropy_lower_truncated(self.mu, self.sigma, self.lower_threshold)


def gaussian_entropy(sigma: float) -> float:
    """Differential entropy of N(mu, sigma^2)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return _LOG_SQRT_2PIE + np.log(sigma)


def entropy_lower_truncated(mu: float, sigma: float, t: float) -> float:
    """Entropy of h ~ N(mu, sigma^2) conditioned on h >= t.

    H = log(sqrt(2 pi e) sigma (1 - Phi(g))) + g phi(g) / (2 (1 - Phi(g)))
    with g = (t - mu) / sigma; t = -inf recovers the plain normal entropy.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if np.isneginf(t):
        return gaussian_entropy(sigma)
    g = (t - mu) / sigma
    log_tail = log_ndtr(-g)
    if np.isneginf(log_tail):
        raise ValueError("truncation region has vanishing probability")
    hazard_term = 0.5 * g * np.exp(norm.logpdf(g) - log_tail)
    return _LOG_SQRT_2PIE + np.log(sigma) + log_tail + hazard_term


def tmn_entropy_box(mus, sigmas, thresholds) -> float:
    """Entropy of independent normals jointly truncated to all h_i >= t_i.

    Independence makes the joint truncated density a product, so the joint
    entropy is the sum of the marginal truncated entropies.
    """
    mus = np.atleast_1d(np.asarray(mus, dtype=float))
    sigmas = np.atleast_1d(np.asarray(sigmas, dtype=float))
    thresholds = np.atleast_1d(np.asarray(thresholds, dtype=float))
    if not (mus.shape == sigmas.shape == thresholds.shape):
        raise ValueError("mus, sigmas, thresholds must share a shape")
    return float(
        sum(entropy_lower_truncated(m, s, t) for m, s, t in zip(mus, sigmas, thresholds))
    )


def box_probability(mus, sigmas, thresholds) -> float:
    """Z = Pr(all h_i >= t_i) under independence."""
    mus = np.atleast_1d(np.asarray(mus, dtype=float))
    sigmas = np.atleast_1d(np.asarray(sigmas, dtype=float))
    thresholds = np.atleast_1d(np.asarray(thresholds, dtype=float))
    g = (thresholds - mus) / sigmas
    return float(np.exp(np.sum(log_ndtr(-g))))


def entropy_complement(mus, sigmas, thresholds) -> float:
    """Entropy of h conditioned on the complement event (some h_i < t_i).

    Splits the full entropy across the box A and its complement:
    H(h | not A) = H(h)/Zbar - Z H(h | A)/Zbar + log Zbar + Z log Z / Zbar.
    """
    mus = np.atleast_1d(np.asarray(mus, dtype=float))
    sigmas = np.atleast_1d(np.asarray(sigmas, dtype=float))
    thresholds = np.atleast_1d(np.asarray(thresholds, dtype=float))
    z = box_probability(mus, sigmas, thresholds)
    zbar = 1.0 - z
    if zbar <= 0:
        raise ValueError("complement event has vanishing probability")
    h_full = float(sum(gaussian_entropy(s) for s in sigmas))
    h_box = tmn_entropy_box(mus, sigmas, thresholds)
    z_log_z = z * np.log(z) if z > 0 else 0.0
    return (h_full - z * h_box + z_log_z) / zbar + np.log(zbar)


# -- model-state wrappers --------------------------------------------------


def _state_params(bundle, x, fstar):
    """(mus, sigmas, thresholds) of the joint output posterior at x.

    The improvement box A is f >= fstar and g_c >= z_c; fstar = -inf makes
    the objective axis untruncated.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mus, sigmas = [], []
    for m in bundle.models():
        p = m.posterior(x)
        mus.append(p.mean)
        sigmas.append(max(np.sqrt(p.var), 1e-9))
    thresholds = [fstar, *bundle.thresholds]
    return np.array(mus), np.array(sigmas), np.array(thresholds, dtype=float)


def tmn_entropy_box_state(bundle, x, fstar: float) -> float:
    """Entropy of the output vector at x truncated to the improvement box."""
    mus, sigmas, ts = _state_params(bundle, x, fstar)
    return tmn_entropy_box(mus, sigmas, ts)


def entropy_complement_identity_check(bundle, x, fstar: float):
    """(closed-form complement entropy, quadrature estimate) at one state."""
    mus, sigmas, ts = _state_params(bundle, x, fstar)
    return (
        entropy_complement(mus, sigmas, ts),
        entropy_complement_quadrature(mus, sigmas, ts),
    )


# -- quadrature oracles ----------------------------------------------------


def entropy_lower_truncated_quadrature(mu: float, sigma: float, t: float) -> float:
    """Direct -integral p log p of the truncated density on [t, inf)."""
    g = (t - mu) / sigma
    log_z = log_ndtr(-g)

    def neg_p_log_p(x):
        lp = norm.logpdf(x, mu, sigma) - log_z
        return -np.exp(lp) * lp

    hi = mu + _QUAD_WINDOW * sigma
    val, _ = quad(neg_p_log_p, max(t, mu - _QUAD_WINDOW * sigma), hi, limit=200)
    return val


def _plogp_tail(mu: float, sigma: float, t: float) -> float:
    """integral_t^inf p log p dx for the untruncated marginal density."""

    def p_log_p(x):
        lp = norm.logpdf(x, mu, sigma)
        return np.exp(lp) * lp

    lo = max(t, mu - _QUAD_WINDOW * sigma) if np.isfinite(t) else mu - _QUAD_WINDOW * sigma
    val, _ = quad(p_log_p, lo, mu + _QUAD_WINDOW * sigma, limit=200)
    return val


def entropy_complement_quadrature(mus, sigmas, thresholds) -> float:
    """Complement-region entropy from 1-D quadratures only.

    Under independence, integral_A p log p splits into per-axis pieces:
    sum_i S_i prod_{j != i} T_j with S_i = integral_{t_i}^inf p_i log p_i and
    T_j the tail probability.  The complement integral is the full-space
    integral minus the box integral.
    """
    mus = np.atleast_1d(np.asarray(mus, dtype=float))
    sigmas = np.atleast_1d(np.asarray(sigmas, dtype=float))
    thresholds = np.atleast_1d(np.asarray(thresholds, dtype=float))
    tails = np.array(
        [np.exp(log_ndtr(-(t - m) / s)) for m, s, t in zip(mus, sigmas, thresholds)]
    )
    full = sum(_plogp_tail(m, s, -np.inf) for m, s in zip(mus, sigmas))
    box = 0.0
    for i, (m, s, t) in enumerate(zip(mus, sigmas, thresholds)):
        others = np.prod(np.delete(tails, i))
        box += _plogp_tail(m, s, t) * others
    z = float(np.prod(tails))
    zbar = 1.0 - z
    if zbar <= 0:
        raise ValueError("complement event has vanishing probability")
    return -(full - box) / zbar + np.log(zbar)
