"""Validation harness: toy state geometry, score checks, bound checks."""

import numpy as np
import pytest

from cmesibo.validation import (
    check_a_gamma,
    check_theorem_bounds,
    kde_mi_oracle,
    toy_state,
)


class TestToyState:
    def test_geometry(self):
        state = toy_state(3)
        assert state.grid.shape == (200, 1)
        assert state.bundle.num_constraints == 3
        assert state.threshold == -0.84
        assert all(z == -0.84 for z in state.bundle.thresholds)

    def test_constraint_prior_gives_constant_score(self):
        state = toy_state(2)
        g = state.bundle.constraints[0]
        assert g.n == 0
        mu, var = g.posterior_batch(state.grid)
        score = (state.threshold - mu) / np.sqrt(var)
        assert np.allclose(score, -0.84, atol=1e-12)

    def test_objective_posterior_is_mirror_symmetric_near_center(self):
        # the bump observations mirror exactly about grid index 100; the
        # floor observations do not, but they sit many lengthscales away,
        # so near the bump the posterior is symmetric to high precision
        state = toy_state(1)
        mu, var = state.bundle.objective.posterior_batch(state.grid)
        idx = np.arange(85, 116)
        assert np.allclose(mu[idx], mu[200 - idx], atol=1e-3)
        assert np.allclose(var[idx], var[200 - idx], atol=1e-4)

    def test_center_is_the_most_uncertain_bump_point(self):
        state = toy_state(1)
        _, var = state.bundle.objective.posterior_batch(state.grid)
        near = np.abs(state.grid[:, 0] - 0.5) < 0.01
        assert np.argmax(np.where(near, var, -np.inf)) == 100

    def test_invalid_constraint_count(self):
        with pytest.raises(ValueError):
            toy_state(0)


class TestAGammaReport:
    def test_passes(self):
        rep = check_a_gamma()
        assert rep.passed
        assert rep.at_zero == 0.0
        assert rep.at_minus_084 < -0.29
        assert abs(rep.at_minus_30) < 1e-6


class TestTheoremBounds:
    def test_small_run_passes(self):
        state = toy_state(2)
        rep = check_theorem_bounds(
            state.bundle,
            state.grid,
            [state.grid[60], state.grid[100]],
            np.random.default_rng(0),
            n_samples=4000,
            K_list=(1, 10),
            xi_list=(1.0, 2.0),
            n_replicates=1000,
        )
        assert rep.passed
        assert len(rep.variance_checks) == 2
        assert len(rep.concentration_checks) == 4
        for c in rep.variance_checks:
            assert 0.0 <= c.variance <= 2.0
        for c in rep.concentration_checks:
            assert 0.0 <= c.empirical_tail <= c.bound


class TestKdeMiOracle:
    def test_small_run_is_finite_and_nonnegative(self):
        state = toy_state(2)
        est = kde_mi_oracle(
            state.bundle, state.grid, 30, 60, np.random.default_rng(1)
        )
        assert est.mi.shape == (200,)
        assert np.all(np.isfinite(est.mi))
        assert np.all(est.mi >= 0.0)
        assert 0.0 <= est.pi0_marginal <= 1.0
        assert est.bandwidth_marginal > 0.0
