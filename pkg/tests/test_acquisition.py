"""Acquisition values: lower bound, direct estimator, batch variants, baselines."""

import numpy as np
import pytest
from scipy.stats import norm

from cmesibo.acquisition import (
    a_gamma,
    best_feasible_observation,
    cmes,
    cmes_ibo,
    cmes_ibo_values,
    cmes_values,
    eic,
    eic_values,
    gamma_stats,
    make_fantasy_set,
    parallel_cmes,
    parallel_cmes_ibo,
    pi_lower_bound,
    pi_values,
    tsc_select,
    z_bar,
)
from cmesibo.domain import Box
from cmesibo.gp import GpModel, KernelSpec, ModelBundle
from cmesibo.maxvalue import (
    SampleSet,
    SolverConfig,
    sample_max_values_finite_domain,
)

X0 = np.array([0.5])


def prior_bundle(C=1, thresholds=None, ls=0.3):
    """Unit-variance zero-mean prior models: gamma values are just thresholds."""
    spec = KernelSpec(0.0, 1.0, np.array([ls]))
    empty = lambda: GpModel(spec, np.zeros((0, 1)), np.zeros(0))
    thresholds = [0.0] * C if thresholds is None else list(thresholds)
    return ModelBundle(empty(), [empty() for _ in range(len(thresholds))], thresholds)


def sample_set(fstars):
    return SampleSet([(float(f), None) for f in fstars])


class TestAGamma:
    def test_zero_at_zero(self):
        assert a_gamma(0.0) == 0.0

    def test_value_at_minus_084_below_minus_029(self):
        assert a_gamma(-0.84) < -0.29

    def test_vanishes_at_minus_infinity(self):
        assert abs(a_gamma(-30.0)) < 1e-6
        assert a_gamma(float("-inf")) == 0.0

    def test_matches_direct_formula(self):
        g = np.linspace(-3, 3, 13)
        direct = g * norm.pdf(g) / (1 - norm.cdf(g))
        assert np.allclose(a_gamma(g), direct, atol=1e-10)


class TestZBar:
    def test_half_times_half(self):
        zb = z_bar(prior_bundle(C=1), X0, 0.0)
        assert zb.z == pytest.approx(0.25, abs=1e-12)
        assert zb.z_bar == pytest.approx(0.75, abs=1e-12)

    def test_infeasible_sample_drops_objective_factor(self):
        zb = z_bar(prior_bundle(C=1), X0, float("-inf"))
        assert zb.z == pytest.approx(0.5, abs=1e-12)
        assert zb.z_bar == pytest.approx(0.5, abs=1e-12)

    def test_three_constraints(self):
        zb = z_bar(prior_bundle(C=3), X0, 0.0)
        assert zb.z == pytest.approx(0.5**4, abs=1e-12)
        assert zb.z_bar == pytest.approx(1 - 0.5**4, abs=1e-12)

    def test_z_plus_zbar_is_one(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            bundle = prior_bundle(C=2, thresholds=rng.uniform(-2, 2, 2))
            zb = z_bar(bundle, X0, rng.uniform(-2, 2))
            assert zb.z + zb.z_bar == pytest.approx(1.0, abs=1e-12)

    def test_gamma_stats_infinite_exactly_for_infeasible_sample(self):
        gs = gamma_stats(prior_bundle(C=1), X0, float("-inf"))
        assert np.isneginf(gs.gamma_f)
        gs = gamma_stats(prior_bundle(C=1), X0, 0.3)
        assert np.isfinite(gs.gamma_f)


class TestCmesIbo:
    def test_single_sample_value(self):
        val = cmes_ibo(prior_bundle(C=1), X0, sample_set([0.0]))
        assert val == pytest.approx(-np.log(0.75), abs=1e-12)

    def test_infeasible_sample_value(self):
        val = cmes_ibo(prior_bundle(C=1), X0, sample_set([float("-inf")]))
        assert val == pytest.approx(-np.log(0.5), abs=1e-12)

    def test_two_sample_mean(self):
        val = cmes_ibo(prior_bundle(C=1), X0, sample_set([0.0, float("-inf")]))
        expected = 0.5 * (-np.log(0.75) - np.log(0.5))
        assert val == pytest.approx(expected, abs=1e-12)

    def test_per_sample_terms_non_increasing_in_fstar(self):
        bundle = prior_bundle(C=1)
        fstars = np.linspace(-3, 3, 25)
        vals = np.array(
            [cmes_ibo(bundle, X0, sample_set([f])) for f in fstars]
        )
        assert np.all(np.diff(vals) <= 1e-12)

    def test_infeasible_reduction_to_feasibility_information(self):
        z = -0.7
        bundle = prior_bundle(C=1, thresholds=[z])
        val = cmes_ibo(bundle, X0, sample_set([float("-inf")]))
        # Zbar = Phi(gamma_g) exactly when the objective factor is 1
        assert val == pytest.approx(-norm.logcdf(z), abs=1e-10)


class TestPiLowerBound:
    def test_quarter(self):
        assert pi_lower_bound(prior_bundle(C=1), X0, sample_set([0.0])) == pytest.approx(
            0.25, abs=1e-12
        )

    def test_certainly_violated_constraint_gives_zero(self):
        bundle = prior_bundle(C=1, thresholds=[40.0])
        assert pi_lower_bound(bundle, X0, sample_set([0.0])) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_ordering_on_random_states(self):
        vals_ibo, vals_pi = random_state_values(2000, seed=1)
        assert np.all(vals_ibo >= vals_pi - 1e-12)
        assert np.all(vals_pi >= -1e-12)


def random_state_values(n, seed):
    """(cmes_ibo, pi) value pairs over randomized posterior states."""
    rng = np.random.default_rng(seed)
    out_ibo, out_pi = [], []
    for _ in range(n):
        C = int(rng.integers(1, 11))
        spec = KernelSpec(0.0, 1.0, np.array([0.3]))
        x_obs = np.array([[0.5]])

        def model():
            mu = rng.uniform(-3, 3)
            return GpModel(
                spec, x_obs, np.array([mu]), noise_var=rng.uniform(0.05, 3.0) ** 2
            )

        bundle = ModelBundle(model(), [model() for _ in range(C)], list(rng.uniform(-2, 2, C)))
        fstar = float("-inf") if rng.uniform() < 0.2 else rng.uniform(-3, 3)
        X = rng.uniform(0, 1, (1, 1))
        out_ibo.append(cmes_ibo_values(bundle, X, [fstar])[0])
        out_pi.append(pi_values(bundle, X, [fstar])[0])
    return np.array(out_ibo), np.array(out_pi)


class TestCmes:
    def test_zero_gamma_reduces_to_ibo(self):
        val = cmes(prior_bundle(C=1), X0, sample_set([0.0]))
        assert val == pytest.approx(-np.log(0.75), abs=1e-12)

    def test_six_constraints_at_gamma_minus_084_is_negative(self):
        bundle = prior_bundle(C=6, thresholds=[-0.84] * 6)
        val = cmes(bundle, X0, sample_set([-0.84]))
        assert val < 0.0

    def test_ibo_stays_positive_at_same_state(self):
        bundle = prior_bundle(C=6, thresholds=[-0.84] * 6)
        assert cmes_ibo(bundle, X0, sample_set([-0.84])) > 0.0

    def test_infeasible_sample_objective_term_dropped(self):
        bundle = prior_bundle(C=1, thresholds=[-0.84])
        val = cmes_values(bundle, X0[None, :], [float("-inf")])[0]
        # R has only the constraint term; Z and Zbar use the feasibility factor
        z = float(np.exp(norm.logcdf(0.84)))
        expected = z / (2 * (1 - z)) * a_gamma(-0.84) - np.log(1 - z)
        assert val == pytest.approx(expected, abs=1e-10)


class TestParallelVariants:
    def _samples(self, bundle, grid, K=4):
        return sample_max_values_finite_domain(
            bundle, K, grid, np.random.default_rng(3)
        )

    def _bundle(self):
        spec = KernelSpec(0.0, 1.0, np.array([0.25]))
        rng = np.random.default_rng(2)
        X = rng.uniform(0, 1, (4, 1))
        obj = GpModel(spec, X, rng.standard_normal(4))
        con = GpModel(spec, X, rng.standard_normal(4))
        return ModelBundle(obj, [con], [-0.5])

    def test_empty_prefix_equals_sequential(self):
        bundle = self._bundle()
        grid = np.linspace(0, 1, 21)[:, None]
        samples = self._samples(bundle, grid)
        fantasies = make_fantasy_set(bundle, samples, np.zeros((0, 1)))
        x = np.array([0.31])
        assert parallel_cmes_ibo(bundle, x, fantasies) == pytest.approx(
            cmes_ibo(bundle, x, samples), abs=1e-12
        )
        assert parallel_cmes(bundle, x, fantasies) == pytest.approx(
            cmes(bundle, x, samples), abs=1e-12
        )

    def test_distant_fantasy_barely_changes_value(self):
        spec = KernelSpec(0.0, 1.0, np.array([0.02]))
        rng = np.random.default_rng(4)
        X = rng.uniform(0.4, 0.6, (3, 1))
        bundle = ModelBundle(
            GpModel(spec, X, rng.standard_normal(3)),
            [GpModel(spec, X, rng.standard_normal(3))],
            [-0.5],
        )
        grid = np.concatenate([np.linspace(0.4, 0.6, 21), [0.99]])[:, None]
        samples = self._samples(bundle, grid)
        fantasies = make_fantasy_set(bundle, samples, np.array([[0.99]]))
        x = np.array([0.5])
        assert parallel_cmes_ibo(bundle, x, fantasies) == pytest.approx(
            cmes_ibo(bundle, x, samples), abs=1e-6
        )

    def test_fantasy_at_x_saturates_acquisition(self):
        bundle = self._bundle()
        grid = np.linspace(0, 1, 21)[:, None]
        samples = self._samples(bundle, grid, K=6)
        # pick a grid point that is no draw's constrained argmax: there the
        # fantasy pins the outputs strictly inside the complement region, so
        # observing x again carries (almost) no further information
        argmaxes = set()
        for fstar, pb in samples.entries:
            if np.isfinite(fstar):
                vals = pb.objective_path(grid)
                argmaxes.add(int(np.argmin(np.abs(vals - fstar))))
        idx = next(i for i in range(len(grid)) if i not in argmaxes)
        x = grid[idx]
        fantasies = make_fantasy_set(bundle, samples, x[None, :])
        before = cmes_ibo(bundle, x, samples)
        after = parallel_cmes_ibo(bundle, x, fantasies)
        assert after <= before + 1e-12
        assert after <= 1e-3


class TestEic:
    def test_feasibility_probability_only_without_incumbent(self):
        assert eic(prior_bundle(C=2), X0, None) == pytest.approx(0.25, abs=1e-12)

    def test_ei_factor_at_zero_mean_improvement(self):
        spec = KernelSpec(0.0, 1.0, np.array([0.3]))
        obj = GpModel(spec, np.zeros((0, 1)), np.zeros(0))  # N(0, 1) at any x
        bundle = ModelBundle(obj, [], [])
        assert eic(bundle, X0, 0.0) == pytest.approx(norm.pdf(0.0), abs=1e-10)

    def test_ei_factor_against_mc_oracle(self):
        spec = KernelSpec(0.0, 1.0, np.array([0.3]))
        bundle = ModelBundle(GpModel(spec, np.zeros((0, 1)), np.zeros(0)), [], [])
        best = -0.4
        rng = np.random.default_rng(5)
        mc = np.mean(np.maximum(rng.standard_normal(1_000_000) - best, 0.0))
        assert eic(bundle, X0, best) == pytest.approx(mc, abs=4e-3)

    def test_best_feasible_observation_rule(self):
        spec = KernelSpec(0.0, 1.0, np.array([0.3]))
        X = np.array([[0.1], [0.5], [0.9]])
        obj = GpModel(spec, X, np.array([1.0, 3.0, 2.0]))
        con = GpModel(spec, X, np.array([0.5, -0.5, 0.5]))
        bundle = ModelBundle(obj, [con], [0.0])
        # x=0.5 has the best objective but violates the constraint
        assert best_feasible_observation(bundle) == pytest.approx(2.0)

    def test_no_feasible_observation_returns_none(self):
        spec = KernelSpec(0.0, 1.0, np.array([0.3]))
        X = np.array([[0.1]])
        bundle = ModelBundle(
            GpModel(spec, X, np.array([1.0])),
            [GpModel(spec, X, np.array([-1.0]))],
            [0.0],
        )
        assert best_feasible_observation(bundle) is None


class TestTscSelect:
    def test_inactive_constraints_pick_unconstrained_argmax(self):
        from cmesibo.maxvalue import PathBundle
        from conftest import ConstantPath, QuadraticPath

        pb = PathBundle(QuadraticPath([0.3, 0.7]), [ConstantPath(5.0)])
        x = tsc_select(pb, [0.0], Box([0, 0], [1, 1]), SolverConfig(), np.random.default_rng(6))
        assert np.allclose(x, [0.3, 0.7], atol=1e-3)

    def test_all_infeasible_minimizes_violation(self):
        from cmesibo.maxvalue import PathBundle
        from conftest import QuadraticPath

        # constraint peaks at 0.7 but never reaches the threshold
        g = QuadraticPath([0.7], scale=1.0, offset=-1.0)
        pb = PathBundle(QuadraticPath([0.2]), [g])
        x = tsc_select(pb, [0.0], Box([0.0], [1.0]), SolverConfig(), np.random.default_rng(7))
        assert x[0] == pytest.approx(0.7, abs=1e-3)

    def test_reproducible_under_fixed_seed(self):
        spec = KernelSpec(0.0, 1.0, np.array([0.2]))
        bundle = ModelBundle(
            GpModel(spec, np.zeros((0, 1)), np.zeros(0)),
            [GpModel(spec, np.zeros((0, 1)), np.zeros(0))],
            [-0.5],
        )
        from cmesibo.maxvalue import sample_max_values

        cfg = SolverConfig()
        box = Box([0.0], [1.0])
        a = sample_max_values(bundle, 1, box, cfg, np.random.default_rng(8))
        b = sample_max_values(bundle, 1, box, cfg, np.random.default_rng(8))
        xa = tsc_select(a.entries[0][1], [-0.5], box, cfg, np.random.default_rng(9))
        xb = tsc_select(b.entries[0][1], [-0.5], box, cfg, np.random.default_rng(9))
        assert np.array_equal(xa, xb)
