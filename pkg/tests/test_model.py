"""Domain types: covariance assembly, jump moments, set membership."""

import numpy as np
import pytest

import robust_mv as rm
from robust_mv.model import atom_table


class TestBuildCovariance:
    def test_identity(self):
        sigma = rm.build_covariance([1.0, 1.0], np.eye(2))
        assert np.array_equal(sigma, np.eye(2))

    def test_direct_arithmetic(self):
        sigma = rm.build_covariance([0.2, 0.25], np.array([[1.0, 0.3], [0.3, 1.0]]))
        assert np.allclose(sigma, [[0.04, 0.015], [0.015, 0.0625]], atol=1e-15)

    def test_degenerate_correlation_rejected(self):
        with pytest.raises(rm.NotPositiveDefinite):
            rm.build_covariance([1.0, 1.0], np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_dimension_mismatch(self):
        with pytest.raises(rm.DimensionMismatch):
            rm.build_covariance([1.0, 1.0, 1.0], np.eye(2))

    def test_nonunit_diagonal_rejected(self):
        with pytest.raises(rm.NotPositiveDefinite):
            rm.build_covariance([1.0, 1.0], np.array([[1.1, 0.0], [0.0, 1.0]]))


class TestJumpSizeLaws:
    def test_two_point_moments(self):
        law = rm.JumpSizeLaw.two_point(-0.1, 0.3, 0.25)
        assert law.mean == pytest.approx(0.25 * -0.1 + 0.75 * 0.3, abs=1e-15)
        assert law.second_moment == pytest.approx(0.25 * 0.01 + 0.75 * 0.09, abs=1e-15)

    def test_uniform_moments(self):
        law = rm.JumpSizeLaw.uniform(-0.2, 0.4)
        assert law.mean == pytest.approx(0.1, abs=1e-15)
        assert law.second_moment == pytest.approx((0.04 - 0.08 + 0.16) / 3.0, abs=1e-15)

    def test_lognormal_moments_match_samples(self):
        law = rm.JumpSizeLaw.shifted_lognormal(-0.1, 0.2)
        rng = np.random.default_rng(1)
        draws = law.sample(rng, 400_000)
        assert np.mean(draws) == pytest.approx(law.mean, abs=3e-3)
        assert np.mean(draws**2) == pytest.approx(law.second_moment, abs=3e-3)

    def test_from_moments_is_exact(self):
        law = rm.JumpSizeLaw.two_point_from_moments(0.1, 0.02)
        law.check_stated_moments(0.1, 0.02)
        assert law.mean == pytest.approx(0.1, abs=1e-15)
        assert law.second_moment == pytest.approx(0.02, abs=1e-15)

    def test_stated_moment_mismatch_rejected(self):
        law = rm.JumpSizeLaw.uniform(0.0, 0.2)
        with pytest.raises(rm.InvalidBounds):
            law.check_stated_moments(0.1, 0.05)

    def test_surrogate_preserves_moments(self):
        for law in (
            rm.JumpSizeLaw.uniform(-0.3, 0.5),
            rm.JumpSizeLaw.shifted_lognormal(0.05, 0.3),
            rm.JumpSizeLaw.two_point(-0.2, 0.6, 0.7),
        ):
            atoms = law.two_point_surrogate()
            m1 = sum(y * p for y, p in atoms)
            m2 = sum(y * y * p for y, p in atoms)
            assert m1 == pytest.approx(law.mean, abs=1e-14)
            assert m2 == pytest.approx(law.second_moment, abs=1e-14)

    def test_support_below_minus_one_rejected(self):
        with pytest.raises(rm.InvalidBounds):
            rm.JumpSizeLaw.two_point(-1.5, 0.2, 0.5)
        with pytest.raises(rm.InvalidBounds):
            rm.JumpSizeLaw.uniform(-1.2, 0.0)


class TestAdjustedMoments:
    def test_no_jump_unchanged(self):
        scen = rm.Scenario(np.array([0.1, 0.05]), np.diag([0.04, 0.0625]))
        b_f, sigma_f = rm.adjusted_moments(scen)
        assert np.array_equal(b_f, scen.drift)
        assert np.array_equal(sigma_f, scen.cov)

    def test_single_type_arithmetic(self, cp_jump):
        scen = rm.Scenario(np.array([0.1, 0.05]), np.diag([0.04, 0.0625]), jump=cp_jump)
        b_f, sigma_f = rm.adjusted_moments(scen)
        assert np.allclose(b_f, [0.15, 0.05], atol=1e-15)
        assert np.allclose(sigma_f, np.diag([0.05, 0.0625]), atol=1e-15)

    def test_discrete_levy_against_summation_oracle(self):
        atoms = np.array([[0.1, 0.0], [-0.05, 0.02]])
        weights = np.array([0.3, 0.2])
        jump = rm.DiscreteLevyJumps(atoms, weights)
        scen = rm.Scenario(np.array([0.1, 0.05]), np.diag([0.04, 0.0625]), jump=jump)
        b_f, sigma_f = rm.adjusted_moments(scen)
        # independent oracle: plain summation over atoms
        drift_shift = np.zeros(2)
        cov_shift = np.zeros((2, 2))
        for z, f in zip(atoms, weights):
            drift_shift += f * z
            cov_shift += f * np.outer(z, z)
        assert np.allclose(b_f, scen.drift + drift_shift, atol=1e-15)
        assert np.allclose(sigma_f, scen.cov + cov_shift, atol=1e-15)

    def test_zero_moment_jump_is_exact_identity(self):
        jump = rm.CompoundPoissonJumps(
            loadings=np.array([[1.0], [0.0]]),
            intensity=np.array([0.5]),
            size_laws=(rm.JumpSizeLaw.two_point(0.0, 0.0, 0.5),),
        )
        scen = rm.Scenario(np.array([0.1, 0.05]), np.diag([0.04, 0.0625]), jump=jump)
        b_f, sigma_f = rm.adjusted_moments(scen)
        assert np.array_equal(b_f, scen.drift)
        assert np.array_equal(sigma_f, scen.cov)

    def test_covariance_adjustment_is_psd(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            k = int(rng.integers(1, 4))
            n = int(rng.integers(1, 4))
            loadings = rng.uniform(0.0, 1.0, (n + k, k))
            if np.linalg.matrix_rank(loadings) < k:
                continue
            laws = tuple(
                rm.JumpSizeLaw.uniform(float(-rng.uniform(0, 0.5)), float(rng.uniform(0, 0.5)))
                for _ in range(int(k))
            )
            jump = rm.CompoundPoissonJumps(loadings, rng.uniform(0.1, 2.0, int(k)), laws)
            adj = jump.covariance_adjustment()
            assert np.min(np.linalg.eigvalsh(adj)) >= -1e-12


class TestJumpSpecs:
    def test_rank_deficient_loadings_rejected(self):
        with pytest.raises(rm.InvalidBounds):
            rm.CompoundPoissonJumps(
                loadings=np.array([[1.0, 1.0], [0.5, 0.5]]),
                intensity=np.array([0.5, 0.5]),
                size_laws=(
                    rm.JumpSizeLaw.two_point_from_moments(0.1, 0.02),
                    rm.JumpSizeLaw.two_point_from_moments(0.1, 0.02),
                ),
            )

    def test_nonpositive_intensity_rejected(self):
        with pytest.raises(rm.InvalidBounds):
            rm.CompoundPoissonJumps(
                loadings=np.array([[1.0]]),
                intensity=np.array([0.0]),
                size_laws=(rm.JumpSizeLaw.two_point_from_moments(0.1, 0.02),),
            )

    def test_levy_weights_positive_finite(self):
        with pytest.raises(rm.InvalidBounds):
            rm.DiscreteLevyJumps(np.array([[0.1]]), np.array([-0.5]))
        with pytest.raises(rm.InvalidBounds):
            rm.DiscreteLevyJumps(np.array([[np.inf]]), np.array([0.5]))

    def test_compensation_indicator_validator(self):
        big = rm.CompoundPoissonJumps(
            loadings=np.array([[1.0]]),
            intensity=np.array([5.0]),
            size_laws=(rm.JumpSizeLaw.two_point(0.3, 0.3, 0.5),),
        )
        assert not big.compensation_within_unit()
        with pytest.raises(rm.InvalidBounds):
            big.validate_compensation()
        small = rm.CompoundPoissonJumps(
            loadings=np.array([[1.0]]),
            intensity=np.array([0.5]),
            size_laws=(rm.JumpSizeLaw.two_point(0.3, 0.3, 0.5),),
        )
        small.validate_compensation()

    def test_atom_table_tags_small_jumps(self):
        jump = rm.DiscreteLevyJumps(np.array([[0.5, 0.0], [1.5, 0.2]]),
                                    np.array([0.3, 0.1]))
        atoms = atom_table(jump)
        assert atoms[0].small and not atoms[1].small


class TestScenarioAndSet:
    def test_scenario_requires_pd(self):
        with pytest.raises(rm.NotPositiveDefinite):
            rm.Scenario(np.array([0.1, 0.1]), np.array([[0.04, 0.05], [0.05, 0.04]]))

    def test_membership_of_uniform_draws(self, short_second_set):
        scens = rm.sample_scenarios(short_second_set, 50, 123)
        assert all(short_second_set.contains(s) for s in scens)

    def test_membership_of_hull_draws(self):
        verts = (np.eye(3),
                 np.array([[1.0, 0.3, 0.1], [0.3, 1.0, 0.2], [0.1, 0.2, 1.0]]))
        uset = rm.UncertaintySet.hull([0.0] * 3, [0.1] * 3, [0.1] * 3, [0.2] * 3, verts)
        for s in rm.sample_scenarios(uset, 20, 5):
            assert uset.contains(s)

    def test_ordering_violation_names_inequality(self):
        with pytest.raises(rm.AssumptionViolated, match="vol_lo"):
            rm.UncertaintySet.two_asset(
                (0.1, 0.12), (0.02, 0.03), (0.25, 0.3), (0.2, 0.3), (0.4, 0.6)
            )

    def test_negative_drift_lower_bound_rejected(self):
        with pytest.raises(rm.AssumptionViolated, match="drift_lo >= 0"):
            rm.UncertaintySet.two_asset(
                (-0.05, 0.12), (-0.06, 0.03), (0.15, 0.2), (0.2, 0.3), (0.4, 0.6)
            )

    def test_ordering_escape_hatch(self):
        uset = rm.UncertaintySet.two_asset(
            (0.1, 0.12), (0.02, 0.03), (0.25, 0.3), (0.2, 0.3), (0.4, 0.6),
            require_ordering=False,
        )
        assert not uset.two_asset_ordering_holds()

    def test_correlation_interval_bounds(self):
        with pytest.raises(rm.InvalidBounds):
            rm.UncertaintySet.two_asset(
                (0.1, 0.12), (0.02, 0.03), (0.15, 0.2), (0.2, 0.3), (0.4, 1.0)
            )

    def test_singleton_detection(self, short_second_set):
        assert not short_second_set.is_singleton
        scen = rm.Scenario(np.array([0.08]), np.array([[0.04]]))
        assert rm.UncertaintySet.point(scen).is_singleton


class TestCriterionAndDynamics:
    def test_criterion_validation(self):
        with pytest.raises(rm.InvalidBounds):
            rm.Criterion("terminal_wealth", lam=0.0, horizon=1.0)
        with pytest.raises(rm.InvalidBounds):
            rm.Criterion("terminal_wealth", lam=1.0, horizon=0.0, t0=0.5)
        with pytest.raises(rm.InvalidBounds):
            rm.Criterion("wealth_scaled", lam=1.0, horizon=1.0, x0=0.0)
        with pytest.raises(rm.InvalidBounds):
            rm.Criterion("bogus", lam=1.0, horizon=1.0)

    def test_wealth_scaled_aversion(self):
        crit = rm.Criterion("wealth_scaled", lam=2.0, horizon=1.0, x0=4.0)
        assert crit.risk_aversion_at(4.0) == 0.5

    def test_log_drift_has_variance_drag(self):
        scen = rm.Scenario(np.array([0.1, 0.05]), np.diag([0.04, 0.0625]))
        dyn = rm.WealthDynamics("log_return")
        rng = np.random.default_rng(2)
        for _ in range(20):
            alpha = rng.standard_normal(2)
            assert dyn.drift(alpha, scen) <= alpha @ scen.drift + 1e-15

    def test_terminal_wealth_maps_linear_in_alpha(self):
        scen = rm.Scenario(np.array([0.1, 0.05]), np.diag([0.04, 0.0625]))
        dyn = rm.WealthDynamics("terminal_wealth")
        a, b = np.array([1.0, -0.5]), np.array([0.3, 2.0])
        assert dyn.drift(a + b, scen) == pytest.approx(
            dyn.drift(a, scen) + dyn.drift(b, scen), abs=1e-15
        )
        # diffusion is quadratic: the squared norm of a linear map
        assert dyn.diffusion_sq(2 * a, scen) == pytest.approx(4 * dyn.diffusion_sq(a, scen))

    def test_nonbankruptcy_exposures(self, cp_jump):
        expo = rm.nonbankruptcy_intervals(np.array([0.5, 1.0]), cp_jump)
        assert np.allclose(expo, [0.5])
        assert rm.nonbankruptcy_violations(np.array([1.5, 0.0]), cp_jump) == [0]
        assert rm.nonbankruptcy_violations(np.array([0.9, 0.0]), cp_jump) == []
