"""Closed-form solutions: displayed values, identities, the backward ODE."""

import json

import numpy as np
import pytest

import robust_mv as rm
from robust_mv.closed_form import OdeConfig, solve_growth_factors


@pytest.fixture(scope="module")
def point_set():
    return rm.UncertaintySet.point(rm.Scenario(np.array([0.08]), np.array([[0.04]])))


class TestTerminalWealth:
    def test_scalar_display_values(self, point_set):
        crit = rm.Criterion("terminal_wealth", lam=1.0, horizon=1.0)
        sol = rm.solve_terminal_wealth(point_set, crit)
        assert sol.premium == pytest.approx(0.16, abs=1e-15)
        assert sol.alpha_coef == pytest.approx([1.0], abs=1e-14)
        assert sol.V(0.0, 1.0) == pytest.approx(1.04, abs=1e-14)
        assert sol.g(0.0, 1.0) == pytest.approx(1.08, abs=1e-14)

    def test_terminal_conditions(self, point_set):
        crit = rm.Criterion("terminal_wealth", lam=1.5, horizon=2.0)
        sol = rm.solve_terminal_wealth(point_set, crit)
        for x in (-0.5, 0.3, 2.0):
            assert sol.V(2.0, x) == pytest.approx(x, abs=1e-14)
            assert sol.g(2.0, x) == pytest.approx(x, abs=1e-14)
            assert sol.f(2.0, x) == pytest.approx(x - 1.5 * x * x, abs=1e-14)

    def test_two_asset_values_from_numeric_premium(self, short_second_set, tw_criterion):
        # plug the premium found by the independent grid search
        oracle = rm.worst_case_numeric(short_second_set)
        sol = rm.solve_terminal_wealth(short_second_set, tw_criterion)
        p = oracle.risk_premium
        assert sol.V(0.0, 1.0) == pytest.approx(1.0 + p / 4.0, abs=1e-6)
        assert sol.g(0.0, 1.0) == pytest.approx(1.0 + p / 2.0, abs=1e-6)

    def test_strategy_constant_in_time_and_state(self, tw_solution):
        a00 = tw_solution.alpha_hat(0.0, 1.0)
        assert np.array_equal(a00, tw_solution.alpha_hat(0.7, 5.0))
        assert np.array_equal(a00, tw_solution.alpha_hat(0.2, -3.0))

    def test_value_gap_linear_in_time_to_go(self, tw_solution):
        lam, p = 1.0, tw_solution.premium
        for t in (0.0, 0.25, 0.9):
            gap = tw_solution.V(t, 1.3) - 1.3
            assert gap >= 0.0
            assert gap == pytest.approx(p / (4 * lam) * (1.0 - t), abs=1e-14)


class TestLogReturn:
    def test_scalar_strategy(self, point_set):
        crit = rm.Criterion("log_return", lam=1.0, horizon=1.0)
        sol = rm.solve_log_return(point_set, crit)
        assert sol.alpha_coef == pytest.approx([2.0 / 3.0], abs=1e-14)

    def test_terminal_condition(self, point_set):
        crit = rm.Criterion("log_return", lam=2.0, horizon=1.0)
        sol = rm.solve_log_return(point_set, crit)
        assert sol.V(1.0, 0.4) == pytest.approx(0.4, abs=1e-14)
        assert sol.g(1.0, 0.4) == pytest.approx(0.4, abs=1e-14)

    def test_strategy_shrinks_with_aversion(self, point_set):
        norms = []
        for lam in (1.0, 10.0, 100.0):
            crit = rm.Criterion("log_return", lam=lam, horizon=1.0)
            norms.append(np.linalg.norm(rm.solve_log_return(point_set, crit).alpha_coef))
        assert norms[0] > norms[1] > norms[2]

    def test_value_gap_slope(self, lr_solution):
        lam, p = 1.0, lr_solution.premium
        gap = lr_solution.V(0.4, 0.0) - 0.0
        assert gap == pytest.approx(p / (2 * (1 + 2 * lam)) * 0.6, abs=1e-14)


class TestObjectiveIdentity:
    def test_identity_on_grid(self, tw_solution, lr_solution, cp_solution, ws_solution):
        for sol in (tw_solution, lr_solution, cp_solution, ws_solution):
            lam = sol.criterion.lam
            ts = np.linspace(sol.criterion.t0, sol.criterion.horizon, 20)
            if sol.kind == "wealth_scaled":
                xs = np.linspace(0.5, 2.0, 20)
            else:
                xs = np.linspace(-0.5, 1.5, 20)
            for t in ts:
                for x in xs:
                    lam_x = lam / x if sol.kind == "wealth_scaled" else lam
                    lhs = sol.V(t, x)
                    rhs = sol.f(t, x) + lam_x * sol.g(t, x) ** 2
                    assert abs(lhs - rhs) <= 1e-12 * (1.0 + abs(lhs))


class TestCompoundPoisson:
    def test_zero_moment_jump_collapses_to_plain_solver(self, cp_set, cp_criterion):
        null_jump = rm.CompoundPoissonJumps(
            loadings=np.array([[1.0], [0.0]]),
            intensity=np.array([0.5]),
            size_laws=(rm.JumpSizeLaw.two_point(0.0, 0.0, 0.5),),
        )
        plain = rm.solve_terminal_wealth(cp_set, cp_criterion)
        jumped = rm.solve_compound_poisson(cp_set, cp_criterion, null_jump)
        assert jumped.premium == plain.premium
        assert np.array_equal(jumped.direction, plain.direction)
        assert jumped.worst_case.case_label == plain.worst_case.case_label
        assert jumped.nonbankruptcy.ok

    def test_point_set_values_from_inverse_oracle(self, cp_jump):
        scen = rm.Scenario(np.array([0.1, 0.05]), np.diag([0.04, 0.0625]))
        uset = rm.UncertaintySet.point(scen)
        crit = rm.Criterion("terminal_wealth", lam=1.0, horizon=1.0)
        with pytest.warns(UserWarning, match="alpha.J"):
            sol = rm.solve_compound_poisson(uset, crit, cp_jump)
        # oracle: moments by hand, premium by explicit 2x2 inverse
        b_f = np.array([0.15, 0.05])
        sigma_f = np.diag([0.05, 0.0625])
        p_f = float(b_f @ np.linalg.inv(sigma_f) @ b_f)
        assert sol.premium == pytest.approx(p_f, rel=1e-12)
        assert sol.V(0.0, 1.0) == pytest.approx(1.0 + 0.25 * p_f, rel=1e-12)
        # lam = 1 pushes the first exposure above 1: flagged, not fatal
        assert sol.nonbankruptcy.violating_types == (0,)

    def test_admissibility_threshold_by_bisection(self, cp_set, cp_jump):
        # find the aversion level where the exposure alpha.J crosses 1
        def exposure(lam: float) -> float:
            crit = rm.Criterion("terminal_wealth", lam=lam, horizon=1.0)
            import warnings
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                sol = rm.solve_compound_poisson(cp_set, crit, cp_jump)
            return float(sol.nonbankruptcy.exposures[0])

        lo, hi = 0.5, 4.0
        assert exposure(lo) > 1.0 and exposure(hi) < 1.0
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if exposure(mid) > 1.0:
                lo = mid
            else:
                hi = mid
        lam_star = 0.5 * (lo + hi)
        crit_bad = rm.Criterion("terminal_wealth", lam=0.9 * lam_star, horizon=1.0)
        with pytest.warns(UserWarning):
            bad = rm.solve_compound_poisson(cp_set, crit_bad, cp_jump)
        assert not bad.nonbankruptcy.ok
        crit_ok = rm.Criterion("terminal_wealth", lam=1.1 * lam_star, horizon=1.0)
        good = rm.solve_compound_poisson(cp_set, crit_ok, cp_jump)
        assert good.nonbankruptcy.ok

    def test_indicator_guard_rejects_heavy_jump_flow(self, cp_set, cp_criterion):
        heavy = rm.CompoundPoissonJumps(
            loadings=np.array([[1.0], [0.0]]),
            intensity=np.array([4.0]),
            size_laws=(rm.JumpSizeLaw.two_point(0.3, 0.3, 0.5),),
        )
        with pytest.raises(rm.InvalidBounds):
            rm.solve_compound_poisson(cp_set, cp_criterion, heavy)


class TestWealthScaled:
    def test_zero_premium_freezes_growth_factors(self):
        # drift exactly offset by the jump flow: b_F = 0, so A = B = 1
        jump = rm.DiscreteLevyJumps(np.array([[0.05]]), np.array([0.4]))
        uset = rm.UncertaintySet.single_asset((-0.02, -0.02), (0.2, 0.2))
        crit = rm.Criterion("wealth_scaled", lam=1.0, horizon=1.0, x0=1.0)
        sol = rm.solve_wealth_scaled(uset, crit, jump=jump)
        assert sol.premium == pytest.approx(0.0, abs=1e-18)
        assert np.allclose(sol.ode.a, 1.0, atol=1e-15)
        assert np.allclose(sol.ode.b, 1.0, atol=1e-15)
        assert np.allclose(sol.alpha_hat(0.3, 1.7), 0.0, atol=1e-15)

    def test_terminal_conditions(self, ws_solution):
        assert ws_solution.ode.a[-1] == 1.0
        assert ws_solution.ode.b[-1] == 1.0
        lam = ws_solution.criterion.lam
        for x in (0.5, 1.0, 3.0):
            assert ws_solution.g(1.0, x) == pytest.approx(x, abs=1e-14)
            assert ws_solution.f(1.0, x) == pytest.approx(x - lam * x, abs=1e-14)

    def test_step_halving_richardson(self, ws_set, ws_criterion, ws_jump):
        coarse = rm.solve_wealth_scaled(ws_set, ws_criterion, jump=ws_jump,
                                        ode=OdeConfig(h_rel=1e-4))
        fine = rm.solve_wealth_scaled(ws_set, ws_criterion, jump=ws_jump,
                                      ode=OdeConfig(h_rel=1e-5))
        assert abs(coarse.ode.a[0] - fine.ode.a[0]) <= 1e-8
        assert abs(coarse.ode.b[0] - fine.ode.b[0]) <= 1e-8

    def test_factors_stay_positive(self, ws_solution):
        assert np.all(ws_solution.ode.a > 0)
        assert np.all(ws_solution.ode.b > 0)

    def test_finite_difference_residual_of_the_system(self, ws_solution):
        # centered differences on the stored grid against the stated rates
        grids = ws_solution.ode
        lam, p = ws_solution.criterion.lam, ws_solution.premium
        t, a, b = grids.t, grids.a, grids.b
        h = t[1] - t[0]
        da = (a[2:] - a[:-2]) / (2 * h)
        db = (b[2:] - b[:-2]) / (2 * h)
        am, bm = a[1:-1], b[1:-1]
        m = am + 2 * lam * (am * am - bm)
        q = m / (2 * lam * bm)
        res_a = da + q * p * am
        res_b = db + (2 * q * p + q * q * p) * bm
        assert np.max(np.abs(res_a)) <= 1e-6
        assert np.max(np.abs(res_b)) <= 1e-6

    def test_interpolation_matches_nodes_and_slopes(self, ws_solution):
        grids = ws_solution.ode
        i = len(grids.t) // 3
        assert grids.mean_factor(grids.t[i]) == pytest.approx(grids.a[i], abs=1e-14)
        assert grids.mean_factor_slope(grids.t[i]) == pytest.approx(grids.a_slope[i], abs=1e-10)

    def test_blowup_guard(self):
        with pytest.raises(rm.OdeBlowup):
            solve_growth_factors(lam=1.0, premium=5.0, t0=0.0, horizon=1.0,
                                 ode=OdeConfig(h_rel=1e-3, max_value=1.05))

    def test_step_tolerance_guard(self):
        with pytest.raises(rm.StepTooLarge):
            solve_growth_factors(lam=1.0, premium=0.5, t0=0.0, horizon=1.0,
                                 ode=OdeConfig(h_rel=0.25, step_tol=1e-16))

    def test_objective_keeps_aversion_argument_separate(self, ws_solution):
        # f(t, x, y) evaluated at y = x reproduces the one-argument form
        t, x = 0.3, 1.4
        assert ws_solution.f(t, x) == pytest.approx(ws_solution.f(t, x, y=x), abs=1e-15)
        a = float(ws_solution.ode.mean_factor(t))
        b = float(ws_solution.ode.second_factor(t))
        assert ws_solution.f(t, x) == pytest.approx(a * x - 1.0 * b * x, abs=1e-13)

    def test_rejects_compound_poisson_spec(self, ws_set, ws_criterion, cp_jump):
        with pytest.raises(rm.InvalidBounds):
            rm.solve_wealth_scaled(ws_set, ws_criterion, jump=cp_jump)


class TestSerialization:
    def test_constant_kind_round_trip(self, tw_solution):
        doc = tw_solution.to_json_dict()
        blob = json.dumps(doc)
        back = json.loads(blob)
        assert back["premium"] == tw_solution.premium
        assert back["alpha_hat"] == tw_solution.alpha_coef.tolist()
        assert back["worst_case"]["case"] == "ShortSecond"

    def test_ode_kind_carries_grid_triples(self, ws_solution):
        doc = ws_solution.to_json_dict(ode_stride=500)
        assert doc["ode"]["t"][-1] == ws_solution.criterion.horizon
        assert doc["ode"]["A"][-1] == 1.0
        assert doc["ode"]["B"][-1] == 1.0
        json.dumps(doc)
