import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize, stats

from kinwealth.fokker_planck import (
    ConvergenceError,
    FpGrid,
    ParetoStationary,
    discretized_stationary,
    fp_solve_to_steady,
    fp_step,
    l1_to_stationary,
    pareto_exponent,
    sample_stationary,
    stationary_cdf,
    stationary_pdf,
)


def quad_0_inf(fn):
    # split at the mode region so quad resolves the essential singularity and the tail
    a = integrate.quad(fn, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    b = integrate.quad(fn, 1.0, np.inf, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return a + b


class TestParetoExponent:
    def test_values(self):
        assert pareto_exponent(2.0) == 2.0
        assert pareto_exponent(1.0) == 3.0
        assert 1.0 < pareto_exponent(1e9) < 1.0 + 1e-8

    @pytest.mark.parametrize("lam", [0.0, -1.0])
    def test_rejects_non_positive(self, lam):
        with pytest.raises(ValueError):
            pareto_exponent(lam)


class TestStationaryDensity:
    def test_closed_form_value(self):
        assert stationary_pdf(ParetoStationary(2.0), 1.0) == pytest.approx(math.exp(-1.0), rel=1e-14)

    def test_vanishes_at_origin(self):
        ps = ParetoStationary(2.0)
        assert stationary_pdf(ps, 0.0) == 0.0
        assert stationary_pdf(ps, -1.0) == 0.0
        assert stationary_pdf(ps, 1e-3) < 1e-300

    @pytest.mark.parametrize("mu, m", [(2.0, 1.0), (3.0, 1.0), (1.5, 2.5), (5.0, 0.4)])
    def test_matches_scipy_invgamma(self, mu, m):
        ps = ParetoStationary(mu, m)
        ref = stats.invgamma(a=mu, scale=(mu - 1) * m)
        w = np.array([0.05, 0.3, 1.0, 4.0, 50.0]) * m
        assert ps.pdf(w) == pytest.approx(ref.pdf(w), rel=1e-12)
        assert ps.cdf(w) == pytest.approx(ref.cdf(w), rel=1e-12)

    @pytest.mark.parametrize("mu", [1.5, 2.0, 3.0])
    def test_normalization_and_mean(self, mu):
        ps = ParetoStationary(mu)
        assert quad_0_inf(ps.pdf) == pytest.approx(1.0, abs=1e-8)
        if mu > 1.5:
            assert quad_0_inf(lambda w: w * ps.pdf(w)) == pytest.approx(1.0, abs=1e-8)

    def test_second_moment_identity(self):
        ps = ParetoStationary(3.0, 1.0)
        m2 = quad_0_inf(lambda w: w * w * ps.pdf(w))
        assert m2 == pytest.approx(ps.second_moment, abs=1e-7)
        assert ps.second_moment == pytest.approx(1.0 * 2.0 / 1.0)

    @pytest.mark.parametrize("mu", [1.5, 2.0])
    def test_divergent_second_moment_flag(self, mu):
        ps = ParetoStationary(mu)
        assert not ps.has_finite_variance
        assert ps.variance == math.inf

    def test_general_mean_by_scaling(self):
        unit, scaled = ParetoStationary(2.5, 1.0), ParetoStationary(2.5, 3.0)
        w = np.linspace(0.1, 20, 50)
        assert scaled.pdf(w) == pytest.approx(unit.pdf(w / 3.0) / 3.0, rel=1e-12)


class TestStationaryCdf:
    def test_limits(self):
        ps = ParetoStationary(2.0)
        assert stationary_cdf(ps, 0.0) == 0.0
        assert stationary_cdf(ps, 1e12) == pytest.approx(1.0, abs=1e-20)

    def test_tail_expansion(self):
        # ccdf ~ (1/w)^2 / Gamma(3) for mu = 2
        ps = ParetoStationary(2.0)
        for w in (1e2, 1e3):
            assert ps.sf(w) == pytest.approx(1.0 / (2.0 * w * w), rel=1.0 / w)

    def test_median(self):
        ps = ParetoStationary(2.0)
        # oracle: Q(2, x) = (1 + x) exp(-x) = 0.5 with x = 1 / w
        x = optimize.brentq(lambda x: (1 + x) * math.exp(-x) - 0.5, 0.1, 5.0, xtol=1e-15)
        med = optimize.brentq(lambda w: stationary_cdf(ps, w) - 0.5, 0.01, 10.0, xtol=1e-14)
        assert med == pytest.approx(1.0 / x, rel=1e-10)
        assert med == pytest.approx(0.5958, abs=1e-4)

    def test_cdf_is_integral_of_pdf(self):
        ps = ParetoStationary(2.0, 1.5)
        for w in (0.3, 1.0, 7.0):
            area = integrate.quad(ps.pdf, 0.0, w, epsabs=1e-14, epsrel=1e-12)[0]
            assert ps.cdf(w) == pytest.approx(area, rel=1e-10)

    def test_ppf_inverts_cdf(self):
        ps = ParetoStationary(3.0)
        q = np.array([0.01, 0.5, 0.999])
        assert ps.cdf(ps.ppf(q)) == pytest.approx(q, rel=1e-12)

    @pytest.mark.parametrize("mu", [1.5, 2.0, 3.0])
    def test_tail_slope(self, mu):
        ps = ParetoStationary(mu)
        w = np.linspace(10.0, 100.0, 200)
        slope = np.polyfit(np.log(w), np.log(ps.sf(w)), 1)[0]
        assert abs(slope + mu) <= 0.05


class TestSampler:
    def test_ks_distance(self):
        ps = ParetoStationary(3.0)
        x = sample_stationary(ps, np.random.default_rng(1), 100_000)
        assert stats.kstest(x, ps.cdf).statistic <= 0.006

    def test_mean_and_positivity(self):
        ps = ParetoStationary(3.0)
        x = ps.sample(np.random.default_rng(2), 100_000)
        assert np.all(x > 0)
        assert x.mean() == pytest.approx(1.0, abs=0.01)

    def test_scalar_draw(self):
        assert isinstance(ParetoStationary(2.0).sample(np.random.default_rng(0)), float)


def g_inf_grid(lam, w_max, n):
    ps = ParetoStationary.from_lambda(lam)
    return FpGrid(w_max, n, discretized_stationary(ps, w_max, n), lam), ps


class TestFpStep:
    @pytest.mark.parametrize("scheme, dt", [("implicit", 0.1), ("explicit", None)])
    def test_mass_conserved(self, scheme, dt):
        grid = FpGrid.uniform(0.0, 2.0, 20.0, 400, 2.0)
        dt = dt or 0.9 * grid.max_explicit_dt()
        m0 = grid.mass
        for _ in range(20):
            new = fp_step(grid, dt, scheme)
            assert abs(new.mass - grid.mass) <= 1e-12 * m0
            grid = new
        assert np.all(grid.cell_averages >= 0.0)

    def test_explicit_rejects_unstable_dt(self):
        grid = FpGrid.uniform(0.0, 2.0, 20.0, 400, 2.0)
        with pytest.raises(ValueError, match="positivity limit"):
            fp_step(grid, 2.0 * grid.max_explicit_dt(), "explicit")

    def test_implicit_and_explicit_agree_for_small_steps(self):
        grid = FpGrid.uniform(0.0, 2.0, 10.0, 200, 1.0)
        dt = 0.5 * grid.max_explicit_dt()
        a, b = grid, grid
        for _ in range(200):
            a = fp_step(a, dt, "explicit")
            b = fp_step(b, dt, "implicit")
        assert np.abs(a.cell_averages - b.cell_averages).sum() * grid.dw < 5e-3

    def test_stationary_data_barely_moves(self):
        grid, ps = g_inf_grid(2.0, 20.0, 2000)
        new = fp_step(grid, 1.0)
        change = np.abs(new.cell_averages - grid.cell_averages).sum() * grid.dw
        # discretization error: exact cell averages vs the scheme's centre-sampled equilibrium
        sampled = ps.pdf(grid.centers)
        sampled *= grid.mass / (sampled.sum() * grid.dw)
        disc = np.abs(sampled - grid.cell_averages).sum() * grid.dw
        assert change <= disc
        assert disc < 1e-3

    def test_pure_drift_relaxes_variance(self):
        # lam = 0: dVar/dtau = -2 Var; upwinding only adds O(dw) diffusion
        grid = FpGrid.uniform(0.5, 1.5, 4.0, 4000, 0.0)
        var = [grid.variance]
        dt = 0.01
        for _ in range(100):
            grid = fp_step(grid, dt)
            var.append(grid.variance)
        assert np.all(np.diff(var) < 0)
        assert var[-1] / var[0] == pytest.approx(math.exp(-2.0), rel=0.05)

    def test_mean_relaxes_toward_m(self):
        grid = FpGrid.uniform(2.0, 3.0, 60.0, 3000, 0.5, m=1.0)
        res = fp_solve_to_steady(grid, 1e-8, dt=0.1)
        tail = ParetoStationary.from_lambda(0.5).sf(60.0)
        assert res.grid.mean == pytest.approx(1.0, abs=1e-3 + 60.0 * tail)

    def test_rejects_bad_dt(self):
        grid = FpGrid.uniform(0.0, 2.0, 20.0, 100, 2.0)
        with pytest.raises(ValueError):
            fp_step(grid, 0.0)
        with pytest.raises(ValueError):
            fp_step(grid, 0.1, "crank")


class TestSteadyState:
    def test_lambda_two_from_uniform(self):
        ps = ParetoStationary(2.0)
        res = fp_solve_to_steady(FpGrid.uniform(0.0, 2.0, 20.0, 2000, 2.0), 1e-10)
        assert l1_to_stationary(res.grid, ps) <= 5e-3
        assert np.all(np.diff(res.taus) > 0)
        assert res.residuals[-1] < 1e-10

    def test_lambda_one_variance(self):
        # the truncated tail carries int_{w_max}^inf w^2 g ~ 4 / w_max of the variance
        res = fp_solve_to_steady(FpGrid.uniform(0.0, 2.0, 400.0, 8000, 1.0), 1e-9, dt=0.1)
        assert res.grid.variance == pytest.approx(1.0, abs=0.02)

    def test_lambda_one_matches_truncated_moment(self):
        w_max = 20.0
        ps = ParetoStationary(3.0)
        res = fp_solve_to_steady(FpGrid.uniform(0.0, 2.0, w_max, 4000, 1.0), 1e-10)
        mass = ps.cdf(w_max)
        m1 = integrate.quad(lambda w: w * ps.pdf(w), 0, w_max, epsabs=1e-13)[0] / mass
        m2 = integrate.quad(lambda w: w * w * ps.pdf(w), 0, w_max, epsabs=1e-13)[0] / mass
        assert res.grid.mean == pytest.approx(m1, abs=1e-5)
        assert res.grid.variance == pytest.approx(m2 - m1 * m1, abs=1e-4)

    def test_loose_tolerance_returns_after_one_step(self):
        res = fp_solve_to_steady(FpGrid.uniform(0.0, 2.0, 20.0, 200, 2.0), tol=1e6)
        assert len(res.residuals) == 1

    def test_budget_exhausted(self):
        with pytest.raises(ConvergenceError, match="no steady state"):
            fp_solve_to_steady(FpGrid.uniform(0.0, 2.0, 20.0, 200, 2.0), tol=1e-12, max_iter=5)

    def test_history_columns(self):
        res = fp_solve_to_steady(FpGrid.uniform(0.0, 2.0, 20.0, 200, 2.0), tol=1e-3)
        h = res.history
        assert h.shape == (len(res.residuals), 3)
        assert h[0, 0] == 1

    def test_refinement_at_least_first_order(self):
        ps = ParetoStationary(2.0)
        errs = []
        cells = [250, 500, 1000, 2000]
        for n in cells:
            res = fp_solve_to_steady(FpGrid.uniform(0.0, 2.0, 20.0, n, 2.0), 1e-11)
            errs.append(l1_to_stationary(res.grid, ps, renormalize=True))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(orders >= 1.0)


def test_grid_validation():
    with pytest.raises(ValueError):
        FpGrid(10.0, 3, np.array([1.0, -1.0, 0.5]), 1.0)
    with pytest.raises(ValueError):
        FpGrid(10.0, 3, np.ones(4), 1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 4.0), st.integers(20, 400), st.floats(1e-3, 1.0), st.floats(0.0, 0.9), st.floats(0.05, 0.9))
def test_implicit_step_conserves_mass_and_sign(lam, n_cells, dt, lo, width):
    grid = FpGrid.uniform(lo, lo + width, 10.0, n_cells, lam)
    for _ in range(5):
        grid = fp_step(grid, dt)
        assert grid.mass == pytest.approx(1.0, abs=1e-12)
        assert grid.cell_averages.min() >= -1e-14 * grid.cell_averages.max()
