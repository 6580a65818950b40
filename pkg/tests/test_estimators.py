import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kinwealth.estimators import (
    Histogram,
    analytic_masses,
    average_histograms,
    hill_estimator,
    histogram,
    l1_distance,
    log_edges,
    loglog_ccdf_fit,
    loglog_ccdf_slope,
    normalize,
    uniform_edges,
)
from kinwealth.fokker_planck import ParetoStationary
from kinwealth.model import Population

positive_lists = st.lists(st.floats(1e-3, 1e3), min_size=2, max_size=50)


class TestNormalize:
    def test_examples(self):
        assert np.array_equal(normalize(np.array([2.0, 0.0])), [2.0, 0.0])
        assert np.array_equal(normalize(np.array([4.0, 0.0])), [2.0, 0.0])

    def test_population_in_population_out(self):
        out = normalize(Population([4.0, 0.0]))
        assert isinstance(out, Population)
        assert out.mean == 1.0

    @given(positive_lists)
    def test_unit_mean(self, values):
        assert normalize(np.array(values)).mean() == pytest.approx(1.0, abs=1e-14)

    @given(positive_lists, st.floats(1e-3, 1e3))
    def test_idempotent_and_scale_equivariant(self, values, c):
        w = np.array(values)
        once = normalize(w)
        assert normalize(once) == pytest.approx(once, rel=1e-14)
        assert normalize(c * w) == pytest.approx(once, rel=1e-13)

    def test_zero_mean(self):
        with pytest.raises(ValueError):
            normalize(np.zeros(5))


class TestHistogram:
    def test_all_equal_single_bin(self):
        h = histogram(np.full(100, 1.05), uniform_edges(100, 10.0, overflow=False))
        assert np.count_nonzero(h.masses) == 1
        assert h.masses[10] == 1.0

    def test_uniform_samples_flat(self, rng):
        x = rng.uniform(0, 10, 200_000)
        h = histogram(x, np.linspace(0, 10, 11))
        # binomial sd of each mass is sqrt(0.1 * 0.9 / n) ~ 6.7e-4
        assert np.all(np.abs(h.masses - 0.1) < 5 * 6.7e-4)
        assert h.masses.sum() == pytest.approx(1.0, abs=1e-12)

    def test_overflow(self):
        h = histogram(np.array([0.5, 1.5, 20.0]), [0.0, 1.0, 2.0], overflow=True)
        assert np.isinf(h.edges[-1])
        assert h.masses == pytest.approx([1 / 3, 1 / 3, 1 / 3])
        with pytest.raises(ValueError, match="overflow"):
            histogram(np.array([0.5, 20.0]), [0.0, 1.0, 2.0])

    def test_last_edge_is_closed(self):
        h = histogram(np.array([2.0, 0.0]), [0.0, 1.0, 2.0])
        assert h.masses == pytest.approx([0.5, 0.5])

    @pytest.mark.parametrize("edges", [[0.0, 2.0, 1.0], [1.0, 2.0], [0.0, 1.0, 1.0]])
    def test_invalid_edges(self, edges):
        with pytest.raises(ValueError):
            histogram(np.array([0.5]), edges)

    def test_ccdf_at_edges(self):
        h = Histogram(np.array([0.0, 1.0, 2.0, np.inf]), np.array([0.5, 0.3, 0.2]), 10)
        assert h.ccdf() == pytest.approx([1.0, 0.5, 0.2, 0.0])

    def test_log_edges(self):
        e = log_edges(1e-2, 1e3, 32)
        assert e[0] == 0.0 and np.isinf(e[-1])
        assert e.size == 1 + 5 * 32 + 1 + 1
        assert np.all(np.diff(e) > 0)

    def test_average(self):
        e = np.array([0.0, 1.0, 2.0])
        a = Histogram(e, np.array([1.0, 0.0]), 5)
        b = Histogram(e, np.array([0.0, 1.0]), 5)
        avg = average_histograms([a, b])
        assert avg.masses == pytest.approx([0.5, 0.5])
        assert avg.n_samples == 10


class TestHill:
    def test_exact_pareto(self):
        u = np.random.default_rng(3).random(100_000)
        fit = hill_estimator(u ** -0.5, 1000)
        assert fit.k_used == 1000
        assert fit.stderr == pytest.approx(fit.exponent_estimate / math.sqrt(1000))
        assert abs(fit.exponent_estimate - 2.0) <= 0.2

    def test_inverse_gamma_tail(self):
        x = ParetoStationary(2.0).sample(np.random.default_rng(4), 100_000)
        assert abs(hill_estimator(x, 1000).exponent_estimate - 2.0) <= 0.2

    def test_default_k(self):
        x = np.random.default_rng(5).random(10_000) ** -0.5
        assert hill_estimator(x).k_used == 100

    def test_constant_samples(self):
        with pytest.raises(ValueError, match="degenerate"):
            hill_estimator(np.full(100, 2.0), 20)

    @pytest.mark.parametrize("k", [5, 100, 1000])
    def test_k_bounds(self, k):
        with pytest.raises(ValueError):
            hill_estimator(np.arange(1.0, 101.0), k)

    @given(st.floats(1e-3, 1e3))
    def test_scale_invariant(self, c):
        x = np.random.default_rng(6).random(2000) ** -0.7
        assert hill_estimator(c * x, 50).exponent_estimate == pytest.approx(
            hill_estimator(x, 50).exponent_estimate, rel=1e-10
        )


class TestLogLogSlope:
    def test_analytic_table(self):
        ps = ParetoStationary(2.0)
        w = np.linspace(5.0, 50.0, 200)
        assert loglog_ccdf_slope((w, ps.sf(w)), (5.0, 50.0)) == pytest.approx(-2.0, abs=0.1)

    def test_exact_power_law(self):
        w = np.linspace(1.0, 100.0, 50)
        assert loglog_ccdf_slope((w, 3.0 * w**-1.7), (1.0, 100.0)) == pytest.approx(-1.7, abs=1e-6)

    def test_exponential_tail_has_poor_fit(self):
        rng = np.random.default_rng(7)
        expo = loglog_ccdf_fit(rng.exponential(1.0, 100_000), (1.0, 8.0))
        pareto = loglog_ccdf_fit(rng.random(100_000) ** -0.5, (1.0, 8.0))
        assert expo.r_squared < 0.95
        assert pareto.r_squared > 0.999
        assert pareto.slope == pytest.approx(-2.0, abs=0.05)

    def test_histogram_input(self):
        ps = ParetoStationary(2.0)
        edges = uniform_edges(100, 10.0)
        h = Histogram(edges, analytic_masses(edges, ps.cdf), 0)
        assert loglog_ccdf_fit(h, (2.5, 10.0)).n_points == 76

    def test_insufficient_points(self):
        with pytest.raises(ValueError, match="tail points"):
            loglog_ccdf_slope(np.array([1.0, 2.0, 3.0]), (1.0, 10.0))


class TestL1:
    def test_analytic_binning_is_zero(self):
        ps = ParetoStationary(2.0)
        edges = uniform_edges(100, 10.0)
        h = Histogram(edges, analytic_masses(edges, ps.cdf), 0)
        assert l1_distance(h, ps) == pytest.approx(0.0, abs=1e-14)

    def test_exact_samples(self):
        ps = ParetoStationary(2.0)
        x = ps.sample(np.random.default_rng(8), 100_000)
        h = histogram(x, uniform_edges(100, 10.0, overflow=False), overflow=True)
        assert l1_distance(h, ps) <= 0.03

    def test_disjoint_support(self):
        ps = ParetoStationary(2.0)
        h = Histogram(np.array([0.0, 1e-3, np.inf]), np.array([1.0, 0.0]), 1)
        assert l1_distance(h, ps) == pytest.approx(2.0, abs=1e-12)

    def test_mass_outside_support_counts(self):
        ps = ParetoStationary(2.0)
        edges = np.linspace(0.0, 10.0, 101)
        masses = analytic_masses(edges, ps.cdf)
        h = Histogram(edges, masses / masses.sum(), 0)
        assert 0.0 < l1_distance(h, ps) <= 2.0


@given(st.lists(st.floats(0.0, 1.0), min_size=5, max_size=5), st.floats(1.1, 6.0))
def test_l1_distance_bounded(weights, mu):
    from kinwealth.fokker_planck import ParetoStationary

    edges = np.array([0.0, 0.5, 1.0, 2.0, 5.0, np.inf])
    total = sum(weights)
    masses = np.array(weights) / total if total > 0 else np.full(5, 0.2)
    ps = ParetoStationary(mu)
    d = l1_distance(Histogram(edges, masses, 1), ps)
    assert 0.0 <= d <= 2.0 + 1e-12
    exact = Histogram(edges, analytic_masses(edges, ps.cdf), 1)
    assert l1_distance(exact, ps) == pytest.approx(0.0, abs=1e-15)
