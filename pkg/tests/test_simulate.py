import math

import numpy as np
import pytest

from planktonfish import (DomainError, History, check_positivity_boundedness,
                          default_step, derive_params, integrate,
                          plankton_only_point)


@pytest.fixture
def logistic_params():
    return derive_params(r=1, K=1, c1=0, c2=0, d1=1, d2=1, b1=0, b2=0,
                         tau1=0.1, tau2=0.1)


def _logistic(x0, r, K, t):
    return x0 * K * math.exp(r * t) / (K + x0 * (math.exp(r * t) - 1.0))


class TestHistory:
    def test_constant_preset(self, case2_params):
        hist = History.constant(case2_params, (0.5, 0.2, 0.1))
        assert hist(0.0) == (0.5, 0.2, 0.1)
        assert hist(-case2_params.tau_max) == (0.5, 0.2, 0.1)

    def test_equilibrium_presets_anchor_at_equilibrium(self, case2_params):
        x0, y0 = plankton_only_point(case2_params)
        hist = History.equilibrium_plus_constant(case2_params, (0.01, 0.0, 0.0))
        assert hist(0.0) == pytest.approx((x0 + 0.01, y0, 0.0), rel=1e-14)
        sine = History.equilibrium_plus_sine(case2_params, (0.0, 0.1, 0.0), 5.0)
        assert sine(0.0) == pytest.approx((x0, y0, 0.0), rel=1e-14)

    def test_rejects_negative_component(self, case2_params):
        with pytest.raises(DomainError, match="non-negative"):
            History.constant(case2_params, (0.5, -0.1, 0.0))

    def test_rejects_zero_initial_phytoplankton(self, case2_params):
        with pytest.raises(DomainError, match="phi"):
            History.constant(case2_params, (0.0, 0.1, 0.0))

    def test_domain_check(self, case2_params):
        hist = History.constant(case2_params, (0.5, 0.2, 0.1))
        with pytest.raises(DomainError):
            hist.component(0, -10.0)
        with pytest.raises(DomainError):
            hist.component(0, 0.5)

    def test_tabulated_roundtrip(self, case2_params):
        thetas = np.linspace(-case2_params.tau_max, 0.0, 30)
        values = np.column_stack([0.5 + 0.1 * np.cos(thetas),
                                  0.3 + 0.05 * np.sin(thetas) ** 2,
                                  0.1 + 0.0 * thetas])
        hist = History.tabulated(case2_params, thetas, values)
        for k in (0, 10, 29):
            assert hist(float(thetas[k])) == pytest.approx(
                tuple(values[k]), abs=1e-12)

    def test_tabulated_must_cover_window(self, case2_params):
        thetas = np.linspace(-0.01, 0.0, 5)
        values = np.full((5, 3), 0.5)
        with pytest.raises(DomainError, match="cover"):
            History.tabulated(case2_params, thetas, values)

    def test_analytic_maximum_matches_grid(self, case2_params):
        hist = History.equilibrium_plus_sine(case2_params, (0.0, 0.07, 0.0),
                                             37.0, phase=0.4)
        window = (-case2_params.tau1, 0.0)
        _, y0 = plankton_only_point(case2_params)
        exact = hist.analytic_max_abs_deviation(1, window, y0)
        grid = hist.max_abs_deviation(1, window, y0)
        assert exact == pytest.approx(0.07, rel=1e-9)
        assert grid <= exact + 1e-12
        assert grid >= exact - 1e-4

    def test_tabulated_has_no_analytic_maximum(self, case2_params):
        thetas = np.linspace(-case2_params.tau_max, 0.0, 10)
        hist = History.tabulated(case2_params, thetas, np.full((10, 3), 0.5))
        assert hist.analytic_max_abs_deviation(0, (-0.1, 0.0), 0.0) is None


class TestIntegrate:
    def test_equilibrium_is_stationary(self, case2_params):
        hist = History.equilibrium_plus_constant(case2_params, (0.0, 0.0, 0.0))
        traj = integrate(case2_params, hist, 5.0)
        x0, y0 = plankton_only_point(case2_params)
        drift = np.abs(traj.states - np.array([x0, y0, 0.0])).max()
        assert drift <= 1e-12

    def test_logistic_closed_form(self, logistic_params):
        hist = History.constant(logistic_params, (0.5, 0.0, 0.0))
        traj = integrate(logistic_params, hist, 10.0)
        for t in (1.0, 5.0, 10.0):
            assert abs(traj.sample(t)[0] - _logistic(0.5, 1, 1, t)) <= 1e-8

    def test_linear_decay_closed_form(self, logistic_params):
        hist = History.constant(logistic_params, (0.5, 0.4, 0.3))
        traj = integrate(logistic_params, hist, 5.0)
        _, y, z = traj.sample(5.0)
        assert y == pytest.approx(0.4 * math.exp(-5.0), rel=1e-9)
        assert z == pytest.approx(0.3 * math.exp(-5.0), rel=1e-9)

    def test_observed_order_at_least_three_and_a_half(self, case2_params):
        p = case2_params
        hist = History.equilibrium_plus_sine(p, (0.05, 0.03, 0.0), 3.0)
        t_end = 5 * p.tau_min
        ref = integrate(p, hist, t_end, step=p.tau_min / 160)
        errs = []
        for div in (20, 40):
            traj = integrate(p, hist, t_end, step=p.tau_min / div)
            errs.append(max(abs(traj.sample(t_end)[i] - ref.sample(t_end)[i])
                            for i in range(3)))
        order = math.log2(errs[0] / errs[1])
        assert order >= 3.5

    def test_step_cap_enforced(self, case2_params):
        hist = History.equilibrium_plus_constant(case2_params, (0.01, 0.0, 0.0))
        with pytest.raises(DomainError, match="delay"):
            integrate(case2_params, hist, 1.0, step=case2_params.tau_min / 5)

    def test_step_cap_uses_smallest_positive_delay(self):
        p = derive_params(r=1, K=1, c1=1, c2=1, d1=1.5, d2=1, b1=3, b2=1,
                          tau1=0.0, tau2=0.1)
        hist = History.equilibrium_plus_constant(p, (0.01, 0.0, 0.0))
        with pytest.raises(DomainError, match="delay"):
            integrate(p, hist, 1.0, step=0.02)
        integrate(p, hist, 1.0, step=0.1 / 20)

    def test_zero_delays_run_without_cap(self):
        p = derive_params(r=1, K=1, c1=0, c2=0, d1=1, d2=1, b1=0, b2=0,
                          tau1=0.0, tau2=0.0)
        hist = History.constant(p, (0.5, 0.0, 0.0))
        traj = integrate(p, hist, 2.0)
        assert traj.sample(2.0)[0] == pytest.approx(_logistic(0.5, 1, 1, 2.0),
                                                    abs=1e-8)

    def test_invalid_horizon_and_step(self, case2_params):
        hist = History.equilibrium_plus_constant(case2_params, (0.01, 0.0, 0.0))
        with pytest.raises(DomainError):
            integrate(case2_params, hist, 0.0)
        with pytest.raises(DomainError):
            integrate(case2_params, hist, 1.0, step=-0.001)

    def test_deterministic_rerun(self, case2_params):
        hist = History.equilibrium_plus_sine(case2_params, (0.02, 0.01, 0.0),
                                             2.0)
        a = integrate(case2_params, hist, 3.0)
        b = integrate(case2_params, hist, 3.0)
        assert np.array_equal(a.states, b.states)
        assert np.array_equal(a.derivs, b.derivs)


class TestDenseOutput:
    def test_nodes_are_exact(self, case2_params):
        hist = History.equilibrium_plus_sine(case2_params, (0.02, 0.01, 0.0),
                                             2.0)
        traj = integrate(case2_params, hist, 2.0)
        for k in (0, 7, traj.states.shape[0] - 1):
            assert traj.sample(float(traj.times[k])) == tuple(traj.states[k])

    def test_negative_times_delegate_to_history(self, case2_params):
        hist = History.equilibrium_plus_constant(case2_params, (0.01, 0.0, 0.0))
        traj = integrate(case2_params, hist, 1.0)
        assert traj.sample(-0.05) == hist(-0.05)

    def test_beyond_horizon_rejected(self, case2_params):
        hist = History.equilibrium_plus_constant(case2_params, (0.01, 0.0, 0.0))
        traj = integrate(case2_params, hist, 1.0)
        with pytest.raises(DomainError):
            traj.sample(1.5)

    def test_vectorized_sampling_matches_scalar(self, case2_params):
        hist = History.equilibrium_plus_sine(case2_params, (0.02, 0.01, 0.0),
                                             2.0)
        traj = integrate(case2_params, hist, 2.0)
        ts = np.array([-0.05, 0.0, 0.123, 0.5, 1.999, 2.0])
        many = traj.sample_many(ts)
        for i, t in enumerate(ts):
            assert np.array_equal(many[i], np.array(traj.sample(float(t))))

    def test_interpolation_error_is_high_order(self, logistic_params):
        hist = History.constant(logistic_params, (0.2, 0.0, 0.0))
        traj = integrate(logistic_params, hist, 2.0)
        h = traj.step
        t = 100.5 * h  # midpoint between nodes
        assert abs(traj.sample(t)[0] - _logistic(0.2, 1, 1, t)) <= 1e-10

    def test_csv_roundtrip(self, case2_params, tmp_path):
        hist = History.equilibrium_plus_constant(case2_params, (0.01, 0.0, 0.0))
        traj = integrate(case2_params, hist, 1.0)
        path = tmp_path / "traj.csv"
        traj.to_csv(path)
        rows = np.loadtxt(path, delimiter=",", skiprows=1)
        assert rows.shape == (traj.states.shape[0], 4)
        assert np.array_equal(rows[:, 1:], traj.states)
        header = path.read_text().splitlines()[0]
        assert header == "t,x,y,z"


class TestPositivity:
    def test_default_step_divides_delay(self, case2_params):
        h = default_step(case2_params)
        n = case2_params.tau_min / h
        assert abs(n - round(n)) <= 1e-9
        assert h <= case2_params.tau_min / 20 * (1 + 1e-12)

    def test_equilibrium_scenario(self, case2_params):
        hist = History.equilibrium_plus_constant(case2_params, (0.0, 0.0, 0.0))
        traj = integrate(case2_params, hist, 5.0)
        report = check_positivity_boundedness(traj, case2_params)
        assert report.passed
        assert report.observed_min >= 0.0

    def test_large_history_stays_nonnegative_and_bounded(self, case2_params):
        hist = History.constant(case2_params, (1.8, 1.5, 1.0))
        traj = integrate(case2_params, hist, 20.0)
        report = check_positivity_boundedness(traj, case2_params)
        assert report.passed
        assert report.observed_min >= -1e-9
        assert traj.states[:, 0].max() <= report.x_bound + 1e-6
        assert report.x_bound == pytest.approx(1.8)
