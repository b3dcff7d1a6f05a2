"""Tests for reproducible sampling, scenario files and the Monte Carlo
driver."""

import numpy as np
import pytest

from symmix import (
    MixtureParams,
    Scenario,
    load_scenario,
    run_monte_carlo,
    sample_gaussian_mixture,
    sample_trimodal,
    save_scenario,
)
from symmix.operators import apply_mixing
from symmix.simulate import (
    _TRIMODAL_CENTERS,
    _TRIMODAL_WEIGHTS,
    gaussian_mixture_cdf,
    gaussian_mixture_pdf,
)

THETA0 = MixtureParams(0.25, -1.0, 2.0)


class TestGaussianMixtureSampler:
    def test_returns_sorted_sample(self):
        s = sample_gaussian_mixture(THETA0, 1.0, 500, seed=1)
        assert s.n == 500
        assert np.all(np.diff(s.values) >= 0)

    def test_degenerate_weight_draws_second_component(self):
        theta = MixtureParams(0.0, -1.0, 2.0)
        n = 4000
        s = sample_gaussian_mixture(theta, 1.0, n, seed=2)
        assert abs(s.values.mean() - 2.0) <= 4.0 / np.sqrt(n)

    def test_mixture_mean_matches_first_moment(self):
        n = 100_000
        s = sample_gaussian_mixture(THETA0, 1.0, n, seed=3)
        sd = np.sqrt(0.25 * 0.75 * 9.0 + 1.0)
        assert abs(s.values.mean() - 1.25) <= 4.0 * sd / np.sqrt(n)

    def test_scale_controls_dispersion(self):
        n = 50_000
        s = sample_gaussian_mixture(THETA0, 2.0, n, seed=4)
        want_var = 0.25 * 0.75 * 9.0 + 4.0
        assert s.values.var() == pytest.approx(want_var, rel=0.05)

    def test_seed_determinism_is_bitwise(self):
        a = sample_gaussian_mixture(THETA0, 1.0, 256, seed=42)
        b = sample_gaussian_mixture(THETA0, 1.0, 256, seed=42)
        assert np.array_equal(a.values, b.values)

    def test_streams_are_distinct(self):
        a = sample_gaussian_mixture(THETA0, 1.0, 64, seed=42, stream=0)
        b = sample_gaussian_mixture(THETA0, 1.0, 64, seed=42, stream=1)
        assert not np.array_equal(a.values, b.values)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            sample_gaussian_mixture(THETA0, 1.0, 1, seed=0)
        with pytest.raises(ValueError):
            sample_gaussian_mixture(THETA0, 0.0, 10, seed=0)


class TestTrimodalSampler:
    def test_component_table_is_a_distribution(self):
        assert _TRIMODAL_WEIGHTS.sum() == 1.0
        assert len(_TRIMODAL_WEIGHTS) == len(_TRIMODAL_CENTERS) == 6

    def test_mean_matches_first_moment(self):
        n = 100_000
        s = sample_trimodal(n, seed=5)
        var = float(_TRIMODAL_WEIGHTS @ (_TRIMODAL_CENTERS**2 + 1.0)) - 9.0
        assert abs(s.values.mean() - 3.0) <= 4.0 * np.sqrt(var / n)

    def test_seed_determinism_is_bitwise(self):
        a = sample_trimodal(128, seed=6)
        b = sample_trimodal(128, seed=6)
        assert np.array_equal(a.values, b.values)

    def test_returns_sorted_sample(self):
        s = sample_trimodal(300, seed=7)
        assert np.all(np.diff(s.values) >= 0)


class TestExactMixtureCurves:
    def test_cdf_agrees_with_mixing_operator(self):
        from scipy.special import ndtr

        xs = np.linspace(-5, 6, 23)
        got = gaussian_mixture_cdf(THETA0, 1.0, xs)
        want = apply_mixing(THETA0, lambda t: ndtr(t), xs)
        np.testing.assert_allclose(got, want, rtol=1e-14)

    def test_pdf_is_cdf_derivative(self):
        xs = np.linspace(-4, 5, 19)
        h = 1e-5
        num = (
            gaussian_mixture_cdf(THETA0, 1.0, xs + h)
            - gaussian_mixture_cdf(THETA0, 1.0, xs - h)
        ) / (2 * h)
        np.testing.assert_allclose(
            gaussian_mixture_pdf(THETA0, 1.0, xs), num, rtol=1e-7, atol=1e-10
        )

    def test_cdf_limits(self):
        assert gaussian_mixture_cdf(THETA0, 1.0, -40.0) == pytest.approx(0.0, abs=1e-15)
        assert gaussian_mixture_cdf(THETA0, 1.0, 40.0) == pytest.approx(1.0, abs=1e-15)


class TestScenario:
    def test_rejects_bad_fields(self):
        with pytest.raises(ValueError):
            Scenario(THETA0, 1.0, 100, 10, "P3", seed=0)
        with pytest.raises(ValueError):
            Scenario(THETA0, 1.0, 1, 10, "P1", seed=0)
        with pytest.raises(ValueError):
            Scenario(THETA0, 1.0, 100, 0, "P1", seed=0)
        with pytest.raises(ValueError):
            Scenario(THETA0, 0.0, 100, 10, "P1", seed=0)
        with pytest.raises(ValueError):
            Scenario(THETA0, 1.0, 100, 10, "P2", seed=0, bandwidth=-1.0)

    def test_bandwidth_rule_defaults_to_quarter_power(self):
        sc = Scenario(THETA0, 1.0, 256, 10, "P2", seed=0)
        assert sc.bandwidth_value().value == pytest.approx(0.25)
        fixed = Scenario(THETA0, 1.0, 256, 10, "P2", seed=0, bandwidth=3.84)
        assert fixed.bandwidth_value().value == 3.84

    def test_json_round_trip(self, tmp_path):
        sc = Scenario(THETA0, 1.5, 220, 7, "P2", seed=99, bandwidth=None)
        path = tmp_path / "cell.json"
        save_scenario(sc, path)
        assert load_scenario(path) == sc
        sc2 = Scenario(THETA0, 1.0, 70, 1, "EM", seed=5, bandwidth=3.84)
        save_scenario(sc2, path)
        assert load_scenario(path) == sc2

    def test_load_reports_missing_keys(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"lambda": 0.25, "mu1": -1.0}\n', encoding="utf-8")
        with pytest.raises(ValueError, match="missing keys"):
            load_scenario(path)

    def test_load_rejects_unknown_problem(self, tmp_path):
        sc = Scenario(THETA0, 1.0, 100, 5, "P1", seed=0)
        path = tmp_path / "cell.json"
        save_scenario(sc, path)
        txt = path.read_text(encoding="utf-8").replace('"P1"', '"XX"')
        path.write_text(txt, encoding="utf-8")
        with pytest.raises(ValueError):
            load_scenario(path)


class TestRunMonteCarlo:
    def test_known_locations_cell_is_unbiased(self):
        sc = Scenario(MixtureParams(0.35, -1.0, 2.0), 1.0, 100, 30, "P1", seed=77)
        rep = run_monte_carlo(sc)
        assert rep.failures == 0
        assert rep.mean.shape == (1,)
        assert rep.mean[0] == pytest.approx(0.35, abs=0.05)
        assert 0.0 < rep.std[0] < 0.12

    def test_bitwise_determinism(self):
        sc = Scenario(THETA0, 1.0, 60, 8, "P1", seed=13)
        a = run_monte_carlo(sc)
        b = run_monte_carlo(sc)
        assert np.array_equal(a.mean, b.mean)
        assert np.array_equal(a.std, b.std)

    def test_worker_count_does_not_change_results(self):
        sc = Scenario(THETA0, 1.0, 60, 8, "P1", seed=13)
        serial = run_monte_carlo(sc, max_workers=None)
        parallel = run_monte_carlo(sc, max_workers=4)
        assert np.array_equal(serial.mean, parallel.mean)
        assert np.array_equal(serial.std, parallel.std)

    def test_single_replication_flags_undefined_std(self):
        sc = Scenario(THETA0, 1.0, 80, 1, "P1", seed=3)
        rep = run_monte_carlo(sc)
        assert rep.std_undefined
        assert np.all(rep.std == 0.0)
        assert rep.failures == 0

    def test_smoothed_problem_reports_full_triple(self):
        sc = Scenario(THETA0, 1.0, 60, 2, "P2", seed=8)
        rep = run_monte_carlo(sc)
        assert rep.failures == 0
        assert rep.mean.shape == (3,)
        assert np.all(np.isfinite(rep.mean))

    def test_likelihood_problem_reports_full_triple(self):
        sc = Scenario(THETA0, 1.0, 200, 5, "EM", seed=8)
        rep = run_monte_carlo(sc)
        assert rep.failures == 0
        assert rep.mean.shape == (3,)
        assert rep.mean[0] == pytest.approx(0.25, abs=0.15)

    def test_failed_replications_are_counted(self, monkeypatch):
        import symmix.simulate as sim

        def boom(*args, **kwargs):
            raise RuntimeError("synthetic failure")

        monkeypatch.setattr(sim, "fit_lambda", boom)
        sc = Scenario(THETA0, 1.0, 50, 3, "P1", seed=1)
        rep = run_monte_carlo(sc)
        assert rep.failures == 3
        assert rep.std_undefined
        assert np.all(np.isnan(rep.mean))
