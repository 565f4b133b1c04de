"""One-factor generators, trade-netting simulation, regression, and sweeps."""

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from turnover_spectra import (
    COMPLETE_CASES,
    SimConfig,
    SweepOptions,
    TimeSeriesPanel,
    UndefinedRegressorError,
    gen_one_factor_panel,
    gen_trade_matrix,
    no_intercept_regression,
    one_factor_correlation,
    one_factor_generator,
    sample_moments,
    simulate_crossing,
    simulate_crossing_paths,
    sweep_rho_star,
    sweep_to_csv,
)


def off_diagonal(matrix: np.ndarray) -> np.ndarray:
    return matrix[~np.eye(matrix.shape[0], dtype=bool)]


class TestOneFactorPanel:
    def test_independent_series_have_small_sample_correlations(self):
        config = SimConfig(20, 10_000, target_correlation=0.0, master_seed=7)
        _, corr = sample_moments(gen_one_factor_panel(config), COMPLETE_CASES)
        # 4-sigma bound for M = 10_000; holds for this seed
        assert np.abs(off_diagonal(corr.entries)).max() <= 4.0 / math.sqrt(10_000)

    def test_full_correlation_makes_identical_series(self):
        config = SimConfig(5, 50, target_correlation=1.0, master_seed=3)
        panel = gen_one_factor_panel(config)
        np.testing.assert_allclose(
            panel.values, np.broadcast_to(panel.values[0], panel.values.shape), atol=0
        )
        _, corr = sample_moments(panel, COMPLETE_CASES)
        np.testing.assert_allclose(corr.entries, 1.0, atol=1e-12)

    def test_half_correlation_sample_mean(self):
        config = SimConfig(100, 5000, target_correlation=0.5, master_seed=20260810)
        _, corr = sample_moments(gen_one_factor_panel(config), COMPLETE_CASES)
        mean = float(off_diagonal(corr.entries).mean())
        assert abs(mean - 0.5) <= 0.03
        # seeded value frozen for regression protection
        assert mean == pytest.approx(0.500373226438785, abs=1e-12)

    def test_deterministic_under_seed(self):
        config = SimConfig(8, 64, target_correlation=0.3, master_seed=99)
        first = gen_one_factor_panel(config)
        second = gen_one_factor_panel(config)
        np.testing.assert_array_equal(first.values, second.values)
        other = gen_one_factor_panel(SimConfig(8, 64, target_correlation=0.3, master_seed=100))
        assert not np.array_equal(first.values, other.values)

    def test_loading_vector_supported(self):
        loadings = np.array([0.2, 0.5, 0.9, 0.0])
        config = SimConfig(4, 30_000, target_correlation=tuple(loadings), master_seed=5)
        _, corr = sample_moments(gen_one_factor_panel(config), COMPLETE_CASES)
        expected = one_factor_correlation(loadings)
        assert np.abs(corr.entries - expected).max() <= 0.05

    def test_invalid_correlation_rejected(self):
        with pytest.raises(ValueError):
            SimConfig(4, 10, target_correlation=1.5)
        with pytest.raises(ValueError):
            SimConfig(4, 10, target_correlation=-0.1)

    def test_population_matrix_shape(self):
        corr = one_factor_correlation([0.3, 0.6, 0.9])
        np.testing.assert_array_equal(np.diag(corr), 1.0)
        assert corr[0, 1] == pytest.approx(0.18)
        assert np.linalg.eigvalsh(corr).min() > 0


class TestSimulateCrossing:
    def test_perfect_offset(self):
        result = simulate_crossing([[+1.0, -0.5], [-1.0, +0.5]])
        assert result.gross_traded == 3.0
        assert result.netted_traded == 0.0
        assert result.crossing_ratio == 0.0

    def test_identical_trades_never_cross(self):
        result = simulate_crossing([[1.0, 1.0], [1.0, 1.0]])
        assert result.gross_traded == 4.0
        assert result.netted_traded == 4.0
        assert result.crossing_ratio == 1.0

    def test_partial_netting(self):
        result = simulate_crossing([[2.0, 0.0], [-1.0, 1.0]])
        assert result.gross_traded == 4.0
        assert result.netted_traded == 2.0
        assert result.crossing_ratio == 0.5

    def test_zero_gross_flagged(self):
        result = simulate_crossing(np.zeros((3, 2)))
        assert result.crossing_ratio == 1.0
        assert result.zero_gross_paths == 1

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            simulate_crossing([[np.nan, 1.0], [0.0, 2.0]])

    @settings(max_examples=80, deadline=None)
    @given(
        trades=arrays(
            float,
            st.tuples(st.integers(1, 6), st.integers(1, 5)),
            elements=st.floats(-5, 5, allow_nan=False),
        )
    )
    def test_netting_never_exceeds_gross(self, trades):
        result = simulate_crossing(trades)
        assert result.netted_traded <= result.gross_traded + 1e-12
        single_signed = all(
            (trades[:, k] >= 0).all() or (trades[:, k] <= 0).all()
            for k in range(trades.shape[1])
        )
        if single_signed:
            assert result.netted_traded == pytest.approx(result.gross_traded, abs=1e-12)
        else:
            # offsetting flow per column; only assert a strict drop when the
            # cancelled mass is large enough to register in floating point
            positives = np.where(trades > 0, trades, 0.0).sum(axis=0)
            negatives = np.where(trades < 0, -trades, 0.0).sum(axis=0)
            cancelled = np.minimum(positives, negatives).sum()
            if cancelled > 1e-9 * max(result.gross_traded, 1.0):
                assert result.netted_traded < result.gross_traded


class TestCrossingPaths:
    def test_bitwise_deterministic(self):
        config = SimConfig(10, 2, 3, 0.4, master_seed=11, n_paths=32)
        first = simulate_crossing_paths(config)
        second = simulate_crossing_paths(config)
        assert first == second

    def test_more_correlation_less_crossing(self):
        low = simulate_crossing_paths(SimConfig(40, 2, 6, 0.2, 123, 256))
        high = simulate_crossing_paths(SimConfig(40, 2, 6, 0.8, 123, 256))
        assert high.mean > low.mean

    def test_nonvanishing_limit(self):
        rho = 0.25
        means = []
        for n in (10, 100, 1000):
            result = simulate_crossing_paths(SimConfig(n, 2, 4, rho, 20260810, 2000))
            means.append(result.mean)
        assert means[0] > means[1] > means[2]
        assert means[2] > 0.1 * math.sqrt(rho)

    def test_ratio_fields_consistent(self):
        result = simulate_crossing_paths(SimConfig(6, 2, 2, 0.5, 4, 17))
        assert len(result.per_path_ratios) == 17
        assert 0.0 <= result.crossing_ratio <= 1.0
        assert result.mean == pytest.approx(np.mean(result.per_path_ratios))
        assert result.std_error > 0.0

    def test_trade_matrix_shape(self):
        config = SimConfig(7, 2, 5, 0.3, master_seed=1)
        trades = gen_trade_matrix(config, np.random.default_rng(0))
        assert trades.shape == (7, 5)
        assert np.isfinite(trades).all()


class TestNoInterceptRegression:
    def test_exact_fit_reports_infinite_f(self):
        slope, f_stat = no_intercept_regression([1.0, 2.0, 3.0], [2.0, 4.0, 6.0])
        assert slope == 2.0
        assert math.isinf(f_stat)

    def test_near_fit_matches_least_squares_oracle(self):
        x = np.array([1.0, 2.0, 3.0])
        y = np.array([2.0, 4.0, 6.1])
        slope, f_stat = no_intercept_regression(x, y)
        oracle_slope = float(np.linalg.lstsq(x[:, None], y, rcond=None)[0][0])
        assert slope == pytest.approx(oracle_slope, rel=1e-12)
        fitted = oracle_slope * x
        oracle_f = float((fitted @ fitted) / (((y - fitted) ** 2).sum() / 2))
        assert f_stat == pytest.approx(oracle_f, rel=1e-9)
        assert f_stat == pytest.approx(3.2e4, rel=0.02)

    def test_orthogonal_target_gives_zero(self):
        slope, f_stat = no_intercept_regression([1.0, -1.0], [1.0, 1.0])
        assert slope == 0.0
        assert f_stat == 0.0

    def test_zero_regressor_rejected(self):
        with pytest.raises(UndefinedRegressorError):
            no_intercept_regression([0.0, 0.0], [1.0, 2.0])

    def test_single_point_rejected(self):
        with pytest.raises(ValueError):
            no_intercept_regression([1.0], [2.0])


class TestSweep:
    def test_small_sweep_smoke(self):
        result = sweep_rho_star(
            [10, 20], one_factor_generator(0.3, 400), SweepOptions(), seed=5
        )
        assert result.grid == (10, 20)
        assert result.errors == ()
        assert all(math.isfinite(v) for v in result.rho_stars)
        assert all(abs(r) < 1.0 for r in result.residuals)
        assert result.f_statistic is None or result.f_statistic >= 0

    def test_deterministic(self):
        gen = one_factor_generator(0.3, 300)
        first = sweep_rho_star([10, 20, 40], gen, SweepOptions(), seed=9)
        second = sweep_rho_star([10, 20, 40], gen, SweepOptions(), seed=9)
        assert first == second

    def test_single_grid_point_slope_without_f(self):
        result = sweep_rho_star([16], one_factor_generator(0.4, 300), SweepOptions(), seed=2)
        assert result.f_statistic is None
        assert result.slope_no_intercept == pytest.approx(result.rho_stars[0])

    def test_generator_failure_yields_partial_result(self):
        def flaky(n_alphas, seed):
            if n_alphas == 20:
                raise RuntimeError("synthetic failure")
            return one_factor_generator(0.3, 300)(n_alphas, seed)

        result = sweep_rho_star([10, 20, 40], flaky, SweepOptions(), seed=3)
        assert len(result.errors) == 1
        assert "N=20" in result.errors[0]
        assert math.isnan(result.rho_stars[1])
        assert math.isfinite(result.slope_no_intercept)

    def test_grid_validation(self):
        gen = one_factor_generator(0.2, 100)
        with pytest.raises(ValueError):
            sweep_rho_star([], gen)
        with pytest.raises(ValueError):
            sweep_rho_star([1, 10], gen)
        with pytest.raises(ValueError):
            sweep_rho_star([20, 10], gen)

    def test_csv_layout(self):
        result = sweep_rho_star(
            [10, 20], one_factor_generator(0.3, 200), SweepOptions(), seed=1
        )
        buffer = io.StringIO()
        sweep_to_csv(result, buffer)
        lines = buffer.getvalue().strip().splitlines()
        assert lines[0] == "N,rho_star,rho_star_times_n,slope,F"
        assert len(lines) == 3
        assert lines[1].startswith("10,")

    def test_csv_inf_sentinel(self):
        result = sweep_rho_star(
            [10, 20], one_factor_generator(0.3, 200), SweepOptions(), seed=1
        )
        exact = type(result)(
            grid=result.grid,
            rho_stars=result.rho_stars,
            rho_star_times_n=result.rho_star_times_n,
            slope_no_intercept=result.slope_no_intercept,
            f_statistic=math.inf,
            residuals=result.residuals,
        )
        buffer = io.StringIO()
        sweep_to_csv(exact, buffer)
        assert buffer.getvalue().strip().splitlines()[1].endswith(",inf")


class TestSimConfigValidation:
    def test_bounds(self):
        with pytest.raises(ValueError):
            SimConfig(1, 10)
        with pytest.raises(ValueError):
            SimConfig(4, 1)
        with pytest.raises(ValueError):
            SimConfig(4, 10, n_instruments=0)
        with pytest.raises(ValueError):
            SimConfig(4, 10, n_paths=0)
        with pytest.raises(ValueError):
            SimConfig(4, 10, master_seed=-1)

    def test_loading_vector_length_checked(self):
        with pytest.raises(ValueError):
            SimConfig(4, 10, target_correlation=(0.5, 0.5))
