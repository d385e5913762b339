import math

import pytest

from aoicut.analysis import epoch_stats, solve_lambda, zero_wait_optimal
from aoicut.cutoff import (CRITICAL_SHIFT, c_sweep, compare_policies, crossover_scan, default_gamma_range,
                           optimize_gamma, policy_names, zero_wait_boundary)
from aoicut.dist import Exponential, ShiftedExponential
from aoicut.exceptions import ConfigError, DomainError


class TestZeroWaitBoundary:

    @pytest.mark.parametrize("c", [0.5, 1.0])
    def test_flips_at_boundary(self, c):
        dist = ShiftedExponential(1.0, c)
        gamma_bar = zero_wait_boundary(c)
        assert gamma_bar > c
        assert zero_wait_optimal(epoch_stats(dist, gamma_bar - 1e-4), c)
        assert not zero_wait_optimal(epoch_stats(dist, gamma_bar + 1e-4), c)

    def test_acceptance_grid(self):
        for c in [0.5, 1.0]:
            dist = ShiftedExponential(1.0, c)
            gamma_bar = zero_wait_boundary(c)
            below = [c + (gamma_bar - 1e-4 - c) * i / 10 for i in range(1, 11)]
            above = [gamma_bar + 1e-4 + i for i in range(10)]
            assert all(zero_wait_optimal(epoch_stats(dist, g), c) for g in below)
            assert not any(zero_wait_optimal(epoch_stats(dist, g), c) for g in above)

    def test_grows_with_shift(self):
        values = [zero_wait_boundary(c) - c for c in [0.2, 0.6, 1.0, 1.4]]
        assert values == sorted(values)

    def test_time_scaling(self):
        assert zero_wait_boundary(0.25, rate=2.0) == pytest.approx(zero_wait_boundary(0.5) / 2.0, rel=1e-12)

    @pytest.mark.parametrize("c, rate", [(0.0, 1.0), (CRITICAL_SHIFT, 1.0), (2.0, 1.0), (0.8, 2.0), (0.5, 0.0)])
    def test_outside_domain(self, c, rate):
        with pytest.raises(DomainError):
            zero_wait_boundary(c, rate=rate)


class TestOptimizeGamma:

    def test_exponential_minimizer_on_lower_edge(self, exp1):
        sweep = optimize_gamma(exp1, grid_points=40)
        assert sweep.boundary == "lower"
        assert sweep.gamma_star == pytest.approx(1e-4)
        assert 1.0 < sweep.lambda_double_star <= 1.0001

    def test_best_is_grid_minimum(self, sexp_half):
        sweep = optimize_gamma(sexp_half, grid_points=60)
        values = [p.lambda_star for p in sweep.grid if not p.failed]
        assert sweep.lambda_double_star <= min(values)
        assert len(sweep.grid) == 60
        assert [p.gamma for p in sweep.grid] == sorted(p.gamma for p in sweep.grid)

    def test_workers_keep_order(self, sexp_half):
        serial = optimize_gamma(sexp_half, grid_points=30)
        threaded = optimize_gamma(sexp_half, grid_points=30, workers=4)
        assert serial == threaded

    def test_refinement_width(self, sexp_half):
        coarse = optimize_gamma(sexp_half, grid_points=60, refine_width=1e-5)
        fine = optimize_gamma(sexp_half, grid_points=60, refine_width=1e-6)
        assert fine.lambda_double_star == pytest.approx(coarse.lambda_double_star, rel=1e-5)

    def test_zero_wait_sweep_is_worse(self, sexp_half):
        waiting = optimize_gamma(sexp_half, grid_points=40)
        zero_wait = optimize_gamma(sexp_half, grid_points=40, waiting=False)
        for a, b in zip(waiting.grid, zero_wait.grid):
            assert a.lambda_star <= b.lambda_star + 1e-9

    @pytest.mark.parametrize("gamma_min, gamma_max", [(0.5, 2.0), (2.0, 1.0), (0.6, math.inf)])
    def test_invalid_range(self, sexp_half, gamma_min, gamma_max):
        with pytest.raises(ConfigError):
            optimize_gamma(sexp_half, gamma_min, gamma_max)

    def test_default_range(self, sexp_half):
        assert default_gamma_range(sexp_half) == pytest.approx((0.5001, 20.5))


class TestComparePolicies:

    def test_exponential(self, exp1):
        table = compare_policies(exp1, grid_points=40)
        assert [name for name, _ in table] == policy_names
        values = [value for _, value in table]
        assert values[0] == pytest.approx(2.0)
        assert values[3] == min(values)
        assert values[3] <= values[1]

    def test_optimal_is_row_minimum(self):
        values = [value for _, value in compare_policies(ShiftedExponential(1.0, 1.0), grid_points=40)]
        assert values[3] == min(values)
        assert values[2] <= values[0] + 1e-9
        assert values[1] <= values[0] + 1e-9

    def test_optimal_sweep_not_above_baselines(self, sexp_half):
        table = dict(compare_policies(sexp_half, grid_points=40))
        sweep = optimize_gamma(sexp_half, grid_points=40)
        assert table[policy_names[3]] <= sweep.lambda_double_star + 1e-9
        assert table[policy_names[3]] <= solve_lambda(sexp_half, math.inf).lambda_star + 1e-9


class TestShiftScans:

    def test_crossover(self):
        rows = crossover_scan([0.1, 0.5, 1.0], grid_points=60)
        assert [row["winner"] for row in rows] == ["cutoff"] * 3
        gaps = [row["no_cutoff_optimal_wait"] - row["optimal_cutoff_zero_wait"] for row in rows]
        assert all(gap > 0 for gap in gaps)
        assert gaps == sorted(gaps, reverse=True)
        assert gaps[0] == pytest.approx(0.506, abs=0.01)
        assert gaps[2] == pytest.approx(0.049, abs=0.01)

    def test_c_sweep(self):
        rows = c_sweep([0.5, 1.5], grid_points=30)
        assert [row["c"] for row in rows] == [0.5, 1.5]
        assert rows[0]["gamma_bar"] == pytest.approx(zero_wait_boundary(0.5))
        assert rows[1]["gamma_bar"] is None
        assert rows[1]["zero_wait"] is True

    def test_c_sweep_without_shift(self):
        row = c_sweep([0.0], grid_points=20)[0]
        assert row["gamma_bar"] is None
        assert row["boundary"] == "lower"
