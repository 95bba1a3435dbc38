import numpy as np
import pytest

from finitebath import best_exponential_fit, deviation_d2, histogram, scaling_fit


GRID = np.arange(0.0, 2001.0, 1.0)


class TestDeviation:
    def test_identical_series(self):
        y = np.sin(GRID / 300.0)
        report = deviation_d2(y, y, GRID, 2000.0)
        assert report.d_squared == 0.0
        assert report.d == 0.0
        assert report.n_samples == 2001

    def test_constant_offset(self):
        y = np.cos(GRID / 100.0)
        report = deviation_d2(y, y + 0.03, GRID, 2000.0)
        assert report.d_squared == pytest.approx(0.03**2, abs=1e-12)
        assert report.d == pytest.approx(0.03, abs=1e-10)

    def test_symmetry_and_shift_invariance(self):
        a = np.sin(GRID / 211.0)
        b = np.cos(GRID / 97.0)
        r1 = deviation_d2(a, b, GRID, 2000.0)
        r2 = deviation_d2(b, a, GRID, 2000.0)
        r3 = deviation_d2(a + 5.0, b + 5.0, GRID, 2000.0)
        assert r1.d_squared == r2.d_squared
        assert r1.d_squared == pytest.approx(r3.d_squared, rel=1e-9)

    def test_window_shorter_than_grid(self):
        y = GRID / 2000.0
        report = deviation_d2(y, np.zeros_like(y), GRID, 1000.0)
        # (1/tau) * integral_0^1000 (t/2000)^2 dt = 1/12
        assert report.d_squared == pytest.approx(1.0 / 12.0, rel=1e-5)

    def test_quadrature_converges_under_refinement(self):
        def run(step):
            t = np.arange(0.0, 2000.0 + step / 2, step)
            return deviation_d2(np.sin(t / 150.0), np.zeros_like(t), t, 2000.0).d_squared

        coarse, fine = run(1.0), run(0.5)
        assert abs(coarse - fine) / fine < 1e-4

    def test_rejects_misaligned_series(self):
        with pytest.raises(ValueError, match="misaligned"):
            deviation_d2(GRID[:-1], GRID, GRID, 2000.0)

    def test_rejects_tau_beyond_grid(self):
        with pytest.raises(ValueError, match="tau"):
            deviation_d2(GRID, GRID, GRID, 3000.0)

    def test_rejects_tau_off_grid(self):
        with pytest.raises(ValueError, match="tau"):
            deviation_d2(GRID, GRID, GRID, 1000.5)

    def test_rejects_nonuniform_grid(self):
        t = np.concatenate([[0.0], np.geomspace(1.0, 2000.0, 50)])
        with pytest.raises(ValueError, match="uniform"):
            deviation_d2(t, t, t, 2000.0)

    def test_grid_with_negative_times(self):
        t = np.arange(-500.0, 2001.0, 1.0)
        y = np.ones_like(t)
        report = deviation_d2(y, y + 0.1, t, 2000.0)
        assert report.d_squared == pytest.approx(0.01, abs=1e-12)
        assert report.n_samples == 2001


class TestHistogram:
    def test_basic_binning(self):
        h = histogram([0.01, 0.011, 0.03], 0.02)
        assert h.counts.tolist() == [2, 1]
        assert h.left_edges.tolist() == [0.0, 0.02]
        assert h.total == 3

    def test_single_value(self):
        h = histogram([0.012], 0.005)
        assert h.total == 1
        assert h.counts[-1] == 1
        assert h.mode_bin() == (0.01, 1)

    def test_empty_input(self):
        h = histogram([], 0.01)
        assert h.total == 0
        assert h.counts.size == 0
        assert h.mode_bin() is None

    def test_counts_preserved(self, rng):
        values = rng.uniform(0, 0.2, size=500)
        assert histogram(values, 0.005).total == 500

    def test_left_closed_edges(self):
        h = histogram([0.02], 0.02)
        assert h.counts.tolist() == [0, 1]

    def test_rejects_negative_values(self):
        with pytest.raises(ValueError, match="non-negative"):
            histogram([-0.01], 0.02)

    def test_rejects_bad_width(self):
        with pytest.raises(ValueError, match="bin_width"):
            histogram([0.1], 0.0)


class TestScalingFit:
    def test_recovers_planted_inverse_law(self):
        points = [(n, 0.37 / n) for n in (10, 25, 50, 100, 400)]
        fit = scaling_fit(points)
        assert fit.slope == pytest.approx(-1.0, abs=1e-9)
        assert fit.residual <= 1e-12

    def test_recovers_planted_constant(self):
        points = [(n, 0.2) for n in (10, 100, 1000)]
        fit = scaling_fit(points)
        assert fit.slope == pytest.approx(0.0, abs=1e-9)

    def test_recovers_planted_square_law(self):
        points = [(n, 2.0 / n**2) for n in (8, 64, 512)]
        assert scaling_fit(points).slope == pytest.approx(-2.0, abs=1e-9)

    def test_rejects_too_few_points(self):
        with pytest.raises(ValueError, match="3 points"):
            scaling_fit([(10, 0.1), (20, 0.05)])

    def test_rejects_equal_sizes(self):
        with pytest.raises(ValueError, match="equal"):
            scaling_fit([(10, 0.1), (10, 0.2), (10, 0.3)])

    def test_rejects_nonpositive_deviation(self):
        with pytest.raises(ValueError, match="d_squared"):
            scaling_fit([(10, 0.1), (20, 0.0), (30, 0.3)])


class TestExponentialFit:
    def test_recovers_planted_relaxation(self):
        y = 0.3 + 0.7 * np.exp(-0.002 * GRID)
        fit = best_exponential_fit(y, GRID, 2000.0)
        assert fit.rate == pytest.approx(0.002, rel=1e-3)
        assert fit.asymptote == pytest.approx(0.3, abs=1e-4)
        assert fit.initial == pytest.approx(1.0, abs=1e-12)
        assert fit.deviation.d <= 1e-6

    def test_pins_the_initial_value(self):
        y = 0.5 + 0.25 * np.exp(-0.001 * GRID)
        fit = best_exponential_fit(y, GRID, 2000.0)
        assert fit.initial == y[0]

    def test_flat_series(self):
        y = np.full_like(GRID, 0.42)
        fit = best_exponential_fit(y, GRID, 2000.0)
        assert fit.deviation.d <= 1e-12

    def test_oscillation_leaves_residual(self):
        y = 0.5 + 0.3 * np.cos(GRID / 120.0)
        fit = best_exponential_fit(y, GRID, 2000.0)
        assert fit.deviation.d > 0.05

    def test_window_respected(self):
        t = np.arange(-100.0, 2001.0, 1.0)
        y = 0.3 + 0.7 * np.exp(-0.002 * np.abs(t))
        fit = best_exponential_fit(y, t, 2000.0)
        assert fit.rate == pytest.approx(0.002, rel=1e-3)
