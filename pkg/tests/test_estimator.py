import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp
from scipy.integrate import simpson

from berkson_kde import (
    BandwidthSpec,
    BerksonModel,
    DensityCurve,
    default_grid,
    estimator_char_form,
    evaluate_estimator,
    model_grid,
    normal_pdf,
    sample,
)
from berkson_kde.errors import (
    DegenerateModelError,
    EmptySampleError,
    ShapeError,
    UnsupportedDimensionError,
)

samples_1d = hnp.arrays(float, st.integers(1, 40), elements=st.floats(-5.0, 5.0))


class TestEvaluate:
    def test_single_point_is_error_density(self):
        grid = np.linspace(-4, 4, 81)
        curve = evaluate_estimator([0.0], 1.0, 0.0, grid)
        np.testing.assert_allclose(curve.values, normal_pdf(grid, 0.0, 1.0), rtol=1e-14)

    def test_single_point_multivariate(self):
        err = np.array([[1.0, 0.2], [0.2, 0.5]])
        H = np.diag([0.3, 0.4])
        pts = np.array([[0.0, 0.0], [0.5, -0.2], [1.0, 1.0]])
        curve = evaluate_estimator([[0.1, 0.2]], err, H, pts)
        np.testing.assert_allclose(curve.values, normal_pdf(pts, [0.1, 0.2], H @ H + err), rtol=1e-13)

    def test_zero_bandwidth_is_kernel_free(self, rng):
        x = rng.normal(size=25)
        grid = np.linspace(-5, 5, 101)
        curve = evaluate_estimator(x, 0.5, 0.0, grid)
        direct = np.mean([normal_pdf(grid - xi, 0.0, 0.5) for xi in x], axis=0)
        np.testing.assert_allclose(curve.values, direct, rtol=1e-13)

    @pytest.mark.parametrize("trial", range(20))
    def test_smoothing_lowers_peak(self, trial):
        r = np.random.default_rng(trial)
        x = r.normal(size=30)
        h1, h2 = np.sort(r.uniform(0.0, 1.0, 2))
        grid = np.linspace(-8, 8, 2001)
        a = evaluate_estimator(x, 0.3, h1, grid).values.max()
        b = evaluate_estimator(x, 0.3, h2, grid).values.max()
        assert b <= a

    @pytest.mark.parametrize("h, err", [(0.0, 0.05), (0.3, 0.0), (0.2, 1.0)])
    def test_integrates_to_one(self, rng, h, err):
        x = rng.standard_normal(50)
        sd = math.sqrt(np.var(x, ddof=1) + err + h * h)
        grid = np.linspace(x.min() - 8 * sd, x.max() + 8 * sd, 4001)
        assert evaluate_estimator(x, err, h, grid).integral() == pytest.approx(1.0, abs=1e-4)

    @given(samples_1d, st.floats(0.0, 1.0), st.floats(0.01, 1.0))
    def test_nonnegative(self, x, h, err):
        curve = evaluate_estimator(x, err, h, np.linspace(-10, 10, 51))
        assert np.all(curve.values >= 0)

    @given(samples_1d, st.floats(0.0, 1.0), st.floats(0.01, 1.0))
    def test_only_total_covariance_matters(self, x, h, err):
        grid = np.linspace(-6, 6, 41)
        a = evaluate_estimator(x, err, h, grid).values
        b = evaluate_estimator(x, 0.0, math.sqrt(h * h + err), grid).values
        c = evaluate_estimator(x, h * h + err, 0.0, grid).values
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-300)
        np.testing.assert_allclose(a, c, rtol=1e-12, atol=1e-300)

    @given(samples_1d, samples_1d)
    def test_linear_in_sample(self, x1, x2):
        grid = np.linspace(-6, 6, 31)
        both = evaluate_estimator(np.concatenate([x1, x2]), 0.4, 0.2, grid).values
        a = evaluate_estimator(x1, 0.4, 0.2, grid).values
        b = evaluate_estimator(x2, 0.4, 0.2, grid).values
        w = len(x1) / (len(x1) + len(x2))
        np.testing.assert_allclose(both, w * a + (1 - w) * b, rtol=1e-12, atol=1e-300)

    def test_kernel_covariance(self, rng):
        x = rng.normal(size=10)
        grid = np.linspace(-3, 3, 11)
        a = evaluate_estimator(x, 0.2, 0.5, grid, kernel_cov=4.0).values
        b = evaluate_estimator(x, 0.2, 1.0, grid).values
        np.testing.assert_allclose(a, b, rtol=1e-14)

    def test_diagonal_spec(self, rng):
        x = rng.normal(size=(20, 2))
        pts = rng.normal(size=(15, 2))
        a = evaluate_estimator(x, np.eye(2), BandwidthSpec.diagonal([0.04, 0.09]), pts).values
        b = evaluate_estimator(x, np.eye(2), np.diag([0.2, 0.3]), pts).values
        np.testing.assert_allclose(a, b, rtol=1e-14)

    @pytest.mark.parametrize("threads", [1, 2, 4])
    def test_thread_count_does_not_change_bits(self, rng, threads, monkeypatch):
        import berkson_kde.estimator as est

        monkeypatch.setattr(est, "CHUNK_ELEMENTS", 4096)
        x = rng.normal(size=200)
        grid = np.linspace(-5, 5, 1000)
        ref = evaluate_estimator(x, 0.3, 0.2, grid, threads=1).values
        out = evaluate_estimator(x, 0.3, 0.2, grid, threads=threads).values
        np.testing.assert_array_equal(out, ref)

    def test_degenerate(self):
        with pytest.raises(DegenerateModelError):
            evaluate_estimator([0.0, 1.0], 0.0, 0.0, [0.0])

    def test_empty(self):
        with pytest.raises(EmptySampleError):
            evaluate_estimator([], 1.0, 0.0, [0.0])

    def test_nonfinite(self):
        with pytest.raises(ShapeError):
            evaluate_estimator([0.0, np.nan], 1.0, 0.0, [0.0])

    def test_grid_dimension(self):
        with pytest.raises(ShapeError):
            evaluate_estimator(np.zeros((3, 2)), np.eye(2), 0.0, np.zeros((4, 3)))

    def test_curve_integral_needs_1d(self):
        with pytest.raises(UnsupportedDimensionError):
            DensityCurve(np.zeros((3, 2)), np.zeros(3)).integral()


class TestCharForm:
    def test_at_origin(self, rng):
        x = rng.normal(size=17)
        assert estimator_char_form(x, 0.5, 0.3, 0.0) == 1.0

    def test_modulus_bound(self, rng):
        x = rng.normal(size=40)
        w = rng.uniform(-20, 20, 100)
        val = estimator_char_form(x, 0.7, 0.25, w)
        assert np.all(np.abs(val) <= np.exp(-0.35 * w * w) * (1 + 1e-12))

    @pytest.mark.parametrize("y", [-1.3, 0.0, 0.4, 2.2])
    def test_fourier_inversion(self, rng, y):
        x = rng.normal(size=30)
        w = np.linspace(0.0, 40.0, 40001)
        vals = estimator_char_form(x, 0.3, 0.2, w)
        # f(y) = π⁻¹ ∫_0^∞ Re(e^{-iωy} φ(ω)) dω
        inv = simpson(np.real(np.exp(-1j * w * y) * vals), x=w) / math.pi
        direct = evaluate_estimator(x, 0.3, 0.2, [y]).values[0]
        assert inv == pytest.approx(direct, abs=1e-6)

    def test_multivariate_rejected(self):
        with pytest.raises(UnsupportedDimensionError):
            estimator_char_form(np.zeros((3, 2)), np.eye(2), 0.0, 1.0)


class TestGrids:
    def test_default_grid(self):
        x = np.array([0.0, 1.0, 2.0])
        g = default_grid(x, 3.0)
        assert g.size == 512
        # sample variance 1 plus error 3 gives σ_tot = 2
        assert g[0] == pytest.approx(-8.0) and g[-1] == pytest.approx(10.0)

    def test_model_grid_covers_components(self, densities_1d):
        model = BerksonModel.isotropic(densities_1d["bimodal-2"], 0.5)
        g = model_grid(model)
        assert g[0] <= -2 - 4 * math.sqrt(0.75) + 1e-12
        assert g[-1] >= 2 + 4 * math.sqrt(0.75) - 1e-12

    def test_integral_on_model_grid(self, densities_1d):
        model = BerksonModel.isotropic(densities_1d["trimodal"], 0.25)
        x = sample(model.fx, 100, seed=1)
        curve = evaluate_estimator(x, 0.25, 0.1, model_grid(model, 0.1, points=4001, width=10.0))
        assert curve.integral() == pytest.approx(1.0, abs=1e-4)
