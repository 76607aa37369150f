import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from berkson_kde import (
    BandwidthSpec,
    BerksonModel,
    GaussianMixture,
    ScalarMiseProfile,
    exact_ise_decomposition,
    exact_mise,
    mise_for_fx,
    mixture_pdf,
    convolve_with_normal,
    normal_pdf,
    omega_matrices,
)
from berkson_kde.errors import ConfigError, DegenerateModelError, DomainError
from tests.strategies import models_1d

MISE_NORMAL_H0 = 0.00165247303146323609
# (1/100)((8π)^{-3/2} - (12π)^{-3/2}), mpmath
MISE_MULTI_NORMAL_H0 = 3.61650977086532492e-05


class TestExamples:
    def test_normal_zero_bandwidth(self, normal_model):
        assert exact_mise(normal_model, 0.0, 50) == pytest.approx(MISE_NORMAL_H0, rel=1e-12)

    def test_multi_normal_zero_bandwidth(self, densities_3d):
        model = BerksonModel.isotropic(densities_3d["multi-normal"], 2.0)
        assert exact_mise(model, 0.0, 100) == pytest.approx(MISE_MULTI_NORMAL_H0, rel=1e-12)

    def test_zero_bandwidth_collapses(self, densities_1d):
        model = BerksonModel.isotropic(densities_1d["trimodal"], 0.5)
        om = omega_matrices(model, np.zeros((1, 1)))
        np.testing.assert_array_equal(om.omega0, om.omega2)
        np.testing.assert_array_equal(om.omega1, om.omega2)
        a = model.fx.weights
        expected = (normal_pdf([0.0], [0.0], 1.0) - a @ om.omega2 @ a) / 40
        assert exact_mise(model, 0.0, 40) == pytest.approx(expected, rel=1e-13)

    def test_direct_quadrature(self, densities_1d):
        # ∫ E(f̃ - f_Y)² through Var f̃ = n⁻¹(E φ² - (E φ)²), integrated numerically
        model = BerksonModel.isotropic(densities_1d["bimodal-1"], 0.25)
        h, n = 0.4, 30
        fy = convolve_with_normal(model.fx, 0.25)
        mean_est = convolve_with_normal(model.fx, 0.25 + h * h)
        sq_kernel = convolve_with_normal(model.fx, 0.5 * (0.25 + h * h))
        c = 1.0 / math.sqrt(4 * math.pi * (0.25 + h * h))

        def integrand(y):
            m = mixture_pdf(mean_est, y)
            var = (c * mixture_pdf(sq_kernel, y) - m * m) / n
            return var + (m - mixture_pdf(fy, y)) ** 2

        q, _ = integrate.quad(integrand, -15, 18, epsabs=1e-14, limit=200)
        assert exact_mise(model, h, n) == pytest.approx(q, rel=1e-9)


class TestOmega:
    def test_symmetric_positive(self, densities_3d):
        model = BerksonModel.isotropic(densities_3d["multi-3comp"], 0.5)
        S = np.diag([0.1, 0.2, 0.3])
        for om in omega_matrices(model, S).__dict__.values():
            np.testing.assert_array_equal(om, om.T)
            assert np.all(om > 0)

    def test_indexing(self, normal_model):
        om = omega_matrices(normal_model, np.eye(1))
        assert om[0] is om.omega0 and om[2] is om.omega2


class TestDecomposition:
    def test_sums_to_mise(self, densities_1d):
        model = BerksonModel.isotropic(densities_1d["bimodal-2"], 0.125)
        var, bias = exact_ise_decomposition(model, 0.2, 100)
        assert var + bias == exact_mise(model, 0.2, 100)

    def test_zero_bandwidth_no_bias(self, densities_1d):
        model = BerksonModel.isotropic(densities_1d["bimodal-1"], 1.0)
        assert exact_ise_decomposition(model, 0.0, 10)[1] == 0.0

    @settings(max_examples=100)
    @given(models_1d(), st.floats(0.0, 2.0), st.integers(1, 1000))
    def test_parts_nonnegative(self, model, h, n):
        var, bias = exact_ise_decomposition(model, h, n)
        assert var > 0
        # an integral of a square; allow for cancellation between the Ω terms
        assert bias >= -1e-15

    def test_variance_decreasing_in_n(self, normal_model):
        vs = [exact_ise_decomposition(normal_model, 0.3, n)[0] for n in (10, 20, 40, 80)]
        assert all(b < a for a, b in zip(vs, vs[1:]))


class TestProperties:
    def test_permutation_invariance(self, densities_1d):
        mix = densities_1d["trimodal"]
        perm = [2, 0, 1]
        shuffled = GaussianMixture.from_arrays(
            mix.weights[perm], mix.means[perm], mix.covariances[perm]
        )
        a = exact_mise(BerksonModel.isotropic(mix, 0.5), 0.3, 75)
        b = exact_mise(BerksonModel.isotropic(shuffled, 0.5), 0.3, 75)
        assert b == pytest.approx(a, rel=1e-14)

    def test_scalar_equals_matrix_forms(self, densities_3d):
        model = BerksonModel.isotropic(densities_3d["multi-2comp-2"], 0.5)
        h = 0.35
        a = exact_mise(model, h, 100)
        b = exact_mise(model, BandwidthSpec.diagonal([h * h] * 3), 100)
        c = exact_mise(model, h * np.eye(3), 100)
        assert b == pytest.approx(a, rel=1e-14)
        assert c == pytest.approx(a, rel=1e-14)

    def test_kernel_covariance_only_through_S(self, densities_1d):
        fx = densities_1d["bimodal-1"]
        a = exact_mise(BerksonModel.isotropic(fx, 0.5, kernel_cov=4.0), 0.2, 50)
        b = exact_mise(BerksonModel.isotropic(fx, 0.5), 0.4, 50)
        assert a == pytest.approx(b, rel=1e-14)

    def test_singular_bandwidth_allowed_with_error(self, densities_3d):
        model = BerksonModel.isotropic(densities_3d["multi-normal"], 1.0)
        H = np.diag([0.5, 0.0, 0.2])
        assert exact_mise(model, H, 100) > 0

    def test_full_bandwidth_eigenbasis(self, densities_3d):
        # S = HᵀH, so a PSD H with eigenpairs (λ, v) equals the diagonal case in that basis
        fx = densities_3d["multi-normal"]
        Q, _ = np.linalg.qr(np.arange(9.0).reshape(3, 3) + np.eye(3))
        lam = np.array([0.2, 0.35, 0.5])
        H = Q @ np.diag(lam) @ Q.T
        a = exact_mise(BerksonModel.isotropic(fx, 0.5), H, 100)
        b = exact_mise(BerksonModel.isotropic(fx, 0.5), BandwidthSpec.diagonal(lam**2), 100)
        assert a == pytest.approx(b, rel=1e-12)

    def test_non_psd_bandwidth_rejected(self, densities_3d):
        with pytest.raises(ConfigError):
            exact_mise(BerksonModel.isotropic(densities_3d["multi-normal"], 0.5), -np.eye(3), 100)


class TestErrors:
    def test_degenerate(self, std_normal):
        with pytest.raises(DegenerateModelError):
            exact_mise(BerksonModel.isotropic(std_normal, 0.0), 0.0, 10)

    def test_partial_degenerate(self):
        model = BerksonModel(GaussianMixture.normal([0.0, 0.0], np.eye(2)), np.diag([1.0, 0.0]))
        with pytest.raises(DegenerateModelError):
            exact_mise(model, BandwidthSpec.diagonal([0.5, 0.0]), 10)
        assert exact_mise(model, BandwidthSpec.diagonal([0.0, 0.5]), 10) > 0

    @pytest.mark.parametrize("n", [0, -3, 2.5])
    def test_bad_n(self, normal_model, n):
        with pytest.raises(DomainError):
            exact_mise(normal_model, 0.1, n)

    def test_dimension_mismatch(self, normal_model):
        with pytest.raises(ConfigError):
            exact_mise(normal_model, np.eye(2), 10)

    def test_negative_bandwidth(self, normal_model):
        with pytest.raises(DomainError):
            exact_mise(normal_model, -0.1, 10)


class TestMiseForFx:
    def test_ignores_error(self, normal_model, std_normal):
        a = mise_for_fx(normal_model, 0.4, 50)
        b = exact_mise(BerksonModel.isotropic(std_normal, 0.0), 0.4, 50)
        assert a == b

    def test_minimizer_near_052(self, normal_model):
        hs = np.linspace(0.3, 0.8, 5001)
        vals = [mise_for_fx(normal_model, h, 50) for h in hs]
        assert hs[int(np.argmin(vals))] == pytest.approx(0.52, abs=0.005)

    def test_large_n_tends_to_bias(self, normal_model):
        _, bias = exact_ise_decomposition(normal_model.without_error(), 0.4, 1)
        assert mise_for_fx(normal_model, 0.4, 10**12) == pytest.approx(bias, rel=1e-9)

    def test_zero_bandwidth(self, normal_model):
        with pytest.raises(DegenerateModelError):
            mise_for_fx(normal_model, 0.0, 50)


class TestScalarProfile:
    @pytest.mark.parametrize("target", ["Y", "X"])
    @pytest.mark.parametrize("slug", ["normal", "bimodal-1", "bimodal-2", "trimodal"])
    def test_matches_exact(self, densities_1d, slug, target):
        model = BerksonModel.isotropic(densities_1d[slug], 0.5)
        prof = ScalarMiseProfile(model, 50, target)
        hs = np.linspace(0.01, 1.5, 31)
        ref = model if target == "Y" else model.without_error()
        np.testing.assert_allclose(prof(hs), [exact_mise(ref, h, 50) for h in hs], rtol=1e-12)

    def test_multivariate_with_kernel(self, densities_3d):
        K = np.array([[1.0, 0.2, 0.0], [0.2, 0.8, 0.1], [0.0, 0.1, 1.2]])
        model = BerksonModel(densities_3d["multi-2comp-1"], np.diag([0.5, 1.0, 0.25]), K)
        prof = ScalarMiseProfile(model, 100)
        for h in (0.0, 0.1, 0.7):
            assert prof(h) == pytest.approx(exact_mise(model, h, 100), rel=1e-12)

    def test_scalar_returns_float(self, normal_model):
        assert isinstance(ScalarMiseProfile(normal_model, 10)(0.2), float)

    def test_bad_target(self, normal_model):
        with pytest.raises(ConfigError):
            ScalarMiseProfile(normal_model, 10, "Z")

    def test_degenerate(self, normal_model):
        with pytest.raises(DegenerateModelError):
            ScalarMiseProfile(normal_model, 10, "X")(0.0)
