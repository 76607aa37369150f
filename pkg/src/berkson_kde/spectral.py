"""Characteristic-function form of the MISE and its spectral moment integrals.

With ``dμ = |f̂_e|² |f̂_X|² dω`` and ``dν = |f̂_e|² (1 - |f̂_X|²) dω`` the MISE of
the Berkson estimator is

    2π · MISE(h) = ∫ |1 - K̂(hω)|² dμ + n⁻¹ ∫ |K̂(hω)|² dν        (p = 1)

The one-dimensional integrals here are evaluated by adaptive quadrature, which
keeps this module independent of the closed-form route in ``mise_exact``.
``spectral_moment_tensor`` gives exact multivariate moments of ``dμ`` and ``dν``
for Gaussian models; the bandwidth-matrix analyses are built on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DivergenceError, DomainError, UnsupportedDimensionError
from .gaussmix import as_matrix, char_fn_sq, check_psd, cholesky
from .model import BerksonModel
from .quadrature import check_tail_decay, even_integral, gaussian_radius, half_line_integral


@dataclass(frozen=True)
class ErrorCharSq:
    """``ω ↦ |f̂_e(ω)|²`` for a one-dimensional error density.

    ``decay`` is the Gaussian rate ``a`` in ``exp(-a ω²)`` when known; it sets
    the quadrature truncation radius. Without it integrals run over the whole
    half-line after a tail check that rejects non-square-integrable errors.
    """

    func: Callable[[np.ndarray], np.ndarray]
    decay: Optional[float] = None
    name: str = "custom"

    def __call__(self, omega):
        return self.func(np.asarray(omega, dtype=float))

    def integrate(self, f, extra_decay: float = 0.0, radius_scale: float = 1.0) -> float:
        """``∫ f`` over the real line for an even ``f`` bounded by ``|f̂_e|²`` times
        ``(1 + ω⁴) exp(-extra_decay ω²)``.

        With Gaussian decay the range is truncated at :func:`gaussian_radius`
        (scaled by ``radius_scale``); otherwise the whole half-line is mapped
        onto ``[0, 1)``.
        """
        decay = (self.decay or 0.0) + extra_decay
        if decay > 0:
            return even_integral(f, radius_scale * gaussian_radius(decay))
        check_tail_decay(lambda w: float(self.func(np.array([w]))[0]))
        return 2.0 * half_line_integral(f)


def error_char_sq_gaussian(error_var) -> ErrorCharSq:
    """``|f̂_e(ω)|² = exp(-σ_e² ω²)`` for ``e ~ N(0, σ_e²)`` in one dimension."""
    var = as_matrix(error_var, 1)
    check_psd(var, "error variance")
    s = float(var[0, 0])
    return ErrorCharSq(lambda w: np.exp(-s * w * w), decay=s, name=f"normal(var={s:g})")


@dataclass(frozen=True)
class SpectralMoments:
    """``t0 = ∫dν``, ``t2 = ∫ω²Σ_K dν``, ``t4 = ∫(ω²Σ_K)² dμ``."""

    t0: float
    t2: float
    t4: float

    def asymptotic_bandwidth(self, n: int) -> float:
        """Minimizer of ``h⁴ t4 / 4 - h² t2 / n``: ``sqrt(2 t2 / (n t4))``."""
        return math.sqrt(2.0 * self.t2 / (n * self.t4))


def _require_1d(model: BerksonModel) -> None:
    if model.dim != 1:
        raise UnsupportedDimensionError(f"spectral quadrature is one-dimensional; model has p={model.dim}")


def _error_for(model: BerksonModel, error: Optional[ErrorCharSq]) -> ErrorCharSq:
    if error is not None:
        return error
    if not model.has_error:
        raise DivergenceError("zero error variance: ∫|f̂_e|² dω diverges")
    return error_char_sq_gaussian(model.error_cov)


def _mu_decay(model: BerksonModel) -> float:
    return float(np.min(model.fx.covariances[:, 0, 0]))


def fourier_mise(
    model: BerksonModel,
    h: float,
    n: int,
    error: Optional[ErrorCharSq] = None,
    radius_scale: float = 1.0,
) -> float:
    """MISE of the Berkson estimator with scalar bandwidth ``h``, by spectral quadrature.

    ``error`` overrides the model's Gaussian error spectrum, e.g. for a
    non-Gaussian smooth error density.
    """
    _require_1d(model)
    if h < 0:
        raise DomainError(f"bandwidth must be >= 0, got {h}")
    if n < 1:
        raise DomainError("n must be >= 1")
    err = error if error is not None else error_char_sq_gaussian(model.error_cov)
    k = float(model.kernel_cov[0, 0])
    fx = model.fx
    c = 0.5 * h * h * k

    def bias(w):
        return np.expm1(-c * w * w) ** 2 * err(w) * char_fn_sq(fx, w)

    def var(w):
        return np.exp(-2.0 * c * w * w) * err(w) * (1.0 - char_fn_sq(fx, w))

    bias_int = 0.0 if h == 0 else err.integrate(bias, _mu_decay(model), radius_scale)
    var_int = err.integrate(var, 2.0 * c, radius_scale)
    return (bias_int + var_int / n) / (2.0 * math.pi)


def spectral_moments(
    model: BerksonModel, error: Optional[ErrorCharSq] = None, radius_scale: float = 1.0
) -> SpectralMoments:
    _require_1d(model)
    err = _error_for(model, error)
    k = float(model.kernel_cov[0, 0])
    fx = model.fx

    def nu(w):
        return err(w) * (1.0 - char_fn_sq(fx, w))

    t0 = err.integrate(nu, radius_scale=radius_scale)
    t2 = err.integrate(lambda w: k * w * w * nu(w), radius_scale=radius_scale)
    t4 = err.integrate(
        lambda w: (k * w * w) ** 2 * err(w) * char_fn_sq(fx, w), _mu_decay(model), radius_scale
    )
    return SpectralMoments(t0, t2, t4)


# -- closed-form Gaussian moments ------------------------------------------------

def _cosine_gaussian_moments(A: np.ndarray, delta: np.ndarray, order: int) -> np.ndarray:
    """``∫ ω^{⊗order} cos(ωᵀΔ) exp(-½ ωᵀAω) dω`` as a ``(p,)*order`` tensor.

    Uses ``∫ e^{iωᵀΔ} e^{-½ωᵀAω} dω = (2π)^p φ_A(Δ)`` and differentiates in Δ;
    odd orders vanish by symmetry.
    """
    p = A.shape[0]
    chol = np.linalg.cholesky(A)
    M = np.linalg.inv(A)
    M = 0.5 * (M + M.T)
    u = M @ delta
    z = np.linalg.solve(chol, delta)
    G = (2.0 * math.pi) ** (p / 2.0) / np.prod(np.diag(chol)) * math.exp(-0.5 * float(z @ z))
    if order == 0:
        return np.array(G)
    if order == 2:
        return G * (M - np.outer(u, u))
    if order == 4:
        uuuu = np.einsum("i,j,k,l->ijkl", u, u, u, u)
        muu = (
            np.einsum("ij,k,l->ijkl", M, u, u)
            + np.einsum("ik,j,l->ijkl", M, u, u)
            + np.einsum("il,j,k->ijkl", M, u, u)
            + np.einsum("jk,i,l->ijkl", M, u, u)
            + np.einsum("jl,i,k->ijkl", M, u, u)
            + np.einsum("kl,i,j->ijkl", M, u, u)
        )
        mm = (
            np.einsum("ij,kl->ijkl", M, M)
            + np.einsum("ik,jl->ijkl", M, M)
            + np.einsum("il,jk->ijkl", M, M)
        )
        return G * (uuuu - muu + mm)
    if order % 2 == 1:
        return np.zeros((p,) * order)
    raise ValueError("orders above 4 are not needed")


def spectral_moment_tensor(model: BerksonModel, order: int, measure: str) -> np.ndarray:
    """Exact ``∫ ω^{⊗order} dμ`` (``measure="mu"``) or ``dν`` (``"nu"``) for a Gaussian model.

    Any dimension. ``dν`` needs a positive definite error covariance.
    """
    fx = model.fx
    two_err = 2.0 * model.error_cov
    mu_t = np.zeros((fx.dim,) * order) if order else np.array(0.0)
    for j, cj in enumerate(fx.components):
        for jj, cjj in enumerate(fx.components):
            A = two_err + cj.covariance + cjj.covariance
            mu_t = mu_t + cj.weight * cjj.weight * _cosine_gaussian_moments(A, cj.mean - cjj.mean, order)
    if measure == "mu":
        return mu_t
    if measure != "nu":
        raise ValueError(f"measure must be 'mu' or 'nu', got {measure!r}")
    try:
        cholesky(two_err, "error covariance")
    except Exception:
        raise DivergenceError("dν has infinite mass unless the error covariance is positive definite") from None
    return _cosine_gaussian_moments(two_err, np.zeros(fx.dim), order) - mu_t
