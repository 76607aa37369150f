"""Bandwidth selectors.

Exact scalar minimizers ``h_Y`` and ``h_X`` of the MISE, the asymptotic
``h*_Y = sqrt(2 t2 / (n t4))``, rule-of-thumb estimates, and the quadratic
forms behind diagonal and full bandwidth matrices.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import BracketExhaustedError, ConditioningError, ConfigError, DivergenceError, DomainError
from .gaussmix import GaussianMixture
from .mise_exact import ScalarMiseProfile
from .model import BerksonModel
from .spectral import (
    ErrorCharSq,
    error_char_sq_gaussian,
    spectral_moment_tensor,
    spectral_moments,
)

GRID_POINTS = 257
BRACKET_FACTOR = 5.0
EXPAND_FACTOR = 4.0
XATOL = 1e-10


@dataclass(frozen=True)
class BandwidthResult:
    """Outcome of a bandwidth search.

    ``at_boundary`` flags ``h = 0`` winning outright, which is legal since the
    bandwidth only needs to be positive semidefinite.
    """

    value: Union[float, np.ndarray]
    objective: float
    iterations: int
    bracket: tuple[float, float]
    at_boundary: bool = False


@dataclass(frozen=True)
class QuadraticForm:
    """Asymptotic MISE ``sᵀBs - n⁻¹ sᵀV`` (up to constants) in squared bandwidths.

    ``s`` is the diagonal of ``S`` for diagonal bandwidths or ``vec(S)`` for
    full ones.
    """

    B: np.ndarray
    V: np.ndarray

    def objective(self, s, n: int) -> float:
        s = np.asarray(s, dtype=float).reshape(-1)
        return float(s @ self.B @ s - s @ self.V / n)

    def unconstrained_minimizer(self, n: int) -> np.ndarray:
        """Stationary point ``(2n)⁻¹ B⁻¹ V``; requires ``B`` invertible."""
        _check_conditioning(self.B)
        return np.linalg.solve(self.B, self.V) / (2.0 * n)


def silverman_scale(model: BerksonModel, n: int) -> float:
    """Error-free Silverman bandwidth from the true covariance of ``f_X``.

    ``0.9 σ n^{-1/(p+4)}`` with ``σ²`` the mean marginal variance.
    """
    var = float(np.mean(np.diag(model.fx.covariance)))
    return 0.9 * math.sqrt(var) * n ** (-1.0 / (model.dim + 4))


def _search(profile: ScalarMiseProfile, hi: float, allow_zero: bool):
    grid = np.linspace(0.0, hi, GRID_POINTS)
    if not allow_zero:
        grid = grid[1:]
    values = profile(grid)
    k = int(np.argmin(values))
    lo_b = grid[max(k - 1, 0)]
    hi_b = grid[min(k + 1, grid.size - 1)]
    res = minimize_scalar(profile, bounds=(lo_b, hi_b), method="bounded", options={"xatol": XATOL})
    best_h, best_v = float(res.x), float(res.fun)
    if values[k] < best_v:
        best_h, best_v = float(grid[k]), float(values[k])
    return best_h, best_v, k == grid.size - 1, grid.size + int(res.nfev)


def optimal_scalar_bandwidth(model: BerksonModel, n: int, target: str = "Y") -> BandwidthResult:
    """Exact MISE-optimal scalar bandwidth.

    A coarse grid on ``[0, 5 × silverman_scale]`` locates the basin, bounded
    Brent refines it, and ``h = 0`` is compared directly. If the grid
    minimum sits on the upper edge the bracket is widened once by 4×.

    Parameters
    ----------
    target : {"Y", "X"}
        ``"Y"`` minimizes the Berkson MISE; ``"X"`` the error-free MISE for
        ``f_X`` (searched over ``h > 0``).
    """
    profile = ScalarMiseProfile(model, n, target)
    allow_zero = profile.target == "Y"
    hi = BRACKET_FACTOR * silverman_scale(model, n)
    iterations = 0
    for attempt in range(2):
        h, v, at_edge, its = _search(profile, hi, allow_zero)
        iterations += its
        if not at_edge:
            break
        if attempt == 0:
            hi *= EXPAND_FACTOR
    else:
        raise BracketExhaustedError(f"MISE still decreasing at the bracket edge h={hi:g}")
    at_boundary = False
    if allow_zero:
        v0 = float(profile(0.0))
        if v0 <= v:
            h, v, at_boundary = 0.0, v0, True
    return BandwidthResult(h, v, iterations, (0.0, hi), at_boundary)


def asymptotic_bandwidth(model: BerksonModel, n: int, error: Optional[ErrorCharSq] = None) -> float:
    """Asymptotically optimal ``h*_Y = sqrt(2 t2 / (n t4))`` (one dimension)."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return spectral_moments(model, error).asymptotic_bandwidth(n)


def rule_of_thumb_hy(sample_var: float, error: Union[ErrorCharSq, float], n: int) -> float:
    """Rule-of-thumb Berkson bandwidth by quadrature.

    ``f_X`` is replaced by a normal with variance ``sample_var`` so that
    ``|f̂_X(ω)|² = exp(-sample_var ω²)``; ``error`` is any square-integrable
    error spectrum or a Gaussian error variance.
    """
    if not sample_var > 0:
        raise DomainError("sample variance must be > 0")
    if n < 1:
        raise DomainError("n must be >= 1")
    if not isinstance(error, ErrorCharSq):
        if float(error) <= 0:
            raise DivergenceError("zero error variance: the rule-of-thumb bandwidth diverges")
        error = error_char_sq_gaussian(float(error))
    model = BerksonModel(GaussianMixture.normal(0.0, sample_var), 0.0)
    return spectral_moments(model, error).asymptotic_bandwidth(n)


def rule_of_thumb_hy_gaussian(sample_var: float, sigma_eps2: float, n: int) -> float:
    """Closed-form rule-of-thumb bandwidth for Gaussian error.

    ``sqrt(4/(3n) [(v + s)^{5/2} / s^{3/2} - (v + s)])`` with ``v = sample_var``
    and ``s = sigma_eps2``.
    """
    if not sample_var > 0:
        raise DomainError("sample variance must be > 0")
    if n < 1:
        raise DomainError("n must be >= 1")
    if sigma_eps2 <= 0:
        raise DivergenceError("zero error variance: the rule-of-thumb bandwidth diverges")
    t = sample_var + sigma_eps2
    return math.sqrt(4.0 / (3.0 * n) * (t**2.5 / sigma_eps2**1.5 - t))


def silverman_hx(sample_sd: float, sample_iqr: float, n: int) -> float:
    """Silverman's ``0.9 min(IQR/1.34, sd) n^{-1/5}``."""
    if not (sample_sd > 0 and sample_iqr > 0):
        raise DomainError("sample sd and IQR must be > 0")
    if n < 1:
        raise DomainError("n must be >= 1")
    return 0.9 * min(sample_iqr / 1.34, sample_sd) * n ** -0.2


def _check_conditioning(B: np.ndarray, limit: float = 1e12) -> None:
    if np.linalg.cond(B) > limit:
        raise ConditioningError(f"quadratic form is numerically singular (cond > {limit:g})")


def diagonal_quadratic_form(model: BerksonModel) -> QuadraticForm:
    """``B'_ij = ¼∫ω_i²ω_j² dμ`` and ``V'_i = ∫ω_i² dν`` for ``S = diag(s)``."""
    if not np.allclose(model.kernel_cov, np.eye(model.dim), rtol=0.0, atol=1e-12):
        raise ConfigError("diagonal bandwidth analysis requires an identity kernel covariance")
    t4 = spectral_moment_tensor(model, 4, "mu")
    t2 = spectral_moment_tensor(model, 2, "nu")
    idx = np.arange(model.dim)
    B = 0.25 * t4[idx[:, None], idx[:, None], idx[None, :], idx[None, :]]
    return QuadraticForm(0.5 * (B + B.T), np.diag(t2).copy())


def nonnegative_qp(form: QuadraticForm, n: int) -> np.ndarray:
    """Minimize ``sᵀBs - n⁻¹sᵀV`` over ``s >= 0`` for positive definite ``B``.

    Every subset of coordinates is tried as the free set; the others are
    pinned at zero. Exhaustive, so only sensible for small ``p``.
    """
    p = form.V.size
    best, best_val = np.zeros(p), 0.0
    for size in range(1, p + 1):
        for free in itertools.combinations(range(p), size):
            f = list(free)
            cand = np.zeros(p)
            cand[f] = np.linalg.solve(form.B[np.ix_(f, f)], form.V[f]) / (2.0 * n)
            if np.any(cand < 0):
                continue
            val = form.objective(cand, n)
            if val < best_val:
                best, best_val = cand, val
    return best


def diagonal_qp(model: BerksonModel, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Optimal squared diagonal bandwidths ``s >= 0`` of the asymptotic MISE.

    Returns
    -------
    (s_star, unconstrained)
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    form = diagonal_quadratic_form(model)
    unconstrained = form.unconstrained_minimizer(n)
    return nonnegative_qp(form, n), unconstrained


def full_bandwidth_matrices(model: BerksonModel) -> QuadraticForm:
    """Quadratic form over ``vec(S)``: ``B = ¼∫(ω⊗ω)(ω⊗ω)ᵀdμ``, ``V = ∫(ω⊗ω)dν``.

    The symmetric entries ``S_ij`` and ``S_ji`` enter identically, so ``B``
    has repeated rows and is singular for ``p >= 2``.
    """
    p = model.dim
    t4 = spectral_moment_tensor(model, 4, "mu")
    t2 = spectral_moment_tensor(model, 2, "nu")
    B = 0.25 * t4.reshape(p * p, p * p)
    return QuadraticForm(0.5 * (B + B.T), t2.reshape(p * p))
