"""Multivariate normal and Gaussian-mixture primitives.

Covariances are always dense ``(p, p)`` arrays, including ``p = 1`` where a
variance of 2 is stored as ``[[2.0]]``. Scalars and 1-element sequences are
accepted wherever a covariance or mean is expected in one dimension.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import EmptySampleError, InvalidCovarianceError, ShapeError, ConfigError

#: Identifies the sampling contract; bump the version if the draw order changes.
GENERATOR = "philox4x64-numpy/v1"

_LOG_2PI = np.log(2.0 * np.pi)


def as_vector(x, p: int | None = None) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ShapeError(f"expected a vector, got shape {v.shape}")
    if p is not None and v.shape[0] != p:
        raise ShapeError(f"expected a vector of length {p}, got {v.shape[0]}")
    return v


def as_matrix(c, p: int | None = None) -> np.ndarray:
    """Coerce a scalar, vector-of-one or square array into a ``(p, p)`` matrix."""
    m = np.asarray(c, dtype=float)
    if m.ndim == 0:
        m = m.reshape(1, 1)
        if p is not None and p != 1:
            m = m[0, 0] * np.eye(p)
    elif m.ndim == 1 and m.shape[0] == 1:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")
    if p is not None and m.shape[0] != p:
        raise ShapeError(f"expected a {p}x{p} matrix, got {m.shape}")
    return m


def is_symmetric(m: np.ndarray, tol: float = 1e-12) -> bool:
    scale = max(1.0, float(np.max(np.abs(m))) if m.size else 1.0)
    return bool(np.all(np.abs(m - m.T) <= tol * scale))


def cholesky(cov: np.ndarray, what: str = "covariance") -> np.ndarray:
    """Lower Cholesky factor; failure means ``cov`` is not positive definite."""
    if not is_symmetric(cov):
        raise InvalidCovarianceError(f"{what} is not symmetric")
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise InvalidCovarianceError(f"{what} is not positive definite") from None


def check_psd(cov: np.ndarray, what: str = "covariance", tol: float = 1e-12) -> None:
    if not is_symmetric(cov):
        raise ShapeError(f"{what} is not symmetric")
    eig = np.linalg.eigvalsh(cov) if cov.size else np.zeros(0)
    scale = max(1.0, float(np.max(np.abs(eig))) if eig.size else 1.0)
    if eig.size and eig[0] < -tol * scale:
        raise InvalidCovarianceError(f"{what} is not positive semidefinite")


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def normal_pdf(x, mean, covariance):
    """Density of ``N(mean, covariance)`` at ``x``.

    ``x`` may be a single point (shape ``(p,)``, or a scalar when ``p = 1``)
    or a batch of points with shape ``(N, p)``; a batch returns an array.
    """
    mean = as_vector(mean)
    p = mean.shape[0]
    cov = as_matrix(covariance, p)
    chol = cholesky(cov)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 0 or (x.ndim == 1 and (p > 1 or x.shape[0] == 1))
    if p > 1 and (x.ndim == 0 or x.shape[-1] != p) or x.ndim > 2:
        raise ShapeError(f"points of shape {x.shape} do not match dimension {p}")
    pts = x.reshape(-1, p) if x.ndim <= 1 else x
    if pts.shape[-1] != p:
        raise ShapeError(f"point dimension {pts.shape[-1]} != {p}")
    z = np.linalg.solve(chol, (pts - mean).T)
    log_det = 2.0 * np.sum(np.log(np.diag(chol)))
    out = np.exp(-0.5 * np.sum(z * z, axis=0) - 0.5 * (p * _LOG_2PI + log_det))
    return float(out[0]) if single else out


def gaussian_product_integral(cov_a, mean_a, cov_b, mean_b) -> float:
    """Return ``∫ φ(x; mean_a, cov_a) φ(x; mean_b, cov_b) dx = φ_{cov_a+cov_b}(mean_a-mean_b)``."""
    mean_a = as_vector(mean_a)
    p = mean_a.shape[0]
    mean_b = as_vector(mean_b, p)
    total = as_matrix(cov_a, p) + as_matrix(cov_b, p)
    return normal_pdf(mean_a - mean_b, np.zeros(p), total)


@dataclass(frozen=True, eq=False)
class GaussianComponent:
    weight: float
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        w = float(self.weight)
        if not (0.0 < w <= 1.0):
            raise ConfigError(f"component weight must lie in (0, 1], got {w}")
        mean = as_vector(self.mean)
        cov = as_matrix(self.covariance, mean.shape[0])
        cholesky(cov, "component covariance")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "mean", _readonly(mean))
        object.__setattr__(self, "covariance", _readonly(cov))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Weighted sum of multivariate normal components.

    Weights are rescaled to sum to exactly one when they already do so within
    ``1e-9``; larger discrepancies are rejected as likely typos.
    """

    components: tuple[GaussianComponent, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ConfigError("a mixture needs at least one component")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise ShapeError(f"components disagree on dimension: {sorted(dims)}")
        total = sum(c.weight for c in comps)
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"mixture weights sum to {total!r}, not 1")
        if total != 1.0:
            comps = tuple(
                GaussianComponent(c.weight / total, c.mean, c.covariance) for c in comps
            )
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_arrays(cls, weights: Sequence[float], means, covariances) -> "GaussianMixture":
        weights = list(weights)
        if len(means) != len(weights) or len(covariances) != len(weights):
            raise ShapeError("weights, means and covariances must have equal length")
        return cls(tuple(GaussianComponent(w, m, c) for w, m, c in zip(weights, means, covariances)))

    @classmethod
    def normal(cls, mean=0.0, covariance=1.0) -> "GaussianMixture":
        return cls((GaussianComponent(1.0, mean, covariance),))

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def __len__(self) -> int:
        return len(self.components)

    @cached_property
    def weights(self) -> np.ndarray:
        return _readonly([c.weight for c in self.components])

    @cached_property
    def means(self) -> np.ndarray:
        return _readonly([c.mean for c in self.components])

    @cached_property
    def covariances(self) -> np.ndarray:
        return _readonly([c.covariance for c in self.components])

    @cached_property
    def mean(self) -> np.ndarray:
        return _readonly(self.weights @ self.means)

    @cached_property
    def covariance(self) -> np.ndarray:
        """Overall covariance: within-component plus between-component spread."""
        d = self.means - self.mean
        within = np.einsum("j,jab->ab", self.weights, self.covariances)
        between = np.einsum("j,ja,jb->ab", self.weights, d, d)
        return _readonly(within + between)


def mixture_pdf(mix: GaussianMixture, x):
    """Evaluate the mixture density at one point or a batch of points."""
    total = 0.0
    for c in mix.components:
        total = total + c.weight * normal_pdf(x, c.mean, c.covariance)
    return total


def convolve_with_normal(mix: GaussianMixture, added_cov) -> GaussianMixture:
    """Distribution of ``X + e`` with ``X ~ mix`` and independent ``e ~ N(0, added_cov)``."""
    add = as_matrix(added_cov, mix.dim)
    if not is_symmetric(add):
        raise ShapeError("added covariance is not symmetric")
    check_psd(add, "added covariance")
    return GaussianMixture(
        tuple(GaussianComponent(c.weight, c.mean, c.covariance + add) for c in mix.components)
    )


def char_fn_sq(mix: GaussianMixture, omega):
    """Squared modulus of the characteristic function of ``mix``.

    Accepts one frequency vector or a batch ``(N, p)``; for ``p = 1`` a flat
    array of frequencies is treated as a batch.
    """
    w = np.asarray(mix.weights)
    mu = np.asarray(mix.means)
    cov = np.asarray(mix.covariances)
    p = mix.dim
    om = np.asarray(omega, dtype=float)
    single = om.ndim == 0 or (om.ndim == 1 and p > 1)
    if p == 1:
        om = om.reshape(-1, 1)
    else:
        om = np.atleast_2d(om)
    if om.shape[-1] != p:
        raise ShapeError(f"frequency dimension {om.shape[-1]} != {p}")
    proj = om @ mu.T                                      # (N, m)
    quad = np.einsum("na,jab,nb->nj", om, cov, om)        # (N, m)
    amp = w * np.exp(-0.5 * quad)
    # |Σ a_j e^{iωμ_j}|² = (Σ a_j cos)² + (Σ a_j sin)²
    re = np.sum(amp * np.cos(proj), axis=1)
    im = np.sum(amp * np.sin(proj), axis=1)
    out = re * re + im * im
    return float(out[0]) if single else out


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, stream)``.

    Distinct streams are statistically independent and do not depend on the
    order in which they are created, so replicates can be drawn in parallel.
    """
    if seed < 0 or stream < 0:
        raise ConfigError("seed and stream must be nonnegative")
    key = (int(seed) % 2**64) | (int(stream) % 2**64) << 64
    return np.random.Generator(np.random.Philox(key=key))


def sample(mix: GaussianMixture, n: int, seed: int, stream: int = 0) -> np.ndarray:
    """Draw ``n`` points from ``mix`` as an ``(n, p)`` array.

    Draw order is fixed: ``n`` uniforms pick components by inverse CDF on
    the cumulative weights, then ``n * p`` standard normals are mapped
    through each component's Cholesky factor.
    """
    n = int(n)
    if n < 1:
        raise EmptySampleError("sample size must be at least 1")
    rng = make_rng(seed, stream)
    u = rng.random(n)
    z = rng.standard_normal((n, mix.dim))
    cum = np.cumsum(mix.weights)
    cum[-1] = 1.0
    labels = np.searchsorted(cum, u, side="right")
    labels = np.minimum(labels, len(mix) - 1)
    out = np.empty_like(z)
    for j, c in enumerate(mix.components):
        sel = labels == j
        if np.any(sel):
            out[sel] = c.mean + z[sel] @ np.linalg.cholesky(c.covariance).T
    return out
