"""The Berkson density estimator with a normal kernel and normal error.

With ``S = HᵀΣ_K H`` the estimate has the closed form

    f̃_{Y,H}(y) = n⁻¹ Σ_i φ_{S + Σ_e}(y - X_i),

so the unsmoothed estimator (``H = 0``) is just an average of error densities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import simpson

from .errors import DegenerateModelError, EmptySampleError, ShapeError, UnsupportedDimensionError
from .gaussmix import as_matrix, check_psd
from .model import BerksonModel, as_bandwidth
from ._parallel import parallel_map

DEFAULT_POINTS = 512
CHUNK_ELEMENTS = 1 << 20


@dataclass(frozen=True, eq=False)
class DensityCurve:
    grid: np.ndarray
    values: np.ndarray

    def integral(self) -> float:
        """Simpson integral over a one-dimensional grid."""
        if self.grid.ndim != 1:
            raise UnsupportedDimensionError("integral is defined for one-dimensional grids")
        return float(simpson(self.values, x=self.grid))


def as_sample(sample) -> np.ndarray:
    """Coerce to an ``(n, p)`` float array; a flat array is a one-dimensional sample."""
    x = np.asarray(sample, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ShapeError(f"sample must be 1-D or 2-D, got shape {x.shape}")
    if x.shape[0] == 0:
        raise EmptySampleError("sample is empty")
    if not np.all(np.isfinite(x)):
        raise ShapeError("sample contains non-finite values")
    return x


def _total_cov(p: int, error_cov, bw, kernel_cov) -> np.ndarray:
    err = as_matrix(error_cov, p)
    check_psd(err, "error covariance")
    ker = np.eye(p) if kernel_cov is None else as_matrix(kernel_cov, p)
    total = as_bandwidth(bw).smoothing_cov(ker) + err
    eig = np.linalg.eigvalsh(total)
    if eig[0] <= 1e-14 * max(1.0, float(eig[-1])):
        raise DegenerateModelError("smoothing plus error covariance is singular")
    return total


def evaluate_estimator(sample, error_cov, bw, grid, kernel_cov=None, threads: Optional[int] = 1) -> DensityCurve:
    """Evaluate ``f̃_{Y,H}`` at the grid points.

    Parameters
    ----------
    sample : array_like, shape (n,) or (n, p)
    error_cov : float or (p, p) array
    bw : float, (p, p) array or BandwidthSpec
    grid : array_like
        Shape ``(N,)`` when ``p = 1``, else ``(N, p)``.
    threads : int, optional
        Grid chunks are evaluated concurrently and reassembled in order.
    """
    x = as_sample(sample)
    n, p = x.shape
    g = np.asarray(grid, dtype=float)
    pts = g[:, None] if (p == 1 and g.ndim == 1) else g
    if pts.ndim != 2 or pts.shape[1] != p:
        raise ShapeError(f"grid of shape {g.shape} does not match dimension {p}")
    total = _total_cov(p, error_cov, bw, kernel_cov)
    L = np.linalg.cholesky(total)
    Linv = np.linalg.inv(L)
    norm = 1.0 / ((2.0 * np.pi) ** (p / 2.0) * np.prod(np.diag(L)) * n)
    zx = x @ Linv.T

    def chunk(bounds):
        a, b = bounds
        zy = pts[a:b] @ Linv.T
        d2 = np.sum((zy[:, None, :] - zx[None, :, :]) ** 2, axis=-1)
        return norm * np.sum(np.exp(-0.5 * d2), axis=1)

    step = max(1, CHUNK_ELEMENTS // (n * p))
    parts = [(a, min(a + step, len(pts))) for a in range(0, len(pts), step)]
    values = np.concatenate(parallel_map(chunk, parts, threads)) if parts else np.zeros(0)
    return DensityCurve(g.copy(), values)


def estimator_char_form(sample, error_cov, bw, omega, kernel_cov=None) -> np.ndarray:
    """Fourier transform ``K̂(hω) f̂_e(ω) n⁻¹ Σ_j e^{iωX_j}`` of the estimator (one dimension)."""
    x = as_sample(sample)
    if x.shape[1] != 1:
        raise UnsupportedDimensionError("characteristic form is one-dimensional")
    err = float(as_matrix(error_cov, 1)[0, 0])
    ker = np.eye(1) if kernel_cov is None else as_matrix(kernel_cov, 1)
    s = float(as_bandwidth(bw).smoothing_cov(ker)[0, 0])
    w = np.asarray(omega, dtype=float)
    ecf = np.mean(np.exp(1j * np.multiply.outer(w, x[:, 0])), axis=-1)
    return np.exp(-0.5 * (s + err) * w * w) * ecf


def default_grid(sample, error_var: float, h: float = 0.0, points: int = DEFAULT_POINTS) -> np.ndarray:
    """``points`` equispaced values over the sample range padded by ``4 σ_tot``.

    ``σ_tot² = sample variance + error_var + h²``.
    """
    x = as_sample(sample)
    if x.shape[1] != 1:
        raise UnsupportedDimensionError("default grid is one-dimensional")
    v = float(np.var(x[:, 0], ddof=1)) if x.shape[0] > 1 else 0.0
    sd = np.sqrt(v + float(error_var) + h * h)
    return np.linspace(x.min() - 4.0 * sd, x.max() + 4.0 * sd, points)


def model_grid(model: BerksonModel, h: float = 0.0, points: int = DEFAULT_POINTS, width: float = 4.0) -> np.ndarray:
    """Sample-independent grid covering every component of ``f_Y`` by ``width`` std."""
    if model.dim != 1:
        raise UnsupportedDimensionError("model grid is one-dimensional")
    fx = model.fx
    sd = np.sqrt(fx.covariances[:, 0, 0] + model.error_cov[0, 0] + h * h * model.kernel_cov[0, 0])
    mu = fx.means[:, 0]
    return np.linspace(float(np.min(mu - width * sd)), float(np.max(mu + width * sd)), points)
