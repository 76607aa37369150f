"""Problem definition shared by every MISE routine: the Berkson model and bandwidths."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, ShapeError
from .gaussmix import GaussianMixture, as_matrix, as_vector, check_psd, cholesky


@dataclass(frozen=True, eq=False)
class BerksonModel:
    """``Y = X + e`` with ``X ~ fx``, ``e ~ N(0, error_cov)`` and a normal kernel.

    ``error_cov`` may be singular (zero means no error); ``kernel_cov`` must be
    positive definite and defaults to the identity.
    """

    fx: GaussianMixture
    error_cov: np.ndarray
    kernel_cov: np.ndarray = field(default=None)

    def __post_init__(self):
        p = self.fx.dim
        err = as_matrix(self.error_cov, p)
        check_psd(err, "error covariance")
        ker = np.eye(p) if self.kernel_cov is None else as_matrix(self.kernel_cov, p)
        cholesky(ker, "kernel covariance")
        for name, m in (("error_cov", err), ("kernel_cov", ker)):
            m = np.array(m, dtype=float)
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    @classmethod
    def isotropic(cls, fx: GaussianMixture, sigma_eps2: float, kernel_cov=None) -> "BerksonModel":
        """Error covariance ``sigma_eps2 * I``."""
        if sigma_eps2 < 0:
            raise DomainError("error variance must be nonnegative")
        return cls(fx, sigma_eps2 * np.eye(fx.dim), kernel_cov)

    @property
    def dim(self) -> int:
        return self.fx.dim

    @property
    def has_error(self) -> bool:
        return bool(np.any(self.error_cov != 0.0))

    def without_error(self) -> "BerksonModel":
        return BerksonModel(self.fx, np.zeros((self.dim, self.dim)), self.kernel_cov)

    def with_error(self, error_cov) -> "BerksonModel":
        return BerksonModel(self.fx, error_cov, self.kernel_cov)


@dataclass(frozen=True, eq=False)
class BandwidthSpec:
    """Bandwidth as a scalar ``h``, squared diagonal ``s = (h_1², ..., h_p²)`` or full ``H``.

    Use the ``scalar``, ``diagonal`` and ``full`` constructors. ``H`` may be
    singular: a zero bandwidth is legal whenever the error covariance is
    nondegenerate.
    """

    kind: str
    value: np.ndarray

    def __post_init__(self):
        v = np.array(self.value, dtype=float)
        if self.kind == "scalar":
            if v.ndim != 0:
                raise ShapeError("scalar bandwidth must be a number")
            if not np.isfinite(v) or v < 0:
                raise DomainError(f"bandwidth must be a finite number >= 0, got {float(v)}")
        elif self.kind == "diagonal":
            v = as_vector(v)
            if not np.all(np.isfinite(v)) or np.any(v < 0):
                raise DomainError("diagonal squared bandwidths must be >= 0")
        elif self.kind == "full":
            v = as_matrix(v)
            check_psd(v, "bandwidth matrix")
        else:
            raise ConfigError(f"unknown bandwidth kind {self.kind!r}")
        v.setflags(write=False)
        object.__setattr__(self, "value", v)

    @classmethod
    def scalar(cls, h: float) -> "BandwidthSpec":
        return cls("scalar", h)

    @classmethod
    def diagonal(cls, s) -> "BandwidthSpec":
        return cls("diagonal", s)

    @classmethod
    def full(cls, H) -> "BandwidthSpec":
        return cls("full", H)

    def matrix(self, p: int) -> np.ndarray:
        """The bandwidth matrix ``H`` in dimension ``p``."""
        if self.kind == "scalar":
            return float(self.value) * np.eye(p)
        if self.kind == "diagonal":
            return np.diag(np.sqrt(as_vector(self.value, p)))
        return as_matrix(self.value, p)

    def smoothing_cov(self, kernel_cov) -> np.ndarray:
        """Effective smoothing covariance ``S = Hᵀ Σ_K H``."""
        k = np.asarray(kernel_cov, dtype=float)
        H = self.matrix(k.shape[0])
        S = H.T @ k @ H
        return 0.5 * (S + S.T)


def as_bandwidth(bw) -> BandwidthSpec:
    if isinstance(bw, BandwidthSpec):
        return bw
    arr = np.asarray(bw, dtype=float)
    if arr.ndim == 0:
        return BandwidthSpec.scalar(float(arr))
    if arr.ndim == 2:
        return BandwidthSpec.full(arr)
    raise ShapeError("pass a number or matrix, or use BandwidthSpec.diagonal for squared diagonals")
