"""Experiment catalog and generators for ratio tables, ratio curves and the NO2 pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Optional, Sequence

import numpy as np

from .bandwidth import optimal_scalar_bandwidth, rule_of_thumb_hy_gaussian, silverman_hx
from .errors import ConfigError, DomainError, RecordRejectedError, ShapeError
from .estimator import default_grid, evaluate_estimator
from .gaussmix import GaussianMixture
from .mise_exact import exact_mise
from .model import BerksonModel
from .spectral import spectral_moments
from ._parallel import parallel_map

ERROR_VARIANCES = (2.0, 1.0, 0.5, 0.25, 0.125)


@dataclass(frozen=True)
class DensityCatalogEntry:
    name: str
    slug: str
    mixture: GaussianMixture


def _plus_minus():
    c = 0.64
    plus = np.array([[1.0, c, 0.0], [c, 1.0, c], [0.0, c, 1.0]])
    minus = np.array([[1.0, -c, 0.0], [-c, 1.0, -c], [0.0, -c, 1.0]])
    return plus, minus


def catalog_1d() -> tuple[DensityCatalogEntry, ...]:
    """Normal, Bimodal 1, Bimodal 2 and Trimodal; covariances are variances."""
    mk = GaussianMixture.from_arrays
    return (
        DensityCatalogEntry("Normal", "normal", mk([1.0], [[0.0]], [1.0])),
        DensityCatalogEntry("Bimodal 1", "bimodal-1", mk([0.7, 0.3], [[0.0], [3.0]], [1.0, 1.0])),
        DensityCatalogEntry("Bimodal 2", "bimodal-2", mk([0.5, 0.5], [[-6.0], [6.0]], [1.0, 1.0])),
        DensityCatalogEntry(
            "Trimodal", "trimodal", mk([0.4, 0.2, 0.4], [[-4.0], [0.0], [3.0]], [2.0, 0.3, 1.0])
        ),
    )


def catalog_3d() -> tuple[DensityCatalogEntry, ...]:
    plus, minus = _plus_minus()
    eye = np.eye(3)
    zero, ones, six = np.zeros(3), np.ones(3), np.array([6.0, 0.0, 0.0])
    mk = GaussianMixture.from_arrays
    return (
        DensityCatalogEntry("Multi Normal", "multi-normal", mk([1.0], [zero], [eye])),
        DensityCatalogEntry("Multi 2-Comp 1", "multi-2comp-1", mk([0.7, 0.3], [zero, ones], [plus, minus])),
        DensityCatalogEntry("Multi 2-Comp 2", "multi-2comp-2", mk([0.5, 0.5], [six, -six], [eye, eye])),
        DensityCatalogEntry(
            "Multi 3-Comp", "multi-3comp", mk([0.4, 0.2, 0.4], [zero, ones, zero], [plus, minus, minus])
        ),
    )


def _norm_name(s: str) -> str:
    return "".join(ch for ch in s.lower() if ch.isalnum())


def get_density(name: str) -> DensityCatalogEntry:
    """Look up a catalog entry by slug or display name (case and punctuation insensitive)."""
    key = _norm_name(name)
    for entry in catalog_1d() + catalog_3d():
        if key in (_norm_name(entry.slug), _norm_name(entry.name)):
            return entry
    raise ConfigError(f"unknown density {name!r}")


# reference (MISE(0)/MISE(h_Y), MISE(h_X)/MISE(h_Y)) pairs to two decimals, keyed by table, density, error variance
REFERENCE_TABLES: dict[str, dict] = {
    "1d-n50": {
        "n": 50, "dim": 1,
        "cells": {
            "normal": [(1.02, 1.18), (1.05, 1.17), (1.13, 1.11), (1.32, 1.05), (1.70, 1.02)],
            "bimodal-1": [(1.08, 1.01), (1.15, 1.01), (1.26, 1.01), (1.50, 1.00), (1.92, 1.00)],
            "bimodal-2": [(1.03, 1.02), (1.07, 1.03), (1.16, 1.03), (1.37, 1.01), (1.76, 1.01)],
            "trimodal": [(1.18, 1.05), (1.24, 1.04), (1.30, 1.01), (1.46, 1.00), (1.77, 1.00)],
        },
    },
    "1d-n100": {
        "n": 100, "dim": 1,
        "cells": {
            "normal": [(1.01, 1.24), (1.03, 1.24), (1.07, 1.18), (1.19, 1.09), (1.46, 1.04)],
            "bimodal-1": [(1.04, 1.03), (1.08, 1.03), (1.15, 1.03), (1.31, 1.02), (1.62, 1.01)],
            "bimodal-2": [(1.02, 1.04), (1.04, 1.06), (1.09, 1.06), (1.24, 1.03), (1.53, 1.01)],
            "trimodal": [(1.09, 1.02), (1.12, 1.01), (1.16, 1.00), (1.27, 1.00), (1.50, 1.00)],
        },
    },
    "3d-n100": {
        "n": 100, "dim": 3,
        "cells": {
            "multi-normal": [(1.02, 1.76), (1.07, 1.63), (1.24, 1.35), (1.80, 1.14), (3.38, 1.05)],
            "multi-2comp-1": [(1.02, 1.13), (1.06, 1.12), (1.16, 1.08), (1.40, 1.05), (2.00, 1.02)],
            "multi-2comp-2": [(1.04, 1.28), (1.12, 1.28), (1.39, 1.17), (2.18, 1.07), (4.34, 1.02)],
            "multi-3comp": [(1.02, 1.20), (1.07, 1.15), (1.21, 1.07), (1.55, 1.02), (2.32, 1.01)],
        },
    },
    "3d-n500": {
        "n": 500, "dim": 3,
        "cells": {
            "multi-normal": [(1.00, 2.66), (1.01, 2.54), (1.06, 2.00), (1.25, 1.45), (1.94, 1.16)],
            "multi-2comp-1": [(1.00, 1.27), (1.01, 1.30), (1.03, 1.29), (1.10, 1.23), (1.30, 1.14)],
            "multi-2comp-2": [(1.01, 1.72), (1.03, 1.82), (1.10, 1.57), (1.41, 1.26), (2.37, 1.09)],
            "multi-3comp": [(1.01, 1.37), (1.02, 1.34), (1.05, 1.25), (1.14, 1.16), (1.41, 1.09)],
        },
    },
}


def reference_ratio(table: str, slug: str, sigma_eps2: float) -> tuple[float, float]:
    return REFERENCE_TABLES[table]["cells"][slug][ERROR_VARIANCES.index(sigma_eps2)]


def round_half_up(x: float, places: int = 2) -> float:
    """Decimal rounding with ties away from zero, applied to the shortest repr of ``x``."""
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class RatioCell:
    density: str
    sigma_eps2: float
    n: int
    h_y: float
    h_x: float
    mise_hy: float
    mise_hx: float
    mise_zero: float

    @property
    def ratio_zero(self) -> float:
        return self.mise_zero / self.mise_hy

    @property
    def ratio_hx(self) -> float:
        return self.mise_hx / self.mise_hy

    def display(self) -> tuple[float, float]:
        return round_half_up(self.ratio_zero), round_half_up(self.ratio_hx)


def ratio_cell(entry: DensityCatalogEntry, sigma_eps2: float, n: int) -> RatioCell:
    """Exact ``h_Y``, ``h_X`` and the three MISE values for one configuration."""
    if not sigma_eps2 > 0:
        raise DomainError("error variance must be > 0")
    model = BerksonModel.isotropic(entry.mixture, sigma_eps2)
    h_y = float(optimal_scalar_bandwidth(model, n, "Y").value)
    h_x = float(optimal_scalar_bandwidth(model, n, "X").value)
    return RatioCell(
        entry.slug, float(sigma_eps2), int(n), h_y, h_x,
        exact_mise(model, h_y, n), exact_mise(model, h_x, n), exact_mise(model, 0.0, n),
    )


def ratio_table(
    densities: Iterable,
    error_variances: Sequence[float] = ERROR_VARIANCES,
    n: int = 50,
    threads: Optional[int] = None,
) -> list[RatioCell]:
    """Cells for every (density, error variance) pair, in that nested order.

    ``densities`` holds catalog entries or names. The error covariance is
    ``σ_e² I`` in the density's own dimension.
    """
    entries = [d if isinstance(d, DensityCatalogEntry) else get_density(d) for d in densities]
    jobs = [(e, float(s)) for e in entries for s in error_variances]
    return parallel_map(lambda job: ratio_cell(job[0], job[1], n), jobs, threads)


@dataclass(frozen=True)
class RatioCurvePoint:
    sigma_eps2: float
    n: int
    h_y: float
    h_star: float

    @property
    def ratio(self) -> float:
        return self.h_y / self.h_star


def default_n_grid(points: int = 25, lo: float = 10.0, hi: float = 1e5) -> list[int]:
    """Log-spaced integer sample sizes."""
    raw = np.geomspace(lo, hi, points)
    return sorted({int(round(v)) for v in raw})


def ratio_curve(
    entry,
    error_variances: Sequence[float] = ERROR_VARIANCES,
    n_grid: Optional[Sequence[int]] = None,
    threads: Optional[int] = None,
) -> list[RatioCurvePoint]:
    """``h_Y / h*_Y`` over sample sizes for each error variance (one dimension)."""
    entry = entry if isinstance(entry, DensityCatalogEntry) else get_density(entry)
    if entry.mixture.dim != 1:
        raise ConfigError("ratio curves are one-dimensional")
    n_grid = default_n_grid() if n_grid is None else [int(v) for v in n_grid]
    models = {s: BerksonModel.isotropic(entry.mixture, s) for s in error_variances}
    moments = {s: spectral_moments(m) for s, m in models.items()}

    def point(job):
        s, n = job
        h_y = float(optimal_scalar_bandwidth(models[s], n, "Y").value)
        return RatioCurvePoint(float(s), n, h_y, moments[s].asymptotic_bandwidth(n))

    return parallel_map(point, [(s, n) for s in error_variances for n in n_grid], threads)


# -- NO2 exposure pipeline --------------------------------------------------------

NO2_INTERCEPT = 1.22
NO2_KITCHEN = 0.3
NO2_BATHROOM = 0.33
NO2_ERROR_VARIANCE = 0.006
SYNTHETIC_SEED = 20240611


def no2_transform(records) -> np.ndarray:
    """``X = 1.22 + 0.3 ln W_k + 0.33 ln W_b`` for rows ``(W_k, W_b)``.

    Rows are numbered from 1 in rejection messages.
    """
    w = np.asarray(records, dtype=float)
    if w.ndim != 2 or w.shape[1] != 2:
        raise ShapeError("records must have two columns (W_k, W_b)")
    bad = np.flatnonzero(~(np.all(np.isfinite(w), axis=1) & np.all(w > 0, axis=1)))
    if bad.size:
        raise RecordRejectedError("concentrations must be finite and > 0", row=int(bad[0]) + 1)
    return NO2_INTERCEPT + NO2_KITCHEN * np.log(w[:, 0]) + NO2_BATHROOM * np.log(w[:, 1])


@dataclass(frozen=True, eq=False)
class No2Result:
    x: np.ndarray
    bandwidths: dict
    curves: dict


def no2_pipeline(records, sigma_eps2: float = NO2_ERROR_VARIANCE, grid=None, points: int = 512) -> No2Result:
    """Estimate the exposure density three ways: no smoothing, Silverman ``h̃_X`` and rule-of-thumb ``h̃_Y``.

    Sample variances use ``ddof=1``; the IQR uses linear percentile
    interpolation.
    """
    if not sigma_eps2 > 0:
        raise DomainError("error variance must be > 0")
    x = no2_transform(records)
    n = x.size
    if n < 2:
        raise DomainError("need at least two records")
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75.0, 25.0])
    bws = {
        "zero": 0.0,
        "hx": silverman_hx(sd, float(q75 - q25), n),
        "hy": rule_of_thumb_hy_gaussian(sd * sd, sigma_eps2, n),
    }
    if grid is None:
        grid = default_grid(x, sigma_eps2, max(bws.values()), points)
    curves = {k: evaluate_estimator(x, sigma_eps2, h, grid) for k, h in bws.items()}
    return No2Result(x, bws, curves)


def synthetic_no2_records(n: int = 200, seed: int = SYNTHETIC_SEED) -> np.ndarray:
    """Stand-in concentration records whose exposure ``X`` is bimodal.

    ``X`` is an equal mixture of ``N(2.4, 0.12²)`` and ``N(3.2, 0.12²)``;
    ``ln W_b ~ N(3, 0.3²)`` and ``W_k`` is solved from the exposure equation.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    labels = rng.random(n) < 0.5
    x = np.where(labels, 2.4, 3.2) + 0.12 * rng.standard_normal(n)
    ln_wb = 3.0 + 0.3 * rng.standard_normal(n)
    ln_wk = (x - NO2_INTERCEPT - NO2_BATHROOM * ln_wb) / NO2_KITCHEN
    return np.column_stack([np.exp(ln_wk), np.exp(ln_wb)])


def count_local_maxima(values) -> int:
    """Interior strict local maxima; a flat-topped peak counts once."""
    v = np.asarray(values, dtype=float)
    d = np.sign(np.diff(v))
    d = d[d != 0]
    return int(np.sum((d[:-1] > 0) & (d[1:] < 0)))

