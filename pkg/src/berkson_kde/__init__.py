"""Kernel density estimation under Berkson measurement error.

Exact and spectral MISE for normal-mixture models, bandwidth selectors,
replicate experiments and a command-line front end (``berkson-kde``).
"""

from .bandwidth import (
    BandwidthResult,
    QuadraticForm,
    asymptotic_bandwidth,
    diagonal_qp,
    diagonal_quadratic_form,
    full_bandwidth_matrices,
    optimal_scalar_bandwidth,
    rule_of_thumb_hy,
    rule_of_thumb_hy_gaussian,
    silverman_hx,
)
from .errors import (
    BerksonError,
    BracketExhaustedError,
    ConditioningError,
    ConfigError,
    CsvParseError,
    DegenerateModelError,
    DivergenceError,
    DomainError,
    EmptySampleError,
    InvalidCovarianceError,
    NumericalError,
    RecordRejectedError,
    ShapeError,
    UnsupportedDimensionError,
)
from .estimator import DensityCurve, default_grid, estimator_char_form, evaluate_estimator, model_grid
from .experiments import (
    DensityCatalogEntry,
    RatioCell,
    RatioCurvePoint,
    catalog_1d,
    catalog_3d,
    get_density,
    no2_pipeline,
    ratio_curve,
    ratio_table,
)
from .gaussmix import (
    GENERATOR,
    GaussianComponent,
    GaussianMixture,
    char_fn_sq,
    convolve_with_normal,
    gaussian_product_integral,
    mixture_pdf,
    normal_pdf,
    sample,
)
from .mise_exact import OmegaMatrices, ScalarMiseProfile, exact_ise_decomposition, exact_mise, mise_for_fx, omega_matrices
from .model import BandwidthSpec, BerksonModel
from .montecarlo import BandResult, monte_carlo_ise, quantile_bands
from .spectral import ErrorCharSq, SpectralMoments, error_char_sq_gaussian, fourier_mise, spectral_moments

__version__ = "0.1.0"

__all__ = [
    "asymptotic_bandwidth",
    "BandResult",
    "BandwidthResult",
    "BandwidthSpec",
    "BerksonError",
    "BerksonModel",
    "BracketExhaustedError",
    "catalog_1d",
    "catalog_3d",
    "char_fn_sq",
    "ConditioningError",
    "ConfigError",
    "convolve_with_normal",
    "CsvParseError",
    "default_grid",
    "DegenerateModelError",
    "DensityCatalogEntry",
    "DensityCurve",
    "diagonal_qp",
    "diagonal_quadratic_form",
    "DivergenceError",
    "DomainError",
    "EmptySampleError",
    "error_char_sq_gaussian",
    "ErrorCharSq",
    "estimator_char_form",
    "evaluate_estimator",
    "exact_ise_decomposition",
    "exact_mise",
    "fourier_mise",
    "full_bandwidth_matrices",
    "gaussian_product_integral",
    "GaussianComponent",
    "GaussianMixture",
    "GENERATOR",
    "get_density",
    "InvalidCovarianceError",
    "mise_for_fx",
    "mixture_pdf",
    "model_grid",
    "monte_carlo_ise",
    "no2_pipeline",
    "normal_pdf",
    "NumericalError",
    "omega_matrices",
    "OmegaMatrices",
    "optimal_scalar_bandwidth",
    "QuadraticForm",
    "quantile_bands",
    "ratio_curve",
    "ratio_table",
    "RatioCell",
    "RatioCurvePoint",
    "RecordRejectedError",
    "rule_of_thumb_hy",
    "rule_of_thumb_hy_gaussian",
    "sample",
    "ScalarMiseProfile",
    "ShapeError",
    "silverman_hx",
    "spectral_moments",
    "SpectralMoments",
    "UnsupportedDimensionError",
]

