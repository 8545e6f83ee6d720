"""Work statistics for sudden quenches: exact spectra, smoothed models,
random-matrix baselines, and the CLI pipelines tying them together."""

from .errors import FitFailure, NumericalFailure
from .fitkit import (FitResult, Histogram, compare_models, fit_curve,
                     uniform_edges, weighted_histogram)
from .hamiltonians import ChainParams, SectorOperator, build_h1, build_h2
from .sectors import SymmetrySector, build_basis, parity_project
from .smooth import (GaussianDensityModel, SFModel, SmoothedCurve, fit_density,
                     fit_sf, n_eff, pdf_distance, sf_model_from_moments,
                     smoothed_work_pdf)
from .spectral import Spectrum, eigh, level_density, overlap_matrix, spacing_stats
from .work_stats import (PointMassDistribution, ThermalWeights, exact_work_pdf,
                         exact_work_pdf_histogram, jarzynski_check, sf_centroid,
                         sf_variance, smoothed_sf_histogram, strength_function,
                         thermal_weights)

__version__ = "0.1.0"

__all__ = [
    "ChainParams", "FitFailure", "FitResult", "GaussianDensityModel",
    "Histogram", "NumericalFailure", "PointMassDistribution", "SFModel",
    "SectorOperator", "SmoothedCurve", "Spectrum", "SymmetrySector",
    "ThermalWeights", "build_basis", "build_h1", "build_h2", "compare_models",
    "eigh", "exact_work_pdf", "exact_work_pdf_histogram", "fit_curve",
    "fit_density", "fit_sf", "jarzynski_check", "level_density", "n_eff",
    "overlap_matrix", "parity_project", "pdf_distance", "sf_centroid",
    "sf_model_from_moments", "sf_variance", "smoothed_sf_histogram",
    "smoothed_work_pdf", "spacing_stats", "strength_function",
    "thermal_weights", "uniform_edges", "weighted_histogram",
]
