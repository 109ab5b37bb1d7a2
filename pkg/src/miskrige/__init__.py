"""Kriging with misspecified kernels.

A small numerical library for Gaussian-process (kriging) interpolation with
four kernel families -- Matern, truncated trigonometric, Daubechies wavelet
multiscale, and 1D finite element -- together with design-point geometry,
error norms, and a convergence-rate study harness.
"""

from .geometry import Region, DesignSet, make_design, fill_distance, separation_radius, mesh_ratio
from .kernels import (
    MaternSpec,
    KLTrigSpec,
    WaveletSpec,
    FemSpec,
    make_kernel,
    nominal_smoothness,
    spec_from_json,
    spec_to_json,
)
from .kriging import (
    FactorizationFailed,
    NumericalBreakdown,
    GramMatrix,
    KrigingModel,
    assemble_gram,
    fit,
    predict_mean,
    predict_variance,
    min_eigenvalue,
    residual_on_design,
)
from .functions import (
    TargetFunction,
    fourier_target,
    fourier_target_from_coefficients,
    truncated_power_target,
    smooth_target,
    bump_window,
)
from .analysis import ErrorPair, RateFit, l2_error, linf_error, fit_rate
from .experiments import ConfigError, StudyConfig, StudyResult, run_study, predicted_slopes

__version__ = "0.1.0"
