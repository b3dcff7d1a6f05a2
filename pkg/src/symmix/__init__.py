"""Semiparametric estimation of two-component location mixtures with a
symmetric component density.

The observed density is lam*f(x - mu1) + (1 - lam)*f(x - mu2) with f even
and unknown.  The package estimates (lam, mu1, mu2) by minimizing a
symmetry defect of the unmixed distribution, recovers f and its CDF
nonparametrically, and ships a parametric EM baseline plus Monte Carlo
tooling.
"""

from .contrast import (
    ContrastValue,
    P1Objective,
    P2Objective,
    contrast_p1,
    contrast_p2,
    contrast_quadrature,
    symmetrized_ecdf,
    symmetrized_smoothed_cdf,
)
from .em import EmConfig, em_fit, loglik
from .empirical import (
    TRIANGULAR_KERNEL,
    Bandwidth,
    KernelSpec,
    Sample,
    default_bandwidth,
    ecdf,
    kde,
    smoothed_cdf,
    triangular_kernel,
    triangular_kernel_cdf,
)
from .estimate import (
    DensityEstimate,
    FitResult,
    default_grid,
    default_space,
    estimate_component_cdf,
    estimate_component_density,
    fit_lambda,
    fit_theta,
    jackknife_se,
    moment_lambda,
    symmetric_grid,
)
from .estimators import (
    GaussianMixtureMLE,
    KnownLocationsMixture,
    ShiftedSymmetricMixture,
)
from .operators import (
    Curve,
    MixtureParams,
    ParamSpace,
    SeriesTruncation,
    apply_mixing,
    apply_unmixing,
    reflect_cdf,
    reflect_density,
    symmetrized_mixture_cdf,
)
from .optimize import (
    OptimConfig,
    OptimResult,
    default_starts,
    minimize_1d,
    minimize_box,
)
from .simulate import (
    McReport,
    Scenario,
    gaussian_mixture_cdf,
    gaussian_mixture_pdf,
    load_scenario,
    run_monte_carlo,
    sample_gaussian_mixture,
    sample_trimodal,
    save_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "Bandwidth",
    "ContrastValue",
    "Curve",
    "DensityEstimate",
    "EmConfig",
    "FitResult",
    "GaussianMixtureMLE",
    "KernelSpec",
    "KnownLocationsMixture",
    "McReport",
    "MixtureParams",
    "OptimConfig",
    "OptimResult",
    "P1Objective",
    "P2Objective",
    "ParamSpace",
    "Sample",
    "Scenario",
    "SeriesTruncation",
    "ShiftedSymmetricMixture",
    "TRIANGULAR_KERNEL",
    "apply_mixing",
    "apply_unmixing",
    "contrast_p1",
    "contrast_p2",
    "contrast_quadrature",
    "default_bandwidth",
    "default_grid",
    "default_space",
    "default_starts",
    "ecdf",
    "em_fit",
    "estimate_component_cdf",
    "estimate_component_density",
    "fit_lambda",
    "fit_theta",
    "gaussian_mixture_cdf",
    "gaussian_mixture_pdf",
    "jackknife_se",
    "kde",
    "load_scenario",
    "loglik",
    "minimize_1d",
    "minimize_box",
    "moment_lambda",
    "reflect_cdf",
    "reflect_density",
    "run_monte_carlo",
    "sample_gaussian_mixture",
    "sample_trimodal",
    "save_scenario",
    "smoothed_cdf",
    "symmetric_grid",
    "symmetrized_ecdf",
    "symmetrized_mixture_cdf",
    "symmetrized_smoothed_cdf",
    "triangular_kernel",
    "triangular_kernel_cdf",
    "__version__",
]
