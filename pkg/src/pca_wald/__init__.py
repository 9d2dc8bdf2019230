"""Wald-statistic inference for spectral projectors in high-dimensional PCA.

The package is organized around six pieces: exact spectral covariance models
(:mod:`pca_wald.covmodel`), Kronecker-form operators including the whitening
square root and its plug-in (:mod:`pca_wald.linops`), the projector
perturbation expansion with proven bounds (:mod:`pca_wald.perturb`),
seed-deterministic Gaussian sampling (:mod:`pca_wald.sampling`), the Wald
statistic with confidence ellipsoids and distribution functions
(:mod:`pca_wald.inference`), and a Monte Carlo experiment engine with a CLI
(:mod:`pca_wald.mc`).
"""

from pca_wald.covmodel import (
    ClusterIndex,
    CovarianceModel,
    effective_rank,
    make_custom,
    make_decay,
    make_spiked,
    matrix_power,
    projector,
    spectral_gap,
)
from pca_wald.errors import (
    ConfigError,
    PcaWaldError,
    SingleClusterError,
    SingularCovarianceError,
)
from pca_wald.inference import (
    chisq_cdf,
    chisq_quantile,
    check_assumptions,
    confidence_ellipsoid_test,
    linear_term_identity_check,
    normal_cdf,
    normal_quantile,
    wald_statistic,
)
from pca_wald.linops import (
    FisherOperator,
    KroneckerSum,
    fisher_sqrt,
    kron_apply,
    limiting_covariance,
    plugin_fisher_sqrt,
    resolvent,
)
from pca_wald.mc import ExperimentConfig, ExperimentSummary, ks_distance, run
from pca_wald.perturb import (
    PerturbationExpansion,
    check_bounds,
    expand,
    linear_term,
    opnorm_concentration_check,
    perturbed_projector,
    second_order_term,
)
from pca_wald.sampling import (
    SampleBatch,
    empirical_covariance,
    empirical_spectral,
    sample,
)
from pca_wald.rng import derive_seed

__version__ = "0.1.0"

__all__ = [
    "ClusterIndex", "CovarianceModel", "ExperimentConfig", "ExperimentSummary",
    "FisherOperator", "KroneckerSum", "PcaWaldError", "ConfigError",
    "SingleClusterError", "SingularCovarianceError", "PerturbationExpansion",
    "SampleBatch", "check_assumptions", "check_bounds", "chisq_cdf",
    "chisq_quantile", "confidence_ellipsoid_test", "derive_seed",
    "effective_rank", "empirical_covariance", "empirical_spectral", "expand",
    "fisher_sqrt", "kron_apply", "ks_distance", "limiting_covariance",
    "linear_term", "linear_term_identity_check", "make_custom", "make_decay",
    "make_spiked", "matrix_power", "normal_cdf", "normal_quantile",
    "opnorm_concentration_check", "perturbed_projector", "plugin_fisher_sqrt",
    "projector", "resolvent", "run", "sample", "second_order_term",
    "spectral_gap", "wald_statistic",
]
