"""Calibration assessment for multivariate Gaussian ensemble forecasts.

Implements the theoretical, naive, adjusted, and fair sample Box ordinate
transforms, Kolmogorov-Smirnov uniformity assessment, a simulation harness for
miscalibration experiments, and a verification front-end for ensemble
forecast/observation datasets.
"""

__version__ = "0.1.0"

from .bot import (
    SAMPLE_VARIANTS,
    VARIANTS,
    EnsembleCase,
    GaussianLaw,
    bot_adjusted,
    bot_fair,
    bot_naive,
    bot_theoretical,
    fair_scale,
)
from .matstat import (
    CholeskyFactor,
    NormalSource,
    RngStream,
    SpectralDecomposition,
    augmented_moments,
    cholesky,
    ensemble_moments,
    mahalanobis_sq,
    mvn_sample,
    solve_spd,
    sym_eigen,
)
from .scenarios import (
    Kind,
    ExperimentReport,
    ScenarioConfig,
    SweepPoint,
    alternating_covariance,
    ar1_covariance,
    bias_vector,
    build_pair,
    named_config,
    power_curve,
    rejection_rate,
    run_experiment,
)
from .specialfn import (
    chi2_cdf,
    chi2_quantile,
    f_cdf,
    kolmogorov_pvalue,
    reg_inc_beta,
    reg_lower_gamma,
)
from .uniformity import BotSeries, histogram, ks_statistic, ks_test
from .verifydata import (
    VerificationDataset,
    VerifyPlan,
    bias_diagnostics,
    load_dataset,
    run_verification,
    synth_dataset,
    write_jsonl,
)

__all__ = [
    "__version__",
    "SAMPLE_VARIANTS",
    "VARIANTS",
    "EnsembleCase",
    "GaussianLaw",
    "bot_adjusted",
    "bot_fair",
    "bot_naive",
    "bot_theoretical",
    "fair_scale",
    "CholeskyFactor",
    "NormalSource",
    "RngStream",
    "SpectralDecomposition",
    "augmented_moments",
    "cholesky",
    "ensemble_moments",
    "mahalanobis_sq",
    "mvn_sample",
    "solve_spd",
    "sym_eigen",
    "Kind",
    "ExperimentReport",
    "ScenarioConfig",
    "SweepPoint",
    "alternating_covariance",
    "ar1_covariance",
    "bias_vector",
    "build_pair",
    "named_config",
    "power_curve",
    "rejection_rate",
    "run_experiment",
    "chi2_cdf",
    "chi2_quantile",
    "f_cdf",
    "kolmogorov_pvalue",
    "reg_inc_beta",
    "reg_lower_gamma",
    "BotSeries",
    "histogram",
    "ks_statistic",
    "ks_test",
    "VerificationDataset",
    "VerifyPlan",
    "bias_diagnostics",
    "load_dataset",
    "run_verification",
    "synth_dataset",
    "write_jsonl",
]
