"""Latent-space Hawkes models for continuous-time relational-event networks.

Fits mutually exciting bivariate processes over ordered node pairs whose
baseline rates come from latent node positions and sender/receiver effects;
simulates networks exactly by thinning; evaluates fits by held-out
likelihood, dynamic link prediction, and posterior predictive checks.
"""

__version__ = "0.1.0"

from .core import (
    EventSequence,
    KernelSpec,
    ModelParams,
    PairHistory,
    SlopeConstraint,
    baseline_rate,
    build_pair_histories,
    validate_events,
)
from .estimation import (
    FitConfig,
    FitResult,
    bounded_quasi_newton,
    fit,
    mds_init,
    normalize_identifiability,
    procrustes_align,
)
from .evaluation import (
    LinkPredictionResult,
    PpcStats,
    SplitSpec,
    auc,
    dynamic_link_prediction,
    link_probability_window,
    ppc_ensemble,
    ppc_stats,
    split_events,
    test_loglik_per_event,
)
from .io import (
    DatasetManifest,
    emit_latent_scatter,
    read_events,
    read_fit,
    rescale_times,
    write_fit,
)
from .likelihood import (
    IntegrationMode,
    LikelihoodEvaluator,
    PairRecursion,
    compensator,
    conditional_intensity,
    log_likelihood,
    nll_and_gradient,
    pair_recursion,
    rescaled_increments,
)
from .simulation import GenConfig, sample_params, simulate_network, simulate_pair

__all__ = [
    "EventSequence", "KernelSpec", "ModelParams", "PairHistory", "SlopeConstraint",
    "baseline_rate", "build_pair_histories", "validate_events",
    "FitConfig", "FitResult", "bounded_quasi_newton", "fit", "mds_init",
    "normalize_identifiability", "procrustes_align",
    "LinkPredictionResult", "PpcStats", "SplitSpec", "auc", "dynamic_link_prediction",
    "link_probability_window", "ppc_ensemble", "ppc_stats", "split_events",
    "test_loglik_per_event",
    "DatasetManifest", "emit_latent_scatter", "read_events", "read_fit",
    "rescale_times", "write_fit",
    "IntegrationMode", "LikelihoodEvaluator", "PairRecursion", "compensator",
    "conditional_intensity", "log_likelihood", "nll_and_gradient", "pair_recursion",
    "rescaled_increments",
    "GenConfig", "sample_params", "simulate_network", "simulate_pair",
]
