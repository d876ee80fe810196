"""Adaptive ensembles of tiny ELM anomaly detectors for condition monitoring."""

from .calibration import detection_metrics, gamma, loo_threshold, robustness_margin
from .config import ExperimentConfig, load_config
from .elm import BaseLearner, Mode, ThetaUpdate, init_base_learner
from .ensemble import (
    AdeposState,
    Ensemble,
    LifetimeReport,
    Verdict,
    adepos_evaluate,
    majority_vote,
    run_lifetime,
    train_ensemble,
)
from .errors import AdeposError
from .features import FeatureVector, extract_features, fit_quantizer, quantize
from .neuron_gen import build_pool, required_physical_neurons
from .power import op_count_ng, op_count_orig

__version__ = "0.1.0"

__all__ = [
    "AdeposError",
    "AdeposState",
    "BaseLearner",
    "Ensemble",
    "ExperimentConfig",
    "FeatureVector",
    "LifetimeReport",
    "Mode",
    "ThetaUpdate",
    "Verdict",
    "adepos_evaluate",
    "build_pool",
    "detection_metrics",
    "extract_features",
    "fit_quantizer",
    "gamma",
    "init_base_learner",
    "load_config",
    "loo_threshold",
    "majority_vote",
    "op_count_ng",
    "op_count_orig",
    "quantize",
    "required_physical_neurons",
    "robustness_margin",
    "run_lifetime",
    "train_ensemble",
]
