"""Calibrated increase/decrease probabilities for sequential forecasts.

Extract the implied probability that the next observation does not exceed
the current one from any predictive cdf, recalibrate that probability
online, score the result, and drive loss-based decisions with it.
"""

from .calibrate import (
    COVID_OPS_PRESET,
    IDENTITY_PARAMS,
    LOGIT_EPS,
    PARAM_RADIUS,
    PRESETS,
    OnsState,
    PlattParams,
    ScheduleConfig,
    log_loss,
    ons_init,
    ons_step,
    platt_apply,
    platt_fit_batch,
    run_stream,
)
from .decision import (
    DEFAULT_LOSS_MATRIX,
    Action,
    LossMatrix,
    PolicyResult,
    bayes_action,
    simulate_policy,
)
from .distributions import (
    DirectProbability,
    ForecastDistribution,
    Gaussian,
    ParityRecord,
    QuantileSet,
    TruncatedGaussian,
    TruncatedGaussianMixture,
    cdf_eval,
    parity_outcome,
    parity_prob,
    piecewise_gaussian_parity,
    quantile_eval,
    to_quantile_set,
)
from .errors import (
    NumericError,
    ParityCalError,
    ParseError,
    UndefinedMetricError,
    UnsupportedVariantError,
    ValidationError,
)
from .metrics import (
    DiagramBin,
    MetricsReport,
    ReliabilityDiagram,
    accuracy,
    auroc,
    metrics_report,
    parity_reliability,
    pce,
    qce,
    quantile_reliability,
    sharpness,
)
from .synthetic import SPLIT_STANDARD_NORMAL, SyntheticStream, generate, prehoc_records

__version__ = "0.1.0"

__all__ = [
    "Action",
    "COVID_OPS_PRESET",
    "DEFAULT_LOSS_MATRIX",
    "DiagramBin",
    "DirectProbability",
    "ForecastDistribution",
    "Gaussian",
    "IDENTITY_PARAMS",
    "LOGIT_EPS",
    "LossMatrix",
    "MetricsReport",
    "NumericError",
    "OnsState",
    "PARAM_RADIUS",
    "PRESETS",
    "ParityCalError",
    "ParityRecord",
    "ParseError",
    "PlattParams",
    "PolicyResult",
    "QuantileSet",
    "ReliabilityDiagram",
    "SPLIT_STANDARD_NORMAL",
    "ScheduleConfig",
    "SyntheticStream",
    "TruncatedGaussian",
    "TruncatedGaussianMixture",
    "UndefinedMetricError",
    "UnsupportedVariantError",
    "ValidationError",
    "accuracy",
    "auroc",
    "bayes_action",
    "cdf_eval",
    "generate",
    "log_loss",
    "metrics_report",
    "ons_init",
    "ons_step",
    "parity_outcome",
    "parity_prob",
    "parity_reliability",
    "pce",
    "piecewise_gaussian_parity",
    "platt_apply",
    "platt_fit_batch",
    "prehoc_records",
    "qce",
    "quantile_eval",
    "quantile_reliability",
    "run_stream",
    "sharpness",
    "simulate_policy",
    "to_quantile_set",
]
