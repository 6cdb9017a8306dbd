"""Boosted-tree deal pricing with agent tool-calling.

Library surface: deal records and synthetic generation (`dataset`),
group-aware splitting (`splits`), the boosted-tree core (`gbdt`), metrics and
baselines (`evaluation`), sensitivity sweeps (`sensitivity`), JSON contracts
(`schemas`), the stateless pricing service (`service`), and the two-agent
proposal runtime (`agents`, `templating`). The `quotekit` CLI wires them into
reproducible workflows.
"""

from .dataset import (
    DealRecord,
    FeatureVector,
    GeneratorSpec,
    encode_features,
    generate_synthetic,
    load_dataset,
    save_dataset,
    summarize,
)
from .evaluation import compute_metrics, cross_validate, fit_ridge, overfit_ratio
from .gbdt import GbdtModel, Hyperparameters, feature_importance, fit, load_model, predict, save_model
from .sensitivity import BaselineScenario, monotonicity_check, sweep_ratio, univariate_sweep
from .splits import group_kfold, group_shuffle_split, verify_no_leakage

__version__ = "0.1.0"

__all__ = [
    "BaselineScenario",
    "DealRecord",
    "FeatureVector",
    "GbdtModel",
    "GeneratorSpec",
    "Hyperparameters",
    "compute_metrics",
    "cross_validate",
    "encode_features",
    "feature_importance",
    "fit",
    "fit_ridge",
    "generate_synthetic",
    "group_kfold",
    "group_shuffle_split",
    "load_dataset",
    "load_model",
    "monotonicity_check",
    "overfit_ratio",
    "predict",
    "save_dataset",
    "save_model",
    "summarize",
    "sweep_ratio",
    "univariate_sweep",
    "verify_no_leakage",
    "__version__",
]
