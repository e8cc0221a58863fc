"""Domain-adaptive fall detection: preprocessing, DANN training and evaluation."""

from ._core import (
    ConfigError,
    DataError,
    NumericError,
    __version__,
    enumerate_pairs,
    features,
    grad_check,
    grid_tuples,
    metrics,
    preprocess,
    rational_factor,
    run_cli,
    ttest,
)

__all__ = [
    "ConfigError",
    "DataError",
    "NumericError",
    "__version__",
    "enumerate_pairs",
    "features",
    "grad_check",
    "grid_tuples",
    "metrics",
    "preprocess",
    "rational_factor",
    "run_cli",
    "ttest",
]
