"""Differential-testing oracle for the pricing model, sharing files, not code."""

from .harness import (
    DEFAULT_TOLERANCES,
    load_folds,
    load_matrix,
    oracle_compare,
    oracle_ridge,
    oracle_train,
)

__all__ = [
    "DEFAULT_TOLERANCES",
    "load_folds",
    "load_matrix",
    "oracle_compare",
    "oracle_ridge",
    "oracle_train",
]
