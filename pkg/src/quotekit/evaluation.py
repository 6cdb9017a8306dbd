"""Metric suite, ridge baseline, group-aware CV harness, ablation, and
overfitting diagnostics."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import DealRecord, encode_matrix, feature_columns
from .gbdt import Hyperparameters, fit, predict_batch
from .splits import FoldPlan, SplitPlan, verify_no_leakage


@dataclass(frozen=True)
class MetricsReport:
    r2: float | None  # None when y_true has zero variance (R^2 undefined)
    mae: float
    rmse: float
    relative_mae: float
    reference_mean: float
    n: int

    def to_dict(self) -> dict:
        return {
            "r2": self.r2,
            "mae": self.mae,
            "rmse": self.rmse,
            "relative_mae": self.relative_mae,
            "reference_mean": self.reference_mean,
            "n": self.n,
        }


@dataclass(frozen=True)
class FoldStats:
    n: int
    price_min: float
    price_max: float
    price_mean: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "price_min": self.price_min,
            "price_max": self.price_max,
            "price_mean": self.price_mean,
        }


@dataclass(frozen=True)
class CvReport:
    label: str
    folds: tuple[MetricsReport, ...]
    fold_stats: tuple[FoldStats, ...]
    r2_mean: float | None
    r2_std: float | None
    mae_mean: float
    mae_std: float

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "folds": [m.to_dict() for m in self.folds],
            "fold_stats": [s.to_dict() for s in self.fold_stats],
            "r2_mean": self.r2_mean,
            "r2_std": self.r2_std,
            "mae_mean": self.mae_mean,
            "mae_std": self.mae_std,
        }


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    cv: CvReport
    test: MetricsReport | None

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "cv": self.cv.to_dict(),
            "test": self.test.to_dict() if self.test else None,
        }


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ComparisonRow, ...]

    def to_dict(self) -> dict:
        return {"rows": [r.to_dict() for r in self.rows]}


@dataclass(frozen=True)
class RidgeSpec:
    alpha: float = 1.0

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")


ModelSpec = Hyperparameters | RidgeSpec


@dataclass(frozen=True)
class LinearModel:
    """Ridge regression on standardized features, intercept unpenalized."""

    coefficients: tuple[float, ...]
    intercept: float
    feature_means: tuple[float, ...]
    feature_stds: tuple[float, ...]
    feature_names: tuple[str, ...]
    alpha: float

    def predict(self, rows: Sequence[Sequence[float]]) -> list[float]:
        X = np.asarray(rows, dtype=float)
        Z = (X - np.asarray(self.feature_means)) / np.asarray(self.feature_stds)
        return list(Z @ np.asarray(self.coefficients) + self.intercept)

    def to_dict(self) -> dict:
        return {
            "coefficients": list(self.coefficients),
            "intercept": self.intercept,
            "feature_means": list(self.feature_means),
            "feature_stds": list(self.feature_stds),
            "feature_names": list(self.feature_names),
            "alpha": self.alpha,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1), encoding="utf-8")


def compute_metrics(
    y_true: Sequence[float], y_pred: Sequence[float], reference_mean: float
) -> MetricsReport:
    """R^2, MAE, RMSE, and MAE relative to a dataset-level reference mean."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if len(y_true) == 0 or len(y_true) != len(y_pred):
        raise ValueError("y_true and y_pred must be equal-length and non-empty")
    if not reference_mean > 0:
        raise ValueError(f"reference_mean must be positive, got {reference_mean}")
    errors = y_true - y_pred
    mae = float(np.abs(errors).mean())
    rmse = float(math.sqrt((errors**2).mean()))
    ss_res = float((errors**2).sum())
    ss_tot = float(((y_true - y_true.mean()) ** 2).sum())
    r2 = None if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return MetricsReport(
        r2=r2,
        mae=mae,
        rmse=rmse,
        relative_mae=mae / reference_mean,
        reference_mean=reference_mean,
        n=len(y_true),
    )


def overfit_ratio(train: MetricsReport, test: MetricsReport) -> float | None:
    """train RMSE / test RMSE; None when the test RMSE is zero (undefined)."""
    if test.rmse == 0:
        return None
    return train.rmse / test.rmse


def fit_ridge(
    X: Sequence[Sequence[float]],
    y: Sequence[float],
    alpha: float = 1.0,
    feature_names: Sequence[str] | None = None,
) -> LinearModel:
    """Closed-form ridge on standardized columns (zero-variance columns get std 1)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) < 2:
        raise ValueError("need at least 2 rows")
    if len(X) != len(y):
        raise ValueError("X and y length mismatch")
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise ValueError("X and y must be finite")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    d = X.shape[1]
    names = tuple(feature_names) if feature_names else tuple(f"f{i}" for i in range(d))
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds = np.where(stds == 0, 1.0, stds)
    Z = (X - means) / stds
    y_mean = float(y.mean())
    lhs = Z.T @ Z + alpha * np.eye(d)
    rhs = Z.T @ (y - y_mean)
    try:
        beta = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError:
        beta, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    return LinearModel(
        coefficients=tuple(float(b) for b in beta),
        intercept=y_mean,
        feature_means=tuple(float(m) for m in means),
        feature_stds=tuple(float(s) for s in stds),
        feature_names=names,
        alpha=alpha,
    )


def _fit_and_predict(
    spec: ModelSpec,
    X_train: list[list[float]],
    y_train: list[float],
    X_eval: list[list[float]],
    names: tuple[str, ...],
) -> list[float]:
    if isinstance(spec, Hyperparameters):
        model = fit(X_train, y_train, spec, feature_names=names)
        return predict_batch(model, X_eval)
    linear = fit_ridge(X_train, y_train, alpha=spec.alpha, feature_names=names)
    return linear.predict(X_eval)


def _spec_label(spec: ModelSpec) -> str:
    return "gbdt" if isinstance(spec, Hyperparameters) else f"ridge(alpha={spec.alpha})"


def _population_std(values: Sequence[float]) -> float:
    arr = np.asarray(values, dtype=float)
    return float(arr.std())


def cross_validate(
    records: Sequence[DealRecord],
    spec: ModelSpec,
    fold_plan: FoldPlan,
    drop_feature: str | None = None,
    label: str | None = None,
) -> CvReport:
    """Train on each fold's complement and evaluate on the fold.

    relative MAE is referenced to the whole-dataset target mean; aggregate
    std is the population std across folds. Refuses leaky fold plans.
    """
    for fold in fold_plan.folds:
        if len(fold) < 2:
            raise ValueError("every fold must hold at least 2 records")
    leakage = verify_no_leakage(fold_plan, records)
    if not leakage.ok:
        raise ValueError(f"fold plan leaks groups: {', '.join(leakage.offending_groups)}")
    rows, targets, names = encode_matrix(records, drop_feature)
    reference_mean = float(np.mean(targets))
    all_indices = set(range(len(records)))
    fold_reports: list[MetricsReport] = []
    fold_stats: list[FoldStats] = []
    for fold in fold_plan.folds:
        train_idx = sorted(all_indices - set(fold))
        eval_idx = list(fold)
        predictions = _fit_and_predict(
            spec,
            [rows[i] for i in train_idx],
            [targets[i] for i in train_idx],
            [rows[i] for i in eval_idx],
            names,
        )
        y_eval = [targets[i] for i in eval_idx]
        fold_reports.append(compute_metrics(y_eval, predictions, reference_mean))
        fold_stats.append(
            FoldStats(
                n=len(fold),
                price_min=min(y_eval),
                price_max=max(y_eval),
                price_mean=float(np.mean(y_eval)),
            )
        )
    r2_values = [m.r2 for m in fold_reports]
    r2_defined = all(v is not None for v in r2_values)
    mae_values = [m.mae for m in fold_reports]
    return CvReport(
        label=label or _spec_label(spec),
        folds=tuple(fold_reports),
        fold_stats=tuple(fold_stats),
        r2_mean=float(np.mean(r2_values)) if r2_defined else None,
        r2_std=_population_std(r2_values) if r2_defined else None,
        mae_mean=float(np.mean(mae_values)),
        mae_std=_population_std(mae_values),
    )


def train_test_metrics(
    records: Sequence[DealRecord],
    spec: ModelSpec,
    split_plan: SplitPlan,
    drop_feature: str | None = None,
) -> tuple[MetricsReport, MetricsReport]:
    """(train, test) metrics for a single group-aware split."""
    leakage = verify_no_leakage(split_plan, records)
    if not leakage.ok:
        raise ValueError(f"split plan leaks groups: {', '.join(leakage.offending_groups)}")
    rows, targets, names = encode_matrix(records, drop_feature)
    reference_mean = float(np.mean(targets))
    X_train = [rows[i] for i in split_plan.train_indices]
    y_train = [targets[i] for i in split_plan.train_indices]
    X_test = [rows[i] for i in split_plan.test_indices]
    y_test = [targets[i] for i in split_plan.test_indices]
    if isinstance(spec, Hyperparameters):
        model = fit(X_train, y_train, spec, feature_names=names)
        train_pred = predict_batch(model, X_train)
        test_pred = predict_batch(model, X_test)
    else:
        linear = fit_ridge(X_train, y_train, alpha=spec.alpha, feature_names=names)
        train_pred = linear.predict(X_train)
        test_pred = linear.predict(X_test)
    return (
        compute_metrics(y_train, train_pred, reference_mean),
        compute_metrics(y_test, test_pred, reference_mean),
    )


def compare_models(
    records: Sequence[DealRecord],
    fold_plan: FoldPlan,
    specs: Sequence[ModelSpec],
    split_plan: SplitPlan | None = None,
) -> ComparisonReport:
    """Cross-validate each spec, plus a final train/test evaluation when a split is given."""
    rows = []
    for spec in specs:
        cv = cross_validate(records, spec, fold_plan)
        test = None
        if split_plan is not None:
            _, test = train_test_metrics(records, spec, split_plan)
        rows.append(ComparisonRow(label=_spec_label(spec), cv=cv, test=test))
    return ComparisonReport(rows=tuple(rows))


def ablation(
    records: Sequence[DealRecord],
    fold_plan: FoldPlan,
    drop_feature: str,
    hp: Hyperparameters | None = None,
) -> tuple[CvReport, CvReport]:
    """(full, ablated) CV reports; the ablated run retrains on the reduced encoding."""
    feature_columns(drop_feature)  # validates the name before any training
    hp = hp or Hyperparameters()
    full = cross_validate(records, hp, fold_plan, label="gbdt")
    ablated = cross_validate(
        records, hp, fold_plan, drop_feature=drop_feature, label=f"gbdt-without-{drop_feature}"
    )
    return full, ablated
