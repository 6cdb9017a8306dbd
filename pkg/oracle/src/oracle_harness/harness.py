"""Reference-library training and parity comparison.

Everything here works from the shared file formats only: the canonical deal
CSV, fold-plan JSON, hyperparameter JSON, prediction JSON, metrics JSON, and
the ridge coefficient JSON. The feature encoding is re-derived from the
documented CSV layout on purpose; sharing no code with the implementation
under test is the point of a differential oracle.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

TECH_STACKS = ("no_code", "low_code", "custom")

# Reference-library parameter mapping. reg_alpha / reg_lambda have no
# GradientBoostingRegressor equivalent and are reported as unmapped.
SKLEARN_PARAM_MAP = {
    "n_estimators": "n_estimators",
    "max_depth": "max_depth",
    "learning_rate": "learning_rate",
    "subsample": "subsample",
    "colsample_bytree": "max_features",
    "min_child_weight": "min_samples_leaf",
    "seed": "random_state",
}
XGBOOST_PARAM_MAP = {
    "n_estimators": "n_estimators",
    "max_depth": "max_depth",
    "learning_rate": "learning_rate",
    "subsample": "subsample",
    "colsample_bytree": "colsample_bytree",
    "reg_alpha": "reg_alpha",
    "reg_lambda": "reg_lambda",
    "min_child_weight": "min_child_weight",
    "seed": "random_state",
}


def load_matrix(csv_path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Encode the canonical CSV: 5 numeric columns + tech_stack one-hot."""
    rows = []
    targets = []
    with Path(csv_path).open(newline="", encoding="utf-8") as handle:
        for record in csv.DictReader(handle):
            one_hot = [1.0 if record["tech_stack"] == t else 0.0 for t in TECH_STACKS]
            rows.append(
                [
                    float(record["client_revenue"]),
                    float(record["est_duration_weeks"]),
                    float(record["pain_severity_score"]),
                    float(record["integration_complexity"]),
                    float(record["phase"]),
                    *one_hot,
                ]
            )
            targets.append(float(record["price"]))
    if not rows:
        raise ValueError(f"{csv_path}: no data rows")
    return np.asarray(rows), np.asarray(targets)


def load_folds(foldplan_path: str | Path) -> list[list[int]]:
    payload = json.loads(Path(foldplan_path).read_text(encoding="utf-8"))
    if payload.get("kind") != "kfold" or "folds" not in payload:
        raise ValueError(f"{foldplan_path}: not a fold-plan JSON")
    return [list(fold) for fold in payload["folds"]]


def _build_estimator(hp: dict, library: str):
    if library == "sklearn":
        from sklearn.ensemble import GradientBoostingRegressor

        params = {SKLEARN_PARAM_MAP[k]: v for k, v in hp.items() if k in SKLEARN_PARAM_MAP}
        unmapped = sorted(k for k in hp if k not in SKLEARN_PARAM_MAP)
        if params.get("min_samples_leaf") is not None:
            params["min_samples_leaf"] = max(1, int(params["min_samples_leaf"]))
        if params.get("max_features") == 1.0:
            params["max_features"] = None
        # Plain variance reduction matches the squared-error boosting math.
        params["criterion"] = "squared_error"
        return GradientBoostingRegressor(**params), unmapped
    if library == "xgboost":
        import xgboost

        params = {XGBOOST_PARAM_MAP[k]: v for k, v in hp.items() if k in XGBOOST_PARAM_MAP}
        unmapped = sorted(k for k in hp if k not in XGBOOST_PARAM_MAP)
        return xgboost.XGBRegressor(tree_method="exact", **params), unmapped
    raise ValueError(f"unknown reference library {library!r}")


def oracle_train(
    csv_path: str | Path,
    foldplan_path: str | Path | None,
    hp_path: str | Path,
    library: str = "sklearn",
) -> dict:
    """Cross-validate and full-fit the reference library on the shared files.

    Returns a JSON-ready dict; if the library is not importable the status is
    an explicit "skipped" (never a silent pass).
    """
    try:
        hp = json.loads(Path(hp_path).read_text(encoding="utf-8"))
        X, y = load_matrix(csv_path)
        estimator, unmapped = _build_estimator(hp, library)
    except ImportError as exc:
        return {"status": "skipped", "library": library, "reason": str(exc)}

    fold_metrics = []
    if foldplan_path is not None:
        folds = load_folds(foldplan_path)
        for i, fold in enumerate(folds):
            train_idx = sorted(set(range(len(y))) - set(fold))
            model, _ = _build_estimator(hp, library)
            model.fit(X[train_idx], y[train_idx])
            pred = model.predict(X[fold])
            truth = y[fold]
            ss_res = float(((truth - pred) ** 2).sum())
            ss_tot = float(((truth - truth.mean()) ** 2).sum())
            fold_metrics.append(
                {
                    "fold": i,
                    "n": len(fold),
                    "r2": 1.0 - ss_res / ss_tot,
                    "mae": float(np.abs(truth - pred).mean()),
                }
            )

    estimator.fit(X, y)
    train_predictions = [float(v) for v in estimator.predict(X)]
    result = {
        "status": "ok",
        "library": library,
        "unmapped_hyperparameters": unmapped,
        "n": len(y),
        "fold_metrics": fold_metrics,
        "train_predictions": train_predictions,
    }
    if fold_metrics:
        result["cv_r2_mean"] = float(np.mean([m["r2"] for m in fold_metrics]))
        result["cv_mae_mean"] = float(np.mean([m["mae"] for m in fold_metrics]))
    return result


def oracle_ridge(csv_path: str | Path, alpha: float = 1.0) -> dict:
    """Reference ridge on standardized columns (population std, like the CSV docs)."""
    from sklearn.linear_model import Ridge

    X, y = load_matrix(csv_path)
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds = np.where(stds == 0, 1.0, stds)
    Z = (X - means) / stds
    model = Ridge(alpha=alpha, fit_intercept=True)
    model.fit(Z, y)
    return {
        "status": "ok",
        "alpha": alpha,
        "coefficients": [float(c) for c in model.coef_],
        "intercept": float(model.intercept_),
    }


DEFAULT_TOLERANCES = {
    "cv_r2": 0.10,
    "pearson_min": 0.98,
    "ridge_coefficient_rel": 1e-6,
}


def _pearson(a: list[float], b: list[float]) -> float:
    x = np.asarray(a)
    y = np.asarray(b)
    if x.std() == 0 or y.std() == 0:
        return 1.0 if np.allclose(x, y) else 0.0
    return float(np.corrcoef(x, y)[0, 1])


def oracle_compare(
    primary_path: str | Path,
    reference_path: str | Path,
    tolerances: dict | None = None,
) -> dict:
    """Apply the parity tolerance table to a primary/reference file pair.

    Primary file shape: {"cv_r2_mean": ..., "predictions": [...], "ridge":
    {"coefficients": [...]}} with any subset present; the reference file is
    oracle_train/oracle_ridge output. Compares only sections both sides carry.
    """
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    primary = json.loads(Path(primary_path).read_text(encoding="utf-8"))
    reference = json.loads(Path(reference_path).read_text(encoding="utf-8"))
    if reference.get("status") == "skipped":
        return {"status": "skipped", "reason": reference.get("reason", "")}

    checks = []
    failures = []
    report: dict = {"status": "ok", "checks": checks}

    if "cv_r2_mean" in primary and "cv_r2_mean" in reference:
        gap = abs(primary["cv_r2_mean"] - reference["cv_r2_mean"])
        ok = gap <= tol["cv_r2"]
        checks.append({"name": "cv_r2_band", "gap": gap, "tolerance": tol["cv_r2"], "ok": ok})
        report["cv_r2_pair"] = [primary["cv_r2_mean"], reference["cv_r2_mean"]]
        if not ok:
            failures.append("cv_r2_band")
    if "cv_mae_mean" in primary and "cv_mae_mean" in reference:
        report["cv_mae_pair"] = [primary["cv_mae_mean"], reference["cv_mae_mean"]]

    primary_preds = primary.get("predictions")
    if primary_preds is None:
        primary_preds = primary.get("train_predictions")
    reference_preds = reference.get("train_predictions")
    if primary_preds is not None and reference_preds is not None:
        if len(primary_preds) != len(reference_preds) or not primary_preds:
            raise ValueError(
                f"prediction shape mismatch: {len(primary_preds)} vs {len(reference_preds)}"
            )
        pearson = _pearson(primary_preds, reference_preds)
        gaps = [abs(a - b) for a, b in zip(primary_preds, reference_preds)]
        ok = pearson >= tol["pearson_min"]
        checks.append(
            {
                "name": "per_sample_pearson",
                "pearson": pearson,
                "max_abs_gap": max(gaps),
                "tolerance": tol["pearson_min"],
                "ok": ok,
            }
        )
        report["prediction_pairs"] = [
            [float(a), float(b)] for a, b in zip(primary_preds, reference_preds)
        ]
        report["pearson"] = pearson
        report["max_abs_gap"] = max(gaps)
        if not ok:
            failures.append("per_sample_pearson")

    if "ridge" in primary and "coefficients" in reference:
        mine = primary["ridge"]["coefficients"]
        theirs = reference["coefficients"]
        if len(mine) != len(theirs):
            raise ValueError("ridge coefficient shape mismatch")
        rel = max(
            abs(a - b) / max(abs(b), 1e-12) for a, b in zip(mine, theirs)
        )
        ok = rel <= tol["ridge_coefficient_rel"]
        checks.append(
            {"name": "ridge_coefficients", "max_rel_diff": rel,
             "tolerance": tol["ridge_coefficient_rel"], "ok": ok}
        )
        if not ok:
            failures.append("ridge_coefficients")

    if not checks:
        raise ValueError("nothing to compare: no overlapping sections in the two files")
    report["passed"] = not failures
    report["failures"] = failures
    return report
