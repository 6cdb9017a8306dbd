"""Matplotlib renderings of the report outputs, written next to the data files."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .dataset import DealRecord
from .evaluation import ComparisonReport, CvReport
from .sensitivity import SensitivityCurve
from .splits import SplitPlan


def _finish(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def price_distribution(
    records: Sequence[DealRecord], path: str | Path, split: SplitPlan | None = None
) -> Path:
    """Histogram plus box plot of the price target, optionally split-aware."""
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4))
    if split is None:
        groups = {"all": [r.price for r in records]}
    else:
        groups = {
            "train": [records[i].price for i in split.train_indices],
            "test": [records[i].price for i in split.test_indices],
        }
    for label, prices in groups.items():
        left.hist(prices, bins=14, alpha=0.6, label=f"{label} (n={len(prices)})")
    left.set_xlabel("price (USD)")
    left.set_ylabel("count")
    left.set_title("Price distribution")
    left.legend()
    right.boxplot(list(groups.values()), tick_labels=list(groups.keys()))
    right.set_ylabel("price (USD)")
    right.set_title("Price spread")
    return _finish(fig, path)


def predicted_vs_actual(
    y_train: Sequence[float],
    pred_train: Sequence[float],
    y_test: Sequence[float],
    pred_test: Sequence[float],
    path: str | Path,
) -> Path:
    fig, axes = plt.subplots(1, 2, figsize=(10, 4.5))
    for ax, (y, p, label) in zip(
        axes, ((y_train, pred_train, "train"), (y_test, pred_test, "test"))
    ):
        ax.scatter(y, p, alpha=0.7)
        lo = min(min(y), min(p))
        hi = max(max(y), max(p))
        ax.plot([lo, hi], [lo, hi], linestyle="--", linewidth=1)
        ax.set_xlabel("actual price (USD)")
        ax.set_ylabel("predicted price (USD)")
        ax.set_title(f"{label} (n={len(y)})")
    return _finish(fig, path)


def cv_bars(report: CvReport, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    fold_ids = [f"fold {i + 1}" for i in range(len(report.folds))]
    r2_values = [m.r2 if m.r2 is not None else 0.0 for m in report.folds]
    ax.bar(fold_ids, r2_values)
    if report.r2_mean is not None:
        ax.axhline(report.r2_mean, linestyle="--", linewidth=1, color="black",
                   label=f"mean {report.r2_mean:.3f}")
        ax.legend()
    ax.set_ylabel("R^2")
    ax.set_title(f"Cross-validation ({report.label})")
    return _finish(fig, path)


def comparison_bars(report: ComparisonReport, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    labels = [row.label for row in report.rows]
    means = [row.cv.r2_mean if row.cv.r2_mean is not None else 0.0 for row in report.rows]
    stds = [row.cv.r2_std if row.cv.r2_std is not None else 0.0 for row in report.rows]
    ax.bar(labels, means, yerr=stds, capsize=4)
    ax.set_ylabel("CV R^2 (mean +/- std)")
    ax.set_title("Model comparison")
    return _finish(fig, path)


def sensitivity_plot(curve: SensitivityCurve, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    values = curve.values()
    prices = curve.prices()
    if all(isinstance(v, (int, float)) for v in values):
        ax.plot(values, prices, marker="o")
    else:
        ax.bar([str(v) for v in values], prices)
    ax.set_xlabel(curve.feature)
    ax.set_ylabel("predicted price (USD)")
    ax.set_title(f"Sensitivity: {curve.feature}")
    return _finish(fig, path)
