"""Regularized gradient-boosted regression trees, built for tiny datasets.

Squared-error boosting with second-order split gains, L1/L2 leaf
regularization, per-tree row/column subsampling, and exact greedy split
search over every midpoint candidate. At tens of rows exactness is free,
and training is fully deterministic for a fixed seed: gain ties break on
the lowest feature index, then the lowest threshold.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import FeatureVector

FORMAT_VERSION = "gbdt-json-1"


class ModelError(ValueError):
    """Base class for model artifact problems."""


class ModelVersionError(ModelError):
    """Artifact format_version is not one this code understands."""


class ModelFormatError(ModelError):
    """Artifact is structurally malformed."""


class ModelConsistencyError(ModelError):
    """Artifact fields contradict each other (e.g. feature count vs tree indices)."""


@dataclass(frozen=True)
class Hyperparameters:
    n_estimators: int = 50
    max_depth: int = 3
    learning_rate: float = 0.05
    subsample: float = 0.8
    colsample_bytree: float = 0.8
    reg_alpha: float = 0.1
    reg_lambda: float = 1.0
    min_child_weight: float = 3.0
    min_split_gain: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_estimators < 0:
            raise ValueError("n_estimators must be >= 0")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must be in (0, 1]")
        for name in ("subsample", "colsample_bytree"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise ValueError(f"{name} must be in (0, 1]")
        for name in ("reg_alpha", "reg_lambda", "min_split_gain"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.min_child_weight < 0:
            raise ValueError("min_child_weight must be >= 0")

    def to_dict(self) -> dict:
        return {
            "n_estimators": self.n_estimators,
            "max_depth": self.max_depth,
            "learning_rate": self.learning_rate,
            "subsample": self.subsample,
            "colsample_bytree": self.colsample_bytree,
            "reg_alpha": self.reg_alpha,
            "reg_lambda": self.reg_lambda,
            "min_child_weight": self.min_child_weight,
            "min_split_gain": self.min_split_gain,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Hyperparameters":
        return cls(**payload)


@dataclass
class TreeNode:
    """Internal node (feature/threshold/children, with realized gain) or leaf (weight)."""

    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    weight: float | None = None
    gain: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.weight is not None


@dataclass
class GbdtModel:
    base_score: float
    trees: tuple[TreeNode, ...]
    learning_rate: float
    feature_names: tuple[str, ...]
    hyperparameters: Hyperparameters
    n_train: int
    version: str = FORMAT_VERSION


def _soft_threshold(g: float, alpha: float) -> float:
    if g > alpha:
        return g - alpha
    if g < -alpha:
        return g + alpha
    return 0.0


def _leaf_weight(g_sum: float, h_sum: float, hp: Hyperparameters) -> float:
    return -_soft_threshold(g_sum, hp.reg_alpha) / (h_sum + hp.reg_lambda)


def _score(g_sum: np.ndarray | float, h_sum: np.ndarray | float, hp: Hyperparameters):
    """Regularized score T(G)^2 / (H + lambda) used by the gain formula."""
    thresholded = np.clip(g_sum - hp.reg_alpha, 0.0, None) + np.clip(
        g_sum + hp.reg_alpha, None, 0.0
    )
    return thresholded**2 / (h_sum + hp.reg_lambda)


def _gain_tolerance(gain: float) -> float:
    # Gains that agree to ~12 digits are treated as mathematically tied, so
    # that float summation order cannot override the deterministic
    # lowest-feature / lowest-threshold tie rule.
    return 1e-12 * max(1.0, abs(gain))


def _best_split(
    X: np.ndarray, g: np.ndarray, columns: np.ndarray, hp: Hyperparameters
) -> tuple[float, int, float] | None:
    """Exact greedy search over all (feature, midpoint) candidates.

    Returns (gain, feature, threshold) for the best positive-gain split, or
    None. Ties break to the lowest feature index, then the lowest threshold.
    """
    n = len(g)
    g_total = float(g.sum())
    h_total = float(n)
    parent_score = float(_score(g_total, h_total, hp))
    best: tuple[float, int, float] | None = None
    for f in columns:
        order = np.argsort(X[:, f], kind="stable")
        values = X[order, f]
        g_sorted = g[order]
        g_left = np.cumsum(g_sorted)[:-1]
        h_left = np.arange(1, n, dtype=float)
        h_right = h_total - h_left
        g_right = g_total - g_left
        thresholds = (values[:-1] + values[1:]) / 2.0
        valid = (
            (values[:-1] < values[1:])
            & (thresholds > values[:-1])
            & (h_left >= hp.min_child_weight)
            & (h_right >= hp.min_child_weight)
        )
        if not valid.any():
            continue
        gains = (
            0.5 * (_score(g_left, h_left, hp) + _score(g_right, h_right, hp) - parent_score)
            - hp.min_split_gain
        )
        gains = np.where(valid, gains, -np.inf)
        top = float(gains.max())
        if top <= 0:
            continue
        i = int(np.argmax(gains >= top - _gain_tolerance(top)))  # lowest tied threshold
        gain = float(gains[i])
        if best is None or gain > best[0] + _gain_tolerance(best[0]):
            best = (gain, int(f), float(thresholds[i]))
    return best


def _grow_tree(
    X: np.ndarray, g: np.ndarray, columns: np.ndarray, depth: int, hp: Hyperparameters
) -> TreeNode:
    g_sum = float(g.sum())
    h_sum = float(len(g))
    if depth >= hp.max_depth or len(g) < 2:
        return TreeNode(weight=_leaf_weight(g_sum, h_sum, hp))
    split = _best_split(X, g, columns, hp)
    if split is None:
        return TreeNode(weight=_leaf_weight(g_sum, h_sum, hp))
    gain, feature, threshold = split
    mask = X[:, feature] < threshold
    return TreeNode(
        feature=feature,
        threshold=threshold,
        gain=gain,
        left=_grow_tree(X[mask], g[mask], columns, depth + 1, hp),
        right=_grow_tree(X[~mask], g[~mask], columns, depth + 1, hp),
    )


def _tree_predict(node: TreeNode, X: np.ndarray) -> np.ndarray:
    if node.is_leaf:
        return np.full(len(X), node.weight)
    out = np.empty(len(X))
    mask = X[:, node.feature] < node.threshold
    out[mask] = _tree_predict(node.left, X[mask])
    out[~mask] = _tree_predict(node.right, X[~mask])
    return out


def fit(
    X: Sequence[Sequence[float]],
    y: Sequence[float],
    hp: Hyperparameters | None = None,
    feature_names: Sequence[str] | None = None,
) -> GbdtModel:
    """Train an ensemble on rows X against targets y.

    Gradients are the current residuals (squared-error loss, unit hessians);
    each tree sees a seeded row subsample and a per-tree column subsample.
    """
    hp = hp or Hyperparameters()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("X must be a non-empty 2D matrix")
    if len(X) != len(y):
        raise ValueError(f"X has {len(X)} rows but y has {len(y)}")
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise ValueError("X and y must be finite")
    n, d = X.shape
    if feature_names is None:
        feature_names = tuple(f"f{i}" for i in range(d))
    else:
        feature_names = tuple(feature_names)
        if len(feature_names) != d:
            raise ValueError(f"{len(feature_names)} feature names for {d} columns")

    rng = np.random.default_rng(hp.seed)
    base_score = float(y.mean())
    predictions = np.full(n, base_score)
    trees: list[TreeNode] = []
    for _ in range(hp.n_estimators):
        gradients = predictions - y
        if hp.subsample < 1.0:
            size = max(1, int(round(hp.subsample * n)))
            row_idx = np.sort(rng.choice(n, size=size, replace=False))
        else:
            row_idx = np.arange(n)
        if hp.colsample_bytree < 1.0:
            size = max(1, int(round(hp.colsample_bytree * d)))
            columns = np.sort(rng.choice(d, size=size, replace=False))
        else:
            columns = np.arange(d)
        root = _grow_tree(X[row_idx], gradients[row_idx], columns, 0, hp)
        trees.append(root)
        predictions = predictions + hp.learning_rate * _tree_predict(root, X)
    return GbdtModel(
        base_score=base_score,
        trees=tuple(trees),
        learning_rate=hp.learning_rate,
        feature_names=feature_names,
        hyperparameters=hp,
        n_train=n,
    )


def predict(model: GbdtModel, x: FeatureVector | Sequence[float]) -> float:
    """Route x through every tree: base score + learning_rate * sum of leaf weights."""
    values = x.values if isinstance(x, FeatureVector) else tuple(x)
    if len(values) != len(model.feature_names):
        raise ValueError(
            f"expected {len(model.feature_names)} features, got {len(values)}"
        )
    total = 0.0
    for root in model.trees:
        node = root
        while not node.is_leaf:
            node = node.left if values[node.feature] < node.threshold else node.right
        total += node.weight
    return model.base_score + model.learning_rate * total


def predict_batch(model: GbdtModel, X: Sequence[Sequence[float]]) -> list[float]:
    return [predict(model, row) for row in X]


def feature_importance(model: GbdtModel) -> dict[str, float]:
    """Share of total realized split gain per feature (all zeros if no splits)."""
    totals = {name: 0.0 for name in model.feature_names}

    def walk(node: TreeNode) -> None:
        if node.is_leaf:
            return
        totals[model.feature_names[node.feature]] += node.gain
        walk(node.left)
        walk(node.right)

    for root in model.trees:
        walk(root)
    grand_total = sum(totals.values())
    if grand_total <= 0:
        return totals
    return {name: value / grand_total for name, value in totals.items()}


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _node_to_obj(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"w": node.weight}
    return {
        "f": node.feature,
        "t": node.threshold,
        "g": node.gain,
        "l": _node_to_obj(node.left),
        "r": _node_to_obj(node.right),
    }


def _node_from_obj(obj: dict) -> TreeNode:
    if not isinstance(obj, dict):
        raise ModelFormatError(f"tree node must be an object, got {type(obj).__name__}")
    if "w" in obj:
        return TreeNode(weight=float(obj["w"]))
    for key in ("f", "t", "l", "r"):
        if key not in obj:
            raise ModelFormatError(f"internal node missing key {key!r}")
    return TreeNode(
        feature=int(obj["f"]),
        threshold=float(obj["t"]),
        gain=float(obj.get("g", 0.0)),
        left=_node_from_obj(obj["l"]),
        right=_node_from_obj(obj["r"]),
    )


def save_model(model: GbdtModel, path: str | Path, trained_at: str | None = None) -> None:
    """Write the model as a JSON artifact with full float round-trip precision."""
    payload = {
        "format_version": model.version,
        "base_score": model.base_score,
        "learning_rate": model.learning_rate,
        "feature_names": list(model.feature_names),
        "hyperparameters": model.hyperparameters.to_dict(),
        "trees": [_node_to_obj(t) for t in model.trees],
        "trained_at": trained_at or datetime.now(timezone.utc).isoformat(),
        "n_train": model.n_train,
    }
    Path(path).write_text(json.dumps(payload, indent=1), encoding="utf-8")


def _max_feature_index(node: TreeNode) -> int:
    if node.is_leaf:
        return -1
    return max(node.feature, _max_feature_index(node.left), _max_feature_index(node.right))


def load_model(path: str | Path) -> GbdtModel:
    """Load a JSON artifact; the result predicts bit-identically to the saved model."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ModelFormatError("artifact root must be a JSON object")
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelVersionError(
            f"unsupported format_version {version!r}; expected {FORMAT_VERSION!r}"
        )
    required = ("base_score", "learning_rate", "feature_names", "hyperparameters", "trees")
    for key in required:
        if key not in payload:
            raise ModelFormatError(f"artifact missing field {key!r}")
    try:
        hp = Hyperparameters.from_dict(payload["hyperparameters"])
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"bad hyperparameters block: {exc}") from exc
    trees = tuple(_node_from_obj(obj) for obj in payload["trees"])
    feature_names = tuple(payload["feature_names"])
    max_index = max((_max_feature_index(t) for t in trees), default=-1)
    if max_index >= len(feature_names):
        raise ModelConsistencyError(
            f"trees reference feature index {max_index} but only "
            f"{len(feature_names)} feature names are declared"
        )
    return GbdtModel(
        base_score=float(payload["base_score"]),
        trees=trees,
        learning_rate=float(payload["learning_rate"]),
        feature_names=feature_names,
        hyperparameters=hp,
        n_train=int(payload.get("n_train", 0)),
        version=version,
    )
