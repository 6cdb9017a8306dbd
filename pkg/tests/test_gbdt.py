from __future__ import annotations

import json
import math
import random

import numpy as np
import pytest

from quotekit.gbdt import (
    FORMAT_VERSION,
    GbdtModel,
    Hyperparameters,
    ModelConsistencyError,
    ModelFormatError,
    ModelVersionError,
    feature_importance,
    fit,
    load_model,
    predict,
    predict_batch,
    save_model,
)

from .oracles import boost_brute, predict_brute

DETERMINISTIC = dict(subsample=1.0, colsample_bytree=1.0)


def hp_for(**overrides) -> Hyperparameters:
    params = dict(DETERMINISTIC)
    params.update(overrides)
    return Hyperparameters(**params)


# ---------------------------------------------------------------------------
# Hand-checked single-split example
# ---------------------------------------------------------------------------

FOUR_POINT_X = [[1.0], [2.0], [3.0], [4.0]]
FOUR_POINT_Y = [10_000.0, 10_000.0, 30_000.0, 30_000.0]
FOUR_POINT_HP = hp_for(
    n_estimators=1,
    max_depth=1,
    learning_rate=0.05,
    reg_lambda=1.0,
    reg_alpha=0.0,
    min_child_weight=1.0,
)
# base 20,000; split at 2.5; G_L = +20,000 over 2 rows, G_R = -20,000;
# leaf weights -20,000/3 and +20,000/3; predictions base -/+ 0.05 * 6,666.67.
FOUR_POINT_LEFT_PRED = 19_666.666666666668
FOUR_POINT_RIGHT_PRED = 20_333.333333333332


def test_four_point_hand_example():
    model = fit(FOUR_POINT_X, FOUR_POINT_Y, FOUR_POINT_HP)
    assert model.base_score == 20_000.0
    root = model.trees[0]
    assert root.feature == 0
    assert root.threshold == 2.5
    assert root.left.weight == pytest.approx(-20_000.0 / 3.0, rel=1e-12)
    assert root.right.weight == pytest.approx(20_000.0 / 3.0, rel=1e-12)
    assert predict(model, [1.0]) == pytest.approx(FOUR_POINT_LEFT_PRED, rel=1e-6)
    assert predict(model, [2.0]) == pytest.approx(FOUR_POINT_LEFT_PRED, rel=1e-6)
    assert predict(model, [3.9]) == pytest.approx(FOUR_POINT_RIGHT_PRED, rel=1e-6)


def test_four_point_importance_is_single_feature():
    model = fit(FOUR_POINT_X, FOUR_POINT_Y, FOUR_POINT_HP)
    assert feature_importance(model) == {"f0": 1.0}


# ---------------------------------------------------------------------------
# Degenerate cases
# ---------------------------------------------------------------------------

def test_constant_target_predicts_exactly_that_constant():
    X = [[float(i), float(i % 3)] for i in range(10)]
    model = fit(X, [4_200.0] * 10, hp_for(n_estimators=20))
    for row in X + [[99.0, -5.0]]:
        assert predict(model, row) == 4_200.0


def test_zero_estimators_predicts_base_score():
    model = fit([[1.0], [2.0], [5.0]], [10.0, 20.0, 60.0], hp_for(n_estimators=0))
    assert model.base_score == pytest.approx(30.0)
    assert predict(model, [123.0]) == model.base_score
    assert feature_importance(model) == {"f0": 0.0}


def test_dimension_mismatch_errors():
    model = fit([[1.0], [2.0]], [1.0, 2.0], hp_for(n_estimators=1, min_child_weight=1.0))
    with pytest.raises(ValueError, match="expected 1 features"):
        predict(model, [1.0, 2.0])


def test_fit_input_validation():
    with pytest.raises(ValueError):
        fit([], [], hp_for())
    with pytest.raises(ValueError, match="finite"):
        fit([[1.0], [float("nan")]], [1.0, 2.0], hp_for())
    with pytest.raises(ValueError, match="rows"):
        fit([[1.0], [2.0]], [1.0], hp_for())


def test_hyperparameter_validation():
    with pytest.raises(ValueError):
        Hyperparameters(learning_rate=0.0)
    with pytest.raises(ValueError):
        Hyperparameters(subsample=1.5)
    with pytest.raises(ValueError):
        Hyperparameters(reg_lambda=-1.0)
    Hyperparameters(n_estimators=0)  # an empty ensemble is allowed


# ---------------------------------------------------------------------------
# Brute-force oracle equivalence (deterministic regime)
# ---------------------------------------------------------------------------

def test_brute_force_oracle_equivalence_small_instances():
    rng = random.Random(1234)
    for case in range(25):
        n = rng.randint(6, 20)
        d = rng.randint(1, 3)
        rows = [[rng.uniform(-10, 10) for _ in range(d)] for _ in range(n)]
        targets = [rng.uniform(0, 100) for _ in range(n)]
        depth = rng.randint(1, 2)
        trees = rng.randint(1, 3)
        lam = rng.choice([0.0, 1.0])
        mcw = rng.choice([1.0, 3.0])
        hp = hp_for(
            n_estimators=trees,
            max_depth=depth,
            learning_rate=0.1,
            reg_lambda=lam,
            reg_alpha=0.0,
            min_child_weight=mcw,
        )
        model = fit(rows, targets, hp)
        base, btrees = boost_brute(
            rows, targets, trees, depth, 0.1, lam, 0.0, min_child_weight=mcw
        )
        probes = rows + [[rng.uniform(-12, 12) for _ in range(d)] for _ in range(10)]
        for row in probes:
            expected = predict_brute(base, btrees, 0.1, row)
            got = predict(model, row)
            assert got == pytest.approx(expected, rel=1e-9, abs=1e-9), f"case {case}"


def test_brute_force_oracle_equivalence_with_l1():
    # Same regime but alpha > 0 exercises the shared soft-threshold path.
    rng = random.Random(99)
    rows = [[rng.uniform(0, 5)] for _ in range(15)]
    targets = [10 * r[0] ** 2 + rng.uniform(-5, 5) for r in rows]
    hp = hp_for(n_estimators=3, max_depth=2, learning_rate=0.3, reg_alpha=2.0,
                reg_lambda=1.0, min_child_weight=1.0)
    model = fit(rows, targets, hp)
    base, btrees = boost_brute(rows, targets, 3, 2, 0.3, 1.0, 2.0, min_child_weight=1.0)
    for row in rows:
        assert predict(model, row) == pytest.approx(predict_brute(base, btrees, 0.3, row), rel=1e-9)


# ---------------------------------------------------------------------------
# Training properties
# ---------------------------------------------------------------------------

def _training_rmse(model: GbdtModel, X, y) -> float:
    preds = predict_batch(model, X)
    return math.sqrt(sum((p - t) ** 2 for p, t in zip(preds, y)) / len(y))


def test_training_rmse_non_increasing_in_n_estimators():
    rng = random.Random(7)
    X = [[rng.uniform(0, 10), rng.uniform(0, 5)] for _ in range(30)]
    y = [3 * a + b * b + rng.uniform(-1, 1) for a, b in X]
    previous = float("inf")
    for n in (0, 1, 2, 5, 10, 25, 50):
        model = fit(X, y, hp_for(n_estimators=n, min_child_weight=1.0))
        rmse = _training_rmse(model, X, y)
        assert rmse <= previous + 1e-9
        previous = rmse


def test_stronger_l2_fits_training_data_no_better():
    rng = random.Random(11)
    X = [[rng.uniform(0, 10)] for _ in range(25)]
    y = [5 * r[0] + rng.uniform(-3, 3) for r in X]
    loose = fit(X, y, hp_for(n_estimators=20, reg_lambda=0.0, min_child_weight=1.0))
    tight = fit(X, y, hp_for(n_estimators=20, reg_lambda=10.0, min_child_weight=1.0))
    assert _training_rmse(tight, X, y) >= _training_rmse(loose, X, y) - 1e-9


def _leaf_row_counts(node, rows):
    if node.is_leaf:
        return [len(rows)]
    left = [r for r in rows if r[node.feature] < node.threshold]
    right = [r for r in rows if r[node.feature] >= node.threshold]
    return _leaf_row_counts(node.left, left) + _leaf_row_counts(node.right, right)


def test_min_child_weight_bounds_leaf_coverage():
    rng = random.Random(3)
    X = [[rng.uniform(0, 10), rng.uniform(0, 10)] for _ in range(40)]
    y = [a * 2 + b + rng.uniform(-1, 1) for a, b in X]
    model = fit(X, y, hp_for(n_estimators=10, min_child_weight=3.0))
    for tree in model.trees:
        for count in _leaf_row_counts(tree, X):
            assert count >= 3


def test_scale_invariance_power_of_two():
    # Multiplying one column by a power of two rescales thresholds exactly.
    rng = random.Random(5)
    X = [[rng.uniform(0, 10), rng.uniform(0, 10)] for _ in range(30)]
    y = [a * b + rng.uniform(-1, 1) for a, b in X]
    hp = Hyperparameters(n_estimators=15, seed=3)
    scaled = [[a * 4.0, b] for a, b in X]
    model = fit(X, y, hp)
    model_scaled = fit(scaled, y, hp)
    for row, srow in zip(X, scaled):
        assert predict(model, row) == predict(model_scaled, srow)


def test_fit_is_deterministic_for_a_seed():
    rng = random.Random(21)
    X = [[rng.uniform(0, 10) for _ in range(4)] for _ in range(40)]
    y = [sum(r) + rng.uniform(-1, 1) for r in X]
    hp = Hyperparameters(n_estimators=12, seed=9)
    a = fit(X, y, hp)
    b = fit(X, y, hp)
    probe = [[rng.uniform(0, 10) for _ in range(4)] for _ in range(20)]
    assert predict_batch(a, probe) == predict_batch(b, probe)


def test_gain_ties_break_on_lowest_feature_index():
    # Identical duplicate columns: the split must land on column 0.
    X = [[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]]
    y = [1.0, 1.0, 9.0, 9.0]
    model = fit(X, y, hp_for(n_estimators=1, max_depth=1, min_child_weight=1.0))
    assert model.trees[0].feature == 0


def test_constant_feature_columns_are_never_chosen():
    X = [[5.0, float(i)] for i in range(8)]
    y = [float(i * i) for i in range(8)]
    model = fit(X, y, hp_for(n_estimators=5, max_depth=2, min_child_weight=1.0))
    assert feature_importance(model)["f0"] == 0.0


def test_single_feature_dependence_dominates_importance(pinned_complexity_dataset):
    rows, targets = pinned_complexity_dataset
    model = fit(rows, targets, Hyperparameters(seed=1))
    importances = feature_importance(model)
    assert importances["f2"] > 0.9
    assert sum(importances.values()) == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _probe_set(d: int, n: int = 100) -> list[list[float]]:
    rng = random.Random(17)
    return [[rng.uniform(-20, 20) for _ in range(d)] for _ in range(n)]


def test_save_load_round_trip_is_bit_identical(tmp_path):
    rng = random.Random(31)
    X = [[rng.uniform(0, 10) for _ in range(3)] for _ in range(35)]
    y = [a + 2 * b - c + rng.uniform(-1, 1) for a, b, c in X]
    model = fit(X, y, Hyperparameters(n_estimators=25, seed=2))
    path = tmp_path / "model.json"
    save_model(model, path)
    loaded = load_model(path)
    for row in _probe_set(3):
        assert predict(model, row) == predict(loaded, row)  # 0 ULP
    assert feature_importance(loaded) == feature_importance(model)


def test_unknown_version_is_rejected(tmp_path):
    model = fit([[1.0], [2.0], [3.0]], [1.0, 2.0, 3.0], hp_for(n_estimators=1))
    path = tmp_path / "model.json"
    save_model(model, path)
    payload = json.loads(path.read_text())
    payload["format_version"] = "gbdt-json-99"
    path.write_text(json.dumps(payload))
    with pytest.raises(ModelVersionError):
        load_model(path)


def test_truncated_artifact_is_rejected(tmp_path):
    model = fit([[1.0], [2.0], [3.0]], [1.0, 2.0, 3.0], hp_for(n_estimators=1))
    path = tmp_path / "model.json"
    save_model(model, path)
    path.write_text(path.read_text()[: len(path.read_text()) // 2])
    with pytest.raises(ModelFormatError):
        load_model(path)


def test_feature_name_count_mismatch_is_rejected(tmp_path):
    X = [[float(i), float(i % 2)] for i in range(10)]
    y = [100.0 * (i % 2) for i in range(10)]  # forces splits on feature 1
    model = fit(X, y, hp_for(n_estimators=3, min_child_weight=1.0))
    path = tmp_path / "model.json"
    save_model(model, path)
    payload = json.loads(path.read_text())
    payload["feature_names"] = payload["feature_names"][:1]
    path.write_text(json.dumps(payload))
    with pytest.raises(ModelConsistencyError):
        load_model(path)


def test_artifact_has_documented_shape(tmp_path):
    model = fit([[1.0], [2.0], [3.0], [4.0]], [1.0, 2.0, 8.0, 9.0],
                hp_for(n_estimators=2, min_child_weight=1.0))
    path = tmp_path / "model.json"
    save_model(model, path, trained_at="2026-01-01T00:00:00+00:00")
    payload = json.loads(path.read_text())
    assert payload["format_version"] == FORMAT_VERSION
    assert set(payload) == {
        "format_version",
        "base_score",
        "learning_rate",
        "feature_names",
        "hyperparameters",
        "trees",
        "trained_at",
        "n_train",
    }
    assert payload["n_train"] == 4
