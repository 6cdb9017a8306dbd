from __future__ import annotations

import json
from pathlib import Path

import pytest

from oracle_harness import oracle_compare
from oracle_harness.cli import main


def write(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload))
    return path


def test_identical_files_trivially_pass(tmp_path):
    payload = {"cv_r2_mean": 0.8, "cv_mae_mean": 3000.0,
               "train_predictions": [1.0, 2.0, 3.0]}
    a = write(tmp_path / "a.json", payload)
    b = write(tmp_path / "b.json", payload)
    report = oracle_compare(a, b)
    assert report["passed"]
    assert report["pearson"] == pytest.approx(1.0)
    assert report["max_abs_gap"] == 0.0
    assert report["cv_r2_pair"] == [0.8, 0.8]
    assert report["cv_mae_pair"] == [3000.0, 3000.0]
    assert report["prediction_pairs"] == [[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]
    assert -1.0 <= report["pearson"] <= 1.0


def test_large_r2_gap_fails_with_named_criterion(tmp_path):
    a = write(tmp_path / "a.json", {"cv_r2_mean": 0.8})
    b = write(tmp_path / "b.json", {"cv_r2_mean": 0.5, "status": "ok"})
    report = oracle_compare(a, b)
    assert not report["passed"]
    assert report["failures"] == ["cv_r2_band"]


def test_empty_prediction_arrays_are_a_shape_error(tmp_path):
    a = write(tmp_path / "a.json", {"predictions": []})
    b = write(tmp_path / "b.json", {"train_predictions": []})
    with pytest.raises(ValueError, match="shape"):
        oracle_compare(a, b)


def test_mismatched_lengths_are_a_shape_error(tmp_path):
    a = write(tmp_path / "a.json", {"predictions": [1.0, 2.0]})
    b = write(tmp_path / "b.json", {"train_predictions": [1.0]})
    with pytest.raises(ValueError, match="shape"):
        oracle_compare(a, b)


def test_nothing_to_compare_is_an_error(tmp_path):
    a = write(tmp_path / "a.json", {})
    b = write(tmp_path / "b.json", {"status": "ok"})
    with pytest.raises(ValueError, match="nothing to compare"):
        oracle_compare(a, b)


def test_skipped_reference_propagates(tmp_path):
    a = write(tmp_path / "a.json", {"cv_r2_mean": 0.8})
    b = write(tmp_path / "b.json", {"status": "skipped", "reason": "xgboost not importable"})
    report = oracle_compare(a, b)
    assert report["status"] == "skipped"


def test_cli_compare_exit_codes(tmp_path, capsys):
    a = write(tmp_path / "a.json", {"cv_r2_mean": 0.8})
    good = write(tmp_path / "good.json", {"cv_r2_mean": 0.82, "status": "ok"})
    bad = write(tmp_path / "bad.json", {"cv_r2_mean": 0.3, "status": "ok"})
    skip = write(tmp_path / "skip.json", {"status": "skipped", "reason": "missing"})
    assert main(["compare", "--primary", str(a), "--reference", str(good)]) == 0
    assert main(["compare", "--primary", str(a), "--reference", str(bad)]) == 1
    assert main(["compare", "--primary", str(a), "--reference", str(skip)]) == 3
    capsys.readouterr()
