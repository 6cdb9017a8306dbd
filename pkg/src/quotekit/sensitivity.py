"""Univariate sensitivity sweeps around a baseline deal, with monotonicity checks.

A sanity layer for the pricing model: varying one feature at a time from a
typical-deal baseline should move the predicted price in the economically
expected direction.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

from .dataset import RAW_FEATURES, TECH_STACKS, encode_features, validate_features
from .gbdt import GbdtModel, predict

# Adjacent points may differ by serialization rounding only; tree outputs are exact.
MONOTONICITY_TOLERANCE = 1.0


@dataclass(frozen=True)
class BaselineScenario:
    client_revenue: float = 1_000_000.0
    est_duration_weeks: int = 8
    pain_severity_score: int = 3
    integration_complexity: int = 3
    phase: int = 1
    tech_stack: str = "custom"

    def __post_init__(self) -> None:
        validate_features(**self.as_raw())

    def as_raw(self) -> dict:
        return {name: getattr(self, name) for name in RAW_FEATURES}


@dataclass(frozen=True)
class SensitivityCurve:
    feature: str
    points: tuple[tuple[float | str, float], ...]
    baseline: BaselineScenario

    def values(self) -> tuple[float | str, ...]:
        return tuple(v for v, _ in self.points)

    def prices(self) -> tuple[float, ...]:
        return tuple(p for _, p in self.points)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "points": [{"value": v, "price": p} for v, p in self.points],
            "baseline": self.baseline.as_raw(),
        }

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(["value", "price"])
        for value, price in self.points:
            writer.writerow([value, price])
        return buffer.getvalue()


@dataclass(frozen=True)
class MonotonicityReport:
    ok: bool
    direction: str
    violations: tuple[tuple[int, float], ...]  # (left point index, violation magnitude)
    max_violation: float


def univariate_sweep(
    model: GbdtModel,
    baseline: BaselineScenario,
    feature: str,
    values: Sequence[float | str] | None = None,
) -> SensitivityCurve:
    """Predict the baseline deal with one feature swept across the given values.

    tech_stack sweeps over the enum (canonical order by default); numeric
    features require strictly increasing in-range values.
    """
    if feature not in RAW_FEATURES:
        raise ValueError(f"unknown feature {feature!r}; expected one of {RAW_FEATURES}")
    if values is None:
        values = _default_values(feature)
    values = list(values)
    if len(values) < 1:
        raise ValueError("need at least one sweep value")
    if feature != "tech_stack":
        numeric = [float(v) for v in values]
        if any(b <= a for a, b in zip(numeric, numeric[1:])):
            raise ValueError("sweep values must be strictly increasing")
    points = []
    for value in values:
        raw = baseline.as_raw()
        raw[feature] = _coerce(feature, value)
        validate_features(**raw)  # rejects out-of-range sweep values
        price = predict(model, encode_features(raw))
        if not math.isfinite(price):
            raise ValueError(f"non-finite prediction at {feature}={value}")
        points.append((value, price))
    return SensitivityCurve(feature=feature, points=tuple(points), baseline=baseline)


def _default_values(feature: str) -> list:
    return {
        "client_revenue": [1e5, 5e5, 1e6, 5e6, 1e7, 5e7, 1e8],
        "est_duration_weeks": list(range(3, 21)),
        "pain_severity_score": [1, 2, 3, 4, 5],
        "integration_complexity": [1, 2, 3, 4, 5],
        "phase": [1, 2, 3, 4],
        "tech_stack": list(TECH_STACKS),
    }[feature]


def _coerce(feature: str, value):
    if feature == "tech_stack":
        return value
    if feature == "client_revenue":
        return float(value)
    return int(value)


def monotonicity_check(curve: SensitivityCurve, direction: str) -> MonotonicityReport:
    """Compare adjacent price pairs with a $1 absolute tolerance."""
    if direction not in ("non_decreasing", "non_increasing"):
        raise ValueError("direction must be 'non_decreasing' or 'non_increasing'")
    prices = curve.prices()
    if len(prices) < 2:
        raise ValueError("curve needs at least 2 points")
    violations = []
    for i, (a, b) in enumerate(zip(prices, prices[1:])):
        delta = b - a if direction == "non_decreasing" else a - b
        if delta < -MONOTONICITY_TOLERANCE:
            violations.append((i, -delta))
    return MonotonicityReport(
        ok=not violations,
        direction=direction,
        violations=tuple(violations),
        max_violation=max((m for _, m in violations), default=0.0),
    )


def sweep_ratio(curve: SensitivityCurve) -> float:
    """Last predicted price divided by the first."""
    prices = curve.prices()
    if prices[0] <= 0:
        raise ValueError(f"first price must be positive, got {prices[0]}")
    return prices[-1] / prices[0]
