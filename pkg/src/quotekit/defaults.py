"""Pinned default generator spec, hyperparameters, and desk-scale model helpers.

The default generator is calibrated so that a 70-record draw reproduces the
benchmark dataset's published shape: a right-skewed price target around a
$16.3k mean, log-normal client revenue, and monotone feature economics with a
multiplicative (non-additive) deal-value function. The pinned seeds below are
part of the repository's reproducibility contract; regression tests depend on
them.
"""

from __future__ import annotations

from functools import lru_cache

from .dataset import (
    Dataset,
    GeneratorSpec,
    GroupStructure,
    Moments,
    PricingCoefficients,
    encode_matrix,
    generate_synthetic,
)
from .gbdt import GbdtModel, Hyperparameters, fit
from .splits import SplitPlan, group_shuffle_split

DEFAULT_N = 70
DEFAULT_GENERATOR_SEED = 17
DEFAULT_SPLIT_SEED = 19
DEFAULT_TEST_FRACTION = 0.2
DEFAULT_FOLDS = 3

# Multiplicative deal-value function. Complexity is deliberately the dominant
# driver (convex in the score), pain second; phase carries no pricing signal
# (it exists to exercise group structure and as a null-feature control in
# ablations). The rush and enterprise premiums are regime interactions that a
# purely additive model cannot represent.
DEFAULT_COEFFICIENTS = PricingCoefficients(
    base=6100.0,
    pain={1: 0.5, 2: 0.68, 3: 1.0, 4: 1.4, 5: 2.0},
    complexity={1: 0.42, 2: 0.58, 3: 0.95, 4: 1.55, 5: 2.6},
    phase={1: 1.0, 2: 1.0, 3: 1.0, 4: 1.0},
    tech={"no_code": 0.85, "low_code": 1.0, "custom": 1.15},
    revenue_brackets=(
        (5e5, 0.7),
        (2e6, 0.95),
        (1e7, 1.25),
        (5e7, 1.6),
        (float("inf"), 2.05),
    ),
    duration_exponent=0.6,
    duration_reference_weeks=8.0,
    rush_multiplier=1.45,
    rush_max_weeks=5,
    rush_min_pain=4,
    enterprise_multiplier=1.4,
    enterprise_min_revenue=1e7,
    enterprise_tech="custom",
)


def default_generator_spec(seed: int = DEFAULT_GENERATOR_SEED) -> GeneratorSpec:
    return GeneratorSpec(
        revenue=Moments(mean=8_105_790.0, std=30_768_920.0, min=100_000.0, max=250_000_000.0),
        duration=Moments(mean=8.4, std=4.5, min=3, max=20),
        pain=Moments(mean=3.6, std=0.9, min=2, max=5),
        complexity=Moments(mean=3.9, std=0.9, min=2, max=5),
        phase=Moments(mean=1.6, std=0.7, min=1, max=4),
        price=Moments(mean=16_309.0, std=11_485.0, min=2_738.0, max=40_000.0),
        tech_probs={"no_code": 0.2, "low_code": 0.3, "custom": 0.5},
        coefficients=DEFAULT_COEFFICIENTS,
        noise_std=700.0,
        groups=GroupStructure(multi_phase_clients=6, phases_per_client=3),
        seed=seed,
    )


def default_hyperparameters(seed: int = 0) -> Hyperparameters:
    return Hyperparameters(seed=seed)


@lru_cache(maxsize=4)
def pinned_dataset(seed: int = DEFAULT_GENERATOR_SEED) -> tuple:
    return tuple(generate_synthetic(default_generator_spec(seed), DEFAULT_N))


def pinned_split(records: Dataset | tuple | None = None) -> SplitPlan:
    records = list(records) if records is not None else list(pinned_dataset())
    return group_shuffle_split(records, DEFAULT_TEST_FRACTION, DEFAULT_SPLIT_SEED)


@lru_cache(maxsize=2)
def pinned_model() -> GbdtModel:
    """Desk-scale model: default generator dataset, default hyperparameters."""
    records = list(pinned_dataset())
    rows, targets, names = encode_matrix(records)
    return fit(rows, targets, default_hyperparameters(), feature_names=names)
