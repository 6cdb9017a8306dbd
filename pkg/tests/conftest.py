from __future__ import annotations

import random
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def pinned_complexity_dataset():
    """Synthetic rows where the target depends only on column 2 (plus tiny noise)."""
    rng = random.Random(42)
    rows = [[rng.uniform(0, 10) for _ in range(5)] for _ in range(60)]
    targets = [1_000.0 + 2_500.0 * row[2] + rng.uniform(-20, 20) for row in rows]
    return rows, targets
