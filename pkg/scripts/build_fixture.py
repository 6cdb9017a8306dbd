#!/usr/bin/env python3
"""Build the frozen 70-row benchmark fixture CSV.

Layout: 40 real records across 20 client groups (IDs 2-21, sizes
1x4 / 5x3 / 7x2 / 7x1) plus 30 synthetic singletons with group IDs scattered
over 22-71. The price column is moment-adjusted so the population statistics
match the published benchmark row exactly (mean 16,309 / std 11,485 /
min 2,738 / max 40,000) while preserving the latent feature-price rank order.

Run once; the output is committed at tests/fixtures/deals_70.csv.
"""

from __future__ import annotations

import math
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from quotekit.dataset import (
    DealRecord,
    load_dataset,
    save_dataset,
    summarize,
)
from quotekit.defaults import DEFAULT_COEFFICIENTS, default_generator_spec
from quotekit.splits import group_kfold, group_shuffle_split, verify_no_leakage

TARGET = {"mean": 16_309.0, "std": 11_485.0, "min": 2_738.0, "max": 40_000.0}

REAL_GROUP_SIZES = [4, 3, 3, 3, 3, 3, 2, 2, 2, 2, 2, 2, 2, 1, 1, 1, 1, 1, 1, 1]
REAL_INDUSTRIES = [
    "digital_marketing",  # the 4-phase client
    "avatar",  # a 3-phase client
    "saas",
    "ecommerce",
    "healthcare",
    "fintech",
    "manufacturing",
    "real_estate",
    "logistics",
    "education",
    "hospitality",
    "legal",
    "media",
    "construction",
    "recruiting",
    "insurance",
    "automotive",
    "fitness",
    "nonprofit",
    "agriculture",
]

SEED = 2024


def sample_features(rng: random.Random) -> dict:
    spec = default_generator_spec()
    sigma2 = math.log(1.0 + (spec.revenue.std / spec.revenue.mean) ** 2)
    mu = math.log(spec.revenue.mean) - sigma2 / 2.0
    revenue = math.exp(rng.gauss(mu, math.sqrt(sigma2)))
    revenue = round(min(max(revenue, spec.revenue.min), spec.revenue.max), 2)
    d_sigma2 = math.log(1.0 + (spec.duration.std / spec.duration.mean) ** 2)
    d_mu = math.log(spec.duration.mean) - d_sigma2 / 2.0
    duration = int(round(math.exp(rng.gauss(d_mu, math.sqrt(d_sigma2)))))
    duration = int(min(max(duration, spec.duration.min), spec.duration.max))
    return {
        "client_revenue": revenue,
        "est_duration_weeks": duration,
        "pain_severity_score": rng.choices([2, 3, 4, 5], weights=[12, 33, 38, 17])[0],
        "integration_complexity": rng.choices([2, 3, 4, 5], weights=[8, 25, 36, 31])[0],
        "tech_stack": rng.choices(["no_code", "low_code", "custom"], weights=[2, 3, 5])[0],
    }


def build_rows() -> list[dict]:
    rng = random.Random(SEED)
    rows: list[dict] = []
    for client_index, size in enumerate(REAL_GROUP_SIZES):
        group_id = client_index + 2
        industry = REAL_INDUSTRIES[client_index]
        base = sample_features(rng)
        for phase in range(1, size + 1):
            features = dict(base)
            features["est_duration_weeks"] = sample_features(rng)["est_duration_weeks"]
            features["pain_severity_score"] = sample_features(rng)["pain_severity_score"]
            rows.append(
                {
                    "record_id": f"{group_id:02d}-{phase}",
                    "client_group": str(group_id),
                    "industry": industry,
                    "phase": phase,
                    "provenance": "real",
                    **features,
                }
            )
    synthetic_ids = sorted(rng.sample(range(22, 72), 30))
    for group_id in synthetic_ids:
        features = sample_features(rng)
        rows.append(
            {
                "record_id": f"{group_id:02d}-1",
                "client_group": str(group_id),
                "industry": rng.choice(REAL_INDUSTRIES[2:]),
                "phase": rng.choices([1, 2, 3], weights=[60, 30, 10])[0],
                "provenance": "synthetic",
                **features,
            }
        )
    return rows


def latent_price(row: dict, rng: random.Random) -> float:
    value = DEFAULT_COEFFICIENTS.price(
        client_revenue=row["client_revenue"],
        est_duration_weeks=row["est_duration_weeks"],
        pain_severity_score=row["pain_severity_score"],
        integration_complexity=row["integration_complexity"],
        phase=row["phase"],
        tech_stack=row["tech_stack"],
    )
    return value * rng.uniform(0.93, 1.07)


def adjust_prices(raw: list[float]) -> list[float]:
    """Pin min/max rows, then affine-adjust the interior to the exact moments."""
    n = len(raw)
    order = sorted(range(n), key=lambda i: raw[i])
    prices = list(raw)
    prices[order[0]] = TARGET["min"]
    prices[order[-1]] = TARGET["max"]
    interior = [i for i in order[1:-1]]
    total_sum = TARGET["mean"] * n
    total_sq = (TARGET["std"] ** 2 + TARGET["mean"] ** 2) * n
    want_sum = total_sum - TARGET["min"] - TARGET["max"]
    want_sq = total_sq - TARGET["min"] ** 2 - TARGET["max"] ** 2
    want_mean = want_sum / len(interior)
    want_std = math.sqrt(want_sq / len(interior) - want_mean**2)
    for _ in range(500):
        values = [prices[i] for i in interior]
        mean = sum(values) / len(values)
        std = math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))
        if abs(mean - want_mean) < 0.01 and abs(std - want_std) < 0.01:
            break
        scale = want_std / std
        for i in interior:
            adjusted = want_mean + (prices[i] - mean) * scale
            prices[i] = min(max(adjusted, TARGET["min"] + 10.0), TARGET["max"] - 10.0)
    return [round(p, 2) for p in prices]


def main() -> None:
    rng = random.Random(SEED + 1)
    rows = build_rows()
    assert len(rows) == 70
    raw_prices = [latent_price(row, rng) for row in rows]
    prices = adjust_prices(raw_prices)
    records = [
        DealRecord(price=price, **row) for row, price in zip(rows, prices)
    ]
    out = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "deals_70.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(records, out)

    loaded = load_dataset(out)
    stats = summarize(loaded).columns["price"]
    groups = {r.client_group for r in loaded}
    print(f"wrote {out} ({len(loaded)} records, {len(groups)} groups)")
    print(
        f"price: mean={stats.mean:.2f} std={stats.std:.2f} "
        f"min={stats.min:.2f} max={stats.max:.2f}"
    )

    for seed in range(200):
        plan = group_shuffle_split(loaded, 0.2, seed)
        if len(plan.train_indices) != 56 or len(plan.test_indices) != 14:
            continue
        if not verify_no_leakage(plan, loaded).ok:
            continue
        train = [loaded[i] for i in plan.train_indices]
        folds = group_kfold(train, 3)
        sizes = sorted((len(f) for f in folds.folds), reverse=True)
        if all(abs(a - b) <= 2 for a, b in zip(sizes, (19, 19, 18))):
            print(f"fixture split seed {seed}: 56/14, train-side fold sizes {sizes}")
            break
    else:
        raise SystemExit("no split seed produced a 56/14 split with balanced folds")


if __name__ == "__main__":
    main()
