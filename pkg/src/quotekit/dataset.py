"""Deal records, CSV ingestion, feature encoding, and the synthetic data generator."""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

TECH_STACKS = ("no_code", "low_code", "custom")
PROVENANCES = ("real", "synthetic")

# Canonical encoding order: 5 numeric features then the tech_stack one-hot block.
FEATURE_NAMES = (
    "client_revenue",
    "est_duration_weeks",
    "pain_severity_score",
    "integration_complexity",
    "phase",
    "tech_no_code",
    "tech_low_code",
    "tech_custom",
)
RAW_FEATURES = (
    "client_revenue",
    "est_duration_weeks",
    "pain_severity_score",
    "integration_complexity",
    "phase",
    "tech_stack",
)

CSV_HEADER = [
    "record_id",
    "client_group",
    "industry",
    "client_revenue",
    "est_duration_weeks",
    "pain_severity_score",
    "integration_complexity",
    "phase",
    "tech_stack",
    "price",
    "provenance",
]


class CsvSchemaError(ValueError):
    """CSV header does not match the canonical column set."""


class RecordValidationError(ValueError):
    """A field value violates the deal-record contract."""


@dataclass(frozen=True)
class DealRecord:
    record_id: str
    client_group: str
    industry: str
    client_revenue: float
    est_duration_weeks: int
    pain_severity_score: int
    integration_complexity: int
    phase: int
    tech_stack: str
    price: float
    provenance: str

    def __post_init__(self) -> None:
        validate_features(
            client_revenue=self.client_revenue,
            est_duration_weeks=self.est_duration_weeks,
            pain_severity_score=self.pain_severity_score,
            integration_complexity=self.integration_complexity,
            phase=self.phase,
            tech_stack=self.tech_stack,
        )
        if not self.record_id:
            raise RecordValidationError("record_id must be non-empty")
        if not (self.price > 0):
            raise RecordValidationError(f"price must be positive, got {self.price}")
        if self.provenance not in PROVENANCES:
            raise RecordValidationError(
                f"provenance must be one of {PROVENANCES}, got {self.provenance!r}"
            )


Dataset = list[DealRecord]


@dataclass(frozen=True)
class FeatureVector:
    values: tuple[float, ...]
    names: tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self) -> None:
        if len(self.values) != len(self.names):
            raise ValueError("values/names length mismatch")


@dataclass(frozen=True)
class ColumnStats:
    mean: float
    std: float
    min: float
    max: float


@dataclass(frozen=True)
class DatasetSummary:
    n: int
    columns: dict[str, ColumnStats]
    provenance_counts: dict[str, int]


def validate_features(
    *,
    client_revenue: float,
    est_duration_weeks: int,
    pain_severity_score: int,
    integration_complexity: int,
    phase: int,
    tech_stack: str,
) -> None:
    """Raise RecordValidationError on any out-of-contract raw feature value."""
    if not (isinstance(client_revenue, (int, float)) and math.isfinite(client_revenue)):
        raise RecordValidationError(f"client_revenue must be finite, got {client_revenue!r}")
    if not client_revenue > 0:
        raise RecordValidationError(f"client_revenue must be positive, got {client_revenue}")
    if not (isinstance(est_duration_weeks, int) and est_duration_weeks >= 1):
        raise RecordValidationError(
            f"est_duration_weeks must be an integer >= 1, got {est_duration_weeks!r}"
        )
    for name, value in (
        ("pain_severity_score", pain_severity_score),
        ("integration_complexity", integration_complexity),
    ):
        if not (isinstance(value, int) and 1 <= value <= 5):
            raise RecordValidationError(f"{name} must be an integer in [1, 5], got {value!r}")
    if not (isinstance(phase, int) and 1 <= phase <= 4):
        raise RecordValidationError(f"phase must be an integer in [1, 4], got {phase!r}")
    if tech_stack not in TECH_STACKS:
        raise RecordValidationError(
            f"tech_stack must be one of {TECH_STACKS}, got {tech_stack!r}"
        )


def encode_features(record: DealRecord | dict) -> FeatureVector:
    """Encode a record (or raw feature mapping) into the canonical 8-column vector.

    Numeric features pass through unscaled; tech_stack becomes a one-hot block.
    """
    if isinstance(record, DealRecord):
        raw = {name: getattr(record, name) for name in RAW_FEATURES}
    else:
        missing = [name for name in RAW_FEATURES if name not in record]
        if missing:
            raise RecordValidationError(f"missing raw features: {', '.join(missing)}")
        raw = {name: record[name] for name in RAW_FEATURES}
    validate_features(**raw)
    one_hot = tuple(1.0 if raw["tech_stack"] == t else 0.0 for t in TECH_STACKS)
    values = (
        float(raw["client_revenue"]),
        float(raw["est_duration_weeks"]),
        float(raw["pain_severity_score"]),
        float(raw["integration_complexity"]),
        float(raw["phase"]),
    ) + one_hot
    return FeatureVector(values=values)


def feature_columns(drop_feature: str | None = None) -> tuple[str, ...]:
    """Encoded column names, optionally with one raw feature ablated."""
    if drop_feature is None:
        return FEATURE_NAMES
    if drop_feature not in RAW_FEATURES:
        raise ValueError(f"unknown feature {drop_feature!r}; expected one of {RAW_FEATURES}")
    if drop_feature == "tech_stack":
        dropped = {"tech_no_code", "tech_low_code", "tech_custom"}
    else:
        dropped = {drop_feature}
    return tuple(name for name in FEATURE_NAMES if name not in dropped)


def encode_matrix(
    records: Sequence[DealRecord], drop_feature: str | None = None
) -> tuple[list[list[float]], list[float], tuple[str, ...]]:
    """Encode records into (X rows, y targets, column names) for model training."""
    columns = feature_columns(drop_feature)
    keep = [FEATURE_NAMES.index(name) for name in columns]
    rows = []
    targets = []
    for record in records:
        vector = encode_features(record)
        rows.append([vector.values[i] for i in keep])
        targets.append(record.price)
    return rows, targets, columns


def load_dataset(path: str | Path) -> Dataset:
    """Parse the canonical CSV into validated records, preserving row order."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        missing = [c for c in CSV_HEADER if c not in header]
        unknown = [c for c in header if c not in CSV_HEADER]
        if missing:
            raise CsvSchemaError(f"missing column(s): {', '.join(missing)}")
        if unknown:
            raise CsvSchemaError(f"unknown column(s): {', '.join(unknown)}")
        records: Dataset = []
        seen_ids: set[str] = set()
        group_provenance: dict[str, str] = {}
        for row_number, row in enumerate(reader, start=2):
            try:
                record = DealRecord(
                    record_id=row["record_id"],
                    client_group=row["client_group"],
                    industry=row["industry"],
                    client_revenue=float(row["client_revenue"]),
                    est_duration_weeks=int(row["est_duration_weeks"]),
                    pain_severity_score=int(row["pain_severity_score"]),
                    integration_complexity=int(row["integration_complexity"]),
                    phase=int(row["phase"]),
                    tech_stack=row["tech_stack"],
                    price=float(row["price"]),
                    provenance=row["provenance"],
                )
            except (RecordValidationError, ValueError) as exc:
                raise RecordValidationError(f"row {row_number}: {exc}") from exc
            if record.record_id in seen_ids:
                raise RecordValidationError(
                    f"row {row_number}: duplicate record_id {record.record_id!r}"
                )
            seen_ids.add(record.record_id)
            previous = group_provenance.setdefault(record.client_group, record.provenance)
            if previous != record.provenance:
                raise RecordValidationError(
                    f"row {row_number}: client_group {record.client_group!r} mixes "
                    "real and synthetic provenance"
                )
            records.append(record)
    return records


def save_dataset(records: Sequence[DealRecord], path: str | Path) -> None:
    """Write records as canonical CSV (UTF-8, unquoted numerics)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow(
                [
                    r.record_id,
                    r.client_group,
                    r.industry,
                    _format_number(r.client_revenue),
                    r.est_duration_weeks,
                    r.pain_severity_score,
                    r.integration_complexity,
                    r.phase,
                    r.tech_stack,
                    _format_number(r.price),
                    r.provenance,
                ]
            )


def _format_number(value: float) -> str:
    # str(float) is the shortest representation that round-trips exactly.
    if value == int(value):
        return str(int(value))
    return str(value)


def summarize(records: Sequence[DealRecord]) -> DatasetSummary:
    """Per-column mean/std/min/max (population std) plus provenance counts."""
    if not records:
        raise ValueError("cannot summarize an empty dataset")
    numeric_columns = {
        "client_revenue": [r.client_revenue for r in records],
        "est_duration_weeks": [float(r.est_duration_weeks) for r in records],
        "pain_severity_score": [float(r.pain_severity_score) for r in records],
        "integration_complexity": [float(r.integration_complexity) for r in records],
        "phase": [float(r.phase) for r in records],
        "price": [r.price for r in records],
    }
    columns = {}
    for name, values in numeric_columns.items():
        n = len(values)
        mean = sum(values) / n
        variance = sum((v - mean) ** 2 for v in values) / n  # population denominator
        columns[name] = ColumnStats(
            mean=mean, std=math.sqrt(variance), min=min(values), max=max(values)
        )
    provenance_counts = {p: 0 for p in PROVENANCES}
    for r in records:
        provenance_counts[r.provenance] += 1
    return DatasetSummary(n=len(records), columns=columns, provenance_counts=provenance_counts)


# ---------------------------------------------------------------------------
# Synthetic generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Moments:
    mean: float
    std: float
    min: float
    max: float

    def __post_init__(self) -> None:
        if not self.min < self.max:
            raise ValueError(f"invalid range: min {self.min} must be < max {self.max}")
        if not self.min <= self.mean <= self.max:
            raise ValueError(f"mean {self.mean} outside [{self.min}, {self.max}]")
        if self.std < 0:
            raise ValueError("std must be >= 0")


@dataclass(frozen=True)
class PricingCoefficients:
    """Deterministic deal-value function: base * product of per-feature multipliers.

    Multiplier tables are keyed by the integer score (pain, complexity, phase)
    or by tech_stack name; revenue enters through ordered (upper bound, multiplier)
    brackets and duration through a power law around the reference week count.
    Two conditional premiums model regime effects that make the function
    genuinely non-additive: urgent short engagements (rush) and custom builds
    for large-revenue clients (enterprise).
    """

    base: float
    pain: dict[int, float]
    complexity: dict[int, float]
    phase: dict[int, float]
    tech: dict[str, float]
    revenue_brackets: tuple[tuple[float, float], ...]
    duration_exponent: float
    duration_reference_weeks: float
    rush_multiplier: float = 1.0
    rush_max_weeks: int = 0
    rush_min_pain: int = 6
    enterprise_multiplier: float = 1.0
    enterprise_min_revenue: float = float("inf")
    enterprise_tech: str = "custom"

    def price(
        self,
        *,
        client_revenue: float,
        est_duration_weeks: int,
        pain_severity_score: int,
        integration_complexity: int,
        phase: int,
        tech_stack: str,
    ) -> float:
        value = self.base
        value *= self.pain[pain_severity_score]
        value *= self.complexity[integration_complexity]
        value *= self.phase[phase]
        value *= self.tech[tech_stack]
        value *= self._revenue_multiplier(client_revenue)
        value *= (est_duration_weeks / self.duration_reference_weeks) ** self.duration_exponent
        if est_duration_weeks <= self.rush_max_weeks and pain_severity_score >= self.rush_min_pain:
            value *= self.rush_multiplier
        if client_revenue >= self.enterprise_min_revenue and tech_stack == self.enterprise_tech:
            value *= self.enterprise_multiplier
        return value

    def _revenue_multiplier(self, revenue: float) -> float:
        for upper, multiplier in self.revenue_brackets:
            if revenue < upper:
                return multiplier
        return self.revenue_brackets[-1][1]


@dataclass(frozen=True)
class GroupStructure:
    multi_phase_clients: int = 0
    phases_per_client: int = 2

    def __post_init__(self) -> None:
        if self.multi_phase_clients < 0:
            raise ValueError("multi_phase_clients must be >= 0")
        if self.multi_phase_clients and not 2 <= self.phases_per_client <= 4:
            raise ValueError("phases_per_client must be in [2, 4]")


@dataclass(frozen=True)
class GeneratorSpec:
    revenue: Moments
    duration: Moments
    pain: Moments
    complexity: Moments
    phase: Moments
    price: Moments
    tech_probs: dict[str, float]
    coefficients: PricingCoefficients
    noise_std: float
    groups: GroupStructure = field(default_factory=GroupStructure)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if set(self.tech_probs) != set(TECH_STACKS):
            raise ValueError(f"tech_probs must cover exactly {TECH_STACKS}")
        total = sum(self.tech_probs.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"tech_probs must sum to 1, got {total}")
        for name, m in (("pain", self.pain), ("complexity", self.complexity)):
            if m.min < 1 or m.max > 5:
                raise ValueError(f"{name} range must lie within [1, 5]")
        if self.phase.min < 1 or self.phase.max > 4:
            raise ValueError("phase range must lie within [1, 4]")
        if self.duration.min < 1:
            raise ValueError("duration range must start at >= 1 week")


INDUSTRY_POOL = (
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
)


def _lognormal_params(mean: float, std: float) -> tuple[float, float]:
    sigma2 = math.log(1.0 + (std / mean) ** 2)
    mu = math.log(mean) - sigma2 / 2.0
    return mu, math.sqrt(sigma2)


def _discrete_pmf(moments: Moments) -> list[tuple[int, float]]:
    """Integer pmf on [min, max] shaped like a truncated normal, centre tuned
    so the pmf mean matches the requested mean."""
    lo, hi = int(moments.min), int(moments.max)
    support = list(range(lo, hi + 1))
    std = max(moments.std, 0.25)

    def pmf_mean(centre: float) -> tuple[float, list[float]]:
        weights = [math.exp(-((v - centre) ** 2) / (2.0 * std * std)) for v in support]
        total = sum(weights)
        probs = [w / total for w in weights]
        return sum(v * p for v, p in zip(support, probs)), probs

    low_c, high_c = lo - 4.0 * std, hi + 4.0 * std
    for _ in range(80):  # bisection on the centre; pmf mean is monotone in it
        centre = (low_c + high_c) / 2.0
        mean, probs = pmf_mean(centre)
        if mean < moments.mean:
            low_c = centre
        else:
            high_c = centre
    _, probs = pmf_mean((low_c + high_c) / 2.0)
    return list(zip(support, probs))


def _sample_discrete(rng: random.Random, pmf: list[tuple[int, float]]) -> int:
    u = rng.random()
    cumulative = 0.0
    for value, prob in pmf:
        cumulative += prob
        if u < cumulative:
            return value
    return pmf[-1][0]


def generate_synthetic(spec: GeneratorSpec, n: int) -> Dataset:
    """Draw n deal records from the spec's distributions and pricing function.

    Deterministic for a fixed seed. Multi-phase clients contribute consecutive
    phases 1..p under a shared client_group (client-level revenue, tech stack,
    complexity, and industry are held fixed; duration and pain are redrawn per
    phase). Every other record gets a fresh singleton group with a sampled phase.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    structured = spec.groups.multi_phase_clients * spec.groups.phases_per_client
    if structured > n:
        raise ValueError(
            f"group structure needs {structured} records but n={n} were requested"
        )
    rng = random.Random(spec.seed)
    rev_mu, rev_sigma = _lognormal_params(spec.revenue.mean, spec.revenue.std)
    dur_mu, dur_sigma = _lognormal_params(spec.duration.mean, spec.duration.std)
    pain_pmf = _discrete_pmf(spec.pain)
    complexity_pmf = _discrete_pmf(spec.complexity)
    phase_pmf = _discrete_pmf(spec.phase)
    tech_names = list(TECH_STACKS)
    tech_weights = [spec.tech_probs[t] for t in tech_names]

    def draw_revenue() -> float:
        revenue = math.exp(rng.gauss(rev_mu, rev_sigma))
        return round(min(max(revenue, spec.revenue.min), spec.revenue.max), 2)

    def draw_duration() -> int:
        duration = int(round(math.exp(rng.gauss(dur_mu, dur_sigma))))
        return int(min(max(duration, spec.duration.min), spec.duration.max))

    def draw_tech() -> str:
        return rng.choices(tech_names, weights=tech_weights, k=1)[0]

    records: Dataset = []
    index = 0

    def make_record(features: dict, phase: int, group: str, industry: str) -> DealRecord:
        nonlocal index
        index += 1
        latent = spec.coefficients.price(phase=phase, **features)
        price = latent + (rng.gauss(0.0, spec.noise_std) if spec.noise_std > 0 else 0.0)
        price = round(min(max(price, spec.price.min), spec.price.max), 2)
        return DealRecord(
            record_id=f"syn-{index:04d}",
            client_group=group,
            industry=industry,
            phase=phase,
            price=price,
            provenance="synthetic",
            **features,
        )

    for client in range(spec.groups.multi_phase_clients):
        group = f"syn-group-{client + 1:03d}"
        industry = rng.choice(INDUSTRY_POOL)
        revenue = draw_revenue()
        tech = draw_tech()
        complexity = _sample_discrete(rng, complexity_pmf)
        for phase in range(1, spec.groups.phases_per_client + 1):
            features = {
                "client_revenue": revenue,
                "est_duration_weeks": draw_duration(),
                "pain_severity_score": _sample_discrete(rng, pain_pmf),
                "integration_complexity": complexity,
                "tech_stack": tech,
            }
            records.append(make_record(features, phase, group, industry))
    singleton = spec.groups.multi_phase_clients
    while len(records) < n:
        singleton += 1
        features = {
            "client_revenue": draw_revenue(),
            "est_duration_weeks": draw_duration(),
            "pain_severity_score": _sample_discrete(rng, pain_pmf),
            "integration_complexity": _sample_discrete(rng, complexity_pmf),
            "tech_stack": draw_tech(),
        }
        records.append(
            make_record(
                features,
                _sample_discrete(rng, phase_pmf),
                f"syn-group-{singleton:03d}",
                rng.choice(INDUSTRY_POOL),
            )
        )
    return records
