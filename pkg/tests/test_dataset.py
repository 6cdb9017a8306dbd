from __future__ import annotations

import math

import pytest

from quotekit.dataset import (
    CsvSchemaError,
    DealRecord,
    GeneratorSpec,
    GroupStructure,
    Moments,
    RecordValidationError,
    encode_features,
    encode_matrix,
    feature_columns,
    generate_synthetic,
    load_dataset,
    save_dataset,
    summarize,
    FEATURE_NAMES,
)
from quotekit.defaults import default_generator_spec

FIXTURE_CSV_HEADER = (
    "record_id,client_group,industry,client_revenue,est_duration_weeks,"
    "pain_severity_score,integration_complexity,phase,tech_stack,price,provenance"
)


def record(**overrides) -> DealRecord:
    fields = dict(
        record_id="r1",
        client_group="g1",
        industry="saas",
        client_revenue=1_000_000.0,
        est_duration_weeks=8,
        pain_severity_score=3,
        integration_complexity=4,
        phase=1,
        tech_stack="custom",
        price=10_000.0,
        provenance="real",
    )
    fields.update(overrides)
    return DealRecord(**fields)


# ---------------------------------------------------------------------------
# CSV loading
# ---------------------------------------------------------------------------

def test_load_fixture_layout(fixture_dir):
    records = load_dataset(fixture_dir / "deals_70.csv")
    assert len(records) == 70
    groups = {r.client_group for r in records}
    assert len(groups) == 50
    real = [r for r in records if r.provenance == "real"]
    synthetic = [r for r in records if r.provenance == "synthetic"]
    assert len(real) == 40 and len(synthetic) == 30
    assert {r.client_group for r in real} == {str(i) for i in range(2, 22)}
    assert all(22 <= int(r.client_group) <= 71 for r in synthetic)
    assert {r.client_group for r in real}.isdisjoint({r.client_group for r in synthetic})


def test_load_parses_tech_stack_literal(tmp_path):
    path = tmp_path / "one.csv"
    path.write_text(
        FIXTURE_CSV_HEADER + "\nr1,g1,saas,500000,6,3,4,1,custom,9000,real\n"
    )
    records = load_dataset(path)
    assert records[0].tech_stack == "custom"
    assert records[0].client_revenue == 500_000.0


def test_load_rejects_out_of_range_score_with_row_number(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text(
        FIXTURE_CSV_HEADER
        + "\nr1,g1,saas,500000,6,3,4,1,custom,9000,real\n"
        + "r2,g2,saas,500000,6,6,4,1,custom,9000,real\n"
    )
    with pytest.raises(RecordValidationError, match=r"row 3.*\[1, 5\]"):
        load_dataset(path)


def test_load_rejects_missing_and_unknown_columns(tmp_path):
    path = tmp_path / "cols.csv"
    path.write_text("record_id,client_group\nr1,g1\n")
    with pytest.raises(CsvSchemaError, match="industry"):
        load_dataset(path)
    path.write_text(FIXTURE_CSV_HEADER + ",extra\nr1,g1,saas,5,6,3,4,1,custom,9,real,x\n")
    with pytest.raises(CsvSchemaError, match="extra"):
        load_dataset(path)


def test_load_rejects_duplicate_record_ids(tmp_path):
    path = tmp_path / "dup.csv"
    row = "r1,g1,saas,500000,6,3,4,1,custom,9000,real\n"
    path.write_text(FIXTURE_CSV_HEADER + "\n" + row + row)
    with pytest.raises(RecordValidationError, match="duplicate record_id"):
        load_dataset(path)


def test_load_rejects_group_with_mixed_provenance(tmp_path):
    path = tmp_path / "mixed.csv"
    path.write_text(
        FIXTURE_CSV_HEADER
        + "\nr1,g1,saas,500000,6,3,4,1,custom,9000,real\n"
        + "r2,g1,saas,500000,6,3,4,2,custom,9000,synthetic\n"
    )
    with pytest.raises(RecordValidationError, match="mixes"):
        load_dataset(path)


def test_record_field_validation():
    with pytest.raises(RecordValidationError):
        record(price=-5.0)
    with pytest.raises(RecordValidationError):
        record(tech_stack="mainframe")
    with pytest.raises(RecordValidationError):
        record(phase=5)
    with pytest.raises(RecordValidationError):
        record(est_duration_weeks=0)


# ---------------------------------------------------------------------------
# Summaries
# ---------------------------------------------------------------------------

def test_fixture_price_summary_matches_published_row(fixture_dir):
    stats = summarize(load_dataset(fixture_dir / "deals_70.csv")).columns["price"]
    assert stats.mean == pytest.approx(16_309, abs=1.0)
    assert stats.std == pytest.approx(11_485, abs=1.0)  # population denominator
    assert stats.min == 2_738.0
    assert stats.max == 40_000.0


def test_summary_of_single_record_is_degenerate():
    stats = summarize([record(price=10_000.0)]).columns["price"]
    assert stats.mean == stats.min == stats.max == 10_000.0
    assert stats.std == 0.0


def test_summary_two_records_population_std():
    records = [record(record_id="a", price=10_000.0), record(record_id="b", price=20_000.0)]
    stats = summarize(records).columns["price"]
    assert stats.mean == 15_000.0
    assert stats.std == 5_000.0


def test_summary_counts_by_provenance():
    records = [record(record_id="a"), record(record_id="b", client_group="g2",
                                              provenance="synthetic")]
    summary = summarize(records)
    assert summary.n == 2
    assert summary.provenance_counts == {"real": 1, "synthetic": 1}


def test_summary_of_empty_dataset_errors():
    with pytest.raises(ValueError):
        summarize([])


# ---------------------------------------------------------------------------
# Feature encoding
# ---------------------------------------------------------------------------

def test_one_hot_positions():
    for tech, block in (("no_code", (1, 0, 0)), ("low_code", (0, 1, 0)), ("custom", (0, 0, 1))):
        vector = encode_features(record(tech_stack=tech))
        assert vector.values[5:] == tuple(float(b) for b in block)
        assert sum(vector.values[5:]) == 1.0


def test_service_payload_encoding_order():
    raw = {
        "client_revenue": 1_000_000,
        "est_duration_weeks": 8,
        "pain_severity_score": 3,
        "integration_complexity": 4,
        "phase": 1,
        "tech_stack": "custom",
    }
    vector = encode_features(raw)
    assert vector.values == (1_000_000.0, 8.0, 3.0, 4.0, 1.0, 0.0, 0.0, 1.0)
    assert vector.names == FEATURE_NAMES


def test_encode_is_pure():
    raw = {
        "client_revenue": 2_500_000,
        "est_duration_weeks": 12,
        "pain_severity_score": 4,
        "integration_complexity": 5,
        "phase": 2,
        "tech_stack": "low_code",
    }
    assert encode_features(raw) == encode_features(dict(raw))


def test_encode_rejects_out_of_range_and_unknown_tech():
    with pytest.raises(RecordValidationError, match=r"\[1, 4\]"):
        encode_features(
            {
                "client_revenue": 1.0,
                "est_duration_weeks": 1,
                "pain_severity_score": 1,
                "integration_complexity": 1,
                "phase": 5,
                "tech_stack": "custom",
            }
        )
    with pytest.raises(RecordValidationError, match="no_code"):
        encode_features(record(tech_stack="custom").__dict__ | {"tech_stack": "cobol"})


def test_feature_columns_ablation_shapes():
    assert len(feature_columns()) == 8
    assert len(feature_columns("integration_complexity")) == 7
    assert len(feature_columns("tech_stack")) == 5
    with pytest.raises(ValueError):
        feature_columns("industry")


# ---------------------------------------------------------------------------
# Synthetic generation
# ---------------------------------------------------------------------------

def test_zero_noise_prices_equal_latent_function():
    spec = default_generator_spec(seed=3)
    spec = GeneratorSpec(
        revenue=spec.revenue,
        duration=spec.duration,
        pain=spec.pain,
        complexity=spec.complexity,
        phase=spec.phase,
        price=Moments(mean=16_309.0, std=11_485.0, min=1.0, max=10_000_000.0),
        tech_probs=spec.tech_probs,
        coefficients=spec.coefficients,
        noise_std=0.0,
        groups=GroupStructure(),
        seed=3,
    )
    for r in generate_synthetic(spec, 40):
        latent = spec.coefficients.price(
            client_revenue=r.client_revenue,
            est_duration_weeks=r.est_duration_weeks,
            pain_severity_score=r.pain_severity_score,
            integration_complexity=r.integration_complexity,
            phase=r.phase,
            tech_stack=r.tech_stack,
        )
        assert r.price == round(latent, 2)


def test_default_spec_moments_at_70():
    spec = default_generator_spec()
    summary = summarize(generate_synthetic(spec, 70))
    assert summary.columns["price"].mean == pytest.approx(spec.price.mean, rel=0.15)
    assert summary.columns["est_duration_weeks"].mean == pytest.approx(
        spec.duration.mean, rel=0.15
    )
    # Revenue is heavy-tailed: check the median against the log-normal median.
    revenues = sorted(r.client_revenue for r in generate_synthetic(spec, 70))
    implied_median = spec.revenue.mean / math.sqrt(
        1.0 + (spec.revenue.std / spec.revenue.mean) ** 2
    )
    assert implied_median / 2.5 <= revenues[35] <= implied_median * 2.5


def test_moments_converge_at_1000():
    spec = default_generator_spec()
    summary = summarize(generate_synthetic(spec, 1000))
    for column, target in (
        ("price", spec.price.mean),
        ("est_duration_weeks", spec.duration.mean),
        ("pain_severity_score", spec.pain.mean),
        ("integration_complexity", spec.complexity.mean),
        ("phase", spec.phase.mean),
    ):
        assert summary.columns[column].mean == pytest.approx(target, rel=0.05), column


def test_group_structure_shapes():
    spec = default_generator_spec()
    spec = GeneratorSpec(
        **{
            **spec.__dict__,
            "groups": GroupStructure(multi_phase_clients=4, phases_per_client=3),
        }
    )
    records = generate_synthetic(spec, 20)
    groups: dict[str, int] = {}
    for r in records:
        groups[r.client_group] = groups.get(r.client_group, 0) + 1
    multi = {g: n for g, n in groups.items() if n > 1}
    assert len(multi) == 4
    assert all(n == 3 for n in multi.values())
    assert sum(n for n in groups.values() if n == 1) == 8
    for g, n in multi.items():
        phases = sorted(r.phase for r in records if r.client_group == g)
        assert phases == [1, 2, 3]


def test_generation_is_deterministic_and_round_trips(tmp_path):
    spec = default_generator_spec()
    a = generate_synthetic(spec, 70)
    b = generate_synthetic(spec, 70)
    assert a == b
    path = tmp_path / "generated.csv"
    save_dataset(a, path)
    assert load_dataset(path) == a


def test_infeasible_spec_errors_before_sampling():
    with pytest.raises(ValueError, match="outside"):
        Moments(mean=50.0, std=1.0, min=1.0, max=10.0)
    with pytest.raises(ValueError, match="sum to 1"):
        GeneratorSpec(
            revenue=Moments(1e6, 1e6, 1e5, 1e8),
            duration=Moments(8, 4, 3, 20),
            pain=Moments(3.5, 1, 1, 5),
            complexity=Moments(3.5, 1, 1, 5),
            phase=Moments(1.5, 0.7, 1, 4),
            price=Moments(16_000, 11_000, 2_000, 40_000),
            tech_probs={"no_code": 0.5, "low_code": 0.5, "custom": 0.5},
            coefficients=default_generator_spec().coefficients,
            noise_std=100.0,
        )


def test_generated_groups_never_mix_with_real():
    records = list(generate_synthetic(default_generator_spec(), 70))
    assert all(r.provenance == "synthetic" for r in records)
    assert all(r.client_group.startswith("syn-") for r in records)


def test_encode_matrix_shapes():
    records = generate_synthetic(default_generator_spec(), 20)
    rows, targets, names = encode_matrix(records)
    assert len(rows) == len(targets) == 20
    assert names == FEATURE_NAMES
    rows7, _, names7 = encode_matrix(records, drop_feature="integration_complexity")
    assert len(rows7[0]) == 7 and "integration_complexity" not in names7
