"""Inter-agent JSON contracts: a small schema validation engine, the two
canonical agent output schemas, and the feature-extraction bridge.

The engine implements exactly the schema subset the shipped contracts use
(object / array / string / number / integer, plus required, enum, items).
Validation is collect-all, depth-first, and reports dot-paths.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Any

from .dataset import validate_features

SUPPORTED_TYPES = ("object", "array", "string", "number", "integer")


class SchemaError(ValueError):
    """The schema itself is malformed (distinct from an invalid document)."""


@dataclass(frozen=True)
class Violation:
    path: str
    rule: str
    detail: str

    def to_dict(self) -> dict:
        return {"path": self.path, "rule": self.rule, "detail": self.detail}


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    violations: tuple[Violation, ...]

    def to_dict(self) -> dict:
        return {"valid": self.valid, "violations": [v.to_dict() for v in self.violations]}

    def __str__(self) -> str:
        if self.valid:
            return "valid"
        return "; ".join(f"{v.path or '$'}: {v.rule} ({v.detail})" for v in self.violations)


class SchemaDoc:
    """A parsed, well-formedness-checked schema tree."""

    def __init__(self, tree: dict):
        _check_schema(tree, "$")
        self.tree = tree

    @classmethod
    def from_json(cls, text: str) -> "SchemaDoc":
        try:
            tree = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"schema is not valid JSON: {exc}") from exc
        return cls(tree)

    def validate(self, document: Any) -> ValidationReport:
        violations: list[Violation] = []
        _validate_node(document, self.tree, "", violations)
        return ValidationReport(valid=not violations, violations=tuple(violations))


def _check_schema(node: Any, where: str) -> None:
    if not isinstance(node, dict):
        raise SchemaError(f"{where}: schema node must be an object")
    node_type = node.get("type")
    if node_type not in SUPPORTED_TYPES:
        raise SchemaError(f"{where}: unsupported or missing type {node_type!r}")
    if node_type == "object":
        properties = node.get("properties", {})
        if not isinstance(properties, dict):
            raise SchemaError(f"{where}: properties must be an object")
        for name, child in properties.items():
            _check_schema(child, f"{where}.{name}")
        required = node.get("required", [])
        if not isinstance(required, list):
            raise SchemaError(f"{where}: required must be a list")
        for name in required:
            if name not in properties:
                raise SchemaError(f"{where}: required name {name!r} not in properties")
    elif node_type == "array":
        if "items" not in node:
            raise SchemaError(f"{where}: array schema must declare items")
        _check_schema(node["items"], f"{where}[]")
    if "enum" in node:
        if not isinstance(node["enum"], list) or not node["enum"]:
            raise SchemaError(f"{where}: enum must be a non-empty list")


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _type_ok(value: Any, expected: str) -> bool:
    if expected == "object":
        return isinstance(value, dict)
    if expected == "array":
        return isinstance(value, list)
    if expected == "string":
        return isinstance(value, str)
    if expected == "number":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if expected == "integer":
        if isinstance(value, bool):
            return False
        if isinstance(value, int):
            return True
        return isinstance(value, float) and value.is_integer()
    return False


def _validate_node(value: Any, schema: dict, path: str, out: list[Violation]) -> None:
    expected = schema["type"]
    if not _type_ok(value, expected):
        out.append(
            Violation(path=path, rule="type",
                      detail=f"expected {expected}, got {type(value).__name__}")
        )
        return
    if "enum" in schema and value not in schema["enum"]:
        out.append(
            Violation(path=path, rule="enum",
                      detail=f"{value!r} not in {schema['enum']}")
        )
    if expected == "object":
        properties = schema.get("properties", {})
        for name in schema.get("required", []):
            if name not in value:
                out.append(
                    Violation(path=_join(path, name), rule="required",
                              detail="missing required property")
                )
        for name, child_schema in properties.items():
            if name in value:
                _validate_node(value[name], child_schema, _join(path, name), out)
    elif expected == "array":
        for i, element in enumerate(value):
            _validate_node(element, schema["items"], f"{path}[{i}]", out)


def validate(document: Any, schema: SchemaDoc) -> ValidationReport:
    return schema.validate(document)


# ---------------------------------------------------------------------------
# Canonical embedded contracts
# ---------------------------------------------------------------------------


def _resource_text(name: str) -> str:
    return resources.files("quotekit.resources").joinpath(name).read_text(encoding="utf-8")


def research_schema_text() -> str:
    """Exact bytes of the shipped research-agent contract."""
    return _resource_text("research_schema.json")


def draft_schema_text() -> str:
    """Exact bytes of the shipped draft-agent contract."""
    return _resource_text("draft_schema.json")


def research_schema() -> SchemaDoc:
    return SchemaDoc.from_json(research_schema_text())


def draft_schema() -> SchemaDoc:
    return SchemaDoc.from_json(draft_schema_text())


# Mini-contracts used by the orchestration runtime's LLM calls. Score ranges
# are expressed as integer enums, which keeps them inside the engine's subset.
TRANSCRIPT_FACTS_SCHEMA = SchemaDoc(
    {
        "type": "object",
        "properties": {
            "prospect_name": {"type": "string"},
            "company_name": {"type": "string"},
            "phase": {"type": "integer", "enum": [1, 2, 3, 4]},
            "est_duration_weeks": {"type": "integer"},
            "pain_severity_score": {"type": "integer", "enum": [1, 2, 3, 4, 5]},
            "integration_complexity": {"type": "integer", "enum": [1, 2, 3, 4, 5]},
            "tech_stack": {"type": "string", "enum": ["no_code", "low_code", "custom"]},
        },
        "required": [
            "prospect_name",
            "company_name",
            "phase",
            "est_duration_weeks",
            "pain_severity_score",
            "integration_complexity",
            "tech_stack",
        ],
    }
)

# Structural facts only; the two 1-5 scores come from dedicated scoring calls.
FACT_EXTRACTION_SCHEMA = SchemaDoc(
    {
        "type": "object",
        "properties": {
            "prospect_name": {"type": "string"},
            "company_name": {"type": "string"},
            "phase": {"type": "integer", "enum": [1, 2, 3, 4]},
            "est_duration_weeks": {"type": "integer"},
            "tech_stack": {"type": "string", "enum": ["no_code", "low_code", "custom"]},
        },
        "required": [
            "prospect_name",
            "company_name",
            "phase",
            "est_duration_weeks",
            "tech_stack",
        ],
    }
)

SCORE_SCHEMA = SchemaDoc(
    {
        "type": "object",
        "properties": {
            "score": {"type": "integer", "enum": [1, 2, 3, 4, 5]},
            "rationale": {"type": "string"},
        },
        "required": ["score", "rationale"],
    }
)

PRICING_DECISION_SCHEMA = SchemaDoc(
    {
        "type": "object",
        "properties": {
            "adjusted_price": {"type": "number"},
            "adjustment_rationale": {"type": "string"},
        },
        "required": ["adjusted_price", "adjustment_rationale"],
    }
)


# ---------------------------------------------------------------------------
# Typed views over the contracts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RevenueFinding:
    annual_revenue: float
    currency: str
    source: str
    confidence: str
    year: str


@dataclass(frozen=True)
class ResearchFindings:
    client_revenue: RevenueFinding
    company_summary: str
    prospect_summary: str

    @classmethod
    def from_dict(cls, payload: dict) -> "ResearchFindings":
        report = research_schema().validate(payload)
        if not report.valid:
            raise ValueError(f"research findings invalid: {report}")
        revenue = payload["client_revenue"]
        return cls(
            client_revenue=RevenueFinding(
                annual_revenue=float(revenue["annual_revenue"]),
                currency=revenue["currency"],
                source=revenue["source"],
                confidence=revenue["confidence"],
                year=revenue["year"],
            ),
            company_summary=payload["company_summary"],
            prospect_summary=payload["prospect_summary"],
        )

    def to_dict(self) -> dict:
        return {
            "client_revenue": {
                "annual_revenue": self.client_revenue.annual_revenue,
                "currency": self.client_revenue.currency,
                "source": self.client_revenue.source,
                "confidence": self.client_revenue.confidence,
                "year": self.client_revenue.year,
            },
            "company_summary": self.company_summary,
            "prospect_summary": self.prospect_summary,
        }


@dataclass(frozen=True)
class TranscriptFacts:
    prospect_name: str
    company_name: str
    phase: int
    est_duration_weeks: int
    pain_severity_score: int
    integration_complexity: int
    tech_stack: str

    @classmethod
    def from_dict(cls, payload: dict) -> "TranscriptFacts":
        report = TRANSCRIPT_FACTS_SCHEMA.validate(payload)
        if not report.valid:
            raise ValueError(f"transcript facts invalid: {report}")
        return cls(
            prospect_name=payload["prospect_name"],
            company_name=payload["company_name"],
            phase=int(payload["phase"]),
            est_duration_weeks=int(payload["est_duration_weeks"]),
            pain_severity_score=int(payload["pain_severity_score"]),
            integration_complexity=int(payload["integration_complexity"]),
            tech_stack=payload["tech_stack"],
        )

    def to_dict(self) -> dict:
        return {
            "prospect_name": self.prospect_name,
            "company_name": self.company_name,
            "phase": self.phase,
            "est_duration_weeks": self.est_duration_weeks,
            "pain_severity_score": self.pain_severity_score,
            "integration_complexity": self.integration_complexity,
            "tech_stack": self.tech_stack,
        }


@dataclass(frozen=True)
class ProposalDoc:
    """A draft-contract-conformant proposal payload.

    Beyond the schema, the deposit and final amounts must sum to the total
    (the drafting logic splits 50/50, deposit absorbing the odd cent), which
    makes malformed pricing sections detectable downstream.
    """

    data: dict

    @classmethod
    def from_dict(cls, payload: dict) -> "ProposalDoc":
        report = draft_schema().validate(payload)
        if not report.valid:
            raise ValueError(f"proposal invalid: {report}")
        pricing = payload["pricing_section"]
        total_cents = round(pricing["total_price"] * 100)
        deposit_cents = round(pricing["deposit_amount"] * 100)
        final_cents = round(pricing["final_amount"] * 100)
        if deposit_cents + final_cents != total_cents:
            raise ValueError(
                "proposal invalid: deposit_amount + final_amount must equal total_price"
            )
        return cls(data=payload)

    def to_dict(self) -> dict:
        return self.data


# ---------------------------------------------------------------------------
# Feature extraction bridge and contract checking
# ---------------------------------------------------------------------------


def extract_features(findings: ResearchFindings, facts: TranscriptFacts) -> dict:
    """Merge research output and transcript facts into the model's raw inputs.

    Revenue confidence is metadata for the caller to reason about, never a
    gate here.
    """
    if findings.client_revenue.currency != "USD":
        raise ValueError(
            f"currency conversion out of scope: got {findings.client_revenue.currency!r}"
        )
    raw = {
        "client_revenue": findings.client_revenue.annual_revenue,
        "est_duration_weeks": facts.est_duration_weeks,
        "pain_severity_score": facts.pain_severity_score,
        "integration_complexity": facts.integration_complexity,
        "phase": facts.phase,
        "tech_stack": facts.tech_stack,
    }
    validate_features(**raw)
    return raw


@dataclass(frozen=True)
class ContractReport:
    ok: bool
    failures: tuple[tuple[str, str], ...]  # (path, reason)


def check_contract(producer: SchemaDoc, consumer_required_paths: list[str]) -> ContractReport:
    """Check that every consumer path is declared and required all the way down."""
    failures: list[tuple[str, str]] = []
    for path in consumer_required_paths:
        segments = path.split(".") if path else []
        if not segments or not all(segments):
            failures.append((path, "malformed path"))
            continue
        node = producer.tree
        for segment in segments:
            if node.get("type") != "object":
                failures.append((path, f"{segment!r} reached a non-object schema node"))
                break
            if segment not in node.get("properties", {}):
                failures.append((path, f"{segment!r} is not declared by the producer"))
                break
            if segment not in node.get("required", []):
                failures.append((path, f"{segment!r} is optional in the producer schema"))
                break
            node = node["properties"][segment]
    return ContractReport(ok=not failures, failures=tuple(failures))
