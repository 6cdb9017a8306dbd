"""Two-agent proposal pipeline with an explicit tool registry and audit trace.

The research agent turns a call transcript into schema-valid findings via
fact extraction, dedicated 1-5 scoring calls, and two concurrently executed
research tools. The draft agent bridges those findings into the pricing
tool's feature vector, makes exactly one pricing call, reasons about the
prediction under a bounded adjustment policy, and emits a contract-valid
proposal. Every tool and LLM interaction lands in the trace, which is the
evidence that invocation is agent-initiated.
"""

from __future__ import annotations

import copy
import math
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Protocol

from .gbdt import GbdtModel
from .schemas import (
    FACT_EXTRACTION_SCHEMA,
    PRICING_DECISION_SCHEMA,
    SCORE_SCHEMA,
    ProposalDoc,
    ResearchFindings,
    SchemaDoc,
    TranscriptFacts,
    draft_schema,
    extract_features,
    research_schema,
)
from .templating import render_proposal

PRICING_TOOL_NAME = "pricing_model"
REVENUE_TOOL_NAME = "revenue_lookup"
RESEARCH_TOOL_NAME = "company_research"

# The model supplies the anchor; the agent's contextual adjustment may move it
# by at most this factor in either direction.
ADJUSTMENT_BOUND = 1.25


class PipelineError(RuntimeError):
    """A pipeline stage failed; the message carries the stage label."""


class ToolError(RuntimeError):
    """A tool call failed or violated its schema contract."""


@dataclass(frozen=True)
class Tool:
    name: str
    description: str
    input_schema: SchemaDoc
    output_schema: SchemaDoc
    invoke: Callable[[dict], dict]


class ToolRegistry:
    def __init__(self) -> None:
        self._tools: dict[str, Tool] = {}

    def register(self, tool: Tool) -> None:
        if tool.name in self._tools:
            raise ValueError(f"tool {tool.name!r} already registered")
        self._tools[tool.name] = tool

    def get(self, name: str) -> Tool:
        if name not in self._tools:
            raise KeyError(f"tool {name!r} not registered")
        return self._tools[name]

    def names(self) -> list[str]:
        return list(self._tools)

    def __contains__(self, name: str) -> bool:
        return name in self._tools


@dataclass(frozen=True)
class TraceEvent:
    agent: str
    tool_name: str
    request: dict
    response: dict
    timestamp: float
    note: str | None = None

    def to_dict(self) -> dict:
        payload = {
            "agent": self.agent,
            "tool_name": self.tool_name,
            "request": self.request,
            "response": self.response,
            "timestamp": self.timestamp,
        }
        if self.note is not None:
            payload["note"] = self.note
        return payload


class ToolCallTrace:
    def __init__(self) -> None:
        self.events: list[TraceEvent] = []

    def add(self, agent: str, tool_name: str, request: dict, response: dict,
            note: str | None = None) -> None:
        self.events.append(
            TraceEvent(
                agent=agent,
                tool_name=tool_name,
                request=copy.deepcopy(request),
                response=copy.deepcopy(response),
                timestamp=time.time(),
                note=note,
            )
        )

    def tool_names(self) -> list[str]:
        return [e.tool_name for e in self.events]

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(e.to_dict(), sort_keys=True) for e in self.events) + "\n"


@dataclass
class AgentContext:
    """Append-only working state for one pipeline run."""

    transcript: str
    facts: TranscriptFacts | None = None
    findings: ResearchFindings | None = None
    tool_results: dict[str, dict] = field(default_factory=dict)


@dataclass(frozen=True)
class PricingDecision:
    model_price: float
    adjusted_price: float
    adjustment_rationale: str
    research_confidence: str

    def __post_init__(self) -> None:
        if self.model_price <= 0 or self.adjusted_price <= 0:
            raise ValueError("prices must be positive")
        low = self.model_price / ADJUSTMENT_BOUND
        high = self.model_price * ADJUSTMENT_BOUND
        if not low - 1e-9 <= self.adjusted_price <= high + 1e-9:
            raise ValueError(
                f"adjusted price {self.adjusted_price} outside policy bound "
                f"[{low:.2f}, {high:.2f}]"
            )

    def to_dict(self) -> dict:
        return {
            "model_price": self.model_price,
            "adjusted_price": self.adjusted_price,
            "adjustment_rationale": self.adjustment_rationale,
            "research_confidence": self.research_confidence,
        }


# ---------------------------------------------------------------------------
# LLM clients
# ---------------------------------------------------------------------------


class LlmClient(Protocol):
    def complete(self, tag: str, prompt: str, output_schema: SchemaDoc) -> dict:
        """Return JSON intended to validate against output_schema."""
        ...


class ScriptedMock:
    """Fixture-driven client: each prompt tag maps to a canned structured output.

    A list-valued fixture is consumed sequentially (the last element repeats),
    which lets tests script an invalid first answer followed by a valid retry.
    """

    def __init__(self, fixtures: dict[str, Any]):
        self.fixtures = fixtures
        self._cursor: dict[str, int] = {}

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedMock":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def complete(self, tag: str, prompt: str, output_schema: SchemaDoc) -> dict:
        if tag not in self.fixtures:
            raise ToolError(f"scripted mock has no fixture for tag {tag!r}")
        value = self.fixtures[tag]
        if isinstance(value, list):
            index = min(self._cursor.get(tag, 0), len(value) - 1)
            self._cursor[tag] = index + 1
            value = value[index]
        return copy.deepcopy(value)


class ExternalAdapter:
    """Config-gated shell for a real completion API; not exercised by tests."""

    ENV_KEY = "QUOTEKIT_LLM_API_KEY"

    def __init__(self) -> None:
        self.api_key = os.environ.get(self.ENV_KEY)
        if not self.api_key:
            raise RuntimeError(
                f"external LLM adapter requires {self.ENV_KEY} in the environment"
            )

    def complete(self, tag: str, prompt: str, output_schema: SchemaDoc) -> dict:
        raise NotImplementedError(
            "wire a real completion API here; the shipped pipeline uses ScriptedMock"
        )


# ---------------------------------------------------------------------------
# Invocation helpers
# ---------------------------------------------------------------------------


def _invoke_tool(tool: Tool, request: dict) -> dict:
    report = tool.input_schema.validate(request)
    if not report.valid:
        raise ToolError(f"{tool.name}: invalid request: {report}")
    try:
        response = tool.invoke(request)
    except Exception as exc:
        raise ToolError(f"{tool.name}: {exc}") from exc
    report = tool.output_schema.validate(response)
    if not report.valid:
        raise ToolError(f"{tool.name}: invalid response: {report}")
    return response


def _complete_checked(
    llm: LlmClient,
    tag: str,
    prompt: str,
    schema: SchemaDoc,
    trace: ToolCallTrace,
    agent: str,
    note: str | None = None,
) -> dict:
    output = llm.complete(tag, prompt, schema)
    report = schema.validate(output)
    if not report.valid:
        output = llm.complete(tag, prompt, schema)  # one retry, then hard failure
        report = schema.validate(output)
        if not report.valid:
            raise PipelineError(f"{agent}/llm:{tag}: schema-invalid output: {report}")
    trace.add(agent, f"llm:{tag}", {"tag": tag, "prompt": prompt}, output, note=note)
    return output


# ---------------------------------------------------------------------------
# Agents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResearchResult:
    findings: ResearchFindings
    facts: TranscriptFacts
    context: AgentContext
    trace: ToolCallTrace


def run_research_agent(
    transcript: str,
    llm: LlmClient,
    registry: ToolRegistry,
    trace: ToolCallTrace | None = None,
) -> ResearchResult:
    trace = trace if trace is not None else ToolCallTrace()
    agent = "research_agent"
    if not transcript.strip():
        raise PipelineError(f"{agent}/extract: transcript is empty")
    for required in (REVENUE_TOOL_NAME, RESEARCH_TOOL_NAME):
        if required not in registry:
            raise PipelineError(f"{agent}: registry is missing tool {required!r}")
    context = AgentContext(transcript=transcript)

    structural = _complete_checked(
        llm, "extract_facts", transcript, FACT_EXTRACTION_SCHEMA, trace, agent
    )
    pain = _complete_checked(
        llm,
        "score_pain",
        f"Rate pain severity 1-5 for: {transcript[:2000]}",
        SCORE_SCHEMA,
        trace,
        agent,
    )
    complexity = _complete_checked(
        llm,
        "score_complexity",
        f"Rate integration complexity 1-5 for: {transcript[:2000]}",
        SCORE_SCHEMA,
        trace,
        agent,
    )
    try:
        facts = TranscriptFacts.from_dict(
            {
                **structural,
                "pain_severity_score": pain["score"],
                "integration_complexity": complexity["score"],
            }
        )
    except ValueError as exc:
        raise PipelineError(f"{agent}/facts: {exc}") from exc
    context.facts = facts

    revenue_tool = registry.get(REVENUE_TOOL_NAME)
    research_tool = registry.get(RESEARCH_TOOL_NAME)
    revenue_request = {"company_name": facts.company_name}
    research_request = {
        "company_name": facts.company_name,
        "prospect_name": facts.prospect_name,
    }
    try:
        with ThreadPoolExecutor(max_workers=2) as pool:
            revenue_future = pool.submit(_invoke_tool, revenue_tool, revenue_request)
            research_future = pool.submit(_invoke_tool, research_tool, research_request)
            revenue_result = revenue_future.result()
            research_result = research_future.result()
    except ToolError as exc:
        raise PipelineError(f"{agent}/{exc}") from exc
    # Joined before synthesis; trace order is canonical regardless of which
    # call finished first.
    trace.add(agent, REVENUE_TOOL_NAME, revenue_request, revenue_result)
    trace.add(agent, RESEARCH_TOOL_NAME, research_request, research_result)
    context.tool_results[REVENUE_TOOL_NAME] = revenue_result
    context.tool_results[RESEARCH_TOOL_NAME] = research_result

    synthesis_prompt = json.dumps(
        {
            "facts": facts.to_dict(),
            "revenue_lookup": revenue_result,
            "company_research": research_result,
        },
        sort_keys=True,
    )
    findings_payload = _complete_checked(
        llm, "synthesize_findings", synthesis_prompt, research_schema(), trace, agent
    )
    findings = ResearchFindings.from_dict(findings_payload)
    context.findings = findings
    return ResearchResult(findings=findings, facts=facts, context=context, trace=trace)


@dataclass(frozen=True)
class DraftResult:
    proposal: ProposalDoc
    decision: PricingDecision
    trace: ToolCallTrace


def run_draft_agent(
    findings: ResearchFindings,
    facts: TranscriptFacts,
    llm: LlmClient,
    registry: ToolRegistry,
    trace: ToolCallTrace | None = None,
) -> DraftResult:
    trace = trace if trace is not None else ToolCallTrace()
    agent = "draft_agent"
    if PRICING_TOOL_NAME not in registry:
        raise PipelineError(f"{agent}: registry is missing tool {PRICING_TOOL_NAME!r}")
    try:
        raw_features = extract_features(findings, facts)
    except ValueError as exc:
        raise PipelineError(f"{agent}/extract_features: {exc}") from exc

    pricing_tool = registry.get(PRICING_TOOL_NAME)
    try:
        pricing_response = _invoke_tool(pricing_tool, raw_features)
    except ToolError as exc:
        raise PipelineError(f"{agent}/{PRICING_TOOL_NAME}: {exc}") from exc
    trace.add(agent, PRICING_TOOL_NAME, raw_features, pricing_response)
    model_price = float(pricing_response["predicted_price"])

    decision_prompt = json.dumps(
        {
            "model_price": model_price,
            "research_confidence": findings.client_revenue.confidence,
            "company_summary": findings.company_summary,
            "prospect_summary": findings.prospect_summary,
        },
        sort_keys=True,
    )
    decision_payload = _complete_checked(
        llm, "pricing_decision", decision_prompt, PRICING_DECISION_SCHEMA, trace, agent
    )
    proposed = float(decision_payload["adjusted_price"])
    # Clamp in whole cents so quantizing cannot nudge the result past the bound.
    low_cents = math.ceil(model_price / ADJUSTMENT_BOUND * 100 - 1e-9)
    high_cents = math.floor(model_price * ADJUSTMENT_BOUND * 100 + 1e-9)
    adjusted_cents = min(max(round(proposed * 100), low_cents), high_cents)
    adjusted = adjusted_cents / 100.0
    if adjusted_cents != round(proposed * 100):
        trace.events[-1] = TraceEvent(
            agent=trace.events[-1].agent,
            tool_name=trace.events[-1].tool_name,
            request=trace.events[-1].request,
            response=trace.events[-1].response,
            timestamp=trace.events[-1].timestamp,
            note=f"clamped: proposed {proposed:.2f} -> {adjusted:.2f} "
            f"(bound {low_cents / 100.0:.2f}..{high_cents / 100.0:.2f})",
        )
    decision = PricingDecision(
        model_price=model_price,
        adjusted_price=adjusted,
        adjustment_rationale=decision_payload["adjustment_rationale"],
        research_confidence=findings.client_revenue.confidence,
    )

    draft_prompt = json.dumps(
        {
            "facts": facts.to_dict(),
            "findings": findings.to_dict(),
            "decision": decision.to_dict(),
        },
        sort_keys=True,
    )
    draft_payload = _complete_checked(
        llm, "draft_proposal", draft_prompt, draft_schema(), trace, agent
    )
    total_cents = round(decision.adjusted_price * 100)
    final_cents = total_cents // 2
    deposit_cents = total_cents - final_cents  # deposit absorbs the odd cent
    draft_payload = copy.deepcopy(draft_payload)
    draft_payload["pricing_section"] = {
        "total_price": total_cents / 100.0,
        "currency": "USD",
        "deposit_amount": deposit_cents / 100.0,
        "final_amount": final_cents / 100.0,
        "value_justification": decision.adjustment_rationale,
    }
    try:
        proposal = ProposalDoc.from_dict(draft_payload)
    except ValueError as exc:
        raise PipelineError(f"{agent}/proposal: {exc}") from exc
    return DraftResult(proposal=proposal, decision=decision, trace=trace)


@dataclass(frozen=True)
class PipelineResult:
    document: str
    proposal: ProposalDoc
    decision: PricingDecision
    findings: ResearchFindings
    facts: TranscriptFacts
    trace: ToolCallTrace


def run_pipeline(
    transcript: str,
    llm: LlmClient,
    registry: ToolRegistry,
    template: str,
) -> PipelineResult:
    """Research -> draft -> render, in one merged trace."""
    trace = ToolCallTrace()
    research = run_research_agent(transcript, llm, registry, trace)
    draft = run_draft_agent(research.findings, research.facts, llm, registry, trace)
    try:
        document = render_proposal(draft.proposal.to_dict(), template)
    except ValueError as exc:
        raise PipelineError(f"render: {exc}") from exc
    return PipelineResult(
        document=document,
        proposal=draft.proposal,
        decision=draft.decision,
        findings=research.findings,
        facts=research.facts,
        trace=trace,
    )


# ---------------------------------------------------------------------------
# Built-in tools
# ---------------------------------------------------------------------------

_REVENUE_OUTPUT_SCHEMA = SchemaDoc(
    {
        "type": "object",
        "properties": {
            "annual_revenue": {"type": "number"},
            "currency": {"type": "string"},
            "source": {"type": "string"},
            "confidence": {"type": "string", "enum": ["low", "medium", "high"]},
            "year": {"type": "string"},
        },
        "required": ["annual_revenue", "currency", "source", "confidence", "year"],
    }
)

_RESEARCH_OUTPUT_SCHEMA = SchemaDoc(
    {
        "type": "object",
        "properties": {
            "company_summary": {"type": "string"},
            "prospect_summary": {"type": "string"},
        },
        "required": ["company_summary", "prospect_summary"],
    }
)

_PRICING_INPUT_SCHEMA = SchemaDoc(
    {
        "type": "object",
        "properties": {
            "client_revenue": {"type": "number"},
            "est_duration_weeks": {"type": "integer"},
            "pain_severity_score": {"type": "integer", "enum": [1, 2, 3, 4, 5]},
            "integration_complexity": {"type": "integer", "enum": [1, 2, 3, 4, 5]},
            "phase": {"type": "integer", "enum": [1, 2, 3, 4]},
            "tech_stack": {"type": "string", "enum": ["no_code", "low_code", "custom"]},
        },
        "required": [
            "client_revenue",
            "est_duration_weeks",
            "pain_severity_score",
            "integration_complexity",
            "phase",
            "tech_stack",
        ],
    }
)

_PRICING_OUTPUT_SCHEMA = SchemaDoc(
    {
        "type": "object",
        "properties": {
            "predicted_price": {"type": "number"},
            "currency": {"type": "string"},
            "model_version": {"type": "string"},
        },
        "required": ["predicted_price", "currency", "model_version"],
    }
)


def stub_revenue_tool(companies: dict[str, dict]) -> Tool:
    """Deterministic stand-in for a web revenue lookup, fed from a fixture map."""

    def invoke(request: dict) -> dict:
        name = request["company_name"]
        if name not in companies:
            raise KeyError(f"no revenue fixture for company {name!r}")
        return dict(companies[name])

    return Tool(
        name=REVENUE_TOOL_NAME,
        description="Look up a company's annual revenue with provenance metadata.",
        input_schema=SchemaDoc(
            {
                "type": "object",
                "properties": {"company_name": {"type": "string"}},
                "required": ["company_name"],
            }
        ),
        output_schema=_REVENUE_OUTPUT_SCHEMA,
        invoke=invoke,
    )


def stub_research_tool(profiles: dict[str, dict]) -> Tool:
    """Deterministic stand-in for company/prospect background research."""

    def invoke(request: dict) -> dict:
        name = request["company_name"]
        if name not in profiles:
            raise KeyError(f"no research fixture for company {name!r}")
        return dict(profiles[name])

    return Tool(
        name=RESEARCH_TOOL_NAME,
        description="Summarize the company and the prospect.",
        input_schema=SchemaDoc(
            {
                "type": "object",
                "properties": {
                    "company_name": {"type": "string"},
                    "prospect_name": {"type": "string"},
                },
                "required": ["company_name", "prospect_name"],
            }
        ),
        output_schema=_RESEARCH_OUTPUT_SCHEMA,
        invoke=invoke,
    )


def local_pricing_tool(model: GbdtModel) -> Tool:
    """Expose a loaded model through the same contract as the HTTP service."""
    from .service import PricingService

    service = PricingService(model)

    def invoke(request: dict) -> dict:
        return service.handle_predict(request)

    return Tool(
        name=PRICING_TOOL_NAME,
        description="Predict a deal price in USD from the six raw deal features.",
        input_schema=_PRICING_INPUT_SCHEMA,
        output_schema=_PRICING_OUTPUT_SCHEMA,
        invoke=invoke,
    )


def http_pricing_tool(url: str, timeout: float = 10.0) -> Tool:
    """Call a running pricing service over HTTP (POST <url>/predict)."""
    import httpx

    endpoint = url.rstrip("/") + "/predict"

    def invoke(request: dict) -> dict:
        response = httpx.post(endpoint, json=request, timeout=timeout)
        if response.status_code != 200:
            raise RuntimeError(f"pricing service returned {response.status_code}: "
                               f"{response.text[:200]}")
        return response.json()

    return Tool(
        name=PRICING_TOOL_NAME,
        description="Predict a deal price in USD via the remote pricing service.",
        input_schema=_PRICING_INPUT_SCHEMA,
        output_schema=_PRICING_OUTPUT_SCHEMA,
        invoke=invoke,
    )


def default_registry(pricing_tool: Tool, mock_fixtures: dict) -> ToolRegistry:
    """Registry with the two research stubs (from fixtures) plus a pricing tool."""
    registry = ToolRegistry()
    registry.register(pricing_tool)
    registry.register(stub_revenue_tool(mock_fixtures.get("revenue_lookup", {})))
    registry.register(stub_research_tool(mock_fixtures.get("company_research", {})))
    return registry


# ---------------------------------------------------------------------------
# Shipped fixtures
# ---------------------------------------------------------------------------


def _resource_text(name: str) -> str:
    from importlib import resources

    return resources.files("quotekit.resources").joinpath(name).read_text(encoding="utf-8")


def load_mock_fixtures(path: str | Path | None = None) -> dict:
    """Mock fixture file: {"llm": tag map, "revenue_lookup": ..., "company_research": ...}."""
    if path is None:
        return json.loads(_resource_text("mock_fixtures.json"))
    return json.loads(Path(path).read_text(encoding="utf-8"))


def default_template() -> str:
    return _resource_text("proposal_template.txt")


def default_transcript() -> str:
    return _resource_text("transcript.txt")
