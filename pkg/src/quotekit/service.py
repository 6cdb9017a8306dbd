"""Stateless price-prediction service.

The core request handling (validate, canonicalize aliases, one-hot encode,
predict) lives in PricingService and is framework-free, so its per-request
service time can be measured in-process. A thin FastAPI wrapper exposes it
as POST /predict and GET /health.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .dataset import TECH_STACKS, RecordValidationError, encode_features
from .gbdt import GbdtModel, feature_importance, load_model, predict

# Short names used by callers of the original deployment are accepted and
# canonicalized; the echo always uses canonical names.
FIELD_ALIASES = {
    "duration_weeks": "est_duration_weeks",
    "integ_complexity": "integration_complexity",
    "pain_score": "pain_severity_score",
}
CANONICAL_FIELDS = (
    "client_revenue",
    "est_duration_weeks",
    "pain_severity_score",
    "integration_complexity",
    "phase",
    "tech_stack",
)
_INTEGER_FIELDS = (
    "est_duration_weeks",
    "pain_severity_score",
    "integration_complexity",
    "phase",
)


class RequestValidationError(ValueError):
    """Invalid predict request; carries per-field details."""

    def __init__(self, details: dict[str, str]):
        super().__init__("; ".join(f"{k}: {v}" for k, v in sorted(details.items())))
        self.details = details


def canonicalize_request(body: Any) -> dict:
    """Resolve aliases, reject unknown/conflicting/missing fields, coerce types."""
    if not isinstance(body, dict):
        raise RequestValidationError({"body": "request body must be a JSON object"})
    details: dict[str, str] = {}
    canonical: dict[str, Any] = {}
    for key, value in body.items():
        target = FIELD_ALIASES.get(key, key)
        if target not in CANONICAL_FIELDS:
            details[key] = "unknown field"
            continue
        if target in canonical:
            if canonical[target] != value:
                details[target] = f"conflicting aliases for {target}"
            continue
        canonical[target] = value
    for name in CANONICAL_FIELDS:
        if name not in canonical:
            details.setdefault(name, "missing required field")
    if details:
        raise RequestValidationError(details)
    for name in _INTEGER_FIELDS:
        value = canonical[name]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            details[name] = "must be an integer"
        elif isinstance(value, float) and not value.is_integer():
            details[name] = "must be an integer"
        else:
            canonical[name] = int(value)
    value = canonical["client_revenue"]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        details["client_revenue"] = "must be a number"
    else:
        canonical["client_revenue"] = float(value)
    if canonical.get("tech_stack") not in TECH_STACKS:
        details["tech_stack"] = f"must be one of {list(TECH_STACKS)}"
    if details:
        raise RequestValidationError(details)
    return canonical


class PricingService:
    """One loaded, immutable model; no state survives between requests."""

    def __init__(self, model: GbdtModel, version: str | None = None):
        self.model = model
        self.model_version = version or f"{model.version}/n{model.n_train}/s{model.hyperparameters.seed}"
        self.importances = feature_importance(model)
        self.started_at = time.time()

    @classmethod
    def from_artifact(cls, path: str | Path) -> "PricingService":
        return cls(load_model(path))

    def handle_predict(self, body: Any) -> dict:
        """Validate -> canonicalize -> encode -> predict. Raises on bad input."""
        start = time.perf_counter_ns()
        canonical = canonicalize_request(body)
        try:
            vector = encode_features(canonical)
        except RecordValidationError as exc:
            raise RequestValidationError({"request": str(exc)}) from exc
        price = predict(self.model, vector)
        return {
            "predicted_price": price,
            "currency": "USD",
            "model_version": self.model_version,
            "feature_importances": dict(self.importances),
            "echo": canonical,
            "latency_micros": (time.perf_counter_ns() - start) // 1_000,
        }

    def health(self) -> dict:
        return {
            "ok": True,
            "model_version": self.model_version,
            "n_train": self.model.n_train,
            "uptime_seconds": time.time() - self.started_at,
        }


@dataclass(frozen=True)
class ErrorBody:
    error: str
    details: dict

    def to_dict(self) -> dict:
        return {"error": self.error, "details": self.details}


def build_app(service: PricingService) -> FastAPI:
    """FastAPI wrapper; all errors are JSON bodies {error, details}."""
    app = FastAPI(title="pricing-service", docs_url=None, redoc_url=None)

    @app.get("/health")
    async def health() -> dict:
        return service.health()

    @app.post("/predict")
    async def predict_endpoint(request: Request) -> JSONResponse:
        try:
            body = await request.json()
        except Exception:
            return JSONResponse(
                status_code=400,
                content=ErrorBody("malformed JSON", {}).to_dict(),
            )
        try:
            return JSONResponse(status_code=200, content=service.handle_predict(body))
        except RequestValidationError as exc:
            return JSONResponse(
                status_code=422,
                content=ErrorBody("validation failed", exc.details).to_dict(),
            )
        except Exception as exc:  # pragma: no cover - defensive
            return JSONResponse(
                status_code=500,
                content=ErrorBody("internal error", {"message": str(exc)}).to_dict(),
            )

    return app


def serve(model_artifact_path: str | Path, bind_address: str = "127.0.0.1:8321") -> None:
    """Load the artifact (refusing to start on failure) and serve until signaled."""
    import uvicorn

    service = PricingService.from_artifact(model_artifact_path)
    app = build_app(service)
    host, _, port = bind_address.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8321), log_level="info")
