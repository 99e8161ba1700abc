"""HTTP surface consumed by the operator dashboard and CI pipelines."""

from __future__ import annotations

import hashlib
import logging
import uuid

from fastapi import FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel
from starlette.middleware.base import BaseHTTPMiddleware

from ranguard.agents.report import ComplianceReport, render_markdown
from ranguard.enforcement import InvalidTransition, UnknownAction
from ranguard.service.config import parse_mode
from ranguard.service.state import ServiceState

logger = logging.getLogger(__name__)


class AssessmentRequest(BaseModel):
    component_id: str
    config_text: str
    mode: str | None = None


class DecisionRequest(BaseModel):
    operator: str


def _error(status: int, code: str, message: str) -> JSONResponse:
    correlation_id = uuid.uuid4().hex[:12]
    logger.error("[%s] %s: %s", correlation_id, code, message)
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "correlation_id": correlation_id},
    )


class ETagMiddleware(BaseHTTPMiddleware):
    """Content-hash ETags on GETs so pollers can short-circuit with 304."""

    async def dispatch(self, request: Request, call_next):
        response = await call_next(request)
        if request.method != "GET" or response.status_code != 200:
            return response
        body = b"".join([chunk async for chunk in response.body_iterator])
        etag = '"' + hashlib.sha256(body).hexdigest()[:32] + '"'
        if request.headers.get("if-none-match") == etag:
            return Response(status_code=304, headers={"etag": etag})
        headers = dict(response.headers)
        headers["etag"] = etag
        return Response(
            content=body,
            status_code=response.status_code,
            headers=headers,
            media_type=response.media_type,
        )


# Endpoint inventory: the dashboard's contract test checks against this.
ENDPOINT_INVENTORY = [
    "GET /components",
    "POST /assessments",
    "GET /assessments/{run_id}",
    "GET /actions/pending",
    "POST /actions/{action_id}/approve",
    "POST /actions/{action_id}/reject",
    "GET /history",
    "GET /reports/{run_id}",
]


def create_app(state: ServiceState) -> FastAPI:
    app = FastAPI(title="ranguard", version="0.1.0")
    app.state.service = state
    app.add_middleware(ETagMiddleware)

    @app.exception_handler(Exception)
    async def unhandled(request: Request, exc: Exception) -> JSONResponse:  # pragma: no cover
        return _error(500, "Internal", f"{type(exc).__name__}: {exc}")

    @app.get("/components")
    def components() -> list[dict]:
        return state.component_status()

    @app.post("/assessments", status_code=202)
    def submit_assessment(body: AssessmentRequest):
        if not body.config_text.strip():
            return _error(400, "BadRequest", "config_text must not be empty")
        if not body.component_id.strip():
            return _error(400, "BadRequest", "component_id must not be empty")
        try:
            mode = parse_mode(body.mode) if body.mode else None
        except ValueError as exc:
            return _error(400, "BadRequest", str(exc))
        from ranguard.enforcement import DuplicateInFlight

        try:
            run_id = state.submit_assessment(body.component_id, body.config_text, mode)
        except DuplicateInFlight as exc:
            return _error(409, "Conflict", str(exc))
        return {"run_id": run_id}

    @app.get("/assessments/{run_id}")
    def get_assessment(run_id: str):
        view = state.run_view(run_id)
        if view is None:
            return _error(404, "NotFound", f"unknown run {run_id!r}")
        return view

    @app.get("/actions/pending")
    def pending_actions() -> list[dict]:
        return state.pending_view()

    def _decide(action_id: str, approve: bool, operator: str):
        if not operator.strip():
            return _error(400, "BadRequest", "operator must not be empty")
        try:
            action = state.decide_action(action_id, approve, operator)
        except UnknownAction as exc:
            return _error(404, "NotFound", f"unknown action {exc}")
        except InvalidTransition as exc:
            return _error(409, "Conflict", str(exc))
        from ranguard.service.state import _action_to_dict

        return _action_to_dict(action)

    @app.post("/actions/{action_id}/approve")
    def approve_action(action_id: str, body: DecisionRequest):
        return _decide(action_id, True, body.operator)

    @app.post("/actions/{action_id}/reject")
    def reject_action(action_id: str, body: DecisionRequest):
        return _decide(action_id, False, body.operator)

    @app.get("/history")
    def history(component: str = Query(...)):
        view = state.history_view(component)
        if view is None:
            return _error(404, "NotFound", f"unknown component {component!r}")
        return view

    @app.get("/reports/{run_id}")
    def report(run_id: str, format: str = Query("json")):
        record = state.runs.get(run_id)
        if record is None or record.outcome is None:
            return _error(404, "NotFound", f"no report for run {run_id!r}")
        report_dict = record.outcome["final_report"]
        if format == "md":
            markdown = render_markdown(ComplianceReport.from_dict(report_dict))
            return PlainTextResponse(markdown, media_type="text/markdown")
        if format != "json":
            return _error(400, "BadRequest", f"unknown format {format!r}")
        return report_dict

    return app
