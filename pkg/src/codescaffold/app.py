"""HTTP surface over the service core.

Status mapping: Locked -> 423, QuotaExhausted -> 429, PolicyForbidden -> 403,
NotFound -> 404, SandboxBusy -> 503 with Retry-After; stale review decisions
-> 409, refused edits -> 422, provider outages -> 502, sandbox setup faults
-> 500. Authentication is opaque bearer tokens from the course roster.
"""

from __future__ import annotations


from fastapi import Depends, FastAPI, Header, HTTPException, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from .analysis import ParseError
from .config import Principal, ServiceConfig
from .generator import ScaffoldExample
from .providers import ProviderUnavailable
from .runner import ExecutionResult, GradeReport, SandboxBusy, SetupError
from .service import (
    FADING_CODE_HIDDEN,
    FADING_STATEMENT_ONLY,
    InvalidEditError,
    LockedError,
    PendingReview,
    PolicyForbiddenError,
    QuotaExhaustedError,
    ScaffoldGrant,
    ScaffoldService,
    StaleDecisionError,
)
from .taskbank import NotFoundError, SchemaError, DuplicateIdError, Task


class RunRequest(BaseModel):
    source: str
    mode: str = "sample"
    stdin: str = ""


class SubmitRequest(BaseModel):
    source: str


class ScaffoldRequest(BaseModel):
    closeness: str = "far"


class ReviewRequest(BaseModel):
    decision: str = Field(pattern="^(Approved|Rejected|EditedAndApproved)$")
    edits: dict | None = None


def _task_payload(task: Task, scaffold_state: dict | None = None,
                  include_solution: bool = False) -> dict:
    payload = {
        "id": task.id,
        "title": task.title,
        "statement": task.statement,
        "reasoning_tags": list(task.reasoning_tags),
        "sample_io": [ex.to_dict() for ex in task.sample_io],
        "usable": task.usable,
        "disclosure": task.disclosure.to_dict(),
    }
    if include_solution:
        payload["canonical_solution"] = task.canonical_solution
        payload["hidden_io"] = [ex.to_dict() for ex in task.hidden_io]
    if scaffold_state is not None:
        payload["scaffold_state"] = scaffold_state
    return payload


def _scaffold_payload(scaffold: ScaffoldExample, fading_level: str) -> dict:
    """Serialize a scaffold for a student at the granted disclosure level.

    Hidden parts are omitted from the payload entirely, never just blanked,
    so no client can leak them.
    """
    payload = {
        "id": scaffold.id,
        "task_id": scaffold.task_id,
        "statement": scaffold.statement,
        "fading_level": fading_level,
        "review_status": scaffold.review_status.value,
    }
    if fading_level == FADING_STATEMENT_ONLY:
        return payload
    payload["explanation"] = scaffold.explanation
    payload["relation"] = scaffold.relation.to_dict() if scaffold.relation else None
    if fading_level == FADING_CODE_HIDDEN:
        return payload
    payload["code"] = scaffold.code
    payload["candidate_io"] = [ex.to_dict() for ex in scaffold.candidate_io]
    return payload


def _grant_payload(grant: ScaffoldGrant) -> dict:
    return {
        "status": "granted",
        "remaining_quota": grant.remaining_quota,
        "scaffold": _scaffold_payload(grant.scaffold, grant.fading_level),
    }


def create_app(config: ServiceConfig | None = None, provider=None,
               service: ScaffoldService | None = None) -> FastAPI:
    svc = service or ScaffoldService(config=config, provider=provider)
    app = FastAPI(title="codescaffold", version="0.1.0")
    app.state.service = svc

    def principal(authorization: str = Header(default="")) -> Principal:
        roster = svc.config.roster
        if not roster:
            # open mode for local development: everyone is one student
            return Principal(id="anonymous", role="student")
        token = authorization.removeprefix("Bearer ").strip()
        if token not in roster:
            raise HTTPException(status_code=401, detail="unknown or missing bearer token")
        return roster[token]

    def instructor(p: Principal = Depends(principal)) -> Principal:
        if p.role != "instructor":
            raise HTTPException(status_code=403, detail="instructor role required")
        return p

    @app.exception_handler(NotFoundError)
    async def not_found(_, exc):
        return JSONResponse(status_code=404, content={"error": "not_found",
                                                      "detail": str(exc)})

    @app.exception_handler(LockedError)
    async def locked(_, exc):
        return JSONResponse(
            status_code=423,
            content={"error": "locked", "detail": exc.reason, "unlock_at": exc.unlock_at},
        )

    @app.exception_handler(QuotaExhaustedError)
    async def quota(_, exc):
        return JSONResponse(status_code=429, content={"error": "quota_exhausted",
                                                      "detail": str(exc)})

    @app.exception_handler(PolicyForbiddenError)
    async def forbidden(_, exc):
        return JSONResponse(status_code=403, content={"error": "policy_forbidden",
                                                      "detail": str(exc)})

    @app.exception_handler(SandboxBusy)
    async def busy(_, exc):
        return JSONResponse(
            status_code=503,
            content={"error": "sandbox_busy", "detail": str(exc),
                     "retry_after_s": exc.retry_after_s},
            headers={"Retry-After": str(max(1, int(exc.retry_after_s)))},
        )

    @app.exception_handler(StaleDecisionError)
    async def stale(_, exc):
        return JSONResponse(status_code=409, content={"error": "stale_decision",
                                                      "detail": str(exc)})

    @app.exception_handler(InvalidEditError)
    async def bad_edit(_, exc):
        return JSONResponse(
            status_code=422,
            content={"error": "invalid_edit", "detail": exc.reason,
                     "verdicts": exc.verdicts},
        )

    @app.exception_handler(ProviderUnavailable)
    async def provider_down(_, exc):
        return JSONResponse(status_code=502, content={"error": "provider_unavailable",
                                                      "detail": str(exc)})

    @app.exception_handler(SetupError)
    async def setup_error(_, exc):
        return JSONResponse(status_code=500, content={"error": "sandbox_setup",
                                                      "detail": str(exc)})

    @app.exception_handler(ParseError)
    async def parse_error(_, exc):
        return JSONResponse(
            status_code=422,
            content={"error": "parse", "detail": str(exc), "origin": exc.origin,
                     "line": exc.line, "column": exc.column},
        )

    @app.exception_handler(SchemaError)
    async def schema_error(_, exc):
        return JSONResponse(
            status_code=422,
            content={"error": "schema", "field": exc.field, "detail": exc.detail},
        )

    @app.exception_handler(DuplicateIdError)
    async def duplicate_id(_, exc):
        return JSONResponse(status_code=422, content={"error": "duplicate_id",
                                                      "detail": str(exc)})

    @app.get("/tasks")
    def list_tasks(p: Principal = Depends(principal)):
        tasks = svc.list_tasks()
        if p.role != "instructor":
            tasks = [t for t in tasks if t.usable]
        return {"tasks": [{"id": t.id, "title": t.title, "usable": t.usable}
                          for t in tasks]}

    @app.get("/tasks/{task_id}")
    def get_task(task_id: str, p: Principal = Depends(principal)):
        task = svc.get_task(task_id)
        if p.role != "instructor" and not task.usable:
            raise NotFoundError(f"task {task_id!r} is not available")
        state = svc.scaffold_state(p.id, task_id)
        return _task_payload(task, scaffold_state=state,
                             include_solution=p.role == "instructor")

    @app.post("/tasks/{task_id}/run")
    def run_task(task_id: str, body: RunRequest, p: Principal = Depends(principal)):
        outcome = svc.handle_run(p.id, task_id, body.source, body.mode, body.stdin)
        if isinstance(outcome, GradeReport):
            return {"kind": "grade_report", "result": outcome.to_dict()}
        assert isinstance(outcome, ExecutionResult)
        return {"kind": "execution", "result": outcome.to_dict()}

    @app.post("/tasks/{task_id}/submit")
    def submit_task(task_id: str, body: SubmitRequest, p: Principal = Depends(principal)):
        report = svc.handle_submit(p.id, task_id, body.source)
        return {"kind": "grade_report", "result": report.to_dict()}

    @app.post("/tasks/{task_id}/scaffold")
    def request_scaffold(task_id: str, body: ScaffoldRequest,
                         p: Principal = Depends(principal)):
        outcome = svc.handle_scaffold_request(p.id, task_id, body.closeness)
        if isinstance(outcome, PendingReview):
            return {"status": "pending_review", "scaffold_id": outcome.scaffold_id,
                    "remaining_quota": outcome.remaining_quota}
        return _grant_payload(outcome)

    @app.get("/scaffolds/{scaffold_id}")
    def get_scaffold(scaffold_id: str, p: Principal = Depends(principal)):
        grant = svc.get_scaffold(p, scaffold_id)
        return _grant_payload(grant)

    @app.get("/review/queue")
    def review_queue(p: Principal = Depends(instructor)):
        items = svc.review_queue()
        return {"items": [
            {
                "scaffold_id": item.scaffold_id,
                "task_id": item.task_id,
                "created_at": item.created_at,
                "report": item.report,
                "failure_reasons": list(item.failure_reasons),
            }
            for item in items
        ]}

    @app.post("/review/{scaffold_id}")
    def decide(scaffold_id: str, body: ReviewRequest, p: Principal = Depends(instructor)):
        updated = svc.decide_review(p.id, scaffold_id, body.decision, body.edits)
        return {"scaffold_id": updated.id, "review_status": updated.review_status.value}

    @app.get("/events/export")
    def export_events(p: Principal = Depends(instructor),
                      from_ts: float | None = Query(default=None, alias="from"),
                      to_ts: float | None = Query(default=None, alias="to")):
        return PlainTextResponse(svc.export_events(from_ts, to_ts),
                                 media_type="application/x-ndjson")

    @app.post("/admin/packs")
    async def ingest_pack(request: Request, p: Principal = Depends(instructor)):
        document = (await request.body()).decode("utf-8")
        reports = svc.ingest_pack(document)
        return {"validated": reports}

    return app
