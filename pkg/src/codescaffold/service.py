"""Service core: sessions, disclosure enforcement, review queue, event log.

Persistence is one embedded sqlite database with three logical tables
(sessions, scaffolds, events) plus an attempts history; all access is
serialized behind one lock, which is plenty at classroom scale and makes
the quota counter atomic under parallel requests.
"""

from __future__ import annotations

import json
import sqlite3
import threading
import time
from dataclasses import dataclass
from functools import partial

from .analysis import ParseError, Sample, classify_pair, parse_program
from .config import Principal, ServiceConfig
from .generator import (
    AttemptContext,
    GenerationOptions,
    ReviewStatus,
    ScaffoldExample,
    build_relation_explanation,
    generate_scaffold,
    summarize_grade,
)
from .providers import HttpProvider, StubProvider
from .runner import (
    GradeReport,
    RunnerPool,
    execute,
    grade,
)
from .taskbank import NotFoundError, Task, TaskBank

EVENT_KINDS = ("run", "submit", "scaffold_requested", "scaffold_shown", "review_decided")
EVENT_SCHEMA_VERSION = 1

FADING_FULL = "full"
FADING_CODE_HIDDEN = "code_hidden"
FADING_STATEMENT_ONLY = "statement_only"


class LockedError(Exception):
    """Scaffold requested before the disclosure delay has elapsed."""

    def __init__(self, reason: str, unlock_at: float | None = None):
        self.reason = reason
        self.unlock_at = unlock_at
        super().__init__(reason)


class QuotaExhaustedError(Exception):
    pass


class PolicyForbiddenError(Exception):
    pass


class StaleDecisionError(Exception):
    """The review item was already decided."""


class InvalidEditError(Exception):
    """An instructor edit broke the scaffold's own checks."""

    def __init__(self, reason: str, verdicts: list[str] | None = None):
        self.reason = reason
        self.verdicts = verdicts or []
        super().__init__(reason)


def fading_level_for(fading: str, grant_number: int) -> str:
    """Map a grant ordinal (1-based) to the disclosure level for the policy."""
    if fading == "code_then_prose":
        return FADING_FULL if grant_number <= 1 else FADING_CODE_HIDDEN
    if fading == "prose_then_statement":
        if grant_number <= 1:
            return FADING_FULL
        if grant_number == 2:
            return FADING_CODE_HIDDEN
        return FADING_STATEMENT_ONLY
    return FADING_FULL


@dataclass(frozen=True)
class ScaffoldGrant:
    scaffold: ScaffoldExample
    fading_level: str
    remaining_quota: int


@dataclass(frozen=True)
class PendingReview:
    """A generated scaffold held for instructor review before disclosure."""

    scaffold_id: str
    remaining_quota: int


@dataclass(frozen=True)
class ReviewItem:
    scaffold_id: str
    task_id: str
    created_at: float
    report: dict | None
    failure_reasons: tuple[str, ...]


class Store:
    """Single-connection sqlite persistence, serialized behind one lock."""

    def __init__(self, db_path: str = ":memory:"):
        self._conn = sqlite3.connect(db_path, check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        self._lock = threading.RLock()
        with self._lock:
            self._conn.executescript(
                """
                CREATE TABLE IF NOT EXISTS sessions (
                    student_id TEXT NOT NULL,
                    task_id TEXT NOT NULL,
                    first_run_at REAL,
                    scaffolds_used INTEGER NOT NULL DEFAULT 0,
                    PRIMARY KEY (student_id, task_id)
                );
                CREATE TABLE IF NOT EXISTS attempts (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    student_id TEXT NOT NULL,
                    task_id TEXT NOT NULL,
                    kind TEXT NOT NULL,
                    created_at REAL NOT NULL,
                    all_pass INTEGER,
                    source TEXT,
                    grade_report TEXT
                );
                CREATE TABLE IF NOT EXISTS scaffolds (
                    id TEXT PRIMARY KEY,
                    task_id TEXT NOT NULL,
                    student_id TEXT NOT NULL,
                    created_at REAL NOT NULL,
                    review_status TEXT NOT NULL,
                    fading_level TEXT NOT NULL,
                    grant_number INTEGER NOT NULL,
                    shown INTEGER NOT NULL DEFAULT 0,
                    decision TEXT,
                    decided_by TEXT,
                    decided_at REAL,
                    body TEXT NOT NULL
                );
                CREATE TABLE IF NOT EXISTS events (
                    seq INTEGER PRIMARY KEY AUTOINCREMENT,
                    kind TEXT NOT NULL,
                    actor TEXT NOT NULL,
                    task_id TEXT,
                    ts REAL NOT NULL,
                    payload TEXT NOT NULL
                );
                """
            )

    def close(self):
        with self._lock:
            self._conn.close()

    # -- sessions ----------------------------------------------------------

    def ensure_session(self, student_id: str, task_id: str) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT OR IGNORE INTO sessions(student_id, task_id) VALUES (?, ?)",
                (student_id, task_id),
            )
            self._conn.commit()

    def get_session(self, student_id: str, task_id: str) -> sqlite3.Row | None:
        with self._lock:
            cur = self._conn.execute(
                "SELECT * FROM sessions WHERE student_id = ? AND task_id = ?",
                (student_id, task_id),
            )
            return cur.fetchone()

    def note_first_run(self, student_id: str, task_id: str, now: float) -> None:
        with self._lock:
            self.ensure_session(student_id, task_id)
            self._conn.execute(
                "UPDATE sessions SET first_run_at = ? "
                "WHERE student_id = ? AND task_id = ? AND first_run_at IS NULL",
                (now, student_id, task_id),
            )
            self._conn.commit()

    def record_attempt(self, student_id: str, task_id: str, kind: str,
                       now: float, all_pass: bool | None,
                       source: str | None = None,
                       grade_report: dict | None = None) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT INTO attempts(student_id, task_id, kind, created_at, all_pass, "
                "source, grade_report) VALUES (?, ?, ?, ?, ?, ?, ?)",
                (student_id, task_id, kind, now,
                 None if all_pass is None else int(all_pass),
                 source,
                 json.dumps(grade_report) if grade_report is not None else None),
            )
            self._conn.commit()

    def latest_attempt(self, student_id: str, task_id: str) -> sqlite3.Row | None:
        with self._lock:
            cur = self._conn.execute(
                "SELECT * FROM attempts WHERE student_id = ? AND task_id = ? "
                "AND source IS NOT NULL ORDER BY id DESC LIMIT 1",
                (student_id, task_id),
            )
            return cur.fetchone()

    def try_consume_quota(self, student_id: str, task_id: str, quota: int) -> int | None:
        """Atomically claim one scaffold grant; returns the 1-based grant
        number, or None when the quota is spent."""
        with self._lock:
            self.ensure_session(student_id, task_id)
            cur = self._conn.execute(
                "UPDATE sessions SET scaffolds_used = scaffolds_used + 1 "
                "WHERE student_id = ? AND task_id = ? AND scaffolds_used < ?",
                (student_id, task_id, quota),
            )
            self._conn.commit()
            if cur.rowcount != 1:
                return None
            row = self.get_session(student_id, task_id)
            return int(row["scaffolds_used"])

    def release_quota(self, student_id: str, task_id: str) -> None:
        with self._lock:
            self._conn.execute(
                "UPDATE sessions SET scaffolds_used = scaffolds_used - 1 "
                "WHERE student_id = ? AND task_id = ? AND scaffolds_used > 0",
                (student_id, task_id),
            )
            self._conn.commit()

    # -- scaffolds ----------------------------------------------------------

    def insert_scaffold(self, scaffold: ScaffoldExample, student_id: str,
                        fading_level: str, grant_number: int, now: float) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT INTO scaffolds(id, task_id, student_id, created_at, review_status, "
                "fading_level, grant_number, body) VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                (scaffold.id, scaffold.task_id, student_id, now,
                 scaffold.review_status.value, fading_level, grant_number,
                 json.dumps(scaffold.to_dict())),
            )
            self._conn.commit()

    def get_scaffold_row(self, scaffold_id: str) -> sqlite3.Row | None:
        with self._lock:
            cur = self._conn.execute("SELECT * FROM scaffolds WHERE id = ?", (scaffold_id,))
            return cur.fetchone()

    def mark_shown(self, scaffold_id: str) -> bool:
        """Returns True when this call transitioned the scaffold to shown."""
        with self._lock:
            cur = self._conn.execute(
                "UPDATE scaffolds SET shown = 1 WHERE id = ? AND shown = 0", (scaffold_id,)
            )
            self._conn.commit()
            return cur.rowcount == 1

    def list_needs_review(self) -> list[sqlite3.Row]:
        with self._lock:
            cur = self._conn.execute(
                "SELECT * FROM scaffolds WHERE review_status = ? ORDER BY created_at, id",
                (ReviewStatus.NEEDS_REVIEW.value,),
            )
            return cur.fetchall()

    def apply_decision(self, scaffold_id: str, new_status: str, decision: str,
                       instructor_id: str, now: float, body: str | None = None) -> None:
        with self._lock:
            if body is None:
                self._conn.execute(
                    "UPDATE scaffolds SET review_status = ?, decision = ?, decided_by = ?, "
                    "decided_at = ? WHERE id = ?",
                    (new_status, decision, instructor_id, now, scaffold_id),
                )
            else:
                self._conn.execute(
                    "UPDATE scaffolds SET review_status = ?, decision = ?, decided_by = ?, "
                    "decided_at = ?, body = ? WHERE id = ?",
                    (new_status, decision, instructor_id, now, body, scaffold_id),
                )
            self._conn.commit()

    # -- events --------------------------------------------------------------

    def append_event(self, kind: str, actor: str, task_id: str | None,
                     ts: float, payload: dict) -> None:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        with self._lock:
            self._conn.execute(
                "INSERT INTO events(kind, actor, task_id, ts, payload) VALUES (?, ?, ?, ?, ?)",
                (kind, actor, task_id, ts, json.dumps(payload)),
            )
            self._conn.commit()

    def events_between(self, from_ts: float | None, to_ts: float | None) -> list[sqlite3.Row]:
        query = "SELECT * FROM events"
        clauses, params = [], []
        if from_ts is not None:
            clauses.append("ts >= ?")
            params.append(from_ts)
        if to_ts is not None:
            clauses.append("ts <= ?")
            params.append(to_ts)
        if clauses:
            query += " WHERE " + " AND ".join(clauses)
        query += " ORDER BY seq"
        with self._lock:
            return self._conn.execute(query, params).fetchall()


def provider_from_config(config: ServiceConfig):
    if config.provider.mode == "http":
        return HttpProvider(
            base_url=config.provider.base_url,
            token_env=config.provider.token_env,
            timeout_s=config.provider.timeout_s,
            retries=config.provider.retries,
        )
    if config.provider.stub_files:
        return StubProvider.from_files(config.provider.stub_files)
    return StubProvider([], provider_id="stub-empty")


class ScaffoldService:
    """Everything behind the HTTP surface, testable without HTTP."""

    def __init__(self, config: ServiceConfig | None = None, provider=None,
                 bank: TaskBank | None = None, store: Store | None = None,
                 clock=time.time):
        self.config = config or ServiceConfig()
        self.bank = bank or TaskBank()
        self.store = store or Store(self.config.db_path)
        self.provider = provider if provider is not None else provider_from_config(self.config)
        self.pool = RunnerPool(self.config.pool_size, self.config.pool_queue)
        self.clock = clock
        self._grade = partial(grade, interpreter=self.config.interpreter)
        self._execute = partial(execute, interpreter=self.config.interpreter)

    # -- tasks ----------------------------------------------------------------

    def ingest_pack(self, document: str) -> list[dict]:
        reports = self.bank.ingest_document(document, self._grade)
        return [r.to_dict() for r in reports]

    def list_tasks(self) -> list[Task]:
        return self.bank.list_tasks()

    def get_task(self, task_id: str) -> Task:
        return self.bank.get_task(task_id)

    def _usable_task(self, task_id: str) -> Task:
        task = self.bank.get_task(task_id)
        if not task.usable:
            raise NotFoundError(f"task {task_id!r} is not available")
        return task

    def scaffold_state(self, student_id: str, task_id: str) -> dict:
        """Policy state the client needs to render the generator controls."""
        task = self.bank.get_task(task_id)
        session = self.store.get_session(student_id, task_id)
        first_run_at = session["first_run_at"] if session else None
        used = int(session["scaffolds_used"]) if session else 0
        policy = task.disclosure
        now = self.clock()
        unlock_at = None if first_run_at is None else first_run_at + policy.delay_s
        locked = first_run_at is None or now < unlock_at
        return {
            "first_run_at": first_run_at,
            "unlock_at": unlock_at,
            "locked": locked,
            "scaffolds_used": used,
            "remaining_quota": max(0, policy.quota - used),
            "quota": policy.quota,
            "allow_near": policy.allow_near,
            "fading": policy.fading,
            "delay_s": policy.delay_s,
        }

    # -- runs and submissions ---------------------------------------------------

    def handle_run(self, student_id: str, task_id: str, source: str,
                   mode: str = "sample", stdin_text: str = ""):
        """Sample mode grades against the visible examples; custom mode runs
        once against caller-supplied stdin. Either way the first run starts
        the disclosure clock."""
        task = self._usable_task(task_id)
        if mode not in ("sample", "custom"):
            raise ValueError(f"mode must be 'sample' or 'custom', got {mode!r}")
        with self.pool.slot():
            if mode == "sample":
                outcome = self._grade(source, task.sample_io, task.limits)
            else:
                outcome = self._execute(source, stdin_text, task.limits)
        now = self.clock()
        self.store.note_first_run(student_id, task_id, now)
        is_graded = isinstance(outcome, GradeReport)
        self.store.record_attempt(
            student_id, task_id, "run", now,
            outcome.all_pass if is_graded else None,
            source=source,
            grade_report=outcome.to_dict() if is_graded else None,
        )
        payload = {"mode": mode}
        if isinstance(outcome, GradeReport):
            payload["all_pass"] = outcome.all_pass
        else:
            payload["status"] = outcome.status.value
        self.store.append_event("run", student_id, task_id, now, payload)
        return outcome

    def handle_submit(self, student_id: str, task_id: str, source: str) -> GradeReport:
        task = self._usable_task(task_id)
        with self.pool.slot():
            report = self._grade(source, task.all_io, task.limits)
        now = self.clock()
        self.store.record_attempt(student_id, task_id, "submit", now, report.all_pass,
                                  source=source, grade_report=report.to_dict())
        self.store.append_event("submit", student_id, task_id, now,
                                {"all_pass": report.all_pass})
        return report

    # -- scaffolds ---------------------------------------------------------------

    def handle_scaffold_request(self, student_id: str, task_id: str,
                                closeness: str = "far"):
        """Enforce the disclosure policy, then generate.

        Check order: locked (no run yet, or delay pending), quota, near
        permission. The quota slot is claimed atomically before generation
        and released if generation dies with an operational error.
        """
        task = self._usable_task(task_id)
        policy = task.disclosure
        now = self.clock()
        session = self.store.get_session(student_id, task_id)
        first_run_at = session["first_run_at"] if session else None
        if first_run_at is None:
            raise LockedError("scaffolds unlock after your first run of this task")
        unlock_at = first_run_at + policy.delay_s
        if now < unlock_at:
            raise LockedError(
                f"scaffolds unlock {policy.delay_s}s after your first run", unlock_at
            )
        used = int(session["scaffolds_used"]) if session else 0
        if used >= policy.quota:
            raise QuotaExhaustedError(
                f"scaffold quota of {policy.quota} for this task is spent"
            )
        if closeness == "near" and not policy.allow_near:
            raise PolicyForbiddenError("near examples are not allowed for this task")

        grant_number = self.store.try_consume_quota(student_id, task_id, policy.quota)
        if grant_number is None:
            raise QuotaExhaustedError(
                f"scaffold quota of {policy.quota} for this task is spent"
            )
        self.store.append_event("scaffold_requested", student_id, task_id, self.clock(),
                                {"closeness": closeness})
        try:
            options = GenerationOptions(
                closeness=closeness,
                attempt=self._latest_attempt_context(student_id, task_id),
                max_attempts=self.config.max_attempts,
            )
            scaffold = generate_scaffold(
                task, options, self.provider,
                thresholds=self.config.thresholds,
                auto_accept=self.config.course_mode == "auto_accept",
                run_grade=self._pooled_grade,
                clock=self.clock,
            )
        except Exception:
            self.store.release_quota(student_id, task_id)
            raise

        fading_level = fading_level_for(policy.fading, grant_number)
        self.store.insert_scaffold(scaffold, student_id, fading_level, grant_number,
                                   self.clock())
        remaining = max(0, policy.quota - grant_number)
        if scaffold.review_status is ReviewStatus.AUTO_ACCEPTED:
            self.store.mark_shown(scaffold.id)
            self.store.append_event("scaffold_shown", student_id, task_id, self.clock(),
                                    {"scaffold_id": scaffold.id,
                                     "fading_level": fading_level})
            return ScaffoldGrant(scaffold=scaffold, fading_level=fading_level,
                                 remaining_quota=remaining)
        return PendingReview(scaffold_id=scaffold.id, remaining_quota=remaining)

    def _pooled_grade(self, source, io_examples, limits):
        with self.pool.slot():
            return self._grade(source, io_examples, limits)

    def _latest_attempt_context(self, student_id: str, task_id: str) -> AttemptContext | None:
        """Most recent run/submit of this student, so generation can address
        the specific misconception their attempt reveals."""
        row = self.store.latest_attempt(student_id, task_id)
        if row is None:
            return None
        report_json = row["grade_report"]
        return AttemptContext(
            student_code=row["source"],
            grade_report=GradeReport.from_dict(json.loads(report_json))
            if report_json else None,
        )

    def get_scaffold(self, principal: Principal, scaffold_id: str):
        """Fetch a stored scaffold, enforcing review-status visibility.

        Students only ever see their own AutoAccepted/Approved scaffolds; the
        first retrieval of an approved one counts as its disclosure.
        """
        row = self.store.get_scaffold_row(scaffold_id)
        if row is None:
            raise NotFoundError(f"no scaffold with id {scaffold_id!r}")
        scaffold = ScaffoldExample.from_dict(json.loads(row["body"]))
        if principal.role == "instructor":
            return ScaffoldGrant(scaffold=scaffold, fading_level=row["fading_level"],
                                 remaining_quota=self._remaining_quota(row))
        if row["student_id"] != principal.id:
            raise NotFoundError(f"no scaffold with id {scaffold_id!r}")
        if scaffold.review_status not in (ReviewStatus.AUTO_ACCEPTED, ReviewStatus.APPROVED):
            raise NotFoundError(f"no scaffold with id {scaffold_id!r}")
        if self.store.mark_shown(scaffold_id):
            self.store.append_event("scaffold_shown", principal.id, row["task_id"],
                                    self.clock(),
                                    {"scaffold_id": scaffold_id,
                                     "fading_level": row["fading_level"]})
        return ScaffoldGrant(scaffold=scaffold, fading_level=row["fading_level"],
                             remaining_quota=self._remaining_quota(row))

    def _remaining_quota(self, row) -> int:
        task = self.bank.get_task(row["task_id"])
        session = self.store.get_session(row["student_id"], row["task_id"])
        used = int(session["scaffolds_used"]) if session else 0
        return max(0, task.disclosure.quota - used)

    # -- review -------------------------------------------------------------------

    def review_queue(self) -> list[ReviewItem]:
        items = []
        for row in self.store.list_needs_review():
            body = json.loads(row["body"])
            failures = tuple(
                r["reason"] for r in body.get("provenance", {}).get("records", [])
                if r["outcome"] != "accepted"
            )
            items.append(ReviewItem(
                scaffold_id=row["id"],
                task_id=row["task_id"],
                created_at=row["created_at"],
                report=body.get("report"),
                failure_reasons=failures,
            ))
        return items

    def decide_review(self, instructor_id: str, scaffold_id: str, decision: str,
                      edits: dict | None = None) -> ScaffoldExample:
        row = self.store.get_scaffold_row(scaffold_id)
        if row is None:
            raise NotFoundError(f"no scaffold with id {scaffold_id!r}")
        if row["review_status"] != ReviewStatus.NEEDS_REVIEW.value:
            raise StaleDecisionError(
                f"scaffold {scaffold_id} was already decided ({row['review_status']})"
            )
        scaffold = ScaffoldExample.from_dict(json.loads(row["body"]))
        now = self.clock()
        if decision == "Rejected":
            updated = self._with_status(scaffold, ReviewStatus.REJECTED)
            self.store.apply_decision(scaffold_id, ReviewStatus.REJECTED.value,
                                      "Rejected", instructor_id, now,
                                      json.dumps(updated.to_dict()))
        elif decision == "Approved":
            updated = self._with_status(scaffold, ReviewStatus.APPROVED)
            self.store.apply_decision(scaffold_id, ReviewStatus.APPROVED.value,
                                      "Approved", instructor_id, now,
                                      json.dumps(updated.to_dict()))
        elif decision == "EditedAndApproved":
            updated = self._apply_edits(scaffold, edits or {})
            self.store.apply_decision(scaffold_id, ReviewStatus.APPROVED.value,
                                      "EditedAndApproved", instructor_id, now,
                                      json.dumps(updated.to_dict()))
        else:
            raise ValueError(f"unknown decision {decision!r}")
        self.store.append_event("review_decided", instructor_id, row["task_id"], now,
                                {"scaffold_id": scaffold_id, "decision": decision})
        return updated

    def _with_status(self, scaffold: ScaffoldExample,
                     status: ReviewStatus) -> ScaffoldExample:
        data = scaffold.to_dict()
        data["review_status"] = status.value
        return ScaffoldExample.from_dict(data)

    def _apply_edits(self, scaffold: ScaffoldExample, edits: dict) -> ScaffoldExample:
        """Edited fields must still parse and pass the scaffold's own I/O."""
        data = scaffold.to_dict()
        for key in ("statement", "code", "explanation"):
            if key in edits and isinstance(edits[key], str):
                data[key] = edits[key]
        try:
            parse_program(data["code"])
        except ParseError as exc:
            raise InvalidEditError(f"edited code does not parse: {exc}")
        task = self.bank.get_task(scaffold.task_id)
        candidate_io = ScaffoldExample.from_dict(data).candidate_io
        if candidate_io:
            report = self._pooled_grade(data["code"], candidate_io, task.limits)
            if not report.all_pass:
                raise InvalidEditError(
                    "edited code fails the scaffold's own I/O: " + summarize_grade(report),
                    [v.label.value for v in report.verdicts],
                )
        try:
            pair_report = classify_pair(
                Sample(task.statement, task.canonical_solution),
                Sample(data["statement"], data["code"]),
                self.config.thresholds,
            )
            data["report"] = pair_report.to_dict()
        except ParseError:
            pass
        data["review_status"] = ReviewStatus.APPROVED.value
        updated = ScaffoldExample.from_dict(data)
        relation = build_relation_explanation(task, updated)
        data["relation"] = relation.to_dict()
        return ScaffoldExample.from_dict(data)

    # -- events ---------------------------------------------------------------------

    def export_events(self, from_ts: float | None = None,
                      to_ts: float | None = None) -> str:
        """Newline-delimited JSON, header first, chronological order."""
        lines = [json.dumps({"kind": "header", "schema_version": EVENT_SCHEMA_VERSION})]
        for row in self.store.events_between(from_ts, to_ts):
            lines.append(json.dumps({
                "seq": row["seq"],
                "kind": row["kind"],
                "actor": row["actor"],
                "task_id": row["task_id"],
                "ts": row["ts"],
                "payload": json.loads(row["payload"]),
            }))
        return "\n".join(lines) + "\n"
