"""Task storage: pack ingest, schema validation, canonical-solution checking.

A task pack is one UTF-8 JSON document. Ingest validates the document shape
first (SchemaError names the offending field), then replays every task's
canonical solution against its own I/O examples through the grading runner;
tasks whose solution does not pass everything are stored but flagged
unusable.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, replace

from .runner import (
    GradeReport,
    IOExample,
    OutputPolicy,
    ResourceLimits,
    SetupError,
    VerdictLabel,
    grade,
)


class SchemaError(Exception):
    """Pack document malformed; ``field`` is the offending field path."""

    def __init__(self, field: str, detail: str):
        self.field = field
        self.detail = detail
        super().__init__(f"{field}: {detail}")


class DuplicateIdError(Exception):
    def __init__(self, task_id: str):
        self.task_id = task_id
        super().__init__(f"duplicate task id {task_id!r}")


class NotFoundError(Exception):
    pass


class RunnerUnavailable(Exception):
    """The grading backend could not run at all during validation."""


FADING_MODES = ("none", "code_then_prose", "prose_then_statement")


@dataclass(frozen=True)
class DisclosurePolicy:
    """When and how scaffold examples are released for one task."""

    delay_s: int = 180
    quota: int = 3
    fading: str = "none"
    allow_near: bool = False

    def __post_init__(self):
        if self.delay_s < 0:
            raise ValueError("delay_s must be >= 0")
        if self.quota < 0:
            raise ValueError("quota must be >= 0")
        if self.fading not in FADING_MODES:
            raise ValueError(f"fading must be one of {FADING_MODES}, got {self.fading!r}")

    def to_dict(self) -> dict:
        return {
            "delay_s": self.delay_s,
            "quota": self.quota,
            "fading": self.fading,
            "allow_near": self.allow_near,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DisclosurePolicy":
        return cls(
            delay_s=data.get("delay_s", 180),
            quota=data.get("quota", 3),
            fading=data.get("fading", "none"),
            allow_near=data.get("allow_near", False),
        )


@dataclass(frozen=True)
class Task:
    id: str
    title: str
    statement: str
    reasoning_tags: tuple[str, ...]
    canonical_solution: str
    sample_io: tuple[IOExample, ...]
    hidden_io: tuple[IOExample, ...]
    limits: ResourceLimits
    disclosure: DisclosurePolicy
    usable: bool = True

    def __post_init__(self):
        if not self.id:
            raise ValueError("task id must be non-empty")
        if not self.statement.strip():
            raise ValueError(f"task {self.id!r}: statement must be non-empty")
        if len(self.sample_io) < 1:
            raise ValueError(f"task {self.id!r}: sample_io must contain at least one example")

    @property
    def all_io(self) -> tuple[IOExample, ...]:
        return self.sample_io + self.hidden_io

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "statement": self.statement,
            "reasoning_tags": list(self.reasoning_tags),
            "canonical_solution": self.canonical_solution,
            "sample_io": [ex.to_dict() for ex in self.sample_io],
            "hidden_io": [ex.to_dict() for ex in self.hidden_io],
            "limits": self.limits.to_dict(),
            "disclosure": self.disclosure.to_dict(),
        }


@dataclass(frozen=True)
class TaskPack:
    pack_id: str
    version: int
    tasks: tuple[Task, ...]

    def __post_init__(self):
        if self.version < 1:
            raise ValueError("pack version must be >= 1")
        seen = set()
        for task in self.tasks:
            if task.id in seen:
                raise DuplicateIdError(task.id)
            seen.add(task.id)

    def to_dict(self) -> dict:
        return {
            "pack_id": self.pack_id,
            "version": self.version,
            "tasks": [t.to_dict() for t in self.tasks],
        }


@dataclass(frozen=True)
class ValidationReport:
    """Canonical-solution replay of one task over sample and hidden I/O."""

    task_id: str
    verdict_labels: tuple[VerdictLabel, ...]
    usable: bool

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "verdicts": [v.value for v in self.verdict_labels],
            "usable": self.usable,
        }


def _require(obj: dict, field: str, kind, path: str):
    if field not in obj:
        raise SchemaError(f"{path}.{field}", "missing field")
    value = obj[field]
    if kind is int and isinstance(value, bool):
        raise SchemaError(f"{path}.{field}", "expected an integer, got a boolean")
    if not isinstance(value, kind):
        want = kind.__name__ if not isinstance(kind, tuple) else "/".join(k.__name__ for k in kind)
        raise SchemaError(f"{path}.{field}", f"expected {want}, got {type(value).__name__}")
    return value


def _parse_io_example(data, path: str) -> IOExample:
    if not isinstance(data, dict):
        raise SchemaError(path, "expected an object")
    input_text = _require(data, "input", str, path)
    expected = _require(data, "expected_output", str, path)
    policy_data = data.get("output_policy", {})
    if not isinstance(policy_data, dict):
        raise SchemaError(f"{path}.output_policy", "expected an object")
    try:
        policy = OutputPolicy.from_dict(policy_data)
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"{path}.output_policy", str(exc)) from None
    return IOExample(input=input_text, expected_output=expected, output_policy=policy)


def _parse_task(data, index: int) -> Task:
    path = f"tasks[{index}]"
    if not isinstance(data, dict):
        raise SchemaError(path, "expected an object")
    task_id = _require(data, "id", str, path)
    title = _require(data, "title", str, path)
    statement = _require(data, "statement", str, path)
    tags = _require(data, "reasoning_tags", list, path)
    if not all(isinstance(t, str) for t in tags):
        raise SchemaError(f"{path}.reasoning_tags", "expected an array of strings")
    solution = _require(data, "canonical_solution", str, path)
    sample_raw = _require(data, "sample_io", list, path)
    hidden_raw = data.get("hidden_io", [])
    if not isinstance(hidden_raw, list):
        raise SchemaError(f"{path}.hidden_io", "expected an array")
    sample_io = tuple(_parse_io_example(ex, f"{path}.sample_io[{i}]")
                      for i, ex in enumerate(sample_raw))
    hidden_io = tuple(_parse_io_example(ex, f"{path}.hidden_io[{i}]")
                      for i, ex in enumerate(hidden_raw))
    limits_data = data.get("limits", {})
    if not isinstance(limits_data, dict):
        raise SchemaError(f"{path}.limits", "expected an object")
    try:
        limits = ResourceLimits.from_dict(limits_data)
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"{path}.limits", str(exc)) from None
    disclosure_data = data.get("disclosure", {})
    if not isinstance(disclosure_data, dict):
        raise SchemaError(f"{path}.disclosure", "expected an object")
    try:
        disclosure = DisclosurePolicy.from_dict(disclosure_data)
    except (ValueError, TypeError) as exc:
        raise SchemaError(f"{path}.disclosure", str(exc)) from None
    try:
        return Task(
            id=task_id,
            title=title,
            statement=statement,
            reasoning_tags=tuple(tags),
            canonical_solution=solution,
            sample_io=sample_io,
            hidden_io=hidden_io,
            limits=limits,
            disclosure=disclosure,
        )
    except ValueError as exc:
        raise SchemaError(path, str(exc)) from None


def load_task_pack(document: str) -> TaskPack:
    """Parse a pack document, checking every structural invariant that does
    not require execution."""
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaError("(document)", f"not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise SchemaError("(document)", "expected a JSON object at top level")
    pack_id = _require(data, "pack_id", str, "pack")
    version = _require(data, "version", int, "pack")
    tasks_raw = _require(data, "tasks", list, "pack")
    tasks = tuple(_parse_task(t, i) for i, t in enumerate(tasks_raw))
    try:
        return TaskPack(pack_id=pack_id, version=version, tasks=tasks)
    except ValueError as exc:
        raise SchemaError("pack.version", str(exc)) from None


def pack_to_document(pack: TaskPack) -> str:
    """Serialize a pack back to its JSON document form."""
    return json.dumps(pack.to_dict(), indent=2, ensure_ascii=False) + "\n"


def validate_task(task: Task, runner=grade) -> ValidationReport:
    """Replay the canonical solution over sample and hidden I/O.

    ``runner`` is any grading capability with the signature of
    :func:`codescaffold.runner.grade`.
    """
    try:
        report: GradeReport = runner(task.canonical_solution, task.all_io, task.limits)
    except SetupError as exc:
        raise RunnerUnavailable(str(exc)) from exc
    labels = tuple(v.label for v in report.verdicts)
    return ValidationReport(task_id=task.id, verdict_labels=labels, usable=report.all_pass)


class TaskBank:
    """Read-mostly task store; ingest is exclusive (single writer)."""

    def __init__(self):
        self._tasks: dict[str, Task] = {}
        self._order: list[str] = []
        self._ingest_lock = threading.Lock()

    def ingest(self, pack: TaskPack, runner=grade) -> list[ValidationReport]:
        """Validate and store every task in the pack; idempotent per pack."""
        with self._ingest_lock:
            reports = []
            for task in pack.tasks:
                report = validate_task(task, runner)
                stored = replace(task, usable=report.usable)
                if task.id not in self._tasks:
                    self._order.append(task.id)
                self._tasks[task.id] = stored
                reports.append(report)
            return reports

    def ingest_document(self, document: str, runner=grade) -> list[ValidationReport]:
        return self.ingest(load_task_pack(document), runner)

    def get_task(self, task_id: str) -> Task:
        if task_id not in self._tasks:
            raise NotFoundError(f"no task with id {task_id!r}")
        return self._tasks[task_id]

    def list_tasks(self) -> list[Task]:
        return [self._tasks[tid] for tid in self._order]

    def snapshot(self) -> dict[str, Task]:
        """Stable copy of the stored state, for idempotence checks."""
        return dict(self._tasks)
