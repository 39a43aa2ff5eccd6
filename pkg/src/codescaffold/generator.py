"""Scaffold generation: prompt assembly, candidate decoding, the gate.

Every provider response must decode into a candidate (statement, runnable
code, explanation, proposed I/O pairs, optional relation map) and then pass
four ordered checks before release: the code parses in the teaching
language, it passes self-grading on its own I/O pairs, the pair lands in
the requested similarity quadrant, and a usable relation map exists
(provider-supplied, or synthesized from the shared structure). Candidates
that never pass are kept for instructor review rather than silently
dropped.
"""

from __future__ import annotations

import json
import re
import time
import uuid
from dataclasses import dataclass
from enum import Enum

from .analysis import (
    DEFAULT_THRESHOLDS,
    ParseError,
    Quadrant,
    Sample,
    SimilarityReport,
    Thresholds,
    classify_pair,
    normalize,
    parse_program,
    structural_fingerprint,
    surface_features,
)
from .providers import ProviderUnavailable, TransportError
from .runner import GradeReport, IOExample, grade
from .taskbank import Task


class DecodeFailure(Exception):
    """Provider output did not decode into a usable candidate."""


class NearNotAllowed(ValueError):
    """Near closeness requested against a policy that forbids it."""


CLOSENESS_FAR = "far"
CLOSENESS_NEAR = "near"

_QUADRANT_FOR_CLOSENESS = {
    CLOSENESS_FAR: Quadrant.FAR,
    CLOSENESS_NEAR: Quadrant.NEAR,
}


@dataclass(frozen=True)
class AttemptContext:
    """A student's current attempt, folded into the prompt."""

    student_code: str
    grade_report: GradeReport | None = None


@dataclass(frozen=True)
class GenerationOptions:
    closeness: str = CLOSENESS_FAR
    attempt: AttemptContext | None = None
    max_attempts: int = 3

    def __post_init__(self):
        if self.closeness not in _QUADRANT_FOR_CLOSENESS:
            raise ValueError(f"closeness must be 'far' or 'near', got {self.closeness!r}")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


@dataclass(frozen=True)
class RelationEntry:
    target_element: str
    scaffold_element: str
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "target_element": self.target_element,
            "scaffold_element": self.scaffold_element,
            "note": self.note,
        }


@dataclass(frozen=True)
class RelationMap:
    """Explicit correspondences between target and scaffold elements, plus a
    one-line shared-pattern summary."""

    entries: tuple[RelationEntry, ...]
    summary: str

    def is_well_formed(self) -> bool:
        return (
            len(self.entries) >= 2
            and all(e.target_element.strip() and e.scaffold_element.strip()
                    for e in self.entries)
        )

    def to_dict(self) -> dict:
        return {"entries": [e.to_dict() for e in self.entries], "summary": self.summary}

    @classmethod
    def from_dict(cls, data: dict) -> "RelationMap":
        entries = tuple(
            RelationEntry(
                target_element=e.get("target_element", e.get("target", "")),
                scaffold_element=e.get("scaffold_element", e.get("scaffold", "")),
                note=e.get("note", ""),
            )
            for e in data.get("entries", [])
        )
        return cls(entries=entries, summary=data.get("summary", ""))


@dataclass(frozen=True)
class ScaffoldCandidate:
    statement: str
    code: str
    explanation: str
    candidate_io: tuple[IOExample, ...]
    relation: RelationMap | None = None

    def to_dict(self) -> dict:
        return {
            "statement": self.statement,
            "code": self.code,
            "explanation": self.explanation,
            "candidate_io": [ex.to_dict() for ex in self.candidate_io],
            "relation": self.relation.to_dict() if self.relation else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScaffoldCandidate":
        relation = data.get("relation")
        return cls(
            statement=data["statement"],
            code=data["code"],
            explanation=data["explanation"],
            candidate_io=tuple(IOExample.from_dict(ex) for ex in data.get("candidate_io", [])),
            relation=RelationMap.from_dict(relation) if relation else None,
        )


class ReviewStatus(str, Enum):
    AUTO_ACCEPTED = "AutoAccepted"
    NEEDS_REVIEW = "NeedsReview"
    APPROVED = "Approved"
    REJECTED = "Rejected"


CHECK_PARSE = "parse"
CHECK_SELF_GRADE = "self_grade"
CHECK_QUADRANT = "quadrant"
CHECK_RELATION = "relation"
OUTCOME_DECODE_FAILURE = "decode_failure"
OUTCOME_TRANSPORT_ERROR = "transport_error"
OUTCOME_ACCEPTED = "accepted"


@dataclass(frozen=True)
class ValidationOutcome:
    ok: bool
    failed_check: str | None
    reason: str
    report: SimilarityReport | None = None
    relation: RelationMap | None = None
    details: dict | None = None


@dataclass(frozen=True)
class AttemptRecord:
    index: int
    outcome: str
    reason: str
    report: SimilarityReport | None = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "outcome": self.outcome,
            "reason": self.reason,
            "report": self.report.to_dict() if self.report else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AttemptRecord":
        report = data.get("report")
        return cls(
            index=data["index"],
            outcome=data["outcome"],
            reason=data["reason"],
            report=SimilarityReport.from_dict(report) if report else None,
        )


@dataclass(frozen=True)
class Provenance:
    provider_id: str
    attempts_used: int
    created_at: float
    records: tuple[AttemptRecord, ...]

    def to_dict(self) -> dict:
        return {
            "provider_id": self.provider_id,
            "attempts_used": self.attempts_used,
            "created_at": self.created_at,
            "records": [r.to_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Provenance":
        return cls(
            provider_id=data["provider_id"],
            attempts_used=data["attempts_used"],
            created_at=data["created_at"],
            records=tuple(AttemptRecord.from_dict(r) for r in data.get("records", [])),
        )


@dataclass(frozen=True)
class ScaffoldExample:
    id: str
    task_id: str
    statement: str
    code: str
    explanation: str
    candidate_io: tuple[IOExample, ...]
    relation: RelationMap | None
    report: SimilarityReport | None
    review_status: ReviewStatus
    provenance: Provenance

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "task_id": self.task_id,
            "statement": self.statement,
            "code": self.code,
            "explanation": self.explanation,
            "candidate_io": [ex.to_dict() for ex in self.candidate_io],
            "relation": self.relation.to_dict() if self.relation else None,
            "report": self.report.to_dict() if self.report else None,
            "review_status": self.review_status.value,
            "provenance": self.provenance.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScaffoldExample":
        relation = data.get("relation")
        report = data.get("report")
        return cls(
            id=data["id"],
            task_id=data["task_id"],
            statement=data["statement"],
            code=data["code"],
            explanation=data["explanation"],
            candidate_io=tuple(IOExample.from_dict(ex) for ex in data.get("candidate_io", [])),
            relation=RelationMap.from_dict(relation) if relation else None,
            report=SimilarityReport.from_dict(report) if report else None,
            review_status=ReviewStatus(data["review_status"]),
            provenance=Provenance.from_dict(data["provenance"]),
        )


# ---------------------------------------------------------------------------
# Candidate document decoding

_SECTION_NAMES = ("statement", "code", "explanation", "io_pairs", "relation_map")
_SECTION_RE = re.compile(
    r"^\s{0,3}(?:#{1,6}\s*)?(statement|code|explanation|io_pairs|relation_map)\s*:?\s*$",
    re.IGNORECASE | re.MULTILINE,
)
_FENCED_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)
_SUMMARY_LINE_RE = re.compile(r"^\s*summary\s*:\s*(.+)$", re.IGNORECASE | re.MULTILINE)


def _split_sections(document: str) -> dict[str, str]:
    sections: dict[str, str] = {}
    matches = list(_SECTION_RE.finditer(document))
    for i, m in enumerate(matches):
        name = m.group(1).lower()
        start = m.end()
        end = matches[i + 1].start() if i + 1 < len(matches) else len(document)
        sections[name] = document[start:end].strip("\n")
    return sections


def _unfence(text: str) -> str:
    m = _FENCED_RE.search(text)
    return m.group(1) if m else text


def _decode_io_pairs(text: str) -> tuple[IOExample, ...]:
    body = _unfence(text).strip()
    try:
        data = json.loads(body)
    except json.JSONDecodeError as exc:
        raise DecodeFailure(f"io_pairs is not a JSON array: {exc}") from None
    if not isinstance(data, list) or not data:
        raise DecodeFailure("io_pairs must be a non-empty JSON array")
    pairs = []
    for i, item in enumerate(data):
        if not isinstance(item, dict) or "input" not in item:
            raise DecodeFailure(f"io_pairs[{i}] must be an object with input/expected_output")
        expected = item.get("expected_output", item.get("output"))
        if not isinstance(item["input"], str) or not isinstance(expected, str):
            raise DecodeFailure(f"io_pairs[{i}] fields must be strings")
        pairs.append(IOExample(input=item["input"], expected_output=expected))
    return tuple(pairs)


def _decode_relation(text: str) -> RelationMap | None:
    body = _unfence(text).strip()
    summary = ""
    sm = _SUMMARY_LINE_RE.search(text)
    if sm:
        summary = sm.group(1).strip()
        body = _SUMMARY_LINE_RE.sub("", body).strip()
    try:
        data = json.loads(body)
    except json.JSONDecodeError:
        return None
    if isinstance(data, list):
        data = {"entries": data, "summary": summary}
    if not isinstance(data, dict):
        return None
    if summary and not data.get("summary"):
        data = {**data, "summary": summary}
    try:
        return RelationMap.from_dict(data)
    except (TypeError, AttributeError):
        return None


def decode_candidate_document(document: str) -> ScaffoldCandidate:
    """Decode a provider document into a candidate.

    Accepts either a single JSON object with the five section names as keys,
    or a sectioned text document with ``# statement`` style headings where
    the code section may be fenced. Raises DecodeFailure when any of the
    statement/code/explanation/io_pairs parts is missing or empty; a missing
    or malformed relation_map only leaves ``relation`` unset.
    """
    stripped = document.strip()
    if stripped.startswith("{"):
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise DecodeFailure(f"document looks like JSON but does not parse: {exc}") from None
        sections = {
            name: data.get(name) for name in _SECTION_NAMES
        }
        for name in ("statement", "code", "explanation"):
            if not isinstance(sections[name], str) or not sections[name].strip():
                raise DecodeFailure(f"missing or empty section: {name}")
        io_raw = sections["io_pairs"]
        if not isinstance(io_raw, list) or not io_raw:
            raise DecodeFailure("io_pairs must be a non-empty array")
        candidate_io = _decode_io_pairs(json.dumps(io_raw))
        relation_raw = sections["relation_map"]
        relation = None
        if isinstance(relation_raw, (dict, list)):
            relation = _decode_relation(json.dumps(relation_raw))
        return ScaffoldCandidate(
            statement=sections["statement"].strip(),
            code=sections["code"],
            explanation=sections["explanation"].strip(),
            candidate_io=candidate_io,
            relation=relation,
        )

    sections = _split_sections(document)
    for name in ("statement", "code", "explanation", "io_pairs"):
        if name not in sections or not sections[name].strip():
            raise DecodeFailure(f"missing or empty section: {name}")
    relation = _decode_relation(sections["relation_map"]) if "relation_map" in sections else None
    return ScaffoldCandidate(
        statement=sections["statement"].strip(),
        code=_unfence(sections["code"]),
        explanation=sections["explanation"].strip(),
        candidate_io=_decode_io_pairs(sections["io_pairs"]),
        relation=relation,
    )


# ---------------------------------------------------------------------------
# Prompt assembly

FAR_CONSTRAINT = (
    "Differ in context: tell a new real-world story, use entirely new variable "
    "names, and frame the input/output differently from the target task."
)
NEAR_CONSTRAINT = (
    "Stay close in context: keep the story, naming style, and input/output "
    "framing recognizably similar to the target task."
)

_LANGUAGE_RULES = (
    "Write the reference code in the plain teaching subset: assignments, "
    "augmented assignments (+= -= *=), if/elif/else, while, for-each loops, "
    "function definitions, return/break/continue, int/float/string/bool "
    "literals, lists, indexing, slicing, comparisons, arithmetic, and calls "
    "to print/input/range/len/int/float/str/sum/min/max/abs/sorted and the "
    "append/split/join methods. No imports, no dictionaries, no f-strings."
)

_OUTPUT_FORMAT = """Respond with exactly these sections:

# statement
<the example problem statement>

# code
```
<runnable reference code reading stdin and writing stdout>
```

# explanation
<a brief explanation of how the code works>

# io_pairs
[{"input": "<stdin>", "expected_output": "<stdout>"}, {"input": "<stdin>", "expected_output": "<stdout>"}]

# relation_map
[{"target_element": "<element of the target task>", "scaffold_element": "<corresponding element of your example>", "note": "<how they correspond>"}]
summary: <one line naming the shared reasoning pattern>"""


def summarize_grade(report: GradeReport) -> str:
    parts = []
    for i, verdict in enumerate(report.verdicts, start=1):
        line = f"example {i}: {verdict.label.value}"
        if verdict.mismatch is not None:
            m = verdict.mismatch
            line += f" (line {m.line}: expected {m.expected!r}, got {m.actual!r})"
        parts.append(line)
    return "; ".join(parts)


def _corrective_line(record: AttemptRecord) -> str:
    base = f"attempt {record.index} was rejected ({record.outcome}): {record.reason}"
    return f"- {base}"


def build_prompt(task: Task, options: GenerationOptions,
                 prior_failures: list[AttemptRecord] | None = None) -> str:
    """Assemble the full generation prompt for one attempt."""
    closeness_block = FAR_CONSTRAINT if options.closeness == CLOSENESS_FAR else NEAR_CONSTRAINT
    lines = [
        "Create a scaffold example for a student who is stuck on the target "
        "programming task below. The example must be a different problem that "
        "follows the same underlying reasoning pattern, so the student can "
        "study it and transfer the approach without copying an answer.",
        "",
        "## target task statement",
        task.statement,
        "",
        "## target reference solution (never reveal or restate this)",
        "```",
        task.canonical_solution.rstrip("\n"),
        "```",
        "",
        "## reasoning pattern tags",
        ", ".join(task.reasoning_tags) if task.reasoning_tags else "(none)",
        "",
        "## requirements",
        "- Preserve the same underlying reasoning pattern as the target task.",
        f"- {closeness_block}",
        "- Include two sample I/O pairs that your reference code reproduces exactly.",
        "- Include a relation map connecting elements of the two tasks.",
        f"- {_LANGUAGE_RULES}",
    ]
    if options.attempt is not None:
        lines += [
            "",
            "## student's current attempt",
            "```",
            options.attempt.student_code.rstrip("\n"),
            "```",
        ]
        if options.attempt.grade_report is not None:
            lines += [
                "grading of that attempt: " + summarize_grade(options.attempt.grade_report),
                "Address the misconception this attempt reveals.",
            ]
    if prior_failures:
        lines += ["", "## corrections from earlier rejected attempts"]
        lines += [_corrective_line(r) for r in prior_failures]
        lines += ["Fix every problem listed above in your next response."]
    lines += ["", "## output format", _OUTPUT_FORMAT]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Relation-map synthesis

# Ordered: control-flow clusters first, then data handling, then I/O.
_CLUSTER_PHRASES = (
    ("ForEach", ("the loop that visits every item of the input",
                 "the example's loop over its own items",
                 "both walk a sequence element by element")),
    ("While", ("the loop that repeats until a condition changes",
               "the example's condition-controlled loop",
               "both repeat work until a stopping condition")),
    ("If", ("the check deciding which items count",
            "the matching check in the example",
            "both filter cases with a condition")),
    ("FuncDef", ("the helper function doing one step of the work",
                 "the example's helper function",
                 "both isolate a reusable step in a function")),
    ("AugAssign", ("the running value updated as the loop goes",
                   "the example's running value",
                   "both accumulate a result across iterations")),
    ("Return", ("the value handed back by the helper",
                "what the example's helper returns",
                "both produce their result through a return")),
    ("Compare", ("the comparison steering the logic",
                 "the example's comparison",
                 "both branch on a comparison between values")),
    ("Index", ("picking elements by position",
               "how the example picks elements",
               "both read data at a computed position")),
    ("Name:input", ("reading the input values",
                    "how the example reads its input",
                    "both start by reading from standard input")),
    ("Name:print", ("printing the final answer",
                    "how the example prints its answer",
                    "both end by printing one result")),
)

_GENERIC_ENTRIES = (
    RelationEntry(
        target_element="the quantity the target task asks for",
        scaffold_element="the quantity the example computes",
        note="restate one in terms of the other to transfer the approach",
    ),
    RelationEntry(
        target_element="the target's input and output format",
        scaffold_element="the example's input and output format",
        note="map what is read and what must be printed",
    ),
)


def _display_tag(tag: str) -> str:
    return tag.replace("-", " ").replace("_", " ")


def synthesize_relation_map(task: Task, candidate_code: str) -> RelationMap:
    """Build a minimal relation map out of the structure the two solutions share."""
    entries: list[RelationEntry] = []
    try:
        target_grams = structural_fingerprint(normalize(parse_program(task.canonical_solution)))
        candidate_grams = structural_fingerprint(normalize(parse_program(candidate_code)))
        shared_labels = {gram[1] for gram in (target_grams & candidate_grams)}
    except ParseError:
        shared_labels = set()
    for prefix, (target_el, scaffold_el, note) in _CLUSTER_PHRASES:
        if any(label == prefix or label.startswith(prefix + ":") for label in shared_labels):
            entries.append(RelationEntry(target_el, scaffold_el, note))
    for generic in _GENERIC_ENTRIES:
        if len(entries) >= 2:
            break
        entries.append(generic)
    if task.reasoning_tags:
        pattern = ", ".join(_display_tag(t) for t in task.reasoning_tags)
        summary = f"Both solutions follow the same {pattern} pattern."
    else:
        summary = "Both solutions follow the same underlying reasoning pattern."
    return RelationMap(entries=tuple(entries), summary=summary)


def build_relation_explanation(task: Task, scaffold: ScaffoldExample) -> RelationMap:
    """Provider-supplied map when well-formed, synthesized fallback otherwise."""
    if scaffold.relation is not None and scaffold.relation.is_well_formed():
        return scaffold.relation
    return synthesize_relation_map(task, scaffold.code)


# ---------------------------------------------------------------------------
# Validation gate

def validate_candidate(task: Task, candidate: ScaffoldCandidate,
                       options: GenerationOptions,
                       thresholds: Thresholds = DEFAULT_THRESHOLDS,
                       run_grade=grade) -> ValidationOutcome:
    """Run the four ordered release checks, reporting the first failure.

    Failures are data, not errors; the outcome carries the similarity report
    whenever the candidate parsed, for auditability.
    """
    try:
        parse_program(candidate.code)
    except ParseError as exc:
        return ValidationOutcome(
            ok=False, failed_check=CHECK_PARSE,
            reason=f"candidate code does not parse: {exc}",
        )

    report = classify_pair(
        Sample(task.statement, task.canonical_solution),
        Sample(candidate.statement, candidate.code),
        thresholds,
    )

    grade_report = run_grade(candidate.code, candidate.candidate_io, task.limits)
    if not grade_report.all_pass:
        return ValidationOutcome(
            ok=False, failed_check=CHECK_SELF_GRADE,
            reason="candidate code fails its own sample I/O: " + summarize_grade(grade_report),
            report=report,
            details={"verdicts": [v.label.value for v in grade_report.verdicts]},
        )

    wanted = _QUADRANT_FOR_CLOSENESS[options.closeness]
    if report.quadrant is not wanted:
        reason, details = _quadrant_failure(task, candidate, report, wanted)
        return ValidationOutcome(
            ok=False, failed_check=CHECK_QUADRANT,
            reason=reason, report=report, details=details,
        )

    relation = candidate.relation
    if relation is None or not relation.is_well_formed():
        relation = synthesize_relation_map(task, candidate.code)
    if not relation.is_well_formed():
        return ValidationOutcome(
            ok=False, failed_check=CHECK_RELATION,
            reason="no usable relation map could be extracted or synthesized",
            report=report,
        )
    return ValidationOutcome(ok=True, failed_check=None, reason="accepted",
                             report=report, relation=relation)


def _quadrant_failure(task: Task, candidate: ScaffoldCandidate,
                      report: SimilarityReport, wanted: Quadrant):
    got = report.quadrant
    details: dict = {"quadrant": got.value, "wanted": wanted.value}
    reasons = [f"candidate landed in quadrant {got.value}, requested {wanted.value}"]
    if got in (Quadrant.NEAR, Quadrant.MISLEADING) and wanted is Quadrant.FAR:
        target_profile = surface_features(task.statement, task.canonical_solution)
        cand_profile = surface_features(candidate.statement, candidate.code)
        shared_ids = sorted(target_profile.identifiers & cand_profile.identifiers)
        shared_words = sorted(target_profile.statement_words & cand_profile.statement_words)
        details["shared_identifiers"] = shared_ids
        details["shared_statement_words"] = shared_words
        reasons.append(
            f"surface similarity {report.surface_score:.2f} is too high "
            f"(must stay below {report.tau_surf:.2f})"
        )
        if shared_ids:
            reasons.append("shared identifiers: " + ", ".join(shared_ids))
        if shared_words:
            reasons.append("shared statement words: " + ", ".join(shared_words))
        reasons.append("change the variable names and the story so they no longer overlap")
    if got in (Quadrant.MISLEADING, Quadrant.LOW_RELEVANCE):
        reasons.append(
            f"structural similarity {report.structural_score:.2f} is too low "
            f"(needs at least {report.tau_struct:.2f}); mirror the target's "
            "control flow more closely"
        )
    if got is Quadrant.FAR and wanted is Quadrant.NEAR:
        reasons.append(
            f"surface similarity {report.surface_score:.2f} is too low for a "
            f"near example (needs at least {report.tau_surf:.2f}); keep the "
            "context recognizably close"
        )
    return "; ".join(reasons), details


# ---------------------------------------------------------------------------
# Generation loop

def _default_id() -> str:
    return "sc-" + uuid.uuid4().hex[:12]


def _band_midpoint(closeness: str, thresholds: Thresholds) -> float:
    if closeness == CLOSENESS_FAR:
        return thresholds.tau_surf / 2
    return (thresholds.tau_surf + 1.0) / 2


def _best_failed_candidate(attempts, closeness: str, thresholds: Thresholds):
    """Exhaustion fallback: highest structural score first, then surface
    closest to the midpoint of the allowed band; unscored candidates last."""
    mid = _band_midpoint(closeness, thresholds)

    def sort_key(item):
        _, _, outcome = item
        if outcome.report is None:
            return (1, 0.0, 0.0)
        return (0, -outcome.report.structural_score,
                abs(outcome.report.surface_score - mid))

    return min(attempts, key=sort_key) if attempts else None


def generate_scaffold(task: Task, options: GenerationOptions, provider,
                      thresholds: Thresholds = DEFAULT_THRESHOLDS,
                      auto_accept: bool = True,
                      run_grade=grade,
                      id_factory=_default_id,
                      clock=time.time) -> ScaffoldExample:
    """Drive the provider until a candidate passes the gate or attempts run out.

    On success the scaffold is AutoAccepted (or NeedsReview when
    ``auto_accept`` is off, for instructor-gated courses). On exhaustion the
    best-scoring candidate comes back as NeedsReview with every attempt on
    record. Raises ProviderUnavailable only when every attempt failed at the
    transport level, and NearNotAllowed when near closeness is requested
    against a policy that forbids it.
    """
    if options.closeness == CLOSENESS_NEAR and not task.disclosure.allow_near:
        raise NearNotAllowed("near scaffolds are not allowed by this task's disclosure policy")

    records: list[AttemptRecord] = []
    failed_candidates = []  # (attempt index, candidate, outcome)
    transport_failures = 0

    for attempt in range(1, options.max_attempts + 1):
        prompt = build_prompt(task, options, prior_failures=records)
        try:
            document = provider.complete(prompt)
        except TransportError as exc:
            transport_failures += 1
            records.append(AttemptRecord(attempt, OUTCOME_TRANSPORT_ERROR, str(exc)))
            continue
        try:
            candidate = decode_candidate_document(document)
        except DecodeFailure as exc:
            records.append(AttemptRecord(attempt, OUTCOME_DECODE_FAILURE, str(exc)))
            continue
        outcome = validate_candidate(task, candidate, options, thresholds, run_grade)
        if outcome.ok:
            records.append(AttemptRecord(attempt, OUTCOME_ACCEPTED, outcome.reason,
                                         outcome.report))
            status = ReviewStatus.AUTO_ACCEPTED if auto_accept else ReviewStatus.NEEDS_REVIEW
            return ScaffoldExample(
                id=id_factory(),
                task_id=task.id,
                statement=candidate.statement,
                code=candidate.code,
                explanation=candidate.explanation,
                candidate_io=candidate.candidate_io,
                relation=outcome.relation,
                report=outcome.report,
                review_status=status,
                provenance=Provenance(
                    provider_id=getattr(provider, "id", "unknown"),
                    attempts_used=attempt,
                    created_at=clock(),
                    records=tuple(records),
                ),
            )
        records.append(AttemptRecord(attempt, outcome.failed_check or "failed",
                                     outcome.reason, outcome.report))
        failed_candidates.append((attempt, candidate, outcome))

    if transport_failures == options.max_attempts:
        raise ProviderUnavailable(
            f"all {options.max_attempts} provider calls failed at the transport level"
        )

    best = _best_failed_candidate(failed_candidates, options.closeness, thresholds)
    if best is not None:
        _, candidate, outcome = best
        statement, code = candidate.statement, candidate.code
        explanation, candidate_io = candidate.explanation, candidate.candidate_io
        relation, report = candidate.relation, outcome.report
    else:
        statement = code = explanation = ""
        candidate_io, relation, report = (), None, None
    return ScaffoldExample(
        id=id_factory(),
        task_id=task.id,
        statement=statement,
        code=code,
        explanation=explanation,
        candidate_io=candidate_io,
        relation=relation,
        report=report,
        review_status=ReviewStatus.NEEDS_REVIEW,
        provenance=Provenance(
            provider_id=getattr(provider, "id", "unknown"),
            attempts_used=options.max_attempts,
            created_at=clock(),
            records=tuple(records),
        ),
    )
