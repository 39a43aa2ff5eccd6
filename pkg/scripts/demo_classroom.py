#!/usr/bin/env python3
"""End-to-end classroom walkthrough against the stub provider.

Ingests the bundled three-task pack, plays one student session (run, submit,
scaffold request), pushes the scaffold through instructor review, and dumps
the resulting event log. Everything runs locally; no provider credentials
needed.
"""

from __future__ import annotations

from pathlib import Path

REPO = Path(__file__).resolve().parent.parent

from codescaffold.config import Principal, ProviderConfig, ServiceConfig
from codescaffold.providers import StubProvider
from codescaffold.service import PendingReview, ScaffoldService

PACK = REPO / "tests" / "fixtures" / "packs" / "intro_pack.json"
STUB_DOC = REPO / "tests" / "fixtures" / "provider_docs" / "far_valid.md"

STUDENT_SOLUTION = """n = int(input())
total = 0
for i in range(1, n + 1):
    total = total + i
print(total)
"""


def main() -> int:
    config = ServiceConfig(course_mode="instructor_gated",
                           provider=ProviderConfig(mode="stub"))
    service = ScaffoldService(
        config=config,
        provider=StubProvider.from_files([STUB_DOC], provider_id="demo-stub"),
    )

    print("== ingest ==")
    for report in service.ingest_pack(PACK.read_text(encoding="utf-8")):
        print(f"  task {report['task_id']}: usable={report['usable']} "
              f"verdicts={report['verdicts']}")

    student = "alice"
    print("\n== student session (t-sum) ==")
    run = service.handle_run(student, "t-sum", STUDENT_SOLUTION, mode="sample")
    print(f"  run: all_pass={run.all_pass}")
    submit = service.handle_submit(student, "t-sum", STUDENT_SOLUTION)
    print(f"  submit: all_pass={submit.all_pass} over {len(submit.verdicts)} examples")

    outcome = service.handle_scaffold_request(student, "t-sum")
    assert isinstance(outcome, PendingReview)
    print(f"  scaffold request: pending review (id={outcome.scaffold_id})")

    print("\n== instructor review ==")
    queue = service.review_queue()
    print(f"  queue size: {len(queue)}")
    decided = service.decide_review("prof", outcome.scaffold_id, "Approved")
    print(f"  decision: {decided.review_status.value}")

    grant = service.get_scaffold(Principal(id=student, role="student"),
                                 outcome.scaffold_id)
    print(f"\n== scaffold shown to {student} (fading={grant.fading_level}) ==")
    print("  statement:", grant.scaffold.statement[:72], "...")
    print("  quadrant:", grant.scaffold.report.quadrant.value,
          f"(structural={grant.scaffold.report.structural_score:.2f},",
          f"surface={grant.scaffold.report.surface_score:.2f})")
    print("  relation summary:", grant.scaffold.relation.summary)

    print("\n== event log ==")
    print(service.export_events(), end="")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
