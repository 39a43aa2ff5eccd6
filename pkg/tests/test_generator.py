from __future__ import annotations

import dataclasses

import pytest

from codescaffold.analysis import Quadrant
from codescaffold.generator import (
    AttemptContext,
    DecodeFailure,
    FAR_CONSTRAINT,
    GenerationOptions,
    NearNotAllowed,
    RelationEntry,
    RelationMap,
    ReviewStatus,
    ScaffoldExample,
    build_prompt,
    build_relation_explanation,
    decode_candidate_document,
    generate_scaffold,
    synthesize_relation_map,
    validate_candidate,
)
from codescaffold.providers import ProviderUnavailable, StubProvider, TRANSPORT_FAILURE
from codescaffold.runner import GradeReport, Verdict, VerdictLabel
from codescaffold.taskbank import DisclosurePolicy

from conftest import provider_doc


@pytest.fixture()
def sum_task(ingested_bank):
    return ingested_bank.get_task("t-sum")


def fixed_generate(task, options, provider, **kwargs):
    kwargs.setdefault("id_factory", lambda: "sc-fixed")
    kwargs.setdefault("clock", lambda: 123.0)
    return generate_scaffold(task, options, provider, **kwargs)


class TestDecode:
    def test_sectioned_document(self):
        candidate = decode_candidate_document(provider_doc("far_valid.md"))
        assert candidate.statement.startswith("A cyclist")
        assert "kms = kms + ride" in candidate.code
        assert "```" not in candidate.code
        assert len(candidate.candidate_io) == 2
        assert candidate.candidate_io[0].input == "4"
        assert candidate.relation is not None
        assert len(candidate.relation.entries) == 3
        assert candidate.relation.summary.startswith("Both accumulate")

    def test_json_document(self):
        candidate = decode_candidate_document(provider_doc("far_valid.json"))
        assert candidate.statement.startswith("A cyclist")
        assert candidate.relation is not None
        assert candidate.relation.is_well_formed()

    def test_missing_section_fails(self):
        with pytest.raises(DecodeFailure):
            decode_candidate_document("# statement\nonly a statement\n")

    def test_empty_io_pairs_fail(self):
        doc = "# statement\ns\n# code\nx = 1\n# explanation\ne\n# io_pairs\n[]\n"
        with pytest.raises(DecodeFailure):
            decode_candidate_document(doc)

    def test_bad_io_pairs_json_fails(self):
        doc = "# statement\ns\n# code\nx = 1\n# explanation\ne\n# io_pairs\nnot json\n"
        with pytest.raises(DecodeFailure):
            decode_candidate_document(doc)

    def test_missing_relation_is_tolerated(self):
        candidate = decode_candidate_document(provider_doc("far_no_relation.md"))
        assert candidate.relation is None

    def test_unfenced_code_accepted(self):
        doc = ("# statement\ns\n# code\nx = 1\nprint(x)\n# explanation\ne\n"
               '# io_pairs\n[{"input": "", "expected_output": "1"}]\n')
        candidate = decode_candidate_document(doc)
        assert candidate.code.strip() == "x = 1\nprint(x)"

    def test_heading_style_tolerance(self):
        doc = ("statement:\ns\n## code\nx = 1\nEXPLANATION\ne\n"
               '# io_pairs\n[{"input": "", "expected_output": ""}]\n')
        candidate = decode_candidate_document(doc)
        assert candidate.statement == "s"
        assert candidate.explanation == "e"


class TestBuildPrompt:
    def test_far_prompt_contains_context_constraint(self, sum_task):
        prompt = build_prompt(sum_task, GenerationOptions(closeness="far"))
        assert FAR_CONSTRAINT in prompt
        assert sum_task.statement in prompt
        assert "total = total + i" in prompt
        assert "accumulate-over-loop" in prompt

    def test_attempt_and_verdicts_included(self, sum_task):
        report = GradeReport(verdicts=(Verdict(VerdictLabel.TIMEOUT),), all_pass=False)
        options = GenerationOptions(
            attempt=AttemptContext(student_code="while True:\n    n = 1", grade_report=report)
        )
        prompt = build_prompt(sum_task, options)
        assert "while True:" in prompt
        assert "Timeout" in prompt

    def test_prior_failures_become_corrections(self, sum_task):
        from codescaffold.generator import AttemptRecord

        record = AttemptRecord(1, "quadrant", "surface similarity 0.62 is too high")
        prompt = build_prompt(sum_task, GenerationOptions(), [record])
        assert "corrections from earlier rejected attempts" in prompt
        assert "surface similarity 0.62 is too high" in prompt


class TestValidateCandidate:
    def test_far_fixture_passes(self, sum_task):
        candidate = decode_candidate_document(provider_doc("far_valid.md"))
        outcome = validate_candidate(sum_task, candidate, GenerationOptions())
        assert outcome.ok
        assert outcome.report.quadrant is Quadrant.FAR
        assert outcome.relation is not None

    def test_canonical_clone_fails_quadrant_near(self, sum_task):
        from codescaffold.generator import ScaffoldCandidate
        from codescaffold.runner import IOExample

        clone = ScaffoldCandidate(
            statement=sum_task.statement,
            code=sum_task.canonical_solution,
            explanation="the same solution",
            candidate_io=(IOExample("5", "15"),),
        )
        outcome = validate_candidate(sum_task, clone, GenerationOptions())
        assert not outcome.ok
        assert outcome.failed_check == "quadrant"
        assert outcome.report.quadrant is Quadrant.NEAR

    def test_bad_io_fails_self_grade_with_verdict(self, sum_task):
        candidate = decode_candidate_document(provider_doc("bad_io.md"))
        outcome = validate_candidate(sum_task, candidate, GenerationOptions())
        assert not outcome.ok
        assert outcome.failed_check == "self_grade"
        assert "WrongOutput" in outcome.details["verdicts"]

    def test_parse_failure_reported_first(self, sum_task):
        candidate = decode_candidate_document(provider_doc("invalid_parse.md"))
        outcome = validate_candidate(sum_task, candidate, GenerationOptions())
        assert not outcome.ok
        assert outcome.failed_check == "parse"
        assert "line" in outcome.reason


class TestGenerateScaffold:
    def test_valid_far_first_attempt(self, sum_task):
        stub = StubProvider([provider_doc("far_valid.md")])
        scaffold = fixed_generate(sum_task, GenerationOptions(), stub)
        assert scaffold.review_status is ReviewStatus.AUTO_ACCEPTED
        assert scaffold.provenance.attempts_used == 1
        assert scaffold.report.quadrant is Quadrant.FAR
        assert scaffold.relation.is_well_formed()

    def test_near_then_far_adds_corrective_line(self, sum_task):
        stub = StubProvider([provider_doc("near_candidate.md"),
                             provider_doc("far_valid.md")])
        scaffold = fixed_generate(sum_task, GenerationOptions(), stub)
        assert scaffold.review_status is ReviewStatus.AUTO_ACCEPTED
        assert scaffold.provenance.attempts_used == 2
        second_prompt = stub.prompts[1]
        assert "corrections from earlier rejected attempts" in second_prompt
        assert "surface similarity" in second_prompt
        # target {n, total, i} and the near candidate {n, acc, i} share {i, n}
        assert "shared identifiers: i, n" in second_prompt

    def test_three_parse_failures_exhaust_to_review(self, sum_task):
        stub = StubProvider([provider_doc("invalid_parse.md")] * 3)
        scaffold = fixed_generate(sum_task, GenerationOptions(max_attempts=3), stub)
        assert scaffold.review_status is ReviewStatus.NEEDS_REVIEW
        assert scaffold.provenance.attempts_used == 3
        assert len(scaffold.provenance.records) == 3
        assert all(r.outcome == "parse" for r in scaffold.provenance.records)
        assert scaffold.statement.startswith("A shop")  # best available candidate kept

    def test_all_transport_failures_raise(self, sum_task):
        stub = StubProvider([TRANSPORT_FAILURE] * 3)
        with pytest.raises(ProviderUnavailable):
            fixed_generate(sum_task, GenerationOptions(max_attempts=3), stub)

    def test_mixed_failures_do_not_raise(self, sum_task):
        stub = StubProvider([TRANSPORT_FAILURE, provider_doc("invalid_parse.md"),
                             TRANSPORT_FAILURE])
        scaffold = fixed_generate(sum_task, GenerationOptions(max_attempts=3), stub)
        assert scaffold.review_status is ReviewStatus.NEEDS_REVIEW
        outcomes = [r.outcome for r in scaffold.provenance.records]
        assert outcomes == ["transport_error", "parse", "transport_error"]

    def test_bounded_provider_calls(self, sum_task):
        stub = StubProvider([provider_doc("invalid_parse.md")] * 10)
        fixed_generate(sum_task, GenerationOptions(max_attempts=2), stub)
        assert len(stub.prompts) == 2

    def test_gated_mode_forces_review(self, sum_task):
        stub = StubProvider([provider_doc("far_valid.md")])
        scaffold = fixed_generate(sum_task, GenerationOptions(), stub, auto_accept=False)
        assert scaffold.review_status is ReviewStatus.NEEDS_REVIEW
        assert scaffold.report.quadrant is Quadrant.FAR

    def test_near_requires_policy_permission(self, sum_task):
        stub = StubProvider([provider_doc("near_candidate.md")])
        with pytest.raises(NearNotAllowed):
            fixed_generate(sum_task, GenerationOptions(closeness="near"), stub)

    def test_near_allowed_accepts_near_candidate(self, sum_task):
        allowing = dataclasses.replace(
            sum_task, disclosure=DisclosurePolicy(delay_s=0, quota=3, allow_near=True)
        )
        stub = StubProvider([provider_doc("near_candidate.md")])
        scaffold = fixed_generate(allowing, GenerationOptions(closeness="near"), stub)
        assert scaffold.review_status is ReviewStatus.AUTO_ACCEPTED
        assert scaffold.report.quadrant is Quadrant.NEAR

    def test_deterministic_under_stub(self, sum_task):
        def run():
            stub = StubProvider([provider_doc("near_candidate.md"),
                                 provider_doc("far_valid.md")])
            return fixed_generate(sum_task, GenerationOptions(), stub)

        assert run() == run()

    def test_gate_soundness_across_scripts(self, sum_task):
        scripts = [
            [provider_doc("far_valid.md")],
            [provider_doc("near_candidate.md"), provider_doc("far_valid.md")],
            [provider_doc("invalid_parse.md")] * 3,
            [provider_doc("bad_io.md"), provider_doc("far_valid.md")],
            [provider_doc("far_no_relation.md")],
        ]
        for script in scripts:
            stub = StubProvider(script)
            scaffold = fixed_generate(sum_task, GenerationOptions(), stub)
            if scaffold.review_status is ReviewStatus.AUTO_ACCEPTED:
                assert scaffold.report.quadrant is Quadrant.FAR
                fresh = validate_candidate(
                    sum_task,
                    decode_candidate_document(script[scaffold.provenance.attempts_used - 1]),
                    GenerationOptions(),
                )
                assert fresh.ok

    def test_every_attempt_leaves_a_record(self, sum_task):
        stub = StubProvider([provider_doc("bad_io.md"), provider_doc("far_valid.md")])
        scaffold = fixed_generate(sum_task, GenerationOptions(), stub)
        assert [r.index for r in scaffold.provenance.records] == [1, 2]
        assert all(r.reason for r in scaffold.provenance.records)
        accepted = scaffold.provenance.records[-1]
        assert accepted.outcome == "accepted"
        assert accepted.report is not None

    def test_round_trip_serialization(self, sum_task):
        stub = StubProvider([provider_doc("far_valid.md")])
        scaffold = fixed_generate(sum_task, GenerationOptions(), stub)
        assert ScaffoldExample.from_dict(scaffold.to_dict()) == scaffold


class TestRelationExplanation:
    def test_provider_map_returned_verbatim(self, sum_task):
        stub = StubProvider([provider_doc("far_valid.md")])
        scaffold = fixed_generate(sum_task, GenerationOptions(), stub)
        relation = build_relation_explanation(sum_task, scaffold)
        assert relation == scaffold.relation
        assert len(relation.entries) == 3

    def test_malformed_map_synthesized(self, sum_task):
        broken = RelationMap(
            entries=(RelationEntry("the total", "", note="missing side"),),
            summary="",
        )
        stub = StubProvider([provider_doc("far_valid.md")])
        scaffold = fixed_generate(sum_task, GenerationOptions(), stub)
        scaffold = dataclasses.replace(scaffold, relation=broken)
        relation = build_relation_explanation(sum_task, scaffold)
        assert relation.is_well_formed()
        assert len(relation.entries) >= 2

    def test_missing_map_synthesized_during_generation(self, sum_task):
        stub = StubProvider([provider_doc("far_no_relation.md")])
        scaffold = fixed_generate(sum_task, GenerationOptions(), stub)
        assert scaffold.review_status is ReviewStatus.AUTO_ACCEPTED
        assert scaffold.relation.is_well_formed()

    def test_tag_appears_in_summary(self, sum_task):
        tagged = dataclasses.replace(sum_task, reasoning_tags=("nested-iteration",))
        relation = synthesize_relation_map(tagged, "x = 1\nprint(x)")
        assert "nested iteration" in relation.summary

    def test_synthesized_entries_reflect_shared_structure(self, sum_task):
        candidate = decode_candidate_document(provider_doc("far_no_relation.md"))
        relation = synthesize_relation_map(sum_task, candidate.code)
        joined = " ".join(e.target_element for e in relation.entries)
        assert "loop" in joined
