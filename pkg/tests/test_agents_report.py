"""Report and reflection parsing against the recorded worked example."""

from __future__ import annotations

import pytest

from ranguard import fixtures
from ranguard.agents.report import (
    ComplianceStatus,
    FeedbackParseError,
    IssueType,
    ReportParseError,
    parse_reflection,
    parse_report,
    render_markdown,
    resolve_violation_paths,
)
from ranguard.gnbconf import parse_config


class TestParseReport:
    def test_golden_assessment_response(self, golden_config, golden_corrected):
        report = parse_report(fixtures.golden_assessment_response())
        assert report.status is ComplianceStatus.NON_COMPLIANT
        assert len(report.violations) == 3
        hints = [v.config_path for v in report.violations]
        assert hints == ["ciphering_algorithms", "integrity_algorithms", "drb_integrity"]
        assert report.corrected_config == golden_corrected
        assert len(report.modifications) == 3
        assert len(report.impacts) == 3
        assert len(report.out_of_scope) == 3
        assert all(ref.filename for ref in report.spec_references)
        filenames = {ref.filename for ref in report.spec_references}
        assert "ts_133501v180900p.pdf" in filenames

    def test_golden_paths_resolve_inside_security(self, golden_config):
        doc = parse_config(golden_config)
        report = resolve_violation_paths(parse_report(fixtures.golden_assessment_response()), doc)
        assert report.violation_paths() == frozenset(
            {
                "security.ciphering_algorithms",
                "security.integrity_algorithms",
                "security.drb_integrity",
            }
        )

    def test_minimal_compliant_report(self):
        report = parse_report("Compliance Status: Compliant\n")
        assert report.status is ComplianceStatus.COMPLIANT
        assert report.violations == ()
        assert report.corrected_config is None

    def test_missing_status_line_rejected(self):
        with pytest.raises(ReportParseError):
            parse_report("Everything looks fine to me.\n")

    def test_non_compliant_without_fence_rejected(self):
        with pytest.raises(ReportParseError):
            parse_report("Compliance Status: Non-Compliant\nViolations Found\n1.Bad (`x`).\n")

    def test_unterminated_fence_rejected(self):
        text = (
            "Compliance Status: Non-Compliant\n"
            "```corrected\n"
            "a = 1;\n"
        )
        with pytest.raises(ReportParseError):
            parse_report(text)

    def test_compliant_with_corrected_block_rejected(self):
        text = "Compliance Status: Compliant\n```corrected\na = 1;\n```\n"
        with pytest.raises(ReportParseError):
            parse_report(text)

    def test_unparseable_corrected_config_rejected(self):
        text = "Compliance Status: Non-Compliant\n```corrected\na = {\n```\n"
        with pytest.raises(ReportParseError):
            parse_report(text)

    def test_interior_whitespace_of_corrected_block_untouched(self):
        body = "a  =   1;\n\n\n  b = 2;\n"
        text = f"Compliance Status: Non-Compliant\n```corrected\n{body}```\n"
        report = parse_report(text)
        assert report.corrected_config == body.encode("utf-8")

    def test_markdown_rendering_contains_status_and_sections(self):
        report = parse_report(fixtures.golden_assessment_response())
        markdown = render_markdown(report)
        assert "Compliance Status: Non-Compliant" in markdown
        assert "## Violations Found" in markdown
        assert "## Corrected Configuration" in markdown


class TestParseReflection:
    def test_golden_reflection_converges(self):
        feedback = parse_reflection(fixtures.golden_reflection_response())
        assert feedback.converged()
        assert feedback.issues == ()
        assert feedback.must_fix_summary == ()
        assert "correct" in feedback.overall_assessment.lower()

    def test_single_scope_error_not_converged(self):
        text = """
        {
          "OverallAssessment": "scope problem",
          "Issues": [
            {"id": "ISSUE-1", "type": "ScopeError", "description": "missing feature flagged", "required_action": "drop it"}
          ],
          "MustFixSummary": ["drop the missing-feature violation"]
        }
        """
        feedback = parse_reflection(text)
        assert not feedback.converged()
        assert feedback.issues[0].type is IssueType.SCOPE_ERROR
        assert feedback.must_fix_summary == ("drop the missing-feature violation",)

    def test_fenced_json_accepted(self):
        text = '```json\n{"OverallAssessment": "ok", "Issues": [], "MustFixSummary": []}\n```'
        assert parse_reflection(text).converged()

    def test_non_object_rejected(self):
        with pytest.raises(FeedbackParseError):
            parse_reflection("[1, 2, 3]")
        with pytest.raises(FeedbackParseError):
            parse_reflection("not json at all")

    def test_missing_keys_rejected(self):
        with pytest.raises(FeedbackParseError):
            parse_reflection('{"OverallAssessment": "x", "Issues": []}')

    def test_unknown_issue_type_maps_to_other_with_label_kept(self):
        text = """
        {"OverallAssessment": "x",
         "Issues": [{"id": "I1", "type": "WeirdNewType", "description": "d", "required_action": "a"}],
         "MustFixSummary": []}
        """
        feedback = parse_reflection(text)
        assert feedback.issues[0].type is IssueType.OTHER
        assert "WeirdNewType" in feedback.issues[0].description

    def test_duplicate_issue_ids_rejected(self):
        text = """
        {"OverallAssessment": "x",
         "Issues": [
           {"id": "I1", "type": "Other", "description": "d"},
           {"id": "I1", "type": "Other", "description": "e"}
         ],
         "MustFixSummary": []}
        """
        with pytest.raises(FeedbackParseError):
            parse_reflection(text)

    def test_round_trip_to_schema_dict(self):
        feedback = parse_reflection(fixtures.golden_reflection_response())
        data = feedback.to_dict()
        assert set(data) == {"OverallAssessment", "Issues", "MustFixSummary"}
