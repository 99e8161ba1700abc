"""Parser, profile extraction, edit application, diffing."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ranguard import fixtures
from ranguard.agents.report import ComplianceReport, ComplianceStatus, Violation
from ranguard.gnbconf import (
    ConfigEdit,
    NodeKind,
    ParseError,
    PathNotFound,
    StaleEdit,
    apply_edits,
    diff_configs,
    extract_security_profile,
    parse_config,
    verify_minimal_change,
)


def make_report(status: ComplianceStatus, paths: tuple[str, ...]) -> ComplianceReport:
    return ComplianceReport(
        status=status,
        violations=tuple(Violation(summary=p, config_path=p) for p in paths),
        spec_references=(),
        modifications=(),
        impacts=(),
        out_of_scope=(),
        corrected_config=None,
        raw_text="",
    )


class TestParse:
    def test_golden_top_level_names(self, golden_config):
        doc = parse_config(golden_config)
        assert [n.name for n in doc.root] == [
            "Active_gNBs",
            "Asn1_verbosity",
            "gNBs",
            "security",
            "log_config",
        ]

    def test_empty_text_round_trips(self):
        doc = parse_config(b"")
        assert doc.root == []
        assert doc.serialize() == b""

    def test_round_trip_over_fixture_corpus(self, fixture_configs):
        for name, text in fixture_configs:
            raw = text.encode("utf-8")
            assert parse_config(raw).serialize() == raw, name

    def test_span_invariants(self, golden_config):
        doc = parse_config(golden_config)
        for path, node in doc.walk():
            fs, vs = node.full_span, node.value_span
            assert 0 <= fs[0] <= vs[0] <= vs[1] <= fs[1] <= len(golden_config), path
            if node.kind is NodeKind.SCALAR:
                assert golden_config[vs[0] : vs[1]].decode("utf-8") == node.scalar_value

    def test_sibling_spans_disjoint_and_ordered(self, golden_config):
        doc = parse_config(golden_config)

        def check(nodes):
            previous_end = -1
            for node in nodes:
                assert node.full_span[0] >= previous_end
                previous_end = node.full_span[1]
                check(node.children)

        check(doc.root)

    def test_comments_attach_to_following_setting(self, golden_config):
        doc = parse_config(golden_config)
        asn = doc.find("Asn1_verbosity")
        assert asn.comments == ("# Asn1_verbosity, choice in: none, info, annoying",)

    def test_nested_paths_resolve(self, golden_config):
        doc = parse_config(golden_config)
        assert doc.find("gNBs.0.SCTP.SCTP_INSTREAMS").scalar_value == "2"
        assert doc.find("gNBs.0.plmn_list.0.mcc").scalar_value == "208"
        assert doc.find("security.ciphering_algorithms").kind is NodeKind.LIST

    def test_unbalanced_group_raises_with_position(self):
        with pytest.raises(ParseError) as excinfo:
            parse_config(b"a = {\n  b = 1;\n")
        assert excinfo.value.line >= 1

    def test_unterminated_string_raises(self):
        with pytest.raises(ParseError):
            parse_config(b'a = "oops\n')

    def test_missing_terminator_between_settings_raises(self):
        with pytest.raises(ParseError):
            parse_config(b"a = 1 b = 2;\n")

    def test_unbalanced_list_raises(self):
        with pytest.raises(ParseError):
            parse_config(b'a = ( "x", ;\n')

    def test_unknown_construct_preserved_as_opaque(self):
        raw = b'@include "other.conf";\na = 1;\n'
        doc = parse_config(raw)
        assert doc.serialize() == raw
        assert doc.root[0].opaque
        assert doc.root[1].name == "a"

    def test_crlf_newline_style_detected(self):
        doc = parse_config(b'a = "x";\r\nb = 2;\r\n')
        assert doc.newline_style.value == "\r\n"
        assert doc.serialize() == b'a = "x";\r\nb = 2;\r\n'

    def test_invalid_utf8_rejected(self):
        with pytest.raises(ParseError):
            parse_config(b"a = 1;\n\xff\xfe")


# A tiny random generator of grammatically valid configs, for the
# round-trip property beyond the fixture corpus.

_names = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,8}", fullmatch=True)
_scalars = st.one_of(
    st.integers(-1000, 10**9).map(str),
    st.from_regex(r"0x[0-9a-f]{1,6}", fullmatch=True),
    st.from_regex(r"[A-Za-z0-9_.]{1,12}", fullmatch=True).map(lambda s: f'"{s}"'),
)


def _render(name: str, value: str, depth: int) -> str:
    indent = "  " * depth
    return f"{indent}{name} = {value};"


_settings = st.tuples(_names, _scalars).map(lambda t: _render(*t, 0))


@st.composite
def config_texts(draw) -> str:
    lines: list[str] = []
    for _ in range(draw(st.integers(0, 6))):
        kind = draw(st.integers(0, 3))
        name = draw(_names)
        if kind == 0:
            lines.append(_render(name, draw(_scalars), 0))
        elif kind == 1:
            values = draw(st.lists(_scalars, min_size=0, max_size=4))
            lines.append(f"{name} = ( {', '.join(values)} );")
        elif kind == 2:
            lines.append(f"{name} :")
            lines.append("{")
            for _ in range(draw(st.integers(0, 3))):
                lines.append(_render(draw(_names), draw(_scalars), 1))
            lines.append("};")
        else:
            lines.append(f"# {draw(st.from_regex(r'[ -~]{0,30}', fullmatch=True))}")
    return "\n".join(lines) + ("\n" if lines else "")


@given(config_texts())
@settings(max_examples=80, deadline=None)
def test_round_trip_on_generated_configs(text: str):
    raw = text.encode("utf-8")
    assert parse_config(raw).serialize() == raw


class TestSecurityProfile:
    def test_golden_profile(self, golden_config):
        profile = extract_security_profile(parse_config(golden_config))
        assert profile.ciphering_algorithms == ("nea0",)
        assert profile.integrity_algorithms == ("nia2", "nia0")
        assert profile.drb_ciphering == "yes"
        assert profile.drb_integrity == "no"
        assert profile.unrecognized == ()
        for name in ("ciphering_algorithms", "integrity_algorithms", "drb_ciphering", "drb_integrity"):
            start, end = profile.source_spans[name]
            assert 0 <= start < end <= len(golden_config)

    def test_corrected_profile(self, golden_corrected):
        profile = extract_security_profile(parse_config(golden_corrected))
        assert profile.ciphering_algorithms == ("nea2",)
        assert profile.integrity_algorithms == ("nia2",)
        assert profile.drb_ciphering == "yes"
        assert profile.drb_integrity == "yes"

    def test_missing_security_group_yields_empty_profile(self):
        profile = extract_security_profile(parse_config(b"a = 1;\n"))
        assert profile.empty
        assert profile.source_spans == {}

    def test_unknown_algorithm_names_flagged_but_preserved(self):
        raw = b'security = {\n  ciphering_algorithms = ( "nea2", "snow5g" );\n};\n'
        profile = extract_security_profile(parse_config(raw))
        assert profile.ciphering_algorithms == ("nea2", "snow5g")
        assert profile.unrecognized == ("snow5g",)


GOLDEN_EDITS = [
    ConfigEdit("security.ciphering_algorithms", '( "nea0" )', '( "nea2" )'),
    ConfigEdit("security.integrity_algorithms", '( "nia2", "nia0" )', '( "nia2" )'),
    ConfigEdit("security.drb_integrity", '"no"', '"yes"'),
]


class TestApplyEdits:
    def test_golden_edits_reach_corrected_security_values(self, golden_config, golden_corrected):
        doc = parse_config(golden_config)
        edited = apply_edits(doc, GOLDEN_EDITS)
        profile = extract_security_profile(parse_config(edited))
        expected = extract_security_profile(parse_config(golden_corrected))
        assert profile.ciphering_algorithms == expected.ciphering_algorithms
        assert profile.integrity_algorithms == expected.integrity_algorithms
        assert profile.drb_ciphering == expected.drb_ciphering
        assert profile.drb_integrity == expected.drb_integrity

    def test_empty_edit_list_is_identity(self, golden_config):
        assert apply_edits(parse_config(golden_config), []) == golden_config

    def test_identity_edits_are_byte_identical(self, golden_config):
        doc = parse_config(golden_config)
        profile = extract_security_profile(doc)
        edits = []
        for name, (start, end) in profile.source_spans.items():
            value = golden_config[start:end].decode("utf-8")
            edits.append(ConfigEdit(f"security.{name}", value, value))
        assert apply_edits(doc, edits) == golden_config

    def test_bytes_outside_edited_spans_unchanged(self):
        raw = b'a = 1;\nb = "two";\nc = 3;\n'
        doc = parse_config(raw)
        edited = apply_edits(doc, [ConfigEdit("b", '"two"', '"2"')])
        assert edited == b'a = 1;\nb = "2";\nc = 3;\n'
        node = doc.find("b")
        start, end = node.value_span
        assert edited[:start] == raw[:start]
        assert edited[start + len('"2"') :] == raw[end:]

    def test_inserted_comment_lines_go_directly_above(self):
        raw = b"security = {\n  drb_integrity = \"no\";\n};\n"
        doc = parse_config(raw)
        edited = apply_edits(
            doc,
            [ConfigEdit("security.drb_integrity", '"no"', '"yes"', ("# integrity required",))],
        )
        assert edited == b"security = {\n  # integrity required\n  drb_integrity = \"yes\";\n};\n"

    def test_stale_edit_rejected(self, golden_config):
        doc = parse_config(golden_config)
        with pytest.raises(StaleEdit):
            apply_edits(doc, [ConfigEdit("security.drb_integrity", '"yes"', '"no"')])

    def test_unknown_path_rejected(self, golden_config):
        doc = parse_config(golden_config)
        with pytest.raises(PathNotFound):
            apply_edits(doc, [ConfigEdit("security.nonexistent", "x", "y")])

    def test_single_scalar_edit_changes_exactly_one_line(self):
        raw = b"a = 1;\nb = 2;\nc = 3;\n"
        edited = apply_edits(parse_config(raw), [ConfigEdit("b", "2", "20")])
        diff = diff_configs(raw, edited)
        assert len(diff.changed_regions) == 1
        (orig_range, _), = diff.changed_regions
        assert raw[orig_range[0] : orig_range[1]] == b"b = 2;\n"


class TestDiff:
    def test_golden_diff_touches_only_security(self, golden_config, golden_corrected):
        diff = diff_configs(golden_config, golden_corrected)
        assert diff.touched_group_paths == frozenset({"security"})

    def test_self_diff_is_empty(self, golden_config):
        diff = diff_configs(golden_config, golden_config)
        assert diff.is_empty
        assert diff.touched_group_paths == frozenset()

    def test_randomized_single_line_mutation_reports_that_line(self, golden_config):
        rng = random.Random(20260810)
        lines = golden_config.decode("utf-8").splitlines(keepends=True)
        scalar_lines = [
            i for i, line in enumerate(lines) if "=" in line and line.rstrip().endswith(";") and '"' in line
        ]
        for _ in range(25):
            index = rng.choice(scalar_lines)
            mutated = list(lines)
            mutated[index] = mutated[index].replace('"', '"x', 1).replace('x', '', 1) or mutated[index]
            mutated[index] = lines[index].replace(';', '  ;', 1)
            edited = "".join(mutated).encode("utf-8")
            diff = diff_configs(golden_config, edited)
            # brute-force oracle: compare line by line
            changed = [
                i
                for i, (a, b) in enumerate(zip(lines, mutated))
                if a != b
            ]
            assert changed == [index]
            assert len(diff.changed_regions) == 1
            (orig_range, _), = diff.changed_regions
            offset = sum(len(l) for l in lines[:index])
            assert orig_range == (offset, offset + len(lines[index]))

    def test_change_in_log_config_attributed_to_log_config(self, golden_config):
        edited = golden_config.replace(b'rlc_log_level    ="debug";', b'rlc_log_level    ="info";')
        diff = diff_configs(golden_config, edited)
        assert diff.touched_group_paths == frozenset({"log_config"})

    def test_top_level_scalar_attributed_to_itself(self, golden_config):
        edited = golden_config.replace(b'Asn1_verbosity = "none";', b'Asn1_verbosity = "info";')
        diff = diff_configs(golden_config, edited)
        assert diff.touched_group_paths == frozenset({"Asn1_verbosity"})

    def test_parse_error_propagates(self, golden_config):
        with pytest.raises(ParseError):
            diff_configs(golden_config, b"a = {\n")


class TestVerifyMinimalChange:
    def test_golden_diff_and_report_pass(self, golden_config, golden_corrected):
        diff = diff_configs(golden_config, golden_corrected)
        report = make_report(
            ComplianceStatus.NON_COMPLIANT,
            (
                "security.ciphering_algorithms",
                "security.integrity_algorithms",
                "security.drb_integrity",
            ),
        )
        verdict = verify_minimal_change(diff, report)
        assert verdict.passed
        assert verdict.offending_paths == ()

    def test_empty_diff_with_compliant_report_passes(self, golden_config):
        diff = diff_configs(golden_config, golden_config)
        verdict = verify_minimal_change(diff, make_report(ComplianceStatus.COMPLIANT, ()))
        assert verdict.passed

    def test_touching_log_config_with_security_violations_fails(self, golden_config):
        edited = golden_config.replace(b'rlc_log_level    ="debug";', b'rlc_log_level    ="info";')
        diff = diff_configs(golden_config, edited)
        report = make_report(ComplianceStatus.NON_COMPLIANT, ("security.ciphering_algorithms",))
        verdict = verify_minimal_change(diff, report)
        assert not verdict.passed
        assert verdict.offending_paths == ("log_config",)
