from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES
from tunesmith.ingest import (
    CodeUnit,
    ExtractError,
    IngestReport,
    corpus_stats,
    extract_code_units,
    extract_java_units,
    extract_python_units,
    ingest_documents,
    parse_markdown,
    parse_plain_text,
)

GUIDE = (FIXTURES / "docs" / "userguide.md").read_text(encoding="utf-8")

EXPECTED_PATHS = [
    [(1, "Getting Started")],
    [(1, "Getting Started"), (2, "Installation")],
    [(1, "Getting Started"), (2, "First Project")],
    [(1, "Data Pipelines")],
    [(1, "Data Pipelines"), (2, "Connecting Sources")],
    [(1, "Data Pipelines"), (2, "Scheduling Runs")],
    [(1, "Model Monitoring")],
    [(1, "Model Monitoring"), (2, "Alert Policies")],
]


def test_userguide_heading_paths():
    doc = parse_markdown(GUIDE, doc_id="userguide.md")
    assert [b.heading_path for b in doc.blocks] == EXPECTED_PATHS


def test_blocks_preserve_every_nonblank_body_line_once():
    doc = parse_markdown(GUIDE, doc_id="userguide.md")
    original = [
        line
        for line in GUIDE.split("\n")
        if line.strip() and not line.lstrip().startswith("#")
    ]
    reconstructed = [
        line for block in doc.blocks for line in block.text.split("\n") if line.strip()
    ]
    assert reconstructed == original


def test_block_text_has_no_heading_markers():
    doc = parse_markdown(GUIDE, doc_id="userguide.md")
    for block in doc.blocks:
        for line in block.text.split("\n"):
            assert not line.startswith("#")
        assert block.text.strip()


def test_no_headings_yields_single_block():
    doc = parse_markdown("just a paragraph\n\nand another", doc_id="d")
    assert len(doc.blocks) == 1
    assert doc.blocks[0].heading_path == []
    assert doc.blocks[0].text == "just a paragraph\n\nand another"


def test_empty_text_yields_no_blocks():
    assert parse_markdown("", doc_id="d").blocks == []
    assert parse_markdown("# Title only\n## Sub\n", doc_id="d").blocks == []


def test_sibling_heading_replaces_previous():
    doc = parse_markdown("# A\n\nx\n\n## B\n\ny\n\n## C\n\nz\n", doc_id="d")
    assert [b.heading_path for b in doc.blocks] == [
        [(1, "A")],
        [(1, "A"), (2, "B")],
        [(1, "A"), (2, "C")],
    ]


def test_level_jump_keeps_strictly_increasing_levels():
    doc = parse_markdown("# A\n\n### Deep\n\nx\n\n## B\n\ny\n", doc_id="d")
    assert doc.blocks[0].heading_path == [(1, "A"), (3, "Deep")]
    assert doc.blocks[1].heading_path == [(1, "A"), (2, "B")]
    for block in doc.blocks:
        levels = [lvl for lvl, _ in block.heading_path]
        assert levels == sorted(levels) and len(set(levels)) == len(levels)


def test_plain_text_single_block():
    doc = parse_plain_text("line one\nline two\n", doc_id="notes.txt")
    assert len(doc.blocks) == 1
    assert doc.blocks[0].heading_path == []


def test_ingest_documents_orders_lexicographically(tmp_path):
    (tmp_path / "b.md").write_text("# B\n\ntext\n", encoding="utf-8")
    (tmp_path / "a.txt").write_text("alpha\n", encoding="utf-8")
    (tmp_path / ".hidden.md").write_text("# H\n\nx\n", encoding="utf-8")
    docs = ingest_documents(tmp_path)
    assert [d.doc_id for d in docs] == ["a.txt", "b.md"]


@given(st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=300))
@settings(max_examples=150, deadline=None)
def test_parse_markdown_never_loses_body_lines(text):
    doc = parse_markdown(text, doc_id="prop")
    original = [
        line
        for line in text.split("\n")
        if line.strip() and HEADING_FILTER.match(line) is None
    ]
    reconstructed = [
        line for block in doc.blocks for line in block.text.split("\n") if line.strip()
    ]
    assert reconstructed == original


import re  # noqa: E402

HEADING_FILTER = re.compile(r"^#{1,6}\s+")


# ── Java ─────────────────────────────────────────────────────────────────────

JAVA_SRC = (FIXTURES / "code" / "src" / "TestCaseStore.java").read_text(encoding="utf-8")


def test_java_unit_names_and_spans():
    units = extract_java_units(JAVA_SRC, "src/TestCaseStore.java")
    by_name = {u.qualified_name: u for u in units}
    assert set(by_name) == {
        "TestCaseStore.getConnection",
        "TestCaseStore.getTcById",
        "TestCaseStore.close",
    }
    assert by_name["TestCaseStore.getConnection"].line_span == (18, 25)
    assert by_name["TestCaseStore.getTcById"].line_span == (29, 40)
    assert by_name["TestCaseStore.close"].line_span == (45, 52)


def test_java_body_is_verbatim_slice():
    units = extract_java_units(JAVA_SRC, "src/TestCaseStore.java")
    lines = JAVA_SRC.split("\n")
    for unit in units:
        start, end = unit.line_span
        assert unit.body == "\n".join(lines[start - 1 : end])


def test_java_doc_comment_extracted():
    units = {u.qualified_name: u for u in extract_java_units(JAVA_SRC, "f")}
    doc = units["TestCaseStore.getConnection"].docstring
    assert doc.startswith("Opens a pooled connection")
    assert units["TestCaseStore.close"].docstring == (
        "Commits pending work and releases the connection."
    )


def test_java_leading_comments_extracted():
    units = {u.qualified_name: u for u in extract_java_units(JAVA_SRC, "f")}
    comments = units["TestCaseStore.getTcById"].leading_comments
    assert comments == (
        "Looks up a single test case row by primary key.\n"
        "Returns null when the id is unknown rather than throwing."
    )
    assert units["TestCaseStore.getTcById"].docstring == ""


def test_java_signature_text():
    units = {u.qualified_name: u for u in extract_java_units(JAVA_SRC, "f")}
    assert units["TestCaseStore.getConnection"].signature == (
        "public Connection getConnection() throws SQLException"
    )


def test_java_spans_do_not_overlap():
    units = extract_java_units(JAVA_SRC, "f")
    spans = sorted(u.line_span for u in units)
    for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
        assert e1 < s2


def test_java_braces_inside_strings_do_not_confuse_scan():
    src = (
        "public class S {\n"
        '    public String brace() { return "{{}"; }\n'
        "}\n"
    )
    units = extract_java_units(src, "f")
    assert [u.qualified_name for u in units] == ["S.brace"]


def test_java_unbalanced_braces_raise():
    with pytest.raises(ExtractError, match="unbalanced"):
        extract_java_units("public class X {\n  public void f() {\n}\n", "f")


def test_java_abstract_signature_is_not_a_unit():
    src = "public interface I {\n    int size();\n    default int two() { return 2; }\n}\n"
    units = extract_java_units(src, "f")
    assert [u.qualified_name for u in units] == ["I.two"]


def test_java_inner_class_methods_stay_in_parent():
    src = (
        "public class Outer {\n"
        "    public int top() { return 1; }\n"
        "    static class Inner {\n"
        "        int hidden() { return 2; }\n"
        "    }\n"
        "}\n"
    )
    units = extract_java_units(src, "f")
    assert [u.qualified_name for u in units] == ["Outer.top"]


def test_java_constructor_extracted():
    src = "public class Box {\n    public Box(int size) {\n        this.size = size;\n    }\n}\n"
    units = extract_java_units(src, "f")
    assert [u.qualified_name for u in units] == ["Box.Box"]


# ── Python ───────────────────────────────────────────────────────────────────

PY_SRC = (FIXTURES / "code" / "src" / "metrics.py").read_text(encoding="utf-8")


def test_python_unit_names_and_spans():
    units = extract_python_units(PY_SRC, "src/metrics.py")
    by_name = {u.qualified_name: u for u in units}
    assert set(by_name) == {
        "add",
        "clamp",
        "make_counter",
        "RollingWindow.__init__",
        "RollingWindow.push",
        "RollingWindow.mean",
    }
    assert by_name["add"].line_span == (6, 8)
    assert by_name["clamp"].line_span == (13, 18)
    assert by_name["make_counter"].line_span == (21, 29)
    assert by_name["RollingWindow.push"].line_span == (38, 40)


def test_python_docstring_extracted():
    units = {u.qualified_name: u for u in extract_python_units(PY_SRC, "f")}
    assert units["add"].docstring == "Adds."
    assert units["RollingWindow.push"].docstring == (
        "Record one sample, evicting the oldest when full."
    )
    assert units["clamp"].docstring == ""


def test_python_leading_comments_extracted():
    units = {u.qualified_name: u for u in extract_python_units(PY_SRC, "f")}
    assert units["clamp"].leading_comments == (
        "Clamp keeps threshold math inside the configured band.\n"
        "Values outside the band indicate a misconfigured policy."
    )


def test_python_nested_function_not_extracted():
    units = extract_python_units(PY_SRC, "f")
    names = [u.qualified_name for u in units]
    assert "bump" not in names and "make_counter.bump" not in names


def test_python_body_is_verbatim_slice():
    lines = PY_SRC.split("\n")
    for unit in extract_python_units(PY_SRC, "f"):
        start, end = unit.line_span
        assert unit.body == "\n".join(lines[start - 1 : end])


def test_python_multiline_signature():
    src = "def widen(\n    a,\n    b,\n):\n    return a + b\n"
    units = extract_python_units(src, "f")
    assert len(units) == 1
    assert units[0].line_span == (1, 5)
    assert units[0].signature == "def widen( a, b, )"


# ── Repository walk ──────────────────────────────────────────────────────────


def test_extract_code_units_orders_and_reports(tmp_path):
    (tmp_path / "z.py").write_text("def zfun():\n    return 0\n", encoding="utf-8")
    (tmp_path / "a.java").write_text(
        "public class A {\n    public int one() { return 1; }\n}\n", encoding="utf-8"
    )
    (tmp_path / "bad.java").write_text("public class B {\n", encoding="utf-8")
    report = IngestReport()
    units = extract_code_units(tmp_path, report=report)
    assert [u.qualified_name for u in units] == ["A.one", "zfun"]
    assert report.lines() == ["bad.java\tunbalanced braces at end of file"]


def test_extraction_is_deterministic():
    fixture_root = FIXTURES / "code"
    first = extract_code_units(fixture_root)
    second = extract_code_units(fixture_root)
    assert first == second


def test_non_utf8_file_skipped_with_reason():
    report = IngestReport()
    extract_code_units(FIXTURES / "badcode", report=report)
    reasons = dict(report.skipped)
    assert reasons["notutf8.py"] == "not valid UTF-8"
    assert "broken.java" in reasons


def test_corpus_stats_counts():
    units = [
        CodeUnit("a", "java", "f", (1, 2), "sig", "body one"),
        CodeUnit("b", "python", "g", (1, 2), "sig", "body two!"),
    ]
    stats = corpus_stats(units)
    assert stats.function_count == 2
    assert stats.total_bytes == len(b"body one") + len(b"body two!")
    assert stats.per_language == {"java": 1, "python": 1}
