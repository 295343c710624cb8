from __future__ import annotations

from pathlib import Path

import pytest

from invdiff.blocks import (FILE_LEVEL, BlockParseError, ChangeKind, LineAnnotation, enclosing_block,
                            enclosing_function, map_annotations, parse_block_file, parse_blocks,
                            parse_unified_diff, place_breakpoint, place_breakpoints,
                            read_changes_csv, read_warnings_csv)

FIXTURE = Path(__file__).parent / "fixtures" / "nested.c"


@pytest.fixture(scope="module")
def tree():
    return parse_block_file(FIXTURE)


def _stmt(*lines):
    return [LineAnnotation(ln) for ln in lines]


def test_structure(tree):
    spans = [(n.block_id, n.header_line, n.end_line, n.parent, n.kind) for n in tree.nodes]
    assert spans == [
        ("b0", 3, 5, None, "function_body"),
        ("b1", 7, 21, None, "function_body"),
        ("b2", 9, 15, "b1", "compound"),
        ("b3", 10, 13, "b2", "compound"),
        ("b4", 16, 18, "b1", "compound"),
        ("b5", 23, 31, None, "function_body"),
        ("b6", 24, 29, "b5", "compound"),
        ("b7", 26, 28, "b6", "compound"),
    ]
    assert [n.function for n in tree.nodes] == ["helper"] + ["compute"] * 4 + ["tail"] * 3


@pytest.mark.parametrize("line,block", [
    (11, "b3"), (10, "b3"), (13, "b3"), (14, "b2"), (9, "b2"), (8, "b1"), (19, "b1"),
    (21, "b1"), (17, "b4"), (1, FILE_LEVEL), (2, FILE_LEVEL), (6, FILE_LEVEL),
])
def test_innermost_block(tree, line, block):
    assert enclosing_block(tree, line) == block


def test_enclosing_function(tree):
    assert enclosing_function(tree, 12) == "compute"
    assert enclosing_function(tree, 4) == "helper"
    assert enclosing_function(tree, 1) is None


def test_warning_in_loop_maps_to_loop_block(tree):
    w = LineAnnotation(14, ChangeKind.WARNING, tool="t", file="nested.c")
    assert map_annotations(tree, [w]) == [(w, "b2")]


def test_rule1_statement_change(tree):
    assert place_breakpoint(tree, _stmt(11)) == place_breakpoint(tree, _stmt(12))
    p = place_breakpoint(tree, _stmt(11))
    assert (p.line, p.rule_applied, p.block_id) == (12, 1, "b3")
    p = place_breakpoint(tree, _stmt(8))
    assert (p.line, p.rule_applied, p.block_id) == (20, 1, "b1")


def test_rule1_spanning_change_uses_common_block(tree):
    p = place_breakpoint(tree, _stmt(11, 14))
    assert (p.line, p.rule_applied, p.block_id) == (14, 1, "b2")
    assert p.note


def test_rule1_trailing_child_block(tree):
    p = place_breakpoint(tree, _stmt(25))
    assert (p.line, p.rule_applied, p.block_id) == (28, 1, "b6")


def test_rule2_block_change(tree):
    p = place_breakpoint(tree, [LineAnnotation(10, ChangeKind.CHANGED_BLOCK)])
    assert (p.line, p.rule_applied, p.block_id) == (12, 2, "b3")


def test_rule2_fully_rewritten_block(tree):
    p = place_breakpoint(tree, _stmt(10, 11, 12))
    assert (p.line, p.rule_applied, p.block_id) == (12, 2, "b3")
    p = place_breakpoint(tree, _stmt(9, 10, 11, 12, 14))
    assert (p.line, p.rule_applied, p.block_id) == (12, 2, "b3")


def test_rule3_return_only_block(tree):
    p = place_breakpoint(tree, [LineAnnotation(16, ChangeKind.CHANGED_BLOCK)])
    assert (p.line, p.rule_applied, p.block_id) == (16, 3, "b4")
    p = place_breakpoint(tree, _stmt(16, 17))
    assert (p.line, p.rule_applied) == (16, 3)


def test_placement_errors(tree):
    with pytest.raises(ValueError):
        place_breakpoint(tree, [])
    with pytest.raises(ValueError):
        place_breakpoint(tree, _stmt(1))
    with pytest.raises(ValueError):
        place_breakpoint(tree, [LineAnnotation(14, ChangeKind.WARNING)])


def test_place_breakpoints_one_per_region(tree):
    ps = place_breakpoints(tree, _stmt(4, 11, 27))
    assert sorted((p.line, p.block_id) for p in ps) == [(4, "b0"), (12, "b3"), (27, "b7")]


def test_comments_and_literals_ignored():
    src = 'int f() {\n  char c = \'{\';\n  // }\n  /* } */ return 1;\n}\n'
    t = parse_blocks(src)
    assert len(t.nodes) == 1 and t.nodes[0].end_line == 5


def test_else_and_nested_headers():
    src = "void g(int x) {\n  if (x) {\n    x = 1;\n  } else {\n    x = 2;\n  }\n}\n"
    t = parse_blocks(src)
    assert [(n.header_line, n.end_line) for n in t.nodes] == [(1, 7), (2, 4), (4, 6)]
    assert enclosing_block(t, 5) == "b2"


@pytest.mark.parametrize("src,line", [("int f() {\n}\n}\n", 3), ("int f() {\n  {\n}\n", 1)])
def test_unbalanced_braces(src, line):
    with pytest.raises(BlockParseError) as err:
        parse_blocks(src)
    assert err.value.line == line


def test_csv_readers(tmp_path):
    w = tmp_path / "w.csv"
    w.write_text("file,line,tool,rule_id\nnested.c,14,cppcheck,unusedVar\n")
    [a] = read_warnings_csv(w)
    assert (a.file, a.line, a.tool, a.rule_id, a.kind) == ("nested.c", 14, "cppcheck", "unusedVar", ChangeKind.WARNING)
    c = tmp_path / "c.csv"
    c.write_text("file,line,kind\nnested.c,16,changed_block\nnested.c,11,\n")
    kinds = [x.kind for x in read_changes_csv(c)]
    assert kinds == [ChangeKind.CHANGED_BLOCK, ChangeKind.CHANGED_STATEMENT]


def test_unified_diff_lines():
    diff = ("--- a/nested.c\n+++ b/nested.c\n@@ -9,4 +9,4 @@\n"
            " for\n-old\n+new\n context\n+added\n")
    out = parse_unified_diff(diff)
    assert [a.line for a in out["nested.c"]] == [10, 12]
