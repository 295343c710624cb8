from __future__ import annotations

import itertools
import json
from pathlib import Path

import pytest

from invdiff.blocks import parse_block_file
from invdiff.evaluation import (LEVELS, BugTruth, Flag, evaluate_bugs, hit_rate, summarize,
                                truth_from_json, truth_from_lines, write_summary)

FIXTURE = Path(__file__).parent / "fixtures" / "nested.c"


@pytest.fixture(scope="module")
def trees():
    return {"nested.c": parse_block_file(FIXTURE), "other.c": parse_block_file(FIXTURE)}


@pytest.fixture(scope="module")
def truth(trees):
    # bug on line 11 (block b3 in compute); line 4 in helper and other.c are benign
    return truth_from_lines("bug1", trees, buggy_lines=[("nested.c", 11)],
                            benign_lines=[("nested.c", 4), ("nested.c", 14), ("nested.c", 25)],
                            benign_files=["other.c"])


def _f(line, file="nested.c"):
    return Flag("tool", file, line)


def test_truth_units(truth, trees):
    assert truth.buggy_blocks == {("nested.c", "b3")}
    assert truth.buggy_functions == {("nested.c", "compute")}
    assert truth.buggy_files == {"nested.c"}
    assert truth.benign_blocks == {("nested.c", "b0"), ("nested.c", "b2"), ("nested.c", "b6")}
    assert truth.benign_functions == {("nested.c", "helper"), ("nested.c", "tail")}
    truth.check_containment(trees)


def test_containment_violation(trees):
    bad = BugTruth("b", buggy_files={"nested.c"}, buggy_functions={("nested.c", "helper")},
                   buggy_blocks={("nested.c", "b3")})
    with pytest.raises(ValueError):
        bad.check_containment(trees)


def test_buggy_and_benign_block(truth, trees):
    r = hit_rate([_f(12), _f(14)], truth, "block", trees)
    assert r.detected and not r.false_alarm


def test_benign_block_only(truth, trees):
    r = hit_rate([_f(14)], truth, "block", trees)
    assert not r.detected and r.false_alarm


def test_no_flags(truth, trees):
    for level in LEVELS:
        r = hit_rate([], truth, level, trees)
        assert not r.detected and not r.false_alarm


def test_unmapped_flags_excluded(truth, trees):
    r = hit_rate([_f(1), _f(17), Flag("tool", None, 3)], truth, "block", trees)
    assert not r.detected and not r.false_alarm and len(r.unmapped) == 3


# flag location -> expected (file, function, block) classification: B buggy, N benign, U unmapped
LOCATIONS = {
    ("nested.c", 11): ("B", "B", "B"),
    ("nested.c", 14): ("B", "B", "N"),
    ("nested.c", 17): ("B", "B", "U"),
    ("nested.c", 4): ("B", "N", "N"),
    ("nested.c", 27): ("B", "N", "U"),
    ("other.c", 11): ("N", "U", "U"),
    ("nested.c", 1): ("B", "U", "U"),
}


def _expected(flags, level):
    idx = LEVELS.index(level)
    marks = [LOCATIONS[(f.file, f.line)][idx] for f in flags]
    detected = "B" in marks
    return detected, (not detected and "N" in marks)


def test_truth_table_exhaustive(truth, trees):
    """Every subset of fixture locations at every level; containment holds throughout."""
    locs = list(LOCATIONS)
    for k in range(len(locs) + 1):
        for combo in itertools.combinations(locs, k):
            flags = [_f(line, file) for file, line in combo]
            seen = {}
            for level in LEVELS:
                r = hit_rate(flags, truth, level, trees)
                assert (r.detected, r.false_alarm) == _expected(flags, level), (combo, level)
                assert not (r.detected and r.false_alarm)
                seen[level] = r.detected
            assert seen["block"] <= seen["function"] <= seen["file"]


def test_closed_world_treats_unlisted_units_as_benign(trees):
    t = truth_from_lines("b", trees, buggy_lines=[("nested.c", 11)], closed_world=True)
    r = hit_rate([_f(17)], t, "block", trees)
    assert r.false_alarm and not r.unmapped


def test_summary_percentages():
    results = []
    for i in range(18):
        results.append(hit_rate([], BugTruth(f"b{i}"), "block", tool="t"))
    results = [r.__class__(**{**r.__dict__, "detected": i < 12}) for i, r in enumerate(results)]
    [row] = summarize(results)
    assert row.detected_pct == pytest.approx(66.67) and round(row.detected_pct) == 67
    assert row.n_bugs == 18 and row.false_alarm_pct == 0


def test_zero_flag_tool_and_all_benign_tool(truth, trees, tmp_path):
    bugs = [truth, truth_from_lines("bug2", trees, buggy_lines=[("nested.c", 27)],
                                    benign_lines=[("nested.c", 14)])]
    flags = [Flag("benign", "nested.c", 14)]
    results = evaluate_bugs(flags, bugs, trees, tools=["silent"])
    rows = {(r.tool, r.level): r for r in summarize(results)}
    assert rows[("silent", "block")].detected_pct == 0 and rows[("silent", "block")].false_alarm_pct == 0
    assert rows[("benign", "block")].false_alarm_pct == 100.0
    write_summary(tmp_path / "s.csv", tmp_path / "s.json", list(rows.values()), results)
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "tool,level,detected_pct,false_alarm_pct,n_bugs"
    assert len(json.loads((tmp_path / "s.json").read_text())["summary"]) == 6


def test_truth_from_json(trees):
    doc = {"bugs": [{"bug_id": "x", "buggy": {"lines": [["nested.c", 11]]},
                     "benign": {"blocks": [["nested.c", "b4"]]}}]}
    [t] = truth_from_json(doc, trees)
    assert t.buggy_blocks == {("nested.c", "b3")} and t.benign_blocks == {("nested.c", "b4")}
