"""Hit rates and false alarms of flags and warnings at file, function and block level.

A flag (an invdiff breakpoint flag or an imported analyzer warning) is a
``(file, line)`` location. It is resolved to a unit per level: the file, the
enclosing function, or the enclosing block of the parsed source. Per bug:

* detected    at least one flag lands on a buggy unit;
* false_alarm at least one flag exists and every resolved flag is benign.

Flags whose unit is neither buggy nor benign (or cannot be resolved) are kept
in an ``unmapped`` bucket and excluded from both outcomes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .blocks import FILE_LEVEL, BlockTree, LineAnnotation, enclosing_block, enclosing_function

LEVELS = ("file", "function", "block")
SUMMARY_FIELDS = ["tool", "level", "detected_pct", "false_alarm_pct", "n_bugs"]


@dataclass(frozen=True)
class Flag:
    tool: str
    file: str | None
    line: int
    breakpoint_id: str | None = None
    rule_id: str | None = None


@dataclass(frozen=True)
class BugTruth:
    """Buggy and benign units of one bug.

    Units are ``file`` names, ``(file, function)`` pairs and ``(file, block_id)``
    pairs. With ``closed_world`` every resolvable unit of a known file that is
    not buggy counts as benign.
    """

    bug_id: str
    buggy_files: frozenset[str] = frozenset()
    buggy_functions: frozenset[tuple[str, str]] = frozenset()
    buggy_blocks: frozenset[tuple[str, str]] = frozenset()
    buggy_breakpoints: frozenset[str] = frozenset()
    benign_files: frozenset[str] = frozenset()
    benign_functions: frozenset[tuple[str, str]] = frozenset()
    benign_blocks: frozenset[tuple[str, str]] = frozenset()
    closed_world: bool = False

    def __post_init__(self):
        for name in ("buggy_files", "buggy_functions", "buggy_blocks", "buggy_breakpoints",
                     "benign_files", "benign_functions", "benign_blocks"):
            object.__setattr__(self, name, frozenset(
                tuple(x) if isinstance(x, list) else x for x in getattr(self, name)))
        if self.buggy_files & self.benign_files:
            raise ValueError(f"{self.bug_id}: a file is both buggy and benign")

    @property
    def files(self) -> frozenset[str]:
        return (self.buggy_files | self.benign_files
                | {f for f, _ in self.buggy_functions | self.benign_functions
                   | self.buggy_blocks | self.benign_blocks})

    def buggy_units(self, level: str) -> frozenset:
        return {"file": self.buggy_files, "function": self.buggy_functions,
                "block": self.buggy_blocks}[level]

    def benign_units(self, level: str) -> frozenset:
        return {"file": self.benign_files, "function": self.benign_functions,
                "block": self.benign_blocks}[level]

    def check_containment(self, trees: Mapping[str, BlockTree]) -> None:
        """Every buggy block must sit in a buggy function, every buggy function in a buggy file."""
        for f, _ in self.buggy_functions:
            if f not in self.buggy_files:
                raise ValueError(f"{self.bug_id}: buggy function in non-buggy file {f}")
        for f, bid in self.buggy_blocks:
            if f not in self.buggy_files:
                raise ValueError(f"{self.bug_id}: buggy block in non-buggy file {f}")
            tree = trees.get(f)
            if tree is not None and (f, tree.node(bid).function) not in self.buggy_functions:
                raise ValueError(f"{self.bug_id}: buggy block {bid} lies outside the buggy functions")

    def to_json(self) -> dict:
        return {
            "bug_id": self.bug_id,
            "closed_world": self.closed_world,
            "buggy_breakpoints": sorted(self.buggy_breakpoints),
            "buggy": {"files": sorted(self.buggy_files),
                      "functions": [list(u) for u in sorted(self.buggy_functions)],
                      "blocks": [list(u) for u in sorted(self.buggy_blocks)]},
            "benign": {"files": sorted(self.benign_files),
                       "functions": [list(u) for u in sorted(self.benign_functions)],
                       "blocks": [list(u) for u in sorted(self.benign_blocks)]},
        }


def truth_from_lines(bug_id: str, trees: Mapping[str, BlockTree], *,
                     buggy_lines: Iterable[tuple[str, int]] = (),
                     benign_lines: Iterable[tuple[str, int]] = (),
                     buggy_functions: Iterable[tuple[str, str]] = (),
                     benign_functions: Iterable[tuple[str, str]] = (),
                     buggy_blocks: Iterable[tuple[str, str]] = (),
                     benign_blocks: Iterable[tuple[str, str]] = (),
                     buggy_files: Iterable[str] = (),
                     benign_files: Iterable[str] = (),
                     buggy_breakpoints: Iterable[str] = (),
                     closed_world: bool = False) -> BugTruth:
    """Build a BugTruth, resolving source lines to their enclosing functions and blocks.

    Units reached from buggy lines are added to the buggy sets; a unit already
    buggy is never also listed as benign.
    """
    b_files, b_funcs, b_blocks = set(buggy_files), set(map(tuple, buggy_functions)), set(map(tuple, buggy_blocks))
    n_files, n_funcs, n_blocks = set(benign_files), set(map(tuple, benign_functions)), set(map(tuple, benign_blocks))
    for (f, line), files, funcs, blocks in (
        *((bl, b_files, b_funcs, b_blocks) for bl in buggy_lines),
        *((bl, n_files, n_funcs, n_blocks) for bl in benign_lines),
    ):
        tree = trees.get(f)
        if files is b_files:
            files.add(f)
        if tree is None:
            continue
        bid = enclosing_block(tree, line)
        if bid != FILE_LEVEL:
            blocks.add((f, bid))
            fn = tree.node(bid).function
            if fn is not None:
                funcs.add((f, fn))
    for f, _ in b_funcs | b_blocks:
        b_files.add(f)
    return BugTruth(bug_id, frozenset(b_files), frozenset(b_funcs), frozenset(b_blocks),
                    frozenset(buggy_breakpoints), frozenset(n_files - b_files),
                    frozenset(n_funcs - b_funcs), frozenset(n_blocks - b_blocks), closed_world)


def resolve_unit(flag: Flag, level: str, trees: Mapping[str, BlockTree]):
    """The unit a flag falls in at ``level``; ``None`` when it cannot be resolved."""
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}; choose from {LEVELS}")
    if flag.file is None:
        return None
    if level == "file":
        return flag.file
    tree = trees.get(flag.file)
    if tree is None:
        return None
    if level == "function":
        fn = enclosing_function(tree, flag.line)
        return None if fn is None else (flag.file, fn)
    bid = enclosing_block(tree, flag.line)
    return None if bid == FILE_LEVEL else (flag.file, bid)


@dataclass(frozen=True)
class HitResult:
    bug_id: str
    tool: str
    level: str
    detected: bool
    false_alarm: bool
    n_flags: int
    n_buggy: int
    n_benign: int
    unmapped: tuple[Flag, ...] = ()

    def to_json(self) -> dict:
        return {
            "bug_id": self.bug_id, "tool": self.tool, "level": self.level,
            "detected": self.detected, "false_alarm": self.false_alarm,
            "n_flags": self.n_flags, "n_buggy": self.n_buggy, "n_benign": self.n_benign,
            "unmapped": [{"file": f.file, "line": f.line, "breakpoint_id": f.breakpoint_id}
                         for f in self.unmapped],
        }


def hit_rate(flags: Sequence[Flag], truth: BugTruth, level: str,
             trees: Mapping[str, BlockTree] | None = None, tool: str = "") -> HitResult:
    trees = trees or {}
    buggy = truth.buggy_units(level)
    benign = truth.benign_units(level)
    n_buggy = n_benign = 0
    unmapped = []
    for f in flags:
        unit = resolve_unit(f, level, trees)
        if unit is not None and unit in buggy:
            n_buggy += 1
        elif unit is not None and (unit in benign or (
                truth.closed_world and _known_file(unit, level, truth))):
            n_benign += 1
        else:
            unmapped.append(f)
    return HitResult(
        bug_id=truth.bug_id, tool=tool or (flags[0].tool if flags else ""), level=level,
        detected=n_buggy > 0,
        false_alarm=n_buggy == 0 and n_benign > 0,
        n_flags=len(flags), n_buggy=n_buggy, n_benign=n_benign, unmapped=tuple(unmapped),
    )


def _known_file(unit, level: str, truth: BugTruth) -> bool:
    f = unit if level == "file" else unit[0]
    return f in truth.files


def evaluate_bugs(flags: Iterable[Flag], truths: Sequence[BugTruth],
                  trees: Mapping[str, BlockTree], tools: Iterable[str] = ()) -> list[HitResult]:
    """Every (bug, tool, level) outcome.

    A flag belongs to a bug when its file is one of the bug's files. Tools
    listed in ``tools`` but without flags still get (all-negative) rows.
    """
    flags = list(flags)
    tool_names = sorted(set(tools) | {f.tool for f in flags})
    out = []
    for truth in truths:
        files = truth.files
        for tool in tool_names:
            mine = [f for f in flags if f.tool == tool and f.file in files]
            for level in LEVELS:
                out.append(hit_rate(mine, truth, level, trees, tool=tool))
    return out


@dataclass(frozen=True)
class SummaryRow:
    tool: str
    level: str
    detected_pct: float
    false_alarm_pct: float
    n_bugs: int
    unmapped_flags: int = 0


def summarize(results: Iterable[HitResult]) -> list[SummaryRow]:
    """Detection and false-alarm percentages over bugs, per tool and level."""
    cells: dict[tuple[str, str], list[HitResult]] = {}
    for r in results:
        cells.setdefault((r.tool, r.level), []).append(r)
    rows = []
    for (tool, level), rs in sorted(cells.items(), key=lambda kv: (kv[0][0], LEVELS.index(kv[0][1]))):
        n = len({r.bug_id for r in rs})
        det = sum(r.detected for r in rs)
        fa = sum(r.false_alarm for r in rs)
        rows.append(SummaryRow(tool, level, round(100.0 * det / n, 2) if n else 0.0,
                               round(100.0 * fa / n, 2) if n else 0.0, n,
                               sum(len(r.unmapped) for r in rs)))
    return rows


def write_summary(csv_path: str | Path, json_path: str | Path | None,
                  rows: Sequence[SummaryRow], results: Sequence[HitResult] = ()) -> None:
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for r in rows:
            w.writerow([r.tool, r.level, f"{r.detected_pct:.2f}", f"{r.false_alarm_pct:.2f}", r.n_bugs])
    if json_path is not None:
        doc = {
            "summary": [{"tool": r.tool, "level": r.level, "detected_pct": r.detected_pct,
                         "false_alarm_pct": r.false_alarm_pct, "n_bugs": r.n_bugs,
                         "unmapped_flags": r.unmapped_flags} for r in rows],
            "results": [r.to_json() for r in results],
        }
        Path(json_path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def flags_from_annotations(annotations: Iterable[LineAnnotation], default_tool: str = "warnings") -> list[Flag]:
    return [Flag(a.tool or default_tool, a.file, a.line, rule_id=a.rule_id) for a in annotations]


@dataclass
class TruthBundle:
    truths: list[BugTruth]
    trees: dict[str, BlockTree] = field(default_factory=dict)
    breakpoint_lines: dict[str, tuple[str, int]] = field(default_factory=dict)


def truth_from_manifest(manifest: Mapping, trees: Mapping[str, BlockTree]) -> TruthBundle:
    """Per-subject truths from a ``subjects.json`` manifest; each subject is one bug.

    Subject sources are fully known, so their truths are closed-world.
    """
    truths, bp_lines = [], {}
    for s in manifest["subjects"]:
        gt = s["ground_truth"]
        src = s["source_file"]
        for b in s["breakpoints"]:
            bp_lines[f"{s['name']}:{b['breakpoint_id']}"] = (src, b["line"])
        truths.append(truth_from_lines(
            s["name"], trees,
            buggy_lines=[tuple(x) for x in gt["buggy"]["lines"]],
            benign_lines=[tuple(x) for x in gt["benign"]["lines"]],
            buggy_functions=[tuple(x) for x in gt["buggy"]["functions"]],
            benign_functions=[tuple(x) for x in gt["benign"]["functions"]],
            buggy_files=gt["buggy"]["files"], benign_files=gt["benign"]["files"],
            buggy_breakpoints=gt["buggy_breakpoints"], closed_world=True,
        ))
    return TruthBundle(truths, dict(trees), bp_lines)


def truth_from_json(doc: Mapping, trees: Mapping[str, BlockTree]) -> list[BugTruth]:
    """Truths from ``{"bugs": [{"bug_id", "buggy": {...}, "benign": {...}}]}``.

    Each side may list ``files``, ``functions`` (``[file, name]``), ``blocks``
    (``[file, block_id]``) and ``lines`` (``[file, line]``).
    """
    out = []
    for bug in doc["bugs"]:
        buggy, benign = bug.get("buggy", {}), bug.get("benign", {})
        out.append(truth_from_lines(
            bug["bug_id"], trees,
            buggy_lines=[tuple(x) for x in buggy.get("lines", [])],
            benign_lines=[tuple(x) for x in benign.get("lines", [])],
            buggy_functions=[tuple(x) for x in buggy.get("functions", [])],
            benign_functions=[tuple(x) for x in benign.get("functions", [])],
            buggy_blocks=[tuple(x) for x in buggy.get("blocks", [])],
            benign_blocks=[tuple(x) for x in benign.get("blocks", [])],
            buggy_files=buggy.get("files", []), benign_files=benign.get("files", []),
            buggy_breakpoints=bug.get("buggy_breakpoints", []),
            closed_world=bool(bug.get("closed_world", False)),
        ))
    return out
