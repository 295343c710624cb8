"""Dependency grouping of breakpoints and group-level flag verdicts.

Flags that propagate from a buggy breakpoint to the ones depending on it are
counted once per connected group instead of once per breakpoint.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence


class GraphValidationError(ValueError):
    pass


@dataclass(frozen=True)
class BreakpointGroup:
    group_id: str
    members: frozenset[str]
    flagged: bool = False
    contains_buggy: bool = False

    @property
    def false_alarm(self) -> bool:
        return self.flagged and not self.contains_buggy

    def to_json(self) -> dict:
        return {
            "group_id": self.group_id,
            "members": sorted(self.members),
            "flagged": self.flagged,
            "contains_buggy": self.contains_buggy,
            "false_alarm": self.false_alarm,
        }


def group_breakpoints(breakpoints: Iterable[str],
                      edges: Iterable[tuple[str, str]]) -> list[BreakpointGroup]:
    """Connected components of the undirected dependency graph.

    Groups are ordered by their smallest member and named ``g0``, ``g1``, ...
    """
    nodes = sorted(set(breakpoints))
    known = set(nodes)
    adj: dict[str, set[str]] = {n: set() for n in nodes}
    for a, b in edges:
        for end in (a, b):
            if end not in known:
                raise GraphValidationError(f"edge ({a}, {b}) names unknown breakpoint {end!r}")
        adj[a].add(b)
        adj[b].add(a)

    seen: set[str] = set()
    groups = []
    for start in nodes:
        if start in seen:
            continue
        comp = {start}
        queue = deque([start])
        seen.add(start)
        while queue:
            cur = queue.popleft()
            for nxt in adj[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    comp.add(nxt)
                    queue.append(nxt)
        groups.append(BreakpointGroup(f"g{len(groups)}", frozenset(comp)))
    return groups


@dataclass(frozen=True)
class GroupedVerdicts:
    groups: tuple[BreakpointGroup, ...]
    flagged_groups: int
    grouped_false_alarms: int
    ungrouped_false_alarms: int
    detected_groups: int
    flagged_breakpoints: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "flagged_groups": self.flagged_groups,
            "grouped_false_alarms": self.grouped_false_alarms,
            "ungrouped_false_alarms": self.ungrouped_false_alarms,
            "detected_groups": self.detected_groups,
            "flagged_breakpoints": list(self.flagged_breakpoints),
            "groups": [g.to_json() for g in self.groups],
        }


def merge_flags(groups: Sequence[BreakpointGroup], flags: Mapping[str, bool],
                buggy: Iterable[str] = ()) -> GroupedVerdicts:
    """A group is flagged when any member is; a flagged group without a buggy member is a false alarm.

    ``flags`` maps breakpoint ids to their flag decision (a report's
    ``flagged`` field). The ungrouped count treats every flagged benign
    breakpoint as its own false alarm.
    """
    buggy = set(buggy)
    owner: dict[str, str] = {}
    for g in groups:
        for m in g.members:
            if m in owner:
                raise GraphValidationError(f"breakpoint {m!r} is in groups {owner[m]} and {g.group_id}")
            owner[m] = g.group_id
    for bp in flags:
        if bp not in owner:
            raise GraphValidationError(f"report for {bp!r} belongs to no group")

    merged = tuple(
        BreakpointGroup(g.group_id, g.members,
                        flagged=any(flags.get(m, False) for m in g.members),
                        contains_buggy=bool(g.members & buggy))
        for g in groups
    )
    flagged_bps = tuple(sorted(bp for bp, f in flags.items() if f))
    return GroupedVerdicts(
        groups=merged,
        flagged_groups=sum(g.flagged for g in merged),
        grouped_false_alarms=sum(g.false_alarm for g in merged),
        ungrouped_false_alarms=sum(1 for bp in flagged_bps if bp not in buggy),
        detected_groups=sum(1 for g in merged
                            if any(flags.get(m, False) for m in g.members & buggy)),
        flagged_breakpoints=flagged_bps,
    )


def read_edges_csv(path: str | Path) -> list[tuple[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not {"bp_a", "bp_b"} <= set(reader.fieldnames or []):
            raise ValueError("edges CSV needs columns bp_a,bp_b")
        return [(row["bp_a"], row["bp_b"]) for row in reader]


def write_edges_csv(path: str | Path, edges: Iterable[tuple[str, str]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bp_a", "bp_b"])
        w.writerows(edges)
