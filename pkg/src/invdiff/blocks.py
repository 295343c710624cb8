"""Brace-structure parsing of C-like sources and change/warning-to-block mapping.

A block is a brace-delimited region plus the line that opens its construct
(``if (...)``, ``for (...)``, a function signature, ``else``). Comments,
string and character literals and preprocessor lines are blanked before any
brace is considered.
"""

from __future__ import annotations

import bisect
import csv
import enum
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

FILE_LEVEL = "<file>"

_KEYWORDS = {"if", "else", "for", "while", "do", "switch", "struct", "union", "enum",
             "return", "sizeof", "case", "typedef"}
_FUNC_HEADER = re.compile(r"([A-Za-z_]\w*)\s*\([^;{}]*\)\s*(const\s*)?$", re.S)
_RETURN_ONLY = re.compile(r"^\s*return\b[^;{}]*;\s*$", re.S)


class BlockParseError(ValueError):
    def __init__(self, message: str, line: int):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ChangeKind(str, enum.Enum):
    CHANGED_STATEMENT = "changed_statement"
    CHANGED_BLOCK = "changed_block"
    WARNING = "warning"


@dataclass(frozen=True)
class LineAnnotation:
    line: int
    kind: ChangeKind = ChangeKind.CHANGED_STATEMENT
    tool: str | None = None
    file: str | None = None
    rule_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ChangeKind(self.kind))


@dataclass(frozen=True)
class BlockNode:
    block_id: str
    start_line: int
    end_line: int
    parent: str | None
    kind: str  # function_body | compound
    header_line: int
    depth: int
    start_offset: int
    end_offset: int
    header_offset: int
    function: str | None = None
    header: str = ""


@dataclass
class BlockTree:
    nodes: list[BlockNode]
    source_path: str | None = None
    n_lines: int = 0
    clean: str = field(default="", repr=False)
    _subst_offsets: list[int] = field(default_factory=list, repr=False)
    _subst_lines: list[int] = field(default_factory=list, repr=False)

    def node(self, block_id: str) -> BlockNode:
        for n in self.nodes:
            if n.block_id == block_id:
                return n
        raise KeyError(block_id)

    def children(self, block_id: str | None) -> list[BlockNode]:
        return [n for n in self.nodes if n.parent == block_id]

    def code_lines(self, n: BlockNode) -> list[int]:
        """Lines carrying code (other than braces) between the header and the closing brace."""
        lo = bisect.bisect_left(self._subst_offsets, n.header_offset)
        hi = bisect.bisect_left(self._subst_offsets, n.end_offset)
        return sorted(set(self._subst_lines[lo:hi]))

    def last_line(self, n: BlockNode) -> int:
        """Line of the block's last direct statement.

        A trailing nested block contributes its closing-brace line; an empty
        body yields the block's own closing-brace line.
        """
        lo = bisect.bisect_right(self._subst_offsets, n.start_offset)
        hi = bisect.bisect_left(self._subst_offsets, n.end_offset)
        kids = self.children(n.block_id)
        best_offset, best_line = -1, n.end_line
        for k in range(hi - 1, lo - 1, -1):
            off = self._subst_offsets[k]
            if not any(c.start_offset < off < c.end_offset for c in kids):
                best_offset, best_line = off, self._subst_lines[k]
                break
        for c in kids:
            if c.end_offset > best_offset:
                best_offset, best_line = c.end_offset, c.end_line
        return best_line

    def body(self, n: BlockNode) -> str:
        return self.clean[n.start_offset + 1:n.end_offset]

    def is_return_only(self, n: BlockNode) -> bool:
        return bool(_RETURN_ONLY.match(self.body(n)))


def _blank_non_code(source: str) -> str:
    """Replace comments, literal contents and preprocessor lines with spaces, keeping newlines."""
    out = list(source)
    i, n = 0, len(source)
    at_line_start = True
    while i < n:
        c = source[i]
        if c == "\n":
            at_line_start = True
            i += 1
            continue
        if at_line_start and c == "#":
            while i < n and source[i] != "\n":
                if source[i] == "\\" and i + 1 < n and source[i + 1] == "\n":
                    out[i] = " "
                    i += 2
                    continue
                out[i] = " "
                i += 1
            continue
        if not c.isspace():
            at_line_start = False
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                out[i] = " "
                i += 1
        elif source.startswith("/*", i):
            end = source.find("*/", i + 2)
            end = n if end < 0 else end + 2
            for k in range(i, end):
                if source[k] != "\n":
                    out[k] = " "
            i = end
        elif c in "\"'":
            k = i + 1
            while k < n and source[k] != c and source[k] != "\n":
                if source[k] == "\\":
                    out[k] = " "
                    k += 1
                    if k < n and source[k] != "\n":
                        out[k] = " "
                    k += 1
                    continue
                out[k] = " "
                k += 1
            i = k + 1
        else:
            i += 1
    return "".join(out)


def parse_blocks(source: str, source_path: str | None = None) -> BlockTree:
    """Build the nested brace-region tree of ``source``."""
    clean = _blank_non_code(source)
    line_starts = [0] + [i + 1 for i, ch in enumerate(clean) if ch == "\n"]

    def line_of(offset: int) -> int:
        return bisect.bisect_right(line_starts, offset)

    subst_offsets, subst_lines = [], []
    stack: list[tuple[int, int]] = []  # (offset, node index placeholder)
    opened: list[dict] = []
    for i, ch in enumerate(clean):
        if ch == "{":
            stack.append((i, len(opened)))
            opened.append({"start": i})
        elif ch == "}":
            if not stack:
                raise BlockParseError("unmatched '}'", line_of(i))
            _, idx = stack.pop()
            opened[idx]["end"] = i
        elif not ch.isspace():
            subst_offsets.append(i)
            subst_lines.append(line_of(i))
    if stack:
        raise BlockParseError("unclosed '{'", line_of(stack[-1][0]))

    nodes: list[BlockNode] = []
    parents: list[int | None] = []
    open_stack: list[int] = []
    for idx, info in enumerate(opened):
        while open_stack and opened[open_stack[-1]]["end"] < info["start"]:
            open_stack.pop()
        parent = open_stack[-1] if open_stack else None
        parents.append(parent)
        open_stack.append(idx)

    for idx, info in enumerate(opened):
        start, end = info["start"], info["end"]
        k = start - 1
        while k >= 0 and clean[k] not in ";{}":
            k -= 1
        header_offset = k + 1
        while header_offset < start and clean[header_offset].isspace():
            header_offset += 1
        header = " ".join(clean[header_offset:start].split())
        parent = parents[idx]
        kind = "compound"
        function = None
        m = _FUNC_HEADER.search(header)
        if parent is None and m and m.group(1) not in _KEYWORDS and header.split()[0] not in _KEYWORDS:
            kind = "function_body"
            function = m.group(1)
        elif parent is not None:
            function = nodes[parent].function
        depth = 0 if parent is None else nodes[parent].depth + 1
        nodes.append(BlockNode(
            block_id=f"b{idx}",
            start_line=line_of(start),
            end_line=line_of(end),
            parent=None if parent is None else f"b{parent}",
            kind=kind,
            header_line=line_of(header_offset),
            depth=depth,
            start_offset=start,
            end_offset=end,
            header_offset=header_offset,
            function=function,
            header=header,
        ))
    return BlockTree(nodes, source_path, len(line_starts), clean, subst_offsets, subst_lines)


def parse_block_file(path: str | Path) -> BlockTree:
    return parse_blocks(Path(path).read_text(encoding="utf-8"), str(path))


def _containing(t: BlockTree, line: int) -> list[BlockNode]:
    return [n for n in t.nodes if n.header_line <= line <= n.end_line]


def enclosing_block(t: BlockTree, line: int) -> str:
    """Innermost block whose construct (header line through closing brace) holds ``line``."""
    candidates = _containing(t, line)
    if not candidates:
        return FILE_LEVEL
    best = max(candidates, key=lambda n: (n.depth, n.start_offset))
    return best.block_id


def enclosing_function(t: BlockTree, line: int) -> str | None:
    bid = enclosing_block(t, line)
    return None if bid == FILE_LEVEL else t.node(bid).function


def _is_ancestor(t: BlockTree, anc: str, bid: str) -> bool:
    while bid is not None:
        if bid == anc:
            return True
        bid = t.node(bid).parent
    return False


def _common_block(t: BlockTree, ids: Sequence[str]) -> str:
    if any(b == FILE_LEVEL for b in ids):
        return FILE_LEVEL
    cand = ids[0]
    while cand is not None and not all(_is_ancestor(t, cand, b) for b in ids):
        cand = t.node(cand).parent
    return FILE_LEVEL if cand is None else cand


@dataclass(frozen=True)
class Placement:
    line: int
    rule_applied: int
    block_id: str
    note: str = ""


def _named_block(t: BlockTree, line: int) -> BlockNode | None:
    hits = [n for n in t.nodes if line in (n.header_line, n.start_line)]
    if hits:
        return max(hits, key=lambda n: (n.depth, n.start_offset))
    bid = enclosing_block(t, line)
    return None if bid == FILE_LEVEL else t.node(bid)


def place_breakpoint(t: BlockTree, changes: Iterable[LineAnnotation]) -> Placement:
    """Choose a breakpoint line for a change by the ordered placement rules.

    1. statement change: last code line of the enclosing block;
    2. change covering a block: last code line of the innermost covered block;
    3. covered block whose body is a lone ``return``: its opening-construct line.
    """
    changed = [a for a in changes if a.kind is not ChangeKind.WARNING]
    if not changed:
        raise ValueError("no changed lines to place a breakpoint for")
    lines = {a.line for a in changed}
    covered: list[BlockNode] = []
    for a in changed:
        if a.kind is ChangeKind.CHANGED_BLOCK:
            n = _named_block(t, a.line)
            if n is not None:
                covered.append(n)
    for n in t.nodes:
        if n.kind == "function_body":
            continue
        body_lines = t.code_lines(n)
        if body_lines and set(body_lines) <= lines:
            covered.append(n)

    if not covered:
        ids = sorted({enclosing_block(t, ln) for ln in lines})
        block = _common_block(t, ids)
        if block == FILE_LEVEL:
            raise ValueError(f"changed lines {sorted(lines)} lie outside every block")
        note = "" if len(ids) == 1 else f"change spans blocks {ids}"
        return Placement(t.last_line(t.node(block)), 1, block, note)

    inner = max(covered, key=lambda n: (n.depth, n.start_offset))
    if t.is_return_only(inner):
        return Placement(inner.header_line, 3, inner.block_id)
    return Placement(t.last_line(inner), 2, inner.block_id)


def place_breakpoints(t: BlockTree, changes: Iterable[LineAnnotation]) -> list[Placement]:
    """One placement per affected top-level changed region (sibling blocks are not merged)."""
    changed = [a for a in changes if a.kind is not ChangeKind.WARNING]
    groups: dict[str, list[LineAnnotation]] = {}
    for a in changed:
        key = enclosing_block(t, a.line)
        if a.kind is ChangeKind.CHANGED_BLOCK:
            n = _named_block(t, a.line)
            key = n.parent or n.block_id if n is not None else key
        groups.setdefault(key, []).append(a)
    return [place_breakpoint(t, anns) for _, anns in sorted(groups.items())]


def read_warnings_csv(path: str | Path) -> list[LineAnnotation]:
    """Warnings exported as ``file,line,tool,rule_id``."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"file", "line", "tool", "rule_id"}
        if not required <= set(reader.fieldnames or []):
            raise ValueError(f"warnings CSV needs columns {sorted(required)}")
        for row in reader:
            out.append(LineAnnotation(int(row["line"]), ChangeKind.WARNING,
                                      tool=row["tool"] or None, file=row["file"],
                                      rule_id=row["rule_id"] or None))
    return out


def read_changes_csv(path: str | Path) -> list[LineAnnotation]:
    """Changed lines as ``file,line[,kind]``; kind defaults to changed_statement."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            kind = row.get("kind") or ChangeKind.CHANGED_STATEMENT
            out.append(LineAnnotation(int(row["line"]), kind, file=row.get("file")))
    return out


_HUNK = re.compile(r"^@@ -\d+(?:,\d+)? \+(\d+)(?:,(\d+))? @@")


def parse_unified_diff(text: str) -> dict[str, list[LineAnnotation]]:
    """New-side line numbers of added lines per target file."""
    out: dict[str, list[LineAnnotation]] = {}
    current = None
    new_line = 0
    for raw in text.splitlines():
        if raw.startswith("+++ "):
            name = raw[4:].split("\t")[0].strip()
            current = name[2:] if name.startswith("b/") else name
            out.setdefault(current, [])
            continue
        if raw.startswith("--- "):
            continue
        m = _HUNK.match(raw)
        if m:
            new_line = int(m.group(1))
            continue
        if current is None:
            continue
        if raw.startswith("+"):
            out[current].append(LineAnnotation(new_line, ChangeKind.CHANGED_STATEMENT, file=current))
            new_line += 1
        elif raw.startswith("-"):
            continue
        elif raw.startswith("\\"):
            continue
        else:
            new_line += 1
    return out


def map_annotations(t: BlockTree, annotations: Iterable[LineAnnotation]) -> list[tuple[LineAnnotation, str]]:
    """Pair every annotation with its enclosing block id (``FILE_LEVEL`` when outside all)."""
    return [(a, enclosing_block(t, a.line)) for a in annotations]
