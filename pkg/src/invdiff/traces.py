"""Execution-trace data model, value decimalization and the line-based trace format.

A trace file holds one or more record blocks::

    #bp <breakpoint_id> <version> <input_id>
    #vars x,y
    3,5
    4,7

Every data line is one execution round of the breakpoint, values in ``#vars``
order. A block may carry an optional ``#rounds 0,2,5`` line (written only
after sampling has made round indices non-contiguous).
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MAX_VARIABLES = 10
DEFAULT_TRACE_CAP = 1500

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

_IDENT = re.compile(r"^[A-Za-z0-9_.:\-]+$")


class TraceFormatError(ValueError):
    """A trace file line could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class TraceValidationError(ValueError):
    """A trace record is structurally inconsistent."""


def hash_string_value(s: bytes | str) -> int:
    """64-bit FNV-1a of ``s`` as an unsigned integer.

    ``str`` input is UTF-8 encoded first. The empty input hashes to the FNV
    offset basis, 14695981039346656037.
    """
    if isinstance(s, str):
        s = s.encode("utf-8")
    h = FNV64_OFFSET
    for byte in s:
        h ^= byte
        h = (h * FNV64_PRIME) & _MASK64
    return h


def format_decimal(value: float) -> str:
    """Canonical decimal text: integers bare, otherwise at most 6 fractional digits."""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    v = float(value)
    if not math.isfinite(v):
        raise TraceValidationError(f"non-finite value {value!r}")
    if v.is_integer():
        return str(int(v))
    text = f"{v:.6f}".rstrip("0").rstrip(".")
    if text in ("-0", ""):
        return "0"
    return text


def decimalize(value: float) -> float:
    """Round ``value`` onto the canonical decimal grid so text and float agree."""
    return float(format_decimal(value))


@dataclass(frozen=True)
class VariableSnapshot:
    variable_name: str
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", decimalize(self.value))


@dataclass(frozen=True)
class TraceRow:
    round_index: int
    snapshots: tuple[VariableSnapshot, ...]

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(s.value for s in self.snapshots)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.variable_name for s in self.snapshots)


@dataclass(frozen=True)
class TraceSet:
    """Snapshots of one breakpoint for one input on one program version."""

    input_id: str
    version: str
    breakpoint_id: str
    variables: tuple[str, ...]
    rows: tuple[TraceRow, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "rows", tuple(self.rows))
        for label, ident in (
            ("input_id", self.input_id),
            ("version", self.version),
            ("breakpoint_id", self.breakpoint_id),
        ):
            if not _IDENT.match(str(ident)):
                raise TraceValidationError(f"invalid {label} {ident!r}")
        if len(set(self.variables)) != len(self.variables):
            raise TraceValidationError(f"duplicate variable names in {self.variables}")
        if len(self.variables) > MAX_VARIABLES:
            raise TraceValidationError(
                f"{len(self.variables)} variables at {self.breakpoint_id}; at most {MAX_VARIABLES} allowed"
            )
        previous = -1
        for row in self.rows:
            if row.names != self.variables:
                raise TraceValidationError(
                    f"row {row.round_index} variables {row.names} differ from {self.variables}"
                )
            if row.round_index <= previous:
                raise TraceValidationError("round indices must be strictly increasing")
            previous = row.round_index

    @classmethod
    def from_values(
        cls,
        input_id: str,
        version: str,
        breakpoint_id: str,
        variables: Sequence[str],
        value_rows: Iterable[Sequence[float]],
        rounds: Sequence[int] | None = None,
    ) -> "TraceSet":
        variables = tuple(variables)
        value_rows = list(value_rows)
        if rounds is None:
            rounds = range(len(value_rows))
        rows = []
        for r, values in zip(rounds, value_rows):
            if len(values) != len(variables):
                raise TraceValidationError(
                    f"round {r} has {len(values)} values for {len(variables)} variables"
                )
            rows.append(
                TraceRow(r, tuple(VariableSnapshot(n, v) for n, v in zip(variables, values)))
            )
        return cls(input_id, version, breakpoint_id, variables, tuple(rows))

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.breakpoint_id, self.version, self.input_id)

    def matrix(self) -> np.ndarray:
        """Rows x variables float64 array."""
        if not self.rows:
            return np.zeros((0, len(self.variables)))
        return np.array([row.values for row in self.rows], dtype=np.float64)

    def column(self, name: str) -> np.ndarray:
        return self.matrix()[:, self.variables.index(name)]


def sample_traces(t: TraceSet, cap: int = DEFAULT_TRACE_CAP, seed: int = 0) -> TraceSet:
    """Keep at most ``cap`` rows, chosen uniformly without replacement, in round order."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if len(t.rows) <= cap:
        return t
    picked = sorted(random.Random(seed).sample(range(len(t.rows)), cap))
    return TraceSet(t.input_id, t.version, t.breakpoint_id, t.variables,
                    tuple(t.rows[i] for i in picked))


def serialize_traces(traces: Iterable[TraceSet]) -> str:
    out: list[str] = []
    for t in traces:
        out.append(f"#bp {t.breakpoint_id} {t.version} {t.input_id}")
        out.append("#vars " + ",".join(t.variables))
        rounds = [row.round_index for row in t.rows]
        if rounds != list(range(len(rounds))):
            out.append("#rounds " + ",".join(map(str, rounds)))
        for row in t.rows:
            out.append(",".join(format_decimal(v) for v in row.values))
    return "\n".join(out) + ("\n" if out else "")


def write_trace_file(path: str | Path, traces: Iterable[TraceSet]) -> None:
    Path(path).write_text(serialize_traces(traces), encoding="utf-8")


def parse_traces(text: str) -> list[TraceSet]:
    records: list[TraceSet] = []
    header: tuple[str, str, str] | None = None
    header_line = 0
    variables: tuple[str, ...] | None = None
    rounds: list[int] | None = None
    rows: list[tuple[float, ...]] = []

    def flush():
        if header is None:
            return
        if variables is None:
            raise TraceFormatError("record has no #vars line", header_line)
        bp, version, input_id = header
        if rounds is not None and len(rounds) != len(rows):
            raise TraceFormatError(
                f"#rounds lists {len(rounds)} indices for {len(rows)} rows", header_line
            )
        try:
            records.append(
                TraceSet.from_values(input_id, version, bp, variables, rows, rounds)
            )
        except TraceValidationError as exc:
            raise TraceValidationError(f"record at line {header_line}: {exc}") from None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#bp"):
            flush()
            parts = line.split()
            if len(parts) != 4:
                raise TraceFormatError("expected '#bp <breakpoint> <version> <input>'", lineno)
            header = (parts[1], parts[2], parts[3])
            header_line = lineno
            variables, rounds, rows = None, None, []
        elif header is None:
            raise TraceFormatError("data before the first #bp header", lineno)
        elif line.startswith("#vars"):
            if variables is not None or rows:
                raise TraceFormatError("unexpected #vars line", lineno)
            body = line[len("#vars"):].strip()
            variables = tuple(v.strip() for v in body.split(",")) if body else ()
            if any(not v for v in variables):
                raise TraceFormatError("empty variable name", lineno)
        elif line.startswith("#rounds"):
            if variables is None or rows or rounds is not None:
                raise TraceFormatError("#rounds must directly follow #vars", lineno)
            try:
                rounds = [int(x) for x in line[len("#rounds"):].split(",") if x.strip()]
            except ValueError:
                raise TraceFormatError("malformed #rounds line", lineno) from None
        elif line.startswith("#"):
            raise TraceFormatError(f"unknown directive {line.split()[0]!r}", lineno)
        else:
            if variables is None:
                raise TraceFormatError("data row before #vars", lineno)
            fields = line.split(",")
            if len(fields) != len(variables):
                raise TraceValidationError(
                    f"line {lineno}: expected {len(variables)} values, found {len(fields)}"
                )
            try:
                values = tuple(float(f) for f in fields)
            except ValueError:
                raise TraceFormatError(f"malformed decimal in {line!r}", lineno) from None
            if not all(math.isfinite(v) for v in values):
                raise TraceFormatError("non-finite value", lineno)
            rows.append(values)
    flush()
    return records


def parse_trace_file(path: str | Path) -> list[TraceSet]:
    return parse_traces(Path(path).read_text(encoding="utf-8"))
