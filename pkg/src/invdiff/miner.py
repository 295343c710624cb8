"""Template-based likely-invariant mining over one TraceSet.

Every template instance that holds on all rows is emitted; implied invariants
are never pruned, so ``x == y`` and ``x == 1*y + 0`` appear side by side.

Catalogue (``v`` ranges over variables, ``p``/``q`` over distinct pairs):

* ``v == c``           v is constant
* ``v >= min``, ``v <= max``   observed bounds
* ``v != 0``           v is never zero
* ``p == q``           equal columns (operands sorted)
* ``p <= q``           both orientations tested independently
* ``p == a*q + b``     integer a in [-4, 4] without 0, integer |b| <= 65536,
                       q non-constant

Pairwise templates need at least two rows.
"""

from __future__ import annotations

import enum
import itertools
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import kernels
from .traces import TraceSet, format_decimal

MAX_SLOPE = 4
MAX_INTERCEPT = 65536
DEFAULT_TIMEOUT = 300.0


class MiningStatus(str, enum.Enum):
    OK = "ok"
    TIMEOUT_PARTIAL = "timeout_partial"
    EMPTY_TRACE = "empty_trace"


def canonical_form(kind: str, operands: Sequence[str], coefficients: Sequence[float] = ()) -> str | None:
    """Render one template instance; ``None`` when a coefficient is out of bounds.

    Kinds: ``const``, ``lower``, ``upper``, ``nonzero``, ``eq``, ``le``, ``linear``.
    ``linear`` takes operands ``(lhs, rhs)`` and coefficients ``(a, b)``.
    """
    if kind == "const":
        return f"{operands[0]} == {format_decimal(coefficients[0])}"
    if kind == "lower":
        return f"{operands[0]} >= {format_decimal(coefficients[0])}"
    if kind == "upper":
        return f"{operands[0]} <= {format_decimal(coefficients[0])}"
    if kind == "nonzero":
        return f"{operands[0]} != 0"
    if kind == "eq":
        a, b = sorted(operands)
        return f"{a} == {b}"
    if kind == "le":
        return f"{operands[0]} <= {operands[1]}"
    if kind == "linear":
        lhs, rhs = operands
        a, b = coefficients
        if a == 0 or a != int(a) or abs(a) > MAX_SLOPE:
            return None
        if b != int(b) or abs(b) > MAX_INTERCEPT:
            return None
        return f"{lhs} == {int(a)}*{rhs} + {int(b)}"
    raise ValueError(f"unknown template kind {kind!r}")


@dataclass(frozen=True)
class InvariantSet:
    breakpoint_id: str
    input_id: str
    version: str
    invariants: frozenset[str] = field(default_factory=frozenset)
    status: MiningStatus = MiningStatus.OK

    def __post_init__(self):
        object.__setattr__(self, "invariants", frozenset(self.invariants))
        object.__setattr__(self, "status", MiningStatus(self.status))
        if self.status is MiningStatus.EMPTY_TRACE and self.invariants:
            raise ValueError("empty_trace sets cannot hold invariants")

    def __len__(self) -> int:
        return len(self.invariants)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.breakpoint_id, self.version, self.input_id)


class _Deadline(Exception):
    pass


def mine_invariants(
    t: TraceSet,
    timeout: float = DEFAULT_TIMEOUT,
    *,
    clock: Callable[[], float] = time.monotonic,
) -> InvariantSet:
    """Mine every catalogue instance that holds on all rows of ``t``.

    When ``timeout`` seconds elapse the invariants found so far are returned
    with status ``timeout_partial``.
    """
    if not t.rows:
        return InvariantSet(t.breakpoint_id, t.input_id, t.version, frozenset(),
                            MiningStatus.EMPTY_TRACE)
    deadline = clock() + timeout
    found: set[str] = set()

    def check():
        if clock() > deadline:
            raise _Deadline

    matrix = t.matrix()
    names = sorted(t.variables)
    cols = {name: matrix[:, t.variables.index(name)].copy() for name in names}
    constant = {}
    try:
        for name in names:
            check()
            col = cols[name]
            lo, hi = float(col.min()), float(col.max())
            constant[name] = lo == hi
            found.add(canonical_form("lower", [name], [lo]))
            found.add(canonical_form("upper", [name], [hi]))
            if lo == hi:
                found.add(canonical_form("const", [name], [lo]))
            if not (col == 0).any():
                found.add(canonical_form("nonzero", [name]))
        if len(t.rows) >= 2:
            for p, q in itertools.combinations(names, 2):
                check()
                mask = kernels.order_relation(cols[p], cols[q])
                if mask & 1:
                    found.add(canonical_form("eq", [p, q]))
                if mask & 2:
                    found.add(canonical_form("le", [p, q]))
                if mask & 4:
                    found.add(canonical_form("le", [q, p]))
                for lhs, rhs in ((p, q), (q, p)):
                    if constant[rhs]:
                        continue
                    ok, a, b = kernels.linear_relation(cols[lhs], cols[rhs], MAX_SLOPE,
                                                       float(MAX_INTERCEPT))
                    if ok:
                        text = canonical_form("linear", [lhs, rhs], [a, b])
                        if text is not None:
                            found.add(text)
    except _Deadline:
        return InvariantSet(t.breakpoint_id, t.input_id, t.version, frozenset(found),
                            MiningStatus.TIMEOUT_PARTIAL)
    return InvariantSet(t.breakpoint_id, t.input_id, t.version, frozenset(found))


def serialize_invariant_sets(sets: Iterable[InvariantSet]) -> str:
    out: list[str] = []
    for s in sets:
        out.append(f"#set {s.breakpoint_id} {s.version} {s.input_id}")
        if s.status is not MiningStatus.OK:
            out.append(f"#status {s.status.value}")
        out.extend(sorted(s.invariants))
    return "\n".join(out) + ("\n" if out else "")


def write_invariant_file(path: str | Path, sets: Iterable[InvariantSet]) -> None:
    Path(path).write_text(serialize_invariant_sets(sets), encoding="utf-8")


def parse_invariant_sets(text: str) -> list[InvariantSet]:
    sets: list[InvariantSet] = []
    header = None
    status = MiningStatus.OK
    items: list[str] = []

    def flush():
        if header is not None:
            bp, version, input_id = header
            sets.append(InvariantSet(bp, input_id, version, frozenset(items), status))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#set"):
            flush()
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(f"line {lineno}: expected '#set <bp> <version> <input>'")
            header = (parts[1], parts[2], parts[3])
            status, items = MiningStatus.OK, []
        elif header is None:
            raise ValueError(f"line {lineno}: invariant before the first #set header")
        elif line.startswith("#status"):
            try:
                status = MiningStatus(line.split()[1])
            except (IndexError, ValueError):
                raise ValueError(f"line {lineno}: bad status line {line!r}") from None
        else:
            items.append(line)
    flush()
    return sets


def read_invariant_file(path: str | Path) -> list[InvariantSet]:
    return parse_invariant_sets(Path(path).read_text(encoding="utf-8"))
