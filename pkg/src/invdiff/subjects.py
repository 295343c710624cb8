"""Built-in subject programs: seven small algorithms in clean, clean_alt and buggy form.

Each version calls ``probe.hit`` where a breakpoint sits in the C reference
source (``subject_sources/<name>.c``, the buggy version) and ``probe.branch``
at branch points used for fuzzing feedback. A probe records the values left
by its breakpoint line; on a ``return`` line (or a tail call) it records them
just before control leaves.

Inputs are byte strings. Integer subjects read little-endian signed 16-bit
values (an odd byte count is rejected); ``string_reversal`` reads the bytes
themselves. Rejected inputs and tripped guards count as crashes.
"""

from __future__ import annotations

import struct
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Mapping, Sequence

from .traces import MAX_VARIABLES, TraceSet, hash_string_value

CLEAN, CLEAN_ALT, BUGGY = "clean", "clean_alt", "buggy"
VERSIONS = (CLEAN, CLEAN_ALT, BUGGY)
INT_MIN = -(2 ** 31)


class SubjectFault(Exception):
    """Raised by a subject when its input is rejected or a guard trips."""


@dataclass(frozen=True)
class BreakpointDecl:
    breakpoint_id: str
    function: str
    line: int
    watched_variables: tuple[str, ...]

    def __post_init__(self):
        if len(self.watched_variables) > MAX_VARIABLES:
            raise ValueError(f"{self.breakpoint_id}: more than {MAX_VARIABLES} watched variables")


@dataclass(frozen=True)
class GroundTruth:
    """Buggy and benign breakpoints plus the buggy source locations (lines in the C file)."""

    buggy_breakpoints: frozenset[str]
    changed_lines: tuple[int, ...]
    bug_lines: tuple[int, ...]
    buggy_functions: frozenset[str]
    benign_lines: tuple[int, ...] = ()
    benign_functions: frozenset[str] = frozenset()


@dataclass(frozen=True)
class SubjectPair:
    name: str
    title: str
    input_schema: str
    versions: Mapping[str, Callable]
    breakpoints: tuple[BreakpointDecl, ...]
    dependency_edges: tuple[tuple[str, str], ...]
    ground_truth: GroundTruth
    seeds: tuple[bytes, ...]
    decode: Callable[[bytes], object]
    notes: str = ""

    def __post_init__(self):
        ids = {b.breakpoint_id for b in self.breakpoints}
        for a, b in self.dependency_edges:
            if a not in ids or b not in ids:
                raise ValueError(f"{self.name}: edge ({a}, {b}) names an unknown breakpoint")
        if not self.ground_truth.buggy_breakpoints <= ids:
            raise ValueError(f"{self.name}: ground truth names an unknown breakpoint")

    @property
    def source_file(self) -> str:
        return f"{self.name}.c"

    def source(self) -> str:
        return resources.files(__package__).joinpath("subject_sources", self.source_file).read_text()

    def breakpoint(self, breakpoint_id: str) -> BreakpointDecl:
        for b in self.breakpoints:
            if b.breakpoint_id == breakpoint_id:
                return b
        raise KeyError(breakpoint_id)

    def describe(self) -> dict:
        gt = self.ground_truth
        return {
            "name": self.name,
            "title": self.title,
            "input_schema": self.input_schema,
            "versions": list(self.versions),
            "source_file": self.source_file,
            "breakpoints": [
                {"breakpoint_id": b.breakpoint_id, "function": b.function, "line": b.line,
                 "watched_variables": list(b.watched_variables)}
                for b in self.breakpoints
            ],
            "dependency_edges": [list(e) for e in self.dependency_edges],
            "ground_truth": {
                "buggy_breakpoints": sorted(gt.buggy_breakpoints),
                "changed_lines": list(gt.changed_lines),
                "buggy": {
                    "files": [self.source_file],
                    "functions": [[self.source_file, f] for f in sorted(gt.buggy_functions)],
                    "lines": [[self.source_file, ln] for ln in gt.bug_lines],
                },
                "benign": {
                    "files": [],
                    "functions": [[self.source_file, f] for f in sorted(gt.benign_functions)],
                    "lines": [[self.source_file, ln] for ln in gt.benign_lines],
                },
            },
            "notes": self.notes,
        }


class Probe:
    """Collects breakpoint rows and branch hit counts during one run."""

    def __init__(self, breakpoints: Sequence[BreakpointDecl]):
        self.decls = {b.breakpoint_id: b for b in breakpoints}
        self.rows: dict[str, list[tuple[int, ...]]] = {b: [] for b in self.decls}
        self.branches: Counter[str] = Counter()

    def hit(self, breakpoint_id: str, **values: int) -> None:
        decl = self.decls[breakpoint_id]
        if set(values) != set(decl.watched_variables):
            raise RuntimeError(f"{breakpoint_id}: probe names {sorted(values)} do not match declaration")
        self.rows[breakpoint_id].append(tuple(values[v] for v in decl.watched_variables))

    def branch(self, label: str) -> None:
        self.branches[label] += 1


@dataclass
class RunResult:
    traces: list[TraceSet]
    outcome: str  # ok | crash
    output: object = None
    coverage: frozenset = field(default_factory=frozenset)

    def __iter__(self):
        yield self.traces
        yield self.outcome


def _bucket(count: int) -> int:
    """Exact counts up to 16, then power-of-two buckets."""
    if count <= 16:
        return count
    return 16 + count.bit_length()


def _magnitude_class(value: int) -> tuple[int, int]:
    return (value > 0) - (value < 0), abs(value).bit_length()


def coverage_signature(probe: Probe, value_profile: bool = True) -> frozenset:
    """Round-count buckets per breakpoint and hit-count buckets per branch probe.

    With ``value_profile`` every watched variable also contributes the set of
    (sign, bit length) classes of the values it took, which separates inputs
    that drive the same control flow with differently sized data.
    """
    sig = {("bp", bp, _bucket(len(rows))) for bp, rows in probe.rows.items()}
    sig |= {("br", label, _bucket(n)) for label, n in probe.branches.items()}
    if value_profile:
        for bp, rows in probe.rows.items():
            names = probe.decls[bp].watched_variables
            for row in rows:
                sig |= {("vp", bp, name, *_magnitude_class(v)) for name, v in zip(names, row)}
    return frozenset(sig)


def default_input_id(data: bytes) -> str:
    return f"{hash_string_value(data):016x}"


def run_subject(subject: SubjectPair, version: str, data: bytes,
                input_id: str | None = None) -> RunResult:
    """Execute ``version`` of ``subject`` on ``data``; one TraceSet per declared breakpoint."""
    if version not in subject.versions:
        raise KeyError(f"{subject.name} has no version {version!r}")
    input_id = input_id or default_input_id(data)
    probe = Probe(subject.breakpoints)
    outcome, output = "ok", None
    try:
        decoded = subject.decode(data)
        output = subject.versions[version](decoded, probe)
    except (SubjectFault, IndexError, ZeroDivisionError, RecursionError):
        outcome = "crash"
    traces = [
        TraceSet.from_values(input_id, version, b.breakpoint_id, b.watched_variables,
                             probe.rows[b.breakpoint_id])
        for b in subject.breakpoints
    ]
    return RunResult(traces, outcome, output, coverage_signature(probe))


# -- input decoding ---------------------------------------------------------

def _int16s(data: bytes, min_len: int, max_len: int) -> list[int]:
    if len(data) % 2:
        raise SubjectFault("odd byte count")
    n = len(data) // 2
    if not min_len <= n <= max_len:
        raise SubjectFault(f"expected {min_len}..{max_len} integers, got {n}")
    return list(struct.unpack(f"<{n}h", data))


def encode_ints(values: Sequence[int]) -> bytes:
    return struct.pack(f"<{len(values)}h", *values)


# -- array concatenation ----------------------------------------------------
# Second half of the input is appended to the first half.

def _concat_clean(xs, p):
    na = len(xs) // 2
    a, b = xs[:na], xs[na:]
    nb = len(b)
    out = [0] * (na + nb)
    for i in range(na):
        out[i] = a[i]
        p.hit("concat_first", i=i, val=out[i])
    for j in range(nb):
        out[na + j] = b[j]
        p.hit("concat_second", j=j, k=na + j + 1, val=out[na + j], na=na, nb=nb)
    p.hit("concat_ret", total=na + nb, na=na, nb=nb, checksum=sum(out))
    return out


def _concat_alt(xs, p, start=0):
    na = len(xs) // 2
    a, b = xs[:na], xs[na:]
    nb = len(b)
    out = [0] * (na + nb)
    k = 0
    for i in range(na):
        out[k] = a[i]
        k += 1
        p.hit("concat_first", i=i, val=out[k - 1])
    j = start
    while j < nb:
        out[k] = b[j]
        k += 1
        p.hit("concat_second", j=j, k=k, val=out[k - 1], na=na, nb=nb)
        j += 1
    p.hit("concat_ret", total=k, na=na, nb=nb, checksum=sum(out[:k]))
    return out[:k]


def _concat_buggy(xs, p):
    # second loop starts at 1: the first element of b is dropped
    return _concat_alt(xs, p, start=1)


# -- bubble sort ------------------------------------------------------------

def _bubble_clean(xs, p):
    a = list(xs)
    n = len(a)
    for i in range(n - 1):
        for j in range(n - 1 - i):
            if a[j] > a[j + 1]:
                p.branch("swap")
                a[j], a[j + 1] = a[j + 1], a[j]
            p.hit("sort_inner", i=i, j=j, left=a[j], right=a[j + 1])
        p.hit("sort_outer", i=i, placed=a[n - 1 - i])
    p.hit("sort_ret", n=n, first=a[0], last=a[n - 1])
    return a


def _bubble_alt(xs, p, shrink=1):
    a = list(xs)
    n = len(a)
    i = 0
    while i < n - 1:
        j = 0
        while j < n - shrink - i:
            if a[j] > a[j + 1]:
                p.branch("swap")
                tmp = a[j]
                a[j] = a[j + 1]
                a[j + 1] = tmp
            p.hit("sort_inner", i=i, j=j, left=a[j], right=a[j + 1])
            j += 1
        p.hit("sort_outer", i=i, placed=a[n - 1 - i])
        i += 1
    p.hit("sort_ret", n=n, first=a[0], last=a[n - 1])
    return a


def _bubble_buggy(xs, p):
    # inner loop stops one comparison early
    return _bubble_alt(xs, p, shrink=2)


# -- factorial --------------------------------------------------------------
# n = x mod 13 keeps the result within 32-bit range; negative x is rejected.

def _fact_arg(xs):
    if xs[0] < 0:
        raise SubjectFault("negative argument")
    return xs[0] % 13


def _fact_clean(xs, p):
    n = _fact_arg(xs)
    acc = 1
    for i in range(1, n + 1):
        acc *= i
        p.hit("fact_loop", i=i, acc=acc)
    p.hit("fact_ret", n=n, acc=acc)
    return acc


def _fact_alt(xs, p, inclusive=True):
    n = _fact_arg(xs)
    acc = 1
    i = 1
    while (i <= n) if inclusive else (i < n):
        acc = acc * i
        p.hit("fact_loop", i=i, acc=acc)
        i += 1
    p.hit("fact_ret", n=n, acc=acc)
    return acc


def _fact_buggy(xs, p):
    # loop exit tightened from i <= n to i < n
    return _fact_alt(xs, p, inclusive=False)


# -- greatest common divisor ------------------------------------------------

def _gcd_args(xs):
    a, b = abs(xs[0]), abs(xs[1])
    if a == 0 or b == 0:
        raise SubjectFault("gcd needs two non-zero integers")
    return a, b


def _gcd_clean(xs, p):
    a, b = _gcd_args(xs)
    while b != 0:
        p.hit("gcd_step", a=a, b=b)
        a, b = b, a % b
    p.hit("gcd_ret", g=a)
    return a


def _gcd_alt(xs, p, buggy=False):
    a, b = _gcd_args(xs)

    def rec(a, b):
        if a == 0:
            return b
        p.hit("gcd_step", a=a, b=b)
        if buggy:
            return rec(b % a, b)
        return rec(b % a, a)

    g = rec(a, b)
    p.hit("gcd_ret", g=g)
    return g


def _gcd_buggy(xs, p):
    return _gcd_alt(xs, p, buggy=True)


# -- permutation ------------------------------------------------------------

def _perm_weight(a):
    return sum((i + 1) * v for i, v in enumerate(a))


def _perm_clean(xs, p):
    a = list(xs)
    n = len(a)
    state = {"count": 0}

    def rec(l):
        if l == n - 1:
            state["count"] += 1
            p.hit("perm_emit", count=state["count"], first=a[0], last=a[n - 1], weight=_perm_weight(a))
            return
        for i in range(l, n):
            a[l], a[i] = a[i], a[l]
            rec(l + 1)
            p.hit("perm_step", l=l, i=i, first=a[0], last=a[n - 1], weight=_perm_weight(a))
            a[l], a[i] = a[i], a[l]

    rec(0)
    p.hit("perm_ret", n=n, count=state["count"])
    return state["count"]


def _perm_alt(xs, p, backtrack=True):
    a = list(xs)
    n = len(a)
    state = {"count": 0}

    def rec(l):
        if l == n - 1:
            state["count"] += 1
            p.hit("perm_emit", count=state["count"], first=a[0], last=a[n - 1], weight=_perm_weight(a))
            return
        for i in range(n - 1, l - 1, -1):
            a[l], a[i] = a[i], a[l]
            rec(l + 1)
            p.hit("perm_step", l=l, i=i, first=a[0], last=a[n - 1], weight=_perm_weight(a))
            if backtrack:
                a[l], a[i] = a[i], a[l]

    rec(0)
    p.hit("perm_ret", n=n, count=state["count"])
    return state["count"]


def _perm_buggy(xs, p):
    # the undo-swap after the recursive call is missing
    return _perm_alt(xs, p, backtrack=False)


# -- second maximum search --------------------------------------------------

def _smax_args(xs):
    if len(xs) < 2:
        raise SubjectFault("need at least two elements")
    return xs


def _smax_clean(xs, p):
    arr = _smax_args(xs)
    mx, sec = arr[0], INT_MIN
    for i in range(1, len(arr)):
        x = arr[i]
        if x > mx:
            p.branch("new_max")
            sec = mx
            mx = x
        elif x > sec and x != mx:
            p.branch("new_sec")
            sec = x
        p.hit("smax_loop", i=i, x=x, max=mx, sec=sec)
    p.hit("smax_ret", n=len(arr), max=mx, sec=sec)
    return sec


def _smax_alt(xs, p, buggy=False):
    arr = _smax_args(xs)
    mx, sec = arr[0], INT_MIN
    for i in range(1, len(arr)):
        x = arr[i]
        if x > mx:
            p.branch("new_max")
        elif x > sec and x != mx:
            p.branch("new_sec")
        if buggy:
            sec = sec if x > mx else (x if (x > sec and x != mx) else sec)
        else:
            sec = mx if x > mx else (x if (x > sec and x != mx) else sec)
        mx = x if x > mx else mx
        p.hit("smax_loop", i=i, x=x, max=mx, sec=sec)
    p.hit("smax_ret", n=len(arr), max=mx, sec=sec)
    return sec


def _smax_buggy(xs, p):
    # ternary assigns sec to itself when a new maximum arrives
    return _smax_alt(xs, p, buggy=True)


# -- string reversal --------------------------------------------------------

def _str_arg(data: bytes) -> bytearray:
    if len(data) > 32:
        raise SubjectFault("string longer than 32 bytes")
    if 0 in data:
        raise SubjectFault("embedded NUL")
    return bytearray(data)


def _rev_clean(s, p):
    s = bytearray(s)
    n = len(s)
    i, j = 0, n - 1
    while i < j:
        s[i], s[j] = s[j], s[i]
        p.hit("rev_swap", i=i, j=j, ci=s[i], cj=s[j])
        i += 1
        j -= 1
    p.hit("rev_ret", n=n, digest=hash_string_value(bytes(s)))
    return bytes(s)


def _rev_alt(s, p, limit=None):
    s = bytearray(s)
    n = len(s)
    stop = n // 2 if limit is None else limit(n)
    for i in range(stop):
        j = n - 1 - i
        tmp = s[i]
        s[i] = s[j]
        s[j] = tmp
        p.hit("rev_swap", i=i, j=j, ci=s[i], cj=s[j])
    p.hit("rev_ret", n=n, digest=hash_string_value(bytes(s)))
    return bytes(s)


def _rev_buggy(s, p):
    # loop bound (n - 1) / 2 skips the middle pair of even-length strings
    return _rev_alt(s, p, limit=lambda n: (n - 1) // 2 if n > 0 else 0)


# -- registry ---------------------------------------------------------------

def _bp(bid, func, line, *names):
    return BreakpointDecl(bid, func, line, tuple(names))


def _build() -> dict[str, SubjectPair]:
    subjects = [
        SubjectPair(
            name="array_concat",
            title="array concatenation",
            input_schema="int16 little-endian array, 0..16 values; halves are concatenated",
            versions={CLEAN: _concat_clean, CLEAN_ALT: _concat_alt, BUGGY: _concat_buggy},
            breakpoints=(
                _bp("concat_first", "concat", 7, "i", "val"),
                _bp("concat_second", "concat", 11, "j", "k", "val", "na", "nb"),
                _bp("concat_ret", "concat", 13, "total", "na", "nb", "checksum"),
            ),
            dependency_edges=(("concat_second", "concat_ret"), ("concat_first", "concat_ret")),
            ground_truth=GroundTruth(frozenset({"concat_second"}), changed_lines=(9,),
                                     bug_lines=(9,), buggy_functions=frozenset({"concat"}),
                                     benign_lines=(7, 13)),
            seeds=(encode_ints([1, 2, 3, 4]), encode_ints([7, -3, 12, 0, 5, 9])),
            decode=lambda d: _int16s(d, 0, 16),
            notes="clean_alt: single running output index with a while loop; "
                  "buggy: second copy loop starts at index 1.",
        ),
        SubjectPair(
            name="bubble_sort",
            title="bubble sort",
            input_schema="int16 little-endian array, 1..16 values",
            versions={CLEAN: _bubble_clean, CLEAN_ALT: _bubble_alt, BUGGY: _bubble_buggy},
            breakpoints=(
                _bp("sort_inner", "bubble_sort", 9, "i", "j", "left", "right"),
                _bp("sort_outer", "bubble_sort", 11, "i", "placed"),
                _bp("sort_ret", "bubble_sort", 13, "n", "first", "last"),
            ),
            dependency_edges=(("sort_inner", "sort_outer"), ("sort_outer", "sort_ret")),
            ground_truth=GroundTruth(frozenset({"sort_inner"}), changed_lines=(7,),
                                     bug_lines=(7,), buggy_functions=frozenset({"bubble_sort"}),
                                     benign_lines=(11, 13)),
            seeds=(encode_ints([5, 1, 4, 2, 8]), encode_ints([3, 2, 1])),
            decode=lambda d: _int16s(d, 1, 16),
            notes="clean_alt: while loops and a temporary for the swap; "
                  "buggy: inner loop bound n - 2 - i.",
        ),
        SubjectPair(
            name="factorial",
            title="factorial",
            input_schema="one int16 x >= 0; computes (x mod 13)!",
            versions={CLEAN: _fact_clean, CLEAN_ALT: _fact_alt, BUGGY: _fact_buggy},
            breakpoints=(
                _bp("fact_loop", "factorial", 8, "i", "acc"),
                _bp("fact_ret", "factorial", 10, "n", "acc"),
            ),
            dependency_edges=(("fact_loop", "fact_ret"),),
            ground_truth=GroundTruth(frozenset({"fact_loop"}), changed_lines=(7,),
                                     bug_lines=(7,), buggy_functions=frozenset({"factorial"}),
                                     benign_lines=(10,)),
            seeds=(encode_ints([5]),),
            decode=lambda d: _int16s(d, 1, 1),
            notes="clean_alt: while loop; buggy: loop condition i < n instead of i <= n.",
        ),
        SubjectPair(
            name="gcd",
            title="greatest common divisor",
            input_schema="two non-zero int16 values (absolute values are used)",
            versions={CLEAN: _gcd_clean, CLEAN_ALT: _gcd_alt, BUGGY: _gcd_buggy},
            breakpoints=(
                _bp("gcd_step", "gcd_rec", 8, "a", "b"),
                _bp("gcd_ret", "gcd", 15, "g"),
            ),
            dependency_edges=(("gcd_step", "gcd_ret"),),
            ground_truth=GroundTruth(frozenset({"gcd_step"}), changed_lines=(8,),
                                     bug_lines=(8,), buggy_functions=frozenset({"gcd_rec"}),
                                     benign_lines=(15,), benign_functions=frozenset({"gcd"})),
            seeds=(encode_ints([12, 8]), encode_ints([35, 21])),
            decode=lambda d: _int16s(d, 2, 2),
            notes="clean is iterative Euclid; clean_alt recurses as gcd(b % a, a) with swapped "
                  "parameters, so its traces differ legitimately; buggy recurses as gcd(b % a, b).",
        ),
        SubjectPair(
            name="permutation",
            title="permutation",
            input_schema="int16 little-endian array, 1..5 values; enumerates all orderings",
            versions={CLEAN: _perm_clean, CLEAN_ALT: _perm_alt, BUGGY: _perm_buggy},
            breakpoints=(
                _bp("perm_emit", "permute", 6, "count", "first", "last", "weight"),
                _bp("perm_step", "permute", 10, "l", "i", "first", "last", "weight"),
                _bp("perm_ret", "permutations", 17, "n", "count"),
            ),
            dependency_edges=(("perm_step", "perm_emit"), ("perm_step", "perm_ret")),
            ground_truth=GroundTruth(frozenset({"perm_step"}), changed_lines=(10,),
                                     bug_lines=(10,), buggy_functions=frozenset({"permute"}),
                                     benign_lines=(6, 17),
                                     benign_functions=frozenset({"permutations"})),
            seeds=(encode_ints([1, 2, 3]), encode_ints([4, 1, 3, 2])),
            decode=lambda d: _int16s(d, 1, 5),
            notes="clean swaps positions l..n-1 in ascending order; clean_alt walks them in "
                  "descending order (same set of permutations, different emission order); "
                  "buggy omits the undo-swap after the recursive call (changed line 10 marks "
                  "the deletion point).",
        ),
        SubjectPair(
            name="second_max",
            title="second maximum search",
            input_schema="int16 little-endian array, 2..16 values",
            versions={CLEAN: _smax_clean, CLEAN_ALT: _smax_alt, BUGGY: _smax_buggy},
            breakpoints=(
                _bp("smax_loop", "second_max", 10, "i", "x", "max", "sec"),
                _bp("smax_ret", "second_max", 12, "n", "max", "sec"),
            ),
            dependency_edges=(("smax_loop", "smax_ret"),),
            ground_truth=GroundTruth(frozenset({"smax_loop"}), changed_lines=(9,),
                                     bug_lines=(9,), buggy_functions=frozenset({"second_max"}),
                                     benign_lines=(12,)),
            seeds=(encode_ints([5, 3, 9, 1]), encode_ints([2, 7, 7, 4, 1])),
            decode=lambda d: _int16s(d, 2, 16),
            notes="clean uses if/else; clean_alt the equivalent ternaries; buggy assigns sec "
                  "to itself when a new maximum arrives.",
        ),
        SubjectPair(
            name="string_reversal",
            title="string reversal",
            input_schema="raw bytes, 0..32 long, no NUL byte",
            versions={CLEAN: _rev_clean, CLEAN_ALT: _rev_alt, BUGGY: _rev_buggy},
            breakpoints=(
                _bp("rev_swap", "reverse", 11, "i", "j", "ci", "cj"),
                _bp("rev_ret", "reverse", 13, "n", "digest"),
            ),
            dependency_edges=(("rev_swap", "rev_ret"),),
            ground_truth=GroundTruth(frozenset({"rev_swap"}), changed_lines=(7,),
                                     bug_lines=(7,), buggy_functions=frozenset({"reverse"}),
                                     benign_lines=(13,)),
            seeds=(b"hello", b"abcdef"),
            decode=_str_arg,
            notes="clean uses two converging pointers; clean_alt a counted loop; buggy bounds "
                  "the loop by (n - 1) / 2. digest is the 64-bit FNV-1a of the result.",
        ),
    ]
    return {s.name: s for s in subjects}


SUBJECTS: dict[str, SubjectPair] = _build()


def list_subjects() -> list[SubjectPair]:
    return list(SUBJECTS.values())


def get_subject(name: str) -> SubjectPair:
    try:
        return SUBJECTS[name]
    except KeyError:
        raise KeyError(f"unknown subject {name!r}; choose from {sorted(SUBJECTS)}") from None


def subjects_manifest() -> dict:
    return {"subjects": [s.describe() for s in list_subjects()]}
