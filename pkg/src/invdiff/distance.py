"""Set distances between the invariant sets of two versions for one input."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import AbstractSet, Iterable

from .miner import InvariantSet

CSV_FIELDS = ["breakpoint_id", "input_id", "dice", "jaccard", "overlap",
              "hamming_raw", "hamming_norm", "one_sided"]
# trailing column beyond the fixed schema; readers treat it as optional
STATUS_FIELD = "status"
METRICS = ("dice", "jaccard", "overlap", "hamming_norm")


@dataclass(frozen=True)
class DistanceVector:
    breakpoint_id: str
    input_id: str
    dice: float
    jaccard: float
    overlap: float
    hamming_raw: int
    hamming_norm: float
    one_sided: bool
    status: str = "ok"  # ok | one_sided | no_invariants

    def metric(self, name: str) -> float:
        return getattr(self, name)


def set_distances(u: AbstractSet, v: AbstractSet) -> dict[str, float | int | bool]:
    """Dice, Jaccard, overlap and Hamming distances between two sets.

    Hamming embeds both sets as membership vectors over their sorted union, so
    the raw value is the size of the symmetric difference. Exactly one empty
    side scores the maximum distance; two empty sides score zero.
    """
    nu, nv = len(u), len(v)
    if nu == 0 and nv == 0:
        return dict(dice=0.0, jaccard=0.0, overlap=0.0, hamming_raw=0,
                    hamming_norm=0.0, one_sided=False)
    if nu == 0 or nv == 0:
        return dict(dice=1.0, jaccard=1.0, overlap=1.0, hamming_raw=nu + nv,
                    hamming_norm=1.0, one_sided=True)
    inter = len(u & v)
    union = nu + nv - inter
    hamming = union - inter
    return dict(
        dice=1.0 - 2.0 * inter / (nu + nv),
        jaccard=1.0 - inter / union,
        overlap=1.0 - inter / min(nu, nv),
        hamming_raw=hamming,
        hamming_norm=hamming / union,
        one_sided=False,
    )


def distance_vector(u: InvariantSet | None, v: InvariantSet | None) -> DistanceVector:
    """Distances between the two versions' sets; ``None`` marks a missing version."""
    if u is None and v is None:
        raise ValueError("at least one invariant set is required")
    ref = u if u is not None else v
    other = v if u is not None else u
    if other is not None and (other.breakpoint_id, other.input_id) != (ref.breakpoint_id, ref.input_id):
        raise ValueError(
            f"mismatched sets: {(ref.breakpoint_id, ref.input_id)} vs "
            f"{(other.breakpoint_id, other.input_id)}"
        )
    d = set_distances(u.invariants if u is not None else frozenset(),
                      v.invariants if v is not None else frozenset())
    if d["one_sided"]:
        status = "one_sided"
    elif d["hamming_raw"] == 0 and not (u is not None and len(u)):
        status = "no_invariants"
    else:
        status = "ok"
    return DistanceVector(ref.breakpoint_id, ref.input_id, status=status, **d)


def pair_invariant_sets(
    sets: Iterable[InvariantSet], base: str, target: str
) -> list[DistanceVector]:
    """Distance vectors for every (breakpoint, input) seen under either version."""
    by_key: dict[tuple[str, str], dict[str, InvariantSet]] = {}
    for s in sets:
        if s.version in (base, target):
            by_key.setdefault((s.breakpoint_id, s.input_id), {})[s.version] = s
    return [
        distance_vector(pair.get(base), pair.get(target))
        for _, pair in sorted(by_key.items())
    ]


def _fmt(x: float) -> str:
    return repr(float(x))


def write_distances_csv(path: str | Path, vectors: Iterable[DistanceVector]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS + [STATUS_FIELD])
        for d in vectors:
            w.writerow([d.breakpoint_id, d.input_id, _fmt(d.dice), _fmt(d.jaccard),
                        _fmt(d.overlap), d.hamming_raw, _fmt(d.hamming_norm),
                        "true" if d.one_sided else "false", d.status])


def read_distances_csv(path: str | Path) -> list[DistanceVector]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_FIELDS) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"distances CSV lacks columns {sorted(missing)}")
        for row in reader:
            one_sided = row["one_sided"].strip().lower() in ("true", "1")
            status = row.get(STATUS_FIELD) or ("one_sided" if one_sided else "ok")
            out.append(DistanceVector(
                row["breakpoint_id"], row["input_id"], float(row["dice"]),
                float(row["jaccard"]), float(row["overlap"]), int(row["hamming_raw"]),
                float(row["hamming_norm"]), one_sided, status,
            ))
    return out
