"""A small coverage-guided mutational fuzzer and corpus directories.

The campaign keeps an input when it runs without a crash and produces a
coverage signature (breakpoint round-count buckets plus branch probes) not seen
before. All choices come from one seeded ``random.Random``.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .subjects import SubjectPair, default_input_id, run_subject

log = logging.getLogger(__name__)

META_FILE = "corpus.meta.json"
MAX_INPUT_BYTES = 64
_INTERESTING = (0x00, 0x01, 0x7F, 0x80, 0xFF, 0x10, 0x20, 0x40)


@dataclass(frozen=True)
class Corpus:
    entries: tuple[tuple[str, bytes], ...]
    origin: str = "generated"  # generated | imported
    seed: int = 0
    budget: int = 0
    crashes: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((i, bytes(d)) for i, d in self.entries))
        ids = [i for i, _ in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("corpus input ids must be unique")
        if self.origin not in ("generated", "imported"):
            raise ValueError(f"unknown corpus origin {self.origin!r}")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def ids(self) -> list[str]:
        return [i for i, _ in self.entries]


# -- mutation operators -----------------------------------------------------

def _bit_flip(data: bytearray, rng: random.Random) -> None:
    if data:
        pos = rng.randrange(len(data))
        data[pos] ^= 1 << rng.randrange(8)


def _byte_subst(data: bytearray, rng: random.Random) -> None:
    if data:
        pos = rng.randrange(len(data))
        data[pos] = rng.choice(_INTERESTING) if rng.random() < 0.25 else rng.randrange(256)


def _block_dup(data: bytearray, rng: random.Random) -> None:
    if data:
        start = rng.randrange(len(data))
        size = rng.randint(1, min(8, len(data) - start))
        at = rng.randrange(len(data) + 1)
        data[at:at] = data[start:start + size]


def _block_del(data: bytearray, rng: random.Random) -> None:
    if len(data) > 1:
        start = rng.randrange(len(data))
        size = rng.randint(1, min(8, len(data) - start))
        del data[start:start + size]


def _length_change(data: bytearray, rng: random.Random) -> None:
    step = rng.choice((1, 2))
    if rng.random() < 0.5 and len(data) >= step:
        del data[len(data) - step:]
    else:
        data.extend(rng.randrange(256) for _ in range(step))


MUTATORS = (_bit_flip, _byte_subst, _block_dup, _block_del, _length_change)


def mutate(data: bytes, rng: random.Random, max_len: int = MAX_INPUT_BYTES) -> bytes:
    """Apply one to four uniformly chosen operators."""
    out = bytearray(data)
    for _ in range(rng.randint(1, 4)):
        rng.choice(MUTATORS)(out, rng)
    return bytes(out[:max_len])


def fuzz_campaign(subject: SubjectPair, version: str, budget: int, seed: int = 0,
                  seeds: Iterable[bytes] | None = None) -> Corpus:
    """Grow a corpus for ``version`` of ``subject`` over ``budget`` mutation rounds.

    Seed inputs are executed first and retained like any other input; the
    budget counts mutated executions only.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    rng = random.Random(seed)
    seen: set[frozenset] = set()
    entries: list[tuple[str, bytes]] = []
    crashes: list[str] = []

    def consider(data: bytes) -> None:
        result = run_subject(subject, version, data)
        if result.outcome != "ok":
            crashes.append(default_input_id(data))
            return
        if result.coverage in seen:
            return
        seen.add(result.coverage)
        entries.append((default_input_id(data), data))

    for s in (subject.seeds if seeds is None else seeds):
        consider(bytes(s))
    for _ in range(budget):
        parent = rng.choice(entries)[1] if entries else bytes(rng.randrange(256) for _ in range(4))
        consider(mutate(parent, rng))
    if crashes:
        log.info("%s/%s: %d crashing executions discarded", subject.name, version, len(crashes))
    return Corpus(tuple(entries), "generated", seed, budget, tuple(crashes))


def filter_non_crashing(c: Corpus, subject: SubjectPair, version: str) -> Corpus:
    """Keep the entries that run without a crash on ``version``."""
    kept, dropped = [], []
    for input_id, data in c.entries:
        if run_subject(subject, version, data, input_id).outcome == "ok":
            kept.append((input_id, data))
        else:
            dropped.append(input_id)
    if c.entries and not kept:
        log.warning("every corpus entry crashes %s/%s", subject.name, version)
    return Corpus(tuple(kept), c.origin, c.seed, c.budget, c.crashes + tuple(dropped))


# -- corpus directories -----------------------------------------------------

def import_corpus(directory: str | Path, dedup: bool = False) -> Corpus:
    """One entry per regular file (sorted by name); ``input_id`` is the file name."""
    d = Path(directory)
    if not d.is_dir():
        raise NotADirectoryError(str(d))
    entries = []
    contents = set()
    for p in sorted(d.iterdir()):
        if p.name == META_FILE or p.name.startswith(".") or not p.is_file():
            continue
        try:
            data = p.read_bytes()
        except OSError as exc:
            log.warning("skipping unreadable corpus file %s: %s", p, exc)
            continue
        if dedup and data in contents:
            continue
        contents.add(data)
        entries.append((p.name, data))
    return Corpus(tuple(entries), "imported", 0, 0)


def write_corpus(c: Corpus, directory: str | Path, **meta) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for input_id, data in c.entries:
        (d / input_id).write_bytes(data)
    doc = {"origin": c.origin, "seed": c.seed, "budget": c.budget,
           "entries": c.ids, "n_crashes": len(c.crashes), **meta}
    (d / META_FILE).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_corpus(directory: str | Path) -> Corpus:
    """Load a corpus directory, keeping the recorded entry order and origin when metadata exists."""
    d = Path(directory)
    meta_path = d / META_FILE
    if not meta_path.exists():
        return import_corpus(d)
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    files = dict(import_corpus(d).entries)
    order = [i for i in meta.get("entries", []) if i in files]
    order += sorted(set(files) - set(order))
    return Corpus(tuple((i, files[i]) for i in order), meta.get("origin", "imported"),
                  int(meta.get("seed", 0)), int(meta.get("budget", 0)))
