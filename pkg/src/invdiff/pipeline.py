"""End-to-end pipeline: fuzz, trace, sample, mine, diff, analyze, group, evaluate.

Every stage reads the previous stage's files and writes its own, so any stage
can be replayed (or replaced by an external tool) from the files alone. The
run directory layout::

    run.json                     configuration and derived seeds
    subjects.json                subject manifest (subject runs only)
    corpus/                      non-crashing inputs plus corpus.meta.json
    traces/<version>.trace       sampled traces per version
    invariants/<version>.inv     mined invariant sets per version
    distances.csv                one distance vector per (breakpoint, input)
    reports/<bp>.json            per-breakpoint report
    reports/index.json           all reports plus subject-level peaks
    density/<bp>__<metric>.csv   KDE curve on the [0, 1] grid
    groups.json                  grouped verdicts
    evaluation/summary.csv|json  hit rates and false alarms
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .blocks import parse_blocks, read_warnings_csv
from .depgraph import group_breakpoints, merge_flags, read_edges_csv
from .distance import METRICS, DistanceVector, pair_invariant_sets, read_distances_csv, write_distances_csv
from .evaluation import (Flag, evaluate_bugs, flags_from_annotations, summarize,
                         truth_from_manifest, write_summary)
from .fuzz import Corpus, filter_non_crashing, fuzz_campaign, read_corpus, write_corpus
from .kde import FlagConfig, BreakpointReport, flag_breakpoint, group_by_breakpoint, write_density_csv
from .miner import DEFAULT_TIMEOUT, InvariantSet, mine_invariants, read_invariant_file, write_invariant_file
from .subjects import BUGGY, CLEAN, SubjectPair, get_subject, run_subject, subjects_manifest
from .traces import DEFAULT_TRACE_CAP, TraceSet, hash_string_value, parse_trace_file, sample_traces, write_trace_file

log = logging.getLogger(__name__)

OUTPUT_ENV = "INVDIFF_OUTPUT_DIR"
TOOL_NAME = "invdiff"


class ConfigError(ValueError):
    """Invalid or incomplete configuration; maps to exit status 2."""


class StageError(RuntimeError):
    """A stage failed; earlier stage outputs are left in place. Exit status 3."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage} failed: {cause}")


@dataclass
class PipelineConfig:
    subject: str | None = None
    traces: list[str] = field(default_factory=list)
    corpus_dir: str | None = None
    base_version: str = CLEAN
    target_version: str = BUGGY
    fuzz_version: str | None = None
    fuzz_budget: int = 5000
    seed: int = 0
    trace_cap: int = DEFAULT_TRACE_CAP
    mining_timeout: float = DEFAULT_TIMEOUT
    bandwidth: float | str = "auto"
    zero_tolerance: float = 0.01
    flag_threshold: int = 2
    min_inputs: int = 5
    edges: str | None = None
    warnings: str | None = None
    output_dir: str = "invdiff-run"

    def validate(self) -> None:
        if not self.subject and not self.traces:
            raise ConfigError("either a subject or trace files are required")
        if self.subject and self.traces:
            raise ConfigError("give a subject or trace files, not both")
        if self.subject:
            try:
                s = get_subject(self.subject)
            except KeyError as exc:
                raise ConfigError(str(exc.args[0])) from None
            for v in (self.base_version, self.target_version, self.fuzz_version or self.target_version):
                if v not in s.versions:
                    raise ConfigError(f"{self.subject} has no version {v!r}")
        for p in self.traces:
            if not Path(p).is_file():
                raise ConfigError(f"trace file not found: {p}")
        for label, p in (("corpus_dir", self.corpus_dir), ("edges", self.edges), ("warnings", self.warnings)):
            if p is not None and not Path(p).exists():
                raise ConfigError(f"{label} not found: {p}")
        for name in ("fuzz_budget", "trace_cap", "min_inputs"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if not self.mining_timeout > 0:
            raise ConfigError("mining_timeout must be positive")
        if not 1 <= self.flag_threshold <= len(METRICS):
            raise ConfigError("flag_threshold must be within 1..4")
        if self.zero_tolerance < 0:
            raise ConfigError("zero_tolerance must be non-negative")
        if self.bandwidth != "auto":
            try:
                ok = float(self.bandwidth) > 0
            except (TypeError, ValueError):
                ok = False
            if not ok:
                raise ConfigError("bandwidth must be 'auto' or a positive number")
        if self.base_version == self.target_version and not self.subject:
            raise ConfigError("trace runs need two distinct versions")

    def flag_config(self) -> FlagConfig:
        bw = self.bandwidth if self.bandwidth == "auto" else float(self.bandwidth)
        return FlagConfig(bw, self.zero_tolerance, self.flag_threshold, self.min_inputs)

    def to_json(self) -> dict:
        doc = dataclasses.asdict(self)
        doc.pop("output_dir")  # runs in different directories must produce identical trees
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config file must hold a JSON object")
        return cls.from_dict(doc)


def resolve_output_dir(explicit: str | None, config: PipelineConfig | None = None) -> Path:
    """Command-line value first, then the environment, then the config file."""
    if explicit:
        return Path(explicit)
    env = os.environ.get(OUTPUT_ENV)
    if env:
        return Path(env)
    return Path(config.output_dir if config else "invdiff-run")


def sampling_seed(seed: int, input_id: str, breakpoint_id: str) -> int:
    """Row-sampling seed shared by both versions of one (input, breakpoint)."""
    return (seed * 0x9E3779B97F4A7C15 ^ hash_string_value(f"{input_id}\x00{breakpoint_id}")) & ((1 << 64) - 1)


def _dump_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _stage(name: str, fn: Callable, *args, **kwargs):
    log.info("stage %s", name)
    try:
        return fn(*args, **kwargs)
    except (ConfigError, StageError):
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


# -- stages -----------------------------------------------------------------

def stage_fuzz(subject: SubjectPair, version: str, budget: int, seed: int,
               keep_versions: Sequence[str], out_dir: Path | None = None) -> Corpus:
    """Fuzz ``version`` and keep inputs that run cleanly on every version in ``keep_versions``."""
    corpus = fuzz_campaign(subject, version, budget, seed)
    n_generated = len(corpus)
    for v in dict.fromkeys(keep_versions):
        corpus = filter_non_crashing(corpus, subject, v)
    if out_dir is not None:
        write_corpus(corpus, out_dir, subject=subject.name, fuzzed_version=version,
                     filtered_against=list(dict.fromkeys(keep_versions)), n_generated=n_generated)
    return corpus


def stage_trace(subject: SubjectPair, corpus: Iterable[tuple[str, bytes]], version: str,
                cap: int, seed: int, out_file: Path | None = None) -> list[TraceSet]:
    """Run every corpus input on ``version``; one sampled TraceSet per (input, breakpoint)."""
    traces = []
    for input_id, data in corpus:
        result = run_subject(subject, version, data, input_id)
        if result.outcome != "ok":
            raise RuntimeError(f"input {input_id} crashes {subject.name}/{version}")
        for t in result.traces:
            traces.append(sample_traces(t, cap, sampling_seed(seed, input_id, t.breakpoint_id)))
    if out_file is not None:
        write_trace_file(out_file, traces)
    return traces


def sample_trace_sets(traces: Iterable[TraceSet], cap: int, seed: int) -> list[TraceSet]:
    return [sample_traces(t, cap, sampling_seed(seed, t.input_id, t.breakpoint_id)) for t in traces]


def stage_mine(traces: Iterable[TraceSet], timeout: float,
               out_file: Path | None = None) -> list[InvariantSet]:
    sets = [mine_invariants(t, timeout) for t in traces]
    if out_file is not None:
        write_invariant_file(out_file, sets)
    return sets


def stage_diff(sets: Iterable[InvariantSet], base: str, target: str,
               out_file: Path | None = None) -> list[DistanceVector]:
    vectors = pair_invariant_sets(sets, base, target)
    if out_file is not None:
        write_distances_csv(out_file, vectors)
    return vectors


def stage_analyze(vectors: Sequence[DistanceVector], config: FlagConfig,
                  out_dir: Path | None = None,
                  breakpoints: Sequence[str] = ()) -> dict[str, BreakpointReport]:
    """Flag decision per breakpoint; declared breakpoints without vectors report ``unreached``."""
    grouped = group_by_breakpoint(vectors)
    for bp in breakpoints:
        grouped.setdefault(bp, [])
    reports = {bp: flag_breakpoint(vs, config, bp) for bp, vs in sorted(grouped.items())}
    if out_dir is not None:
        write_reports(out_dir, reports)
    return reports


def subject_level_peaks(reports: dict[str, BreakpointReport]) -> dict[str, float]:
    """Largest peak distance per metric over every analysed breakpoint."""
    return {m: max((r.largest_peak_distance[m] for r in reports.values() if r.status == "ok"),
                   default=0.0) for m in METRICS}


def write_reports(out_dir: Path, reports: dict[str, BreakpointReport]) -> None:
    rep_dir = out_dir / "reports"
    dens_dir = out_dir / "density"
    rep_dir.mkdir(parents=True, exist_ok=True)
    dens_dir.mkdir(parents=True, exist_ok=True)
    for bp, r in reports.items():
        _dump_json(rep_dir / f"{bp}.json", r.to_json())
        for m, est in r.densities.items():
            write_density_csv(dens_dir / f"{bp}__{m}.csv", est)
    _dump_json(rep_dir / "index.json", {
        "breakpoints": [{"breakpoint_id": bp, "status": r.status, "flagged": r.flagged,
                         "nonzero_peak_metrics": r.nonzero_peak_metrics, "n_inputs": r.n_inputs}
                        for bp, r in reports.items()],
        "flagged": sorted(bp for bp, r in reports.items() if r.flagged),
        "largest_peak_distance": subject_level_peaks(reports),
    })


def read_reports(out_dir: Path) -> dict[str, dict]:
    rep_dir = Path(out_dir) / "reports"
    return {p.stem: json.loads(p.read_text(encoding="utf-8"))
            for p in sorted(rep_dir.glob("*.json")) if p.name != "index.json"}


def stage_group(breakpoints: Sequence[str], edges: Iterable[tuple[str, str]],
                flags: dict[str, bool], buggy: Iterable[str] = (),
                out_file: Path | None = None) -> dict:
    groups = group_breakpoints(breakpoints, edges)
    doc = merge_flags(groups, flags, buggy).to_json()
    if out_file is not None:
        _dump_json(out_file, doc)
    return doc


def subject_flags(subject: SubjectPair, flagged: Iterable[str]) -> list[Flag]:
    lines = {b.breakpoint_id: b.line for b in subject.breakpoints}
    return [Flag(TOOL_NAME, subject.source_file, lines[bp], breakpoint_id=bp)
            for bp in sorted(flagged) if bp in lines]


def stage_evaluate(subjects: Sequence[SubjectPair], flags: Sequence[Flag],
                   out_dir: Path | None = None, tools: Iterable[str] = (TOOL_NAME,)) -> list:
    manifest = {"subjects": [s.describe() for s in subjects]}
    trees = {s.source_file: parse_blocks(s.source(), s.source_file) for s in subjects}
    bundle = truth_from_manifest(manifest, trees)
    for t in bundle.truths:
        t.check_containment(trees)
    results = evaluate_bugs(flags, bundle.truths, trees, tools)
    rows = summarize(results)
    if out_dir is not None:
        ev = out_dir / "evaluation"
        ev.mkdir(parents=True, exist_ok=True)
        write_summary(ev / "summary.csv", ev / "summary.json", rows, results)
    return rows


# -- orchestration ----------------------------------------------------------

@dataclass
class RunResult:
    output_dir: Path
    reports: dict[str, BreakpointReport]
    groups: dict
    summary: list = field(default_factory=list)
    n_inputs: int = 0


def run_pipeline(config: PipelineConfig, output_dir: str | Path | None = None) -> RunResult:
    config.validate()
    out = Path(output_dir) if output_dir is not None else resolve_output_dir(None, config)
    out.mkdir(parents=True, exist_ok=True)
    base, target = config.base_version, config.target_version
    versions = list(dict.fromkeys([base, target]))

    run_doc = {"config": config.to_json(), "derived": {
        "sampling_seed": "seed * 0x9E3779B97F4A7C15 xor fnv1a64(input_id NUL breakpoint_id)",
    }}
    _dump_json(out / "run.json", run_doc)

    subject = get_subject(config.subject) if config.subject else None
    (out / "traces").mkdir(exist_ok=True)
    (out / "invariants").mkdir(exist_ok=True)

    if subject is not None:
        _dump_json(out / "subjects.json", subjects_manifest())
        if config.corpus_dir:
            corpus = _stage("fuzz", lambda: _filtered_import(subject, config.corpus_dir, versions, out / "corpus"))
        else:
            corpus = _stage("fuzz", stage_fuzz, subject, config.fuzz_version or target,
                            config.fuzz_budget, config.seed, versions, out / "corpus")
        traces = {v: _stage("trace", stage_trace, subject, corpus, v, config.trace_cap,
                            config.seed, out / "traces" / f"{v}.trace") for v in versions}
        n_inputs = len(corpus)
        declared = [b.breakpoint_id for b in subject.breakpoints]
    else:
        loaded = _stage("trace", lambda: [t for p in config.traces for t in parse_trace_file(p)])
        traces = {v: sample_trace_sets([t for t in loaded if t.version == v], config.trace_cap, config.seed)
                  for v in versions}
        for v in versions:
            if not traces[v]:
                raise ConfigError(f"trace files hold no records for version {v!r}")
            write_trace_file(out / "traces" / f"{v}.trace", traces[v])
        n_inputs = len({t.input_id for t in loaded})
        declared = sorted({t.breakpoint_id for t in loaded})

    sets: list[InvariantSet] = []
    for v in versions:
        sets += _stage("mine", stage_mine, traces[v], config.mining_timeout,
                       out / "invariants" / f"{v}.inv")
    if base == target:
        # self-comparison: pair each set with itself
        sets = sets + [dataclasses.replace(s, version=f"{s.version}__self") for s in sets]
        vectors = _stage("diff", stage_diff, sets, base, f"{base}__self", out / "distances.csv")
    else:
        vectors = _stage("diff", stage_diff, sets, base, target, out / "distances.csv")
    reports = _stage("analyze", stage_analyze, vectors, config.flag_config(), out, declared)

    flags = {bp: r.flagged for bp, r in reports.items()}
    if subject is not None:
        edges = list(subject.dependency_edges)
        buggy = subject.ground_truth.buggy_breakpoints
    else:
        edges, buggy = [], frozenset()
    if config.edges:
        edges = _stage("group", read_edges_csv, config.edges)
    groups = _stage("group", stage_group, declared, edges, flags, buggy, out / "groups.json")

    summary = []
    if subject is not None:
        flag_list = subject_flags(subject, [bp for bp, f in flags.items() if f])
        tools = [TOOL_NAME]
        if config.warnings:
            warn = flags_from_annotations(read_warnings_csv(config.warnings))
            flag_list += warn
            tools += sorted({f.tool for f in warn})
        summary = _stage("evaluate", stage_evaluate, [subject], flag_list, out, tools)
    return RunResult(out, reports, groups, summary, n_inputs)


def _filtered_import(subject: SubjectPair, corpus_dir: str, versions: Sequence[str], out_dir: Path) -> Corpus:
    corpus = read_corpus(corpus_dir)
    for v in versions:
        corpus = filter_non_crashing(corpus, subject, v)
    write_corpus(corpus, out_dir, subject=subject.name, filtered_against=list(versions))
    return corpus


def reanalyze(distances_csv: str | Path, config: FlagConfig, out_dir: str | Path) -> dict[str, BreakpointReport]:
    """Rebuild reports from a distances CSV alone."""
    return stage_analyze(read_distances_csv(distances_csv), config, Path(out_dir))


def load_invariants(paths: Iterable[str | Path]) -> list[InvariantSet]:
    return [s for p in paths for s in read_invariant_file(p)]
