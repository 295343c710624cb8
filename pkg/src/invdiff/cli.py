"""Command-line entry point.

Exit status: 0 success, 2 configuration or usage error, 3 stage failure.
Flags raised by the analysis are data and never change the exit status.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import kernels
from .blocks import parse_block_file, parse_blocks, read_warnings_csv
from .distance import read_distances_csv
from .evaluation import (evaluate_bugs, flags_from_annotations, summarize, truth_from_json,
                         truth_from_manifest, write_summary)
from .fuzz import read_corpus
from .kde import FlagConfig
from .miner import DEFAULT_TIMEOUT
from .pipeline import (TOOL_NAME, ConfigError, PipelineConfig, StageError, load_invariants,
                       read_reports, resolve_output_dir, run_pipeline, sample_trace_sets,
                       stage_analyze, stage_diff, stage_fuzz, stage_group, stage_mine, stage_trace,
                       subject_flags)
from .depgraph import read_edges_csv
from .subjects import BUGGY, CLEAN, VERSIONS, get_subject, list_subjects, subjects_manifest
from .traces import DEFAULT_TRACE_CAP, parse_trace_file

EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 2, 3


def _subject(name: str):
    try:
        return get_subject(name)
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from None


def _existing(path: str | None, label: str) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{label} not found: {path}")
    return p


def _flag_config(args) -> FlagConfig:
    bw = args.bandwidth
    if bw != "auto":
        try:
            bw = float(bw)
        except ValueError:
            raise ConfigError("--bandwidth must be 'auto' or a number") from None
    try:
        return FlagConfig(bw, args.zero_tolerance, args.threshold, args.min_inputs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _add_flag_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bandwidth", default="auto", help="'auto' (Silverman) or a fixed value")
    p.add_argument("--zero-tolerance", type=float, default=0.01)
    p.add_argument("--threshold", type=int, default=2, help="metrics needing a non-zero peak (1..4)")
    p.add_argument("--min-inputs", type=int, default=5)


# -- subcommands ------------------------------------------------------------

def cmd_subjects(args) -> int:
    manifest = subjects_manifest()
    if args.manifest:
        Path(args.manifest).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")
    if args.json:
        print(json.dumps(manifest, indent=2, sort_keys=True))
    else:
        for s in list_subjects():
            bps = ", ".join(b.breakpoint_id for b in s.breakpoints)
            print(f"{s.name:16} {s.title:24} breakpoints: {bps}")
    return EXIT_OK


def cmd_fuzz(args) -> int:
    s = _subject(args.subject)
    if args.version not in s.versions:
        raise ConfigError(f"{s.name} has no version {args.version!r}")
    keep = args.keep_versions.split(",") if args.keep_versions else [args.version]
    for v in keep:
        if v not in s.versions:
            raise ConfigError(f"{s.name} has no version {v!r}")
    if args.budget < 1:
        raise ConfigError("--budget must be at least 1")
    corpus = stage_fuzz(s, args.version, args.budget, args.seed, keep, Path(args.out))
    print(f"{len(corpus)} inputs written to {args.out}")
    return EXIT_OK


def cmd_trace(args) -> int:
    s = _subject(args.subject)
    if args.version not in s.versions:
        raise ConfigError(f"{s.name} has no version {args.version!r}")
    corpus = read_corpus(_existing(args.corpus, "corpus directory"))
    traces = stage_trace(s, corpus, args.version, args.cap, args.seed, Path(args.out))
    print(f"{len(traces)} trace sets written to {args.out}")
    return EXIT_OK


def cmd_mine(args) -> int:
    traces = [t for p in args.traces for t in parse_trace_file(_existing(p, "trace file"))]
    if args.cap:
        traces = sample_trace_sets(traces, args.cap, args.seed)
    sets = stage_mine(traces, args.timeout, Path(args.out))
    print(f"{len(sets)} invariant sets written to {args.out}")
    return EXIT_OK


def cmd_diff(args) -> int:
    sets = load_invariants(_existing(p, "invariant file") for p in args.invariants)
    versions = sorted({s.version for s in sets})
    base = args.base or CLEAN
    target = args.target or BUGGY
    for v in (base, target):
        if v not in versions:
            raise ConfigError(f"no invariant sets for version {v!r} (found {versions})")
    vectors = stage_diff(sets, base, target, Path(args.out))
    print(f"{len(vectors)} distance vectors written to {args.out}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    vectors = read_distances_csv(_existing(args.distances, "distances CSV"))
    out = resolve_output_dir(args.out)
    reports = stage_analyze(vectors, _flag_config(args), out)
    flags = {bp: r.flagged for bp, r in reports.items()}
    edges = read_edges_csv(_existing(args.edges, "edges CSV")) if args.edges else []
    buggy = args.buggy.split(",") if args.buggy else []
    stage_group(sorted(flags), edges, flags, buggy, out / "groups.json")
    for bp, r in reports.items():
        mark = "FLAGGED" if r.flagged else "-"
        print(f"{bp:24} {r.status:18} {r.nonzero_peak_metrics}/4 {mark}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    out = resolve_output_dir(args.out)
    flags = []
    tools = []
    if args.warnings:
        warn = flags_from_annotations(read_warnings_csv(_existing(args.warnings, "warnings CSV")))
        flags += warn
        tools += sorted({f.tool for f in warn})
    if args.subject:
        subjects = [_subject(args.subject)]
        trees = {s.source_file: parse_blocks(s.source(), s.source_file) for s in subjects}
        truths = truth_from_manifest({"subjects": [s.describe() for s in subjects]}, trees).truths
        if args.reports:
            reports = read_reports(_existing(args.reports, "run directory"))
            flags += subject_flags(subjects[0], [bp for bp, r in reports.items() if r["flagged"]])
            tools.append(TOOL_NAME)
    else:
        if not args.truth:
            raise ConfigError("evaluate needs --subject or --truth")
        doc = json.loads(_existing(args.truth, "truth file").read_text(encoding="utf-8"))
        trees = {}
        src_dir = _existing(args.sources, "source directory") if args.sources else None
        if "subjects" in doc:
            for s in doc["subjects"]:
                src = s["source_file"]
                path = src_dir / src if src_dir else None
                if path is not None and path.exists():
                    trees[src] = parse_block_file(path)
                else:
                    trees[src] = parse_blocks(_subject(s["name"]).source(), src)
            truths = truth_from_manifest(doc, trees).truths
        else:
            if src_dir is not None:
                files = {f for bug in doc["bugs"] for side in ("buggy", "benign")
                         for f in bug.get(side, {}).get("files", [])}
                files |= {x[0] for bug in doc["bugs"] for side in ("buggy", "benign")
                          for key in ("functions", "blocks", "lines")
                          for x in bug.get(side, {}).get(key, [])}
                files |= {f.file for f in flags if f.file}
                for f in sorted(files):
                    if (src_dir / f).is_file():
                        trees[f] = parse_block_file(src_dir / f)
            truths = truth_from_json(doc, trees)
    results = evaluate_bugs(flags, truths, trees, tools)
    rows = summarize(results)
    out.mkdir(parents=True, exist_ok=True)
    write_summary(out / "summary.csv", out / "summary.json", rows, results)
    print("tool,level,detected_pct,false_alarm_pct,n_bugs")
    for r in rows:
        print(f"{r.tool},{r.level},{r.detected_pct:.2f},{r.false_alarm_pct:.2f},{r.n_bugs}")
    return EXIT_OK


def cmd_run(args) -> int:
    config = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    overrides = {
        "subject": args.subject, "corpus_dir": args.corpus, "base_version": args.base,
        "target_version": args.target, "fuzz_budget": args.budget, "seed": args.seed,
        "trace_cap": args.cap, "mining_timeout": args.timeout, "bandwidth": args.bandwidth,
        "zero_tolerance": args.zero_tolerance, "flag_threshold": args.threshold,
        "min_inputs": args.min_inputs, "edges": args.edges, "warnings": args.warnings,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(config, key, value)
    if args.traces:
        config.traces = list(args.traces)
    if config.bandwidth != "auto":
        try:
            config.bandwidth = float(config.bandwidth)
        except (TypeError, ValueError):
            raise ConfigError("bandwidth must be 'auto' or a number") from None
    out = resolve_output_dir(args.out, config)
    result = run_pipeline(config, out)
    flagged = [bp for bp, r in result.reports.items() if r.flagged]
    print(f"run written to {out}: {len(result.reports)} breakpoints, "
          f"{len(flagged)} flagged{': ' + ', '.join(flagged) if flagged else ''}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="invdiff", description=(
        "Flag behavioural shifts between two program versions from likely-invariant distances."))
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("subjects", help="list the built-in subject programs")
    s.add_argument("--json", action="store_true", help="print the full manifest")
    s.add_argument("--manifest", help="write subjects.json to this path")
    s.set_defaults(func=cmd_subjects)

    s = sub.add_parser("fuzz", help="grow a non-crashing corpus for a subject version")
    s.add_argument("--subject", required=True)
    s.add_argument("--version", default=BUGGY, choices=VERSIONS)
    s.add_argument("--budget", type=int, default=5000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--keep-versions", help="comma-separated versions every kept input must not crash")
    s.add_argument("--out", required=True, help="corpus directory")
    s.set_defaults(func=cmd_fuzz)

    s = sub.add_parser("trace", help="run a corpus on one version and write sampled traces")
    s.add_argument("--subject", required=True)
    s.add_argument("--version", required=True, choices=VERSIONS)
    s.add_argument("--corpus", required=True)
    s.add_argument("--cap", type=int, default=DEFAULT_TRACE_CAP)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="trace file")
    s.set_defaults(func=cmd_trace)

    s = sub.add_parser("mine", help="mine invariant sets from trace files")
    s.add_argument("traces", nargs="+")
    s.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    s.add_argument("--cap", type=int, default=0, help="sample rows down to this cap first")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="invariant file")
    s.set_defaults(func=cmd_mine)

    s = sub.add_parser("diff", help="distance vectors between two versions' invariant sets")
    s.add_argument("invariants", nargs="+")
    s.add_argument("--base")
    s.add_argument("--target")
    s.add_argument("--out", required=True, help="distances CSV")
    s.set_defaults(func=cmd_diff)

    s = sub.add_parser("analyze", help="KDE reports and flags from a distances CSV")
    s.add_argument("distances")
    s.add_argument("--edges", help="dependency edges CSV (bp_a,bp_b)")
    s.add_argument("--buggy", help="comma-separated buggy breakpoints for grouped verdicts")
    s.add_argument("--out", help="output directory (default: $INVDIFF_OUTPUT_DIR)")
    _add_flag_options(s)
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("evaluate", help="hit rates and false alarms per tool and level")
    s.add_argument("--subject", help="evaluate against a built-in subject's ground truth")
    s.add_argument("--truth", help="subjects.json manifest or truth JSON")
    s.add_argument("--reports", help="run directory whose reports/ supply invdiff flags")
    s.add_argument("--warnings", help="warnings CSV (file,line,tool,rule_id)")
    s.add_argument("--sources", help="directory holding the analysed source files")
    s.add_argument("--out", help="output directory (default: $INVDIFF_OUTPUT_DIR)")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("run", help="full pipeline")
    s.add_argument("--config", help="JSON config with PipelineConfig fields")
    s.add_argument("--subject")
    s.add_argument("--traces", nargs="+", help="external trace files instead of a subject")
    s.add_argument("--corpus", help="import this corpus instead of fuzzing")
    s.add_argument("--base")
    s.add_argument("--target")
    s.add_argument("--budget", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--cap", type=int)
    s.add_argument("--timeout", type=float)
    s.add_argument("--bandwidth")
    s.add_argument("--zero-tolerance", type=float)
    s.add_argument("--threshold", type=int)
    s.add_argument("--min-inputs", type=int)
    s.add_argument("--edges")
    s.add_argument("--warnings")
    s.add_argument("--out", help="run directory (default: $INVDIFF_OUTPUT_DIR or config)")
    s.set_defaults(func=cmd_run)

    sub.add_parser("backend", help="print the active kernel backend").set_defaults(
        func=lambda args: print(kernels.BACKEND) or EXIT_OK)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"invdiff: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"invdiff: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (ValueError, OSError) as exc:
        print(f"invdiff: {args.command} failed: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
