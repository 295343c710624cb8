from __future__ import annotations

import csv
import filecmp
import json
from pathlib import Path

import pytest

from invdiff.cli import main
from invdiff.pipeline import (ConfigError, PipelineConfig, StageError, run_pipeline,
                              sampling_seed)
from invdiff.traces import TraceSet, write_trace_file


def _tree(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_second_max_default_flags_buggy_breakpoint(tmp_path):
    r = run_pipeline(PipelineConfig(subject="second_max", seed=7), tmp_path)
    assert r.reports["smax_loop"].flagged
    summary = (tmp_path / "evaluation" / "summary.csv").read_text().splitlines()
    assert "invdiff,block,100.00,0.00,1" in summary
    for name in ("run.json", "subjects.json", "distances.csv", "groups.json", "corpus/corpus.meta.json",
                 "traces/clean.trace", "traces/buggy.trace", "invariants/clean.inv",
                 "reports/smax_loop.json", "reports/index.json", "density/smax_loop__dice.csv",
                 "evaluation/summary.json"):
        assert (tmp_path / name).is_file(), name


def test_clean_versions_not_flagged(tmp_path):
    r = run_pipeline(PipelineConfig(subject="bubble_sort", target_version="clean_alt", fuzz_budget=1500), tmp_path)
    assert not any(rep.flagged for rep in r.reports.values())


def test_self_comparison_all_zero(tmp_path):
    r = run_pipeline(PipelineConfig(subject="gcd", target_version="clean", fuzz_budget=300), tmp_path)
    assert not any(rep.flagged for rep in r.reports.values())
    with open(tmp_path / "distances.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and all(float(row[m]) == 0.0 for row in rows
                        for m in ("dice", "jaccard", "overlap", "hamming_norm"))


def test_cli_runs_are_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["run", "--subject", "second_max", "--seed", "7", "--budget", "800",
                     "--out", str(tmp_path / name)]) == 0
    assert _tree(tmp_path / "a") == _tree(tmp_path / "b")


def test_stage_replay_from_files(tmp_path):
    run = tmp_path / "run"
    assert main(["run", "--subject", "factorial", "--seed", "3", "--out", str(run)]) == 0
    # analyze from the distances CSV alone
    assert main(["analyze", str(run / "distances.csv"), "--out", str(tmp_path / "an")]) == 0
    for p in (run / "reports").glob("*.json"):
        assert filecmp.cmp(p, tmp_path / "an" / "reports" / p.name, shallow=False)
    # mine and diff from the trace files
    inv = tmp_path / "all.inv"
    assert main(["mine", str(run / "traces" / "clean.trace"), str(run / "traces" / "buggy.trace"),
                 "--out", str(inv)]) == 0
    joined = (run / "invariants" / "clean.inv").read_text() + (run / "invariants" / "buggy.inv").read_text()
    assert inv.read_text() == joined
    assert main(["diff", str(inv), "--out", str(tmp_path / "d.csv")]) == 0
    assert filecmp.cmp(tmp_path / "d.csv", run / "distances.csv", shallow=False)
    # trace from the corpus
    assert main(["trace", "--subject", "factorial", "--version", "buggy", "--corpus", str(run / "corpus"),
                 "--seed", "3", "--out", str(tmp_path / "b.trace")]) == 0
    assert filecmp.cmp(tmp_path / "b.trace", run / "traces" / "buggy.trace", shallow=False)


def test_evaluate_with_warnings(tmp_path, capsys):
    w = tmp_path / "w.csv"
    w.write_text("file,line,tool,rule_id\nsecond_max.c,12,lint,r1\n")
    assert main(["evaluate", "--subject", "second_max", "--warnings", str(w), "--out", str(tmp_path / "ev")]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "tool,level,detected_pct,false_alarm_pct,n_bugs"
    assert "lint,block,0.00,100.00,1" in out
    assert "lint,file,100.00,0.00,1" in out


def test_config_file_and_env_output(tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"subject": "factorial", "fuzz_budget": 100, "seed": 1}))
    monkeypatch.setenv("INVDIFF_OUTPUT_DIR", str(tmp_path / "envout"))
    assert main(["run", "--config", str(cfg)]) == 0
    assert json.loads((tmp_path / "envout" / "run.json").read_text())["config"]["fuzz_budget"] == 100


def test_external_traces(tmp_path):
    records = []
    for i in range(8):
        rows = [(k, 2 * k + 1) for k in range(5)]
        records.append(TraceSet.from_values(f"in{i}", "clean", "p", ("x", "y"), rows))
        shifted = rows if i % 2 else [(k, 2 * k + 3 + k % 2) for k in range(5)]
        records.append(TraceSet.from_values(f"in{i}", "buggy", "p", ("x", "y"), shifted))
    write_trace_file(tmp_path / "t.trace", records)
    r = run_pipeline(PipelineConfig(traces=[str(tmp_path / "t.trace")]), tmp_path / "out")
    assert r.reports["p"].flagged and r.n_inputs == 8


@pytest.mark.parametrize("argv", [
    ["run", "--subject", "nope"],
    ["run"],
    ["run", "--subject", "gcd", "--threshold", "0"],
    ["run", "--subject", "gcd", "--budget", "0"],
    ["run", "--subject", "gcd", "--bandwidth", "wide"],
    ["analyze", "missing.csv"],
])
def test_config_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_unknown_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2 and "usage:" in capsys.readouterr().err


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"subject": "gcd", "colour": 1}')
    assert main(["run", "--config", str(cfg)]) == 2


def test_stage_error_exit_3_keeps_prior_artifacts(tmp_path):
    bad = tmp_path / "bad.trace"
    bad.write_text("#bp p clean i\n#vars x\nnot-a-number\n")
    assert main(["run", "--traces", str(bad), "--out", str(tmp_path / "o")]) == 3
    assert (tmp_path / "o" / "run.json").exists()
    with pytest.raises(StageError):
        run_pipeline(PipelineConfig(traces=[str(bad)]), tmp_path / "o2")


def test_config_validation():
    with pytest.raises(ConfigError):
        PipelineConfig(subject="gcd", traces=["x"]).validate()
    with pytest.raises(ConfigError):
        PipelineConfig(subject="gcd", trace_cap=0).validate()
    with pytest.raises(ConfigError):
        PipelineConfig(subject="gcd", mining_timeout=0).validate()


def test_sampling_seed_ignores_version():
    assert sampling_seed(1, "in", "bp") == sampling_seed(1, "in", "bp")
    assert sampling_seed(1, "in", "bp") != sampling_seed(2, "in", "bp")


def test_subjects_command(capsys, tmp_path):
    assert main(["subjects", "--manifest", str(tmp_path / "m.json")]) == 0
    assert len(json.loads((tmp_path / "m.json").read_text())["subjects"]) == 7
    assert "second_max" in capsys.readouterr().out

