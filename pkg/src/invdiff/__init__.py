"""Behavioural-shift detection between program versions from likely-invariant distances."""

from __future__ import annotations

from .distance import DistanceVector, distance_vector, set_distances
from .kde import BreakpointReport, FlagConfig, estimate_density, flag_breakpoint
from .kernels import BACKEND
from .miner import InvariantSet, mine_invariants
from .pipeline import PipelineConfig, run_pipeline
from .subjects import get_subject, list_subjects, run_subject
from .traces import TraceSet, hash_string_value, parse_trace_file, sample_traces

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BreakpointReport", "DistanceVector", "FlagConfig", "InvariantSet",
    "PipelineConfig", "TraceSet", "distance_vector", "estimate_density", "flag_breakpoint",
    "get_subject", "hash_string_value", "list_subjects", "mine_invariants", "parse_trace_file",
    "run_pipeline", "run_subject", "sample_traces", "set_distances",
]
