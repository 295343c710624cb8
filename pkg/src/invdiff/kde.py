"""Distance-distribution analysis: Gaussian KDE, local maxima and the flag rule."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .distance import METRICS, DistanceVector

GRID_POINTS = 256
BANDWIDTH_FLOOR = 0.01
# Tail mass beyond 6 bandwidths is below 1e-9, so the padded trapezoid sums to 1.
PAD_BANDWIDTHS = 6.0
# Padding stops here; only bandwidths above ~40 lose tail mass to the cap.
MAX_PAD_POINTS = 1 << 16
GRID_STEP = 1.0 / (GRID_POINTS - 1)

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def silverman_bandwidth(values: Sequence[float]) -> float:
    """0.9 * min(std, IQR / 1.34) * n ** -0.2, floored at 0.01."""
    x = np.asarray(values, dtype=np.float64)
    if x.size < 2:
        return BANDWIDTH_FLOOR
    sigma = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sigma, float(q75 - q25) / 1.34)
    return max(BANDWIDTH_FLOOR, 0.9 * spread * x.size ** -0.2)


@dataclass(frozen=True)
class DensityEstimate:
    metric: str
    bandwidth: float
    padded_grid: np.ndarray = field(repr=False)
    padded_density: np.ndarray = field(repr=False)
    pad: int = 0

    @property
    def grid(self) -> np.ndarray:
        return self.padded_grid[self.pad:self.pad + GRID_POINTS]

    @property
    def density(self) -> np.ndarray:
        return self.padded_density[self.pad:self.pad + GRID_POINTS]

    def integral(self) -> float:
        return float(_trapezoid(self.padded_density, self.padded_grid))


def estimate_density(values: Sequence[float], bandwidth: float | str | None = "auto",
                     metric: str = "dice") -> DensityEstimate:
    """Gaussian KDE of ``values`` on 256 points over [0, 1].

    The same grid spacing continues ``PAD_BANDWIDTHS`` bandwidths past both
    ends so the estimate can be integrated over its support.
    """
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        raise ValueError("cannot estimate a density from no values")
    if bandwidth in (None, "auto"):
        h = silverman_bandwidth(x)
    else:
        h = float(bandwidth)
        if not h > 0:
            raise ValueError("bandwidth must be positive")
    pad = min(MAX_PAD_POINTS, int(math.ceil(PAD_BANDWIDTHS * h / GRID_STEP)))
    padded_grid = np.arange(-pad, GRID_POINTS + pad, dtype=np.float64) * GRID_STEP
    density = kernels.gaussian_density(np.ascontiguousarray(x), padded_grid, h)
    return DensityEstimate(metric, h, padded_grid, density, pad)


def local_maxima(d: DensityEstimate) -> list[tuple[float, float]]:
    """Strict local maxima of the [0, 1] grid; endpoints compare to their one neighbour."""
    y = d.density
    pos = d.grid
    n = len(y)
    peaks = []
    for i in range(n):
        left = y[i - 1] if i > 0 else -math.inf
        right = y[i + 1] if i < n - 1 else -math.inf
        if y[i] > left and y[i] > right:
            peaks.append((min(1.0, max(0.0, float(pos[i]))), float(y[i])))
    return peaks


def nonzero_peaks(peaks: Iterable[tuple[float, float]], zero_tolerance: float = 0.01):
    return [p for p in peaks if p[0] > zero_tolerance]


@dataclass(frozen=True)
class FlagConfig:
    bandwidth: float | str = "auto"
    zero_tolerance: float = 0.01
    flag_threshold: int = 2
    min_inputs: int = 5

    def __post_init__(self):
        if not 1 <= self.flag_threshold <= len(METRICS):
            raise ValueError("flag_threshold must be within 1..4")
        if self.min_inputs < 1:
            raise ValueError("min_inputs must be positive")
        if self.zero_tolerance < 0:
            raise ValueError("zero_tolerance must be non-negative")
        if self.bandwidth != "auto" and not float(self.bandwidth) > 0:
            raise ValueError("bandwidth must be 'auto' or positive")


@dataclass
class BreakpointReport:
    breakpoint_id: str
    n_inputs: int
    per_metric_peaks: dict[str, list[tuple[float, float]]]
    nonzero_peak_metrics: int
    flagged: bool
    largest_peak_distance: dict[str, float]
    status: str  # ok | insufficient_data | unreached
    flag_threshold: int = 2
    bandwidths: dict[str, float] = field(default_factory=dict)
    n_vectors: int = 0
    n_one_sided: int = 0
    densities: dict[str, DensityEstimate] = field(default_factory=dict, repr=False)

    def to_json(self) -> dict:
        return {
            "breakpoint_id": self.breakpoint_id,
            "status": self.status,
            "flagged": self.flagged,
            "flag_threshold": self.flag_threshold,
            "n_inputs": self.n_inputs,
            "n_vectors": self.n_vectors,
            "n_one_sided": self.n_one_sided,
            "nonzero_peak_metrics": self.nonzero_peak_metrics,
            "largest_peak_distance": self.largest_peak_distance,
            "bandwidths": self.bandwidths,
            "per_metric_peaks": {
                m: [[pos, dens] for pos, dens in peaks]
                for m, peaks in self.per_metric_peaks.items()
            },
        }


def flag_breakpoint(vectors: Sequence[DistanceVector], config: FlagConfig = FlagConfig(),
                    breakpoint_id: str | None = None) -> BreakpointReport:
    """Analyse one breakpoint's distance vectors and decide whether it is flagged.

    Vectors where neither version produced invariants carry no signal and are
    left out of the estimate; ``n_inputs`` counts the rest.
    """
    ids = {v.breakpoint_id for v in vectors}
    if len(ids) > 1:
        raise ValueError(f"vectors span several breakpoints: {sorted(ids)}")
    bp = breakpoint_id or (ids.pop() if ids else "")
    reached = [v for v in vectors if v.status != "no_invariants"]
    base = dict(breakpoint_id=bp, n_inputs=len(reached), flag_threshold=config.flag_threshold,
                n_vectors=len(vectors), n_one_sided=sum(v.one_sided for v in reached))
    empty = dict(per_metric_peaks={m: [] for m in METRICS}, nonzero_peak_metrics=0,
                 flagged=False, largest_peak_distance={m: 0.0 for m in METRICS})
    if not reached:
        return BreakpointReport(status="unreached", **base, **empty)
    if len(reached) < config.min_inputs:
        return BreakpointReport(status="insufficient_data", **base, **empty)

    peaks, largest, bandwidths, densities = {}, {}, {}, {}
    hits = 0
    for m in METRICS:
        est = estimate_density([v.metric(m) for v in reached], config.bandwidth, metric=m)
        found = local_maxima(est)
        peaks[m] = found
        largest[m] = max((p for p, _ in found), default=0.0)
        bandwidths[m] = est.bandwidth
        densities[m] = est
        if nonzero_peaks(found, config.zero_tolerance):
            hits += 1
    return BreakpointReport(
        status="ok", per_metric_peaks=peaks, nonzero_peak_metrics=hits,
        flagged=hits >= config.flag_threshold, largest_peak_distance=largest,
        bandwidths=bandwidths, densities=densities, **base,
    )


def group_by_breakpoint(vectors: Iterable[DistanceVector]) -> dict[str, list[DistanceVector]]:
    out: dict[str, list[DistanceVector]] = {}
    for v in vectors:
        out.setdefault(v.breakpoint_id, []).append(v)
    return dict(sorted(out.items()))


def write_density_csv(path: str | Path, d: DensityEstimate) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["position", "density"])
        for pos, dens in zip(d.grid, d.density):
            w.writerow([repr(float(pos)), repr(float(dens))])
