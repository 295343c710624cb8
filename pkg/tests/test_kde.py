from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invdiff.distance import DistanceVector
from invdiff.kde import (BANDWIDTH_FLOOR, MAX_PAD_POINTS, DensityEstimate, FlagConfig, estimate_density, flag_breakpoint,
                         local_maxima, nonzero_peaks, silverman_bandwidth, write_density_csv)

import oracles


def _vec(i, dice, jaccard=None, overlap=None, hamming=None, status="ok", bp="bp"):
    j = dice if jaccard is None else jaccard
    return DistanceVector(bp, f"i{i}", dice, j, dice if overlap is None else overlap, 1,
                          dice if hamming is None else hamming, False, status)


def test_silverman_floor():
    assert silverman_bandwidth([0.0] * 10) == BANDWIDTH_FLOOR
    assert silverman_bandwidth([0.3]) == BANDWIDTH_FLOOR


def test_silverman_formula():
    x = np.array([0.1, 0.2, 0.4, 0.8, 0.9, 0.95])
    q75, q25 = np.percentile(x, [75, 25])
    expect = 0.9 * min(x.std(ddof=1), (q75 - q25) / 1.34) * len(x) ** -0.2
    assert silverman_bandwidth(x) == pytest.approx(expect)


def test_density_integrates_to_one(backend):
    for values in ([0.0] * 40, [0.0, 1.0, 0.5], list(np.linspace(0, 1, 33))):
        d = estimate_density(values)
        assert abs(d.integral() - 1.0) < 1e-6
        assert len(d.grid) == 256 and d.grid[0] == 0.0 and d.grid[-1] == pytest.approx(1.0)


def test_matches_gaussian_sum_oracle(backend):
    rng = np.random.default_rng(4)
    for _ in range(50):
        n = int(rng.integers(1, 60))
        samples = rng.random(n) * rng.choice([0.2, 1.0])
        h = float(rng.uniform(0.01, 0.3))
        d = estimate_density(samples, h)
        expect = oracles.gaussian_sum(samples, d.padded_grid, h)
        assert np.max(np.abs(d.padded_density - expect)) <= 1e-9


def test_bimodal_sample(backend):
    d = estimate_density([0.0] * 100 + [0.8] * 100)
    peaks = local_maxima(d)
    assert len(peaks) == 2
    assert len(nonzero_peaks(peaks, 0.01)) == 1
    assert nonzero_peaks(peaks)[0][0] == pytest.approx(0.8, abs=1 / 255)


def test_all_zero_single_peak_at_origin(backend):
    peaks = local_maxima(estimate_density([0.0] * 20))
    assert peaks == [(0.0, peaks[0][1])] and not nonzero_peaks(peaks)


def test_endpoint_peak_at_one(backend):
    peaks = local_maxima(estimate_density([1.0] * 20))
    assert [p for p, _ in peaks] == [1.0]


def test_plateau_has_no_strict_maximum():
    grid = np.linspace(0, 1, 256)
    density = np.where((grid > 0.4) & (grid < 0.6), 2.0, 1.0)
    assert local_maxima(DensityEstimate("dice", 0.1, grid, density, 0)) == []


def test_huge_bandwidth_is_bounded():
    d = estimate_density([0.5], bandwidth=1e6)
    assert len(d.padded_grid) <= 256 + 2 * MAX_PAD_POINTS


def test_bad_bandwidth():
    with pytest.raises(ValueError):
        estimate_density([0.1], bandwidth=0)
    with pytest.raises(ValueError):
        estimate_density([])


def test_flag_config_validation():
    with pytest.raises(ValueError):
        FlagConfig(flag_threshold=5)
    with pytest.raises(ValueError):
        FlagConfig(min_inputs=0)
    with pytest.raises(ValueError):
        FlagConfig(bandwidth=-1)


def test_unreached_and_insufficient():
    empty = [_vec(i, 0.0, status="no_invariants") for i in range(10)]
    assert flag_breakpoint(empty).status == "unreached"
    few = [_vec(i, 0.5) for i in range(4)] + empty
    r = flag_breakpoint(few)
    assert r.status == "insufficient_data" and r.n_inputs == 4 and not r.flagged


def test_no_invariant_vectors_are_excluded(backend):
    vs = [_vec(i, 0.0) for i in range(10)] + [_vec(i + 10, 0.0, status="no_invariants") for i in range(50)]
    r = flag_breakpoint(vs)
    assert r.n_inputs == 10 and r.n_vectors == 60 and not r.flagged


def test_mixed_breakpoints_rejected():
    with pytest.raises(ValueError):
        flag_breakpoint([_vec(0, 0.1, bp="a"), _vec(1, 0.1, bp="b")])


def _table(k: int, n: int = 40) -> list[DistanceVector]:
    """Distance vectors where exactly the first ``k`` metrics carry a shifted cluster."""
    shifted = [0.7 if i < k else 0.0 for i in range(4)]
    out = []
    for i in range(n):
        vals = shifted if i % 2 else [0.0] * 4
        out.append(_vec(i, vals[0], vals[1], vals[2], vals[3]))
    return out


@pytest.mark.parametrize("k", range(5))
def test_flag_boundary(k, backend):
    r = flag_breakpoint(_table(k))
    assert r.nonzero_peak_metrics == k
    assert r.flagged == (k >= 2)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=5, max_size=40))
def test_threshold_monotonicity(values):
    vs = [_vec(i, v, v * 0.9, v ** 2, min(1.0, v * 1.1)) for i, v in enumerate(values)]
    flags = [flag_breakpoint(vs, FlagConfig(flag_threshold=t)).flagged for t in range(1, 5)]
    assert all(a >= b for a, b in zip(flags, flags[1:]))


def test_report_json_and_density_csv(tmp_path):
    r = flag_breakpoint(_table(3))
    doc = r.to_json()
    assert doc["flagged"] and doc["nonzero_peak_metrics"] == 3
    assert set(doc["per_metric_peaks"]) == {"dice", "jaccard", "overlap", "hamming_norm"}
    write_density_csv(tmp_path / "d.csv", r.densities["dice"])
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "position,density" and len(lines) == 257
