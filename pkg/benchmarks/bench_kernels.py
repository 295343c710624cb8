"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Prints one line per kernel and workload with the best-of-N time of each
backend and the speed-up. The workloads mirror the pipeline: density curves
over a few thousand distance values, and pairwise relation scans over short
trace columns (the miner calls these once per variable pair per trace set).
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from invdiff import _purekernels, kernels
from invdiff.kde import GRID_POINTS
from invdiff.miner import mine_invariants
from invdiff.subjects import CLEAN, encode_ints, get_subject, run_subject

try:
    from invdiff import _kernels as compiled
except ImportError:  # extension not built
    compiled = None


def _workloads(rng: np.random.Generator):
    grid = np.arange(-60, GRID_POINTS + 60, dtype=np.float64) / (GRID_POINTS - 1)
    for n in (100, 2000):
        samples = rng.random(n)
        yield f"gaussian_density n={n}", "gaussian_density", (samples, grid, 0.05), 20
    for rows in (10, 200):
        x = rng.integers(-100, 100, rows).astype(np.float64)
        y = 3 * x - 7
        yield f"order_relation rows={rows}", "order_relation", (x, y), 20000
        yield f"linear_relation rows={rows}", "linear_relation", (y, x, 4, 65536.0), 20000


def _mining_batch(rng: np.random.Generator):
    subject = get_subject("bubble_sort")
    traces = []
    for _ in range(200):
        data = encode_ints(rng.integers(-500, 500, int(rng.integers(2, 16))).tolist())
        traces += run_subject(subject, CLEAN, data).traces
    return traces


def _time_mining(module, traces, repeat: int) -> float:
    saved = {n: getattr(kernels, n) for n in ("order_relation", "linear_relation")}
    try:
        for n in saved:
            setattr(kernels, n, getattr(module, n))
        return min(timeit.repeat(lambda: [mine_invariants(t) for t in traces], number=1, repeat=repeat))
    finally:
        for n, fn in saved.items():
            setattr(kernels, n, fn)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if compiled is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
    rng = np.random.default_rng(0)
    print(f"{'workload':32} {'numpy':>12} {'cython':>12} {'speed-up':>9}")
    for label, name, call_args, number in _workloads(rng):
        times = {}
        for tag, module in (("numpy", _purekernels), ("cython", compiled)):
            fn = getattr(module, name)
            best = min(timeit.repeat(lambda: fn(*call_args), number=number, repeat=args.repeat))
            times[tag] = best / number
        print(f"{label:32} {times['numpy'] * 1e6:10.1f}us {times['cython'] * 1e6:10.1f}us "
              f"{times['numpy'] / times['cython']:8.1f}x")
    traces = _mining_batch(rng)
    slow = _time_mining(_purekernels, traces, args.repeat)
    fast = _time_mining(compiled, traces, args.repeat)
    print(f"{'mine ' + str(len(traces)) + ' bubble_sort traces':32} {slow * 1e3:10.1f}ms {fast * 1e3:10.1f}ms "
          f"{slow / fast:8.1f}x")


if __name__ == "__main__":
    main()
