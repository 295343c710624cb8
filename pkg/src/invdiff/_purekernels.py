"""numpy implementations of the kernels in ``_kernels.pyx``."""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"

_CHUNK = 1 << 16


def gaussian_density(samples: np.ndarray, points: np.ndarray, bandwidth: float) -> np.ndarray:
    samples = np.ascontiguousarray(samples, dtype=np.float64)
    points = np.ascontiguousarray(points, dtype=np.float64)
    out = np.empty(points.shape[0])
    step = max(1, _CHUNK // max(1, samples.shape[0]))
    for start in range(0, points.shape[0], step):
        z = (points[start:start + step, None] - samples[None, :]) / bandwidth
        out[start:start + step] = np.exp(-0.5 * z * z).sum(axis=1)
    return out / (samples.shape[0] * bandwidth * math.sqrt(2.0 * math.pi))


def order_relation(x: np.ndarray, y: np.ndarray) -> int:
    eq = bool(np.all(x == y))
    le = bool(np.all(x <= y))
    ge = bool(np.all(x >= y))
    return int(eq) | (int(le) << 1) | (int(ge) << 2)


def linear_relation(y: np.ndarray, x: np.ndarray, max_slope: int,
                    max_intercept: float) -> tuple[bool, int, int]:
    if x.shape[0] < 2:
        return (False, 0, 0)
    moved = np.flatnonzero(x != x[0])
    if moved.size == 0:
        return (False, 0, 0)
    second = moved[0]
    a = (y[second] - y[0]) / (x[second] - x[0])
    if a != math.floor(a) or a == 0.0 or abs(a) > max_slope:
        return (False, 0, 0)
    b = y[0] - a * x[0]
    if b != math.floor(b) or abs(b) > max_intercept:
        return (False, 0, 0)
    if not np.all(y == a * x + b):
        return (False, 0, 0)
    return (True, int(a), int(b))
