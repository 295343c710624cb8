from __future__ import annotations

import numpy as np
import pytest

from invdiff import _purekernels, kernels


def test_selector_reports_backend():
    assert kernels.BACKEND in ("cython", "python")


def test_backends_agree(compiled_kernels):
    rng = np.random.default_rng(0)
    for _ in range(30):
        s = rng.random(int(rng.integers(1, 300)))
        pts = np.linspace(-0.2, 1.2, 300)
        h = float(rng.uniform(0.01, 0.2))
        a = compiled_kernels.gaussian_density(s, pts, h)
        b = _purekernels.gaussian_density(s, pts, h)
        assert np.max(np.abs(a - b)) < 1e-12
    for x, y in [([1, 2, 3], [1, 2, 3]), ([1, 2], [2, 3]), ([3, 2], [1, 2]), ([0, 5], [1, 1])]:
        x, y = np.array(x, float), np.array(y, float)
        assert compiled_kernels.order_relation(x, y) == _purekernels.order_relation(x, y)
    for y, x in [([3, 5, 7], [1, 2, 3]), ([1, 1], [1, 2]), ([5, 5], [2, 2]), ([2, 4.5], [1, 2])]:
        y, x = np.array(y, float), np.array(x, float)
        assert compiled_kernels.linear_relation(y, x, 4, 65536.0) == \
            _purekernels.linear_relation(y, x, 4, 65536.0)


@pytest.mark.parametrize("module", ["compiled", "pure"])
def test_linear_relation_cases(module, compiled_kernels):
    k = compiled_kernels if module == "compiled" else _purekernels
    arr = lambda v: np.array(v, dtype=float)
    assert k.linear_relation(arr([3, 5, 7]), arr([1, 2, 3]), 4, 65536.0) == (True, 2, 1)
    assert k.linear_relation(arr([3, 5, 8]), arr([1, 2, 3]), 4, 65536.0)[0] is False
    assert k.linear_relation(arr([1, 6]), arr([0, 1]), 4, 65536.0)[0] is False
    assert k.linear_relation(arr([1, 2]), arr([4, 4]), 4, 65536.0)[0] is False
    assert k.order_relation(arr([1, 2]), arr([1, 3])) == 2
