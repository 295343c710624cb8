from __future__ import annotations

import importlib

import pytest

from invdiff import _purekernels, kernels

try:
    _compiled = importlib.import_module("invdiff._kernels")
except ImportError:  # extension not built
    _compiled = None

KERNEL_NAMES = ("gaussian_density", "order_relation", "linear_relation")


@pytest.fixture(params=["cython", "python"])
def backend(request, monkeypatch):
    """Route the kernel selector to one backend for the duration of a test."""
    module = _compiled if request.param == "cython" else _purekernels
    if module is None:
        pytest.skip("compiled kernels not built")
    for name in KERNEL_NAMES:
        monkeypatch.setattr(kernels, name, getattr(module, name))
    monkeypatch.setattr(kernels, "BACKEND", module.BACKEND)
    return request.param


@pytest.fixture
def compiled_kernels():
    if _compiled is None:
        pytest.skip("compiled kernels not built")
    return _compiled


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d} {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
