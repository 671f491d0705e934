from __future__ import annotations

import numpy as np
import pytest

from tertiary_cs.connections import Connection
from tertiary_cs.exterior import MatrixValuedForm, TorusChart


def const_one_form(chart: TorusChart, mats: dict) -> MatrixValuedForm:
    """``sum_i mats[i] dx_i`` with constant matrix coefficients."""
    zero = (0,) * chart.dim
    return MatrixValuedForm.from_terms(
        chart, np.atleast_2d(next(iter(mats.values()))).shape[0], 1,
        {(i,): {zero: m} for i, m in mats.items()},
    )


def const_connection(chart: TorusChart, mats: dict) -> Connection:
    return Connection(const_one_form(chart, mats))


def unit(n: int, j: int, scale: int = 1) -> tuple:
    return tuple(scale if i == j else 0 for i in range(n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
