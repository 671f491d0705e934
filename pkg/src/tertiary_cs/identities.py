"""Randomized exterior-calculus identity battery.

Each identity is evaluated on seeded random trigonometric forms and the
maximum sup-norm residual is reported.  Frequencies are kept small enough
that no product in an identity can leave the chart's ``k_max`` window.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .connections import Connection, curvature
from .exterior import (
    CylinderForm,
    MatrixValuedForm,
    TorusChart,
    cyl_d,
    exterior_derivative,
    fiber_integrate_t,
    integrate_over_subtorus,
    sup_norm,
    wedge,
)

__all__ = ["random_form", "random_cylinder_form", "random_skew_connection", "IDENTITIES", "run_battery"]

IDENTITIES = ("d_squared", "leibniz", "associativity", "stokes_closed", "cylinder_stokes", "bianchi")


def random_form(
    chart: TorusChart,
    rank: int,
    grade: int,
    rng: np.random.Generator,
    max_freq: int,
    terms: int = 2,
) -> MatrixValuedForm:
    """Random grade-``grade`` form with ``terms`` modes per component, ``|k_j| <= max_freq``."""
    comps = {}
    for index in combinations(range(chart.dim), grade):
        modes = {}
        for _ in range(terms):
            k = tuple(int(v) for v in rng.integers(-max_freq, max_freq + 1, size=chart.dim))
            c = rng.normal(size=(rank, rank)) + 1j * rng.normal(size=(rank, rank))
            modes[k] = modes.get(k, 0) + c
        comps[index] = modes
    return MatrixValuedForm.from_terms(chart, rank, grade, comps)


def random_cylinder_form(
    chart: TorusChart, rank: int, grade: int, rng: np.random.Generator, max_freq: int, t_degree: int = 2
) -> CylinderForm:
    base = tuple(random_form(chart, rank, grade, rng, max_freq) for _ in range(t_degree + 1))
    if grade == 0:
        return CylinderForm(chart, rank, 0, base, ())
    fiber = tuple(random_form(chart, rank, grade - 1, rng, max_freq) for _ in range(t_degree + 1))
    return CylinderForm(chart, rank, grade, base, fiber)


def random_skew_connection(
    chart: TorusChart, rank: int, rng: np.random.Generator, max_freq: int, amplitude: float = 0.5
) -> Connection:
    """Random ``A`` with ``A(x)`` skew-Hermitian (a unitary connection)."""
    a = random_form(chart, rank, 1, rng, max_freq).scale(amplitude)
    comps = {}
    for key, f in a.components.items():
        # f - f^dagger(x): the mode k of f^dagger is conj(c_{-k})^T
        dag = type(f).build(-f.freqs, np.conj(np.transpose(f.coeffs, (0, 2, 1))))
        comps[key] = (f + dag.scale(-1.0)).scale(0.5)
    return Connection(MatrixValuedForm(chart, rank, 1, comps))


@dataclass(frozen=True)
class _Case:
    chart: TorusChart
    rank: int


def _draw_case(rng, max_dim: int, max_rank: int, k_max: int) -> _Case:
    dim = int(rng.integers(1, max_dim + 1))
    rank = int(rng.integers(1, max_rank + 1))
    return _Case(TorusChart(dim, k_max), rank)


def _grade(rng, dim: int, low: int = 0, high: int | None = None) -> int:
    high = dim if high is None else min(high, dim)
    return int(rng.integers(low, high + 1))


def _d_squared(rng, case: _Case, freq: int) -> float:
    g = _grade(rng, case.chart.dim, 0, case.chart.dim - 2) if case.chart.dim >= 2 else 0
    a = random_form(case.chart, case.rank, g, rng, freq)
    dd = exterior_derivative(exterior_derivative(a, strict=False), strict=False)
    return sup_norm(dd)


def _leibniz(rng, case: _Case, freq: int) -> float:
    n = case.chart.dim
    ga = _grade(rng, n)
    gb = _grade(rng, n, 0, n - ga)
    a = random_form(case.chart, case.rank, ga, rng, freq)
    b = random_form(case.chart, case.rank, gb, rng, freq)
    lhs = exterior_derivative(wedge(a, b), strict=False)
    rhs = wedge(exterior_derivative(a, strict=False), b) + wedge(
        a, exterior_derivative(b, strict=False)
    ).scale((-1) ** ga)
    return sup_norm(lhs - rhs) / max(1.0, sup_norm(lhs))


def _associativity(rng, case: _Case, freq: int) -> float:
    n = case.chart.dim
    ga = _grade(rng, n)
    gb = _grade(rng, n, 0, n - ga)
    gc = _grade(rng, n, 0, n - ga - gb)
    a, b, c = (random_form(case.chart, case.rank, g, rng, freq) for g in (ga, gb, gc))
    left = wedge(wedge(a, b), c)
    right = wedge(a, wedge(b, c))
    return sup_norm(left - right) / max(1.0, sup_norm(left))


def _stokes_closed(rng, case: _Case, freq: int) -> float:
    n = case.chart.dim
    k = int(rng.integers(1, n + 1))
    axes = tuple(int(v) for v in rng.permutation(n)[:k])
    base = tuple(float(v) for v in rng.uniform(0, 2 * np.pi, size=n - k))
    # subtorus integrals need scalar integrands
    a = random_form(case.chart, 1, k - 1, rng, freq)
    return abs(integrate_over_subtorus(exterior_derivative(a, strict=False), axes, base))


def _cylinder_stokes(rng, case: _Case, freq: int) -> float:
    n = case.chart.dim
    g = _grade(rng, n + 1, 1)
    a = random_cylinder_form(case.chart, case.rank, g, rng, freq, int(rng.integers(0, 4)))
    lhs = fiber_integrate_t(cyl_d(a)) + exterior_derivative(fiber_integrate_t(a), strict=False)
    w1, _ = a.evaluate(1.0)
    w0, _ = a.evaluate(0.0)
    return sup_norm(lhs - (w1 - w0)) / max(1.0, sup_norm(w1 - w0))


def _bianchi(rng, case: _Case, freq: int) -> float:
    c = random_skew_connection(case.chart, case.rank, rng, freq)
    theta = curvature(c)
    resid = exterior_derivative(theta, strict=False) - wedge(theta, c.A) + wedge(c.A, theta)
    return sup_norm(resid)


_RUNNERS = {
    "d_squared": (_d_squared, 1),
    "leibniz": (_leibniz, 2),
    "associativity": (_associativity, 3),
    "stokes_closed": (_stokes_closed, 1),
    "cylinder_stokes": (_cylinder_stokes, 2),
    "bianchi": (_bianchi, 3),
}


def run_battery(
    cases: int,
    seed: int = 0,
    max_dim: int = 4,
    max_rank: int = 3,
    k_max: int = 3,
    names=IDENTITIES,
) -> dict[str, float]:
    """Max residual of each identity over ``cases`` random draws.

    The frequency of each operand is ``k_max // factors`` so that products of
    ``factors`` operands stay inside the chart.
    """
    out = {}
    for name in names:
        fn, factors = _RUNNERS[name]
        rng = np.random.default_rng([seed, IDENTITIES.index(name)])
        freq = k_max // factors
        worst = 0.0
        for _ in range(cases):
            case = _draw_case(rng, max_dim, max_rank, k_max)
            worst = max(worst, fn(rng, case, freq))
        out[name] = worst
    return out
