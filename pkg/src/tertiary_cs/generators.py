"""Named families of connections used by scenario files.

Every generator returns a :class:`Family`: a path ``gamma`` and an
endpoint-fixed sheet ``A(s, t) = gamma(t) + s t (1 - t) B``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .connections import ConnectionPath, ConnectionSheet
from .errors import SchemaError
from .exterior import MatrixValuedForm, TorusChart, exterior_derivative, wedge

__all__ = ["Family", "Generator", "GENERATORS", "list_generators", "build_family"]


@dataclass(frozen=True, eq=False)
class Family:
    path: ConnectionPath
    sheet: ConnectionSheet
    flat: bool


@dataclass(frozen=True)
class Generator:
    name: str
    summary: str
    flat: bool
    defaults: dict
    build: Callable


def _bump_sheet(path: ConnectionPath, bump: MatrixValuedForm) -> ConnectionSheet:
    zero = bump.zero_like()
    return ConnectionSheet((path.coeffs, (zero, bump, -bump)))


def _poly(values, name: str) -> list[float]:
    if not isinstance(values, list) or not values or not all(isinstance(v, (int, float)) for v in values):
        raise SchemaError(f"generator.params.{name}", "expected a non-empty list of numbers")
    return [float(v) for v in values]


def _abelian_t2(chart: TorusChart, rank: int, params: dict, rng, p_max: int) -> Family:
    if rank != 1:
        raise SchemaError("rank", "abelian_t2 needs rank 1")
    if chart.dim < 2:
        raise SchemaError("chart.dim", "abelian_t2 needs dim >= 2")
    a = _poly(params["a"], "a")
    b = _poly(params["b"], "b")
    gauge = float(params["gauge"])
    bump = _poly(params["bump"], "bump")
    if gauge and chart.k_max < 1:
        raise SchemaError("k_max", "a gauge term needs k_max >= 1")
    n = chart.dim
    zero_k = (0,) * n
    e0 = tuple(1 if j == 0 else 0 for j in range(n))
    e1 = tuple(1 if j == 1 else 0 for j in range(n))
    neg = lambda k: tuple(-v for v in k)  # noqa: E731
    coeffs = []
    for j in range(max(len(a), len(b))):
        aj = a[j] if j < len(a) else 0.0
        bj = b[j] if j < len(b) else 0.0
        terms = {(0,): {zero_k: 1j * aj}, (1,): {zero_k: 1j * bj}}
        if j == 0 and gauge:
            # i * gauge * d(sin x0 + cos x1)
            terms[(0,)].update({e0: 0.5j * gauge, neg(e0): 0.5j * gauge})
            terms[(1,)].update({e1: -0.5 * gauge, neg(e1): 0.5 * gauge})
        coeffs.append(MatrixValuedForm.from_terms(chart, 1, 1, terms))
    B = MatrixValuedForm.from_terms(
        chart, 1, 1, {(0,): {zero_k: 1j * bump[0]}, (1,): {zero_k: 1j * bump[-1]}}
    )
    path = ConnectionPath(tuple(coeffs))
    return Family(path, _bump_sheet(path, B), True)


def _random_unitary(rank: int, rng) -> np.ndarray:
    z = rng.normal(size=(rank, rank)) + 1j * rng.normal(size=(rank, rank))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _commuting_form(chart, g, values: np.ndarray) -> MatrixValuedForm:
    """``sum_i g (i diag(values[i])) g^{-1} dx_i`` for the first ``len(values)`` axes."""
    zero_k = (0,) * chart.dim
    g_inv = np.linalg.inv(g)
    terms = {(i,): {zero_k: g @ np.diag(1j * v) @ g_inv} for i, v in enumerate(values)}
    return MatrixValuedForm.from_terms(chart, g.shape[0], 1, terms)


def _commuting(n_axes: int | None):
    def build(chart: TorusChart, rank: int, params: dict, rng, p_max: int) -> Family:
        axes = chart.dim if n_axes is None else n_axes
        axes = min(axes, 4) if n_axes is None else axes
        if chart.dim < axes:
            raise SchemaError("chart.dim", f"generator needs dim >= {axes}")
        degree = int(params["degree"])
        if not 1 <= degree <= 2:
            raise SchemaError("generator.params.degree", "must be 1 or 2")
        scale = float(params["scale"])
        g = _random_unitary(rank, rng) if params["conjugate"] else np.eye(rank, dtype=complex)
        coeffs = tuple(
            _commuting_form(chart, g, scale * rng.normal(size=(axes, rank)))
            for _ in range(degree + 1)
        )
        B = _commuting_form(chart, g, float(params["bump_scale"]) * rng.normal(size=(axes, rank)))
        path = ConnectionPath(coeffs)
        return Family(path, _bump_sheet(path, B), True)

    return build


def _gauge_factors(chart: TorusChart, rank: int, sign: int) -> list[MatrixValuedForm]:
    """``R(x_0), S(x_1), R(x_2)`` (or their inverses) acting on the first 2 x 2 block.

    ``R`` is the rotation by ``x`` and ``S = diag(e^{ix}, e^{-ix})``; both are
    trigonometric polynomials of frequency one, so ``g`` stays band limited.
    """
    n = chart.dim
    unit = lambda axis, k: tuple(k if j == axis else 0 for j in range(n))  # noqa: E731
    rest = np.zeros((rank, rank), dtype=complex)
    rest[2:, 2:] = np.eye(rank - 2)
    half = np.zeros((rank, rank), dtype=complex)
    half[:2, :2] = 0.5 * np.eye(2)
    J = np.zeros((rank, rank), dtype=complex)
    J[0, 1], J[1, 0] = -1.0, 1.0
    P = np.zeros((rank, rank), dtype=complex)
    P[0, 0] = 1.0
    M = np.zeros((rank, rank), dtype=complex)
    M[1, 1] = 1.0

    def rot(axis):
        modes = {unit(axis, 1): half + sign * J / 2j, unit(axis, -1): half - sign * J / 2j}
        modes[unit(axis, 0)] = rest
        return MatrixValuedForm.from_terms(chart, rank, 0, {(): modes})

    def diag(axis):
        modes = {unit(axis, sign): P, unit(axis, -sign): M, unit(axis, 0): rest}
        return MatrixValuedForm.from_terms(chart, rank, 0, {(): modes})

    factors = [rot(0), diag(1), rot(2)]
    return factors if sign > 0 else factors[::-1]


def _gauged_commuting(chart: TorusChart, rank: int, params: dict, rng, p_max: int) -> Family:
    if rank < 2:
        raise SchemaError("rank", "gauged_commuting needs rank >= 2")
    if chart.dim < 3:
        raise SchemaError("chart.dim", "gauged_commuting needs dim >= 3")
    need = 4 * max(p_max, 1) - 2
    if chart.k_max < need:
        raise SchemaError("k_max", f"gauged_commuting with p <= {p_max} needs k_max >= {need}")
    base = _commuting(None)(chart, rank, params, rng, p_max)
    g = _product(_gauge_factors(chart, rank, 1))
    g_inv = _product(_gauge_factors(chart, rank, -1))
    gauge = lambda a: wedge(wedge(g_inv, a), g)  # noqa: E731
    pure = wedge(g_inv, exterior_derivative(g))
    coeffs = [gauge(a) for a in base.path.coeffs]
    coeffs[0] = coeffs[0] + pure
    path = ConnectionPath(tuple(coeffs))
    bump = gauge(base.sheet.coeffs[1][1])
    return Family(path, _bump_sheet(path, bump), True)


def _product(forms: list[MatrixValuedForm]) -> MatrixValuedForm:
    out = forms[0]
    for f in forms[1:]:
        out = wedge(out, f)
    return out


def _random_skew_form(chart: TorusChart, rank: int, rng, freq: int, terms: int, amplitude: float):
    comps = {}
    n = chart.dim
    for i in range(n):
        modes: dict = {}
        for _ in range(terms):
            k = tuple(int(v) for v in rng.integers(-freq, freq + 1, size=n))
            c = amplitude * (rng.normal(size=(rank, rank)) + 1j * rng.normal(size=(rank, rank)))
            if all(v == 0 for v in k):
                pairs = [(k, 0.5 * (c - c.conj().T))]
            else:
                pairs = [(k, c), (tuple(-v for v in k), -c.conj().T)]
            for key, val in pairs:
                modes[key] = modes.get(key, 0) + val
        comps[(i,)] = modes
    return MatrixValuedForm.from_terms(chart, rank, 1, comps)


def _perturbed_nonflat(chart: TorusChart, rank: int, params: dict, rng, p_max: int) -> Family:
    freq = params["freq"]
    if freq is None:
        freq = chart.k_max // (2 * max(p_max, 1))
    freq = int(freq)
    if freq < 0:
        raise SchemaError("generator.params.freq", "must be >= 0")
    degree = int(params["degree"])
    if not 1 <= degree <= 2:
        raise SchemaError("generator.params.degree", "must be 1 or 2")
    terms, amp = int(params["terms"]), float(params["amplitude"])
    coeffs = tuple(_random_skew_form(chart, rank, rng, freq, terms, amp) for _ in range(degree + 1))
    B = _random_skew_form(chart, rank, rng, freq, terms, float(params["bump_amplitude"]))
    path = ConnectionPath(coeffs)
    return Family(path, _bump_sheet(path, B), False)


_COMMUTING_DEFAULTS = {"degree": 2, "scale": 0.6, "bump_scale": 0.5, "conjugate": True}

GENERATORS: dict[str, Generator] = {
    g.name: g
    for g in [
        Generator(
            "abelian_t2",
            "rank-1 flat family A(t) = i(a(t) dx_0 + b(t) dx_1) + i*gauge*d(sin x_0 + cos x_1)",
            True,
            {"a": [0.3, 0.8, -0.5], "b": [-0.2, 0.4, 0.6], "gauge": 0.25, "bump": [0.7, -0.3]},
            _abelian_t2,
        ),
        Generator(
            "commuting_t3",
            "flat family in a conjugated Cartan subalgebra on axes 0..2",
            True,
            dict(_COMMUTING_DEFAULTS),
            _commuting(3),
        ),
        Generator(
            "commuting_t4",
            "flat family in a conjugated Cartan subalgebra on axes 0..3",
            True,
            dict(_COMMUTING_DEFAULTS),
            _commuting(4),
        ),
        Generator(
            "perturbed_nonflat",
            "seeded random skew-Hermitian trigonometric coefficients (not flat)",
            False,
            {"degree": 2, "terms": 2, "amplitude": 0.4, "bump_amplitude": 0.3, "freq": None},
            _perturbed_nonflat,
        ),
        Generator(
            "flat_sheet_bump",
            "commuting chord plus an s*t*(1-t) bump inside the same Cartan subalgebra",
            True,
            {"degree": 1, "scale": 0.6, "bump_scale": 0.8, "conjugate": True},
            _commuting(None),
        ),
        Generator(
            "gauged_commuting",
            "commuting family gauge transformed by g = R(x_0) S(x_1) R(x_2): flat, non-constant",
            True,
            {"degree": 1, "scale": 0.6, "bump_scale": 0.8, "conjugate": True},
            _gauged_commuting,
        ),
    ]
}


def list_generators() -> list[dict]:
    return [
        {"name": g.name, "summary": g.summary, "flat": g.flat, "defaults": g.defaults}
        for g in GENERATORS.values()
    ]


def build_family(
    name: str, chart: TorusChart, rank: int, params: dict, seed: int, p_max: int = 2
) -> Family:
    gen = GENERATORS[name]
    merged = dict(gen.defaults)
    merged.update(params)
    return gen.build(chart, rank, merged, np.random.default_rng(seed), p_max)
