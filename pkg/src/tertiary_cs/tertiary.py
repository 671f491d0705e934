"""Character evaluations mod Z on coordinate cycles, variation and rigidity.

Characters are never stored as abstract objects: a character is a form
whose integrals over cycles are read mod Z.  For a trivialized bundle the
Chern-Simons character of ``d + A`` is the transgression form of the
straight path ``u -> u A``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

from .connections import (
    FLAT_TOL,
    Connection,
    ConnectionPath,
    ConnectionSheet,
    convex_path,
    curvature,
    endpoints_fixed,
    flatness_residual_path,
    flatness_residual_sheet,
    is_flat,
)
from .errors import EndpointsNotFixed, GradeMismatch, NotFlat, NotFlatFamily, NotFlatSheet
from .exterior import (
    MatrixValuedForm,
    exterior_derivative,
    fiber_integrate_t,
    integrate_over_subtorus,
    sup_norm,
    wedge,
)
from .polynomials import InvariantPolynomial, polarized_chern
from .transgression import (
    beta_for_pair,
    eta_form,
    gauss_legendre,
    nodes_for_degree,
    relative_cs_cylinder,
)

__all__ = [
    "CharacterValue",
    "CycleSpec",
    "reduce_mod_z",
    "mod_z_distance",
    "coordinate_cycles",
    "chern_simons_form",
    "character_of_connection",
    "tertiary_form",
    "tertiary_character",
    "DifferenceReport",
    "character_difference_check",
    "variational_integrand",
    "variational_finite_difference",
    "SweepReport",
    "rigidity_sweep",
]

IMAG_FINDING_TOL = 1e-10


def reduce_mod_z(z: complex) -> complex:
    re = z.real - math.floor(z.real)
    if re >= 1.0:
        re -= 1.0
    return complex(re, z.imag)


def mod_z_distance(a: complex, b: complex) -> float:
    """Distance between ``a`` and ``b`` in ``C / Z``."""
    diff = complex(a) - complex(b)
    re = diff.real - round(diff.real)
    return math.hypot(re, diff.imag)


@dataclass(frozen=True)
class CharacterValue:
    value: complex
    raw: complex
    residuals: dict = field(default_factory=dict)

    @classmethod
    def from_raw(cls, raw: complex, residuals: dict | None = None) -> CharacterValue:
        return cls(reduce_mod_z(complex(raw)), complex(raw), dict(residuals or {}))

    def distance(self, other: CharacterValue | complex) -> float:
        other = other.value if isinstance(other, CharacterValue) else other
        return mod_z_distance(self.value, other)


@dataclass(frozen=True)
class CycleSpec:
    """Oriented coordinate subtorus along ``axes`` through ``basepoint``.

    ``basepoint`` holds the angles of the complementary axes in increasing order.
    """

    axes: tuple
    basepoint: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "axes", tuple(int(a) for a in self.axes))
        object.__setattr__(self, "basepoint", tuple(float(b) for b in self.basepoint))

    @property
    def dim(self) -> int:
        return len(self.axes)

    def integrate(self, form: MatrixValuedForm) -> complex:
        return integrate_over_subtorus(form, self.axes, self.basepoint)

    def to_json(self) -> dict:
        return {"axes": list(self.axes), "basepoint": list(self.basepoint)}


def coordinate_cycles(n: int, k: int) -> list[CycleSpec]:
    return [CycleSpec(axes, (0.0,) * (n - k)) for axes in combinations(range(n), k)]


def _require_dim(z: CycleSpec, expected: int) -> None:
    if z.dim != expected:
        raise GradeMismatch(f"cycle of dimension {z.dim}, need {expected}")


def chern_simons_form(c: Connection, p: int) -> MatrixValuedForm:
    """Transgression of ``u -> u A``: ``d cs_p = c_p(A)``."""
    trivial = Connection.trivial(c.chart, c.rank)
    return eta_form(convex_path(trivial, c), p)[0]


def character_of_connection(
    c: Connection,
    p: int,
    z: CycleSpec,
    allow_nonflat: bool = False,
    tol: float = FLAT_TOL,
) -> CharacterValue:
    """``int_z cs_p(A) mod Z`` on a ``(2p - 1)``-cycle."""
    _require_dim(z, 2 * p - 1)
    flat, residual = is_flat(c, tol)
    if not flat and not allow_nonflat:
        raise NotFlat(residual)
    raw = z.integrate(chern_simons_form(c, p))
    return CharacterValue.from_raw(raw, {"curvature": residual})


@dataclass(frozen=True, eq=False)
class TertiaryForm:
    form: MatrixValuedForm
    beta: MatrixValuedForm
    residuals: dict


def tertiary_form(gamma: ConnectionPath, p: int, tol: float = FLAT_TOL) -> TertiaryForm:
    """The ``(2p - 2)``-form whose cycle integrals are the tertiary character.

    ``-fib(cs_p(chord)) - beta``: the fiber-integrated chord character is
    oriented so its curvature is ``+TP``, and ``beta`` removes ``TP - eta_p``.
    """
    if p < 2:
        raise ValueError("tertiary characters need p >= 2")
    if 2 * p - 2 > gamma.chart.dim:
        raise GradeMismatch(f"degree {2 * p - 2} exceeds T^{gamma.chart.dim}")
    flatness = flatness_residual_path(gamma)
    if flatness > tol:
        raise NotFlatFamily(flatness)
    chord = convex_path(gamma.at(0.0), gamma.at(1.0))
    fib = fiber_integrate_t(relative_cs_cylinder(chord, p))
    beta = beta_for_pair(gamma, p)
    residuals = {
        "flatness": flatness,
        "eta": sup_norm(beta.eta),
        "d_tp": sup_norm(exterior_derivative(beta.tp, strict=False)),
        "dbeta_minus_tp": beta.exactness_residual,
    }
    return TertiaryForm(-fib - beta.form, beta.form, residuals)


def tertiary_character(
    gamma: ConnectionPath, p: int, z: CycleSpec, tol: float = FLAT_TOL
) -> CharacterValue:
    _require_dim(z, 2 * p - 2)
    tf = tertiary_form(gamma, p, tol)
    return _evaluate_on(tf, z)


def _evaluate_on(tf: TertiaryForm, z: CycleSpec) -> CharacterValue:
    raw = z.integrate(tf.form)
    residuals = dict(tf.residuals)
    residuals["imag"] = abs(raw.imag)
    return CharacterValue.from_raw(raw, residuals)


@dataclass(frozen=True)
class DifferenceReport:
    start: CharacterValue
    end: CharacterValue
    eta_integral: complex
    residual: float
    passed: bool


def character_difference_check(
    gamma: ConnectionPath, p: int, z: CycleSpec, tol: float = 1e-8
) -> DifferenceReport:
    """``chi(A_1) - chi(A_0) = int_z eta_p`` mod Z; the path may be non-flat."""
    _require_dim(z, 2 * p - 1)
    start = character_of_connection(gamma.at(0.0), p, z, allow_nonflat=True)
    end = character_of_connection(gamma.at(1.0), p, z, allow_nonflat=True)
    eta_int = z.integrate(eta_form(gamma, p)[0])
    residual = mod_z_distance(end.raw - start.raw, eta_int)
    return DifferenceReport(start, end, eta_int, residual, residual <= tol)


def variational_integrand(sheet: ConnectionSheet, p: int, s: float) -> MatrixValuedForm:
    """``d/ds eta_p(gamma_s)``, i.e.

    ``p int_0^1 [P(d_s d_t A, Theta^{p-1}) + (p - 1) P(d_t A, d_s Theta, Theta^{p-2})] dt``
    with ``d_s Theta = d(d_s A) + d_s A ^ A + A ^ d_s A``.
    """
    if p < 2:
        raise ValueError("variational integrand needs p >= 2")
    if not endpoints_fixed(sheet):
        raise EndpointsNotFixed("sheet endpoints move with s")
    chart = sheet.chart
    grade = 2 * p - 1
    zero = MatrixValuedForm.zero(chart, 1, grade)
    if grade > chart.dim:
        return zero
    path = sheet.path_at(s)
    a_path = sheet.ds().path_at(s)
    velocity = path.derivative()
    mixed = a_path.derivative()
    dt = sheet.degrees[1]
    nodes = nodes_for_degree(2 * p * dt + 1)
    P = InvariantPolynomial(p, sheet.rank)
    total = zero
    for t, w in zip(*gauss_legendre(nodes)):
        t = float(t)
        A = path.form_at(t)
        theta = curvature(path.at(t))
        a = a_path.form_at(t)
        d_theta = exterior_derivative(a, strict=False) + wedge(a, A) + wedge(A, a)
        term = polarized_chern(P, [mixed.form_at(t)] + [theta] * (p - 1))
        extra = polarized_chern(P, [velocity.form_at(t), d_theta] + [theta] * (p - 2))
        term = term + extra.scale(p - 1)
        total = total + term.scale(p * float(w))
    return total


def variational_finite_difference(
    sheet: ConnectionSheet, p: int, s: float, h: float = 1e-3
) -> MatrixValuedForm:
    """Centered difference of ``eta_p(gamma_s)`` in ``s``."""
    plus = eta_form(sheet.path_at(s + h), p)[0]
    minus = eta_form(sheet.path_at(s - h), p)[0]
    return (plus - minus).scale(1.0 / (2 * h))


@dataclass(frozen=True)
class SweepReport:
    p: int
    s_grid: tuple
    cycles: tuple
    values: tuple  # one tuple of CharacterValue per s, ordered like cycles
    spread: float
    dbeta_variation: float
    status: str  # "pass", "fail" or "finding"
    residuals: dict


def rigidity_sweep(
    sheet: ConnectionSheet,
    p: int,
    cycles: Sequence[CycleSpec],
    s_grid: Sequence[float],
    tol: float = 1e-8,
    flat_tol: float = FLAT_TOL,
) -> SweepReport:
    """Tertiary characters of ``gamma_s`` along ``s_grid``.

    Constancy is asserted for ``p >= 3``; for ``p = 2`` the spread is only
    recorded and the status is ``"finding"``.
    """
    if not endpoints_fixed(sheet):
        raise EndpointsNotFixed("sheet endpoints move with s")
    flatness = flatness_residual_sheet(sheet)
    if flatness > flat_tol:
        raise NotFlatSheet(flatness)
    for z in cycles:
        _require_dim(z, 2 * p - 2)
    values = []
    dbetas = []
    worst: dict = {}
    for s in s_grid:
        tf = tertiary_form(sheet.path_at(float(s)), p, flat_tol)
        row = tuple(_evaluate_on(tf, z) for z in cycles)
        values.append(row)
        for v in row:
            for k, r in v.residuals.items():
                worst[k] = max(worst.get(k, 0.0), r)
        dbetas.append(exterior_derivative(tf.beta, strict=False))
    spread = 0.0
    for j in range(len(cycles)):
        column = [row[j].value for row in values]
        for a in column:
            for b in column:
                spread = max(spread, mod_z_distance(a, b))
    variation = 0.0
    for i in range(1, len(s_grid)):
        step = float(s_grid[i]) - float(s_grid[i - 1])
        if step != 0:
            variation = max(variation, sup_norm(dbetas[i] - dbetas[i - 1]) / abs(step))
    if p >= 3:
        status = "pass" if spread <= tol else "fail"
    else:
        status = "finding"
    worst["flatness_sheet"] = flatness
    return SweepReport(
        p, tuple(float(s) for s in s_grid), tuple(cycles), tuple(values), spread, variation, status, worst
    )
