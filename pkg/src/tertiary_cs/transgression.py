"""Transgression forms of paths and sheets of connections.

All parameter integrals are polynomial, so Gauss-Legendre quadrature with a
node count taken from the integrand degree is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .connections import (
    ConnectionPath,
    ConnectionSheet,
    convex_path,
    curvature,
    endpoints_fixed,
    straight_homotopy,
)
from .errors import EndpointsNotFixed, GradeOverflow, HarmonicObstruction, NotClosed, StokesViolation
from .exterior import (
    CylinderForm,
    MatrixValuedForm,
    cyl_d,
    cyl_wedge,
    exterior_derivative,
    solve_potential,
    sup_norm,
)
from .polynomials import InvariantPolynomial, chern_form, polarized_chern, polarized_chern_two_odd

__all__ = [
    "TransgressionReport",
    "BetaReport",
    "gauss_legendre",
    "nodes_for_degree",
    "eta_form",
    "fiber_transgression",
    "check_transgression_stokes",
    "double_transgression",
    "beta_for_pair",
    "relative_cs_cylinder",
    "cylinder_chern_form",
]

SQUARE_STOKES_TOL = 1e-10


def gauss_legendre(count: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on ``[0, 1]``."""
    x, w = np.polynomial.legendre.leggauss(count)
    return (x + 1) / 2, w / 2


def nodes_for_degree(degree: int) -> int:
    """Smallest Gauss-Legendre rule exact for polynomials of ``degree``."""
    return max(1, math.ceil((degree + 1) / 2))


@dataclass(frozen=True, eq=False)
class TransgressionReport:
    form: MatrixValuedForm
    stokes_residual: float
    closed_residual: float
    quadrature_nodes: int


def eta_form(path: ConnectionPath, p: int, nodes: int | None = None) -> tuple[MatrixValuedForm, int]:
    """``p int_0^1 P_p(A'(t), Theta_t, ..., Theta_t) dt`` and the node count used.

    Zero by grade when ``2p - 1`` exceeds the torus dimension.
    """
    chart = path.chart
    grade = 2 * p - 1
    zero = MatrixValuedForm.zero(chart, 1, grade)
    d = path.degree
    if grade > chart.dim or d == 0:
        return zero, 0
    if nodes is None:
        nodes = nodes_for_degree((d - 1) + 2 * d * (p - 1))
    P = InvariantPolynomial(p, path.rank)
    velocity = path.derivative()
    total = zero
    for t, w in zip(*gauss_legendre(nodes)):
        theta = curvature(path.at(float(t)))
        term = polarized_chern(P, [velocity.form_at(float(t))] + [theta] * (p - 1))
        total = total + term.scale(p * float(w))
    return total, nodes


def fiber_transgression(path: ConnectionPath, p: int, nodes: int | None = None) -> TransgressionReport:
    """Transgression form of a path; ``eta_p`` for a given path, ``TP`` for a chord.

    Records ``|d form - (c_p(end) - c_p(start))|`` and ``|d form|``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if 2 * p - 1 > path.chart.dim:
        raise GradeOverflow(f"transgression of degree {2 * p - 1} on T^{path.chart.dim}")
    form, used = eta_form(path, p, nodes)
    dform = exterior_derivative(form, strict=False)
    boundary = chern_form(path.at(1.0), p) - chern_form(path.at(0.0), p)
    return TransgressionReport(
        form=form,
        stokes_residual=sup_norm(dform - boundary),
        closed_residual=sup_norm(dform),
        quadrature_nodes=used,
    )


def check_transgression_stokes(path: ConnectionPath, p: int, tol: float = 1e-10) -> bool:
    return fiber_transgression(path, p).stokes_residual <= tol


def _square_integral(sheet: ConnectionSheet, p: int, nodes: tuple[int, int] | None) -> MatrixValuedForm:
    ds_deg, dt_deg = sheet.degrees
    if nodes is None:
        s_deg = max(ds_deg - 1, 0) + ds_deg + 2 * ds_deg * (p - 2)
        t_deg = dt_deg + max(dt_deg - 1, 0) + 2 * dt_deg * (p - 2)
        nodes = (nodes_for_degree(s_deg), nodes_for_degree(t_deg))
    P = InvariantPolynomial(p, sheet.rank)
    d_s, d_t = sheet.ds(), sheet.dt()
    s_nodes, s_weights = gauss_legendre(nodes[0])
    t_nodes, t_weights = gauss_legendre(nodes[1])
    total = MatrixValuedForm.zero(sheet.chart, 1, 2 * p - 2)
    for s, ws in zip(s_nodes, s_weights):
        path = sheet.path_at(float(s))
        a_path = d_s.path_at(float(s))
        b_path = d_t.path_at(float(s))
        for t, wt in zip(t_nodes, t_weights):
            theta = curvature(path.at(float(t)))
            q = polarized_chern_two_odd(
                P, a_path.form_at(float(t)), b_path.form_at(float(t)), [theta] * (p - 2)
            )
            total = total + q.scale(float(ws * wt))
    return total


def double_transgression(
    sheet: ConnectionSheet,
    p: int,
    check: bool = True,
    nodes: tuple[int, int] | None = None,
) -> MatrixValuedForm:
    """``-p (p - 1) int int Q(d_s A, d_t A, Theta^{p-2}) ds dt`` over the unit square.

    The sign makes ``d(result) = TP(s = 1 edge) - TP(s = 0 edge)``; with
    ``check=True`` that identity is verified and :class:`StokesViolation`
    raised beyond ``1e-10``.
    """
    if p < 2:
        raise ValueError("double transgression needs p >= 2")
    if 2 * p - 2 > sheet.chart.dim:
        raise GradeOverflow(f"double transgression of degree {2 * p - 2} on T^{sheet.chart.dim}")
    if not endpoints_fixed(sheet):
        raise EndpointsNotFixed("sheet endpoints move with s")
    beta = _square_integral(sheet, p, nodes).scale(-p * (p - 1))
    if check:
        edge = eta_form(sheet.path_at(1.0), p)[0] - eta_form(sheet.path_at(0.0), p)[0]
        residual = sup_norm(exterior_derivative(beta, strict=False) - edge)
        if residual > SQUARE_STOKES_TOL:
            raise StokesViolation(residual, "square Stokes identity")
    return beta


@dataclass(frozen=True, eq=False)
class BetaReport:
    """Potential ``beta`` with ``d beta = TP(chord) - eta_p`` and its cross-checks.

    ``hodge_status`` is ``"ok"``, ``"harmonic_obstruction"`` or ``"not_closed"``;
    ``hodge_residual`` is ``|d(beta - beta')|`` against the Fourier solver's
    potential when that solve succeeds.
    """

    form: MatrixValuedForm
    tp: MatrixValuedForm
    eta: MatrixValuedForm
    exactness_residual: float
    hodge_status: str
    hodge_residual: float | None
    harmonic_residual: float


def beta_for_pair(gamma: ConnectionPath, p: int, tol: float = 1e-10) -> BetaReport:
    c0, c1 = gamma.at(0.0), gamma.at(1.0)
    chord = convex_path(c0, c1)
    sheet = straight_homotopy(gamma, chord)
    beta = double_transgression(sheet, p, check=False)
    tp = eta_form(chord, p)[0]
    eta = eta_form(gamma, p)[0]
    target = tp - eta
    exactness = sup_norm(exterior_derivative(beta, strict=False) - target)

    status, hodge, harmonic = "ok", None, 0.0
    try:
        beta_prime = solve_potential(target, tol)
    except HarmonicObstruction as exc:
        status, harmonic = "harmonic_obstruction", exc.residual
    except NotClosed:
        status = "not_closed"
    else:
        hodge = sup_norm(exterior_derivative(beta - beta_prime, strict=False))
    return BetaReport(beta, tp, eta, exactness, status, hodge, harmonic)


def relative_cs_cylinder(path: ConnectionPath, p: int) -> CylinderForm:
    """Chern-Simons form on ``I x T^n`` of ``A~ = A(t)`` relative to ``d``.

    ``cs = p int_0^1 P_p(A~, F_u, ..., F_u) du`` with ``F_u = u dA~ + u^2 A~ ^ A~``,
    so ``cyl_d(cs) = P_p(Theta~, ..., Theta~)``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if 2 * p - 1 > path.chart.dim + 1:
        raise GradeOverflow(f"cylinder form of degree {2 * p - 1} on I x T^{path.chart.dim}")
    P = InvariantPolynomial(p, path.rank)
    a = CylinderForm.from_base(path.coeffs)
    da = cyl_d(a)
    aa = cyl_wedge(a, a)
    total = CylinderForm(path.chart, 1, 2 * p - 1)
    for u, w in zip(*gauss_legendre(p)):
        u = float(u)
        field = da.scale(u) + aa.scale(u * u)
        term = polarized_chern(P, [a] + [field] * (p - 1))
        total = total + term.scale(p * float(w))
    return total


def cylinder_chern_form(path: ConnectionPath, p: int) -> CylinderForm:
    """``P_p(Theta~^p)`` for ``A~ = A(t)`` on ``I x T^n``."""
    a = CylinderForm.from_base(path.coeffs)
    theta = cyl_d(a) + cyl_wedge(a, a)
    return polarized_chern(InvariantPolynomial(p, path.rank), [theta] * p)
