"""Connections, polynomial paths and sheets of connections on trivial bundles.

A connection is ``d + A`` with ``A`` a global matrix 1-form.  Paths are
``A(t) = sum_j t^j A_j`` and sheets ``A(s, t) = sum_{j,k} s^j t^k A_{jk}``
for ``s, t`` in ``[0, 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ChartMismatch, GradeMismatch, RankMismatch
from .exterior import MatrixValuedForm, TorusChart, exterior_derivative, sup_norm, wedge

__all__ = [
    "Connection",
    "ConnectionPath",
    "ConnectionSheet",
    "curvature",
    "is_flat",
    "path_eval",
    "path_derivative",
    "convex_path",
    "straight_homotopy",
    "endpoints_fixed",
    "holonomy",
    "flatness_residual_path",
    "flatness_residual_sheet",
    "sample_points",
]

MAX_PATH_DEGREE = 8
FLAT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Connection:
    A: MatrixValuedForm

    def __post_init__(self) -> None:
        if self.A.grade != 1:
            raise GradeMismatch(f"connection form must have grade 1, got {self.A.grade}")

    @classmethod
    def trivial(cls, chart: TorusChart, rank: int) -> Connection:
        return cls(MatrixValuedForm.zero(chart, rank, 1))

    @property
    def chart(self) -> TorusChart:
        return self.A.chart

    @property
    def rank(self) -> int:
        return self.A.rank


def curvature(c: Connection) -> MatrixValuedForm:
    """``Theta = dA + A ^ A``."""
    return exterior_derivative(c.A, strict=False) + wedge(c.A, c.A)


def is_flat(c: Connection, tol: float = FLAT_TOL) -> tuple[bool, float]:
    residual = sup_norm(curvature(c))
    return residual <= tol, residual


def _poly_eval(coeffs: Sequence[MatrixValuedForm], t: float) -> MatrixValuedForm:
    result = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        result = result.scale(t) + c
    return result


def _check_family(coeffs: Sequence[MatrixValuedForm]) -> None:
    ref = coeffs[0]
    for c in coeffs:
        if c.grade != 1:
            raise GradeMismatch("path coefficients must be 1-forms")
        if c.chart != ref.chart:
            raise ChartMismatch(f"{c.chart} vs {ref.chart}")
        if c.rank != ref.rank:
            raise RankMismatch(f"rank {c.rank} vs {ref.rank}")


@dataclass(frozen=True, eq=False)
class ConnectionPath:
    """``A(t) = sum_j t^j coeffs[j]``."""

    coeffs: tuple

    def __post_init__(self) -> None:
        coeffs = tuple(self.coeffs)
        if not coeffs:
            raise ValueError("a path needs at least one coefficient")
        _check_family(coeffs)
        if len(coeffs) - 1 > MAX_PATH_DEGREE:
            raise ValueError(f"path degree {len(coeffs) - 1} exceeds {MAX_PATH_DEGREE}")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def chart(self) -> TorusChart:
        return self.coeffs[0].chart

    @property
    def rank(self) -> int:
        return self.coeffs[0].rank

    def at(self, t: float) -> Connection:
        return Connection(_poly_eval(self.coeffs, t))

    def form_at(self, t: float) -> MatrixValuedForm:
        return _poly_eval(self.coeffs, t)

    def derivative(self) -> ConnectionPath:
        if self.degree == 0:
            return ConnectionPath((self.coeffs[0].zero_like(),))
        return ConnectionPath(tuple(c.scale(j) for j, c in enumerate(self.coeffs))[1:])

    def reparametrize(self, phi: Sequence[float]) -> ConnectionPath:
        """``t -> A(phi(t))`` for a polynomial ``phi`` given by ascending coefficients."""
        phi = np.polynomial.Polynomial(phi)
        power = np.polynomial.Polynomial([1.0])
        total: list[MatrixValuedForm] = []
        for c in self.coeffs:
            for j, w in enumerate(power.coef):
                if w == 0:
                    continue
                term = c.scale(float(w))
                if j < len(total):
                    total[j] = total[j] + term
                else:
                    total.extend(c.zero_like() for _ in range(j - len(total)))
                    total.append(term)
            power = power * phi
        return ConnectionPath(tuple(total))


def path_eval(p: ConnectionPath, t: float) -> Connection:
    return p.at(t)


def path_derivative(p: ConnectionPath) -> ConnectionPath:
    return p.derivative()


def convex_path(c0: Connection, c1: Connection) -> ConnectionPath:
    """``A_0 + t (A_1 - A_0)``."""
    return ConnectionPath((c0.A, c1.A - c0.A))


@dataclass(frozen=True, eq=False)
class ConnectionSheet:
    """``A(s, t) = sum_{j,k} s^j t^k coeffs[j][k]`` (rectangular table)."""

    coeffs: tuple

    def __post_init__(self) -> None:
        rows = [tuple(r) for r in self.coeffs]
        if not rows or not rows[0]:
            raise ValueError("a sheet needs at least one coefficient")
        width = max(len(r) for r in rows)
        ref = rows[0][0]
        padded = tuple(r + tuple(ref.zero_like() for _ in range(width - len(r))) for r in rows)
        _check_family([c for r in padded for c in r])
        object.__setattr__(self, "coeffs", padded)

    @classmethod
    def from_paths(cls, paths: Sequence[ConnectionPath]) -> ConnectionSheet:
        """Sheet whose ``s^j`` coefficient is the path ``paths[j]``."""
        return cls(tuple(p.coeffs for p in paths))

    @property
    def degrees(self) -> tuple[int, int]:
        return len(self.coeffs) - 1, len(self.coeffs[0]) - 1

    @property
    def chart(self) -> TorusChart:
        return self.coeffs[0][0].chart

    @property
    def rank(self) -> int:
        return self.coeffs[0][0].rank

    def path_at(self, s: float) -> ConnectionPath:
        """The t-path at fixed ``s``."""
        ds, dt = self.degrees
        cols = []
        for k in range(dt + 1):
            cols.append(_poly_eval([self.coeffs[j][k] for j in range(ds + 1)], s))
        return ConnectionPath(tuple(cols))

    def s_path_at(self, t: float) -> ConnectionPath:
        """The s-path at fixed ``t``."""
        return ConnectionPath(tuple(_poly_eval(row, t) for row in self.coeffs))

    def at(self, s: float, t: float) -> Connection:
        return self.path_at(s).at(t)

    def ds(self) -> ConnectionSheet:
        if len(self.coeffs) == 1:
            return ConnectionSheet(((self.coeffs[0][0].zero_like(),),))
        return ConnectionSheet(
            tuple(tuple(c.scale(j) for c in row) for j, row in enumerate(self.coeffs))[1:]
        )

    def dt(self) -> ConnectionSheet:
        if len(self.coeffs[0]) == 1:
            return ConnectionSheet(((self.coeffs[0][0].zero_like(),),))
        return ConnectionSheet(
            tuple(tuple(c.scale(k) for k, c in enumerate(row))[1:] for row in self.coeffs)
        )


def straight_homotopy(gamma0: ConnectionPath, gamma1: ConnectionPath) -> ConnectionSheet:
    """``H(s, t) = (1 - s) gamma0(t) + s gamma1(t)``."""
    width = max(gamma0.degree, gamma1.degree) + 1
    zero = gamma0.coeffs[0].zero_like()
    g0 = list(gamma0.coeffs) + [zero] * (width - len(gamma0.coeffs))
    g1 = list(gamma1.coeffs) + [zero] * (width - len(gamma1.coeffs))
    return ConnectionSheet((tuple(g0), tuple(b - a for a, b in zip(g0, g1))))


def endpoints_fixed(sheet: ConnectionSheet, tol: float = 1e-12) -> bool:
    """True iff ``A(s, 0)`` and ``A(s, 1)`` do not depend on ``s``."""
    for row in sheet.coeffs[1:]:
        at_zero = row[0]
        at_one = row[0]
        for c in row[1:]:
            at_one = at_one + c
        if sup_norm(at_zero) > tol or sup_norm(at_one) > tol:
            return False
    return True


def sample_points(degree: int, minimum: int = 9) -> np.ndarray:
    """Endpoints plus Gauss nodes on ``[0, 1]``: enough to certify a polynomial of ``degree`` vanishes."""
    count = max(minimum, degree + 1)
    nodes, _ = np.polynomial.legendre.leggauss(count - 2)
    return np.concatenate([[0.0], (nodes + 1) / 2, [1.0]])


def flatness_residual_path(path: ConnectionPath) -> float:
    """Max curvature norm over enough samples to bound the degree-``2d`` curvature."""
    return max(
        sup_norm(curvature(path.at(float(t)))) for t in sample_points(2 * path.degree)
    )


def flatness_residual_sheet(sheet: ConnectionSheet) -> float:
    ds, dt = sheet.degrees
    worst = 0.0
    for s in sample_points(2 * ds):
        path = sheet.path_at(float(s))
        for t in sample_points(2 * dt):
            worst = max(worst, sup_norm(curvature(path.at(float(t)))))
    return worst


def holonomy(c: Connection, axis: int, basepoint: Sequence[float], steps: int = 256) -> np.ndarray:
    """Parallel transport around the ``axis`` coordinate loop through ``basepoint``.

    Solves ``U' = -A(e_axis) U`` over ``[0, 2 pi]`` with classical RK4.
    """
    if steps < 16:
        raise ValueError("holonomy needs at least 16 steps")
    n = c.chart.dim
    x0 = np.asarray(basepoint, dtype=float)
    if x0.shape != (n,):
        raise ValueError(f"basepoint must have {n} angles")
    r = c.rank
    h = 2 * math.pi / steps
    comp = c.A.components.get((axis,))
    if comp is None:
        return np.eye(r, dtype=np.complex128)
    taus = np.arange(2 * steps + 1) * (h / 2)
    points = x0[None, :] + np.outer(taus, np.eye(n)[axis])
    mats = -comp.evaluate(points)
    u = np.eye(r, dtype=np.complex128)
    for i in range(steps):
        a0, am, a1 = mats[2 * i], mats[2 * i + 1], mats[2 * i + 2]
        k1 = a0 @ u
        k2 = am @ (u + 0.5 * h * k1)
        k3 = am @ (u + 0.5 * h * k2)
        k4 = a1 @ (u + h * k3)
        u = u + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return u
