"""Chern-normalized invariant polynomials on matrix-valued forms.

``P_p`` is the polarization of the elementary symmetric function ``e_p`` of
the eigenvalues, scaled by ``(i / 2 pi)^p`` so that
``det(I + (i / 2 pi) Theta) = sum_p P_p(Theta, ..., Theta)``.

``e_p`` is written in power sums ``tr(X^k)`` through the Girard (Newton)
table and then symmetrized over all orderings of the arguments.  The same
routine serves ordinary forms and cylinder forms, since it only needs
``wedge``, ``trace``, addition and scaling.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import permutations
from typing import Sequence

import numpy as np

from .connections import Connection, curvature
from .errors import ChartMismatch, RankMismatch, TooManyOddArguments
from .exterior import MatrixValuedForm, TorusChart

__all__ = [
    "InvariantPolynomial",
    "girard_table",
    "chern_polynomial",
    "polarized_chern",
    "polarized_chern_two_odd",
    "chern_form",
    "total_chern_oracle",
    "flux_curvature",
]

MAX_DEGREE = 4


def _partitions(p: int, largest: int | None = None):
    largest = p if largest is None else largest
    if p == 0:
        yield ()
        return
    for first in range(min(p, largest), 0, -1):
        for rest in _partitions(p - first, first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def girard_table(p: int) -> tuple[tuple[tuple[int, ...], Fraction], ...]:
    """``e_p = sum_lambda c_lambda prod_i tr(X^{lambda_i})`` as ``(lambda, c_lambda)`` pairs.

    ``c_lambda = (-1)^(p - len(lambda)) / z_lambda`` with
    ``z_lambda = prod_k k^{m_k} m_k!``.
    """
    table = []
    for lam in _partitions(p):
        z = 1
        for k in set(lam):
            m = lam.count(k)
            z *= k**m * math.factorial(m)
        table.append((lam, Fraction((-1) ** (p - len(lam)), z)))
    return tuple(table)


@dataclass(frozen=True)
class InvariantPolynomial:
    degree: int
    rank: int
    normalization: complex = field(init=False)
    table: tuple = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not 1 <= self.degree <= MAX_DEGREE:
            raise ValueError(f"invariant polynomial degree must be in 1..{MAX_DEGREE}")
        object.__setattr__(self, "normalization", (1j / (2 * math.pi)) ** self.degree)
        object.__setattr__(self, "table", girard_table(self.degree))

    def __call__(self, *args):
        return polarized_chern(self, list(args))


def chern_polynomial(p: int, rank: int) -> InvariantPolynomial:
    return InvariantPolynomial(p, rank)


def _check_args(P: InvariantPolynomial, args: Sequence) -> None:
    if len(args) != P.degree:
        raise ValueError(f"P_{P.degree} takes {P.degree} arguments, got {len(args)}")
    ref = args[0]
    for a in args:
        if type(a) is not type(ref):
            raise TypeError("mixed argument types")
        if a.chart != ref.chart:
            raise ChartMismatch(f"{a.chart} vs {ref.chart}")
        if a.rank != ref.rank:
            raise RankMismatch(f"rank {a.rank} vs {ref.rank}")
    if ref.rank != P.rank:
        raise RankMismatch(f"P built for rank {P.rank}, arguments have rank {ref.rank}")


def _expansion_weights(args: Sequence, distinct: int) -> dict:
    """Collect symmetrized Girard terms keyed by their literal trace structure.

    Slots ``< distinct`` are the odd slots of the two-odd variant; they keep
    their own identity and carry the sign ``-1`` whenever slot 0 precedes
    slot 1 in a literal term.
    """
    p = len(args)
    canon = []
    for i, a in enumerate(args):
        if i < distinct:
            canon.append(i)
            continue
        j = next(j for j in range(distinct, p) if args[j] is a)
        canon.append(j)
    weights: dict = defaultdict(Fraction)
    norm = Fraction(1, math.factorial(p))
    for lam, coeff in girard_table(p):
        for perm in permutations(range(p)):
            blocks, pos = [], 0
            for size in lam:
                blocks.append(tuple(canon[i] for i in perm[pos:pos + size]))
                pos += size
            sign = 1
            if distinct == 2 and perm.index(0) < perm.index(1):
                sign = -1
            weights[tuple(blocks)] += coeff * norm * sign
    return {k: w for k, w in weights.items() if w != 0}


def _evaluate(args: Sequence, weights: dict, scalar: complex):
    block_cache: dict = {}

    def block_trace(block):
        if block not in block_cache:
            prod = args[block[0]]
            for i in block[1:]:
                prod = prod.wedge(args[i])
            block_cache[block] = prod.trace()
        return block_cache[block]

    total = None
    for key in sorted(weights):
        term = None
        for block in key:
            tr = block_trace(block)
            term = tr if term is None else term.wedge(tr)
        term = term.scale(scalar * float(weights[key]))
        total = term if total is None else total + term
    if total is None:
        grade = sum(a.grade for a in args)
        return args[0].trace().zero_like(grade)
    return total


def polarized_chern(P: InvariantPolynomial, args: Sequence):
    """Multilinear ``P_p(X_1, ..., X_p)`` for at most one odd-grade argument.

    Arguments are :class:`MatrixValuedForm` or :class:`CylinderForm` values of one
    chart and rank; the result is scalar of grade ``sum(grades)``.
    """
    args = list(args)
    _check_args(P, args)
    if sum(1 for a in args if a.is_odd) > 1:
        raise TooManyOddArguments("polarized_chern accepts at most one odd argument")
    return _evaluate(args, _expansion_weights(args, 0), P.normalization)


def polarized_chern_two_odd(P: InvariantPolynomial, a, b, rest: Sequence = ()):
    """Two-odd-slot polarization ``Q(a, b, X_3, ..., X_p)``.

    Defined by ``P(ds ^ a, dt ^ b, X_3, ...) = ds ^ dt ^ Q(a, b, X_3, ...)`` for
    formal odd parameters ``ds, dt``; antisymmetric under ``a <-> b``.
    """
    args = [a, b, *rest]
    _check_args(P, args)
    if not (a.is_odd and b.is_odd) or any(x.is_odd for x in rest):
        raise TooManyOddArguments("two-odd variant needs exactly slots 0 and 1 odd")
    return _evaluate(args, _expansion_weights(args, 2), P.normalization)


def chern_form(c: Connection, p: int) -> MatrixValuedForm:
    """``c_p = P_p(Theta, ..., Theta)``; zero by grade when ``2p > n``."""
    chart = c.chart
    if 2 * p > chart.dim:
        return MatrixValuedForm.zero(chart, 1, 2 * p)
    theta = curvature(c)
    return polarized_chern(InvariantPolynomial(p, c.rank), [theta] * p)


def _inhom_mul(x: dict, y: dict, dim: int) -> dict:
    out: dict = {}
    for gx, fx in x.items():
        for gy, fy in y.items():
            if gx + gy > dim:
                continue
            term = fx.wedge(fy)
            out[gx + gy] = out[gx + gy] + term if gx + gy in out else term
    return out


def total_chern_oracle(c: Connection) -> list[MatrixValuedForm]:
    """Grade pieces of ``det(I + (i / 2 pi) Theta)`` by the Leibniz formula.

    Entries are even scalar forms, which commute, so the determinant is
    unambiguous.  Element ``p`` of the result is the ``2p``-form piece.
    """
    chart, r = c.chart, c.rank
    if r > 3 or chart.dim > 4:
        raise ValueError("determinant oracle is limited to rank <= 3, dim <= 4")
    theta = curvature(c).scale(1j / (2 * math.pi))
    one = MatrixValuedForm.constant(chart, [[1.0]])
    entries = [[None] * r for _ in range(r)]
    for i in range(r):
        for j in range(r):
            entry = {2: theta.entry(i, j)}
            if i == j:
                entry[0] = one
            entries[i][j] = entry
    det: dict = {}
    for perm in permutations(range(r)):
        sign = np.linalg.det(np.eye(r)[list(perm)])
        prod = {0: one}
        for i in range(r):
            prod = _inhom_mul(prod, entries[i][perm[i]], chart.dim)
        for g, f in prod.items():
            f = f.scale(round(sign))
            det[g] = det[g] + f if g in det else f
    return [
        det.get(2 * p, MatrixValuedForm.zero(chart, 1, 2 * p)) for p in range(r + 1)
    ]


def flux_curvature(chart: TorusChart, fluxes: Sequence[tuple[int, tuple[int, int]]]) -> MatrixValuedForm:
    """Constant diagonal curvature of a sum of line bundles.

    Entry ``j`` of ``fluxes`` is ``(m, (a, b))``: the ``j``-th line bundle has
    degree ``m`` on the ``(a, b)`` coordinate torus, so ``int c_1 = m`` there.
    Such bundles are not trivial, so only the curvature is represented.
    """
    rank = len(fluxes)
    zero = (0,) * chart.dim
    comps: dict = {}
    for j, (m, (a, b)) in enumerate(fluxes):
        if not 0 <= a < b < chart.dim:
            raise ValueError(f"axis pair {(a, b)} must be increasing and below {chart.dim}")
        mat = comps.setdefault((a, b), {zero: np.zeros((rank, rank), dtype=complex)})[zero]
        mat[j, j] = -1j * m / (2 * math.pi)
    return MatrixValuedForm.from_terms(chart, rank, 2, comps)
