"""Matrix-valued differential forms on flat tori.

Forms live on ``T^n = (R / 2 pi Z)^n`` with coordinates ``x_0 .. x_{n-1}``.
Every coefficient is a trigonometric polynomial whose values are ``r x r``
complex matrices, so ``d``, wedge products and integrals over coordinate
subtori are exact up to floating point.

Component keys are strictly increasing tuples of axis indices (0-based);
a form of grade ``g > n`` is legal and always zero, which keeps grade
bookkeeping uniform when products overshoot the dimension.

The second half of the module holds :class:`CylinderForm`, the calculus on
``I x T^n`` with polynomial dependence on the interval coordinate ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ChartMismatch,
    FrequencyOverflow,
    GradeMismatch,
    GradeOverflow,
    HarmonicObstruction,
    NotClosed,
    RankMismatch,
    RankNotScalar,
)

__all__ = [
    "TorusChart",
    "FourierFunction",
    "MatrixValuedForm",
    "CylinderForm",
    "wedge",
    "exterior_derivative",
    "linear_combine",
    "trace_form",
    "integrate_over_subtorus",
    "sup_norm",
    "harmonic_projection",
    "solve_potential",
    "cyl_wedge",
    "cyl_d",
    "fiber_integrate_t",
    "form_to_json",
    "form_from_json",
]

MAX_DIM = 6
MAX_RANK = 4

# Frequencies are packed into one int64 key per mode for merging.
_OFFSET = 64
_BASE = 2 * _OFFSET + 1

# Out-of-range modes below this fraction of the operand scale are roundoff,
# as are modes below the absolute floor (an operand that is itself roundoff,
# such as the curvature of a flat connection, would otherwise trip the check).
_OVERFLOW_RTOL = 1e-12
_OVERFLOW_ATOL = 1e-20


@dataclass(frozen=True)
class TorusChart:
    """The flat torus ``T^dim`` with Fourier truncation ``k_max``."""

    dim: int
    k_max: int = 4

    def __post_init__(self) -> None:
        if not 1 <= self.dim <= MAX_DIM:
            raise ValueError(f"torus dimension must be in 1..{MAX_DIM}, got {self.dim}")
        if not 0 <= self.k_max < _OFFSET // 2:
            raise ValueError(f"k_max must be in 0..{_OFFSET // 2 - 1}, got {self.k_max}")


def _pack(freqs: np.ndarray) -> np.ndarray:
    n = freqs.shape[1]
    weights = _BASE ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (freqs.astype(np.int64) + _OFFSET) @ weights


class FourierFunction:
    """Trigonometric polynomial ``f(x) = sum_k c_k exp(i k.x)`` with matrix values.

    ``freqs`` has shape ``(m, n)`` and ``coeffs`` shape ``(m, r, r)``.  Instances
    are canonical: modes sorted, unique, and no all-zero coefficient rows.
    """

    __slots__ = ("freqs", "coeffs")

    def __init__(self, freqs: np.ndarray, coeffs: np.ndarray):
        self.freqs = freqs
        self.coeffs = coeffs

    @classmethod
    def build(cls, freqs, coeffs) -> FourierFunction:
        freqs = np.asarray(freqs, dtype=np.int64)
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None, None]
        if freqs.ndim != 2 or freqs.shape[0] != coeffs.shape[0]:
            raise ValueError("freqs must be (m, n) and coeffs (m, r, r)")
        if freqs.shape[0] == 0:
            return cls(freqs, coeffs)
        keys = _pack(freqs)
        uniq, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
        if len(uniq) != len(keys):
            merged = np.zeros((len(uniq),) + coeffs.shape[1:], dtype=np.complex128)
            np.add.at(merged, inverse, coeffs)
            freqs = freqs[first]
            coeffs = merged
        else:
            order = np.argsort(keys, kind="stable")
            freqs = freqs[order]
            coeffs = coeffs[order]
        keep = np.any(coeffs != 0, axis=(1, 2))
        if not keep.all():
            freqs = freqs[keep]
            coeffs = coeffs[keep]
        return cls(freqs, coeffs)

    @classmethod
    def from_modes(cls, dim: int, modes: Mapping[Sequence[int], object]) -> FourierFunction:
        """Build from ``{frequency vector: matrix or scalar}``."""
        if not modes:
            raise ValueError("from_modes needs at least one mode; use zero_function")
        freqs = np.array([list(k) for k in modes], dtype=np.int64).reshape(len(modes), dim)
        mats = [np.atleast_2d(np.asarray(v, dtype=np.complex128)) for v in modes.values()]
        return cls.build(freqs, np.stack(mats))

    @classmethod
    def zero(cls, dim: int, rank: int) -> FourierFunction:
        return cls(np.zeros((0, dim), dtype=np.int64), np.zeros((0, rank, rank), dtype=np.complex128))

    @property
    def dim(self) -> int:
        return self.freqs.shape[1]

    @property
    def rank(self) -> int:
        return self.coeffs.shape[1]

    @property
    def is_zero(self) -> bool:
        return self.freqs.shape[0] == 0

    def __add__(self, other: FourierFunction) -> FourierFunction:
        return FourierFunction.build(
            np.concatenate([self.freqs, other.freqs]),
            np.concatenate([self.coeffs, other.coeffs]),
        )

    def scale(self, c: complex) -> FourierFunction:
        if c == 0:
            return FourierFunction.zero(self.dim, self.rank)
        return FourierFunction(self.freqs, self.coeffs * c)

    def derivative(self, axis: int) -> FourierFunction:
        factor = 1j * self.freqs[:, axis]
        return FourierFunction.build(self.freqs, self.coeffs * factor[:, None, None])

    def trace(self) -> FourierFunction:
        return FourierFunction.build(self.freqs, np.trace(self.coeffs, axis1=1, axis2=2))

    def entry(self, i: int, j: int) -> FourierFunction:
        return FourierFunction.build(self.freqs, self.coeffs[:, i, j])

    def conjugated(self, g: np.ndarray, g_inv: np.ndarray) -> FourierFunction:
        return FourierFunction.build(self.freqs, g @ self.coeffs @ g_inv)

    def entry_norms(self) -> np.ndarray:
        """Coefficient-sum norm of every matrix entry, shape ``(r, r)``."""
        return np.abs(self.coeffs).sum(axis=0)

    def zero_mode(self, axes: Iterable[int]) -> FourierFunction:
        axes = list(axes)
        if not axes:
            return self
        keep = np.all(self.freqs[:, axes] == 0, axis=1)
        return FourierFunction(self.freqs[keep], self.coeffs[keep])

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Values at ``points`` of shape ``(P, n)``; returns ``(P, r, r)``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        phase = np.exp(1j * points @ self.freqs.T)
        return np.einsum("pm,mij->pij", phase, self.coeffs)

    def product_terms(self, other: FourierFunction) -> tuple[np.ndarray, np.ndarray]:
        """Unmerged modes of the pointwise matrix product ``self * other``."""
        freqs = (self.freqs[:, None, :] + other.freqs[None, :, :]).reshape(-1, self.dim)
        a, b = self.coeffs, other.coeffs
        if a.shape[1] == b.shape[1]:
            prod = np.einsum("aij,bjk->abik", a, b)
        elif a.shape[1] == 1:
            prod = a[:, None, :, :] * b[None, :, :, :]
        else:
            prod = a[:, None, :, :] * b[None, :, :, :]
        return freqs, prod.reshape((-1,) + prod.shape[2:])


def _empty_like_rank(dim: int, rank: int) -> tuple[np.ndarray, np.ndarray]:
    return np.zeros((0, dim), dtype=np.int64), np.zeros((0, rank, rank), dtype=np.complex128)


@lru_cache(maxsize=None)
def _merge_sign(left: tuple[int, ...], right: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    """Sign and sorted key of ``dx_left ^ dx_right``; sign 0 on overlap."""
    if set(left) & set(right):
        return 0, ()
    seq = list(left + right)
    inversions = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return (-1) ** inversions, tuple(sorted(seq))


def _permutation_sign(seq: Sequence[int]) -> int:
    seq = list(seq)
    inversions = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return (-1) ** inversions


@dataclass(frozen=True, eq=False)
class MatrixValuedForm:
    """A grade-``g`` form ``sum_I f_I dx_I`` with ``r x r`` matrix coefficients."""

    chart: TorusChart
    rank: int
    grade: int
    components: Mapping[tuple[int, ...], FourierFunction]

    def __post_init__(self) -> None:
        if not 1 <= self.rank <= MAX_RANK:
            raise RankMismatch(f"rank must be in 1..{MAX_RANK}, got {self.rank}")
        if self.grade < 0:
            raise GradeMismatch(f"negative grade {self.grade}")
        clean = {}
        for key in sorted(self.components):
            f = self.components[key]
            if len(key) != self.grade or list(key) != sorted(set(key)):
                raise GradeMismatch(f"bad component key {key} for grade {self.grade}")
            if key and not 0 <= key[-1] < self.chart.dim or key and key[0] < 0:
                raise GradeMismatch(f"component key {key} outside chart of dim {self.chart.dim}")
            if f.dim != self.chart.dim or f.rank != self.rank:
                raise RankMismatch(f"component {key} has dim/rank {f.dim}/{f.rank}")
            if not f.is_zero:
                clean[key] = f
        object.__setattr__(self, "components", clean)

    # constructors --------------------------------------------------------

    @classmethod
    def zero(cls, chart: TorusChart, rank: int, grade: int) -> MatrixValuedForm:
        return cls(chart, rank, grade, {})

    @classmethod
    def from_terms(
        cls,
        chart: TorusChart,
        rank: int,
        grade: int,
        terms: Mapping[Sequence[int], Mapping[Sequence[int], object]],
    ) -> MatrixValuedForm:
        """Build from ``{index tuple: {frequency vector: matrix}}``.

        Index tuples may be unsorted; the orientation sign is applied.
        """
        comps: dict[tuple[int, ...], FourierFunction] = {}
        for index, modes in terms.items():
            index = tuple(index)
            sign = _permutation_sign(index)
            key = tuple(sorted(index))
            if len(set(key)) != len(key):
                continue
            f = FourierFunction.from_modes(chart.dim, modes)
            if f.rank != rank:
                if f.rank == 1:
                    f = FourierFunction.build(f.freqs, f.coeffs * np.eye(rank))
                else:
                    raise RankMismatch(f"coefficient rank {f.rank} != {rank}")
            f = f.scale(sign)
            comps[key] = comps[key] + f if key in comps else f
        return cls(chart, rank, grade, comps)

    @classmethod
    def constant(
        cls, chart: TorusChart, matrix, index: Sequence[int] = ()
    ) -> MatrixValuedForm:
        """Constant-coefficient form ``matrix * dx_index``."""
        m = np.atleast_2d(np.asarray(matrix, dtype=np.complex128))
        return cls.from_terms(chart, m.shape[0], len(index), {tuple(index): {(0,) * chart.dim: m}})

    # algebra -------------------------------------------------------------

    def _check_compatible(self, other: MatrixValuedForm) -> None:
        if self.chart != other.chart:
            raise ChartMismatch(f"{self.chart} vs {other.chart}")
        if self.rank != other.rank:
            raise RankMismatch(f"rank {self.rank} vs {other.rank}")
        if self.grade != other.grade:
            raise GradeMismatch(f"grade {self.grade} vs {other.grade}")

    def __add__(self, other: MatrixValuedForm) -> MatrixValuedForm:
        self._check_compatible(other)
        comps = dict(self.components)
        for key, f in other.components.items():
            comps[key] = comps[key] + f if key in comps else f
        return MatrixValuedForm(self.chart, self.rank, self.grade, comps)

    def __neg__(self) -> MatrixValuedForm:
        return self.scale(-1.0)

    def __sub__(self, other: MatrixValuedForm) -> MatrixValuedForm:
        return self + (-other)

    def scale(self, c: complex) -> MatrixValuedForm:
        if c == 0:
            return MatrixValuedForm.zero(self.chart, self.rank, self.grade)
        return MatrixValuedForm(
            self.chart, self.rank, self.grade, {k: f.scale(c) for k, f in self.components.items()}
        )

    def __mul__(self, c: complex) -> MatrixValuedForm:
        return self.scale(c)

    __rmul__ = __mul__

    def wedge(self, other: MatrixValuedForm) -> MatrixValuedForm:
        return wedge(self, other)

    def d(self, strict: bool = True) -> MatrixValuedForm:
        return exterior_derivative(self, strict=strict)

    def trace(self) -> MatrixValuedForm:
        return trace_form(self)

    def entry(self, i: int, j: int) -> MatrixValuedForm:
        return MatrixValuedForm(
            self.chart, 1, self.grade, {k: f.entry(i, j) for k, f in self.components.items()}
        )

    def conjugated(self, g: np.ndarray) -> MatrixValuedForm:
        """``g . self . g^{-1}`` for a constant invertible matrix ``g``."""
        g = np.asarray(g, dtype=np.complex128)
        g_inv = np.linalg.inv(g)
        return MatrixValuedForm(
            self.chart,
            self.rank,
            self.grade,
            {k: f.conjugated(g, g_inv) for k, f in self.components.items()},
        )

    def zero_like(self, grade: int | None = None) -> MatrixValuedForm:
        return MatrixValuedForm.zero(self.chart, self.rank, self.grade if grade is None else grade)

    @property
    def is_zero(self) -> bool:
        return not self.components

    @property
    def is_odd(self) -> bool:
        return self.grade % 2 == 1

    def max_frequency(self) -> int:
        return max((int(np.abs(f.freqs).max()) for f in self.components.values()), default=0)

    def norm(self) -> float:
        return sup_norm(self)

    def evaluate(self, x: Sequence[float]) -> dict[tuple[int, ...], np.ndarray]:
        """Coefficient matrices at one point ``x``."""
        point = np.asarray(x, dtype=float)[None, :]
        return {k: f.evaluate(point)[0] for k, f in self.components.items()}

    def __repr__(self) -> str:
        return (
            f"MatrixValuedForm(dim={self.chart.dim}, rank={self.rank}, grade={self.grade}, "
            f"components={len(self.components)})"
        )


def _check_chart(a: MatrixValuedForm, b: MatrixValuedForm) -> None:
    if a.chart != b.chart:
        raise ChartMismatch(f"{a.chart} vs {b.chart}")


def wedge(alpha: MatrixValuedForm, beta: MatrixValuedForm) -> MatrixValuedForm:
    """Wedge product with matrix multiplication of coefficients.

    A rank-1 operand acts by scalar multiplication.  Raises
    :class:`FrequencyOverflow` when a mode beyond ``k_max`` survives.
    """
    _check_chart(alpha, beta)
    if alpha.rank != beta.rank and 1 not in (alpha.rank, beta.rank):
        raise RankMismatch(f"rank {alpha.rank} vs {beta.rank}")
    rank = max(alpha.rank, beta.rank)
    chart = alpha.chart
    grade = alpha.grade + beta.grade
    if grade > chart.dim or alpha.is_zero or beta.is_zero:
        return MatrixValuedForm.zero(chart, rank, grade)

    pieces: dict[tuple[int, ...], list[tuple[np.ndarray, np.ndarray]]] = {}
    for ka, fa in alpha.components.items():
        for kb, fb in beta.components.items():
            sign, key = _merge_sign(ka, kb)
            if sign == 0:
                continue
            freqs, coeffs = fa.product_terms(fb)
            if sign < 0:
                coeffs = -coeffs
            pieces.setdefault(key, []).append((freqs, coeffs))

    scale = sup_norm(alpha) * sup_norm(beta) * rank
    threshold = max(_OVERFLOW_RTOL * scale, _OVERFLOW_ATOL)
    comps = {}
    for key, parts in pieces.items():
        f = FourierFunction.build(
            np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])
        )
        if f.is_zero:
            continue
        too_high = np.any(np.abs(f.freqs) > chart.k_max, axis=1)
        if too_high.any():
            mags = np.abs(f.coeffs[too_high]).max(axis=(1, 2))
            if mags.max() > threshold:
                raise FrequencyOverflow(
                    chart.k_max, int(np.abs(f.freqs[too_high]).max()), float(mags.max())
                )
            f = FourierFunction(f.freqs[~too_high], f.coeffs[~too_high])
        comps[key] = f
    return MatrixValuedForm(chart, rank, grade, comps)


def exterior_derivative(alpha: MatrixValuedForm, strict: bool = True) -> MatrixValuedForm:
    """Exact spectral ``d``: ``d/dx_j`` multiplies each mode by ``i k_j``.

    With ``strict=True`` a top-degree (or higher) input raises
    :class:`GradeOverflow`; otherwise the zero form of grade ``g + 1`` is returned.
    """
    n = alpha.chart.dim
    if alpha.grade >= n:
        if strict:
            raise GradeOverflow(f"d of a grade-{alpha.grade} form on T^{n}")
        return alpha.zero_like(alpha.grade + 1)
    comps: dict[tuple[int, ...], FourierFunction] = {}
    for key, f in alpha.components.items():
        for j in range(n):
            if j in key:
                continue
            sign, new_key = _merge_sign((j,), key)
            df = f.derivative(j)
            if df.is_zero:
                continue
            df = df.scale(sign)
            comps[new_key] = comps[new_key] + df if new_key in comps else df
    return MatrixValuedForm(alpha.chart, alpha.rank, alpha.grade + 1, comps)


def linear_combine(
    c1: complex, alpha: MatrixValuedForm, c2: complex, beta: MatrixValuedForm
) -> MatrixValuedForm:
    return alpha.scale(c1) + beta.scale(c2)


def trace_form(alpha: MatrixValuedForm) -> MatrixValuedForm:
    return MatrixValuedForm(
        alpha.chart, 1, alpha.grade, {k: f.trace() for k, f in alpha.components.items()}
    )


def sup_norm(alpha: MatrixValuedForm) -> float:
    """Max over components and matrix entries of ``sum_k |c_k|``."""
    best = 0.0
    for f in alpha.components.values():
        best = max(best, float(f.entry_norms().max()))
    return best


def integrate_over_subtorus(
    alpha: MatrixValuedForm, axes: Sequence[int], basepoint: Sequence[float] = ()
) -> complex:
    """Integrate a scalar form over the oriented coordinate subtorus along ``axes``.

    ``axes`` is ordered; its orientation is ``dx_{axes[0]} ^ dx_{axes[1]} ^ ...``.
    ``basepoint`` lists the fixed angles of the complementary axes in
    increasing axis order.
    """
    axes = tuple(int(a) for a in axes)
    n = alpha.chart.dim
    if alpha.rank != 1:
        raise RankNotScalar(f"integrand has rank {alpha.rank}")
    if alpha.grade != len(axes):
        raise GradeMismatch(f"grade {alpha.grade} form on a {len(axes)}-dimensional cycle")
    if len(set(axes)) != len(axes) or any(not 0 <= a < n for a in axes):
        raise GradeMismatch(f"invalid cycle axes {axes}")
    complement = [j for j in range(n) if j not in axes]
    if len(basepoint) != len(complement):
        raise GradeMismatch(
            f"basepoint needs {len(complement)} angles, got {len(basepoint)}"
        )
    key = tuple(sorted(axes))
    f = alpha.components.get(key)
    if f is None:
        return 0j
    f = f.zero_mode(axes)
    if f.is_zero:
        return 0j
    point = np.zeros(n)
    point[complement] = np.asarray(basepoint, dtype=float)
    value = complex(f.evaluate(point[None, :])[0, 0, 0])
    return _permutation_sign(axes) * (2 * math.pi) ** len(axes) * value


def harmonic_projection(omega: MatrixValuedForm) -> MatrixValuedForm:
    """Zero-frequency part of every component (the harmonic part on a flat torus)."""
    if omega.rank != 1:
        raise RankNotScalar(f"harmonic projection of rank-{omega.rank} form")
    return MatrixValuedForm(
        omega.chart,
        1,
        omega.grade,
        {k: f.zero_mode(range(omega.chart.dim)) for k, f in omega.components.items()},
    )


def solve_potential(omega: MatrixValuedForm, tol: float = 1e-10) -> MatrixValuedForm:
    """Return ``beta'`` with ``d beta' = omega`` for a closed form without harmonic part.

    Mode by mode ``beta' = d* Delta^{-1} omega`` with the flat Laplacian
    symbol ``|k|^2`` and ``d*(f dx_I) = -sum_{j in I} (d_j f) i_{e_j} dx_I``.
    """
    if omega.rank != 1:
        raise RankNotScalar(f"potential of rank-{omega.rank} form")
    if omega.grade == 0:
        raise GradeMismatch("a 0-form has no potential")
    closed = sup_norm(exterior_derivative(omega, strict=False))
    if closed > tol:
        raise NotClosed(closed)
    harmonic = sup_norm(harmonic_projection(omega))
    if harmonic > tol:
        raise HarmonicObstruction(harmonic)
    n = omega.chart.dim
    parts: dict[tuple[int, ...], list[tuple[np.ndarray, np.ndarray]]] = {}
    for key, f in omega.components.items():
        k2 = (f.freqs.astype(float) ** 2).sum(axis=1)
        nonzero = k2 > 0
        freqs = f.freqs[nonzero]
        inv = f.coeffs[nonzero] / k2[nonzero][:, None, None]
        for pos, j in enumerate(key):
            sub = key[:pos] + key[pos + 1:]
            factor = -(1j * freqs[:, j]) * (-1) ** pos
            parts.setdefault(sub, []).append((freqs, inv * factor[:, None, None]))
    comps = {}
    for sub, pieces in parts.items():
        comps[sub] = FourierFunction.build(
            np.concatenate([p[0] for p in pieces]).reshape(-1, n),
            np.concatenate([p[1] for p in pieces]),
        )
    return MatrixValuedForm(omega.chart, 1, omega.grade - 1, comps)


# JSON ------------------------------------------------------------------------


def form_to_json(alpha: MatrixValuedForm) -> dict:
    """Serialize a form; complex numbers are ``[re, im]`` pairs."""
    comps = []
    for key, f in alpha.components.items():
        modes = []
        for k, c in zip(f.freqs, f.coeffs):
            modes.append(
                {
                    "k": [int(v) for v in k],
                    "c": [[[float(z.real), float(z.imag)] for z in row] for row in c],
                }
            )
        comps.append({"index": list(key), "modes": modes})
    return {
        "dim": alpha.chart.dim,
        "k_max": alpha.chart.k_max,
        "rank": alpha.rank,
        "grade": alpha.grade,
        "components": comps,
    }


def form_from_json(data: Mapping) -> MatrixValuedForm:
    chart = TorusChart(int(data["dim"]), int(data["k_max"]))
    rank = int(data["rank"])
    comps = {}
    for comp in data["components"]:
        freqs = np.array([m["k"] for m in comp["modes"]], dtype=np.int64).reshape(-1, chart.dim)
        coeffs = np.array(
            [[[complex(re, im) for re, im in row] for row in m["c"]] for m in comp["modes"]],
            dtype=np.complex128,
        ).reshape(-1, rank, rank)
        comps[tuple(comp["index"])] = FourierFunction.build(freqs, coeffs)
    return MatrixValuedForm(chart, rank, int(data["grade"]), comps)


# cylinder calculus on I x T^n ---------------------------------------------------


def _poly_add(a: Sequence[MatrixValuedForm], b: Sequence[MatrixValuedForm]) -> tuple:
    out = []
    for j in range(max(len(a), len(b))):
        if j < len(a) and j < len(b):
            out.append(a[j] + b[j])
        else:
            out.append(a[j] if j < len(a) else b[j])
    return _poly_trim(out)


def _poly_trim(coeffs: Sequence[MatrixValuedForm]) -> tuple:
    coeffs = list(coeffs)
    while coeffs and coeffs[-1].is_zero:
        coeffs.pop()
    return tuple(coeffs)


def _poly_wedge(a: Sequence[MatrixValuedForm], b: Sequence[MatrixValuedForm], sign: int = 1) -> tuple:
    if not a or not b:
        return ()
    out: list[MatrixValuedForm | None] = [None] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai.is_zero:
            continue
        for j, bj in enumerate(b):
            if bj.is_zero:
                continue
            term = wedge(ai, bj)
            out[i + j] = term if out[i + j] is None else out[i + j] + term
    ref = wedge(a[0], b[0]) if out[0] is None else out[0]
    filled = [ref.zero_like() if o is None else o for o in out]
    if sign < 0:
        filled = [-f for f in filled]
    return _poly_trim(filled)


def _poly_eval(coeffs: Sequence[MatrixValuedForm], t: float, zero: MatrixValuedForm) -> MatrixValuedForm:
    result = zero
    for c in reversed(coeffs):
        result = result.scale(t) + c
    return result


@dataclass(frozen=True, eq=False)
class CylinderForm:
    """Form ``w0(t) + dt ^ w1(t)`` on ``I x T^n``, polynomial in ``t``.

    ``base[j]`` and ``fiber[j]`` are the ``t^j`` coefficients of ``w0`` and
    ``w1``; ``w1`` has grade ``grade - 1`` and is empty for 0-forms.
    """

    chart: TorusChart
    rank: int
    grade: int
    base: tuple = ()
    fiber: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "base", _poly_trim(self.base))
        object.__setattr__(self, "fiber", _poly_trim(self.fiber))
        if self.grade == 0 and self.fiber:
            raise GradeMismatch("a cylinder 0-form has no dt part")
        for f in self.base:
            if f.grade != self.grade or f.rank != self.rank or f.chart != self.chart:
                raise GradeMismatch("base coefficient shape mismatch")
        for f in self.fiber:
            if f.grade != self.grade - 1 or f.rank != self.rank or f.chart != self.chart:
                raise GradeMismatch("fiber coefficient shape mismatch")

    @classmethod
    def from_base(cls, coeffs: Sequence[MatrixValuedForm]) -> CylinderForm:
        """``sum_j t^j coeffs[j]`` with no ``dt`` part."""
        ref = coeffs[0]
        return cls(ref.chart, ref.rank, ref.grade, tuple(coeffs), ())

    @classmethod
    def dt_wedge(cls, coeffs: Sequence[MatrixValuedForm]) -> CylinderForm:
        """``dt ^ sum_j t^j coeffs[j]``."""
        ref = coeffs[0]
        return cls(ref.chart, ref.rank, ref.grade + 1, (), tuple(coeffs))

    @property
    def t_degree(self) -> int:
        return max(len(self.base), len(self.fiber)) - 1

    @property
    def is_zero(self) -> bool:
        return not self.base and not self.fiber

    @property
    def is_odd(self) -> bool:
        return self.grade % 2 == 1

    def zero_like(self, grade: int | None = None) -> CylinderForm:
        return CylinderForm(self.chart, self.rank, self.grade if grade is None else grade)

    def _compatible(self, other: CylinderForm) -> None:
        if self.chart != other.chart:
            raise ChartMismatch(f"{self.chart} vs {other.chart}")
        if self.rank != other.rank or self.grade != other.grade:
            raise GradeMismatch("cylinder forms of different rank or grade")

    def __add__(self, other: CylinderForm) -> CylinderForm:
        self._compatible(other)
        return CylinderForm(
            self.chart,
            self.rank,
            self.grade,
            _poly_add(self.base, other.base),
            _poly_add(self.fiber, other.fiber),
        )

    def __neg__(self) -> CylinderForm:
        return self.scale(-1.0)

    def __sub__(self, other: CylinderForm) -> CylinderForm:
        return self + (-other)

    def scale(self, c: complex) -> CylinderForm:
        return CylinderForm(
            self.chart,
            self.rank,
            self.grade,
            tuple(f.scale(c) for f in self.base),
            tuple(f.scale(c) for f in self.fiber),
        )

    def __mul__(self, c: complex) -> CylinderForm:
        return self.scale(c)

    __rmul__ = __mul__

    def wedge(self, other: CylinderForm) -> CylinderForm:
        return cyl_wedge(self, other)

    def trace(self) -> CylinderForm:
        return CylinderForm(
            self.chart,
            1,
            self.grade,
            tuple(trace_form(f) for f in self.base),
            tuple(trace_form(f) for f in self.fiber),
        )

    def evaluate(self, t: float) -> tuple[MatrixValuedForm, MatrixValuedForm | None]:
        """``(w0(t), w1(t))``; ``w1`` is ``None`` for 0-forms."""
        w0 = _poly_eval(self.base, t, MatrixValuedForm.zero(self.chart, self.rank, self.grade))
        if self.grade == 0:
            return w0, None
        w1 = _poly_eval(self.fiber, t, MatrixValuedForm.zero(self.chart, self.rank, self.grade - 1))
        return w0, w1

    def norm(self) -> float:
        """Coefficient-sum bound over ``t in [0, 1]`` of both parts."""
        b = sum(sup_norm(f) for f in self.base)
        f = sum(sup_norm(f) for f in self.fiber)
        return max(b, f)


def cyl_wedge(a: CylinderForm, b: CylinderForm) -> CylinderForm:
    """``(a0 + dt a1) ^ (b0 + dt b1) = a0 b0 + dt (a1 b0 + (-1)^|a| a0 b1)``."""
    if a.chart != b.chart:
        raise ChartMismatch(f"{a.chart} vs {b.chart}")
    if a.rank != b.rank and 1 not in (a.rank, b.rank):
        raise RankMismatch(f"rank {a.rank} vs {b.rank}")
    rank = max(a.rank, b.rank)
    grade = a.grade + b.grade
    base = _poly_wedge(a.base, b.base)
    fib = _poly_add(
        _poly_wedge(a.fiber, b.base), _poly_wedge(a.base, b.fiber, sign=(-1) ** a.grade)
    )
    if grade == 0:
        fib = ()
    return CylinderForm(a.chart, rank, grade, base, fib)


def _poly_dt(coeffs: Sequence[MatrixValuedForm]) -> tuple:
    return _poly_trim([c.scale(j) for j, c in enumerate(coeffs)][1:])


def cyl_d(a: CylinderForm) -> CylinderForm:
    """``d(a0 + dt a1) = d_X a0 + dt (d_t a0 - d_X a1)``."""
    base = tuple(exterior_derivative(f, strict=False) for f in a.base)
    fib = _poly_add(_poly_dt(a.base), tuple(-exterior_derivative(f, strict=False) for f in a.fiber))
    return CylinderForm(a.chart, a.rank, a.grade + 1, base, fib)


def fiber_integrate_t(a: CylinderForm) -> MatrixValuedForm:
    """``int_0^1 a1(t) dt`` with exact monomial integrals ``t^j -> 1/(j+1)``."""
    result = MatrixValuedForm.zero(a.chart, a.rank, max(a.grade - 1, 0))
    for j, f in enumerate(a.fiber):
        result = result + f.scale(1.0 / (j + 1))
    return result
