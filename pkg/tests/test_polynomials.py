from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations, permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tertiary_cs.connections import Connection, curvature
from tertiary_cs.errors import RankMismatch, TooManyOddArguments
from tertiary_cs.exterior import MatrixValuedForm, TorusChart, exterior_derivative, integrate_over_subtorus, sup_norm, wedge
from tertiary_cs.identities import random_form, random_skew_connection
from tertiary_cs.polynomials import (
    InvariantPolynomial,
    chern_form,
    flux_curvature,
    girard_table,
    polarized_chern,
    polarized_chern_two_odd,
    total_chern_oracle,
)

from conftest import const_connection


def _newton_e_from_power_sums(p: int, power: list[Fraction]) -> Fraction:
    # k e_k = sum_{i=1}^k (-1)^{i-1} e_{k-i} P_i
    e = [Fraction(1)]
    for k in range(1, p + 1):
        e.append(sum((-1) ** (i - 1) * e[k - i] * power[i] for i in range(1, k + 1)) / k)
    return e[p]


@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_girard_table_matches_newton_identities(p):
    # compare on exact rational eigenvalues
    eig = [Fraction(3, 2), Fraction(-2), Fraction(1, 3), Fraction(5), Fraction(7, 4)]
    power = [None] + [sum(x**k for x in eig) for k in range(1, p + 1)]
    via_table = sum(c * math.prod(power[k] for k in lam) for lam, c in girard_table(p))
    assert via_table == _newton_e_from_power_sums(p, power)
    elementary = sum(math.prod(s) for s in combinations(eig, p))
    assert via_table == elementary


def test_girard_table_small_cases():
    assert girard_table(1) == (((1,), Fraction(1)),)
    assert dict(girard_table(2)) == {(2,): Fraction(-1, 2), (1, 1): Fraction(1, 2)}


def test_p1_is_normalized_trace(rng):
    ch = TorusChart(3, 3)
    c = random_skew_connection(ch, 2, rng, 1)
    theta = curvature(c)
    p1 = polarized_chern(InvariantPolynomial(1, 2), [theta])
    assert sup_norm(p1 - theta.trace().scale(1j / (2 * math.pi))) < 1e-15


def test_p2_on_commuting_diagonal_forms(rng):
    ch = TorusChart(4, 2)
    lam1 = random_form(ch, 1, 2, rng, 1)
    lam2 = random_form(ch, 1, 2, rng, 1)
    e11 = MatrixValuedForm.constant(ch, [[1, 0], [0, 0]])
    e22 = MatrixValuedForm.constant(ch, [[0, 0], [0, 1]])
    theta = wedge(e11, lam1) + wedge(e22, lam2)
    P = InvariantPolynomial(2, 2)
    got = polarized_chern(P, [theta, theta])
    expected = wedge(lam1, lam2).scale((1j / (2 * math.pi)) ** 2)
    assert sup_norm(got - expected) < 1e-13
    trace_formula = (wedge(theta.trace(), theta.trace()) - wedge(theta, theta).trace()).scale(
        0.5 * (1j / (2 * math.pi)) ** 2
    )
    assert sup_norm(got - trace_formula) < 1e-13


def test_zero_argument_gives_zero(rng):
    ch = TorusChart(3, 2)
    theta = curvature(random_skew_connection(ch, 2, rng, 1))
    assert polarized_chern(InvariantPolynomial(2, 2), [theta, theta.zero_like()]).is_zero


def test_chern_form_examples(rng):
    ch = TorusChart(4, 2)
    flat = const_connection(ch, {0: 1j * np.diag([0.2, 0.5]), 1: 1j * np.diag([1.0, -0.3])})
    assert sup_norm(chern_form(flat, 1)) < 1e-15 and sup_norm(chern_form(flat, 2)) < 1e-15
    rank1 = random_skew_connection(ch, 1, rng, 1)
    assert chern_form(rank1, 2).is_zero

    M = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    N = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    c = const_connection(ch, {0: M, 1: N})
    # c_1 = (i / 2 pi) tr[M, N] dx_0 ^ dx_1 = 0
    assert sup_norm(chern_form(c, 1)) < 1e-14
    # only one 2-form direction, so Theta ^ Theta = 0 and c_2 = 0
    assert sup_norm(chern_form(c, 2)) < 1e-14
    oracle = total_chern_oracle(c)
    assert sup_norm(chern_form(c, 2) - oracle[2]) < 1e-14


def test_chern_form_zero_above_half_dimension(rng):
    ch = TorusChart(3, 2)
    c = random_skew_connection(ch, 2, rng, 1)
    assert chern_form(c, 2).is_zero and chern_form(c, 2).grade == 4


def test_oracle_examples(rng):
    ch = TorusChart(4, 2)
    flat = Connection.trivial(ch, 2)
    assert all(f.is_zero for f in total_chern_oracle(flat)[1:])
    c = random_skew_connection(ch, 1, rng, 1)
    oracle = total_chern_oracle(c)
    assert len(oracle) == 2
    assert sup_norm(oracle[1] - curvature(c).scale(1j / (2 * math.pi))) < 1e-15
    const = const_connection(ch, {i: rng.normal(size=(2, 2)) + 0j for i in range(4)})
    oracle = total_chern_oracle(const)
    for p in (1, 2):
        assert sup_norm(chern_form(const, p) - oracle[p]) < 1e-12


@pytest.mark.parametrize("rank", [1, 2, 3])
def test_chern_form_matches_oracle_nonconstant(rng, rank):
    ch = TorusChart(4, 2 * rank)
    c = random_skew_connection(ch, rank, rng, 1)
    oracle = total_chern_oracle(c)
    for p in range(1, rank + 1):
        assert sup_norm(chern_form(c, p) - oracle[p]) <= 1e-10


def test_multilinearity(rng):
    ch = TorusChart(4, 3)
    P = InvariantPolynomial(3, 2)
    a = random_form(ch, 2, 1, rng, 1)
    x, y, z = (random_form(ch, 2, 2, rng, 1) for _ in range(3))
    lhs = polarized_chern(P, [a, x.scale(2.0) + y.scale(-0.5j), z])
    rhs = polarized_chern(P, [a, x, z]).scale(2.0) + polarized_chern(P, [a, y, z]).scale(-0.5j)
    assert sup_norm(lhs - rhs) <= 1e-11


def test_even_arguments_commute(rng):
    ch = TorusChart(4, 3)
    P = InvariantPolynomial(3, 2)
    args = [random_form(ch, 2, 0, rng, 1), random_form(ch, 2, 2, rng, 1), random_form(ch, 2, 1, rng, 1)]
    ref = polarized_chern(P, args)
    for perm in permutations(range(3)):
        other = polarized_chern(P, [args[i] for i in perm])
        assert sup_norm(other - ref) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=st.integers(1, 3), rank=st.integers(1, 3))
def test_ad_invariance(seed, p, rank):
    rng = np.random.default_rng(seed)
    ch = TorusChart(4, 3)
    g = rng.normal(size=(rank, rank)) + 1j * rng.normal(size=(rank, rank)) + 2 * np.eye(rank)
    args = [random_form(ch, rank, 1, rng, 1)] + [random_form(ch, rank, 2, rng, 1) for _ in range(p - 1)]
    P = InvariantPolynomial(p, rank)
    a = polarized_chern(P, args)
    b = polarized_chern(P, [x.conjugated(g) for x in args])
    assert sup_norm(a - b) <= 1e-10 * max(1.0, sup_norm(a))


def test_odd_argument_limits(rng):
    ch = TorusChart(4, 2)
    a, b = random_form(ch, 2, 1, rng, 1), random_form(ch, 2, 1, rng, 1)
    with pytest.raises(TooManyOddArguments):
        polarized_chern(InvariantPolynomial(2, 2), [a, b])
    with pytest.raises(TooManyOddArguments):
        polarized_chern_two_odd(InvariantPolynomial(2, 2), a, random_form(ch, 2, 2, rng, 1))
    with pytest.raises(RankMismatch):
        polarized_chern(InvariantPolynomial(1, 3), [a])


def test_two_odd_variant_is_antisymmetric(rng):
    ch = TorusChart(4, 3)
    P = InvariantPolynomial(3, 3)
    a, b = random_form(ch, 3, 1, rng, 1), random_form(ch, 3, 1, rng, 1)
    theta = random_form(ch, 3, 2, rng, 1)
    ab = polarized_chern_two_odd(P, a, b, [theta])
    ba = polarized_chern_two_odd(P, b, a, [theta])
    assert sup_norm(ab + ba) <= 1e-13
    assert sup_norm(ab) > 1e-4


def test_degree_above_rank_vanishes(rng):
    # e_3 of a 2 x 2 matrix is identically zero, in every slot configuration
    ch = TorusChart(4, 3)
    P = InvariantPolynomial(3, 2)
    a, b = random_form(ch, 2, 1, rng, 1), random_form(ch, 2, 1, rng, 1)
    x, y = random_form(ch, 2, 2, rng, 1), random_form(ch, 2, 0, rng, 1)
    assert sup_norm(polarized_chern(P, [a, x, y])) <= 1e-13
    assert sup_norm(polarized_chern_two_odd(P, a, b, [x])) <= 1e-13


def test_bianchi_closedness_of_chern_forms(rng):
    for rank in (2, 3):
        c = random_skew_connection(TorusChart(4, 3), rank, rng, 1)
        assert sup_norm(exterior_derivative(chern_form(c, 1))) <= 1e-11


def test_first_chern_period_is_integer(rng):
    # the bundle is trivialized, so every period is the integer 0
    ch = TorusChart(2, 2)
    for _ in range(5):
        c = random_skew_connection(ch, 1, rng, 1)
        assert not curvature(c).is_zero
        period = integrate_over_subtorus(chern_form(c, 1), (0, 1))
        assert abs(period - round(period.real)) <= 1e-9


def test_flux_curvature_periods():
    ch = TorusChart(4, 0)
    theta = flux_curvature(ch, [(3, (0, 1)), (-2, (2, 3))])
    c1 = polarized_chern(InvariantPolynomial(1, 2), [theta])
    assert abs(integrate_over_subtorus(c1, (0, 1), (0.0, 0.0)) - 3) <= 1e-12
    assert abs(integrate_over_subtorus(c1, (2, 3), (0.0, 0.0)) + 2) <= 1e-12
    c2 = polarized_chern(InvariantPolynomial(2, 2), [theta, theta])
    assert abs(integrate_over_subtorus(c2, (0, 1, 2, 3)) + 6) <= 1e-12
    with pytest.raises(ValueError):
        flux_curvature(ch, [(1, (1, 0))])
