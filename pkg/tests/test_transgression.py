from __future__ import annotations

import math

import numpy as np
import pytest

from tertiary_cs.connections import Connection, ConnectionPath, ConnectionSheet, convex_path
from tertiary_cs.errors import EndpointsNotFixed, GradeOverflow, HarmonicObstruction, StokesViolation
from tertiary_cs.exterior import (
    TorusChart,
    cyl_d,
    exterior_derivative,
    fiber_integrate_t,
    harmonic_projection,
    solve_potential,
    sup_norm,
)
from tertiary_cs.generators import build_family
from tertiary_cs.identities import random_skew_connection
from tertiary_cs.transgression import (
    beta_for_pair,
    cylinder_chern_form,
    double_transgression,
    eta_form,
    fiber_transgression,
    gauss_legendre,
    nodes_for_degree,
    relative_cs_cylinder,
)

from conftest import const_one_form


def _nonflat_path(ch, rank, rng, degree=1, freq=1):
    return ConnectionPath(tuple(random_skew_connection(ch, rank, rng, freq).A for _ in range(degree + 1)))


def test_gauss_legendre_exactness():
    for degree in range(0, 9):
        x, w = gauss_legendre(nodes_for_degree(degree))
        assert abs(np.sum(w * x**degree) - 1 / (degree + 1)) <= 1e-15


def test_constant_path_has_zero_eta(rng):
    ch = TorusChart(3, 2)
    c = random_skew_connection(ch, 2, rng, 1)
    rep = fiber_transgression(convex_path(c, c), 2)
    assert rep.form.is_zero or sup_norm(rep.form) == 0


def test_p1_transgression_is_trace_difference(rng):
    ch = TorusChart(3, 2)
    c0, c1 = (random_skew_connection(ch, 2, rng, 1) for _ in range(2))
    rep = fiber_transgression(convex_path(c0, c1), 1)
    expected = (c1.A - c0.A).trace().scale(1j / (2 * math.pi))
    assert sup_norm(rep.form - expected) <= 1e-15
    assert rep.stokes_residual <= 1e-13


def test_flat_commuting_path_p2_vanishes():
    fam = build_family("commuting_t3", TorusChart(3, 2), 2, {}, seed=3)
    assert sup_norm(eta_form(fam.path, 2)[0]) <= 1e-14


def test_stokes_on_nonflat_paths(rng):
    ch = TorusChart(4, 4)
    for p, tol in ((1, 1e-11), (2, 1e-10)):
        for _ in range(3):
            rep = fiber_transgression(_nonflat_path(ch, 2, rng, degree=2), p)
            assert rep.stokes_residual <= tol
            assert rep.closed_residual > 1e-6  # the identity is not vacuous


def test_transgression_grade_overflow(rng):
    ch = TorusChart(2, 2)
    with pytest.raises(GradeOverflow):
        fiber_transgression(_nonflat_path(ch, 2, rng), 2)


def test_quadrature_node_doubling(rng):
    ch = TorusChart(3, 4)
    path = _nonflat_path(ch, 2, rng, degree=2)
    form, used = eta_form(path, 2)
    doubled, _ = eta_form(path, 2, nodes=2 * used)
    assert sup_norm(form - doubled) <= 1e-13


def test_p1_reparametrization_invariance(rng):
    ch = TorusChart(3, 2)
    path = _nonflat_path(ch, 2, rng, degree=2)
    ref = eta_form(path, 1)[0]
    for phi in ((0, 0, 1), (0, 0, 3, -2)):
        assert sup_norm(eta_form(path.reparametrize(phi), 1)[0] - ref) <= 1e-13


def test_double_transgression_examples(rng):
    ch = TorusChart(3, 4)
    path = _nonflat_path(ch, 2, rng)
    const_in_s = ConnectionSheet((path.coeffs,))
    assert sup_norm(double_transgression(const_in_s, 2)) == 0
    with pytest.raises(ValueError):
        double_transgression(const_in_s, 1)
    b = random_skew_connection(ch, 2, rng, 1).A
    loose = ConnectionSheet((path.coeffs, (b,)))
    with pytest.raises(EndpointsNotFixed):
        double_transgression(loose, 2)


def test_square_stokes_on_flat_and_nonflat_sheets(rng):
    fam = build_family("commuting_t3", TorusChart(3, 2), 2, {}, seed=7)
    double_transgression(fam.sheet, 2)  # raises StokesViolation on failure
    ch = TorusChart(4, 4)
    fam = build_family("perturbed_nonflat", ch, 2, {"freq": 1}, seed=9)
    beta = double_transgression(fam.sheet, 2, check=False)
    edge = eta_form(fam.sheet.path_at(1.0), 2)[0] - eta_form(fam.sheet.path_at(0.0), 2)[0]
    assert sup_norm(exterior_derivative(beta, strict=False) - edge) <= 1e-10
    assert sup_norm(edge) > 1e-6


def test_double_transgression_wrong_quadrature_is_caught():
    # a one-point rule is not exact for the bump sheet, so the check must trip
    fam = build_family("perturbed_nonflat", TorusChart(4, 4), 2, {"freq": 1}, seed=9)
    with pytest.raises(StokesViolation):
        double_transgression(fam.sheet, 2, nodes=(1, 1))


def test_beta_for_chord_is_zero(rng):
    ch = TorusChart(3, 4)
    c0, c1 = (random_skew_connection(ch, 2, rng, 1) for _ in range(2))
    rep = beta_for_pair(convex_path(c0, c1), 2)
    assert sup_norm(rep.form) <= 1e-15
    assert rep.exactness_residual <= 1e-13


def test_beta_for_reparametrized_nonflat_chord(rng):
    ch = TorusChart(4, 4)
    c0, c1 = (random_skew_connection(ch, 2, rng, 1) for _ in range(2))
    # a reparametrized chord has the chord's transgression, so d beta = 0
    gamma = convex_path(c0, c1).reparametrize((0, 0, 1))
    rep = beta_for_pair(gamma, 2)
    assert rep.exactness_residual <= 1e-10
    assert sup_norm(rep.tp - rep.eta) <= 1e-13


def test_beta_for_nonflat_quadratic_path(rng):
    ch = TorusChart(4, 4)
    gamma = _nonflat_path(ch, 2, rng, degree=2)
    rep = beta_for_pair(gamma, 2)
    assert rep.exactness_residual <= 1e-10
    assert sup_norm(rep.tp - rep.eta) > 1e-6


def test_beta_on_flat_path_has_d_beta_equal_tp():
    fam = build_family("commuting_t4", TorusChart(4, 2), 2, {}, seed=5)
    rep = beta_for_pair(fam.path, 2)
    assert sup_norm(rep.eta) <= 1e-13
    assert sup_norm(exterior_derivative(rep.form, strict=False) - rep.tp) <= 1e-10
    assert rep.hodge_status in ("ok", "harmonic_obstruction")
    if rep.hodge_status == "ok":
        assert rep.hodge_residual <= 1e-10


def test_two_sheets_give_betas_differing_by_closed_form(rng):
    fam = build_family("perturbed_nonflat", TorusChart(4, 4), 2, {"freq": 1}, seed=2)
    gamma = fam.path
    chord = convex_path(gamma.at(0.0), gamma.at(1.0))
    straight = ConnectionSheet(
        (gamma.coeffs, tuple(c - g for c, g in zip(chord.coeffs + (chord.coeffs[0].zero_like(),), gamma.coeffs)))
    )
    b1 = double_transgression(straight, 2, check=False)
    b2 = beta_for_pair(gamma, 2).form
    assert sup_norm(exterior_derivative(b1 - b2, strict=False)) <= 1e-10


def test_relative_cs_cylinder_examples(rng):
    ch = TorusChart(2, 2)
    trivial = convex_path(Connection.trivial(ch, 2), Connection.trivial(ch, 2))
    assert relative_cs_cylinder(trivial, 1).is_zero
    # rank 1, p = 1: cs = (i / 2 pi) A~ since P_1 is the normalized trace
    a0 = const_one_form(ch, {0: [[0.4j]]})
    a1 = const_one_form(ch, {1: [[-0.9j]]})
    path = ConnectionPath((a0, a1))
    cs = relative_cs_cylinder(path, 1)
    for t in (0.0, 0.4, 1.0):
        base, dt_part = cs.evaluate(t)
        assert sup_norm(base - path.form_at(t).scale(1j / (2 * math.pi))) <= 1e-15
        assert dt_part is None or sup_norm(dt_part) == 0


def test_relative_cs_cylinder_is_a_potential(rng):
    ch = TorusChart(3, 4)
    for p in (1, 2):
        path = _nonflat_path(ch, 2, rng)
        cs = relative_cs_cylinder(path, p)
        assert (cyl_d(cs) - cylinder_chern_form(path, p)).norm() <= 1e-11


def test_fiber_integral_of_cylinder_chern_form_is_transgression(rng):
    # dt-component of P(Theta~^p) integrates over I to the transgression form
    ch = TorusChart(3, 4)
    path = _nonflat_path(ch, 2, rng, degree=2)
    fib = fiber_integrate_t(cylinder_chern_form(path, 2))
    eta = eta_form(path, 2)[0]
    assert min(sup_norm(fib - eta), sup_norm(fib + eta)) <= 1e-12
    assert sup_norm(eta) > 1e-6


def test_nonexact_target_reports_harmonic_obstruction():
    ch = TorusChart(2, 1)
    omega = const_one_form(ch, {0: [[1.0]], 1: [[0.2]]})
    assert sup_norm(harmonic_projection(omega)) > 0
    with pytest.raises(HarmonicObstruction):
        solve_potential(omega)


def test_p3_identities_on_nonflat_rank3():
    # p = 3 needs rank 3 (P_3 vanishes below) and T^5, the smallest torus on
    # which d beta_3 and cyl_d(cs_3) are not top-degree and hence not vacuous
    rng = np.random.default_rng(33)
    ch = TorusChart(5, 5)
    path = _nonflat_path(ch, 3, rng, freq=1)
    form, used = eta_form(path, 3)
    assert sup_norm(form) > 1e-6
    assert sup_norm(eta_form(path, 3, nodes=2 * used)[0] - form) <= 1e-13

    fam = build_family("perturbed_nonflat", ch, 3, {"freq": 1, "terms": 1, "degree": 1}, seed=4, p_max=3)
    beta = double_transgression(fam.sheet, 3, check=False)
    edge = eta_form(fam.sheet.path_at(1.0), 3)[0] - eta_form(fam.sheet.path_at(0.0), 3)[0]
    assert sup_norm(edge) > 1e-6
    assert sup_norm(exterior_derivative(beta, strict=False) - edge) <= 1e-10

    cs = relative_cs_cylinder(fam.path, 3)
    chern = cylinder_chern_form(fam.path, 3)
    assert chern.norm() > 1e-6
    assert (cyl_d(cs) - chern).norm() <= 1e-10
