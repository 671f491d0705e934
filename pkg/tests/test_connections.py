from __future__ import annotations

import math

import numpy as np
import pytest

from tertiary_cs.connections import (
    Connection,
    ConnectionPath,
    ConnectionSheet,
    convex_path,
    curvature,
    endpoints_fixed,
    flatness_residual_path,
    flatness_residual_sheet,
    holonomy,
    is_flat,
    path_derivative,
    path_eval,
    sample_points,
)
from tertiary_cs.errors import GradeMismatch
from tertiary_cs.exterior import MatrixValuedForm, TorusChart, sup_norm, wedge, exterior_derivative
from tertiary_cs.identities import random_form, random_skew_connection

from conftest import const_connection, const_one_form


def test_connection_needs_one_form():
    with pytest.raises(GradeMismatch):
        Connection(MatrixValuedForm.zero(TorusChart(2), 1, 2))


def test_curvature_examples(rng):
    ch = TorusChart(3)
    assert curvature(Connection.trivial(ch, 2)).is_zero
    diag = const_connection(ch, {0: 1j * np.diag([0.3, -0.7])})
    assert curvature(diag).is_zero
    M = rng.normal(size=(2, 2)) + 0j
    N = rng.normal(size=(2, 2)) + 0j
    theta = curvature(const_connection(ch, {0: M, 1: N}))
    assert list(theta.components) == [(0, 1)]
    got = theta.evaluate([0, 0, 0])[(0, 1)]
    assert np.allclose(got, M @ N - N @ M, atol=1e-14)


def test_is_flat_examples(rng):
    ch = TorusChart(2)
    assert is_flat(Connection.trivial(ch, 2)) == (True, 0.0)
    comm = const_connection(ch, {0: np.diag([1j, 2j]), 1: np.diag([-1j, 0.5j])})
    flat, res = is_flat(comm)
    assert flat and res <= 1e-14
    e = np.array([[0, 1], [0, 0]], dtype=complex)
    f = np.array([[0, 0], [1, 0]], dtype=complex)
    flat, res = is_flat(const_connection(ch, {0: e, 1: f}))
    comm_norm = np.abs(e @ f - f @ e).max()
    assert not flat and res == pytest.approx(comm_norm)


def test_path_eval_and_derivative(rng):
    ch = TorusChart(2, 2)
    a0, a1 = random_form(ch, 2, 1, rng, 1), random_form(ch, 2, 1, rng, 1)
    path = ConnectionPath((a0, a1))
    assert sup_norm(path_eval(path, 0.0).A - a0) == 0
    assert path_derivative(ConnectionPath((a0,))).coeffs[0].is_zero
    chord = convex_path(Connection(a0), Connection(a1))
    deriv = path_derivative(chord)
    assert deriv.degree == 0 and sup_norm(deriv.coeffs[0] - (a1 - a0)) == 0


def test_convex_path_examples(rng):
    ch = TorusChart(2, 2)
    c0 = Connection(random_form(ch, 2, 1, rng, 1))
    c1 = Connection(random_form(ch, 2, 1, rng, 1))
    const = convex_path(c0, c0)
    assert const.coeffs[1].is_zero
    path = convex_path(c0, c1)
    assert sup_norm(path.at(0.0).A - c0.A) == 0
    assert sup_norm(path.at(1.0).A - c1.A) == 0
    assert sup_norm(path.at(0.5).A - (c0.A + c1.A).scale(0.5)) < 1e-15
    # curvature at the endpoints equals the endpoint curvature
    assert sup_norm(curvature(path.at(1.0)) - curvature(c1)) == 0


def test_path_degree_limit(rng):
    ch = TorusChart(1)
    a = MatrixValuedForm.constant(ch, [[1j]], (0,))
    with pytest.raises(ValueError):
        ConnectionPath((a,) * 10)


def test_reparametrize_composes(rng):
    ch = TorusChart(2, 2)
    path = ConnectionPath(tuple(random_form(ch, 1, 1, rng, 1) for _ in range(3)))
    phi = (0.0, 0.0, 3.0, -2.0)
    rp = path.reparametrize(phi)
    for t in (0.0, 0.3, 1.0):
        u = 3 * t**2 - 2 * t**3
        assert sup_norm(rp.form_at(t) - path.form_at(u)) < 1e-13


def test_endpoints_fixed_examples(rng):
    ch = TorusChart(2, 2)
    a0, a1, b = (random_form(ch, 1, 1, rng, 1) for _ in range(3))
    path = ConnectionPath((a0, a1 - a0))
    assert endpoints_fixed(ConnectionSheet((path.coeffs,)))
    bump = ConnectionSheet((path.coeffs, (b.zero_like(), b, -b)))
    assert endpoints_fixed(bump)
    loose = ConnectionSheet((path.coeffs, (b.zero_like(), b)))
    assert not endpoints_fixed(loose)


def test_sheet_slices(rng):
    ch = TorusChart(2, 2)
    c = [[random_form(ch, 1, 1, rng, 1) for _ in range(3)] for _ in range(2)]
    sheet = ConnectionSheet(c)
    s, t = 0.3, 0.8
    direct = sum(
        (c[j][k].scale(s**j * t**k) for j in range(2) for k in range(3)),
        MatrixValuedForm.zero(ch, 1, 1),
    )
    assert sup_norm(sheet.at(s, t).A - direct) < 1e-14
    assert sup_norm(sheet.s_path_at(t).form_at(s) - direct) < 1e-14
    ds = sheet.ds().at(s, t).A
    expected = sum((c[1][k].scale(t**k) for k in range(3)), MatrixValuedForm.zero(ch, 1, 1))
    assert sup_norm(ds - expected) < 1e-14


def test_sample_points_cover_degree():
    pts = sample_points(20)
    assert len(pts) == 21 and pts[0] == 0 and pts[-1] == 1
    assert len(sample_points(2)) == 9


def test_flatness_residuals(rng):
    ch = TorusChart(2, 2)
    flat_path = ConnectionPath(
        (const_one_form(ch, {0: [[1j]], 1: [[0.5j]]}), const_one_form(ch, {0: [[-2j]]}))
    )
    assert flatness_residual_path(flat_path) < 1e-15
    c = random_skew_connection(ch, 2, rng, 1)
    nonflat = ConnectionPath((c.A,))
    assert flatness_residual_path(nonflat) > 1e-3
    assert flatness_residual_sheet(ConnectionSheet((nonflat.coeffs,))) > 1e-3


def test_bianchi_on_random_connections(rng):
    for dim in (2, 3, 4):
        ch = TorusChart(dim, 3)
        c = random_skew_connection(ch, 3, rng, 1)
        theta = curvature(c)
        resid = exterior_derivative(theta, strict=False) - wedge(theta, c.A) + wedge(c.A, theta)
        assert sup_norm(resid) <= 1e-11


def test_holonomy_examples():
    ch = TorusChart(2, 1)
    assert np.allclose(holonomy(Connection.trivial(ch, 2), 0, [0, 0]), np.eye(2))
    theta = 0.37
    c = const_connection(ch, {0: [[1j * theta]]})
    U = holonomy(c, 0, [0.0, 0.0], steps=256)
    assert abs(U[0, 0] - np.exp(-2j * math.pi * theta)) <= 1e-8
    thetas = [0.37, -1.2]
    U2 = holonomy(const_connection(ch, {0: 1j * np.diag(thetas)}), 0, [0.0, 0.0], steps=256)
    assert np.allclose(U2, np.diag(np.exp(-2j * math.pi * np.array(thetas))), atol=1e-8)


def test_holonomy_step_doubling_and_gauge_term():
    ch = TorusChart(2, 1)
    # i(theta + g cos x0) dx0: the cos term integrates to zero around the loop
    a = MatrixValuedForm.from_terms(
        ch, 1, 1, {(0,): {(0, 0): 0.2j, (1, 0): 0.15j, (-1, 0): 0.15j}}
    )
    c = Connection(a)
    u128 = holonomy(c, 0, [0.4, 0.0], steps=128)
    u256 = holonomy(c, 0, [0.4, 0.0], steps=256)
    assert abs(u128 - u256).max() <= 1e-8
    assert abs(u256[0, 0] - np.exp(-2j * math.pi * 0.2)) <= 1e-8


def test_holonomy_continuity_along_flat_family():
    ch = TorusChart(2)
    path = ConnectionPath(
        (const_one_form(ch, {0: 1j * np.diag([0.1, 0.4])}), const_one_form(ch, {0: 1j * np.diag([0.5, -0.3])}))
    )
    hol = [holonomy(path.at(t), 0, [0.0, 0.0], steps=64) for t in np.linspace(0, 1, 11)]
    # |d/dt hol| <= 2 pi |A_1| for unitary flat families
    lipschitz = 2 * math.pi * 0.5 * 0.1
    for u, v in zip(hol, hol[1:]):
        assert abs(u - v).max() <= lipschitz + 1e-9


def test_holonomy_rejects_bad_input():
    ch = TorusChart(2)
    with pytest.raises(ValueError):
        holonomy(Connection.trivial(ch, 1), 0, [0.0], steps=64)
    with pytest.raises(ValueError):
        holonomy(Connection.trivial(ch, 1), 0, [0.0, 0.0], steps=8)
