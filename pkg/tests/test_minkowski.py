from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from achronal.minkowski import (
    ETA,
    IDENTITY_SPINOR,
    FourVector,
    PoincareElement,
    SpinorMatrix,
    act,
    boost,
    compose,
    covering_map,
    energy,
    inverse,
    minkowski_product,
    on_shell,
    rotation,
    rotation_between,
)

finite = st.floats(-3, 3, allow_nan=False)
unit_axis = st.tuples(finite, finite, finite).filter(lambda v: np.linalg.norm(v) > 1e-3)


def random_sl2c(rng) -> SpinorMatrix:
    M = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    return SpinorMatrix(M / np.sqrt(np.linalg.det(M)))


@st.composite
def sl2c(draw):
    return random_sl2c(np.random.default_rng(draw(st.integers(0, 2**32 - 1))))


def test_minkowski_product_examples():
    assert minkowski_product((1, 0, 0, 0), (1, 0, 0, 0)) == 1
    assert minkowski_product((1, 0, 0, 1), (1, 0, 0, 1)) == 0
    assert minkowski_product((1, 2, 3, 4), (5, 6, 7, 8)) == -60


def test_energy_examples():
    assert energy((0, 0, 0), 1.0) == 1.0
    assert energy((3.0, 0.0, 4.0), 12.0) == pytest.approx(13.0, abs=1e-14)
    p = on_shell(np.array([[0.3, -0.2, 1.1]]), 2.0)
    assert minkowski_product(p[0], p[0]) == pytest.approx(4.0, abs=1e-13)


def test_fourvector_roundtrip():
    v = FourVector.from_array([1.0, 2.0, 3.0, 4.0])
    assert v.spatial.tolist() == [2.0, 3.0, 4.0]


def test_covering_map_identity_and_double_cover():
    assert np.allclose(covering_map(IDENTITY_SPINOR), np.eye(4), atol=0)
    minus = SpinorMatrix(-np.eye(2, dtype=complex))
    assert np.array_equal(covering_map(minus), np.eye(4))


def test_boost_matrix_along_3():
    rho = 0.83
    lam = covering_map(boost((0, 0, 1), rho))
    c, s = math.cosh(rho), math.sinh(rho)
    expected = np.array([[c, 0, 0, s], [0, 1, 0, 0], [0, 0, 1, 0], [s, 0, 0, c]])
    assert np.allclose(lam, expected, atol=1e-14)
    x = act(PoincareElement.lorentz(boost((0, 0, 1), rho)), [0, 0, 0, 1])
    assert np.allclose(x, [s, 0, 0, c], atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(sl2c())
def test_lorentz_metric_preserved(A):
    lam = covering_map(A)
    assert np.allclose(lam.T @ ETA @ lam, ETA, atol=1e-10 * max(1.0, np.abs(lam).max() ** 2))


@settings(max_examples=40, deadline=None)
@given(sl2c(), sl2c())
def test_covering_map_is_homomorphism(A, B):
    lhs = covering_map(A @ B)
    rhs = covering_map(A) @ covering_map(B)
    assert np.allclose(lhs, rhs, atol=1e-10 * max(1.0, np.abs(rhs).max()))


@settings(max_examples=30, deadline=None)
@given(sl2c())
def test_double_cover_exact(A):
    neg = SpinorMatrix(-A.matrix)
    assert np.array_equal(covering_map(A), covering_map(neg))


@settings(max_examples=30, deadline=None)
@given(unit_axis, st.floats(-math.pi, math.pi))
def test_rotation_is_unitary_and_fixes_axis(axis, angle):
    u = np.asarray(axis) / np.linalg.norm(axis)
    R = rotation(u, angle)
    assert R.is_unitary()
    lam = covering_map(R)
    assert np.allclose(lam[1:, 1:] @ u, u, atol=1e-12)
    assert np.allclose(lam[0], [1, 0, 0, 0], atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(unit_axis, unit_axis)
def test_rotation_between_maps_a_to_b(a, b):
    a = np.asarray(a) / np.linalg.norm(a)
    b = np.asarray(b) / np.linalg.norm(b)
    lam = covering_map(rotation_between(a, b))
    assert np.allclose(lam[1:, 1:] @ a, b, atol=1e-10)


def test_determinant_and_unit_axis_are_checked():
    with pytest.raises(ValueError):
        SpinorMatrix(np.diag([2.0, 1.0]).astype(complex))
    with pytest.raises(ValueError):
        rotation((0, 0, 2), 0.1)


def test_large_rapidity_boost_is_accepted():
    lam = covering_map(boost((0, 0, 1), 20.0))
    assert lam[0, 0] == pytest.approx(math.cosh(20.0), rel=1e-12)


def test_poincare_group_laws():
    rng = np.random.default_rng(3)
    g = PoincareElement(rng.normal(size=4), random_sl2c(rng))
    h = PoincareElement(rng.normal(size=4), random_sl2c(rng))
    x = rng.normal(size=4)
    e = compose(g, PoincareElement.identity())
    assert np.allclose(e.a, g.a) and e.A == g.A
    gi = compose(g, inverse(g))
    assert np.allclose(gi.a, 0, atol=1e-12)
    assert np.allclose(gi.A.matrix, np.eye(2), atol=1e-12)
    assert np.allclose(act(compose(g, h), x), act(g, act(h, x)), atol=1e-10)
    assert np.allclose(act(PoincareElement.translation([1, 2, 3, 4]), x), x + [1, 2, 3, 4])


def test_boosted_plane_identity():
    # A_rho maps {x0 = 0} onto {x0 = tanh(rho) x3}
    rng = np.random.default_rng(0)
    rho = 1.3
    pts = np.concatenate([np.zeros((200, 1)), rng.uniform(-5, 5, (200, 3))], axis=1)
    img = act(PoincareElement.lorentz(boost((0, 0, 1), rho)), pts)
    assert np.allclose(img[:, 0], math.tanh(rho) * img[:, 3], atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(sl2c(), sl2c())
def test_products_stay_unimodular(A, B):
    C = compose(PoincareElement.lorentz(A), PoincareElement.lorentz(B)).A
    assert abs(np.linalg.det(C.matrix) - 1) <= 1e-12 * (1 + np.sum(np.abs(C.matrix) ** 2))
    assert np.linalg.det(covering_map(C)) == pytest.approx(1.0, abs=1e-10 * np.abs(covering_map(C)).max() ** 4)
