from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from achronal.kernels import (
    KernelNotPSDError,
    KernelSpec,
    anchor_factor,
    ball_anchors,
    g_eval,
    gram_K,
    gram_normalized_Kchi,
    kernel_K,
    kernel_Kchi,
    light_cone_weight,
    normalized_kchi,
    nystrom_factor,
    psd_check,
    rkhs_vector,
)
from achronal.minkowski import energy


def test_g_values(spec):
    assert g_eval(spec, 1.0) == 1.0
    assert g_eval(spec, 3.0) == pytest.approx(2**-1.5, rel=1e-14)
    assert g_eval(spec, 3.0) == pytest.approx(0.35355339, abs=1e-8)
    with pytest.raises(ValueError):
        g_eval(spec, 0.5)


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec(r=1.0)
    assert not KernelSpec(family="cos").admissible
    assert KernelSpec(r=2).admissible


@settings(max_examples=50, deadline=None)
@given(st.floats(1.5, 6), st.floats(1.0, 1e4))
def test_g_family_bounds(r, t):
    spec = KernelSpec(r=r)
    g = g_eval(spec, t)
    assert 0 < g <= 1
    assert g <= g_eval(KernelSpec(r=1.5), t) * (1 + 1e-14)
    assert g_eval(spec, t * 1.01) <= g


def test_kernel_diagonals(spec):
    p = np.random.default_rng(0).uniform(-3, 3, (30, 3))
    assert np.allclose(kernel_K(spec, p, p), energy(p, 1.0), rtol=1e-14)
    assert np.allclose(kernel_Kchi(spec, p, p), energy(p, 1.0) - p[:, 2], rtol=1e-12)
    z = np.zeros(3)
    assert kernel_K(spec, z, z) == pytest.approx(1.0)
    assert kernel_Kchi(spec, z, z) == pytest.approx(1.0)


def test_light_cone_weight_decreases():
    vals = [float(light_cone_weight(np.array([0, 0, q]), 1.0)) for q in (1, 10, 100)]
    assert vals[0] > vals[1] > vals[2] > 0
    # stable form m^2 / (eps + q) at large q
    assert float(light_cone_weight(np.array([0, 0, 1e8]), 1.0)) == pytest.approx(0.5e-8, rel=1e-12)


@pytest.mark.parametrize("r", [1.5, 2.0])
def test_gram_matrices_psd(r):
    spec = KernelSpec(r=r)
    rng = np.random.default_rng(11)
    for _ in range(20):
        pts = rng.uniform(-1, 1, (50, 3))
        pts *= 3 * rng.uniform(0, 1, (50, 1)) ** (1 / 3) / np.linalg.norm(pts, axis=1, keepdims=True)
        assert psd_check(lambda k, p: kernel_K(spec, k, p), pts).accepted
        assert psd_check(normalized_kchi(spec), pts).accepted


def test_repeated_point_gram_rank_one(spec):
    pts = np.tile([[0.3, -0.1, 0.5]], (5, 1))
    rep = psd_check(normalized_kchi(spec), pts)
    assert rep.accepted
    assert abs(rep.min_eig) < 1e-12 * rep.trace
    assert np.linalg.matrix_rank(gram_normalized_Kchi(spec, pts), tol=1e-10) == 1


def test_cos_family_gram_not_psd():
    spec = KernelSpec(family="cos")
    rng = np.random.default_rng(0)
    pts = rng.uniform(-3, 3, (50, 3))
    assert psd_check(lambda k, p: kernel_K(spec, k, p), pts).min_eig < 0


def test_psd_check_needs_two_points(spec):
    with pytest.raises(ValueError):
        psd_check(normalized_kchi(spec), np.zeros((1, 3)))


def test_nystrom_anchor_norms_and_reconstruction(spec):
    f = anchor_factor(spec, (0, 0, 0), 2.0, 256, seed=0)
    v = rkhs_vector(f, f.anchors)
    assert np.max(np.abs(np.sum(v * v, axis=1) - 1)) < 1e-8
    G = gram_normalized_Kchi(spec, f.anchors)
    assert np.max(np.abs(v @ v.T - G)) < 1e-6


def test_nystrom_off_anchor_error(spec):
    f = anchor_factor(spec, (0, 0, 0), 2.0, 512, seed=0)
    q = ball_anchors(300, (0, 0, 0), 2.0, seed=99)
    v = rkhs_vector(f, q)
    err = np.max(np.abs(v @ v.T - gram_normalized_Kchi(spec, q)))
    assert err <= 1e-3


def test_ball_anchors_inside_and_reproducible():
    a = ball_anchors(100, (1, 0, 0), 0.5, seed=4)
    assert a.shape == (100, 3)
    assert np.all(np.linalg.norm(a - [1, 0, 0], axis=1) <= 0.5)
    assert np.array_equal(a, ball_anchors(100, (1, 0, 0), 0.5, seed=4))


def test_nystrom_rejects_indefinite_kernel():
    spec = KernelSpec(family="cos")
    anchors = np.random.default_rng(0).uniform(-3, 3, (60, 3))
    with pytest.raises(KernelNotPSDError):
        nystrom_factor(spec, anchors)
