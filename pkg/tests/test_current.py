from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from achronal.current import (
    causality_margin,
    causality_margins,
    covariance_residual,
    current,
    current_many,
    current_naive,
    divergence,
    event_lattice,
    gram_matrix,
)
from achronal.flux import state_grid
from achronal.kernels import KernelSpec
from achronal.minkowski import PoincareElement, boost, rotation
from achronal.states import zero_state

# J0 at the origin for the reference state, n = 12, from the naive double loop
J0_ORIGIN_N12 = 0.03395338659128423
GENERIC_EVENT = (0.3, 0.1, -0.2, 0.5)


@pytest.fixture(scope="module")
def grid16(ref_state):
    return state_grid(ref_state, 16)


def test_zero_state_current(spec):
    phi = zero_state(p_max=2.0)
    grid = state_grid(phi, 6)
    J = current(phi, [0.1, 0.2, 0.3, 0.4], grid, spec)
    assert J.J0 == 0 and np.all(J.J == 0)
    assert divergence(phi, [0, 0, 0, 0], grid, spec, 1e-3) == 0
    assert causality_margin(phi, [0, 0, 0, 0], grid, spec) == 0


def test_rest_frame_spatial_current_vanishes(ref_state, spec, grid16):
    for t in (0.0, 0.7, -1.5):
        J = current(ref_state, [t, 0, 0, 0], grid16, spec)
        assert np.linalg.norm(J.J) <= 1e-10 * J.J0


def test_origin_value_matches_frozen_oracle(ref_state, spec):
    J = current(ref_state, [0, 0, 0, 0], state_grid(ref_state, 12), spec)
    assert J.J0 == pytest.approx(J0_ORIGIN_N12, rel=1e-6)


@pytest.mark.parametrize("x", [GENERIC_EVENT, (-1.0, 0.5, 0.5, -0.7)])
def test_vectorized_matches_naive(ref_state, spec, x):
    grid = state_grid(ref_state, 8)
    fast = current(ref_state, x, grid, spec).four_vector
    slow = current_naive(ref_state, x, grid, spec).four_vector
    assert np.max(np.abs(fast - slow)) <= 1e-12 * abs(slow[0])


def test_current_many_matches_single(ref_state, spec):
    grid = state_grid(ref_state, 8)
    ev = np.array([GENERIC_EVENT, (0, 0, 0, 0), (1, 1, 1, 1)], dtype=float)
    G = gram_matrix(grid, spec)
    many = current_many(ref_state, ev, grid, spec, G)
    for x, J in zip(ev, many):
        assert np.allclose(J, current(ref_state, x, grid, spec).four_vector, rtol=0, atol=1e-13 * J[0])


def test_divergence_second_order(ref_state, spec, grid16):
    res = [abs(divergence(ref_state, GENERIC_EVENT, grid16, spec, h)) for h in (4e-3, 2e-3, 1e-3)]
    for coarse, fine in zip(res, res[1:]):
        assert coarse / fine == pytest.approx(4.0, rel=0.25)
    J0 = current(ref_state, GENERIC_EVENT, grid16, spec).J0
    assert res[-1] <= 1e-6 * J0


def test_divergence_rejects_bad_step(ref_state, spec, grid16):
    with pytest.raises(ValueError):
        divergence(ref_state, GENERIC_EVENT, grid16, spec, 0.0)


@pytest.mark.parametrize("r", [1.5, 2.0])
def test_causality_on_lattice(ref_state, grid16, r):
    spec = KernelSpec(r=r)
    ev = event_lattice(6, 2.0)
    assert len(ev) >= 1000
    J = current_many(ref_state, ev, grid16, spec)
    margins = J[:, 0] - np.linalg.norm(J[:, 1:], axis=1)
    assert np.all(margins >= -1e-10 * (1 + J[:, 0]))


def test_non_admissible_kernel_violates_causality(ref_state, grid16):
    margins = causality_margins(ref_state, event_lattice(6, 2.0), grid16, KernelSpec(family="cos"))
    assert margins.min() < 0


@settings(max_examples=15, deadline=None)
@given(st.tuples(*[st.floats(-3, 3)] * 4))
def test_current_is_real(ref_state, spec, x):
    grid = state_grid(ref_state, 6)
    J = current(ref_state, x, grid, spec)
    assert J.imag_residue <= 1e-10 * max(J.J0, 1e-300)


@pytest.mark.parametrize(
    "g, tol",
    [
        (PoincareElement.identity(), 0.0),
        (PoincareElement.translation([0.5, -0.3, 0.2, 1.1]), 1e-10),
        (PoincareElement.lorentz(rotation((0.6, 0.0, 0.8), 1.1)), 1e-9),
        (PoincareElement.lorentz(boost((0, 0, 1), 1.0)), 1e-9),
    ],
)
def test_covariance_under_node_transport(ref_state, spec, g, tol):
    grid = state_grid(ref_state, 10)
    for x in (GENERIC_EVENT, (1.0, -0.5, 0.2, 0.9)):
        assert covariance_residual(ref_state, g, x, grid, spec) <= tol + 1e-15
