from __future__ import annotations

import pytest

from achronal.chi import FFTGrid, embed_j, state_factor
from achronal.kernels import KernelSpec
from achronal.states import bump_state


@pytest.fixture(scope="session")
def ref_state():
    return bump_state()


@pytest.fixture(scope="session")
def spec():
    return KernelSpec()


@pytest.fixture(scope="session")
def spec2():
    return KernelSpec(r=2.0)


@pytest.fixture(scope="session")
def chi_factor(ref_state, spec):
    return state_factor(ref_state, spec, 512, seed=0)


@pytest.fixture(scope="session")
def chi_field(ref_state, chi_factor):
    return embed_j(ref_state, chi_factor, FFTGrid())
