import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fluxgate.gatealg import (
    BSWAP,
    SWAP,
    build_family,
    compose,
    decompose_theta,
    entangling_power,
    equal_up_to_phase,
    family_with_phase,
    local_invariants,
    z_pair,
)

from conftest import local_unitary, random_unitary

angles = st.floats(0.0, 2 * math.pi, allow_nan=False)
GRID = np.linspace(0.0, 2 * math.pi, 16)


def closed_g1(theta, zeta):
    return np.exp(-1j * zeta) / 4 * (np.exp(1j * zeta) + np.cos(theta)) ** 2


def closed_g2(theta, zeta):
    return 2 * np.cos(theta) + np.cos(zeta)


def closed_power(theta, zeta):
    return (5 - 4 * np.cos(zeta) * np.cos(theta) - np.cos(2 * theta)) / 36


def test_invariants_on_grid():
    worst = 0.0
    for theta in GRID:
        for zeta in GRID:
            u = build_family(theta, zeta)
            inv = local_invariants(u)
            worst = max(worst, abs(inv.g1 - closed_g1(theta, zeta)),
                        abs(inv.g2 - closed_g2(theta, zeta)),
                        abs(entangling_power(u) - closed_power(theta, zeta)))
    assert worst < 1e-10


@settings(max_examples=100, deadline=None)
@given(theta=angles, zeta=angles, seed=st.integers(0, 2 ** 32 - 1))
def test_local_dressing_invariance(theta, zeta, seed):
    rng = np.random.default_rng(seed)
    u = build_family(theta, zeta)
    v = local_unitary(rng) @ u @ local_unitary(rng) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    assert local_invariants(v).isclose(local_invariants(u), atol=1e-10)
    assert entangling_power(v) == pytest.approx(entangling_power(u), abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(theta=angles, zeta=angles)
def test_decomposition_identity(theta, zeta):
    steps = decompose_theta(theta, zeta)
    assert_allclose(compose(steps), build_family(theta, zeta), atol=1e-10)


@given(theta=angles, zeta=angles, gamma=angles)
def test_off_diagonal_phase(theta, zeta, gamma):
    u = family_with_phase(theta, zeta, gamma)
    s = math.sin(theta / 2)
    assert u[0, 3] == pytest.approx(-1j * s * np.exp(-1j * gamma), abs=1e-12)
    assert u[3, 0] == pytest.approx(-1j * s * np.exp(1j * gamma), abs=1e-12)
    # phase shifts are local
    assert local_invariants(u).isclose(local_invariants(build_family(theta, zeta)))


@given(seed=st.integers(0, 2 ** 32 - 1))
def test_power_bounds(seed):
    u = random_unitary(np.random.default_rng(seed), 4)
    p = entangling_power(u)
    assert -1e-12 <= p <= 2 / 9 + 1e-12


def test_reference_gates():
    assert entangling_power(SWAP) == pytest.approx(0.0, abs=1e-15)
    assert entangling_power(np.eye(4)) == pytest.approx(0.0, abs=1e-15)
    inv = local_invariants(BSWAP)
    assert inv.g1 == pytest.approx(0.0, abs=1e-12)
    assert inv.g2 == pytest.approx(-1.0)
    assert entangling_power(BSWAP) == pytest.approx(2 / 9)
    # theta = pi/2 power is independent of zeta
    for zeta in GRID:
        assert entangling_power(build_family(math.pi / 2, zeta)) == pytest.approx(1 / 6)


def test_z_pair_is_local():
    inv = local_invariants(z_pair(0.7))
    assert inv.isclose(local_invariants(np.eye(4)))


def test_equal_up_to_phase():
    u = build_family(1.0, 2.0)
    assert equal_up_to_phase(u, np.exp(0.3j) * u)
    assert not equal_up_to_phase(u, build_family(1.1, 2.0))


def test_non_unitary_rejected():
    with pytest.raises(ValueError, match="unitary"):
        local_invariants(2 * np.eye(4))
    with pytest.raises(ValueError, match="4x4"):
        entangling_power(np.eye(3))
