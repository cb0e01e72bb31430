import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fluxgate.circuit import diagonalize
from fluxgate.coupled import (
    COMPUTATIONAL_LABELS,
    CoupledParams,
    LabelWarning,
    build_coupled,
    build_from_params,
    static_zz_mhz,
    transition_frequency,
)

from conftest import QUBIT_A, QUBIT_B, coupled_system


def test_uncoupled_is_product():
    sys = coupled_system(0.0)
    for k, l in [(0, 0), (0, 1), (1, 0), (1, 1), (2, 3)]:
        expect = sys.spec_a.energies[k] + sys.spec_b.energies[l]
        assert sys.energy((k, l)) == pytest.approx(expect, abs=1e-12)
    assert abs(static_zz_mhz(sys)) < 1e-9
    assert abs(sys.matrix_element((0, 0), (0, 1))) == pytest.approx(sys.spec_b.n_abs(0, 1))


def test_computational_levels_converged_in_n_keep():
    small = coupled_system(0.2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LabelWarning)
        big = build_from_params(CoupledParams(QUBIT_A, QUBIT_B, 0.2), n_keep=12)
    e_small = [small.energy(lab) for lab in COMPUTATIONAL_LABELS]
    e_big = [big.energy(lab) for lab in COMPUTATIONAL_LABELS]
    assert_allclose(e_small, e_big, atol=2e-6)


def test_second_order_level_shift():
    # weak coupling: 00 shift against the perturbative sum over product states
    j = 0.01
    sys = coupled_system(j)
    a, b = sys.spec_a, sys.spec_b
    shift = 0.0
    for k in range(a.n_keep):
        for l in range(b.n_keep):
            if (k, l) == (0, 0):
                continue
            m = j * a.n_elems[0, k] * b.n_elems[0, l]
            shift -= abs(m) ** 2 / (a.energies[k] + b.energies[l] - a.energies[0] - b.energies[0])
    e00 = sys.energy((0, 0)) - a.energies[0] - b.energies[0]
    assert e00 == pytest.approx(shift, rel=1e-3)


def test_dressed_operators_hermitian_and_labels_unique():
    sys = coupled_system(0.2)
    assert_allclose(sys.drive_op, sys.drive_op.conj().T, atol=1e-13)
    assert len(set(sys.labels)) == sys.dim
    v = sys.eigenvectors
    assert_allclose(v.conj().T @ v, np.eye(sys.dim), atol=1e-12)
    for i, lab in enumerate(sys.labels):
        assert sys.index(lab) == i


def test_omega_bar_is_half_transition():
    sys = coupled_system(0.2)
    assert sys.omega_bar == pytest.approx(0.5 * transition_frequency(sys, (0, 0), (1, 1)))


def test_zz_grows_with_coupling():
    zz = [static_zz_mhz(coupled_system(j)) for j in (0.05, 0.1, 0.2)]
    assert zz[0] < zz[1] < zz[2]
    # leading order is quadratic in J
    assert zz[1] / zz[0] == pytest.approx(4.0, rel=0.05)


def test_mismatched_truncation():
    a = diagonalize(QUBIT_A, n_keep=4)
    b = diagonalize(QUBIT_B, n_keep=5)
    with pytest.raises(ValueError):
        build_coupled(CoupledParams(QUBIT_A, QUBIT_B, 0.1), a, b)
