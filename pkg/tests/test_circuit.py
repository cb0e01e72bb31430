import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fluxgate.circuit import (
    CircuitParams,
    TruncationError,
    charge_phase_consistency,
    check_convergence,
    diagonalize,
    load_circuit_params,
)

from conftest import QUBIT_A, QUBIT_B


def grid_spectrum(p, n_levels=5, half_width=6 * math.pi, n_points=12001):
    """Finite-difference reference on a phase grid (independent of the oscillator basis)."""
    phi = np.linspace(-half_width, half_width, n_points)
    h = phi[1] - phi[0]
    diag = 8 * p.E_C / h ** 2 + 0.5 * p.E_L * phi ** 2 - p.E_J * np.cos(phi - p.phi_ext)
    off = np.full(n_points - 1, -4 * p.E_C / h ** 2)
    evals, evecs = scipy.linalg.eigh_tridiagonal(diag, off, select="i",
                                                 select_range=(0, n_levels - 1))
    # n = -i d/dphi; matrix elements by central differences
    d = (np.roll(evecs, -1, axis=0) - np.roll(evecs, 1, axis=0)) / (2 * h)
    n_abs = np.abs(evecs.T @ d)
    phi_abs = np.abs(evecs.T @ (phi[:, None] * evecs))
    return evals, n_abs, phi_abs


@pytest.mark.parametrize("params", [QUBIT_A, QUBIT_B], ids=["A", "B"])
def test_matches_phase_grid_reference(params):
    spec = diagonalize(params)
    evals, n_abs, phi_abs = grid_spectrum(params)
    assert_allclose(np.diff(spec.energies), np.diff(evals), atol=2e-4)
    assert_allclose(np.abs(spec.n_elems), n_abs, atol=2e-4)
    assert_allclose(np.abs(spec.phi_elems), phi_abs, atol=2e-4)


@pytest.mark.parametrize("params", [QUBIT_A, QUBIT_B], ids=["A", "B"])
def test_large_basis_agrees(params):
    small = diagonalize(params, basis_size=120)
    big = diagonalize(params, basis_size=200)
    assert_allclose(small.energies, big.energies, atol=1e-9)
    assert_allclose(np.abs(small.n_elems), np.abs(big.n_elems), atol=1e-9)


def test_parity_selection_at_sweet_spot():
    spec = diagonalize(QUBIT_A)
    for k, l in [(0, 2), (1, 3), (2, 4)]:
        assert spec.n_abs(k, l) < 1e-10
    assert spec.n_abs(0, 3) > 0.1


def test_operators_hermitian():
    spec = diagonalize(QUBIT_B)
    assert_allclose(spec.n_elems, spec.n_elems.conj().T, atol=1e-14)
    assert_allclose(spec.phi_elems, spec.phi_elems.conj().T, atol=1e-14)


@settings(max_examples=20, deadline=None)
@given(e_c=st.floats(0.5, 1.5), e_l=st.floats(0.5, 2.0), e_j=st.floats(1.0, 6.0),
       flux=st.floats(0.0, 2.0))
def test_charge_phase_identity(e_c, e_l, e_j, flux):
    p = CircuitParams(e_c, e_l, e_j, math.pi * flux)
    spec = diagonalize(p, basis_size=140, check=False)
    assert spec.freq(0, 1) > 0
    assert charge_phase_consistency(spec, p) < 1e-6


def test_harmonic_limit():
    # vanishing E_J leaves the L-C oscillator
    p = CircuitParams(1.0, 1.0, 1e-9)
    spec = diagonalize(p, basis_size=60)
    assert_allclose(np.diff(spec.energies), p.plasma_frequency, atol=1e-8)


def test_truncation_error():
    with pytest.raises(TruncationError, match="basis_size"):
        diagonalize(QUBIT_A, basis_size=20)
    assert check_convergence(QUBIT_A, 120) < 1e-6


@pytest.mark.parametrize("field", ["E_C", "E_L", "E_J"])
def test_invalid_energies(field):
    kw = {"E_C": 1.0, "E_L": 1.0, "E_J": 1.0, field: -1.0}
    with pytest.raises(ValueError, match=field):
        CircuitParams(**kw)


def test_flux_wrapped():
    assert CircuitParams(1, 1, 1, phi_ext=3 * math.pi).phi_ext == pytest.approx(math.pi)


def test_load_params_from_text():
    p = load_circuit_params("a_e_c_ghz = 1.0\na_e_l_ghz = 1.5\na_e_j_ghz = 3.8\n", prefix="a_")
    assert p == QUBIT_A
    with pytest.raises(KeyError):
        load_circuit_params("e_c_ghz = 1.0\n")
