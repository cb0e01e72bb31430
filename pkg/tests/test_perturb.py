import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluxgate.drive import lambda_to_f
from fluxgate.perturb import (
    NoOscillationError,
    estimate,
    numeric_rabi_extract,
    single_photon_contrast,
    two_photon_rate_all_levels,
    two_photon_rate_full,
    two_photon_rate_linear,
    zeta_rate,
)
from fluxgate.rabi import locate_resonance, rabi_point

from conftest import coupled_system


@settings(max_examples=40, deadline=None)
@given(period=st.floats(40.0, 300.0), contrast=st.floats(0.2, 1.0), phase=st.floats(0, 1))
def test_extract_synthetic_trace(period, contrast, phase):
    t = np.arange(0.0, 6 * period, period / 37.3)
    p = contrast * np.sin(math.pi * (t / period + phase)) ** 2
    rabi, c = numeric_rabi_extract(t, p)
    assert rabi == pytest.approx(1e3 / period, rel=1e-4)
    assert c == pytest.approx(contrast, rel=5e-3)


def test_extract_rejects_flat_and_short_traces():
    t = np.linspace(0, 100, 200)
    with pytest.raises(NoOscillationError):
        numeric_rabi_extract(t, np.full_like(t, 1e-4))
    with pytest.raises(NoOscillationError):
        numeric_rabi_extract(t, 0.5 * np.sin(math.pi * t / 800) ** 2)
    with pytest.raises(ValueError):
        numeric_rabi_extract(np.r_[t[:-1], 150.0], np.sin(t) ** 2)


def test_two_photon_rate_quadratic_in_drive():
    sys = coupled_system(0.2)
    f = lambda_to_f(0.1, sys)
    for rate in (two_photon_rate_full, two_photon_rate_all_levels, two_photon_rate_linear):
        assert rate(sys, 2 * f) / rate(sys, f) == pytest.approx(4.0, rel=1e-12)


def test_paths_cancel_without_coupling():
    sys = coupled_system(0.0)
    f = lambda_to_f(0.2, sys)
    single_path = 2 * f * abs(sys.matrix_element((0, 0), (0, 1))) * 2 * f \
        * abs(sys.matrix_element((0, 1), (1, 1)))
    assert two_photon_rate_full(sys, f) < 1e-12 * single_path
    assert two_photon_rate_all_levels(sys, f) < 1e-12 * single_path
    assert two_photon_rate_linear(sys, f) == 0.0


def test_linear_in_coupling_at_weak_coupling():
    sys = coupled_system(0.01)
    f = lambda_to_f(0.1, sys)
    assert two_photon_rate_linear(sys, f) == pytest.approx(two_photon_rate_full(sys, f),
                                                           rel=0.05)


def test_estimate_fields():
    est = estimate(coupled_system(0.2), 0.2)
    assert est.omega_a0 / (2 * math.pi * est.delta_ab) == pytest.approx(0.2)
    assert 0 < est.contrast_a < 1 and 0 < est.contrast_b < 1
    assert est.omega_tilde_full > 0


def test_contrast_and_zeta_rate_formulas():
    assert single_photon_contrast(1.0, 2.0) == pytest.approx(0.5)
    assert single_photon_contrast(0.0, 0.0) == 1.0
    assert zeta_rate(1.0, 1.0, 3.0) == pytest.approx(6.0)
    assert zeta_rate(0.0, 0.0, 3.0) == 0.0


def test_floquet_gap_matches_perturbation_at_weak_drive():
    sys = coupled_system(0.1)
    lam = 0.05
    _, gap_mhz = locate_resonance(sys, lam)
    assert gap_mhz == pytest.approx(estimate(sys, lam).omega_tilde_full, rel=0.03)


def test_trace_frequency_matches_floquet_gap():
    sys = coupled_system(0.3)
    d, gap_mhz = locate_resonance(sys, 0.2)
    pt = rabi_point(sys, 0.2, d)
    assert pt.rabi_mhz == pytest.approx(gap_mhz, rel=0.01)
    assert pt.contrast > 0.9
    assert np.all(np.diff(pt.times) > 0)
