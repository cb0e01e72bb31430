import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import quad

from fluxgate.drive import (
    PulseSpec,
    delta_ab,
    envelope,
    lambda_12,
    lambda_to_f,
    make_pulse,
    mean_unit_envelope,
    unit_envelope,
)

from conftest import coupled_system


@settings(max_examples=30, deadline=None)
@given(t_gate=st.floats(20.0, 400.0), frac=st.floats(0.05, 0.5))
def test_mean_envelope_matches_quadrature(t_gate, frac):
    t_rise = frac * t_gate
    sigma = t_rise / 2
    for shape in ("flat_with_rise", "gaussian_full"):
        if shape == "gaussian_full":
            t_rise, sigma = t_gate / 2, t_gate / 4
        num, _ = quad(lambda t: float(unit_envelope(shape, t, t_gate, t_rise, sigma)), 0, t_gate,
                      points=[t_rise], epsabs=1e-12, epsrel=1e-12)
        assert mean_unit_envelope(shape, t_gate, t_rise, sigma) == pytest.approx(num / t_gate,
                                                                                 rel=1e-9)


def test_gaussian_full_shape():
    sys = coupled_system(0.2)
    p = make_pulse(sys, 0.3, shape="gaussian_full", t_gate=90.0)
    t = np.linspace(0, 90, 181)
    env = envelope(p, t)
    assert_allclose(env, env[::-1], atol=1e-14)
    assert env[0] == pytest.approx(0.0, abs=1e-14)
    assert env.max() == pytest.approx(p.f_peak)
    assert np.argmax(env) == 90


def test_flat_with_rise_shape():
    sys = coupled_system(0.2)
    p = make_pulse(sys, 0.3, t_gate=200.0, t_rise=25.0)
    assert envelope(p, 0.0) == pytest.approx(0.0, abs=1e-14)
    assert envelope(p, 25.0) == pytest.approx(p.f_peak)
    assert_allclose(envelope(p, np.linspace(25, 200, 50)), p.f_peak)
    rise = envelope(p, np.linspace(0, 25, 50))
    assert np.all(np.diff(rise) >= 0)


def test_lambda_peak_definition():
    sys = coupled_system(0.2)
    f = lambda_to_f(0.4, sys)
    assert 2 * f * sys.spec_a.n_abs(0, 1) / delta_ab(sys) == pytest.approx(0.4)


def test_time_average_convention():
    sys = coupled_system(0.2)
    p = make_pulse(sys, 0.35, shape="gaussian_full", t_gate=93.0)
    assert p.convention == "time_average"
    mean, _ = quad(lambda t: float(envelope(p, t)), 0, p.t_gate, epsabs=1e-13)
    assert mean / p.t_gate == pytest.approx(lambda_to_f(0.35, sys), rel=1e-9)


def test_lambda_12_scales_linearly():
    sys = coupled_system(0.2)
    assert lambda_12(0.4, sys) == pytest.approx(2 * lambda_12(0.2, sys))


def test_envelope_outside_window():
    sys = coupled_system(0.2)
    p = make_pulse(sys, 0.3, t_gate=100.0)
    with pytest.raises(ValueError):
        envelope(p, 100.5)
    with pytest.raises(ValueError):
        envelope(p, -0.1)


@pytest.mark.parametrize("changes, match", [
    ({"lam": -0.1}, "lambda"),
    ({"shape": "square"}, "shape"),
    ({"t_rise": 0.0}, "t_rise"),
    ({"t_rise": 10.0, "shape": "gaussian_full"}, "gaussian_full"),
])
def test_pulse_validation(changes, match):
    base = dict(omega_d=1.0, gamma_d=0.0, lam=0.1, shape="flat_with_rise", t_gate=100.0,
                t_rise=25.0, sigma=12.5, f_peak=0.01)
    base.update(changes)
    with pytest.raises(ValueError, match=match):
        PulseSpec(**base)


def test_detuning_shifts_drive_frequency():
    sys = coupled_system(0.2)
    p = make_pulse(sys, 0.3, detuning_mhz=-4.0)
    assert p.omega_d / (2 * math.pi) == pytest.approx(sys.omega_bar - 4e-3, abs=1e-12)
