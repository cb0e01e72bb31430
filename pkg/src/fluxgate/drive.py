"""Microwave pulse envelopes and the drive term of the Hamiltonian.

Angular frequencies are in rad/ns and times in ns. The drive term is
``2 f(t) cos(omega_d t + gamma_d) (eta_a n_a + eta_b n_b)`` with ``f`` in
rad/ns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "SHAPES",
    "CONVENTIONS",
    "PulseSpec",
    "make_pulse",
    "envelope",
    "unit_envelope",
    "mean_unit_envelope",
    "drive_signal",
    "delta_ab",
    "lambda_to_f",
    "lambda_12",
    "ghz_to_rad",
    "rad_to_mhz",
]

SHAPES = ("flat_with_rise", "gaussian_full")
CONVENTIONS = ("peak", "time_average")
DEFAULT_T_RISE = 25.0
_TWO_PI = 2.0 * math.pi


def ghz_to_rad(freq_ghz):
    """Convert a frequency in GHz to an angular frequency in rad/ns."""
    return _TWO_PI * freq_ghz


def rad_to_mhz(omega):
    """Convert rad/ns to MHz."""
    return omega / _TWO_PI * 1e3


@dataclass(frozen=True)
class PulseSpec:
    """Drive pulse.

    Parameters
    ----------
    omega_d : float
        Drive angular frequency (rad/ns).
    gamma_d : float
        Drive phase (rad).
    lam : float
        Dimensionless amplitude, the bare single-qubit Rabi frequency of
        qubit A over the qubit detuning.
    shape : {"flat_with_rise", "gaussian_full"}
        ``flat_with_rise`` is an offset Gaussian edge on ``[0, t_rise]``
        followed by a constant; ``gaussian_full`` rises to ``t_gate/2`` and
        falls back symmetrically.
    t_gate, t_rise, sigma : float
        Duration, rise time and Gaussian width (ns).
    f_peak : float
        Peak envelope amplitude (rad/ns), usually set by :func:`make_pulse`.
    convention : {"peak", "time_average"}
        How ``lam`` was converted to ``f_peak``.
    """

    omega_d: float
    gamma_d: float
    lam: float
    shape: str
    t_gate: float
    t_rise: float
    sigma: float
    f_peak: float
    convention: str = "peak"

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"shape must be one of {SHAPES}, got {self.shape!r}")
        if self.convention not in CONVENTIONS:
            raise ValueError(f"convention must be one of {CONVENTIONS}")
        if not self.lam >= 0:
            raise ValueError("lambda must be nonnegative")
        if not self.f_peak >= 0:
            raise ValueError("f_peak must be nonnegative")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not 0 < self.t_rise <= self.t_gate:
            raise ValueError("need 0 < t_rise <= t_gate")
        if self.shape == "gaussian_full" and not math.isclose(
                2 * self.t_rise, self.t_gate, rel_tol=1e-12):
            raise ValueError("gaussian_full requires t_rise = t_gate/2")

    def with_(self, **changes):
        """Copy with fields replaced."""
        return replace(self, **changes)


def _edge(t, t_rise, sigma):
    e0 = math.exp(-t_rise ** 2 / (2 * sigma ** 2))
    return (np.exp(-(t - t_rise) ** 2 / (2 * sigma ** 2)) - e0) / (1 - e0)


def _edge_integral(t_rise, sigma):
    e0 = math.exp(-t_rise ** 2 / (2 * sigma ** 2))
    gauss = sigma * math.sqrt(math.pi / 2) * math.erf(t_rise / (sigma * math.sqrt(2)))
    return (gauss - t_rise * e0) / (1 - e0)


def unit_envelope(shape, t, t_gate, t_rise, sigma):
    """Envelope normalized to unit peak; vectorized over ``t``."""
    t = np.asarray(t, dtype=float)
    if shape == "flat_with_rise":
        return np.where(t < t_rise, _edge(np.minimum(t, t_rise), t_rise, sigma), 1.0)
    if shape == "gaussian_full":
        tt = np.where(t <= t_rise, t, t_gate - t)
        return _edge(tt, t_rise, sigma)
    raise ValueError(f"unknown shape {shape!r}")


def mean_unit_envelope(shape, t_gate, t_rise, sigma):
    """Time average of the unit envelope over ``[0, t_gate]`` (closed form)."""
    edge = _edge_integral(t_rise, sigma)
    if shape == "flat_with_rise":
        return (edge + (t_gate - t_rise)) / t_gate
    if shape == "gaussian_full":
        return 2.0 * edge / t_gate
    raise ValueError(f"unknown shape {shape!r}")


def envelope(spec, t):
    """Envelope ``f(t)`` in rad/ns.

    Raises
    ------
    ValueError
        If any ``t`` lies outside ``[0, t_gate]``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > spec.t_gate * (1 + 1e-12)):
        raise ValueError(f"t outside [0, {spec.t_gate}] ns")
    return spec.f_peak * unit_envelope(spec.shape, t, spec.t_gate, spec.t_rise,
                                       spec.sigma)


def drive_signal(spec, t):
    """Scalar drive coefficient ``2 f(t) cos(omega_d t + gamma_d)``."""
    t = np.asarray(t, dtype=float)
    return 2.0 * envelope(spec, t) * np.cos(spec.omega_d * t + spec.gamma_d)


def delta_ab(sys):
    """Bare qubit detuning ``|omega_01^A - omega_01^B|`` in rad/ns."""
    return ghz_to_rad(abs(sys.spec_a.freq(0, 1) - sys.spec_b.freq(0, 1)))


def _f_from_lambda(lam, sys):
    d = delta_ab(sys)
    if d < ghz_to_rad(1e-6):
        raise ValueError("qubits are degenerate (Delta_AB = 0)")
    weight = abs(sys.params.eta_a) * sys.spec_a.n_abs(0, 1)
    if weight == 0:
        raise ValueError("qubit A is not driven (eta_a * n_01 = 0)")
    return lam * d / (2.0 * weight)


def lambda_to_f(lam, sys, convention="peak", shape=None, t_gate=None,
                t_rise=None, sigma=None):
    """Peak envelope amplitude (rad/ns) for dimensionless amplitude ``lam``.

    With ``convention="peak"`` the peak value gives ``lam`` directly. With
    ``"time_average"`` the envelope averaged over ``[0, t_gate]`` gives
    ``lam``, which requires the pulse timing.
    """
    f = _f_from_lambda(lam, sys)
    if convention == "peak":
        return f
    if convention == "time_average":
        if None in (shape, t_gate, t_rise, sigma):
            raise ValueError("time_average needs shape, t_gate, t_rise and sigma")
        return f / mean_unit_envelope(shape, t_gate, t_rise, sigma)
    raise ValueError(f"unknown convention {convention!r}")


def lambda_12(lam, sys):
    """Dimensionless drive strength of qubit A's 1-2 transition.

    ``Omega_12 / (2 (omega_12^A - omega_bar))`` with ``Omega_12 = 2 f eta_a
    |n_12^A|`` at the peak amplitude implied by ``lam``.
    """
    f = _f_from_lambda(lam, sys)
    denom = ghz_to_rad(sys.spec_a.freq(1, 2) - sys.omega_bar)
    if abs(denom) < ghz_to_rad(1e-3):
        raise ValueError("1-2 transition of qubit A is resonant with omega_bar")
    omega12 = 2.0 * f * abs(sys.params.eta_a) * sys.spec_a.n_abs(1, 2)
    return omega12 / (2.0 * abs(denom))


def make_pulse(sys, lam, shape="flat_with_rise", t_gate=500.0, omega_d=None,
               gamma_d=0.0, t_rise=None, convention=None, detuning_mhz=0.0):
    """Build a :class:`PulseSpec` with the amplitude resolved from ``lam``.

    ``omega_d`` defaults to the two-photon resonance ``omega_bar`` shifted
    by ``detuning_mhz``. ``t_rise`` defaults to 25 ns for
    ``flat_with_rise``; ``gaussian_full`` always uses ``t_gate/2``. The
    amplitude convention defaults to ``time_average`` for
    ``gaussian_full`` and ``peak`` otherwise.
    """
    if shape == "gaussian_full":
        t_rise = t_gate / 2.0
    elif t_rise is None:
        t_rise = DEFAULT_T_RISE
    sigma = t_rise / 2.0
    if convention is None:
        convention = "time_average" if shape == "gaussian_full" else "peak"
    if omega_d is None:
        omega_d = ghz_to_rad(sys.omega_bar + 1e-3 * detuning_mhz)
    f_peak = lambda_to_f(lam, sys, convention, shape, t_gate, t_rise, sigma)
    return PulseSpec(omega_d=float(omega_d), gamma_d=float(gamma_d),
                     lam=float(lam), shape=shape, t_gate=float(t_gate),
                     t_rise=float(t_rise), sigma=float(sigma),
                     f_peak=float(f_peak), convention=convention)
