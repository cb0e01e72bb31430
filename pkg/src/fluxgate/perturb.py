"""Perturbative two-photon estimates and numeric Rabi-frequency extraction.

Rates are angular (rad/ns) internally; the ``*_mhz`` fields report
``omega / 2 pi`` in MHz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .drive import _f_from_lambda, delta_ab, ghz_to_rad, rad_to_mhz

__all__ = [
    "PerturbativeEstimates",
    "estimate",
    "single_photon_contrast",
    "two_photon_rate_full",
    "two_photon_rate_all_levels",
    "two_photon_rate_linear",
    "zeta_rate",
    "numeric_rabi_extract",
    "NoOscillationError",
]


class NoOscillationError(ValueError):
    """The trace shows no usable oscillation."""


@dataclass(frozen=True)
class PerturbativeEstimates:
    """Closed-form predictions at one drive amplitude.

    Frequencies ``omega_bar``, ``delta_ab`` and ``delta_ab_tilde`` are in
    GHz; ``omega_tilde_*`` in MHz; ``zeta_rate`` and single-qubit Rabi
    frequencies ``omega_a0``, ``omega_b0`` in rad/ns.
    """

    omega_bar: float
    contrast_a: float
    contrast_b: float
    omega_tilde_full: float
    omega_tilde_all_levels: float
    omega_tilde_linear: float
    zeta_rate: float
    zeta_rate_dressed: float
    delta_ab: float
    delta_ab_tilde: float
    omega_a0: float
    omega_b0: float


def single_photon_contrast(omega0, delta):
    """Two-level Rabi contrast ``omega0^2 / (omega0^2 + (delta/2)^2)``."""
    omega0 = abs(omega0)
    denom = omega0 ** 2 + (delta / 2.0) ** 2
    return 1.0 if denom == 0 else omega0 ** 2 / denom


def _rabi(sys, f, a, b):
    return 2.0 * f * abs(sys.matrix_element(a, b))


def _omega(sys, a, b):
    return ghz_to_rad(sys.energy(b) - sys.energy(a))


def two_photon_rate_full(sys, f):
    """Two-photon Rabi frequency (rad/ns) via the 01 and 10 intermediates.

    ``|W_{00-01} W_{01-11} - W_{00-10} W_{10-11}| / Delta~`` with
    ``W_{kl-k'l'} = 2 f |N|`` from dressed matrix elements and
    ``Delta~ = |omega_{00-01} - omega_{00-10}|``.
    """
    d_tilde = abs(_omega(sys, (0, 0), (0, 1)) - _omega(sys, (0, 0), (1, 0)))
    if d_tilde == 0:
        raise ValueError("dressed 01 and 10 are degenerate")
    num = (_rabi(sys, f, (0, 0), (0, 1)) * _rabi(sys, f, (0, 1), (1, 1))
           - _rabi(sys, f, (0, 0), (1, 0)) * _rabi(sys, f, (1, 0), (1, 1)))
    return abs(num) / d_tilde


def two_photon_rate_all_levels(sys, f, intermediates=None):
    """Signed second-order sum over intermediate states (rad/ns).

    ``2 f^2 |sum_m N_{00,m} N_{m,11} / (omega_bar - omega_{00-m})|`` using
    phase-fixed dressed matrix elements. ``intermediates`` restricts the
    sum (labels); by default all states except 00 and 11 contribute.
    """
    i00, i11 = sys.index((0, 0)), sys.index((1, 1))
    wbar = ghz_to_rad(sys.omega_bar)
    if intermediates is None:
        idx = [i for i in range(sys.dim) if i not in (i00, i11)]
    else:
        idx = [sys.index(lab) for lab in intermediates]
    total = 0j
    for m in idx:
        det = wbar - ghz_to_rad(sys.energies[m] - sys.energies[i00])
        total += sys.drive_op[i11, m] * sys.drive_op[m, i00] / det
    return 2.0 * f * f * abs(total)


def two_photon_rate_linear(sys, f):
    """First-order-in-coupling two-photon Rabi frequency (rad/ns).

    ``2 n01^A n01^B J_C (Omega_A0^2 + Omega_B0^2) / Delta_AB^2`` with bare
    two-level quantities.
    """
    na, nb = sys.spec_a.n_abs(0, 1), sys.spec_b.n_abs(0, 1)
    om_a = 2.0 * f * abs(sys.params.eta_a) * na
    om_b = 2.0 * f * abs(sys.params.eta_b) * nb
    d = delta_ab(sys)
    return 2.0 * na * nb * ghz_to_rad(abs(sys.params.j_c)) * (om_a ** 2 + om_b ** 2) / d ** 2


def zeta_rate(omega_a0, omega_b0, omega_tilde):
    """Drive-induced ZZ phase rate ``4 W_A W_B / (W_A^2 + W_B^2) * omega_tilde``."""
    denom = omega_a0 ** 2 + omega_b0 ** 2
    return 0.0 if denom == 0 else 4.0 * omega_a0 * omega_b0 / denom * omega_tilde


def estimate(sys, lam):
    """Perturbative estimates at dimensionless amplitude ``lam`` (peak)."""
    f = _f_from_lambda(lam, sys)
    d = delta_ab(sys)
    d_tilde = abs(_omega(sys, (0, 0), (0, 1)) - _omega(sys, (0, 0), (1, 0)))
    if d_tilde == 0:
        raise ValueError("dressed 01 and 10 are degenerate")
    om_a = 2.0 * f * abs(sys.params.eta_a) * sys.spec_a.n_abs(0, 1)
    om_b = 2.0 * f * abs(sys.params.eta_b) * sys.spec_b.n_abs(0, 1)
    lin = two_photon_rate_linear(sys, f)
    dressed = (_rabi(sys, f, (0, 0), (1, 0)) ** 2 + _rabi(sys, f, (1, 0), (1, 1)) ** 2
               - _rabi(sys, f, (0, 0), (0, 1)) ** 2 - _rabi(sys, f, (0, 1), (1, 1)) ** 2) / d
    return PerturbativeEstimates(
        omega_bar=sys.omega_bar,
        contrast_a=single_photon_contrast(om_a, d),
        contrast_b=single_photon_contrast(om_b, d),
        omega_tilde_full=rad_to_mhz(two_photon_rate_full(sys, f)),
        omega_tilde_all_levels=rad_to_mhz(two_photon_rate_all_levels(sys, f)),
        omega_tilde_linear=rad_to_mhz(lin),
        zeta_rate=zeta_rate(om_a, om_b, lin),
        zeta_rate_dressed=dressed,
        delta_ab=d / (2 * math.pi),
        delta_ab_tilde=d_tilde / (2 * math.pi),
        omega_a0=om_a,
        omega_b0=om_b,
    )


def numeric_rabi_extract(times, p11, min_contrast=0.01):
    """Rabi frequency (MHz) and contrast of an oscillating population trace.

    The frequency comes from the largest peak of the zero-padded spectrum
    of the mean-subtracted trace, refined by the mean spacing of the trace
    maxima when at least two are resolved. Contrast is ``max(p11)``.

    Parameters
    ----------
    times : array_like
        Uniformly spaced sample times (ns).
    p11 : array_like
        Population samples.

    Raises
    ------
    NoOscillationError
        Contrast below ``min_contrast`` or less than one period in the trace.
    """
    t = np.asarray(times, dtype=float)
    p = np.asarray(p11, dtype=float)
    if t.size < 8 or t.size != p.size:
        raise ValueError("need matching arrays with at least 8 samples")
    step = np.diff(t)
    if np.max(np.abs(step - step.mean())) > 1e-6 * max(step.mean(), 1e-12):
        raise ValueError("samples must be uniformly spaced")
    dt = float(step.mean())
    contrast = float(p.max())
    if contrast < min_contrast or np.ptp(p) < min_contrast:
        raise NoOscillationError(f"contrast {contrast:.3g} below {min_contrast}")
    x = p - p.mean()
    n_fft = 16 * int(2 ** math.ceil(math.log2(t.size)))
    spec = np.abs(np.fft.rfft(x * np.hanning(t.size), n_fft))
    freqs = np.fft.rfftfreq(n_fft, dt)
    k = int(np.argmax(spec[1:])) + 1
    if 0 < k < spec.size - 1:
        a, b, c = spec[k - 1], spec[k], spec[k + 1]
        shift = 0.5 * (a - c) / (a - 2 * b + c) if (a - 2 * b + c) != 0 else 0.0
    else:
        shift = 0.0
    f0 = (k + shift) * (freqs[1] - freqs[0])
    span = t[-1] - t[0]
    if f0 <= 0 or 1.0 / f0 > span:
        raise NoOscillationError("trace shorter than one oscillation period")
    period = 1.0 / f0
    peaks, _ = find_peaks(p, distance=max(1, int(0.6 * period / dt)),
                          prominence=0.5 * np.ptp(p))
    if peaks.size >= 2:
        first, last = _peak_time(t, p, peaks[0]), _peak_time(t, p, peaks[-1])
        # whole number of periods between the outer maxima; tolerant of missed peaks
        cycles = round((last - first) / period)
        if cycles >= 1:
            period = (last - first) / cycles
    return 1e3 / period, contrast


def _peak_time(t, p, i):
    """Parabolic-interpolated time of the sample maximum ``i``."""
    if 0 < i < p.size - 1:
        a, b, c = p[i - 1], p[i], p[i + 1]
        den = a - 2 * b + c
        if den != 0:
            return float(t[i] + 0.5 * (a - c) / den * (t[1] - t[0]))
    return float(t[i])
