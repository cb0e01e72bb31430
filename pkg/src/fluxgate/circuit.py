"""Single fluxonium circuit: Hamiltonian diagonalization in the harmonic
oscillator basis of its linear (L-C) part.

Energies are in units of GHz (E/h) throughout; frequencies are reported as
omega/2pi in GHz.
"""

from __future__ import annotations

import configparser
import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

__all__ = [
    "CircuitParams",
    "FluxoniumSpectrum",
    "TruncationError",
    "DEFAULT_BASIS_SIZE",
    "DEFAULT_N_KEEP",
    "diagonalize",
    "charge_phase_consistency",
    "check_convergence",
    "oscillator_operators",
    "load_circuit_params",
    "write_spectrum_csv",
]

DEFAULT_BASIS_SIZE = 120
DEFAULT_N_KEEP = 5

# energies of the lowest levels must move by less than this (GHz) when the
# oscillator basis is doubled
CONVERGENCE_TOL_GHZ = 1e-6
_N_CONVERGENCE_LEVELS = 5


class TruncationError(RuntimeError):
    """The oscillator basis is too small for the requested levels."""


@dataclass(frozen=True)
class CircuitParams:
    """Parameters of one fluxonium circuit.

    Parameters
    ----------
    E_C, E_L, E_J : float
        Charging, inductive and Josephson energies in GHz.
    phi_ext : float
        External flux in radians; wrapped into [0, 2pi). The half-flux sweet
        spot is ``phi_ext = pi``.
    """

    E_C: float
    E_L: float
    E_J: float
    phi_ext: float = math.pi

    def __post_init__(self):
        for name in ("E_C", "E_L", "E_J"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be positive, got {value!r}")
        if not np.isfinite(self.phi_ext):
            raise ValueError(f"phi_ext must be finite, got {self.phi_ext!r}")
        object.__setattr__(self, "phi_ext", float(self.phi_ext) % (2 * math.pi))

    @property
    def plasma_frequency(self):
        """Frequency sqrt(8 E_C E_L) of the linear part, in GHz."""
        return math.sqrt(8.0 * self.E_C * self.E_L)


@dataclass(frozen=True, eq=False)
class FluxoniumSpectrum:
    """Low-lying eigensystem of a single fluxonium.

    ``n_elems[k, l]`` is <k|n|l> (Cooper pairs) and ``phi_elems[k, l]`` is
    <k|phi|l> (radians) in the truncated eigenbasis.
    """

    energies: np.ndarray
    n_elems: np.ndarray
    phi_elems: np.ndarray
    basis_size: int
    n_keep: int
    params: CircuitParams | None = None

    def freq(self, k, l):
        """Transition frequency E_l - E_k in GHz."""
        return float(self.energies[l] - self.energies[k])

    def n_abs(self, k, l):
        """|<k|n|l>|."""
        return float(abs(self.n_elems[k, l]))


def oscillator_operators(params, basis_size):
    """Phase and charge operators in the oscillator basis.

    Returns ``(phi, n)`` where ``phi = phi_zpf (a + a^dag)`` is real symmetric
    and ``n = i n_zpf (a^dag - a)`` is Hermitian, with
    ``phi_zpf = (8 E_C / E_L)^(1/4) / sqrt(2)`` and ``n_zpf = 1/(2 phi_zpf)``.
    """
    a = np.diag(np.sqrt(np.arange(1, basis_size, dtype=float)), 1)
    phi_zpf = (8.0 * params.E_C / params.E_L) ** 0.25 / math.sqrt(2.0)
    n_zpf = 0.5 / phi_zpf
    phi = phi_zpf * (a + a.T)
    n = 1j * n_zpf * (a.T - a)
    return phi, n


def _hamiltonian(params, basis_size):
    phi, n = oscillator_operators(params, basis_size)
    # cos(phi - phi_ext) via the spectral decomposition of the truncated phi
    w, v = np.linalg.eigh(phi)
    shifted = (v * np.exp(1j * (w - params.phi_ext))) @ v.T
    cos_op = shifted.real
    cos_op = 0.5 * (cos_op + cos_op.T)
    h_lin = params.plasma_frequency * np.diag(np.arange(basis_size) + 0.5)
    return h_lin - params.E_J * cos_op, phi, n


def _fix_phases(vecs):
    # largest-magnitude component of each eigenvector real and positive
    idx = np.argmax(np.abs(vecs), axis=0)
    lead = vecs[idx, np.arange(vecs.shape[1])]
    return vecs * (np.conj(lead) / np.abs(lead))


def _eigensystem(params, basis_size, n_keep):
    h, phi, n = _hamiltonian(params, basis_size)
    try:
        evals, evecs = scipy.linalg.eigh(h, subset_by_index=(0, n_keep - 1))
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            f"eigensolver failed for {params} with basis_size={basis_size}: {exc}"
        ) from exc
    evecs = _fix_phases(evecs)
    return evals, evecs, phi, n


def check_convergence(params, basis_size, n_levels=_N_CONVERGENCE_LEVELS):
    """Largest shift (GHz) of the lowest levels when the basis is doubled."""
    e1 = _eigensystem(params, basis_size, n_levels)[0]
    e2 = _eigensystem(params, 2 * basis_size, n_levels)[0]
    return float(np.max(np.abs(e1 - e2)))


def diagonalize(params, basis_size=DEFAULT_BASIS_SIZE, n_keep=DEFAULT_N_KEEP,
                check=True):
    """Diagonalize a single fluxonium Hamiltonian.

    Parameters
    ----------
    params : CircuitParams
    basis_size : int
        Number of oscillator states; must be at least ``4 * n_keep``.
    n_keep : int
        Number of eigenstates retained (at least 2).
    check : bool
        Run the basis-doubling convergence check (lowest five levels must
        move by less than 1 kHz).

    Returns
    -------
    FluxoniumSpectrum

    Raises
    ------
    TruncationError
        If the basis is too small or fails the convergence check.
    """
    if n_keep < 2:
        raise ValueError("n_keep must be at least 2")
    if basis_size < 4 * n_keep:
        raise TruncationError(
            f"basis_size={basis_size} is below 4*n_keep={4 * n_keep}")
    evals, evecs, phi, n = _eigensystem(params, basis_size, n_keep)
    if check:
        n_levels = max(n_keep, _N_CONVERGENCE_LEVELS)
        if basis_size < 4 * n_levels:
            raise TruncationError(
                f"basis_size={basis_size} too small to check {n_levels} levels")
        shift = check_convergence(params, basis_size, n_levels)
        if shift > CONVERGENCE_TOL_GHZ:
            raise TruncationError(
                f"levels move by {shift * 1e6:.3g} kHz when basis_size is "
                f"doubled from {basis_size}; increase basis_size")
    n_elems = evecs.conj().T @ n @ evecs
    phi_elems = evecs.conj().T @ phi @ evecs
    return FluxoniumSpectrum(
        energies=evals,
        n_elems=0.5 * (n_elems + n_elems.conj().T),
        phi_elems=0.5 * (phi_elems + phi_elems.conj().T),
        basis_size=basis_size,
        n_keep=n_keep,
        params=params,
    )


def charge_phase_consistency(spec, params):
    """Relative mismatch of |n_01| and omega_01 |phi_01| / (8 E_C).

    The identity follows from [H, phi] = -8i E_C n and holds exactly for
    exact eigenstates, so the residual measures truncation error.
    """
    n01 = abs(spec.n_elems[0, 1])
    rhs = spec.freq(0, 1) * abs(spec.phi_elems[0, 1]) / (8.0 * params.E_C)
    return float(abs(n01 - rhs) / max(n01, rhs))


_CONFIG_KEYS = ("e_c_ghz", "e_l_ghz", "e_j_ghz", "phi_ext_over_pi")


def load_circuit_params(path_or_text, prefix=""):
    """Read circuit parameters from a flat ``key = value`` file.

    Keys are ``e_c_ghz``, ``e_l_ghz``, ``e_j_ghz`` and ``phi_ext_over_pi``
    (optional, default 1), each optionally preceded by ``prefix``.
    """
    text = str(path_or_text)
    if "=" not in text:
        text = Path(text).read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.read_string("[circuit]\n" + text)
    section = parser["circuit"]
    values = {}
    for key in _CONFIG_KEYS:
        full = prefix + key
        if full in section:
            values[key] = float(section[full])
        elif key != "phi_ext_over_pi":
            raise KeyError(f"missing circuit key {full!r}")
    return CircuitParams(
        E_C=values["e_c_ghz"],
        E_L=values["e_l_ghz"],
        E_J=values["e_j_ghz"],
        phi_ext=math.pi * values.get("phi_ext_over_pi", 1.0),
    )


def write_spectrum_csv(spec, path, header_lines=()):
    """Write levels and |n|, |phi| matrix-element tables as CSV.

    The first table has columns ``level, energy_ghz, freq_from_ground_ghz``;
    it is followed by ``k, l, n_abs, phi_abs`` rows for k < l.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["level", "energy_ghz", "freq_from_ground_ghz"])
        for k, e in enumerate(spec.energies):
            writer.writerow([k, f"{e:.9f}", f"{e - spec.energies[0]:.9f}"])
        writer.writerow([])
        writer.writerow(["k", "l", "n_abs", "phi_abs"])
        for k in range(spec.n_keep):
            for l in range(k + 1, spec.n_keep):
                writer.writerow([k, l, f"{abs(spec.n_elems[k, l]):.9f}",
                                 f"{abs(spec.phi_elems[k, l]):.9f}"])
    return path
