"""Process tomography of the computational block in the Pauli basis.

Superoperators act on row-major vectorized density matrices, so the map
``rho -> P_m rho P_n^dag`` has the matrix ``P_m kron conj(P_n)`` and

    S = sum_mn chi_mn P_m kron conj(P_n).
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .evolve import comp_superop, evolve_lindblad, evolve_unitary
from .gatealg import build_family
from .gateext import extract_gate, fix_phases_full

__all__ = [
    "PAULI_LABELS",
    "pauli_basis",
    "ChiMatrix",
    "superop_from_unitary",
    "channel_to_chi",
    "chi_from_unitary",
    "ideal_chi",
    "process_fidelity",
    "depolarize",
    "TomographyResult",
    "lindblad_tomography",
]

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
PAULI_LABELS = tuple(a + b for a, b in itertools.product("IXYZ", repeat=2))


def pauli_basis():
    """The 16 two-qubit Paulis, qubit A first, ordered II, IX, ..., ZZ."""
    return np.array([np.kron(_SINGLE[lab[0]], _SINGLE[lab[1]]) for lab in PAULI_LABELS])


_PAULIS = pauli_basis()
# columns: vec of P_m kron conj(P_n) for (m, n) row-major
_CHI_MAP = np.array([np.kron(p, q.conj()).ravel()
                     for p in _PAULIS for q in _PAULIS]).T


@dataclass(frozen=True, eq=False)
class ChiMatrix:
    """16 x 16 process matrix in the :data:`PAULI_LABELS` basis."""

    matrix: np.ndarray

    @property
    def trace(self):
        return float(np.trace(self.matrix).real)

    def element(self, m, n):
        return self.matrix[PAULI_LABELS.index(m), PAULI_LABELS.index(n)]

    def to_superop(self):
        return (_CHI_MAP @ self.matrix.ravel()).reshape(16, 16)

    def write_csv(self, path, header_lines=()):
        """Rows ``m, n, re, im`` for every element."""
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["m", "n", "re", "im"])
            for i, m in enumerate(PAULI_LABELS):
                for j, n in enumerate(PAULI_LABELS):
                    z = self.matrix[i, j]
                    w.writerow([m, n, repr(float(z.real)), repr(float(z.imag))])


def superop_from_unitary(u):
    """Row-major superoperator ``U kron conj(U)``."""
    u = np.asarray(u, dtype=complex)
    return np.kron(u, u.conj())


def channel_to_chi(superop):
    """Invert ``S = sum chi_mn P_m kron conj(P_n)`` for a 16 x 16 ``S``."""
    s = np.asarray(superop, dtype=complex)
    if s.shape != (16, 16):
        raise ValueError("expected a 16 x 16 superoperator")
    # the 256 basis superoperators are unitary and mutually orthogonal: norm^2 = 16
    return ChiMatrix((_CHI_MAP.conj().T @ s.ravel()).reshape(16, 16) / 16.0)


def chi_from_unitary(u):
    """Rank-one chi ``c c^dag`` with ``U = sum_m c_m P_m``."""
    u = np.asarray(u, dtype=complex)
    c = np.einsum("mji,ji->m", _PAULIS.conj(), u) / 4.0
    return ChiMatrix(np.outer(c, c.conj()))


def ideal_chi(u_sim, zeta=None):
    """Chi of the family target in the frame of ``u_sim``.

    The target ``build_family(pi/2, zeta)`` is undressed by the Z phases that
    fix ``u_sim``, so its chi is directly comparable with the raw channel.
    ``zeta`` defaults to the value extracted from ``u_sim``.
    """
    fix = fix_phases_full(u_sim)
    z = fix.zeta if zeta is None else zeta
    return chi_from_unitary(fix.dress(build_family(math.pi / 2, z)))


def process_fidelity(chi_real, chi_ideal):
    """``[4 Re Tr(chi_real^dag chi_ideal) + Tr chi_real] / 5`` (average gate fidelity)."""
    a = chi_real.matrix if isinstance(chi_real, ChiMatrix) else np.asarray(chi_real)
    b = chi_ideal.matrix if isinstance(chi_ideal, ChiMatrix) else np.asarray(chi_ideal)
    return float((4.0 * np.trace(a.conj().T @ b).real + np.trace(a).real) / 5.0)


def depolarize(superop, p):
    """Compose a 16 x 16 superoperator with a two-qubit depolarizing channel.

    ``rho -> (1 - p) rho + p Tr(rho) I/4``.
    """
    s = np.asarray(superop, dtype=complex)
    eye = np.eye(4).ravel()
    dep = (1 - p) * np.eye(16) + p * np.outer(eye, eye) / 4.0
    return dep @ s


@dataclass(frozen=True, eq=False)
class TomographyResult:
    """Open-system gate: chi matrices, fidelity and the coherent reference."""

    chi: ChiMatrix
    chi_ideal: ChiMatrix
    fidelity: float
    u_sim: np.ndarray
    zeta: float
    superop: np.ndarray


def lindblad_tomography(sys, pulse, collapse, tol=1e-7, dt=None, u_sim=None):
    """Fidelity of the dissipative gate against the phase-fixed target.

    The single-qubit Z corrections and ``zeta`` are taken from the
    coherent evolution of the same pulse (``u_sim``, computed if absent).
    """
    if u_sim is None:
        u_sim = extract_gate(evolve_unitary(sys, pulse, tol=tol, dt=dt), sys)
    prop = evolve_lindblad(sys, pulse, collapse, tol=tol, dt=dt)
    s = comp_superop(prop, sys)
    chi = channel_to_chi(s)
    fix = fix_phases_full(u_sim)
    chi_t = chi_from_unitary(fix.dress(build_family(math.pi / 2, fix.zeta)))
    return TomographyResult(chi=chi, chi_ideal=chi_t, fidelity=process_fidelity(chi, chi_t),
                            u_sim=u_sim, zeta=fix.zeta, superop=s)
