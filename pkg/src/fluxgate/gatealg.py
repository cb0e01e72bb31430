"""Algebra of the two-qubit gate family mixing |00> and |11>.

Matrices use the computational order 00, 01, 10, 11 with qubit A first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GateFamilyParams",
    "LocalInvariants",
    "DecompositionStep",
    "build_family",
    "z_pair",
    "family_with_phase",
    "local_invariants",
    "entangling_power",
    "operator_entanglement",
    "decompose_theta",
    "compose",
    "equal_up_to_phase",
    "BSWAP",
    "SWAP",
    "MAGIC",
]

MAGIC = np.array([[1, 0, 0, 1j],
                  [0, 1j, 1, 0],
                  [0, 1j, -1, 0],
                  [1, 0, 0, -1j]], dtype=complex) / math.sqrt(2)

SWAP = np.array([[1, 0, 0, 0],
                 [0, 0, 1, 0],
                 [0, 1, 0, 0],
                 [0, 0, 0, 1]], dtype=complex)

_UNITARY_TOL = 1e-8


@dataclass(frozen=True)
class GateFamilyParams:
    """Mixing angle ``theta`` and controlled-phase angle ``zeta``, in [0, 2pi)."""

    theta: float
    zeta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta) % (2 * math.pi))
        object.__setattr__(self, "zeta", float(self.zeta) % (2 * math.pi))


@dataclass(frozen=True)
class LocalInvariants:
    """Makhlin invariants; ``g1 = g1_re + i g1_im``."""

    g1: complex
    g2: float

    @property
    def g1_re(self):
        return float(self.g1.real)

    @property
    def g1_im(self):
        return float(self.g1.imag)

    def isclose(self, other, atol=1e-9):
        return abs(self.g1 - other.g1) <= atol and abs(self.g2 - other.g2) <= atol


def build_family(theta, zeta=None):
    """Gate rotating in the {00, 11} subspace with a phase on 01 and 10.

    ``[[c, 0, 0, -i s], [0, e^{i zeta/2}, 0, 0], [0, 0, e^{i zeta/2}, 0],
    [-i s, 0, 0, c]]`` with ``c = cos(theta/2)``, ``s = sin(theta/2)``.
    Accepts a :class:`GateFamilyParams` as the single argument.
    """
    if isinstance(theta, GateFamilyParams):
        theta, zeta = theta.theta, theta.zeta
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    ph = complex(math.cos(zeta / 2), math.sin(zeta / 2))
    return np.array([[c, 0, 0, -1j * s],
                     [0, ph, 0, 0],
                     [0, 0, ph, 0],
                     [-1j * s, 0, 0, c]], dtype=complex)


BSWAP = build_family(math.pi, 0.0)


def z_pair(nu):
    """Equal Z rotations on both qubits: ``diag(e^{-i nu}, 1, 1, e^{i nu})``."""
    return np.diag([np.exp(-1j * nu), 1.0, 1.0, np.exp(1j * nu)])


def family_with_phase(theta, zeta, gamma):
    """Family member with off-diagonal phases ``e^{-+i gamma}``.

    ``z_pair(gamma/2) @ build_family(theta, zeta) @ z_pair(-gamma/2)``, so
    ``u[0, 3] = -i s e^{-i gamma}`` and ``u[3, 0] = -i s e^{i gamma}``.
    """
    return z_pair(gamma / 2) @ build_family(theta, zeta) @ z_pair(-gamma / 2)


def _check_unitary(u):
    u = np.asarray(u, dtype=complex)
    if u.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {u.shape}")
    err = np.max(np.abs(u.conj().T @ u - np.eye(4)))
    if err > _UNITARY_TOL:
        raise ValueError(f"matrix is not unitary (deviation {err:.2e})")
    return u


def local_invariants(u):
    """Local invariants ``(G1, G2)`` of a two-qubit unitary.

    With ``U_B = Q^dag U Q`` in the magic basis and ``m = U_B^T U_B``:
    ``G1 = tr(m)^2 / (16 det U)`` and
    ``G2 = (tr(m)^2 - tr(m^2)) / (4 det U)``.

    Raises
    ------
    ValueError
        If ``u`` is not unitary to 1e-8.
    """
    u = _check_unitary(u)
    ub = MAGIC.conj().T @ u @ MAGIC
    m = ub.T @ ub
    det = np.linalg.det(u)
    tr = np.trace(m)
    g1 = tr ** 2 / (16 * det)
    g2 = (tr ** 2 - np.trace(m @ m)) / (4 * det)
    return LocalInvariants(g1=complex(g1), g2=float(g2.real))


def _realign(u):
    # (U^R)_{ij,kl} = U_{ik,jl}
    return u.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)


def operator_entanglement(u):
    """Linear-entropy operator entanglement ``1 - Tr[(R R^dag)^2]/16``."""
    r = _realign(np.asarray(u, dtype=complex))
    rr = r @ r.conj().T
    return float(1.0 - np.trace(rr @ rr).real / 16.0)


def entangling_power(u):
    """Entangling power ``(4/9)[E(U) + E(U S) - E(S)]``, in [0, 2/9]."""
    u = _check_unitary(u)
    return 4.0 / 9.0 * (operator_entanglement(u) + operator_entanglement(u @ SWAP)
                        - operator_entanglement(SWAP))


@dataclass(frozen=True)
class DecompositionStep:
    """One element of a gate sequence.

    ``kind == "z"``: ``z_pair(angle)``. ``kind == "family"``: the family
    member with mixing ``theta``, phase ``zeta`` and off-diagonal phase
    ``gamma``; ``drive_phase_shift = gamma/2`` is the microwave phase offset
    that realizes ``gamma``.
    """

    kind: str
    angle: float = 0.0
    theta: float = 0.0
    zeta: float = 0.0
    gamma: float = 0.0

    @property
    def drive_phase_shift(self):
        return self.gamma / 2.0

    def matrix(self):
        if self.kind == "z":
            return z_pair(self.angle)
        return family_with_phase(self.theta, self.zeta, self.gamma)


def decompose_theta(theta, zeta):
    """Sequence realizing ``build_family(theta, zeta)`` from two pi/2 gates.

    Returns steps in time order (first applied first):
    ``Z(-theta/4)``, ``U'(pi/2, zeta/2, pi/2 - theta/2)``,
    ``U'(pi/2, zeta/2, theta/2 - pi/2)``, ``Z(-theta/4)``.
    """
    half = math.pi / 2
    return [
        DecompositionStep("z", angle=-theta / 4),
        DecompositionStep("family", theta=half, zeta=zeta / 2, gamma=half - theta / 2),
        DecompositionStep("family", theta=half, zeta=zeta / 2, gamma=theta / 2 - half),
        DecompositionStep("z", angle=-theta / 4),
    ]


def compose(steps):
    """Matrix product of a time-ordered step sequence."""
    total = np.eye(4, dtype=complex)
    for step in steps:
        total = step.matrix() @ total
    return total


def equal_up_to_phase(a, b, atol=1e-10):
    """True if ``a = e^{i phi} b`` for unitaries ``a``, ``b``."""
    return abs(abs(np.trace(np.asarray(a).conj().T @ np.asarray(b))) - 4.0) <= atol
