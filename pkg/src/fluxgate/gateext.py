"""Computational-subspace gate extraction, phase fixing and error budget.

The ideal gate is ``build_family(pi/2, zeta)``: populations 1/2 in the
{00, 11} block and 1 on 01 and 10. Population errors ``eps[out, in]``
measure deviations of ``|<out|U|in>|^2`` from those ideal values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .coupled import COMPUTATIONAL_LABELS
from .gatealg import build_family, entangling_power, local_invariants

__all__ = [
    "PhaseFix",
    "GateReport",
    "extract_gate",
    "fix_phases",
    "fix_phases_full",
    "coherent_fidelity",
    "error_budget",
    "concurrence_00",
    "analyze_gate",
    "nearest_unitary",
    "IDEAL_POPULATIONS",
]

# ideal |<out|U|in>|^2 of the pi/2 family member, [out, in]
IDEAL_POPULATIONS = np.array([[0.5, 0, 0, 0.5],
                              [0, 1, 0, 0],
                              [0, 0, 1, 0],
                              [0.5, 0, 0, 0.5]])
_SIGMA_YY = np.array([[0, 0, 0, -1],
                      [0, 0, 1, 0],
                      [0, 1, 0, 0],
                      [-1, 0, 0, 0]], dtype=complex)
DIAG_MIN = 1e-6


def _wrap(x):
    """Wrap into (-pi, pi]."""
    y = math.remainder(x, 2 * math.pi)
    return math.pi if y == -math.pi else y


@dataclass(frozen=True, eq=False)
class PhaseFix:
    """Outcome of virtual-Z phase fixing.

    ``u_fixed = diag(exp(1j*post)) @ u_sim @ diag(exp(1j*pre))`` where
    ``pre`` and ``post`` are Z-rotation phase patterns ``a k + b l`` (plus a
    global phase in ``post``).
    """

    u_fixed: np.ndarray
    zeta: float
    beta: float
    pre: np.ndarray
    post: np.ndarray
    fallback: bool

    def dress(self, u_target):
        """Target expressed in the frame of ``u_sim``: ``post^* U pre^*``."""
        return (np.exp(-1j * self.post)[:, None] * u_target
                * np.exp(-1j * self.pre)[None, :])


def extract_gate(prop, sys):
    """Project a full unitary propagator onto 00, 01, 10, 11 (in that order)."""
    idx = sys.comp_indices
    return np.asarray(prop.matrix if hasattr(prop, "matrix") else prop)[np.ix_(idx, idx)]


def fix_phases_full(u_sim):
    """Phase-fix ``u_sim`` with single-qubit Z rotations before and after.

    The diagonal becomes ``(|u00|, |u01| e^{i zeta/2}, |u10| e^{i zeta/2},
    |u11|)`` with ``zeta = phi_01 + phi_10 - phi_00 - phi_11`` (a quantity no
    Z dressing can change), and both {00, 11} off-diagonal elements get the
    common phase ``-i e^{i beta/2}``, ``beta`` in (-pi, pi]. When the 00 or
    11 diagonal vanishes the off-diagonal phases stand in for them.
    """
    u = np.asarray(u_sim, dtype=complex)
    if u.shape != (4, 4):
        raise ValueError("u_sim must be 4x4")
    ph = np.angle(np.diag(u))
    a = float(np.angle(u[0, 3]))
    b = float(np.angle(u[3, 0]))
    fallback = min(abs(u[0, 0]), abs(u[3, 3])) < DIAG_MIN
    if fallback:
        if min(abs(u[0, 3]), abs(u[3, 0])) < DIAG_MIN:
            raise ValueError("both diagonal and off-diagonal {00,11} elements vanish")
        ph[0] = a + math.pi / 2
        ph[3] = b + math.pi / 2
    if min(abs(u[1, 1]), abs(u[2, 2])) < DIAG_MIN:
        raise ValueError("01 or 10 diagonal element vanishes")
    # the wrapped zeta fixes the branch of zeta/2 used by the target
    zeta = float((ph[1] + ph[2] - ph[0] - ph[3]) % (2 * math.pi))
    x = -ph[0]
    z = 0.5 * zeta - ph[1] + ph[0]
    y = 0.5 * zeta - ph[2] + ph[0]
    total = a + b + 2 * x + y + z
    beta = _wrap(total + math.pi)
    target = 0.5 * (beta - math.pi)
    # pre adds (yp, zp) per excited qubit; post carries the rest
    shift = target - a - x
    yp = zp = 0.5 * shift
    k = np.array([0, 0, 1, 1])
    l = np.array([0, 1, 0, 1])
    pre = yp * k + zp * l
    post = x + (y - yp) * k + (z - zp) * l
    u_fixed = np.exp(1j * post)[:, None] * u * np.exp(1j * pre)[None, :]
    return PhaseFix(u_fixed=u_fixed, zeta=zeta, beta=beta, pre=pre, post=post,
                    fallback=bool(fallback))


def fix_phases(u_sim):
    """``(u_fixed, zeta, beta)``; see :func:`fix_phases_full`."""
    fix = fix_phases_full(u_sim)
    return fix.u_fixed, fix.zeta, fix.beta


def coherent_fidelity(u_fixed, target_zeta):
    """``[Tr(U^dag U) + |Tr(U^dag U_t)|^2] / 20`` with ``U_t = build_family(pi/2, zeta)``."""
    u = np.asarray(u_fixed, dtype=complex)
    target = build_family(math.pi / 2, target_zeta)
    norm = np.trace(u.conj().T @ u).real
    overlap = abs(np.trace(u.conj().T @ target)) ** 2
    return float((norm + overlap) / 20.0)


def error_budget(u_sim, leakage_columns=None):
    """Population-error budget of a projected gate.

    Parameters
    ----------
    u_sim : (4, 4) array
    leakage_columns : (m, 4) array, optional
        Amplitudes from each computational input into non-computational
        states; appended as extra rows of the ``epsilons`` table.

    Returns
    -------
    e_comp, p_leak, e_theta : float
    epsilons : ndarray
        ``eps[out, in]``; rows 0-3 are 00, 01, 10, 11 and further rows are
        the non-computational outputs if given. Entries whose ideal value is
        1/2 are signed; all others are nonnegative for a contraction.
    """
    u = np.asarray(u_sim, dtype=complex)
    pops = np.abs(u) ** 2
    # signed: entries with ideal value 1/2 can err either way
    eps = np.where(IDEAL_POPULATIONS > 0, IDEAL_POPULATIONS - pops, pops)
    comp = [
        eps[1, 0] + eps[2, 0],
        eps[0, 1] + eps[3, 1] + eps[2, 1],
        eps[0, 2] + eps[3, 2] + eps[1, 2],
        eps[1, 3] + eps[2, 3],
    ]
    e_comp = float(sum(comp) / 5.0)
    p_leak = float(1.0 - np.trace(u.conj().T @ u).real / 4.0)
    e_theta = float(((eps[0, 0] - eps[3, 0]) ** 2 + (eps[0, 3] - eps[3, 3]) ** 2) / 20.0)
    if leakage_columns is not None:
        eps = np.vstack([eps, np.abs(np.asarray(leakage_columns)) ** 2])
    return e_comp, p_leak, e_theta, eps


def concurrence_00(u_sim):
    """Concurrence ``|<psi~|psi>|`` of ``psi = U|00>`` (unnormalized)."""
    psi = np.asarray(u_sim, dtype=complex)[:, 0]
    tilde = _SIGMA_YY @ psi.conj()
    return float(abs(np.vdot(tilde, psi)))


def nearest_unitary(u):
    """Closest unitary in Frobenius norm (polar factor)."""
    w, _, vh = np.linalg.svd(np.asarray(u, dtype=complex))
    return w @ vh


@dataclass(frozen=True, eq=False)
class GateReport:
    """Extracted gate and its metrics.

    Invariants and entangling power refer to the nearest unitary of
    ``u_sim`` (the projected operator is slightly non-unitary).
    """

    u_sim: np.ndarray
    u_fixed: np.ndarray
    zeta: float
    theta_eff: float
    fidelity: float
    e_comp: float
    p_leak: float
    e_theta: float
    concurrence_00: float
    epsilons: np.ndarray
    beta: float
    pre: np.ndarray
    post: np.ndarray
    fallback: bool
    g1: complex
    g2: float
    entangling_power: float
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        def cplx(m):
            m = np.asarray(m)
            return {"re": m.real.tolist(), "im": m.imag.tolist()}

        d = {
            "u_sim": cplx(self.u_sim),
            "u_fixed": cplx(self.u_fixed),
            "zeta": self.zeta,
            "zeta_over_pi": self.zeta / math.pi,
            "theta_eff": self.theta_eff,
            "fidelity": self.fidelity,
            "infidelity": 1.0 - self.fidelity,
            "e_comp": self.e_comp,
            "p_leak": self.p_leak,
            "e_theta": self.e_theta,
            "concurrence_00": self.concurrence_00,
            "epsilons": np.asarray(self.epsilons).tolist(),
            "beta": self.beta,
            "pre_phases": np.asarray(self.pre).tolist(),
            "post_phases": np.asarray(self.post).tolist(),
            "fallback": self.fallback,
            "G1": [self.g1.real, self.g1.imag],
            "G2": self.g2,
            "entangling_power": self.entangling_power,
        }
        d.update(self.extra)
        return d

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def analyze_gate(u_full, sys=None, extra=None):
    """Full report from a dim x dim propagator (or a 4x4 projected gate)."""
    u_full = np.asarray(u_full.matrix if hasattr(u_full, "matrix") else u_full)
    if u_full.shape == (4, 4):
        u_sim, leak = u_full, None
    else:
        if sys is None:
            raise ValueError("need the coupled system to project a full propagator")
        idx = sys.comp_indices
        u_sim = u_full[np.ix_(idx, idx)]
        rest = np.setdiff1d(np.arange(u_full.shape[0]), idx)
        leak = u_full[np.ix_(rest, idx)]
    fix = fix_phases_full(u_sim)
    fidelity = coherent_fidelity(fix.u_fixed, fix.zeta)
    e_comp, p_leak, e_theta, eps = error_budget(u_sim, leak)
    p_mix = abs(u_sim[3, 0]) ** 2 + abs(u_sim[0, 3]) ** 2
    p_stay = abs(u_sim[0, 0]) ** 2 + abs(u_sim[3, 3]) ** 2
    theta_eff = 2.0 * math.atan2(math.sqrt(p_mix), math.sqrt(p_stay))
    unit = nearest_unitary(u_sim)
    inv = local_invariants(unit)
    return GateReport(
        u_sim=u_sim, u_fixed=fix.u_fixed, zeta=fix.zeta, theta_eff=theta_eff,
        fidelity=fidelity, e_comp=e_comp, p_leak=p_leak, e_theta=e_theta,
        concurrence_00=concurrence_00(u_sim), epsilons=eps, beta=fix.beta,
        pre=fix.pre, post=fix.post, fallback=fix.fallback, g1=inv.g1, g2=inv.g2,
        entangling_power=entangling_power(unit), extra=dict(extra or {}),
    )


def comp_label_names():
    return ["".join(map(str, lab)) for lab in COMPUTATIONAL_LABELS]
