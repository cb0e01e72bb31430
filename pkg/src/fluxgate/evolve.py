"""Lab-frame time evolution of the driven coupled system.

All propagators act on the dressed basis of a :class:`CoupledSystem`, in its
eigenvalue order. Energies enter as angular frequencies ``2 pi E`` (rad/ns)
measured from the ground state, so the zero-drive propagator is
``diag(exp(-i 2 pi (E_j - E_0) t))``.
"""

from __future__ import annotations

import csv
import math
import weakref
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse

from ._magnus import ConvergenceError, MagnusEngine
from .drive import drive_signal

__all__ = [
    "ConvergenceError",
    "Propagator",
    "PopulationTrace",
    "CollapseSet",
    "DEFAULT_TOL",
    "engine_for",
    "free_propagator",
    "evolve_unitary",
    "evolve_lindblad",
    "collapse_set",
    "collapse_from_t1",
    "population_trace",
    "stroboscopic_times",
    "time_reversed_pulse",
    "superop_to_choi",
    "comp_superop",
    "write_trace_csv",
    "save_superop",
]

DEFAULT_TOL = 1e-7
DEFAULT_H0 = 0.04
_FLOQUET_STEP = 0.01
_ENGINES = weakref.WeakKeyDictionary()


@dataclass(frozen=True, eq=False)
class Propagator:
    """Result of a time evolution.

    ``kind == "unitary"``: ``matrix`` is the dim x dim propagator.
    ``kind == "superop"``: ``matrix`` maps row-major ``vec`` of input
    density matrices to row-major ``vec`` of outputs; column ``c`` is the
    image of ``|i><j|`` with ``(i, j) = inputs[c]``.
    """

    matrix: np.ndarray
    t_gate: float
    kind: str
    dim: int
    inputs: tuple | None = None
    step: float | None = None
    change: float | None = None

    def unitarity_error(self):
        u = self.matrix
        return float(np.max(np.abs(u.conj().T @ u - np.eye(self.dim))))

    def trace_error(self):
        """Largest deviation of ``Tr(out)`` from ``Tr(in)`` over the inputs."""
        diag = np.arange(self.dim) * (self.dim + 1)
        traces = self.matrix[diag].sum(axis=0)
        expect = np.array([1.0 if i == j else 0.0 for i, j in self.inputs])
        return float(np.max(np.abs(traces - expect)))


@dataclass(frozen=True, eq=False)
class PopulationTrace:
    """Populations ``P_{initial -> label}(t)``; columns follow ``labels``."""

    times: np.ndarray
    populations: np.ndarray
    labels: tuple
    initial: tuple

    def pop(self, label):
        return self.populations[:, self.labels.index(tuple(label))]


@dataclass(frozen=True, eq=False)
class CollapseSet:
    """Relaxation and pure-dephasing channels of both qubits.

    Lifetimes are in microseconds as ``(qubit_a, qubit_b)`` pairs; an
    infinite lifetime drops the operator. ``operators`` are in the dressed
    basis with rates in 1/ns folded in.
    """

    t1_01: tuple
    t_phi_01: tuple
    t1_12: tuple
    t_phi_12: tuple
    operators: tuple
    names: tuple
    basis: str = "dressed"
    _dissipators: dict = field(default_factory=dict, repr=False)

    def dissipator_exp(self, h):
        """Sparse ``exp(D h)`` for the dissipative part (cached per h)."""
        key = round(h, 15)
        if key not in self._dissipators:
            self._dissipators[key] = _dissipator_exp(self.operators, h)
        return self._dissipators[key]


def engine_for(sys):
    """Magnus engine for ``sys`` (cached per system)."""
    eng = _ENGINES.get(sys)
    if eng is None:
        w = 2.0 * math.pi * (sys.energies - sys.energies[0])
        eng = MagnusEngine(w, sys.drive_op)
        _ENGINES[sys] = eng
    return eng


def _coef(pulse):
    return lambda t: drive_signal(pulse, np.clip(t, 0.0, pulse.t_gate))


def free_propagator(sys, t):
    """Zero-drive propagator over time ``t`` (ns)."""
    w = engine_for(sys).w
    return np.diag(np.exp(-1j * w * t))


def evolve_unitary(sys, pulse, tol=DEFAULT_TOL, dt=None, t_final=None):
    """Propagate all dressed basis states from 0 to ``pulse.t_gate``.

    Parameters
    ----------
    tol : float
        Step doubling stops when no transition probability changes by more
        than ``tol``. Ignored if ``dt`` is given.
    dt : float, optional
        Fixed step (ns); skips the refinement loop.
    t_final : float, optional
        End time if different from ``pulse.t_gate``.

    Raises
    ------
    ConvergenceError
        If refinement does not reach ``tol``.
    """
    t1 = pulse.t_gate if t_final is None else float(t_final)
    eng = engine_for(sys)
    if pulse.f_peak == 0:
        return Propagator(free_propagator(sys, t1), t1, "unitary", sys.dim,
                          step=None, change=0.0)
    coef = _coef(pulse)
    if dt is not None:
        n = max(1, int(math.ceil(t1 / dt - 1e-9)))
        u = eng.propagator(coef, 0.0, t1, n)
        return Propagator(u, t1, "unitary", sys.dim, step=t1 / n)
    u, h, change = eng.propagate(coef, 0.0, t1, tol=tol, h0=DEFAULT_H0)
    return Propagator(u, t1, "unitary", sys.dim, step=h, change=change)


def time_reversed_pulse(pulse):
    """Pulse whose propagator is the transpose of the original's.

    Valid for envelopes symmetric about ``t_gate/2`` and a purely imaginary
    drive operator (real dressed eigenvectors), where the reversed
    Hamiltonian ``H(T - t)^*`` is realized by the drive phase
    ``pi - omega_d T - gamma_d``. Then ``conj(U_rev) @ U`` is the identity.
    """
    if pulse.shape != "gaussian_full":
        raise ValueError("time reversal needs a symmetric envelope")
    gamma = math.pi - pulse.omega_d * pulse.t_gate - pulse.gamma_d
    return pulse.with_(gamma_d=math.remainder(gamma, 2 * math.pi))


def stroboscopic_times(pulse, t_max, every=1):
    """``t_rise + m T_d`` sample times up to ``t_max`` (every ``every`` periods)."""
    period = 2.0 * math.pi / pulse.omega_d
    m = np.arange(0, int((t_max - pulse.t_rise) / period) + 1, every)
    return pulse.t_rise + m * period


def _floquet_ok(pulse, times):
    if pulse.shape != "flat_with_rise":
        return False
    period = 2.0 * math.pi / pulse.omega_d
    return times[-1] - pulse.t_rise > 20 * period


def population_trace(sys, pulse, initial, times, tol=DEFAULT_TOL, dt=None,
                     floquet=None):
    """Populations of all dressed states at ``times`` starting from ``initial``.

    For ``flat_with_rise`` pulses the constant part is periodic with the
    drive period ``T_d``, so ``U(t_rise + m T_d + tau, t_rise) =
    U(t_rise + tau, t_rise) U_T^m`` with the one-period propagator ``U_T``.
    This is used automatically for long traces (``floquet=None``).
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a nonempty 1-d array")
    if np.any(np.diff(times) < 0) or times[0] < 0:
        raise ValueError("times must be nonnegative and sorted")
    if times[-1] > pulse.t_gate * (1 + 1e-12):
        raise ValueError("times extend beyond the pulse duration")
    eng = engine_for(sys)
    coef = _coef(pulse)
    psi0 = np.zeros(sys.dim, dtype=complex)
    psi0[sys.index(initial)] = 1.0
    if floquet is None:
        floquet = _floquet_ok(pulse, times)
    if not floquet:
        h = dt or _trace_step(eng, coef, times, tol)
        grid = np.concatenate([[0.0], times]) if times[0] > 0 else times
        us = eng.path(coef, grid, h)
        if times[0] > 0:
            us = us[1:]
        psi = us @ psi0
    else:
        psi = _floquet_states(eng, coef, pulse, times, psi0, tol, dt)
    pops = np.abs(psi) ** 2
    return PopulationTrace(times=times, populations=pops, labels=sys.labels,
                           initial=tuple(initial))


def _trace_step(eng, coef, times, tol):
    _, h, _ = eng.propagate(coef, 0.0, float(times[-1]), tol=tol, h0=DEFAULT_H0)
    return h


def _floquet_states(eng, coef, pulse, times, psi0, tol, dt):
    t_r = pulse.t_rise
    period = 2.0 * math.pi / pulse.omega_d
    h = dt or _FLOQUET_STEP
    out = np.empty((times.size, eng.dim), dtype=complex)
    early = times <= t_r
    if np.any(early):
        grid = np.concatenate([[0.0], times[early]])
        out[early] = (eng.path(coef, grid, h) @ psi0)[1:]
    if np.all(early):
        return out
    u_rise, _, _ = eng.propagate(coef, 0.0, t_r, tol=tol, h0=DEFAULT_H0)
    n_per = max(1, int(math.ceil(period / h)))
    u_per = eng.propagator(coef, t_r, t_r + period, n_per)
    evals, evecs = np.linalg.eig(u_per)
    evals = evals / np.abs(evals)
    amp = np.linalg.solve(evecs, u_rise @ psi0)
    late = ~early
    rel = times[late] - t_r
    m = np.floor(rel / period + 1e-12).astype(int)
    tau = np.clip(rel - m * period, 0.0, period)
    order = np.argsort(tau)
    taus = np.concatenate([[0.0], tau[order]])
    u_tau = eng.path(coef, t_r + taus, h)[1:]
    u_tau_sorted = np.empty_like(u_tau)
    u_tau_sorted[order] = u_tau
    strobe = (evecs[None] * (evals[None, :] ** m[:, None] * amp[None, :])[:, None, :]).sum(-1)
    out[late] = np.einsum("tij,tj->ti", u_tau_sorted, strobe)
    return out


def floquet_period_propagator(sys, pulse, h=_FLOQUET_STEP):
    """One-drive-period propagator on the flat part of a constant pulse."""
    eng = engine_for(sys)
    period = 2.0 * math.pi / pulse.omega_d
    n_per = max(1, int(math.ceil(period / h)))
    return eng.propagator(_coef(pulse), pulse.t_rise, pulse.t_rise + period, n_per)


def collapse_set(sys, t1_01=(math.inf, math.inf), t_phi_01=(math.inf, math.inf),
                 t1_12=(math.inf, math.inf), t_phi_12=(math.inf, math.inf),
                 basis="dressed"):
    """Collapse operators for relaxation and pure dephasing (times in us).

    For qubit A (qubit B analogous with the labels swapped) the operators
    are ``sqrt(1/T1) sum_k |0k><1k|``, ``sqrt(2/T_phi) sum_k |0k><0k|``,
    ``sqrt(1/T1') sum_k |1k><2k|`` and ``sqrt(2/T_phi') sum_k |2k><2k|``,
    summed over all retained levels ``k``. ``basis="bare"`` builds them on
    bare product states and transforms to the dressed basis.
    """
    pairs = [tuple(float(x) for x in _pair(v)) for v in (t1_01, t_phi_01, t1_12, t_phi_12)]
    for v in pairs:
        if any(not x > 0 for x in v):
            raise ValueError("lifetimes must be positive (inf disables)")
    if basis not in ("dressed", "bare"):
        raise ValueError("basis must be 'dressed' or 'bare'")
    n = sys.n_keep
    specs = [
        ("relax01", pairs[0], 1.0, (0, 1)),
        ("dephase01", pairs[1], 2.0, (0, 0)),
        ("relax12", pairs[2], 1.0, (1, 2)),
        ("dephase12", pairs[3], 2.0, (2, 2)),
    ]
    ops, names = [], []
    for qubit in (0, 1):
        for name, times, factor, (lo, hi) in specs:
            t = times[qubit]
            if math.isinf(t):
                continue
            rate = factor / (t * 1e3)
            mat = np.zeros((sys.dim, sys.dim), dtype=complex)
            for k in range(n):
                a = (lo, k) if qubit == 0 else (k, lo)
                b = (hi, k) if qubit == 0 else (k, hi)
                if basis == "dressed":
                    mat[sys.index(a), sys.index(b)] += 1.0
                else:
                    mat[a[0] * n + a[1], b[0] * n + b[1]] += 1.0
            if basis == "bare":
                mat = sys.to_dressed(mat)
            ops.append(math.sqrt(rate) * mat)
            names.append(f"{name}_{'AB'[qubit]}")
    return CollapseSet(t1_01=pairs[0], t_phi_01=pairs[1], t1_12=pairs[2],
                       t_phi_12=pairs[3], operators=tuple(ops),
                       names=tuple(names), basis=basis)


def collapse_from_t1(sys, t1_01=math.inf, t1_12=math.inf, basis="dressed"):
    """Collapse set with ``T_phi = 2 T1`` (coherence time equal to T1)."""
    t1_01, t1_12 = _pair(t1_01), _pair(t1_12)
    return collapse_set(sys, t1_01=t1_01, t_phi_01=tuple(2 * t for t in t1_01),
                        t1_12=t1_12, t_phi_12=tuple(2 * t for t in t1_12),
                        basis=basis)


def _pair(v):
    if np.ndim(v) == 0:
        return (float(v), float(v))
    v = tuple(v)
    if len(v) != 2:
        raise ValueError("expected a scalar or a (qubit_a, qubit_b) pair")
    return v


def dissipator_superop(operators, dim):
    """Row-major superoperator of the dissipator (without Hamiltonian)."""
    eye = np.eye(dim)
    sup = np.zeros((dim * dim, dim * dim), dtype=complex)
    for op in operators:
        g = op.conj().T @ op
        sup += np.kron(op, op.conj()) - 0.5 * np.kron(g, eye) - 0.5 * np.kron(eye, g.T)
    return sup


def _dissipator_exp(operators, h):
    if not operators:
        return None
    dim = operators[0].shape[0]
    e = scipy.linalg.expm(dissipator_superop(operators, dim) * h)
    e[np.abs(e) < 1e-18] = 0.0
    return scipy.sparse.csr_matrix(e)


def comp_inputs(sys):
    """Input pairs ``(i, j)`` for the 16 computational ``|i><j|``."""
    comp = sys.comp_indices
    return tuple((int(i), int(j)) for i in comp for j in comp)


def evolve_lindblad(sys, pulse, collapse, tol=DEFAULT_TOL, dt=None,
                    inputs="computational"):
    """Lindblad propagation with symmetric (Strang) splitting.

    Each step applies half a step of dissipation, the exact-to-sixth-order
    unitary step, then the second half of dissipation. The step size comes
    from the unitary refinement at ``tol`` unless ``dt`` is given.

    Parameters
    ----------
    inputs : {"computational", "all"}
        Propagate the 16 computational ``|i><j|`` (enough for process
        tomography) or all ``dim**2`` basis matrices (full superoperator).
    """
    dim = sys.dim
    if inputs == "computational":
        pairs = comp_inputs(sys)
    elif inputs == "all":
        pairs = tuple((i, j) for i in range(dim) for j in range(dim))
    else:
        raise ValueError("inputs must be 'computational' or 'all'")
    t1 = pulse.t_gate
    if dt is None:
        if pulse.f_peak == 0:
            h = DEFAULT_H0
        else:
            h = evolve_unitary(sys, pulse, tol=tol).step
    else:
        h = dt
    n_steps = max(1, int(math.ceil(t1 / h - 1e-9)))
    h = t1 / n_steps
    rho = np.zeros((len(pairs), dim, dim), dtype=complex)
    for c, (i, j) in enumerate(pairs):
        rho[c, i, j] = 1.0
    eng = engine_for(sys)
    coef = _coef(pulse)
    half = collapse.dissipator_exp(h / 2) if collapse.operators else None
    full = collapse.dissipator_exp(h) if collapse.operators else None

    def dissipate(r, mat):
        if mat is None:
            return r
        flat = r.reshape(len(pairs), dim * dim).T
        return np.ascontiguousarray((mat @ flat).T).reshape(r.shape)

    rho = dissipate(rho, half)
    chunk = 16
    for start in range(0, n_steps, chunk):
        n = min(chunk, n_steps - start)
        if pulse.f_peak == 0:
            steps = np.broadcast_to(free_propagator(sys, h), (n, dim, dim))
        else:
            steps = eng.step_propagators(coef, start * h, h, n)
        for k in range(n):
            u = steps[k]
            rho = u @ rho @ u.conj().T
            last = start + k == n_steps - 1
            rho = dissipate(rho, half if last else full)
    matrix = rho.reshape(len(pairs), dim * dim).T.copy()
    return Propagator(matrix, t1, "superop", dim, inputs=pairs, step=h)


def comp_superop(prop, sys):
    """Restrict a superoperator to computational inputs and outputs (16 x 16).

    Rows and columns are row-major over the ordered computational labels
    00, 01, 10, 11.
    """
    comp = sys.comp_indices
    out_rows = np.array([i * sys.dim + j for i in comp for j in comp])
    col_of = {pair: c for c, pair in enumerate(prop.inputs)}
    cols = np.array([col_of[(int(i), int(j))] for i in comp for j in comp])
    return prop.matrix[np.ix_(out_rows, cols)]


def superop_to_choi(superop, dim):
    """Choi matrix ``sum_ij |i><j| (x) S(|i><j|)`` of a full superoperator."""
    s = superop.reshape(dim, dim, dim, dim)  # out_a, out_b, in_i, in_j
    return s.transpose(2, 0, 3, 1).reshape(dim * dim, dim * dim).copy()


def write_trace_csv(trace, path, header_lines=(), labels=None):
    """CSV with ``t_ns`` then one population column per label."""
    path = Path(path)
    labels = trace.labels if labels is None else [tuple(x) for x in labels]
    with path.open("w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["t_ns"] + [f"P{k}{l}" for k, l in labels])
        for i, t in enumerate(trace.times):
            writer.writerow([f"{t:.6f}"] + [f"{trace.pop(lab)[i]:.9f}" for lab in labels])
    return path


def save_superop(prop, path):
    """Save a propagator matrix as ``.npy`` (complex128)."""
    path = Path(path)
    np.save(path, prop.matrix)
    return path
