"""Drive-frequency and amplitude calibration of the pi/2 gate, and sweeps.

The objective is the coherent infidelity ``1 - F`` of the phase-fixed
computational block, with ``zeta`` re-extracted at every evaluation.
Calibration is a deterministic coarse grid followed by Nelder-Mead in
scaled variables (1 kHz in ``omega_d`` and 1e-4 in ``lambda`` per unit).
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq, minimize

from .coupled import build_from_params
from .drive import ghz_to_rad, make_pulse
from .evolve import collapse_from_t1, evolve_unitary
from .gateext import analyze_gate, coherent_fidelity, extract_gate, fix_phases_full
from .tomo import lindblad_tomography

__all__ = [
    "GatePoint",
    "CalibrationResult",
    "CalibrationWarning",
    "gate_pulse",
    "gate_infidelity",
    "calibrate",
    "refine",
    "valley_search",
    "SWEEP_AXES",
    "SweepRow",
    "sweep",
]

OBJECTIVE_DT = 0.02
_FREQ_SCALE_MHZ = 1e-3
_LAM_SCALE = 1e-4
SWEEP_AXES = ("omega_d", "lambda", "t_gate", "j_c", "t1_01", "t1_12")


class CalibrationWarning(UserWarning):
    """The refinement stopped before reaching its tolerance."""


def gate_pulse(sys, detuning_mhz, lam, t_gate, shape="gaussian_full", gamma_d=0.0):
    """Gate pulse at ``omega_bar + detuning`` with time-averaged amplitude ``lam``."""
    return make_pulse(sys, lam, shape=shape, t_gate=t_gate, gamma_d=gamma_d,
                      detuning_mhz=detuning_mhz)


def gate_infidelity(sys, pulse, dt=OBJECTIVE_DT):
    """``1 - F`` of the phase-fixed gate for ``pulse`` (fixed step ``dt``)."""
    u = extract_gate(evolve_unitary(sys, pulse, dt=dt), sys)
    fix = fix_phases_full(u)
    return 1.0 - coherent_fidelity(fix.u_fixed, fix.zeta)


@dataclass(frozen=True)
class GatePoint:
    """One objective evaluation."""

    detuning_mhz: float
    lam: float
    infidelity: float
    stage: str


@dataclass(frozen=True, eq=False)
class CalibrationResult:
    """Best ``(omega_d, lambda)`` found and the gate it produces.

    ``fidelity`` is the objective value (fixed step); ``report`` is computed
    at the adaptive tolerance for the same pulse.
    """

    omega_d_opt: float
    detuning_mhz: float
    lambda_opt: float
    fidelity: float
    zeta: float
    report: object
    pulse: object
    evaluations: int
    history: tuple
    converged: bool

    @property
    def infidelity(self):
        return 1.0 - self.fidelity

    def to_dict(self):
        d = {
            "omega_d_ghz": self.omega_d_opt,
            "detuning_mhz": self.detuning_mhz,
            "lambda": self.lambda_opt,
            "fidelity": self.fidelity,
            "infidelity": self.infidelity,
            "zeta": self.zeta,
            "zeta_over_pi": self.zeta / math.pi,
            "evaluations": self.evaluations,
            "converged": self.converged,
        }
        d["report"] = self.report.to_dict()
        return d


class _Objective:
    def __init__(self, sys, t_gate, shape, dt):
        self.sys, self.t_gate, self.shape, self.dt = sys, t_gate, shape, dt
        self.history = []
        self._cache = {}

    def __call__(self, detuning_mhz, lam, stage):
        key = (round(float(detuning_mhz), 12), round(float(lam), 12))
        if key in self._cache:
            return self._cache[key]
        if lam <= 0:
            val = 1.0
        else:
            pulse = gate_pulse(self.sys, detuning_mhz, lam, self.t_gate, self.shape)
            try:
                val = gate_infidelity(self.sys, pulse, self.dt)
            except ValueError:
                val = 1.0
        self._cache[key] = val
        self.history.append(GatePoint(float(detuning_mhz), float(lam), float(val), stage))
        return val


def _grid_stage(obj, detunings, lams):
    for lam in lams:
        for d in detunings:
            obj(d, lam, "grid")


def _simplex_stage(obj, start, budget, ftol):
    x0 = np.array([start[0] / _FREQ_SCALE_MHZ, start[1] / _LAM_SCALE])

    def f(x):
        return obj(x[0] * _FREQ_SCALE_MHZ, x[1] * _LAM_SCALE, "simplex")

    # initial simplex: 0.25 MHz and 0.01 in lambda
    simplex = np.array([x0, x0 + [250.0, 0.0], x0 + [0.0, 100.0]])
    res = minimize(f, x0, method="Nelder-Mead",
                   options={"xatol": 1.0, "fatol": ftol, "maxfev": budget,
                            "initial_simplex": simplex})
    return bool(res.success)


def _result(sys, obj, t_gate, shape, tol, converged):
    best = min(obj.history, key=lambda p: p.infidelity)
    pulse = gate_pulse(sys, best.detuning_mhz, best.lam, t_gate, shape)
    report = analyze_gate(evolve_unitary(sys, pulse, tol=tol), sys,
                          extra={"t_gate_ns": t_gate, "detuning_mhz": best.detuning_mhz,
                                 "lambda": best.lam})
    return CalibrationResult(
        omega_d_opt=pulse.omega_d / (2 * math.pi), detuning_mhz=best.detuning_mhz,
        lambda_opt=best.lam, fidelity=1.0 - best.infidelity, zeta=report.zeta,
        report=report, pulse=pulse, evaluations=len(obj.history),
        history=tuple(obj.history), converged=converged)


def calibrate(sys, t_gate, detuning_bounds=(-15.0, 15.0), lambda_bounds=(0.1, 0.9),
              detuning_step=0.5, lambda_step=0.02, budget=400, shape="gaussian_full",
              dt=OBJECTIVE_DT, tol=1e-7, ftol=1e-7):
    """Maximize the coherent fidelity over drive detuning and amplitude.

    Parameters
    ----------
    sys : CoupledSystem
    t_gate : float
        Gate duration (ns).
    detuning_bounds, lambda_bounds : tuple
        Grid ranges; detuning in MHz from ``omega_bar``.
    budget : int
        Maximum simplex evaluations.
    dt : float
        Fixed propagation step of the objective.
    tol : float
        Adaptive tolerance of the final report.

    Returns
    -------
    CalibrationResult
        The argmax of every evaluated point. ``converged`` is False (and a
        :class:`CalibrationWarning` is issued) if the simplex budget ran out.
    """
    obj = _Objective(sys, t_gate, shape, dt)
    detunings = np.arange(detuning_bounds[0], detuning_bounds[1] + 1e-9, detuning_step)
    lams = np.arange(lambda_bounds[0], lambda_bounds[1] + 1e-9, lambda_step)
    _grid_stage(obj, detunings, lams)
    best = min(obj.history, key=lambda p: p.infidelity)
    converged = _simplex_stage(obj, (best.detuning_mhz, best.lam), budget, ftol)
    if not converged:
        warnings.warn("simplex budget exhausted; returning best point so far",
                      CalibrationWarning, stacklevel=2)
    return _result(sys, obj, t_gate, shape, tol, converged)


def refine(sys, t_gate, start, budget=200, shape="gaussian_full", dt=OBJECTIVE_DT,
           tol=1e-7, ftol=1e-7):
    """Simplex-only calibration from ``start = (detuning_mhz, lambda)``."""
    obj = _Objective(sys, t_gate, shape, dt)
    obj(start[0], start[1], "start")
    converged = _simplex_stage(obj, start, budget, ftol)
    if not converged:
        warnings.warn("simplex budget exhausted; returning best point so far",
                      CalibrationWarning, stacklevel=2)
    return _result(sys, obj, t_gate, shape, tol, converged)


def _half_swap_lambda(sys, t_gate, detuning_mhz, lams, shape, dt):
    """Smallest amplitude on ``lams`` bracketing ``theta_eff = pi/2``, or None."""

    def excess(lam):
        pulse = gate_pulse(sys, detuning_mhz, lam, t_gate, shape)
        return analyze_gate(extract_gate(evolve_unitary(sys, pulse, dt=dt), sys)).theta_eff \
            - math.pi / 2

    prev = None
    for lam in lams:
        cur = excess(lam)
        if cur > 0:
            if prev is None:
                return None
            return brentq(excess, prev, lam, xtol=1e-4)
        prev = lam
    return None


def valley_search(sys, t_gate, detunings=None, lams=None, n_starts=3, budget=150,
                  shape="gaussian_full", dt=OBJECTIVE_DT, screen_dt=0.04, tol=1e-7,
                  ftol=1e-7):
    """Calibration along the half-swap valley.

    For each detuning the smallest amplitude giving ``theta_eff = pi/2`` is
    located on a coarse propagation step ``screen_dt``; the ``n_starts``
    candidates with the lowest screened infidelity seed simplex refinements
    of the fixed-step objective. Only objective evaluations enter the
    history, so the result is their argmax.
    """
    if detunings is None:
        detunings = np.arange(-22.0, 6.0 + 1e-9, 1.0)
    if lams is None:
        lams = np.arange(0.1, 0.9 + 1e-9, 0.05)
    screened = []
    for d in detunings:
        lam = _half_swap_lambda(sys, t_gate, d, lams, shape, screen_dt)
        if lam is None:
            continue
        pulse = gate_pulse(sys, d, lam, t_gate, shape)
        screened.append((gate_infidelity(sys, pulse, screen_dt), float(d), float(lam)))
    if not screened:
        raise ValueError("no half-swap amplitude found in the search window")
    screened.sort()
    obj = _Objective(sys, t_gate, shape, dt)
    converged = True
    for _, d, lam in screened[:n_starts]:
        obj(d, lam, "start")
        converged &= _simplex_stage(obj, (d, lam), budget, ftol)
    if not converged:
        warnings.warn("simplex budget exhausted; returning best point so far",
                      CalibrationWarning, stacklevel=2)
    return _result(sys, obj, t_gate, shape, tol, converged)


@dataclass(frozen=True)
class SweepRow:
    """One sweep point: parameter value and metrics (``error`` on failure)."""

    axis: str
    value: float
    metrics: dict = field(default_factory=dict)
    error: str | None = None


def _point(task):
    params, axis, value, fixed = task
    try:
        return SweepRow(axis, float(value), _evaluate(params, axis, value, fixed))
    except Exception as exc:  # recorded per point; the sweep goes on
        return SweepRow(axis, float(value), error=f"{type(exc).__name__}: {exc}")


def _evaluate(params, axis, value, fixed):
    f = dict(fixed)
    if axis == "j_c":
        params = replace(params, j_c=float(value))
    else:
        key = {"omega_d": "detuning_mhz", "lambda": "lam"}.get(axis, axis)
        f[key] = float(value)
    sys = build_from_params(params)
    pulse = gate_pulse(sys, f["detuning_mhz"], f["lam"], f["t_gate"], f.get("shape", "gaussian_full"))
    tol = f.get("tol", 1e-7)
    if axis in ("t1_01", "t1_12") or "t1_01" in f or "t1_12" in f:
        col = collapse_from_t1(sys, t1_01=f.get("t1_01", math.inf), t1_12=f.get("t1_12", math.inf))
        res = lindblad_tomography(sys, pulse, col, tol=tol)
        coherent = analyze_gate(extract_gate(evolve_unitary(sys, pulse, tol=tol), sys))
        return {"infidelity": 1.0 - res.fidelity, "coherent_infidelity": 1.0 - coherent.fidelity,
                "incoherent_infidelity": coherent.fidelity - res.fidelity, "zeta": res.zeta}
    rep = analyze_gate(evolve_unitary(sys, pulse, tol=tol), sys)
    return _report_metrics(rep)


def _report_metrics(rep):
    return {"infidelity": 1.0 - rep.fidelity, "e_comp": rep.e_comp, "p_leak": rep.p_leak,
            "e_theta": rep.e_theta, "one_minus_c00": 1.0 - rep.concurrence_00,
            "zeta": rep.zeta, "theta_eff": rep.theta_eff}


def sweep(params, axis, grid, fixed, recalibrate=False, workers=1, budget=200):
    """Evaluate the gate along one parameter axis.

    Parameters
    ----------
    params : CoupledParams
        Circuit and coupling parameters (``j_c`` is replaced on that axis).
    axis : str
        One of :data:`SWEEP_AXES`. ``omega_d`` values are detunings (MHz)
        from ``omega_bar``; lifetimes are in us.
    grid : sequence of float
    fixed : dict
        ``detuning_mhz``, ``lam`` and ``t_gate`` (plus optional ``shape``,
        ``tol``, ``t1_01``, ``t1_12``).
    recalibrate : {False, "continuation", "valley"}
        For ``t_gate`` and ``j_c``: re-optimize detuning and amplitude at
        each point, either by a simplex started from the previous optimum
        or by :func:`valley_search` (sequential).
    workers : int
        Process count for independent points.

    Returns
    -------
    list of SweepRow
        In grid order; failed points carry ``error`` instead of metrics.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {SWEEP_AXES}")
    grid = list(grid)
    if not grid:
        raise ValueError("grid must be nonempty")
    if recalibrate:
        if axis not in ("t_gate", "j_c"):
            raise ValueError("recalibration applies to t_gate and j_c sweeps")
        mode = "continuation" if recalibrate is True else recalibrate
        if mode not in ("continuation", "valley"):
            raise ValueError("recalibrate must be 'continuation' or 'valley'")
        return _continuation(params, axis, grid, fixed, budget, mode)
    tasks = [(params, axis, v, fixed) for v in grid]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_point, tasks))
    return [_point(t) for t in tasks]


def _continuation(params, axis, grid, fixed, budget, mode):
    rows = []
    start = (fixed["detuning_mhz"], fixed["lam"])
    shape = fixed.get("shape", "gaussian_full")
    for value in grid:
        try:
            p = replace(params, j_c=float(value)) if axis == "j_c" else params
            t_gate = float(value) if axis == "t_gate" else fixed["t_gate"]
            sys = build_from_params(p)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", CalibrationWarning)
                if mode == "valley":
                    cal = valley_search(sys, t_gate, budget=budget, shape=shape,
                                        tol=fixed.get("tol", 1e-7))
                else:
                    cal = refine(sys, t_gate, start, budget=budget, shape=shape,
                                 tol=fixed.get("tol", 1e-7))
            start = (cal.detuning_mhz, cal.lambda_opt)
            m = _report_metrics(cal.report)
            m.update(detuning_mhz=cal.detuning_mhz, lam=cal.lambda_opt,
                     objective_infidelity=cal.infidelity)
            rows.append(SweepRow(axis, float(value), m))
        except Exception as exc:
            rows.append(SweepRow(axis, float(value), error=f"{type(exc).__name__}: {exc}"))
    return rows


def omega_d_from_detuning(sys, detuning_mhz):
    """Drive angular frequency (rad/ns) at ``omega_bar + detuning``."""
    return ghz_to_rad(sys.omega_bar + 1e-3 * detuning_mhz)
