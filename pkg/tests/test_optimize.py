import math

import numpy as np
import pytest

from fluxgate.coupled import CoupledParams
from fluxgate.gateext import analyze_gate
from fluxgate.evolve import evolve_unitary
from fluxgate.optimize import (
    CalibrationWarning,
    calibrate,
    gate_infidelity,
    gate_pulse,
    refine,
    sweep,
)

from conftest import QUBIT_A, QUBIT_B

SMALL_GRID = dict(detuning_bounds=(-13.5, -12.5), lambda_bounds=(0.62, 0.66),
                  detuning_step=0.5, lambda_step=0.02)


@pytest.fixture(scope="module")
def small_run(sys200):
    with pytest.warns(CalibrationWarning):
        return calibrate(sys200, 50.0, budget=12, **SMALL_GRID)


def test_result_is_argmax_of_history(small_run):
    best = min(p.infidelity for p in small_run.history)
    assert small_run.infidelity == best
    point = next(p for p in small_run.history if p.infidelity == best)
    assert (small_run.detuning_mhz, small_run.lambda_opt) == (point.detuning_mhz, point.lam)
    assert small_run.evaluations == len(small_run.history)
    assert {p.stage for p in small_run.history} == {"grid", "simplex"}


def test_result_consistent_with_direct_evaluation(small_run, sys200):
    pulse = gate_pulse(sys200, small_run.detuning_mhz, small_run.lambda_opt, 50.0)
    assert gate_infidelity(sys200, pulse) == small_run.infidelity
    assert small_run.omega_d_opt == pytest.approx(sys200.omega_bar
                                                  + 1e-3 * small_run.detuning_mhz)
    rep = analyze_gate(evolve_unitary(sys200, pulse, tol=1e-7), sys200)
    assert rep.fidelity == pytest.approx(small_run.report.fidelity, abs=1e-12)
    d = small_run.to_dict()
    assert d["report"]["zeta"] == small_run.zeta


def test_budget_exhaustion_is_reported(small_run):
    assert not small_run.converged


def test_deterministic(sys200, small_run):
    with pytest.warns(CalibrationWarning):
        again = calibrate(sys200, 50.0, budget=12, **SMALL_GRID)
    assert [(p.detuning_mhz, p.lam, p.infidelity) for p in again.history] == \
        [(p.detuning_mhz, p.lam, p.infidelity) for p in small_run.history]


def test_refine_improves_on_start(sys200):
    start = (-13.0, 0.63)
    with pytest.warns(CalibrationWarning):
        res = refine(sys200, 50.0, start, budget=15)
    assert res.history[0].stage == "start"
    assert res.infidelity <= res.history[0].infidelity


def test_sweep_records_failures_per_point():
    params = CoupledParams(QUBIT_A, QUBIT_B, 0.2)
    fixed = {"detuning_mhz": -12.95, "lam": 0.635, "t_gate": 50.0}
    rows = sweep(params, "lambda", [0.635, -0.1, 0.64], fixed)
    assert [r.value for r in rows] == [0.635, -0.1, 0.64]
    assert rows[1].error and "lambda" in rows[1].error and not rows[1].metrics
    for r in (rows[0], rows[2]):
        assert r.error is None
        assert 0 < r.metrics["infidelity"] < 0.05
        assert math.isclose(r.metrics["theta_eff"], math.pi / 2, abs_tol=0.1)


def test_sweep_matches_pointwise_evaluation(sys200):
    params = CoupledParams(QUBIT_A, QUBIT_B, 0.2)
    fixed = {"detuning_mhz": -12.95, "lam": 0.635, "t_gate": 50.0}
    row = sweep(params, "omega_d", [-12.9], fixed)[0]
    pulse = gate_pulse(sys200, -12.9, 0.635, 50.0)
    rep = analyze_gate(evolve_unitary(sys200, pulse, tol=1e-7), sys200)
    assert row.metrics["infidelity"] == pytest.approx(1 - rep.fidelity, abs=1e-12)


def test_sweep_argument_checks():
    params = CoupledParams(QUBIT_A, QUBIT_B, 0.2)
    fixed = {"detuning_mhz": 0.0, "lam": 0.3, "t_gate": 50.0}
    with pytest.raises(ValueError):
        sweep(params, "bogus", [1.0], fixed)
    with pytest.raises(ValueError):
        sweep(params, "lambda", [], fixed)
    with pytest.raises(ValueError):
        sweep(params, "lambda", [0.3], fixed, recalibrate=True)
