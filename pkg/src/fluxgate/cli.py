"""Command-line entry point: ``fluxgate <experiment> --config FILE``.

Every output starts with a provenance header (code version, tolerance,
number format and the full configuration). Exit status is 0 on success,
2 for an invalid configuration and 3 for a numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import traceback
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from .circuit import TruncationError, diagonalize
from .config import EXPERIMENTS, ConfigError, RunConfig, parse_config, provenance_lines
from .coupled import build_from_params, static_zz_mhz
from .drive import make_pulse
from .evolve import ConvergenceError, population_trace
from .gatealg import entangling_power, local_invariants
from .perturb import NoOscillationError, estimate

__all__ = ["main", "run", "build_parser"]

FLOAT_FORMAT = ".10e"
_NUMERICAL = (ConvergenceError, TruncationError, NoOscillationError, np.linalg.LinAlgError,
              RuntimeError, FloatingPointError)


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return format(float(x), FLOAT_FORMAT)
    return str(x)


def _write_csv(path, config, header, rows, extra=()):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        for line in provenance_lines(config, FLOAT_FORMAT, extra):
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return path


def _write_json(path, config, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"provenance": provenance_lines(config, "repr"), **payload}
    path.write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")
    return path


def _write_table(config, header, rows, extra=()):
    if config.format == "json":
        return _write_json(config.output, config,
                           {"columns": header, "rows": [list(r) for r in rows],
                            "notes": list(extra)})
    return _write_csv(config.output, config, header, rows, extra)


def _system(config):
    return build_from_params(config.coupled_params, basis_size=config.basis_size,
                             n_keep=config.n_keep)


def _pulse(config, sys):
    kw = {}
    if config.omega_d_ghz is not None:
        kw["omega_d"] = 2 * math.pi * config.omega_d_ghz
    return make_pulse(sys, config.lambda_, shape=config.shape, t_gate=config.t_gate_ns,
                      gamma_d=config.gamma_d_rad, t_rise=config.t_rise_ns,
                      convention=config.convention, detuning_mhz=config.detuning_mhz, **kw)


def _fixed(config):
    return {"detuning_mhz": config.detuning_mhz, "lam": config.lambda_,
            "t_gate": config.t_gate_ns, "shape": config.shape, "tol": config.tol}


# -- experiments ---------------------------------------------------------

def _spectrum(config):
    rows = []
    for name in ("a", "b"):
        spec = diagonalize(config.circuit(name), basis_size=config.basis_size,
                           n_keep=config.n_keep)
        for k in range(spec.n_keep):
            for l in range(k + 1, spec.n_keep):
                rows.append((name.upper(), k, l, spec.freq(k, l), spec.n_abs(k, l),
                             abs(spec.phi_elems[k, l])))
    zz = static_zz_mhz(_system(config))
    return _write_table(config, ["qubit", "k", "l", "freq_ghz", "n_abs", "phi_abs"], rows,
                        extra=[f"static_zz_mhz: {zz!r}"])


def _rabi_sweep(config):
    from .rabi import locate_resonance, optimize_contrast, rabi_point

    if config.lambdas:
        points = [(lam, config.j_c_mhz) for lam in config.lambdas]
    elif config.j_c_values_mhz:
        points = [(config.lambda_, j) for j in config.j_c_values_mhz]
    else:
        raise ConfigError("lambdas", "give lambdas or j_c_values_mhz")
    rows = []
    for lam, j in points:
        sys = build_from_params(replace(config.coupled_params, j_c=j * 1e-3),
                                basis_size=config.basis_size, n_keep=config.n_keep)
        est = estimate(sys, lam)
        if config.optimize_contrast:
            pt = optimize_contrast(sys, lam)
        else:
            d, _ = locate_resonance(sys, lam)
            pt = rabi_point(sys, lam, d)
        rows.append((lam, j, est.omega_tilde_full, est.omega_tilde_all_levels,
                     pt.rabi_mhz, pt.detuning_mhz, pt.contrast))
    return _write_table(config, ["lambda", "j_c_mhz", "omega_tilde_pert_mhz",
                                 "omega_tilde_all_levels_mhz", "omega_tilde_numeric_mhz",
                                 "detuning_mhz", "contrast"], rows)


def _time_trace(config):
    sys = _system(config)
    if config.optimize_contrast:
        from .rabi import optimize_contrast

        best = optimize_contrast(sys, config.lambda_)
        config = config.replace(detuning_mhz=best.detuning_mhz, omega_d_ghz=None)
    pulse = _pulse(config, sys)
    times = np.arange(0.0, pulse.t_gate + 1e-9, config.sample_ns)
    trace = population_trace(sys, pulse, config.initial_label, times, tol=config.tol)
    labels = sorted(sys.labels)
    rows = [[t] + [float(trace.pop(lab)[i]) for lab in labels] for i, t in enumerate(times)]
    return _write_table(config, ["t_ns"] + [f"P{k}{l}" for k, l in labels], rows,
                        extra=[f"omega_d_ghz: {pulse.omega_d / (2 * math.pi)!r}"])


def _gate_optimize(config):
    from .optimize import calibrate, valley_search

    sys = _system(config)
    if config.search == "valley":
        res = valley_search(sys, config.t_gate_ns, budget=config.budget, shape=config.shape,
                            tol=config.tol)
    else:
        res = calibrate(sys, config.t_gate_ns, budget=config.budget, shape=config.shape,
                        tol=config.tol)
    return _write_json(config.output, config, {"calibration": res.to_dict()})


def _sweep_rows(config, axis, recalibrate=False):
    from .optimize import sweep

    if not config.sweep_values:
        raise ConfigError("sweep_values", "must list at least one value")
    mode = False if config.recalibrate == "none" else config.recalibrate
    fixed = _fixed(config)
    if axis not in ("t1_01", "t1_12"):
        for name in ("t1_01", "t1_12"):
            value = getattr(config, f"{name}_us")
            if math.isfinite(value):
                fixed[name] = value
    # j_c values are MHz in the file and GHz internally
    scale = 1e-3 if axis == "j_c" else 1.0
    rows = sweep(config.coupled_params, axis, [v * scale for v in config.sweep_values], fixed,
                 recalibrate=mode if recalibrate else False, budget=config.budget)
    return [replace(r, value=r.value / scale) for r in rows]


_AXIS_COLUMNS = {"omega_d": "detuning_mhz", "lambda": "lambda", "t_gate": "t_gate_ns",
                 "j_c": "j_c_mhz", "t1_01": "t1_01_us", "t1_12": "t1_12_us"}


def _error_budget(config):
    axis = config.sweep_axis
    rows = []
    for r in _sweep_rows(config, axis, recalibrate=axis in ("t_gate", "j_c")):
        m = r.metrics
        if r.error:
            rows.append((r.value, math.nan, math.nan, math.nan, math.nan, math.nan,
                         math.nan, r.error))
        else:
            rows.append((r.value, m["infidelity"], m["e_comp"], m["p_leak"], m["e_theta"],
                         m["one_minus_c00"], m["zeta"], ""))
    return _write_table(config, [_AXIS_COLUMNS[axis], "one_minus_f", "e_comp", "p_leak", "e_theta",
                                 "one_minus_c00", "zeta", "error"], rows)


def _lindblad_sweep(config):
    axis = config.sweep_axis
    if axis not in ("t1_01", "t1_12"):
        raise ConfigError("sweep_axis", "lindblad-sweep needs t1_01 or t1_12")
    rows = []
    for r in _sweep_rows(config, axis):
        m = r.metrics
        if r.error:
            rows.append((r.value, math.nan, math.nan, math.nan, r.error))
        else:
            rows.append((r.value, m["infidelity"], m["coherent_infidelity"],
                         m["incoherent_infidelity"], ""))
    return _write_table(config, [_AXIS_COLUMNS[axis], "one_minus_f", "coherent", "incoherent",
                                 "error"], rows)


def _sweep(config):
    results = _sweep_rows(config, config.sweep_axis,
                          recalibrate=config.sweep_axis in ("t_gate", "j_c"))
    keys = []
    for r in results:
        keys.extend(k for k in r.metrics if k not in keys)
    rows = [[r.value] + [r.metrics.get(k, math.nan) for k in keys] + [r.error or ""]
            for r in results]
    return _write_table(config, [_AXIS_COLUMNS[config.sweep_axis]] + keys + ["error"], rows)


def load_matrix(path):
    """4x4 complex matrix from ``.npy`` or whitespace text (entries like ``0.5-1j``)."""
    path = Path(path)
    if path.suffix == ".npy":
        m = np.load(path)
    else:
        m = np.loadtxt(path, dtype=complex, comments="#")
    m = np.asarray(m, dtype=complex)
    if m.shape != (4, 4):
        raise ConfigError("matrix_file", f"expected a 4x4 matrix, got shape {m.shape}")
    return m


def _invariants(config):
    if not config.matrix_file:
        raise ConfigError("matrix_file", "required for invariants")
    m = load_matrix(config.matrix_file)
    try:
        inv = local_invariants(m)
        power = entangling_power(m)
    except ValueError as exc:
        raise ConfigError("matrix_file", str(exc)) from None
    return _write_json(config.output, config,
                       {"G1": [inv.g1_re, inv.g1_im], "G2": inv.g2, "P": power})


_RUNNERS = {
    "spectrum": _spectrum,
    "rabi-sweep": _rabi_sweep,
    "time-trace": _time_trace,
    "gate-optimize": _gate_optimize,
    "error-budget": _error_budget,
    "lindblad-sweep": _lindblad_sweep,
    "invariants": _invariants,
    "sweep": _sweep,
}


def run(config: RunConfig):
    """Run one experiment; returns the output path."""
    return _RUNNERS[config.experiment](config)


def build_parser():
    p = argparse.ArgumentParser(prog="fluxgate", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="flat key = value run file")
        s.add_argument("--output", help="output path (overrides the config)")
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        if name == "gate-optimize":
            s.add_argument("--t-gate-ns", type=float, help="gate duration (overrides t_gate_ns)")
            s.add_argument("--jc-mhz", type=float, help="coupling in MHz (overrides j_c_mhz)")
        if name == "invariants":
            s.add_argument("matrix", nargs="?", help="4x4 matrix file")
    return p


def _origin(exc):
    tb = traceback.extract_tb(exc.__traceback__)
    for frame in reversed(tb):
        if "fluxgate" in frame.filename:
            return Path(frame.filename).stem
    return "fluxgate"


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {"experiment": args.experiment}
    try:
        for item in args.set:
            if "=" not in item:
                raise ConfigError(item, "expected KEY=VALUE")
            k, v = item.split("=", 1)
            overrides[k.strip()] = v.strip()
        if args.output:
            overrides["output"] = args.output
        if getattr(args, "t_gate_ns", None) is not None:
            overrides["t_gate_ns"] = args.t_gate_ns
        if getattr(args, "jc_mhz", None) is not None:
            overrides["j_c_mhz"] = args.jc_mhz
        if getattr(args, "matrix", None):
            overrides["matrix_file"] = args.matrix
        text = Path(args.config).read_text() if args.config else ""
        config = parse_config(text, **overrides)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            path = run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (*_NUMERICAL, ValueError) as exc:
        print(f"numerical failure in {_origin(exc)}: {exc}", file=sys.stderr)
        return 3
    print(path)
    return 0
