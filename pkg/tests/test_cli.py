import csv
import json
import math
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluxgate.cli import main
from fluxgate.config import (
    ConfigError,
    RunConfig,
    load_config,
    parse_config,
    read_config_echo,
)

from conftest import CONFIGS

REPO = CONFIGS.parent


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


def test_every_shipped_config_parses():
    files = sorted(CONFIGS.glob("*.cfg"))
    assert len(files) >= 10
    for f in files:
        cfg = load_config(f)
        assert parse_config(cfg.to_text()) == cfg


@settings(max_examples=30, deadline=None)
@given(lam=st.floats(0.0, 2.0), j=st.floats(-500, 500), t=st.floats(30.0, 1e3),
       values=st.lists(st.floats(1.0, 1e4), max_size=4), fmt=st.sampled_from(["csv", "json"]))
def test_text_round_trip(lam, j, t, values, fmt):
    cfg = RunConfig(lambda_=lam, j_c_mhz=j, t_gate_ns=t, sweep_values=tuple(values), format=fmt,
                    t1_01_us=math.inf, t_phi_12_us=3.0)
    assert parse_config(cfg.to_text()) == cfg


@pytest.mark.parametrize("text, field", [
    ("foo = 1", "foo"),
    ("lambda = -0.2", "lambda"),
    ("lambda = abc", "lambda"),
    ("shape = square", "shape"),
    ("experiment = plot", "experiment"),
    ("t1_01_us = 0", "t1_01_us"),
    ("a_e_c_ghz = -1", "a_*"),
    ("initial = 07", "initial"),
])
def test_field_level_errors(text, field):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.field == field


def test_spectrum_run(tmp_path):
    out = tmp_path / "spec.csv"
    assert main(["spectrum", "--config", str(CONFIGS / "table1_spectrum.cfg"),
                 "--output", str(out)]) == 0
    table = rows(out)
    a01 = next(r for r in table if (r["qubit"], r["k"], r["l"]) == ("A", "0", "1"))
    assert float(a01["freq_ghz"]) == pytest.approx(1.152, abs=1e-3)
    text = out.read_text()
    assert text.startswith("# fluxgate ")
    assert "# float_format: .10e" in text
    echoed = read_config_echo(out)
    assert echoed == load_config(CONFIGS / "table1_spectrum.cfg", output=str(out))


def test_spectrum_json(tmp_path):
    out = tmp_path / "spec.json"
    assert main(["spectrum", "--output", str(out), "--set", "format=json"]) == 0
    doc = json.loads(out.read_text())
    assert doc["columns"][:3] == ["qubit", "k", "l"]
    assert read_config_echo(doc).format == "json"


def test_invariants_run(tmp_path, monkeypatch):
    monkeypatch.chdir(REPO)
    out = tmp_path / "inv.json"
    assert main(["invariants", "--config", "configs/bswap_invariants.cfg",
                 "--output", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["G1"] == pytest.approx([0.0, 0.0], abs=1e-12)
    assert doc["G2"] == pytest.approx(-1.0)
    assert doc["P"] == pytest.approx(2 / 9)


def test_time_trace_run(tmp_path):
    out = tmp_path / "trace.csv"
    assert main(["time-trace", "--output", str(out), "--set", "t_gate_ns=40",
                 "--set", "sample_ns=10"]) == 0
    table = rows(out)
    assert [float(r["t_ns"]) for r in table] == [0.0, 10.0, 20.0, 30.0, 40.0]
    total = sum(float(v) for k, v in table[-1].items() if k.startswith("P"))
    assert total == pytest.approx(1.0, abs=1e-9)


def test_error_budget_run(tmp_path):
    out = tmp_path / "budget.csv"
    args = ["error-budget", "--output", str(out), "--set", "shape=gaussian_full",
            "--set", "t_gate_ns=50", "--set", "detuning_mhz=-12.95", "--set", "lambda=0.635",
            "--set", "sweep_axis=lambda", "--set", "sweep_values=0.635, -1"]
    assert main(args) == 0
    table = rows(out)
    assert list(table[0]) == ["lambda", "one_minus_f", "e_comp", "p_leak", "e_theta",
                              "one_minus_c00", "zeta", "error"]
    assert float(table[0]["one_minus_f"]) < 2e-3
    assert table[1]["error"] and table[1]["one_minus_f"] == "nan"


def test_gate_optimize_flags(tmp_path, monkeypatch):
    import fluxgate.optimize as opt

    seen = {}

    def fake_valley(sys, t_gate, **kw):
        seen["t_gate"], seen["j_c"] = t_gate, sys.params.j_c
        raise RuntimeError("stop here")

    monkeypatch.setattr(opt, "valley_search", fake_valley)
    code = main(["gate-optimize", "--t-gate-ns", "70", "--jc-mhz", "150",
                 "--config", str(CONFIGS / "fig3_gate_optimize.cfg"),
                 "--output", str(tmp_path / "x.json")])
    assert code == 3
    assert seen == {"t_gate": 70.0, "j_c": pytest.approx(0.15)}


def test_exit_codes(tmp_path, capsys):
    assert main(["spectrum", "--set", "lambda=-1"]) == 2
    assert "lambda" in capsys.readouterr().err
    assert main(["spectrum", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert main(["spectrum", "--set", "novalue"]) == 2
    code = main(["spectrum", "--output", str(tmp_path / "s.csv"), "--set", "basis_size=20"])
    assert code == 3
    assert "numerical failure in circuit" in capsys.readouterr().err
    assert main(["invariants", "--output", str(tmp_path / "i.json")]) == 2


def test_non_unitary_matrix_rejected(tmp_path):
    m = tmp_path / "m.txt"
    m.write_text("2 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n")
    assert main(["invariants", str(m), "--output", str(tmp_path / "i.json")]) == 2
    assert not Path(tmp_path / "i.json").exists()


def test_rabi_sweep_run(tmp_path):
    out = tmp_path / "rabi.csv"
    assert main(["rabi-sweep", "--output", str(out), "--set", "j_c_mhz=100",
                 "--set", "lambdas=0.05"]) == 0
    (row,) = rows(out)
    ratio = float(row["omega_tilde_numeric_mhz"]) / float(row["omega_tilde_pert_mhz"])
    assert ratio == pytest.approx(1.0, abs=0.03)


def test_lindblad_sweep_run(tmp_path):
    out = tmp_path / "lind.csv"
    args = ["lindblad-sweep", "--output", str(out), "--set", "shape=gaussian_full",
            "--set", "t_gate_ns=50", "--set", "detuning_mhz=-12.95", "--set", "lambda=0.635",
            "--set", "sweep_axis=t1_01", "--set", "sweep_values=100"]
    assert main(args) == 0
    (row,) = rows(out)
    assert float(row["incoherent"]) > 0
    assert float(row["one_minus_f"]) == pytest.approx(
        float(row["coherent"]) + float(row["incoherent"]), rel=1e-9)


def test_generic_sweep_run(tmp_path):
    out = tmp_path / "sweep.csv"
    args = ["sweep", "--output", str(out), "--set", "shape=gaussian_full",
            "--set", "t_gate_ns=50", "--set", "detuning_mhz=-12.95", "--set", "lambda=0.635",
            "--set", "sweep_axis=omega_d", "--set", "sweep_values=-13, -12.9"]
    assert main(args) == 0
    table = rows(out)
    assert [float(r["detuning_mhz"]) for r in table] == [-13.0, -12.9]
    assert {"infidelity", "p_leak", "theta_eff", "error"} <= set(table[0])
