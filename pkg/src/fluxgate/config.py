"""Flat ``key = value`` run configuration.

One file describes one experiment: both circuits, the coupling, the pulse,
optional lifetimes and experiment-specific options. Blank values and
``#``/``;`` comments are allowed; unknown keys are rejected. Output files
echo the parsed configuration between ``# [config]`` and ``# [end config]``
so that every result can be re-run from its own header.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path

from . import __version__
from .circuit import CircuitParams
from .coupled import CoupledParams
from .drive import CONVENTIONS, SHAPES

__all__ = [
    "EXPERIMENTS",
    "ConfigError",
    "RunConfig",
    "parse_config",
    "load_config",
    "read_config_echo",
    "provenance_lines",
]

EXPERIMENTS = ("spectrum", "rabi-sweep", "time-trace", "gate-optimize", "error-budget",
               "lindblad-sweep", "invariants", "sweep")
FORMATS = ("csv", "json")
_ECHO_START = "[config]"
_ECHO_END = "[end config]"


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


def _floats(text):
    return tuple(float(x) for x in str(text).replace(",", " ").split())


@dataclass(frozen=True)
class RunConfig:
    """All settings of one run; see the module docstring for the file format.

    Frequencies in GHz or MHz and times in ns or us, as the key suffix says.
    ``detuning_mhz`` positions the drive relative to half the 00-11
    transition; ``omega_d_ghz``, when set, overrides it.
    """

    experiment: str = "spectrum"
    output: str = "out.csv"
    format: str = "csv"
    # circuits
    a_e_c_ghz: float = 1.0
    a_e_l_ghz: float = 1.5
    a_e_j_ghz: float = 3.8
    a_phi_ext_over_pi: float = 1.0
    b_e_c_ghz: float = 1.0
    b_e_l_ghz: float = 0.9
    b_e_j_ghz: float = 3.0
    b_phi_ext_over_pi: float = 1.0
    j_c_mhz: float = 200.0
    eta_a: float = 1.0
    eta_b: float = 1.0
    basis_size: int = 120
    n_keep: int = 5
    # pulse
    shape: str = "flat_with_rise"
    lambda_: float = 0.5
    detuning_mhz: float = 0.0
    omega_d_ghz: float | None = None
    gamma_d_rad: float = 0.0
    t_gate_ns: float = 500.0
    t_rise_ns: float = 25.0
    convention: str | None = None
    # lifetimes (us); inf disables the channel
    t1_01_us: float = math.inf
    t1_12_us: float = math.inf
    t_phi_01_us: float | None = None
    t_phi_12_us: float | None = None
    collapse_basis: str = "dressed"
    # numerics
    tol: float = 1e-7
    # experiment options
    initial: str = "00"
    sample_ns: float = 1.0
    optimize_contrast: bool = False
    lambdas: tuple = ()
    j_c_values_mhz: tuple = ()
    sweep_axis: str = "t_gate"
    sweep_values: tuple = ()
    recalibrate: str = "none"
    search: str = "grid"
    budget: int = 300
    matrix_file: str = ""

    # file key for ``lambda_`` (a Python keyword)
    _ALIASES = {"lambda": "lambda_"}

    def __post_init__(self):
        self.validate()

    # -- validation ---------------------------------------------------
    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError("experiment", f"must be one of {EXPERIMENTS}")
        if self.format not in FORMATS:
            raise ConfigError("format", f"must be one of {FORMATS}")
        for prefix in ("a", "b"):
            try:
                self.circuit(prefix)
            except ValueError as exc:
                raise ConfigError(f"{prefix}_*", str(exc)) from None
        if not math.isfinite(self.j_c_mhz):
            raise ConfigError("j_c_mhz", "must be finite")
        if self.n_keep < 2:
            raise ConfigError("n_keep", "must be at least 2")
        if self.basis_size < 4 * self.n_keep:
            raise ConfigError("basis_size", "must be at least 4 * n_keep")
        if self.shape not in SHAPES:
            raise ConfigError("shape", f"must be one of {SHAPES}")
        if self.convention is not None and self.convention not in CONVENTIONS:
            raise ConfigError("convention", f"must be one of {CONVENTIONS}")
        if not self.lambda_ >= 0:
            raise ConfigError("lambda", "must be nonnegative")
        if not self.t_gate_ns > 0:
            raise ConfigError("t_gate_ns", "must be positive")
        if self.shape == "flat_with_rise" and not 0 < self.t_rise_ns <= self.t_gate_ns:
            raise ConfigError("t_rise_ns", "need 0 < t_rise_ns <= t_gate_ns")
        if self.omega_d_ghz is not None and not self.omega_d_ghz > 0:
            raise ConfigError("omega_d_ghz", "must be positive")
        for name in ("t1_01_us", "t1_12_us", "t_phi_01_us", "t_phi_12_us"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ConfigError(name, "lifetimes must be positive (inf disables)")
        if self.collapse_basis not in ("dressed", "bare"):
            raise ConfigError("collapse_basis", "must be 'dressed' or 'bare'")
        if not 0 < self.tol < 1:
            raise ConfigError("tol", "must be in (0, 1)")
        if len(self.initial) != 2 or not self.initial.isdigit() \
                or max(int(c) for c in self.initial) >= self.n_keep:
            raise ConfigError("initial", "must be two level digits such as 00")
        if not self.sample_ns > 0:
            raise ConfigError("sample_ns", "must be positive")
        if self.recalibrate not in ("none", "continuation", "valley"):
            raise ConfigError("recalibrate", "must be none, continuation or valley")
        if self.search not in ("grid", "valley"):
            raise ConfigError("search", "must be grid or valley")
        if self.budget < 1:
            raise ConfigError("budget", "must be positive")
        from .optimize import SWEEP_AXES
        if self.sweep_axis not in SWEEP_AXES:
            raise ConfigError("sweep_axis", f"must be one of {SWEEP_AXES}")

    # -- derived objects ---------------------------------------------
    def circuit(self, prefix):
        g = lambda k: getattr(self, f"{prefix}_{k}")  # noqa: E731
        return CircuitParams(E_C=g("e_c_ghz"), E_L=g("e_l_ghz"), E_J=g("e_j_ghz"),
                             phi_ext=math.pi * g("phi_ext_over_pi"))

    @property
    def coupled_params(self):
        return CoupledParams(self.circuit("a"), self.circuit("b"), self.j_c_mhz * 1e-3,
                             eta_a=self.eta_a, eta_b=self.eta_b)

    @property
    def initial_label(self):
        return (int(self.initial[0]), int(self.initial[1]))

    @property
    def lifetimes(self):
        """Keyword arguments for :func:`fluxgate.evolve.collapse_set`."""
        phi01 = 2 * self.t1_01_us if self.t_phi_01_us is None else self.t_phi_01_us
        phi12 = 2 * self.t1_12_us if self.t_phi_12_us is None else self.t_phi_12_us
        return {"t1_01": self.t1_01_us, "t_phi_01": phi01, "t1_12": self.t1_12_us,
                "t_phi_12": phi12, "basis": self.collapse_basis}

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    # -- text form -----------------------------------------------------
    def to_text(self):
        """Flat ``key = value`` text that :func:`parse_config` maps back to ``self``."""
        inverse = {v: k for k, v in self._ALIASES.items()}
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            lines.append(f"{inverse.get(f.name, f.name)} = {_format(value)}")
        return "\n".join(lines) + "\n"


def _format(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(x)) for x in value)
    return str(value)


_BOOLS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _convert(name, typ, raw):
    raw = raw.strip()
    try:
        if typ in ("float | None", "str | None"):
            if raw == "":
                return None
            return float(raw) if typ.startswith("float") else raw
        if typ == "float":
            return float(raw)
        if typ == "int":
            return int(raw)
        if typ == "bool":
            return _BOOLS[raw.lower()]
        if typ == "tuple":
            return _floats(raw)
        return raw
    except (KeyError, ValueError):
        raise ConfigError(name, f"cannot parse {raw!r} as {typ}") from None


def parse_config(text, **overrides):
    """Parse config text; keyword ``overrides`` replace parsed values."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                       interpolation=None)
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc).splitlines()[0]) from None
    types = {f.name: f.type for f in fields(RunConfig)}
    values = {}
    for key, raw in parser["run"].items():
        name = RunConfig._ALIASES.get(key, key)
        if name not in types:
            raise ConfigError(key, "unknown key")
        values[name] = _convert(key, types[name], raw)
    for key, value in overrides.items():
        name = RunConfig._ALIASES.get(key, key)
        if name not in types:
            raise ConfigError(key, "unknown key")
        values[name] = _convert(key, types[name], value) if isinstance(value, str) else value
    return RunConfig(**values)


def load_config(path, **overrides):
    return parse_config(Path(path).read_text(), **overrides)


def provenance_lines(config, float_format, extra=()):
    """Header lines: code version, tolerances, number format and config echo."""
    lines = [f"fluxgate {__version__}", f"experiment: {config.experiment}",
             f"tolerance: {config.tol!r}", f"float_format: {float_format}"]
    lines.extend(extra)
    lines.append(_ECHO_START)
    lines.extend(config.to_text().splitlines())
    lines.append(_ECHO_END)
    return lines


def read_config_echo(source):
    """Recover the :class:`RunConfig` echoed in an output file or JSON dict."""
    if isinstance(source, dict):
        lines = source["provenance"]
    else:
        text = Path(source).read_text()
        if text.lstrip().startswith("{"):
            import json
            lines = json.loads(text)["provenance"]
        else:
            lines = [ln[2:] if ln.startswith("# ") else ln[1:]
                     for ln in text.splitlines() if ln.startswith("#")]
    start, end = lines.index(_ECHO_START), lines.index(_ECHO_END)
    return parse_config("\n".join(lines[start + 1:end]))
