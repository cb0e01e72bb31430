"""Simulation of two-photon entangling gates on capacitively coupled fluxonium qubits.

Submodules: ``circuit`` (single-circuit spectra), ``coupled`` (dressed
two-qubit system), ``drive`` (pulses), ``evolve`` (unitary and Lindblad
propagation), ``perturb`` (closed-form estimates), ``rabi`` (constant-drive
oscillations), ``gatealg`` (gate-family algebra), ``gateext`` (gate
extraction and error budget), ``tomo`` (process matrices), ``optimize``
(calibration and sweeps), ``config`` and ``cli``.
"""

__version__ = "0.1.0"

from .circuit import CircuitParams, diagonalize  # noqa: E402
from .coupled import CoupledParams, build_from_params  # noqa: E402
from .drive import PulseSpec, make_pulse  # noqa: E402
from .evolve import collapse_from_t1, evolve_lindblad, evolve_unitary  # noqa: E402
from .gatealg import build_family, entangling_power, local_invariants  # noqa: E402
from .gateext import analyze_gate  # noqa: E402

__all__ = [
    "__version__",
    "CircuitParams",
    "diagonalize",
    "CoupledParams",
    "build_from_params",
    "PulseSpec",
    "make_pulse",
    "evolve_unitary",
    "evolve_lindblad",
    "collapse_from_t1",
    "build_family",
    "local_invariants",
    "entangling_power",
    "analyze_gate",
]
