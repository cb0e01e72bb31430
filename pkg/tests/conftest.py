import functools
import math
from pathlib import Path

import numpy as np
import pytest

from fluxgate.circuit import CircuitParams
from fluxgate.coupled import CoupledParams, build_from_params

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

QUBIT_A = CircuitParams(E_C=1.0, E_L=1.5, E_J=3.8, phi_ext=math.pi)
QUBIT_B = CircuitParams(E_C=1.0, E_L=0.9, E_J=3.0, phi_ext=math.pi)


@functools.lru_cache(maxsize=None)
def coupled_system(j_c_ghz, n_keep=5):
    return build_from_params(CoupledParams(QUBIT_A, QUBIT_B, j_c_ghz), n_keep=n_keep)


@pytest.fixture(scope="session")
def sys200():
    return coupled_system(0.2)


@pytest.fixture(scope="session")
def sys300():
    return coupled_system(0.3)


def random_unitary(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def local_unitary(rng):
    return np.kron(random_unitary(rng, 2), random_unitary(rng, 2))


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        entries = results[n]
        status = "PASS" if all(ok for ok, _ in entries) else "FAIL"
        terminalreporter.write_line(f"criterion {n:>2}: {status}")
        for ok, detail in entries:
            terminalreporter.write_line(f"    {'ok ' if ok else 'bad'} {detail}")
