"""Two capacitively coupled fluxoniums: dressed eigensystem and labels."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .circuit import CircuitParams, FluxoniumSpectrum, diagonalize

__all__ = [
    "CoupledParams",
    "CoupledSystem",
    "LabelWarning",
    "build_coupled",
    "build_from_params",
    "transition_frequency",
    "static_zz_mhz",
    "write_dressed_csv",
    "COMPUTATIONAL_LABELS",
]

COMPUTATIONAL_LABELS = ((0, 0), (0, 1), (1, 0), (1, 1))
AMBIGUOUS_OVERLAP = 0.5


class LabelWarning(UserWarning):
    """A dressed state has no bare ancestor with overlap above 1/2."""


@dataclass(frozen=True)
class CoupledParams:
    """Pair of circuits, their charge coupling ``j_c`` (GHz) and drive weights."""

    qubit_a: CircuitParams
    qubit_b: CircuitParams
    j_c: float
    eta_a: float = 1.0
    eta_b: float = 1.0

    def __post_init__(self):
        for name in ("j_c", "eta_a", "eta_b"):
            value = getattr(self, name)
            if isinstance(value, complex) or not np.isfinite(value):
                raise ValueError(f"{name} must be a finite real number")
            object.__setattr__(self, name, float(value))


@dataclass(frozen=True, eq=False)
class CoupledSystem:
    """Dressed two-circuit eigensystem.

    Attributes
    ----------
    energies : ndarray
        Dressed energies in GHz, ascending.
    labels : tuple of (int, int)
        ``labels[i]`` is the bare ancestor ``(k, l)`` of dressed state ``i``.
    eigenvectors : ndarray
        Columns are dressed states in the bare product basis ``|k> x |l>``
        (index ``k * n_keep + l``).
    drive_op : ndarray
        ``eta_a n_a + eta_b n_b`` in the dressed basis.
    overlaps : ndarray
        Squared overlap of each dressed state with its bare ancestor.
    """

    params: CoupledParams
    spec_a: FluxoniumSpectrum
    spec_b: FluxoniumSpectrum
    energies: np.ndarray
    labels: tuple
    eigenvectors: np.ndarray
    drive_op: np.ndarray
    overlaps: np.ndarray
    _index: dict = field(repr=False, default_factory=dict)

    @property
    def n_keep(self):
        return self.spec_a.n_keep

    @property
    def dim(self):
        return self.n_keep ** 2

    def index(self, label):
        """Position of the dressed state with bare ancestor ``label``."""
        try:
            return self._index[tuple(label)]
        except KeyError:
            raise KeyError(f"unknown label {label!r}") from None

    @property
    def comp_indices(self):
        """Dressed indices of 00, 01, 10, 11 in that order."""
        return np.array([self.index(lab) for lab in COMPUTATIONAL_LABELS])

    def energy(self, label):
        return float(self.energies[self.index(label)])

    def to_dressed(self, op_bare):
        """Express a product-basis operator in the dressed basis."""
        v = self.eigenvectors
        return v.conj().T @ op_bare @ v

    def bare_operators(self):
        """Charge operators ``(n_a, n_b)`` on the product space, bare basis."""
        eye = np.eye(self.n_keep)
        return (np.kron(self.spec_a.n_elems, eye),
                np.kron(eye, self.spec_b.n_elems))

    def coupling_op(self):
        """``J_C n_a n_b`` in the dressed basis (GHz)."""
        n_a, n_b = self.bare_operators()
        return self.to_dressed(self.params.j_c * (n_a @ n_b))

    def matrix_element(self, label1, label2):
        """Drive matrix element ``<label1| eta_a n_a + eta_b n_b |label2>``."""
        return complex(self.drive_op[self.index(label1), self.index(label2)])

    @property
    def omega_bar(self):
        """Two-photon resonance ``(E_11 - E_00)/2`` in GHz."""
        return 0.5 * transition_frequency(self, (0, 0), (1, 1))


def _assign_labels(vecs, n_keep):
    weights = np.abs(vecs) ** 2  # rows bare, columns dressed
    best = np.argmax(weights, axis=0)
    if len(set(best.tolist())) != len(best):
        rows, cols = linear_sum_assignment(-weights)
        best = np.empty(len(cols), dtype=int)
        best[cols] = rows
    if sorted(best.tolist()) != list(range(weights.shape[0])):
        raise RuntimeError("dressed-state labeling is not a bijection")
    overlaps = weights[best, np.arange(weights.shape[1])]
    for i in np.flatnonzero(overlaps < AMBIGUOUS_OVERLAP):
        order = np.argsort(weights[:, i])[::-1][:2]
        cands = [divmod(int(b), n_keep) for b in order]
        warnings.warn(
            f"dressed state {i} is ambiguous: candidates {cands[0]} "
            f"(overlap {weights[order[0], i]:.3f}) and {cands[1]} "
            f"(overlap {weights[order[1], i]:.3f})",
            LabelWarning, stacklevel=3)
    return best, overlaps


def build_coupled(params, spec_a, spec_b):
    """Diagonalize the coupled static Hamiltonian.

    ``H = H_a + H_b + J_C n_a n_b`` is built on the product of the two
    truncated eigenbases. Dressed states are labeled by their bare ancestor
    (maximum squared overlap; optimal assignment if the per-state maximum
    is not a bijection) and phased so that the overlap with the ancestor
    is real and positive.
    """
    if spec_a.n_keep != spec_b.n_keep:
        raise ValueError("spectra must share n_keep")
    n = spec_a.n_keep
    eye = np.eye(n)
    n_a = np.kron(spec_a.n_elems, eye)
    n_b = np.kron(eye, spec_b.n_elems)
    h = (np.diag(np.add.outer(spec_a.energies, spec_b.energies).ravel())
         + params.j_c * (n_a @ n_b))
    h = 0.5 * (h + h.conj().T)
    try:
        energies, vecs = scipy.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"coupled eigensolve failed: {exc}") from exc
    best, overlaps = _assign_labels(vecs, n)
    lead = vecs[best, np.arange(n * n)]
    vecs = vecs * (np.conj(lead) / np.abs(lead))
    labels = tuple(divmod(int(b), n) for b in best)
    drive = vecs.conj().T @ (params.eta_a * n_a + params.eta_b * n_b) @ vecs
    drive = 0.5 * (drive + drive.conj().T)
    return CoupledSystem(
        params=params, spec_a=spec_a, spec_b=spec_b, energies=energies,
        labels=labels, eigenvectors=vecs, drive_op=drive, overlaps=overlaps,
        _index={lab: i for i, lab in enumerate(labels)},
    )


def build_from_params(params, basis_size=None, n_keep=5, check=True):
    """Diagonalize both circuits and couple them."""
    kw = {"n_keep": n_keep, "check": check}
    if basis_size is not None:
        kw["basis_size"] = basis_size
    spec_a = diagonalize(params.qubit_a, **kw)
    spec_b = diagonalize(params.qubit_b, **kw)
    return build_coupled(params, spec_a, spec_b)


def transition_frequency(sys, from_label, to_label):
    """``(E_to - E_from)/h`` in GHz."""
    return sys.energy(to_label) - sys.energy(from_label)


def static_zz_mhz(sys):
    """Static ZZ rate ``(E_01 + E_10 - E_00 - E_11)/h`` in MHz."""
    e = [sys.energy(lab) for lab in COMPUTATIONAL_LABELS]
    return 1e3 * (e[1] + e[2] - e[0] - e[3])


def write_dressed_csv(sys, path, header_lines=()):
    """CSV with columns label_k, label_l, energy_ghz, ancestor_overlap."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["label_k", "label_l", "energy_ghz", "ancestor_overlap"])
        for i in np.argsort([k * sys.n_keep + l for k, l in sys.labels]):
            k, l = sys.labels[i]
            writer.writerow([k, l, f"{sys.energies[i]:.9f}",
                             f"{sys.overlaps[i]:.9f}"])
    return path
