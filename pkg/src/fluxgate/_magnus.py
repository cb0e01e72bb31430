"""Sixth-order Magnus propagation for ``H(t) = diag(w) + c(t) D``.

Each step of length ``h`` is written as ``P exp(Omega) P`` with
``P = exp(-i diag(w) h/2)`` and ``Omega`` the sixth-order (three-node
Gauss-Legendre, commutator-reduced) Magnus generator in the interaction
picture centered on the step midpoint. In that frame the three node
Hamiltonians are ``c(t_i) M_i`` with fixed matrices ``M_i``, so ``Omega`` is
a polynomial in the three node amplitudes whose matrix coefficients depend
only on ``h``. They are computed once per step size, and a batch of steps
costs one matrix product plus the exponentials. Exponentials use a scaled
Paterson-Stockmeyer Taylor polynomial.
"""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

_G = math.sqrt(15.0) / 10.0
_SQ15_3 = math.sqrt(15.0) / 3.0
_CHUNK = 16
_TAYLOR = [1.0 / math.factorial(k) for k in range(13)]


class ConvergenceError(RuntimeError):
    """Step refinement did not reach the requested tolerance."""


def _dag(x):
    return np.conj(np.swapaxes(x, -1, -2))


def expm_ah(x):
    """Exponential of a batch of anti-Hermitian matrices.

    Taylor polynomial of degree 8 for 1-norms below 0.12, else degree 12
    after scaling the norm below 1/2 (repeated squaring afterwards).
    Truncation error stays below 1e-14 in both branches.
    """
    norm = float(np.max(np.sum(np.abs(x), axis=-2))) if x.size else 0.0
    eye = np.eye(x.shape[-1], dtype=complex)
    c = _TAYLOR
    if norm < 0.12:
        x2 = x @ x
        x3 = x2 @ x
        b0 = c[0] * eye + c[1] * x + c[2] * x2
        b1 = c[3] * eye + c[4] * x + c[5] * x2
        b2 = c[6] * eye + c[7] * x + c[8] * x2
        return b0 + x3 @ (b1 + x3 @ b2)
    squarings = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    if squarings:
        x = x / (2 ** squarings)
    x2 = x @ x
    x3 = x2 @ x
    x4 = x2 @ x2
    b0 = c[0] * eye + c[1] * x + c[2] * x2 + c[3] * x3
    b1 = c[4] * eye + c[5] * x + c[6] * x2 + c[7] * x3
    b2 = c[8] * eye + c[9] * x + c[10] * x2 + c[11] * x3
    u = b0 + x4 @ (b1 + x4 @ (b2 + c[12] * x4))
    for _ in range(squarings):
        u = u @ u
    return u


# polynomial matrices: dict mapping exponent tuples of (c_lo, c_mid, c_hi)
# to coefficient matrices

def _padd(*terms):
    out = defaultdict(lambda: 0)
    for scale, poly in terms:
        for mono, mat in poly.items():
            out[mono] = out[mono] + scale * mat
    return dict(out)


def _pcomm(p, q):
    out = defaultdict(lambda: 0)
    for m1, x in p.items():
        for m2, y in q.items():
            mono = tuple(a + b for a, b in zip(m1, m2))
            out[mono] = out[mono] + (x @ y - y @ x)
    return dict(out)


def magnus6_coefficients(w, drive, h):
    """Monomial exponents and matrix coefficients of the step generator.

    Returns ``(exponents, mats)`` with ``exponents`` of shape ``(K, 3)`` and
    ``mats`` of shape ``(K, dim, dim)``; the generator for node amplitudes
    ``c`` is ``sum_k prod(c ** exponents[k]) mats[k]``.
    """
    wdiff = w[:, None] - w[None, :]
    e = np.exp(1j * wdiff * _G * h)
    m_lo = {(1, 0, 0): -1j * h * drive * np.conj(e)}
    m_mid = {(0, 1, 0): -1j * h * drive}
    m_hi = {(0, 0, 1): -1j * h * drive * e}
    a1 = m_mid
    a2 = _padd((_SQ15_3, m_hi), (-_SQ15_3, m_lo))
    a3 = _padd((10 / 3, m_hi), (-20 / 3, m_mid), (10 / 3, m_lo))
    c1 = _pcomm(a1, a2)
    c2 = _padd((-1 / 60, _pcomm(a1, _padd((2.0, a3), (1.0, c1)))))
    left = _padd((-20.0, a1), (-1.0, a3), (1.0, c1))
    right = _padd((1.0, a2), (1.0, c2))
    omega = _padd((1.0, a1), (1 / 12, a3), (1 / 240, _pcomm(left, right)))
    monos = sorted(omega)
    mats = np.array([omega[m] for m in monos])
    mats = 0.5 * (mats - _dag(mats))
    return np.array(monos, dtype=int), mats


class MagnusEngine:
    """Propagator builder for ``H(t) = diag(w) + coef(t) * drive``.

    Parameters
    ----------
    w : array_like
        Static energies (rad/ns) of the basis states.
    drive : ndarray
        Hermitian drive operator in the same basis.
    """

    def __init__(self, w, drive):
        self.w = np.asarray(w, dtype=float)
        self.drive = np.asarray(drive, dtype=complex)
        self.dim = self.w.size
        self._cache = {}

    def _coefficients(self, h):
        key = round(h, 15)
        if key not in self._cache:
            if len(self._cache) > 64:
                self._cache.clear()
            expo, mats = magnus6_coefficients(self.w, self.drive, h)
            self._cache[key] = (expo, mats.reshape(len(mats), -1))
        return self._cache[key]

    def generators(self, coef, t0, h, n):
        """Midpoint-frame generators of ``n`` steps of size ``h`` from ``t0``."""
        tm = t0 + (np.arange(n) + 0.5) * h
        s = h * _G
        nodes = coef(np.stack([tm - s, tm, tm + s], axis=-1))
        expo, mats = self._coefficients(h)
        mono = np.prod(nodes[:, None, :] ** expo[None, :, :], axis=-1)
        return (mono.astype(complex) @ mats).reshape(n, self.dim, self.dim)

    def step_propagators(self, coef, t0, h, n):
        """Lab-frame propagators of ``n`` consecutive steps of size ``h``."""
        u = expm_ah(self.generators(coef, t0, h, n))
        p = np.exp(-0.5j * self.w * h)
        return u * (p[:, None] * p[None, :])[None]

    def propagator(self, coef, t0, t1, n_steps):
        """Lab-frame ``U(t1, t0)`` using ``n_steps`` equal steps."""
        n_steps = int(n_steps)
        h = (t1 - t0) / n_steps
        total = np.eye(self.dim, dtype=complex)
        for start in range(0, n_steps, _CHUNK):
            n = min(_CHUNK, n_steps - start)
            u = self.step_propagators(coef, t0 + start * h, h, n)
            for k in range(n):
                total = u[k] @ total
        return total

    def path(self, coef, times, h_max):
        """Lab-frame ``U(t_i, t_0)`` for every entry of increasing ``times``.

        Each interval is split into equal steps no longer than ``h_max``.
        """
        times = np.asarray(times, dtype=float)
        out = np.empty((times.size, self.dim, self.dim), dtype=complex)
        cur = np.eye(self.dim, dtype=complex)
        out[0] = cur
        for i in range(1, times.size):
            span = times[i] - times[i - 1]
            if span > 0:
                n = max(1, int(math.ceil(span / h_max - 1e-9)))
                cur = self.propagator(coef, times[i - 1], times[i], n) @ cur
            out[i] = cur
        return out

    def propagate(self, coef, t0, t1, tol=1e-7, h0=0.04, max_doublings=7):
        """Lab-frame ``U(t1, t0)`` refined by step doubling.

        The step count doubles until the largest change of any transition
        probability ``|U_jk|^2`` falls below ``tol``.

        Returns
        -------
        u : ndarray
            Propagator from the finest step.
        h : float
            Final step size (ns).
        change : float
            Last probability change between successive refinements.
        """
        span = t1 - t0
        n = max(1, int(math.ceil(span / h0)))
        prev = np.abs(self.propagator(coef, t0, t1, n)) ** 2
        change = math.inf
        for _ in range(max_doublings):
            n *= 2
            cur = self.propagator(coef, t0, t1, n)
            pop = np.abs(cur) ** 2
            change = float(np.max(np.abs(pop - prev)))
            prev = pop
            if change < tol:
                return cur, span / n, change
        worst = self.worst_step(coef, t0, t1, n)
        raise ConvergenceError(
            f"probabilities still change by {change:.3g} > {tol:.3g} with "
            f"step {span / n:.3g} ns; largest step generator near t = {worst:.3f} ns")

    def worst_step(self, coef, t0, t1, n):
        """Midpoint time of the step with the largest generator norm."""
        n = min(n, 4096)
        h = (t1 - t0) / n
        om = self.generators(coef, t0, h, n)
        k = int(np.argmax(np.sum(np.abs(om), axis=(-2, -1))))
        return t0 + (k + 0.5) * h
