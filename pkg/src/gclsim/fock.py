"""Truncated Fock-space operators for a single oscillator mode.

Conventions (hbar = m = 1 throughout the package):

    x = (a + a^dag) / sqrt(2 w0),     p = i sqrt(w0/2) (a^dag - a),

so [x, p] = i on the interior of the truncated space and the harmonic
Hamiltonian p^2/2 + w0^2 x^2/2 is exactly diagonal with spectrum w0 (n + 1/2).

Truncation rule: any operator polynomial of degree d is assembled at dimension
N + d and then cut back to the top-left N x N block. Multiplying *already
truncated* operators corrupts the rows and columns near the cutoff, whereas
the padded product agrees with the infinite-dimensional matrix elements on the
whole retained block.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionError

__all__ = [
    "ladder",
    "build_xp",
    "poly_of_x",
    "commutator",
    "anticommutator",
    "dag",
    "herm_defect",
    "fock_state",
    "coherent_state",
    "thermal_state",
]


def ladder(dim: int) -> np.ndarray:
    """Annihilation operator a with a|n> = sqrt(n)|n-1> at dimension ``dim``."""
    a = np.zeros((dim, dim), dtype=complex)
    n = np.arange(1, dim)
    a[n - 1, n] = np.sqrt(n)
    return a


def build_xp(N: int, omega0: float, pad: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Position and momentum operators at truncation ``N``.

    Built at dimension N + pad and truncated, per the padding rule (a no-op
    for the degree-1 ladder combinations themselves, but kept uniform).
    """
    if N < 2:
        raise DimensionError(f"Fock truncation must satisfy N >= 2, got {N}")
    if omega0 <= 0:
        raise ValueError(f"omega0 must be positive, got {omega0}")
    a = ladder(N + pad)
    x = (a + dag(a)) / math.sqrt(2.0 * omega0)
    p = 1j * math.sqrt(omega0 / 2.0) * (dag(a) - a)
    return x[:N, :N].copy(), p[:N, :N].copy()


def _infer_omega0(x: np.ndarray) -> float:
    # x_{01} = 1/sqrt(2 w0) for the ladder-built position operator
    x01 = float(x[0, 1].real)
    if x01 <= 0:
        raise ValueError("operator is not a ladder-form position matrix")
    return 1.0 / (2.0 * x01 * x01)


def poly_of_x(x: np.ndarray, coeffs, pad: int | None = None) -> np.ndarray:
    """Evaluate sum_j coeffs[j] * x^j with padding, truncated back to N.

    ``x`` must be a ladder-form position operator (as returned by
    :func:`build_xp`); the oscillator frequency is recovered from its
    off-diagonal element so the polynomial can be assembled at the enlarged
    dimension. ``pad`` defaults to the polynomial degree.
    """
    coeffs = [float(c) for c in coeffs]
    if not coeffs:
        raise ValueError("coeffs must be non-empty")
    N = x.shape[0]
    if x.shape != (N, N):
        raise DimensionError(f"x must be square, got shape {x.shape}")
    deg = len(coeffs) - 1
    if pad is None:
        pad = max(deg, 1)
    omega0 = _infer_omega0(x)
    xp_, _ = build_xp(N + pad, omega0, pad=1)
    out = coeffs[-1] * np.eye(N + pad, dtype=complex)
    for c in reversed(coeffs[:-1]):  # Horner
        out = out @ xp_
        out += c * np.eye(N + pad)
    return out[:N, :N].copy()


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def dag(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def herm_defect(a: np.ndarray) -> float:
    """Max-norm deviation from Hermiticity."""
    return float(np.max(np.abs(a - a.conj().T)))


def fock_state(N: int, k: int) -> np.ndarray:
    """Density matrix |k><k| at truncation N."""
    if not 0 <= k < N:
        raise DimensionError(f"Fock index {k} outside truncation {N}")
    rho = np.zeros((N, N), dtype=complex)
    rho[k, k] = 1.0
    return rho


def coherent_state(N: int, alpha: complex) -> np.ndarray:
    """Density matrix of the coherent state |alpha> (truncated, renormalized)."""
    c = np.empty(N, dtype=complex)
    c[0] = 1.0
    for n in range(1, N):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    c *= math.exp(-abs(alpha) ** 2 / 2.0)
    c /= np.linalg.norm(c)
    return np.outer(c, c.conj())


def thermal_state(N: int, n_th: float) -> np.ndarray:
    """Thermal (Bose-Einstein) density matrix at occupation ``n_th``, trace 1.

    The geometric weights are renormalized after truncation so the trace is
    exactly one on the retained levels.
    """
    if n_th < 0:
        raise ValueError(f"n_th must be non-negative, got {n_th}")
    if n_th == 0:
        return fock_state(N, 0)
    r = n_th / (n_th + 1.0)
    w = r ** np.arange(N)
    w /= w.sum()
    return np.diag(w).astype(complex)
