"""Observables: eigenstate populations, effective temperature, occupation,
phase-space covariance, and micromotion statistics.

The mean occupation operator is n = (w0/2) x^2 + p^2/(2 w0) - 1/2, and
fluctuations are summarized by the symmetrized 2x2 covariance matrix of
(x, p); its eigenvalues nu_min <= nu_max give the total fluctuation scale
nu_geo = sqrt(nu_min nu_max) and the anisotropy R = nu_max / nu_min >= 1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NoTemperatureError

__all__ = [
    "populations",
    "PopulationFit",
    "effective_temperature",
    "occupation",
    "CovarianceSummary",
    "covariance",
    "micromotion_stats",
]

logger = logging.getLogger(__name__)

TRUNCATION_GUARD = 5  # eigenlevels dropped below the Fock cutoff


def _expect(rho: np.ndarray, op: np.ndarray) -> float:
    return float(np.sum(rho.T * op).real)


def populations(rho_ss: np.ndarray, H_static: np.ndarray) -> list[tuple[float, float]]:
    """(E_n, P_n) over the eigenstates of the static Hamiltonian, ascending.

    Only levels n < N - 5 are returned; the top eigenvectors of a truncated
    quartic Hamiltonian are truncation artifacts.
    """
    n = rho_ss.shape[0]
    if H_static.shape != (n, n):
        raise DimensionError(
            f"H shape {H_static.shape} does not match rho {rho_ss.shape}")
    energies, vecs = np.linalg.eigh(H_static)
    keep = max(1, n - TRUNCATION_GUARD)
    pn = np.einsum("in,ij,jn->n", vecs.conj(), rho_ss, vecs).real
    return [(float(e), float(p)) for e, p in zip(energies[:keep], pn[:keep])]


@dataclass(frozen=True)
class PopulationFit:
    """Boltzmann fit ln P_n ~ -E_n / T_eff over the qualifying levels."""

    levels: tuple[tuple[float, float], ...]
    T_eff: float
    fit_residual: float
    levels_used: int


def effective_temperature(pops, p_floor: float = 1e-8) -> PopulationFit:
    """Effective temperature from a weighted log-linear fit of (E_n, P_n).

    Weights are the populations themselves so the deep tail does not dominate.
    A non-decaying distribution (slope >= 0) has no temperature and raises
    :class:`NoTemperatureError`.
    """
    pts = [(e, p) for e, p in pops if p > p_floor]
    if len(pts) < 3:
        raise ValueError(
            f"need at least 3 levels above p_floor={p_floor:g}, got {len(pts)}")
    e = np.array([q[0] for q in pts])
    p = np.array([q[1] for q in pts])
    w = p
    y = np.log(p)
    ws = w.sum()
    eb = (w * e).sum() / ws
    yb = (w * y).sum() / ws
    denom = (w * (e - eb) ** 2).sum()
    slope = (w * (e - eb) * (y - yb)).sum() / denom
    if slope >= 0:
        raise NoTemperatureError(
            f"population fit slope {slope:.3e} is non-negative; distribution does not decay")
    resid = math.sqrt(float((w * (y - yb - slope * (e - eb)) ** 2).sum() / ws))
    return PopulationFit(levels=tuple(pts), T_eff=-1.0 / slope,
                         fit_residual=resid, levels_used=len(pts))


def occupation(rho: np.ndarray, x: np.ndarray, p: np.ndarray, omega0: float) -> float:
    """Mean occupation <n> = Tr[rho ((w0/2) x^2 + p^2/(2 w0) - 1/2)].

    Uses plain products of the supplied operators; the (N-1, N-1) corner of
    x^2 and p^2 is a truncation artifact, so states must not pile up there
    (monitored elsewhere via truncation-convergence checks).
    """
    n = rho.shape[0]
    if x.shape != (n, n) or p.shape != (n, n):
        raise DimensionError("operator dimensions do not match the state")
    n_op = (omega0 / 2.0) * (x @ x) + (p @ p) / (2.0 * omega0) - 0.5 * np.eye(n)
    return _expect(rho, n_op)


@dataclass(frozen=True)
class CovarianceSummary:
    """Symmetrized covariance of (x, p) with its spectral summary."""

    sigma: np.ndarray
    nu_min: float
    nu_max: float
    nu_geo: float
    R: float
    mean_x: float
    mean_p: float
    physical: bool  # False when sigma has a non-positive eigenvalue


def covariance(rho: np.ndarray, x: np.ndarray, p: np.ndarray) -> CovarianceSummary:
    """Means and symmetrized covariance matrix; flagged, not raised, when a
    positivity violation of rho renders sigma non-positive."""
    n = rho.shape[0]
    if x.shape != (n, n) or p.shape != (n, n):
        raise DimensionError("operator dimensions do not match the state")
    mx = _expect(rho, x)
    mp = _expect(rho, p)
    sxx = _expect(rho, x @ x) - mx * mx
    spp = _expect(rho, p @ p) - mp * mp
    sxp = 0.5 * (_expect(rho, x @ p) + _expect(rho, p @ x)) - mx * mp
    sigma = np.array([[sxx, sxp], [sxp, spp]])
    half_tr = 0.5 * (sxx + spp)
    disc = math.sqrt(max(0.25 * (sxx - spp) ** 2 + sxp * sxp, 0.0))
    nu_min, nu_max = half_tr - disc, half_tr + disc
    physical = nu_min > 0
    if not physical:
        logger.warning("non-positive covariance eigenvalue %.3e (unphysical state)", nu_min)
        nu_geo = float("nan")
        ratio = float("nan")
    else:
        nu_geo = math.sqrt(nu_min * nu_max)
        ratio = nu_max / nu_min
    return CovarianceSummary(sigma=sigma, nu_min=nu_min, nu_max=nu_max,
                             nu_geo=nu_geo, R=ratio, mean_x=mx, mean_p=mp,
                             physical=physical)


def micromotion_stats(values) -> tuple[float, float, float]:
    """(mean, p10, p90) of one drive period of snapshot values.

    Percentiles use linear interpolation between order statistics.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 20:
        raise ValueError(f"need at least 20 snapshots, got {v.size}")
    p10, p90 = np.percentile(v, [10.0, 90.0], method="linear")
    return float(v.mean()), float(p10), float(p90)
