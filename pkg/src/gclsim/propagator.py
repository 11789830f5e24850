"""Density-matrix propagation, steady states, and physicality diagnostics.

Fixed-step RK4 keeps runs bit-for-bit reproducible and makes stroboscopic
sampling of periodically driven systems exact. The default step resolves the
fastest timescale with 200 steps per period and is halved automatically (up
to three times) if the trace drifts.

Positivity is monitored, never enforced: away from the Lindblad point the
dynamics is of Redfield type, and negative eigenvalues are physics
diagnostics. They are logged with magnitude and time and reported in
``SteadyStateReport.min_eig``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .dissipator import CompiledLiouvillian, DissipatorSpec, LiouvillianContext
from .errors import (AmbiguousFixedPointError, ConvergenceError, DimensionError,
                     InstabilityError)
from .fock import thermal_state
from .model import ModelParams

__all__ = [
    "SteadyStateReport",
    "default_dt",
    "build_liouvillian",
    "evolve",
    "steady_state",
    "one_period_map",
    "floquet_map_fixed_point",
]

logger = logging.getLogger(__name__)

TRACE_TOL = 1e-8
POSITIVITY_FLOOR = -1e-6
MAX_STEP_DOUBLINGS = 3


@dataclass
class SteadyStateReport:
    """Result of a steady-state search.

    For driven systems ``snapshots`` holds one period of equally spaced
    states (micromotion sampling); undriven runs leave it empty.
    """

    rho_ss: np.ndarray
    converged: bool
    residual: float
    min_eig: float
    periods_used: int
    snapshots: list[np.ndarray] = field(default_factory=list)
    snapshot_times: np.ndarray = field(default_factory=lambda: np.zeros(0))


def default_dt(params: ModelParams, steps_per_period: int = 200,
               L: CompiledLiouvillian | None = None) -> float:
    """Step resolving the fastest drive tone and the bare period.

    When the compiled Liouvillian is supplied, the step is additionally
    capped by an RK4 stability bound 2 / lambda_max, with lambda_max from a
    short (seeded, deterministic) power iteration: the top of the truncated
    Kerr spectrum scales like U N^2 and can far exceed the drive frequencies,
    so the period-resolving rule alone underresolves stiff truncations.
    """
    t_fast = 2.0 * math.pi / params.omega0
    for tone in params.drives:
        t_fast = min(t_fast, 2.0 * math.pi / tone.frequency)
    dt = t_fast / steps_per_period
    if L is not None:
        lam = spectral_radius_estimate(L, params.N)
        if lam > 0:
            dt = min(dt, 2.0 / lam)
    return dt


def spectral_radius_estimate(L: CompiledLiouvillian, n: int, iters: int = 15) -> float:
    """Dominant |eigenvalue| of the Liouvillian action by power iteration.

    Sampled at drive phases cos = {1, 0, -1} (t is folded into the tone
    coefficients there); seeded, hence deterministic. A 1.25 safety factor
    absorbs non-normal transients and the coarse iteration count.
    """
    rng = np.random.default_rng(1234)
    v0 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    freqs = L._freqs
    t_samples = [0.0]
    if freqs.size:
        t_samples += [math.pi / (2.0 * freqs.min()), math.pi / freqs.min()]
    lam = 0.0
    for t in t_samples:
        v = v0 / np.linalg.norm(v0)
        nv = 0.0
        for _ in range(iters):
            v = L(v, t)
            nv = float(np.linalg.norm(v))
            if nv == 0.0:
                break
            v = v / nv
        lam = max(lam, nv)
    return 1.25 * lam


def build_liouvillian(params: ModelParams,
                      spec: DissipatorSpec | None = None) -> CompiledLiouvillian:
    if spec is None:
        spec = DissipatorSpec.from_params(params)
    ctx = LiouvillianContext.build(params)
    return CompiledLiouvillian(ctx, spec)


def _rk4_step(L: CompiledLiouvillian, rho: np.ndarray, t: float, dt: float) -> np.ndarray:
    k1 = L(rho, t)
    k2 = L(rho + (0.5 * dt) * k1, t + 0.5 * dt)
    k3 = L(rho + (0.5 * dt) * k2, t + 0.5 * dt)
    k4 = L(rho + dt * k3, t + dt)
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _run_segment(L, rho, t0, dt, n_steps, store_every=0):
    """Integrate n_steps from t0; optionally store every k-th state."""
    stored_t, stored = [], []
    t = t0
    for i in range(n_steps):
        rho = _rk4_step(L, rho, t, dt)
        t = t0 + (i + 1) * dt  # avoid accumulated roundoff in t
        if store_every and (i + 1) % store_every == 0:
            stored_t.append(t)
            stored.append(rho)
    return rho, t, stored_t, stored


def evolve(rho0: np.ndarray, params: ModelParams, t_span: tuple[float, float],
           dt: float | None = None, store_every: int = 1,
           spec: DissipatorSpec | None = None,
           L: CompiledLiouvillian | None = None):
    """RK4 trajectory of d(rho)/dt = L(t) rho over ``t_span``.

    Returns ``(times, states)`` with states sampled every ``store_every``
    steps (the initial state included). The trace is checked along the way;
    drift beyond 1e-8 halves the step and restarts (up to 3 doublings), NaN
    raises :class:`InstabilityError`.
    """
    if L is None:
        L = build_liouvillian(params, spec)
    n = params.N
    if rho0.shape != (n, n):
        raise DimensionError(f"rho0 shape {rho0.shape} does not match N={n}")
    t0, t1 = t_span
    if t1 <= t0:
        raise ValueError("t_span must have t1 > t0")
    dt_max = dt if dt is not None else default_dt(params, L=L)

    for doubling in range(MAX_STEP_DOUBLINGS + 1):
        n_steps = max(1, math.ceil((t1 - t0) / dt_max))
        h = (t1 - t0) / n_steps
        check_every = max(1, min(n_steps, 200))
        times = [t0]
        states = [rho0.copy()]
        rho, t = rho0.copy(), t0
        ok = True
        for i in range(n_steps):
            rho = _rk4_step(L, rho, t, h)
            t = t0 + (i + 1) * h
            if (i + 1) % store_every == 0 or i + 1 == n_steps:
                times.append(t)
                states.append(rho.copy())
            if (i + 1) % check_every == 0 or i + 1 == n_steps:
                tr = np.trace(rho)
                if not np.isfinite(tr):
                    raise InstabilityError(f"non-finite state at t={t:.6g}")
                if abs(tr - 1.0) > TRACE_TOL:
                    ok = False
                    break
        if ok:
            return np.array(times), states
        dt_max /= 2.0
        logger.warning("trace drift exceeded %.1e; halving step to dt=%.3e", TRACE_TOL, dt_max)
    raise ConvergenceError(
        f"trace drift above {TRACE_TOL} persisted after {MAX_STEP_DOUBLINGS} step halvings")


def _min_eig(rho: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])


def steady_state(params: ModelParams, rho0: np.ndarray | None = None,
                 tol: float = 1e-9, strobe_tol: float = 1e-8,
                 max_periods: int = 2000, snapshots: int = 200,
                 steps_per_period: int = 200,
                 spec: DissipatorSpec | None = None) -> SteadyStateReport:
    """Relax to the (Floquet) steady state by time evolution.

    Undriven: evolve in bare-period chunks until ||L rho||_max < ``tol``.
    Driven:   evolve in drive-period chunks until the stroboscopic difference
              ||rho(t+T) - rho(t)||_max < ``strobe_tol``, then record
              ``snapshots`` equally spaced states over one more period.

    Non-convergence is reported (``converged=False``), not raised.
    """
    if params.gamma <= 0:
        raise ValueError("steady_state requires gamma > 0")
    L = build_liouvillian(params, spec)
    if rho0 is None:
        rho0 = thermal_state(params.N, params.n_th)
    driven = params.is_driven
    period = (2.0 * math.pi / params.drives[0].frequency) if driven \
        else (2.0 * math.pi / params.omega0)
    n_steps = max(1, math.ceil(period / default_dt(params, steps_per_period, L=L)))
    if driven:
        n_steps = snapshots * math.ceil(n_steps / snapshots)
    h = period / n_steps

    rho = rho0.copy()
    t = 0.0
    residual = math.inf
    worst_eig = 0.0
    converged = False
    k = 0
    for k in range(1, max_periods + 1):
        rho_new, t, _, _ = _run_segment(L, rho, t, h, n_steps)
        if not np.all(np.isfinite(rho_new)):
            raise InstabilityError(f"non-finite state after {k} periods")
        rho_new = 0.5 * (rho_new + rho_new.conj().T)  # shed roundoff asymmetry
        if abs(np.trace(rho_new).real - 1.0) > TRACE_TOL:
            raise ConvergenceError(
                f"trace drift above {TRACE_TOL} after {k} periods; reduce the step")
        if driven:
            residual = float(np.max(np.abs(rho_new - rho)))
        else:
            residual = float(np.max(np.abs(L(rho_new, 0.0))))
        rho = rho_new
        if k % 10 == 0 or residual < (strobe_tol if driven else tol):
            ev = _min_eig(rho)
            worst_eig = min(worst_eig, ev)
            if ev < POSITIVITY_FLOOR:
                logger.warning("positivity violation: min eig %.3e after %d periods", ev, k)
        if residual < (strobe_tol if driven else tol):
            converged = True
            break
    if not converged:
        logger.warning("steady state not converged after %d periods (residual %.3e)",
                       k, residual)

    snaps, snap_t = [], np.zeros(0)
    if driven and converged:
        stride = n_steps // snapshots
        _, _, st, ss = _run_segment(L, rho, t, h, n_steps, store_every=stride)
        snap_t, snaps = np.array(st), ss
    return SteadyStateReport(rho_ss=rho, converged=converged, residual=residual,
                             min_eig=_min_eig(rho), periods_used=k,
                             snapshots=snaps, snapshot_times=snap_t)


def one_period_map(params: ModelParams, dt: float | None = None,
                   spec: DissipatorSpec | None = None) -> np.ndarray:
    """Materialized one-period propagator Phi as an N^2 x N^2 matrix.

    Built by propagating the full basis of matrix units through one period
    (drive period, or the bare period when undriven). Row-major vectorization:
    vec(rho) = rho.reshape(-1).
    """
    n = params.N
    L = build_liouvillian(params, spec)
    driven = params.is_driven
    period = (2.0 * math.pi / params.drives[0].frequency) if driven \
        else (2.0 * math.pi / params.omega0)
    h_max = dt if dt is not None else default_dt(params, L=L)
    n_steps = max(1, math.ceil(period / h_max))
    h = period / n_steps
    basis = np.eye(n * n, dtype=complex).reshape(n * n, n, n)
    t = 0.0
    for i in range(n_steps):
        basis = _rk4_step(L, basis, t, h)
        t = (i + 1) * h
    return basis.reshape(n * n, n * n).T.copy()


def floquet_map_fixed_point(params: ModelParams, dt: float | None = None,
                            spec: DissipatorSpec | None = None,
                            max_iters: int = 50000,
                            tol: float = 1e-13) -> SteadyStateReport:
    """Steady state as the eigenvalue-1 fixed point of the one-period map.

    Power iteration on the materialized map, trace-normalized each sweep.
    After convergence the subdominant contraction factor is estimated on a
    deflated vector; a factor indistinguishable from 1 means the unit
    eigenvalue is degenerate and the fixed point ambiguous, which raises
    :class:`AmbiguousFixedPointError` instead of silently picking one.
    """
    n = params.N
    if n > 40:
        logger.warning("one-period map at N=%d materializes %d^2 entries", n, n * n)
    phi = one_period_map(params, dt=dt, spec=spec)
    v = thermal_state(n, params.n_th).reshape(-1)
    it = 0
    diff = math.inf
    for it in range(1, max_iters + 1):
        v_new = phi @ v
        tr = v_new.reshape(n, n).trace()
        v_new = v_new / tr
        diff = float(np.max(np.abs(v_new - v)))
        v = v_new
        if diff < tol:
            break
    if diff >= tol:
        raise ConvergenceError(
            f"power iteration not converged after {max_iters} sweeps (diff {diff:.2e})")
    rho = v.reshape(n, n)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real

    # subdominant-mode contraction on a deflated probe vector
    rng = np.random.default_rng(0)
    u = rng.standard_normal(n * n) + 1j * rng.standard_normal(n * n)
    u -= v * u.reshape(n, n).trace()
    norms = [float(np.linalg.norm(u))]
    for _ in range(20):
        u = phi @ u
        u -= v * u.reshape(n, n).trace()
        norms.append(float(np.linalg.norm(u)))
    lam2 = (norms[-1] / norms[0]) ** (1.0 / 20.0) if norms[0] > 0 else 0.0
    if lam2 > 1.0 - 1e-10:
        raise AmbiguousFixedPointError(
            f"one-period map has a second eigenvalue with |lambda| ~ {lam2:.12f}; "
            "fixed point is degenerate")

    residual = float(np.max(np.abs((phi @ rho.reshape(-1)).reshape(n, n) - rho)))
    return SteadyStateReport(rho_ss=rho, converged=True, residual=residual,
                             min_eig=_min_eig(rho), periods_used=it)
