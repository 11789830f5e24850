"""Semiclassical layer: mean-field equation of motion, ringdown diagnostics,
closed-form linear response, and the rotating-wave slow flow with
continuation and hysteresis sweeps.

The equation of motion integrated here is the first-moment reduction of the
master equation (hbar = m = 1):

    x'' = - w0^2 x - (4 w0^2 U / 3) x^3 - (1 + sin2t) g x'
          - (1 - cos2t) 2 g U x^2 x'                      [gCL only]
          - (cos t + sin t)^2 sin2t (g^2/2) x             [CL and gCL]
          - sin^2 t (1 + cos2t + sin2t) (2 g^2 U / 3) x^3 [gCL only]
          - F cos(w t)
          + (1 - cos2t) g F w sin(w t) / (2 w0^2)         [gCL only]
          - sin^2 t (1 + cos2t + sin2t) g^2 F cos(w t) / (2 w0^2)  [gCL only]

with t = theta and g = gamma. The CL family keeps the rescaled linear damping
and the g^2 frequency shift but none of the dissipation-dressed terms.

Rate diagnostics: the reported ringdown envelope is the quadrature amplitude
sqrt(x^2 + (x'/w0)^2) smoothed over one bare period, and Gamma_eff comes from
a log-linear fit of its late-time tail. The *instantaneous* decay-rate trace
is measured on the adiabatic action of the conservative effective oscillator,
sampled at turning points: for purely linear damping the action decays at
exactly Gamma at every amplitude, so amplitude-dependent damping shows up
cleanly, free of the anharmonic amplitude-vs-action distortion that the
quadrature envelope picks up at large Kerr amplitudes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConvergenceError, InstabilityError
from .model import ModelParams

__all__ = [
    "EomCoefficients",
    "eom_rhs",
    "integrate_eom",
    "RingdownResult",
    "default_ringdown_amplitude",
    "ringdown",
    "ResponsePoint",
    "linear_response",
    "response_max",
    "slow_flow_rhs",
    "slow_flow_jacobian",
    "slow_flow_fixed_points",
    "response_continuation",
    "hysteresis_sweep",
]

logger = logging.getLogger(__name__)

SEMICLASSICAL_FAMILIES = ("CL", "gCL")

_GAUSS_NODES, _GAUSS_WEIGHTS = leggauss(64)


def _family(name: str) -> str:
    # the Lindblad family is the theta = pi/4 point of the CL structure
    if name == "lindblad":
        return "CL"
    if name not in SEMICLASSICAL_FAMILIES:
        raise ValueError(f"family must be CL or gCL, got {name!r}")
    return name


@dataclass(frozen=True)
class EomCoefficients:
    """Scalar coefficients of the mean-field equation at one drive frequency."""

    omega0: float
    omega: float       # drive frequency (unused terms vanish when F = 0)
    Gamma: float       # linear damping (1 + sin 2 theta) gamma
    beta: float        # cubic stiffness, incl. the gCL gamma^2 rescaling
    c_nl: float        # nonlinear damping x^2 x' coefficient (gCL)
    w0_eff_sq: float   # w0^2 plus the gamma^2 frequency shift
    F_cos: float       # cos(w t) drive, incl. the gCL gamma^2 rescaling
    F_sin: float       # sin(w t) dissipation-induced drive (gCL)

    @classmethod
    def from_params(cls, params: ModelParams, family: str | None = None,
                    omega: float | None = None,
                    F: float | None = None) -> "EomCoefficients":
        fam = _family(family or params.family)
        w0, g, th, U = params.omega0, params.gamma, params.theta, params.U
        if F is None or omega is None:
            linear = [d for d in params.drives if d.order == 1]
            if [d for d in params.drives if d.order != 1]:
                raise ValueError("semiclassical layer handles linear drive tones only")
            if len(linear) > 1:
                raise ValueError("semiclassical layer handles a single drive tone")
            if F is None:
                F = linear[0].amplitude if linear else 0.0
            if omega is None:
                omega = linear[0].frequency if linear else w0
        s2, c2 = math.sin(2.0 * th), math.cos(2.0 * th)
        ap = 1.0 + c2 + s2
        sin_sq = math.sin(th) ** 2
        Gamma = (1.0 + s2) * g
        beta = 4.0 * w0**2 * U / 3.0
        w0_eff_sq = w0**2 + (math.cos(th) + math.sin(th)) ** 2 * s2 * g**2 / 2.0
        if fam == "gCL":
            beta += sin_sq * ap * 2.0 * g**2 * U / 3.0
            c_nl = (1.0 - c2) * 2.0 * g * U
            F_cos = F * (1.0 + sin_sq * ap * g**2 / (2.0 * w0**2))
            F_sin = (1.0 - c2) * g * F * omega / (2.0 * w0**2)
        else:
            c_nl = 0.0
            F_cos = F
            F_sin = 0.0
        return cls(omega0=w0, omega=omega, Gamma=Gamma, beta=beta, c_nl=c_nl,
                   w0_eff_sq=w0_eff_sq, F_cos=F_cos, F_sin=F_sin)


def eom_rhs(state: tuple[float, float], t: float, c: EomCoefficients):
    """(x', v') of the mean-field equation at time t."""
    x, v = state
    acc = (-c.w0_eff_sq * x - c.beta * x * x * x - c.Gamma * v
           - c.c_nl * x * x * v
           - c.F_cos * math.cos(c.omega * t) + c.F_sin * math.sin(c.omega * t))
    return v, acc


def integrate_eom(c: EomCoefficients, x0: float, v0: float, t_end: float,
                  steps_per_period: int = 400, t0: float = 0.0):
    """Fixed-step RK4 trajectory (t, x, v); step set by the bare period."""
    dt = 2.0 * math.pi / c.omega0 / steps_per_period
    n = max(1, int(math.ceil((t_end - t0) / dt)))
    dt = (t_end - t0) / n
    ts = np.empty(n + 1)
    xs = np.empty(n + 1)
    vs = np.empty(n + 1)
    w2, beta, Gam, cnl = c.w0_eff_sq, c.beta, c.Gamma, c.c_nl
    Fc, Fs, om = c.F_cos, c.F_sin, c.omega
    cos, sin = math.cos, math.sin
    x, v, t = float(x0), float(v0), float(t0)
    half = dt / 2.0
    for i in range(n + 1):
        ts[i], xs[i], vs[i] = t, x, v
        if i == n:
            break
        a1 = -w2 * x - beta * x**3 - Gam * v - cnl * x * x * v \
            - Fc * cos(om * t) + Fs * sin(om * t)
        x2_, v2_ = x + half * v, v + half * a1
        a2 = -w2 * x2_ - beta * x2_**3 - Gam * v2_ - cnl * x2_ * x2_ * v2_ \
            - Fc * cos(om * (t + half)) + Fs * sin(om * (t + half))
        x3_, v3_ = x + half * v2_, v + half * a2
        a3 = -w2 * x3_ - beta * x3_**3 - Gam * v3_ - cnl * x3_ * x3_ * v3_ \
            - Fc * cos(om * (t + half)) + Fs * sin(om * (t + half))
        x4_, v4_ = x + dt * v3_, v + dt * a3
        a4 = -w2 * x4_ - beta * x4_**3 - Gam * v4_ - cnl * x4_ * x4_ * v4_ \
            - Fc * cos(om * (t + dt)) + Fs * sin(om * (t + dt))
        x += dt / 6.0 * (v + 2.0 * v2_ + 2.0 * v3_ + v4_)
        v += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        t = t0 + (i + 1) * dt
        if not (math.isfinite(x) and math.isfinite(v)):
            raise InstabilityError(f"semiclassical trajectory diverged at t={t:.6g}")
    return ts, xs, vs


# ----------------------------------------------------------------------------
# Ringdown
# ----------------------------------------------------------------------------

def default_ringdown_amplitude(params: ModelParams, family: str | None = None) -> float:
    """Initial amplitude placing the ringdown in the nonlinear-damping regime.

    Twice the amplitude at which the nonlinear damping coefficient equals the
    linear one, x_b^2 = (1 + sin2theta) / (2 U (1 - cos2theta)); falls back to
    3/sqrt(w0) when there is no nonlinear damping channel (U = 0 or theta = 0).
    """
    th, U, w0 = params.theta, params.U, params.omega0
    b = 1.0 - math.cos(2.0 * th)
    if U > 0 and b > 1e-12 and _family(family or params.family) == "gCL":
        return 2.0 * math.sqrt((1.0 + math.sin(2.0 * th)) / (2.0 * U * b))
    return 3.0 / math.sqrt(w0)


def _action(E: float, a: float, b: float) -> float:
    """Action (up to a constant factor) at energy E in V(x) = a x^2 + b x^4."""
    if E <= 0:
        return 0.0
    if b <= 1e-15:
        return E / math.sqrt(2.0 * a)
    A2 = (-a + math.sqrt(a * a + 4.0 * b * E)) / (2.0 * b)
    A = math.sqrt(A2)
    xq = 0.5 * A * (_GAUSS_NODES + 1.0)
    integ = np.sqrt(np.maximum(2.0 * (E - a * xq**2 - b * xq**4), 0.0))
    return float((2.0 / math.pi) * 0.5 * A * np.dot(_GAUSS_WEIGHTS, integ))


def _turning_points(ts, xs, vs):
    """Times and |x| where v crosses zero (linear interpolation), t=0 included."""
    tt = [ts[0]]
    aa = [abs(xs[0])]
    for i in range(1, len(vs) - 1):
        if vs[i] == 0.0 or vs[i] * vs[i + 1] > 0.0:
            continue
        f = vs[i] / (vs[i] - vs[i + 1])
        tt.append(ts[i] + f * (ts[i + 1] - ts[i]))
        aa.append(abs(xs[i] + f * (xs[i + 1] - xs[i])))
    return np.array(tt), np.array(aa)


@dataclass(frozen=True)
class RingdownResult:
    family: str
    x0: float
    times: np.ndarray          # smoothed-envelope time grid
    amplitude: np.ndarray      # quadrature envelope, one-period moving average
    gamma_eff: float           # -2 x slope of ln A over the late-time tail
    rate_times: np.ndarray     # turning-point rate trace
    rate_amplitudes: np.ndarray
    rates: np.ndarray          # instantaneous decay rate -d ln J / dt
    envelope_monotone: bool


def ringdown(params: ModelParams, x0: float | None = None,
             family: str | None = None, t_end: float | None = None,
             steps_per_period: int = 400, fit_fraction: float = 0.3) -> RingdownResult:
    """Free decay from (x0, 0): envelope, fitted Gamma_eff, and rate trace.

    Requires an undriven model (F = 0). A non-monotone smoothed envelope is
    flagged in the result, never raised.
    """
    if params.is_driven:
        raise ValueError("ringdown requires an undriven model (no drive tones)")
    fam = _family(family or params.family)
    c = EomCoefficients.from_params(params, family=fam, omega=params.omega0, F=0.0)
    if x0 is None:
        x0 = default_ringdown_amplitude(params, fam)
    if t_end is None:
        t_end = 2.0 * math.log(1000.0) / c.Gamma
    ts, xs, vs = integrate_eom(c, x0, 0.0, t_end, steps_per_period)

    # reported envelope: quadrature amplitude with a one-period moving average
    raw = np.sqrt(xs**2 + (vs / params.omega0) ** 2)
    win = steps_per_period
    kernel = np.full(win, 1.0 / win)
    env = np.convolve(raw, kernel, mode="valid")
    t_env = ts[win // 2: win // 2 + env.size]
    growth = np.diff(env)
    monotone = bool(np.all(growth <= 1e-9 * env[:-1]))
    if not monotone:
        logger.warning("ringdown envelope is non-monotone (max growth %.2e)", growth.max())

    i0 = int((1.0 - fit_fraction) * env.size)
    slope = np.polyfit(t_env[i0:], np.log(env[i0:]), 1)[0]
    gamma_eff = -2.0 * float(slope)

    # instantaneous rate on the adiabatic action, clocked by turning points
    a_pot, b_pot = c.w0_eff_sq / 2.0, c.beta / 4.0
    tt, aa = _turning_points(ts, xs, vs)
    J = np.array([_action(a_pot * A * A + b_pot * A**4, a_pot, b_pot) for A in aa])
    span = 2  # one full period per difference
    if J.size > span:
        lnJ = np.log(J)
        rates = -(lnJ[span:] - lnJ[:-span]) / (tt[span:] - tt[:-span])
        rate_t, rate_a = tt[:-span], aa[:-span]
    else:
        rates = np.zeros(0)
        rate_t = rate_a = np.zeros(0)
    return RingdownResult(family=fam, x0=float(x0), times=t_env, amplitude=env,
                          gamma_eff=gamma_eff, rate_times=rate_t,
                          rate_amplitudes=rate_a, rates=rates,
                          envelope_monotone=monotone)


# ----------------------------------------------------------------------------
# Linear response (closed form, U = 0)
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ResponsePoint:
    Delta: float
    A: float
    delta: float
    stable: bool = True


def linear_response(params: ModelParams, omega: float,
                    family: str | None = None) -> ResponsePoint:
    """Exact harmonic response amplitude and phase for U = 0.

    Solves x'' + Gamma x' + w_eff^2 x = -Fc cos(w t) + Fs sin(w t) by the
    complex-amplitude method; x(t) = A cos(w t + delta) with A >= 0.
    """
    if params.U != 0.0:
        raise ValueError("linear_response requires U = 0")
    c = EomCoefficients.from_params(params, family=family, omega=omega)
    z = (-c.F_cos - 1j * c.F_sin) / (c.w0_eff_sq - omega**2 + 1j * c.Gamma * omega)
    return ResponsePoint(Delta=omega - params.omega0, A=abs(z),
                         delta=float(np.angle(z)), stable=True)


def response_max(params: ModelParams, family: str | None = None,
                 omega_window: tuple[float, float] | None = None,
                 grid: int = 400, refine_iters: int = 80) -> tuple[float, float]:
    """(A_max, Delta_max) of the linear response by grid + golden-section."""
    w0 = params.omega0
    lo, hi = omega_window if omega_window else (0.2 * w0, 2.5 * w0)

    def amp(w):
        return linear_response(params, w, family).A

    ws = np.linspace(lo, hi, grid)
    amps = np.array([amp(w) for w in ws])
    i = int(np.argmax(amps))
    a = ws[max(i - 1, 0)]
    b = ws[min(i + 1, grid - 1)]
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c1 = b - invphi * (b - a)
    c2 = a + invphi * (b - a)
    f1, f2 = amp(c1), amp(c2)
    for _ in range(refine_iters):
        if f1 < f2:
            a, c1, f1 = c1, c2, f2
            c2 = a + invphi * (b - a)
            f2 = amp(c2)
        else:
            b, c2, f2 = c2, c1, f1
            c1 = b - invphi * (b - a)
            f1 = amp(c1)
    w_star = 0.5 * (a + b)
    return amp(w_star), w_star - w0


# ----------------------------------------------------------------------------
# Rotating-wave slow flow, continuation, hysteresis
# ----------------------------------------------------------------------------

def slow_flow_rhs(u: float, v: float, params: ModelParams, family: str | None,
                  omega: float) -> tuple[float, float]:
    """Period-averaged quadrature flow for x = u cos(w t) + v sin(w t).

    Leading-order averaging of the full equation of motion; every term
    contributes, including the nonlinear-damping average and the sin(w t)
    dissipation-induced drive feeding the orthogonal quadrature.
    """
    c = EomCoefficients.from_params(params, family=family, omega=omega)
    return _slow_flow_rhs_c(u, v, c)


def _slow_flow_rhs_c(u: float, v: float, c: EomCoefficients):
    om = c.omega
    D = om * om - c.w0_eff_sq
    r2 = u * u + v * v
    du = (-D * v + 0.75 * c.beta * v * r2 - c.Gamma * om * u
          - 0.25 * c.c_nl * om * u * r2 - c.F_sin) / om
    dv = (D * u - 0.75 * c.beta * u * r2 - c.Gamma * om * v
          - 0.25 * c.c_nl * om * v * r2 - c.F_cos) / om
    return du, dv


def slow_flow_jacobian(u: float, v: float, params: ModelParams,
                       family: str | None, omega: float) -> np.ndarray:
    c = EomCoefficients.from_params(params, family=family, omega=omega)
    return _slow_flow_jac_c(u, v, c)


def _slow_flow_jac_c(u: float, v: float, c: EomCoefficients) -> np.ndarray:
    om = c.omega
    D = om * om - c.w0_eff_sq
    r2 = u * u + v * v
    b34 = 0.75 * c.beta
    q4 = 0.25 * c.c_nl * om
    j11 = (b34 * 2.0 * u * v - c.Gamma * om - q4 * (r2 + 2.0 * u * u)) / om
    j12 = (-D + b34 * (r2 + 2.0 * v * v) - q4 * 2.0 * u * v) / om
    j21 = (D - b34 * (r2 + 2.0 * u * u) - q4 * 2.0 * u * v) / om
    j22 = (-b34 * 2.0 * u * v - c.Gamma * om - q4 * (r2 + 2.0 * v * v)) / om
    return np.array([[j11, j12], [j21, j22]])


def _newton_fixed_point(c: EomCoefficients, u0: float, v0: float,
                        tol: float = 1e-12, max_iter: int = 60):
    u, v = float(u0), float(v0)
    for _ in range(max_iter):
        fu, fv = _slow_flow_rhs_c(u, v, c)
        if math.hypot(fu, fv) < tol:
            return u, v
        jac = _slow_flow_jac_c(u, v, c)
        det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
        if abs(det) < 1e-14:
            return None
        du = (-fu * jac[1, 1] + fv * jac[0, 1]) / det
        dv = (-fv * jac[0, 0] + fu * jac[1, 0]) / det
        u, v = u + du, v + dv
        if not (math.isfinite(u) and math.isfinite(v)):
            return None
    return None


def _is_stable(c: EomCoefficients, u: float, v: float) -> bool:
    # 2x2 real matrix: all eigenvalue real parts negative iff tr < 0 and det > 0
    jac = _slow_flow_jac_c(u, v, c)
    tr = jac[0, 0] + jac[1, 1]
    det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
    return tr < 0.0 and det > 0.0


def slow_flow_fixed_points(params: ModelParams, family: str | None, omega: float,
                           extra_seeds=()) -> list[tuple[float, float]]:
    """All distinct fixed points of the slow flow at one drive frequency.

    Newton from seeds on rings of 8 radii spanning [0.1, 10] x F/(gamma w0)
    (four phases per radius, anchored at the linear-response orientation),
    plus caller-provided seeds (typically the previous frequency's solutions).
    """
    c = EomCoefficients.from_params(params, family=family, omega=omega)
    F = max(abs(c.F_cos), 1e-30)
    a_ref = F / (max(params.gamma, 1e-12) * params.omega0)
    z = (-c.F_cos - 1j * c.F_sin) / (c.w0_eff_sq - omega**2 + 1j * c.Gamma * omega)
    u_lin, v_lin = z.real, -z.imag
    phase = math.atan2(v_lin, u_lin)
    seeds = [(u_lin, v_lin)]
    for r in np.geomspace(0.1, 10.0, 8) * a_ref:
        for dph in (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi):
            seeds.append((r * math.cos(phase + dph), r * math.sin(phase + dph)))
    seeds.extend(extra_seeds)

    found: list[tuple[float, float]] = []

    def try_seed(s) -> None:
        sol = _newton_fixed_point(c, *s)
        if sol is None:
            logger.debug("Newton seed %s did not converge at omega=%.6g", s, omega)
            return
        if all(math.hypot(sol[0] - f[0], sol[1] - f[1]) > 1e-6 * (1.0 + math.hypot(*f))
               for f in found):
            found.append(sol)

    for s in seeds:
        try_seed(s)
    if len(found) >= 2:
        # coexisting branches: sweep a fine polar fan between the outermost
        # amplitudes to pick up saddle roots with small Newton basins
        amps = sorted(math.hypot(*f) for f in found)
        for r in np.linspace(amps[0], amps[-1], 8)[1:-1]:
            for ph in np.arange(0.0, 2.0 * math.pi, math.pi / 6.0):
                try_seed((r * math.cos(ph), r * math.sin(ph)))
    if not found:
        raise ConvergenceError(f"no slow-flow fixed point found at omega={omega:.6g}")
    found.sort(key=lambda f: math.hypot(*f))
    return found


def response_continuation(params: ModelParams, omega_range,
                          family: str | None = None) -> list[ResponsePoint]:
    """Frequency response branches of the slow flow with stability flags.

    Two quasi-arclength passes (frequency ascending and descending), each
    seeding the next point with the previous solutions, carry every branch
    through its fold; the union is deduplicated per frequency. Stability
    comes from the 2x2 Jacobian (trace/determinant criterion).
    """
    fam = _family(family or params.family)
    omegas = np.asarray(list(omega_range), dtype=float)
    if omegas.size == 0:
        raise ValueError("omega_range is empty")

    per_omega: dict[int, list[tuple[float, float]]] = {i: [] for i in range(omegas.size)}
    for order in (range(omegas.size), range(omegas.size - 1, -1, -1)):
        prev: list[tuple[float, float]] = []
        for i in order:
            sols = slow_flow_fixed_points(params, fam, float(omegas[i]),
                                          extra_seeds=prev)
            prev = sols
            bucket = per_omega[i]
            for s in sols:
                if all(math.hypot(s[0] - f[0], s[1] - f[1])
                       > 1e-6 * (1.0 + math.hypot(*f)) for f in bucket):
                    bucket.append(s)

    points: list[ResponsePoint] = []
    for i, w in enumerate(omegas):
        c = EomCoefficients.from_params(params, family=fam, omega=float(w))
        for u, v in sorted(per_omega[i], key=lambda f: math.hypot(*f)):
            points.append(ResponsePoint(Delta=float(w) - params.omega0,
                                        A=math.hypot(u, v),
                                        delta=math.atan2(-v, u),
                                        stable=_is_stable(c, u, v)))
    return points


def hysteresis_sweep(params: ModelParams, omega_range, family: str | None = None,
                     direction: str = "forward", dwell_periods: int = 300,
                     measure_periods: int = 50, steps_per_period: int = 200,
                     settle_tol: float = 1e-4):
    """Quasi-static frequency sweep of the full equation of motion.

    Each frequency integrates ``dwell_periods`` drive periods seeded from the
    previous frequency's final state; the steady amplitude is the mean
    quadrature amplitude sqrt(x^2 + (x'/w)^2) over the last
    ``measure_periods``. Points whose amplitude still drifts by more than
    ``settle_tol`` (relative, over the last 20 periods) are flagged.

    Returns a list of (omega, amplitude, settled) in sweep order.
    """
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    fam = _family(family or params.family)
    omegas = sorted(float(w) for w in omega_range)
    if direction == "backward":
        omegas = omegas[::-1]
    out = []
    x = v = 0.0
    cos, sin, sqrt = math.cos, math.sin, math.sqrt
    for w in omegas:
        c = EomCoefficients.from_params(params, family=fam, omega=w)
        w2, beta, Gam, cnl = c.w0_eff_sq, c.beta, c.Gamma, c.c_nl
        Fc, Fs = c.F_cos, c.F_sin
        period = 2.0 * math.pi / w
        dt = period / steps_per_period
        half = dt / 2.0
        n_total = dwell_periods * steps_per_period
        n_measure = measure_periods * steps_per_period
        n_drift = 20 * steps_per_period
        amp_sum = 0.0
        drift_first = drift_last = 0.0
        n_half_drift = n_drift // 2
        t = 0.0
        for i in range(n_total):
            a1 = -w2 * x - beta * x**3 - Gam * v - cnl * x * x * v \
                - Fc * cos(w * t) + Fs * sin(w * t)
            x2_, v2_ = x + half * v, v + half * a1
            a2 = -w2 * x2_ - beta * x2_**3 - Gam * v2_ - cnl * x2_ * x2_ * v2_ \
                - Fc * cos(w * (t + half)) + Fs * sin(w * (t + half))
            x3_, v3_ = x + half * v2_, v + half * a2
            a3 = -w2 * x3_ - beta * x3_**3 - Gam * v3_ - cnl * x3_ * x3_ * v3_ \
                - Fc * cos(w * (t + half)) + Fs * sin(w * (t + half))
            x4_, v4_ = x + dt * v3_, v + dt * a3
            a4 = -w2 * x4_ - beta * x4_**3 - Gam * v4_ - cnl * x4_ * x4_ * v4_ \
                - Fc * cos(w * (t + dt)) + Fs * sin(w * (t + dt))
            x += dt / 6.0 * (v + 2.0 * v2_ + 2.0 * v3_ + v4_)
            v += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
            t += dt
            left = n_total - (i + 1)
            if left < n_measure:
                amp_sum += sqrt(x * x + (v / w) ** 2)
            if left < n_drift:
                if left >= n_half_drift:
                    drift_first += sqrt(x * x + (v / w) ** 2)
                else:
                    drift_last += sqrt(x * x + (v / w) ** 2)
        if not (math.isfinite(x) and math.isfinite(v)):
            raise InstabilityError(f"sweep diverged at omega={w:.6g}")
        amp = amp_sum / n_measure
        d0 = drift_first / n_half_drift
        d1 = drift_last / (n_drift - n_half_drift)
        settled = abs(d1 - d0) <= settle_tol * max(abs(d0), 1e-12)
        if not settled:
            logger.warning("sweep point omega=%.6g not settled (drift %.2e)", w,
                           abs(d1 - d0) / max(abs(d0), 1e-12))
        out.append((w, amp, settled))
    return out
