"""Time-local Liouvillians: generalized Caldeira-Leggett, CL, and Lindblad.

The master equation implemented here is, with hbar = m = 1, c = 2 n_th + 1,
a+ = 1 + cos2t + sin2t, a- = 1 - cos2t + sin2t, b = 1 - cos2t, s = sin2t
(t = theta), and W = V1'(x):

  (a) unitary      -i [H_S(t), rho]
  (b) decoherence  -a+ (g w0 c / 4) [x,[x,rho]] - a- (g c / 4 w0) [p,[p,rho]]
  (c) friction     -i a+ (g/4) [x,{p,rho}] + i a- (g/4) [p,{x,rho}]
  (d) nonlinear    +i (g b / 4 w0^2) [p,{W,rho}] - (g s c / 4 w0) [x,[W,rho]]
  (e) drive        sum_n  i g_n(t) (b / w0^2) [p,{x^(k_n-1),rho}]
                          - g_n(t) (s c / w0) [x,[x^(k_n-1),rho]]
                   with g_n(t) = g k_n F_n cos(w_n t) / 4.

The CL family keeps (a)-(c); gCL keeps everything; the Lindblad family is the
theta = pi/4 point, where the dissipative sector of (b)+(c) takes Lindblad
form. Term (d) uses the analytic commutator [V1(x), p] = i V1'(x), exact for
polynomial potentials and free of truncation-corner noise.

Every term group is trace preserving and Hermiticity preserving; complete
positivity is guaranteed only at the Lindblad point, and is monitored rather
than enforced (see ``propagator``).

``apply_liouvillian`` is the literal nested-commutator reference path with
per-term toggles for diagnostics. ``CompiledLiouvillian`` is an algebraically
identical factored form (one-sided matrices plus a shared-product sandwich
list) used by the propagator in hot loops; equality with the literal path is
a regression test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fock
from .errors import DimensionError, UnsupportedDriveError
from .fock import anticommutator as acomm
from .fock import commutator as comm
from .model import LINDBLAD_THETA, ModelOperators, ModelParams

__all__ = [
    "DissipatorSpec",
    "LiouvillianContext",
    "apply_liouvillian",
    "liouvillian_terms",
    "lindblad_rhs",
    "squeezing_term",
    "squeeze_decomposition",
    "CompiledLiouvillian",
]

TERM_GROUPS = ("unitary", "decoherence", "friction", "nonlinear", "drive")


@dataclass(frozen=True)
class DissipatorSpec:
    """Which master-equation family and which term groups are active."""

    family: str
    theta: float
    gamma: float
    cT: float
    decoherence: bool = True
    friction: bool = True
    nonlinear: bool = True
    drive: bool = True

    def __post_init__(self):
        if self.family == "lindblad" and abs(self.theta - LINDBLAD_THETA) > 1e-12:
            raise ValueError("family 'lindblad' requires theta = pi/4")
        if self.cT < 1.0 - 1e-12:
            raise ValueError(f"cT = 2 n_th + 1 must be >= 1, got {self.cT}")

    @classmethod
    def from_params(cls, params: ModelParams) -> "DissipatorSpec":
        """Family defaults: CL disables the dressed terms, gCL enables all."""
        dressed = params.family == "gCL"
        return cls(family=params.family, theta=params.theta, gamma=params.gamma,
                   cT=params.cT, nonlinear=dressed, drive=dressed)


@dataclass(frozen=True)
class _Tone:
    amplitude: float
    frequency: float
    order: int
    x_pow: np.ndarray        # x^k, enters the Hamiltonian
    x_pow_m1: np.ndarray     # x^(k-1), enters term (e)


@dataclass(frozen=True)
class LiouvillianContext:
    """Precomputed operators and angle coefficients for one parameter set."""

    omega0: float
    gamma: float
    cT: float
    theta: float
    x: np.ndarray
    p: np.ndarray
    v1prime: np.ndarray
    h0: np.ndarray
    tones: tuple[_Tone, ...]
    a_plus: float = field(init=False, default=0.0)
    a_minus: float = field(init=False, default=0.0)
    b_mix: float = field(init=False, default=0.0)
    s_mix: float = field(init=False, default=0.0)

    def __post_init__(self):
        c2 = math.cos(2.0 * self.theta)
        s2 = math.sin(2.0 * self.theta)
        object.__setattr__(self, "a_plus", 1.0 + c2 + s2)
        object.__setattr__(self, "a_minus", 1.0 - c2 + s2)
        object.__setattr__(self, "b_mix", 1.0 - c2)
        object.__setattr__(self, "s_mix", s2)

    @property
    def dim(self) -> int:
        return self.x.shape[0]

    @classmethod
    def build(cls, params: ModelParams,
              ops: ModelOperators | None = None) -> "LiouvillianContext":
        if ops is None:
            ops = ModelOperators.build(params)
        tones = []
        for tone, xk in zip(params.drives, ops.drive_ops):
            if tone.order > 2:
                raise UnsupportedDriveError(
                    f"drive order k={tone.order} not supported (k in {{1, 2}})")
            if tone.order == 1:
                xkm1 = np.eye(params.N, dtype=complex)
            else:
                xkm1 = ops.x
            tones.append(_Tone(tone.amplitude, tone.frequency, tone.order, xk, xkm1))
        return cls(omega0=params.omega0, gamma=params.gamma, cT=params.cT,
                   theta=params.theta, x=ops.x, p=ops.p, v1prime=ops.v1prime,
                   h0=ops.h0, tones=tuple(tones))

    def hamiltonian(self, t: float) -> np.ndarray:
        h = self.h0.copy()
        for tone in self.tones:
            h += tone.amplitude * math.cos(tone.frequency * t) * tone.x_pow
        return h


def _check_dims(ctx: LiouvillianContext, *mats: np.ndarray) -> None:
    n = ctx.dim
    for m in mats:
        if m.shape[-2:] != (n, n):
            raise DimensionError(f"matrix shape {m.shape} does not match N={n}")


def _term_unitary(H: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return -1j * comm(H, rho)


def _term_decoherence(ctx: LiouvillianContext, rho: np.ndarray) -> np.ndarray:
    kx = ctx.a_plus * ctx.gamma * ctx.omega0 * ctx.cT / 4.0
    kp = ctx.a_minus * ctx.gamma * ctx.cT / (4.0 * ctx.omega0)
    return -kx * comm(ctx.x, comm(ctx.x, rho)) - kp * comm(ctx.p, comm(ctx.p, rho))


def _term_friction(ctx: LiouvillianContext, rho: np.ndarray) -> np.ndarray:
    kx = ctx.a_plus * ctx.gamma / 4.0
    kp = ctx.a_minus * ctx.gamma / 4.0
    return (-1j * kx) * comm(ctx.x, acomm(ctx.p, rho)) \
        + (1j * kp) * comm(ctx.p, acomm(ctx.x, rho))


def _term_nonlinear(ctx: LiouvillianContext, rho: np.ndarray) -> np.ndarray:
    w = ctx.v1prime
    k1 = ctx.gamma * ctx.b_mix / (4.0 * ctx.omega0**2)
    k2 = ctx.gamma * ctx.s_mix * ctx.cT / (4.0 * ctx.omega0)
    return (1j * k1) * comm(ctx.p, acomm(w, rho)) - k2 * comm(ctx.x, comm(w, rho))


def _term_drive(ctx: LiouvillianContext, rho: np.ndarray, t: float) -> np.ndarray:
    out = np.zeros_like(rho)
    for tone in ctx.tones:
        g = ctx.gamma * tone.order * tone.amplitude * math.cos(tone.frequency * t) / 4.0
        y = tone.x_pow_m1
        k1 = g * ctx.b_mix / ctx.omega0**2
        k2 = g * ctx.s_mix * ctx.cT / ctx.omega0
        out += (1j * k1) * comm(ctx.p, acomm(y, rho)) - k2 * comm(ctx.x, comm(y, rho))
    return out


def liouvillian_terms(ctx: LiouvillianContext, spec: DissipatorSpec, H: np.ndarray,
                      rho: np.ndarray, t: float = 0.0) -> dict[str, np.ndarray]:
    """The enabled term groups individually (diagnostics and tests)."""
    _check_dims(ctx, H, rho)
    out: dict[str, np.ndarray] = {"unitary": _term_unitary(H, rho)}
    if spec.decoherence:
        out["decoherence"] = _term_decoherence(ctx, rho)
    if spec.friction:
        out["friction"] = _term_friction(ctx, rho)
    if spec.family == "gCL":
        if spec.nonlinear:
            out["nonlinear"] = _term_nonlinear(ctx, rho)
        if spec.drive and ctx.tones:
            out["drive"] = _term_drive(ctx, rho, t)
    return out


def apply_liouvillian(ctx: LiouvillianContext, spec: DissipatorSpec, H: np.ndarray,
                      rho: np.ndarray, t: float = 0.0) -> np.ndarray:
    """d(rho)/dt as the sum of the enabled term groups (literal reference path).

    The Lindblad family evaluates the same term machinery at theta = pi/4,
    where the structure coincides with :func:`lindblad_rhs`.
    """
    terms = liouvillian_terms(ctx, spec, H, rho, t)
    out = np.zeros_like(rho)
    for v in terms.values():
        out += v
    return out


def lindblad_rhs(H: np.ndarray, rho: np.ndarray, gamma: float, omega0: float,
                 cT: float, x: np.ndarray | None = None,
                 p: np.ndarray | None = None) -> np.ndarray:
    """Thermal Lindblad-form right-hand side at the theta = pi/4 point.

    Normalization matches the theta = pi/4 limit of the CL family, so the
    effective energy relaxation rate is 2 gamma (and the semiclassical damping
    is Gamma = 2 gamma, consistent with Gamma = (1 + sin 2 theta) gamma).
    Written independently of the term machinery; entrywise agreement with
    ``apply_liouvillian`` at family=CL, theta=pi/4 is part of the test suite.
    """
    n = rho.shape[0]
    if H.shape != (n, n):
        raise DimensionError(f"H shape {H.shape} does not match rho {rho.shape}")
    if x is None or p is None:
        x, p = fock.build_xp(n, omega0)
    kx = gamma * omega0 * cT / 2.0
    kp = gamma * cT / (2.0 * omega0)
    kf = gamma / 2.0
    return (-1j * comm(H, rho)
            - kx * comm(x, comm(x, rho))
            - kp * comm(p, comm(p, rho))
            - 1j * kf * comm(x, acomm(p, rho))
            + 1j * kf * comm(p, acomm(x, rho)))


def squeezing_term(ctx: LiouvillianContext) -> np.ndarray:
    """Hamiltonian-like squeezing generator Lambda = (gamma cos2theta / 4){x, p}."""
    return (ctx.gamma * math.cos(2.0 * ctx.theta) / 4.0) * acomm(ctx.x, ctx.p)


def squeeze_decomposition(ctx: LiouvillianContext, spec: DissipatorSpec,
                          rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split the friction term into -i[Lambda, rho] plus a dissipative rest.

    The two parts sum to the friction term exactly by construction; Lambda
    vanishes at the Lindblad point.
    """
    if spec.family not in ("CL", "gCL"):
        raise ValueError("squeeze decomposition applies to the CL/gCL families")
    _check_dims(ctx, rho)
    lam = squeezing_term(ctx)
    ham_part = -1j * comm(lam, rho)
    diss_part = _term_friction(ctx, rho) - ham_part
    return ham_part, diss_part


# ----------------------------------------------------------------------------
# Compiled (factored) action: d(rho)/dt = A_l(t) rho + rho A_r(t)
#                                         + sum_m c_m(t) X_m rho Y_m
# ----------------------------------------------------------------------------

@dataclass
class _Sandwich:
    xkey: str
    ykey: str
    c0: complex
    c_tone: np.ndarray  # cos(w_n t) coefficients, one per tone


class CompiledLiouvillian:
    """Factored Liouvillian action, algebraically equal to the literal path.

    All one-sided products are merged into two matrices (plus per-tone cosine
    parts), and the sandwich terms X rho Y share their right-products, so one
    evaluation costs ~13 dense multiplications regardless of how many term
    groups are enabled. Accepts a single density matrix (N, N) or a batch
    (B, N, N).
    """

    def __init__(self, ctx: LiouvillianContext, spec: DissipatorSpec):
        self.ctx = ctx
        self.spec = spec
        n = ctx.dim
        eye = np.eye(n, dtype=complex)
        x, p, w = ctx.x, ctx.p, ctx.v1prime
        ops = {"x": x, "p": p, "w": w}
        ntones = len(ctx.tones)
        self._freqs = np.array([tone.frequency for tone in ctx.tones])

        al = np.zeros((n, n), dtype=complex)
        ar = np.zeros((n, n), dtype=complex)
        al_t = np.zeros((ntones, n, n), dtype=complex)
        ar_t = np.zeros((ntones, n, n), dtype=complex)
        sw: dict[tuple[str, str], _Sandwich] = {}

        def add_sw(xk, yk, c0=0.0, tone_idx=None, ct=0.0):
            s = sw.setdefault((xk, yk), _Sandwich(xk, yk, 0.0, np.zeros(ntones, complex)))
            s.c0 += c0
            if tone_idx is not None:
                s.c_tone[tone_idx] += ct

        g, w0, cT = ctx.gamma, ctx.omega0, ctx.cT
        # effective angle coefficients: the lindblad family is the pi/4 point
        ap, am, b, s = ctx.a_plus, ctx.a_minus, ctx.b_mix, ctx.s_mix

        # (a) unitary, static part; drive parts of H are per-tone below
        al += -1j * ctx.h0
        ar += 1j * ctx.h0
        for i, tone in enumerate(ctx.tones):
            al_t[i] += -1j * tone.amplitude * tone.x_pow
            ar_t[i] += 1j * tone.amplitude * tone.x_pow

        if spec.decoherence:
            kx = ap * g * w0 * cT / 4.0
            kp = am * g * cT / (4.0 * w0)
            xx, pp = x @ x, p @ p
            al += -kx * xx - kp * pp
            ar += -kx * xx - kp * pp
            add_sw("x", "x", 2.0 * kx)
            add_sw("p", "p", 2.0 * kp)

        if spec.friction:
            kxp = ap * g / 4.0
            kpx = am * g / 4.0
            xp_, px_ = x @ p, p @ x
            al += (-1j * kxp) * xp_ + (1j * kpx) * px_
            ar += (1j * kxp) * px_ + (-1j * kpx) * xp_
            add_sw("x", "p", -1j * (kxp + kpx))
            add_sw("p", "x", 1j * (kxp + kpx))

        dressed = spec.family == "gCL"
        if dressed and spec.nonlinear and np.any(w):
            k1 = g * b / (4.0 * w0**2)
            k2 = g * s * cT / (4.0 * w0)
            al += (1j * k1) * (p @ w) - k2 * (x @ w)
            ar += (-1j * k1) * (w @ p) - k2 * (w @ x)
            add_sw("p", "w", 1j * k1)
            add_sw("w", "p", -1j * k1)
            add_sw("x", "w", k2)
            add_sw("w", "x", k2)

        if dressed and spec.drive:
            for i, tone in enumerate(ctx.tones):
                ge = g * tone.order * tone.amplitude / 4.0
                k1 = ge * b / w0**2
                k2 = ge * s * cT / w0
                if tone.order == 1:
                    # [p, {1, rho}] = 2 [p, rho]; [x, [1, rho]] = 0
                    al_t[i] += 2j * k1 * p
                    ar_t[i] += -2j * k1 * p
                else:
                    y = tone.x_pow_m1
                    al_t[i] += (1j * k1) * (p @ y) - k2 * (x @ y)
                    ar_t[i] += (-1j * k1) * (y @ p) - k2 * (y @ x)
                    add_sw("p", "x", tone_idx=i, ct=1j * k1)
                    add_sw("x", "p", tone_idx=i, ct=-1j * k1)
                    add_sw("x", "x", tone_idx=i, ct=2.0 * k2)

        self._al0, self._ar0 = al, ar
        self._al_t, self._ar_t = al_t, ar_t
        self._sandwiches = list(sw.values())
        self._ops = ops
        self._time_dependent = ntones > 0 and (
            np.any(np.abs(al_t) > 0) or any(np.any(np.abs(sws.c_tone) > 0)
                                            for sws in self._sandwiches))
        self._eye = eye

        # group sandwiches by right factor: out += M_y(t) @ (rho @ Y) with
        # M_y(t) = M_y0 + sum_n cos(w_n t) M_yn materialized up front, so one
        # evaluation costs two multiplications per distinct Y
        groups = []
        for ykey in sorted({sws.ykey for sws in self._sandwiches}):
            m0 = np.zeros((n, n), dtype=complex)
            mt = np.zeros((ntones, n, n), dtype=complex)
            for sws in self._sandwiches:
                if sws.ykey != ykey:
                    continue
                if sws.c0 != 0.0:
                    m0 += sws.c0 * ops[sws.xkey]
                for i in range(ntones):
                    if sws.c_tone[i] != 0.0:
                        mt[i] += sws.c_tone[i] * ops[sws.xkey]
            groups.append((ykey, m0, mt, bool(np.any(np.abs(mt) > 0))))
        self._groups = groups
        self._scratch = np.zeros((3, n, n), dtype=complex)

    def __call__(self, rho: np.ndarray, t: float = 0.0) -> np.ndarray:
        if not self._time_dependent:
            out = self._al0 @ rho
            out += rho @ self._ar0
            for ykey, m0, _, _ in self._groups:
                out += m0 @ (rho @ self._ops[ykey])
            return out
        cos_t = np.cos(self._freqs * t)
        al = self._scratch[0]
        ar = self._scratch[1]
        np.multiply(cos_t[0], self._al_t[0], out=al)
        np.multiply(cos_t[0], self._ar_t[0], out=ar)
        for i in range(1, cos_t.size):
            al += cos_t[i] * self._al_t[i]
            ar += cos_t[i] * self._ar_t[i]
        al += self._al0
        ar += self._ar0
        out = al @ rho
        out += rho @ ar
        m_buf = self._scratch[2]
        for ykey, m0, mt, mt_any in self._groups:
            if mt_any:
                np.multiply(cos_t[0], mt[0], out=m_buf)
                for i in range(1, cos_t.size):
                    m_buf += cos_t[i] * mt[i]
                m_buf += m0
                out += m_buf @ (rho @ self._ops[ykey])
            else:
                out += m0 @ (rho @ self._ops[ykey])
        return out

    def trace_defect(self) -> float:
        """Max-norm of the trace-generator; zero for a trace-preserving action.

        Tr(d rho/dt) = Tr[(A_l + A_r + sum_m c_m Y_m X_m) rho] for all rho, so
        the matrix in brackets must vanish, including each tone channel.
        """
        m = self._al0 + self._ar0
        for sws in self._sandwiches:
            m = m + sws.c0 * (self._ops[sws.ykey] @ self._ops[sws.xkey])
        worst = float(np.max(np.abs(m)))
        for i in range(len(self.ctx.tones)):
            mt = self._al_t[i] + self._ar_t[i]
            for sws in self._sandwiches:
                mt = mt + sws.c_tone[i] * (self._ops[sws.ykey] @ self._ops[sws.xkey])
            worst = max(worst, float(np.max(np.abs(mt))))
        return worst
