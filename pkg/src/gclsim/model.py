"""Physical parameters and the driven Kerr-oscillator Hamiltonian.

The system is a nonlinear oscillator (hbar = m = 1)

    H_S(t) = p^2/2 + w0^2 x^2/2 + V1(x) + sum_n F_n cos(w_n t) x^{k_n},

with quartic (Kerr) potential V1(x) = (w0^2 U / 3) x^4 and multi-tone
polynomial drives. Damping is characterized by the rate ``gamma``, the
bath-coupling mixing angle ``theta`` in [0, pi/2] (theta=0 pure position
coupling, pi/2 pure momentum coupling, pi/4 the Lindblad point), and the bath
occupation ``n_th`` entering only through c(T) = 2 n_th + 1.

``ModelParams`` is the single source of truth for one experiment; everything
else (operators, Liouvillians, semiclassical coefficients) is derived from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import fock
from .errors import UnsupportedDriveError

__all__ = [
    "FAMILIES",
    "DriveTone",
    "ModelParams",
    "ModelOperators",
    "kerr_potential",
    "hamiltonian_at",
    "fq_to_F",
    "F_to_fq",
    "g_to_F2",
]

FAMILIES = ("CL", "gCL", "lindblad")

LINDBLAD_THETA = math.pi / 4


@dataclass(frozen=True)
class DriveTone:
    """One periodic drive term F cos(w t) x^k.

    k=1 is a linear force, k=2 a two-photon (parametric) drive. Higher k is
    accepted here but rejected when the dissipator is built.
    """

    amplitude: float
    frequency: float
    order: int = 1

    def __post_init__(self):
        if self.frequency <= 0:
            raise ValueError(f"drive frequency must be positive, got {self.frequency}")
        if self.order < 1:
            raise ValueError(f"drive order must be a positive integer, got {self.order}")


@dataclass(frozen=True)
class ModelParams:
    """All physical parameters plus the numerical truncation and family tag."""

    gamma: float
    theta: float
    n_th: float = 0.0
    U: float = 0.0
    omega0: float = 1.0
    drives: tuple[DriveTone, ...] = ()
    N: int = 40
    family: str = "gCL"

    def __post_init__(self):
        if self.omega0 <= 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if not 0.0 <= self.theta <= math.pi / 2 + 1e-12:
            raise ValueError(f"theta must lie in [0, pi/2], got {self.theta}")
        if self.n_th < 0:
            raise ValueError(f"n_th must be non-negative, got {self.n_th}")
        if self.N < 2:
            raise ValueError(f"Fock truncation must satisfy N >= 2, got {self.N}")
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.family == "lindblad" and abs(self.theta - LINDBLAD_THETA) > 1e-12:
            raise ValueError("family 'lindblad' requires theta = pi/4")
        object.__setattr__(self, "drives", tuple(self.drives))

    @property
    def cT(self) -> float:
        """Thermal weight c(T) = 2 n_th + 1 >= 1."""
        return 2.0 * self.n_th + 1.0

    @property
    def is_driven(self) -> bool:
        return len(self.drives) > 0

    def with_(self, **kw) -> "ModelParams":
        return replace(self, **kw)


def fq_to_F(F_q: float, omega0: float) -> float:
    """Raw linear-drive amplitude F from the rescaled strength F_q.

    F_q = F / (2 sqrt(2 w0)) in natural units, so F = 2 sqrt(2 w0) F_q.
    """
    if omega0 <= 0:
        raise ValueError(f"omega0 must be positive, got {omega0}")
    return 2.0 * math.sqrt(2.0 * omega0) * F_q


def F_to_fq(F: float, omega0: float) -> float:
    """Inverse of :func:`fq_to_F`."""
    return F / (2.0 * math.sqrt(2.0 * omega0))


def g_to_F2(G: float, omega0: float) -> float:
    """Two-photon amplitude F2 from the rescaled strength G.

    Convention F2 = 2 w0 G (chosen by analogy with F_q so G/w0 is
    dimensionless); runners stamp this mapping into their output metadata.
    """
    return 2.0 * omega0 * G


def kerr_potential(params: ModelParams, x: np.ndarray | None = None) -> np.ndarray:
    """Quartic potential matrix V1(x) = (w0^2 U / 3) x^4 at truncation N."""
    if x is None:
        x, _ = fock.build_xp(params.N, params.omega0)
    c4 = params.omega0**2 * params.U / 3.0
    if c4 == 0.0:
        return np.zeros((x.shape[0], x.shape[0]), dtype=complex)
    return fock.poly_of_x(x, [0.0, 0.0, 0.0, 0.0, c4])


@dataclass(frozen=True)
class ModelOperators:
    """Precomputed dense operators for one ``ModelParams`` instance.

    All polynomial blocks (x2, p2, v1, v1prime, drive powers) are built with
    padding, so their retained matrix elements are exact.
    """

    x: np.ndarray
    p: np.ndarray
    x2: np.ndarray
    p2: np.ndarray
    h0: np.ndarray
    v1: np.ndarray
    v1prime: np.ndarray
    n_op: np.ndarray
    drive_ops: tuple[np.ndarray, ...] = field(default=())

    @classmethod
    def build(cls, params: ModelParams) -> "ModelOperators":
        N, w0 = params.N, params.omega0
        x, p = fock.build_xp(N, w0)
        a = fock.ladder(N + 2)
        xp_ = (a + fock.dag(a)) / math.sqrt(2.0 * w0)
        pp_ = 1j * math.sqrt(w0 / 2.0) * (fock.dag(a) - a)
        x2 = (xp_ @ xp_)[:N, :N]
        p2 = (pp_ @ pp_)[:N, :N]
        v1 = kerr_potential(params, x)
        c4 = w0**2 * params.U / 3.0
        v1prime = fock.poly_of_x(x, [0.0, 0.0, 0.0, 4.0 * c4]) if c4 else np.zeros_like(x)
        h0 = p2 / 2.0 + (w0**2 / 2.0) * x2 + v1
        n_op = (w0 / 2.0) * x2 + p2 / (2.0 * w0) - 0.5 * np.eye(N)
        drive_ops = tuple(
            fock.poly_of_x(x, [0.0] * tone.order + [1.0]) for tone in params.drives
        )
        return cls(x=x, p=p, x2=x2, p2=p2, h0=h0, v1=v1, v1prime=v1prime,
                   n_op=n_op, drive_ops=drive_ops)


def hamiltonian_at(params: ModelParams, t: float,
                   ops: ModelOperators | None = None) -> np.ndarray:
    """System Hamiltonian H_S(t), Hermitian, at truncation ``params.N``.

    Raises :class:`UnsupportedDriveError` for drive orders above 2; those are
    representable in the data model but not handled by the dissipator, and we
    refuse them uniformly rather than evolve half of the physics.
    """
    for tone in params.drives:
        if tone.order > 2:
            raise UnsupportedDriveError(
                f"drive order k={tone.order} not supported (k in {{1, 2}})")
    if ops is None:
        ops = ModelOperators.build(params)
    h = ops.h0.copy()
    for tone, op in zip(params.drives, ops.drive_ops):
        h += tone.amplitude * math.cos(tone.frequency * t) * op
    return h
