"""Domain types shared by every module, plus density and total-potential
evaluation.

The field is created by two attracting charges pinned at z1 = -1 + i*beta1
and z2 = 1 + i*beta2 carrying masses 1 and gamma; the equilibrium measure
of mass t < T = 1 + gamma lives on one or two real intervals.  A support
snapshot is either a :class:`OneCut` (two endpoints plus two extra density
zeros, a real pair on one side of the cut or a conjugate pair) or a
:class:`TwoCut` (four endpoints plus the single gap zero).

All types are immutable value objects; nothing here mutates after
construction.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .numerics import tanh_sinh_quad

__all__ = [
    "ChargeConfig",
    "RealPair",
    "ConjugatePair",
    "OneCut",
    "TwoCut",
    "SupportState",
    "TransitionKind",
    "TransitionEvent",
    "PhaseKind",
    "PhaseInterval",
    "PhaseDiagram",
    "density",
    "total_potential",
    "equilibrium_constant",
    "mass_error",
]


@dataclass(frozen=True)
class ChargeConfig:
    """Field parameters (beta1, beta2, gamma); the charge abscissae are
    normalized to Re z1 = -1, Re z2 = +1."""

    beta1: float
    beta2: float
    gamma: float

    def __post_init__(self):
        if not (self.beta1 > 0 and self.beta2 > 0 and self.gamma > 0):
            raise ValueError("beta1, beta2 and gamma must all be positive")

    @property
    def z1(self) -> complex:
        return complex(-1.0, self.beta1)

    @property
    def z2(self) -> complex:
        return complex(1.0, self.beta2)

    @property
    def total_mass(self) -> float:
        """T = 1 + gamma, the admissibility bound for t."""
        return 1.0 + self.gamma

    def d_value(self, x):
        """D(x) = ((x+1)^2 + beta1^2) ((x-1)^2 + beta2^2), evaluated in
        factored real form (strictly positive on the real axis).  Also
        valid for complex x, where it equals prod (x - z_j)(x - conj z_j).
        """
        return ((x + 1.0) ** 2 + self.beta1 ** 2) * ((x - 1.0) ** 2 + self.beta2 ** 2)

    def charges(self) -> tuple[tuple[float, float, float], ...]:
        """(mass, Re z, Im z) triples of both charges."""
        return ((1.0, -1.0, self.beta1), (self.gamma, 1.0, self.beta2))

    def swapped(self) -> "ChargeConfig":
        """The x -> -x reflected configuration (beta2, beta1, 1/gamma)."""
        return ChargeConfig(self.beta2, self.beta1, 1.0 / self.gamma)


@dataclass(frozen=True)
class RealPair:
    """Two real zeros of B, both on one side of the cut."""

    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("need lo <= hi")

    def as_complex(self) -> tuple[complex, complex]:
        return complex(self.lo), complex(self.hi)


@dataclass(frozen=True)
class ConjugatePair:
    """Conjugate zeros of B at re +/- i*im, stored with im > 0."""

    re: float
    im: float

    def __post_init__(self):
        if not self.im > 0:
            raise ValueError("need im > 0 (use RealPair for real zeros)")

    def as_complex(self) -> tuple[complex, complex]:
        b = complex(self.re, self.im)
        return b, b.conjugate()


@dataclass(frozen=True)
class OneCut:
    """Single-interval support [a1, a2] at mass t, plus the two other
    zeros of the density numerator."""

    a1: float
    a2: float
    bzeros: Union[RealPair, ConjugatePair]
    t: float

    def __post_init__(self):
        if not self.a1 < self.a2:
            raise ValueError("need a1 < a2")

    @property
    def endpoints(self) -> tuple[float, float]:
        return (self.a1, self.a2)

    @property
    def cuts(self) -> tuple[tuple[float, float], ...]:
        return ((self.a1, self.a2),)

    def b_roots(self) -> tuple[complex, complex]:
        return self.bzeros.as_complex()

    def a_value(self, x):
        return (x - self.a1) * (x - self.a2)

    def b_value(self, x):
        b1, b2 = self.b_roots()
        if isinstance(self.bzeros, ConjugatePair):
            return (x - self.bzeros.re) ** 2 + self.bzeros.im ** 2
        return (x - b1.real) * (x - b2.real)

    def validate(self) -> None:
        """Ordering invariant: real b-zeros may not lie in the open cut."""
        if isinstance(self.bzeros, RealPair):
            for b in (self.bzeros.lo, self.bzeros.hi):
                if self.a1 < b < self.a2:
                    raise ValueError(f"b-zero {b} inside the open cut ({self.a1}, {self.a2})")


@dataclass(frozen=True)
class TwoCut:
    """Two-interval support [a1, a2] U [a3, a4] at mass t, with the single
    extra density zero b1 in the gap."""

    a1: float
    a2: float
    a3: float
    a4: float
    b1: float
    t: float

    def __post_init__(self):
        if not (self.a1 < self.a2 < self.a3 < self.a4):
            raise ValueError("need a1 < a2 < a3 < a4")

    @property
    def endpoints(self) -> tuple[float, float, float, float]:
        return (self.a1, self.a2, self.a3, self.a4)

    @property
    def cuts(self) -> tuple[tuple[float, float], ...]:
        return ((self.a1, self.a2), (self.a3, self.a4))

    def b_roots(self) -> tuple[complex]:
        return (complex(self.b1),)

    def a_value(self, x):
        return (x - self.a1) * (x - self.a2) * (x - self.a3) * (x - self.a4)

    def b_value(self, x):
        return x - self.b1

    def validate(self) -> None:
        if not (self.a2 < self.b1 < self.a3):
            raise ValueError(f"b1={self.b1} outside the gap ({self.a2}, {self.a3})")


SupportState = Union[OneCut, TwoCut]


class TransitionKind(enum.Enum):
    TYPE_I = "TypeI"
    TYPE_II = "TypeII"
    TYPE_III = "TypeIII"
    EXTREMA_BIRTH = "ExtremaBirth"


@dataclass(frozen=True)
class TransitionEvent:
    kind: TransitionKind
    t: float
    location: float


class PhaseKind(enum.Enum):
    ONE_CUT = "one-cut"
    TWO_CUT = "two-cut"


@dataclass(frozen=True)
class PhaseInterval:
    kind: PhaseKind
    t_start: float
    t_end: float


_CUT_CHANGE = {
    TransitionKind.TYPE_I: 1,
    TransitionKind.TYPE_II: -1,
    TransitionKind.TYPE_III: 0,
    TransitionKind.EXTREMA_BIRTH: 0,
}


@dataclass(frozen=True)
class PhaseDiagram:
    """Ordered transition events and the phase intervals they delimit."""

    config: ChargeConfig
    events: tuple[TransitionEvent, ...]
    phases: tuple[PhaseInterval, ...]

    def __post_init__(self):
        ts = [ev.t for ev in self.events]
        if any(t2 <= t1 for t1, t2 in zip(ts, ts[1:])):
            raise ValueError("events must be strictly increasing in t")
        if any(not (0 <= t < self.config.total_mass) for t in ts):
            raise ValueError("event times must lie in [0, T)")
        kind = None
        for ph in self.phases:
            if kind is not None and ph.kind == kind:
                raise ValueError("cut-count changes must alternate phases")
            delta = 0
            for ev in self.events:
                if ph.t_start < ev.t < ph.t_end and _CUT_CHANGE[ev.kind] != 0:
                    delta += 1
            if delta:
                raise ValueError("cut-changing event inside a phase interval")
            kind = ph.kind

    def _event_time(self, kind: TransitionKind) -> float | None:
        for ev in self.events:
            if ev.kind == kind:
                return ev.t
        return None

    @property
    def t0(self) -> float | None:
        """Extrema-birth time, when present."""
        return self._event_time(TransitionKind.EXTREMA_BIRTH)

    @property
    def t1(self) -> float | None:
        """Cut-opening time; 0.0 when the run starts two-cut."""
        t = self._event_time(TransitionKind.TYPE_I)
        if t is None and self.phases and self.phases[0].kind is PhaseKind.TWO_CUT:
            return 0.0
        return t

    @property
    def t2(self) -> float | None:
        """Cut-fusion time."""
        return self._event_time(TransitionKind.TYPE_II)


# ---------------------------------------------------------------------------
# density and potentials
# ---------------------------------------------------------------------------

def _support_mask(state: SupportState, x: np.ndarray, slack: float) -> np.ndarray:
    mask = np.zeros(x.shape, dtype=bool)
    for lo, hi in state.cuts:
        pad = slack * (1.0 + max(abs(lo), abs(hi)))
        mask |= (x >= lo - pad) & (x <= hi + pad)
    return mask


def density(cfg: ChargeConfig, state: SupportState, x) -> np.ndarray | float:
    """Equilibrium density (T - t)/pi * |B(x)| sqrt|A(x)| / D(x) on the
    support; exactly 0 at the endpoints.  Rejects x outside the support.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(_support_mask(state, np.atleast_1d(arr), 1e-9)):
        raise ValueError("density requested outside the support")
    a_abs = np.abs(state.a_value(arr))
    val = (
        (cfg.total_mass - state.t)
        / math.pi
        * np.abs(state.b_value(arr))
        * np.sqrt(a_abs)
        / cfg.d_value(arr)
    )
    if arr.ndim == 0:
        return float(val)
    return val


def _log_kernel_integral(cfg, state, x: float, lo: float, hi: float, tol: float) -> float:
    """integral over (lo, hi) of log|x - s| * density(s) ds, splitting at x
    when x lies inside (the log singularity is integrable and tanh-sinh
    absorbs it at an interval endpoint)."""

    def seg(a: float, b: float) -> float:
        def f(s):
            return np.log(np.abs(x - s)) * density(cfg, state, s)

        return tanh_sinh_quad(f, a, b, tol=tol).require_converged().value

    if lo < x < hi:
        return seg(lo, x) + seg(x, hi)
    return seg(lo, hi)


def potential(cfg: ChargeConfig, state: SupportState, x: float, tol: float = 1e-11) -> float:
    """Logarithmic potential V(x) = -int log|x - s| dlambda(s) of the
    measure described by `state`."""
    total = 0.0
    for lo, hi in state.cuts:
        total -= _log_kernel_integral(cfg, state, float(x), lo, hi, tol)
    return total


def external_field(cfg: ChargeConfig, x) -> np.ndarray | float:
    """phi(x) = log|x - z1| + gamma log|x - z2| in cancellation-free form."""
    return 0.5 * np.log((x + 1.0) ** 2 + cfg.beta1 ** 2) + 0.5 * cfg.gamma * np.log(
        (x - 1.0) ** 2 + cfg.beta2 ** 2
    )


def total_potential(cfg: ChargeConfig, state: SupportState, x: float, tol: float = 1e-11) -> float:
    """Total (chemical) potential V + phi at a real point: constant on the
    support of a solved state, larger off it."""
    return potential(cfg, state, x, tol=tol) + float(external_field(cfg, x))


def equilibrium_constant(cfg: ChargeConfig, state: SupportState, tol: float = 1e-11) -> float:
    """The equilibrium constant, taken operationally as the total
    potential at the midpoint of the first cut (any interior point agrees
    within quadrature tolerance on a solved state)."""
    lo, hi = state.cuts[0]
    return total_potential(cfg, state, 0.5 * (lo + hi), tol=tol)


def mass_error(cfg: ChargeConfig, state: SupportState, tol: float = 1e-9) -> float:
    """Quadrature mass of the state minus its nominal t."""
    total = 0.0
    for lo, hi in state.cuts:
        total += tanh_sinh_quad(
            lambda s: density(cfg, state, s), lo, hi, tol=tol
        ).require_converged().value
    return total - state.t
