"""Direct solution of the residue systems at fixed mass t.

Matching residues of the algebraic representation of the Cauchy transform
at both charges gives four real equations; the one-cut support (two
endpoints plus a real or conjugate pair of extra density zeros) is
determined by them alone, while the two-cut support needs the additional
gap period condition.  Square roots of the endpoint polynomial are taken
per-factor with principal arguments in the upper half-plane, which is the
branch that makes the representation decay like (T - t)/z at infinity;
the convention is pinned by the totally symmetric fusion state, where the
system has a closed form.

Seeding at small t places a local semicircle at the global minimum of the
field (width sqrt(2 t / phi'')) with the remaining critical points as the
extra zeros, then polishes by Newton.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ChargeConfig, ConjugatePair, OneCut, RealPair, SupportState, TwoCut
from .field import classify_critical_points, phi_second
from .numerics import NewtonReport, newton_solve, tanh_sinh_quad

__all__ = [
    "SolveError",
    "sqrt_a_upper",
    "residuals_onecut",
    "residuals_twocut",
    "solve_onecut",
    "solve_twocut",
    "solve_state",
    "seed_small_t",
    "onecut_validity_integral",
]

NEWTON_TOL = 1e-11


class SolveError(RuntimeError):
    """A Newton solve failed; carries the closing report."""

    def __init__(self, message: str, report: NewtonReport | None = None):
        super().__init__(message)
        self.report = report


def sqrt_a_upper(z: complex, endpoints) -> complex:
    """Branch-correct sqrt(A(z)) for Im z > 0: the product of principal
    square roots of the factors z - a_i, each with half-argument in
    (0, pi/2).  Use conjugation externally for the lower half-plane."""
    if not z.imag > 0:
        raise ValueError("sqrt_a_upper requires Im z > 0")
    out = 1.0 + 0.0j
    for a in endpoints:
        out *= np.sqrt(complex(z) - a)
    return complex(out)


def _residue_rhs(cfg: ChargeConfig) -> tuple[complex, complex]:
    z1, z2 = cfg.z1, cfg.z2
    r1 = 1j * cfg.beta1 * (z1 - z2) * (z1 - z2.conjugate())
    r2 = 1j * cfg.gamma * cfg.beta2 * (z2 - z1) * (z2 - z1.conjugate())
    return r1, r2


def _residue_pair(cfg: ChargeConfig, t: float, endpoints, b_value) -> np.ndarray:
    rhs1, rhs2 = _residue_rhs(cfg)
    pref = cfg.total_mass - t
    r1 = pref * b_value(cfg.z1) * sqrt_a_upper(cfg.z1, endpoints) - rhs1
    r2 = pref * b_value(cfg.z2) * sqrt_a_upper(cfg.z2, endpoints) - rhs2
    return np.array([r1.real, r1.imag, r2.real, r2.imag])


def residuals_onecut(cfg: ChargeConfig, t: float, state: OneCut) -> np.ndarray:
    """Real and imaginary parts of both residue equations (4 entries)."""
    b1, b2 = state.b_roots()
    return _residue_pair(cfg, t, state.endpoints, lambda z: (z - b1) * (z - b2))


def gap_period(cfg: ChargeConfig, a1, a2, a3, a4, b1, tol: float = 1e-12) -> float:
    """Signed period of the density numerator over the gap (a2, a3); zero
    at a valid two-cut state.  The quartic under the root is positive on
    the open gap."""

    def f(x, d_lo, d_hi):
        quart = (x - a1) * d_lo * d_hi * (a4 - x)
        return (x - b1) * np.sqrt(np.abs(quart)) / cfg.d_value(x)

    return tanh_sinh_quad(f, a2, a3, tol=tol, with_offsets=True).value


def residuals_twocut(cfg: ChargeConfig, t: float, state: TwoCut) -> np.ndarray:
    """Four residue components plus the gap period condition (5 entries)."""
    res = _residue_pair(cfg, t, state.endpoints, lambda z: z - state.b1)
    period = gap_period(cfg, state.a1, state.a2, state.a3, state.a4, state.b1)
    return np.append(res, period)


# ---------------------------------------------------------------------------
# Newton drivers
# ---------------------------------------------------------------------------

def _encode(state: SupportState) -> np.ndarray:
    if isinstance(state, TwoCut):
        return np.array([state.a1, state.a2, state.a3, state.a4, state.b1])
    if isinstance(state.bzeros, ConjugatePair):
        return np.array([state.a1, state.a2, state.bzeros.re, state.bzeros.im])
    return np.array([state.a1, state.a2, state.bzeros.lo, state.bzeros.hi])


def _decode_onecut(y: np.ndarray, conjugate: bool, t: float) -> OneCut:
    a1, a2 = sorted((y[0], y[1]))
    if conjugate:
        bz = ConjugatePair(y[2], abs(y[3]))
    else:
        lo, hi = sorted((y[2], y[3]))
        bz = RealPair(lo, hi)
    return OneCut(a1, a2, bz, t)


def _decode_twocut(y: np.ndarray, t: float) -> TwoCut:
    a = sorted(y[:4])
    return TwoCut(a[0], a[1], a[2], a[3], y[4], t)


def solve_onecut(
    cfg: ChargeConfig, t: float, seed: OneCut, tol: float = NEWTON_TOL, max_iter: int = 60
) -> OneCut:
    """Newton-converged one-cut state from a seed within the basin."""
    conjugate = isinstance(seed.bzeros, ConjugatePair)

    def F(y):
        return residuals_onecut(cfg, t, _decode_onecut(y, conjugate, t))

    report = newton_solve(F, _encode(seed), tol=tol, max_iter=max_iter)
    if not report.converged:
        raise SolveError(f"one-cut solve failed at t={t}: {report.message}", report)
    return _decode_onecut(report.x, conjugate, t)


def solve_twocut(
    cfg: ChargeConfig, t: float, seed: TwoCut, tol: float = NEWTON_TOL, max_iter: int = 60
) -> TwoCut:
    """Newton-converged two-cut state from a seed within the basin."""

    def F(y):
        ys = np.sort(y[:4])
        return residuals_twocut(cfg, t, TwoCut(ys[0], ys[1], ys[2], ys[3], y[4], t))

    report = newton_solve(F, _encode(seed), tol=tol, max_iter=max_iter)
    if not report.converged:
        raise SolveError(f"two-cut solve failed at t={t}: {report.message}", report)
    state = _decode_twocut(report.x, t)
    state.validate()
    return state


def solve_state(cfg: ChargeConfig, t: float, seed: SupportState, tol: float = NEWTON_TOL) -> SupportState:
    if isinstance(seed, TwoCut):
        return solve_twocut(cfg, t, seed, tol=tol)
    return solve_onecut(cfg, t, seed, tol=tol)


def residual_norm(cfg: ChargeConfig, state: SupportState) -> float:
    if isinstance(state, TwoCut):
        return float(np.max(np.abs(residuals_twocut(cfg, state.t, state))))
    return float(np.max(np.abs(residuals_onecut(cfg, state.t, state))))


# ---------------------------------------------------------------------------
# small-t seeding
# ---------------------------------------------------------------------------

def _semicircle_halfwidth(mass: float, curvature: float) -> float:
    # local quadratic field => scaled semicircle of mass `mass`
    return math.sqrt(2.0 * mass / curvature)


def seed_small_t(cfg: ChargeConfig, t0: float | None = None) -> SupportState:
    """Polished support state at small mass t0 (default 1e-4 T).

    One global field minimum: a one-cut semicircle there, extra zeros
    seeded at the remaining critical points (real pair or conjugate
    pair).  Two global minima (the equal-minima mass ratio): a two-cut
    state with one semicircle per minimum.
    """
    if t0 is None:
        t0 = 1e-4 * cfg.total_mass
    cp = classify_critical_points(cfg)
    if cp.degenerate:
        raise SolveError(
            f"degenerate field minimum at heights ({cfg.beta1}, {cfg.beta2}), "
            f"gamma={cfg.gamma}: seeding undefined on the window boundary"
        )
    globals_ = cp.global_minima
    for m in globals_:
        if not phi_second(cfg, m) > 0:
            raise SolveError(f"non-convex field minimum at x={m}")
    if len(globals_) == 2:
        lo_min, hi_min = globals_
        w1 = _semicircle_halfwidth(0.5 * t0, phi_second(cfg, lo_min))
        w2 = _semicircle_halfwidth(0.5 * t0, phi_second(cfg, hi_min))
        (b_seed,) = cp.maxima
        seed = TwoCut(lo_min - w1, lo_min + w1, hi_min - w2, hi_min + w2, b_seed, t0)
        return solve_twocut(cfg, t0, seed)
    (minimum,) = globals_
    w = _semicircle_halfwidth(t0, phi_second(cfg, minimum))
    if cp.complex_pair_present:
        z = cp.complex_root
        bz = ConjugatePair(z.real, z.imag)
    else:
        others = sorted(set(cp.minima + cp.maxima) - {minimum})
        bz = RealPair(others[0], others[1])
    seed = OneCut(minimum - w, minimum + w, bz, t0)
    return solve_onecut(cfg, t0, seed)


# ---------------------------------------------------------------------------
# one-cut validity (type I indicator)
# ---------------------------------------------------------------------------

def onecut_validity_integral(cfg: ChargeConfig, t: float, state: OneCut, tol: float = 1e-11) -> float:
    """Signed equilibrium-inequality margin of a one-cut state with a real
    pair of extra zeros: the total-potential excess at the outer zero,
    computed as (T - t) times the integral of B sqrt|A| / D between the
    nearer endpoint and the outer zero.  Positive means the inequality is
    strict; zero signals a cut about to open there."""
    if not isinstance(state.bzeros, RealPair):
        raise ValueError("validity integral requires a real pair of extra zeros")
    lo, hi = state.bzeros.lo, state.bzeros.hi
    a1, a2 = state.a1, state.a2
    if lo >= a2:
        left, right = a2, hi
    elif hi <= a1:
        left, right = lo, a1
    else:
        raise ValueError("real pair must lie on one side of the cut")

    def f(x):
        return (
            (x - lo)
            * (x - hi)
            * np.sqrt(np.abs((x - a1) * (x - a2)))
            / cfg.d_value(x)
        )

    if right - left <= 0.0:
        return 0.0
    val = tanh_sinh_quad(f, left, right, tol=tol).value
    return (cfg.total_mass - t) * val
