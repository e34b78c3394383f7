"""The external field, its critical points, and the two-minima window in
the mass ratio gamma.

The derivative of the field is a cubic over the positive denominator D,
so the critical-point structure is governed by a cubic P(x, gamma) that
splits as u(x) + gamma*v(x) with u, v monic cubics depending only on one
height each.  Window endpoints in gamma are located through the Wronskian
u'v - uv' (degree <= 4; the quintic terms cancel), whose real roots in
(-1, 1) are exactly the abscissae where P can acquire a double root for a
positive gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ChargeConfig, external_field
from .numerics import bisect_root, real_roots
from .region import RegionKind, classify

__all__ = [
    "CriticalPoints",
    "GammaTildeWindow",
    "DegenerateGamma",
    "phi",
    "phi_prime",
    "phi_second",
    "critical_cubic",
    "classify_critical_points",
    "gamma_tilde_window",
    "double_critical_points",
    "equal_minima_gamma",
]


def phi(cfg: ChargeConfig, x):
    """log|x - z1| + gamma log|x - z2| on the real axis."""
    return external_field(cfg, x)


def phi_prime(cfg: ChargeConfig, x):
    return (x + 1.0) / ((x + 1.0) ** 2 + cfg.beta1 ** 2) + cfg.gamma * (x - 1.0) / (
        (x - 1.0) ** 2 + cfg.beta2 ** 2
    )


def phi_second(cfg: ChargeConfig, x):
    d1 = (x + 1.0) ** 2 + cfg.beta1 ** 2
    d2 = (x - 1.0) ** 2 + cfg.beta2 ** 2
    return (cfg.beta1 ** 2 - (x + 1.0) ** 2) / d1 ** 2 + cfg.gamma * (
        cfg.beta2 ** 2 - (x - 1.0) ** 2
    ) / d2 ** 2


def _u_coeffs(beta2: float) -> np.ndarray:
    # (x+1)((x-1)^2 + beta2^2), descending powers
    b2 = beta2 * beta2
    return np.array([1.0, -1.0, b2 - 1.0, b2 + 1.0])


def _v_coeffs(beta1: float) -> np.ndarray:
    # (x-1)((x+1)^2 + beta1^2), descending powers
    b1 = beta1 * beta1
    return np.array([1.0, 1.0, b1 - 1.0, -(b1 + 1.0)])


def critical_cubic(cfg: ChargeConfig) -> np.ndarray:
    """Descending coefficients of P(x) = u(x) + gamma v(x) = D(x) phi'(x);
    real roots are the critical points of the field.  Leading coefficient
    is 1 + gamma."""
    return _u_coeffs(cfg.beta2) + cfg.gamma * _v_coeffs(cfg.beta1)


@dataclass(frozen=True)
class CriticalPoints:
    """Real critical points of the field, classified, plus the conjugate
    root pair of the cubic when only one critical point is real."""

    minima: tuple[float, ...]
    maxima: tuple[float, ...]
    degenerate: tuple[float, ...]
    complex_pair_present: bool
    complex_root: complex | None
    phi_minima: tuple[float, ...]
    phi_maxima: tuple[float, ...]

    @property
    def global_minima(self) -> tuple[float, ...]:
        """Minima attaining the least field value (ties within 1e-10 of
        the value scale count as joint global minima)."""
        vmin = min(self.phi_minima)
        tol = 1e-10 * (1.0 + abs(vmin))
        return tuple(
            m for m, v in zip(self.minima, self.phi_minima) if v - vmin <= tol
        )


def classify_critical_points(cfg: ChargeConfig) -> CriticalPoints:
    coeffs = critical_cubic(cfg)
    roots = real_roots(coeffs)
    minima, maxima, degenerate = [], [], []
    for r in roots:
        if r.multiplicity > 1:
            degenerate.append(r.value)
        elif phi_second(cfg, r.value) > 0:
            minima.append(r.value)
        else:
            maxima.append(r.value)
    n_real = sum(r.multiplicity for r in roots)
    complex_root = None
    if n_real < 3:
        all_roots = np.roots(coeffs)
        cidx = np.argmax(np.abs(all_roots.imag))
        z = all_roots[cidx]
        complex_root = complex(z.real, abs(z.imag))
    return CriticalPoints(
        minima=tuple(minima),
        maxima=tuple(maxima),
        degenerate=tuple(degenerate),
        complex_pair_present=complex_root is not None,
        complex_root=complex_root,
        phi_minima=tuple(float(phi(cfg, m)) for m in minima),
        phi_maxima=tuple(float(phi(cfg, m)) for m in maxima),
    )


@dataclass(frozen=True)
class DegenerateGamma:
    """A gamma at which the field has a double critical point xi; zeta is
    the remaining simple critical point of the cubic."""

    gamma: float
    xi: float
    zeta: float
    multiplicity: int


def double_critical_points(beta1: float, beta2: float) -> list[DegenerateGamma]:
    """All gamma > 0 giving the field a double (or triple) critical
    point, found by eliminating gamma = -u/v from P = P' = 0 through the
    Wronskian u'v - uv'.  Sorted by gamma."""
    u = _u_coeffs(beta2)
    v = _v_coeffs(beta1)
    w = np.polysub(np.polymul(np.polyder(u), v), np.polymul(u, np.polyder(v)))
    out = []
    for root in real_roots(w):
        x = root.value
        if not (-1.0 < x < 1.0):
            continue
        uv = np.polyval(u, x)
        vv = np.polyval(v, x)
        g = -uv / vv
        if g <= 0.0:
            continue
        mean = (1.0 - g) / (3.0 * (1.0 + g))  # arithmetic mean of the cubic's roots
        zeta = 3.0 * mean - 2.0 * x
        out.append(DegenerateGamma(g, x, zeta, root.multiplicity))
    out.sort(key=lambda d: d.gamma)
    return out


@dataclass(frozen=True)
class GammaTildeWindow:
    """Open gamma-interval on which the field has two real minima."""

    gamma_tilde_1: float
    gamma_tilde_2: float

    @property
    def degenerate(self) -> bool:
        return self.gamma_tilde_1 == self.gamma_tilde_2


def gamma_tilde_window(beta1: float, beta2: float) -> GammaTildeWindow | None:
    """Two-minima window, or None outside the admissible height region.
    The window count must agree with the height classification; a
    mismatch signals an implementation bug and raises."""
    region = classify(beta1, beta2)
    degs = double_critical_points(beta1, beta2)
    count = sum(d.multiplicity for d in degs)
    if region.kind is RegionKind.OMEGA0:
        if count != 2:
            raise RuntimeError(
                f"classification says Omega0 but found {count} degenerate gammas "
                f"at heights ({beta1}, {beta2})"
            )
    elif region.kind is RegionKind.OMEGA_INF:
        if count != 0:
            raise RuntimeError(
                f"classification says OmegaInf but found {count} degenerate gammas "
                f"at heights ({beta1}, {beta2})"
            )
        return None
    else:  # on the curve: a triple critical point, window degenerates
        if count == 0:
            return None
    gammas = []
    for d in degs:
        gammas.extend([d.gamma] * d.multiplicity)
    return GammaTildeWindow(min(gammas), max(gammas))


def _two_minima(cfg: ChargeConfig) -> tuple[float, float] | None:
    cp = classify_critical_points(cfg)
    if len(cp.minima) != 2:
        return None
    return cp.minima[0], cp.minima[1]


def equal_minima_gamma(beta1: float, beta2: float) -> float | None:
    """The unique gamma in the two-minima window at which the field takes
    the same value at both minima (bisection on the signed difference);
    None when no window exists."""
    window = gamma_tilde_window(beta1, beta2)
    if window is None or window.degenerate:
        return None

    def minima_gap(gamma: float) -> float:
        cfg = ChargeConfig(beta1, beta2, gamma)
        pair = _two_minima(cfg)
        if pair is None:
            raise RuntimeError(f"expected two minima at gamma={gamma}")
        left, right = pair
        return float(phi(cfg, left) - phi(cfg, right))

    span = window.gamma_tilde_2 - window.gamma_tilde_1
    lo = window.gamma_tilde_1 + 1e-6 * span
    hi = window.gamma_tilde_2 - 1e-6 * span
    # near the window edges the about-to-vanish minimum is the higher one,
    # so the signed difference brackets a single zero
    return bisect_root(minima_gap, lo, hi, xtol=1e-15)
