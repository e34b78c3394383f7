"""Height-plane classification: the boundary sextic, the regions where a
two-cut phase is or is not attainable, and tracing of the dividing curve.

The dividing curve is the zero set of f(beta1^2, beta2^2) in the open
first quadrant; it is a decreasing graph with vertical/horizontal
asymptotes at 2/(3 sqrt 3).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .numerics import bisect_root

__all__ = [
    "RegionKind",
    "RegionClass",
    "f_boundary",
    "classify",
    "curve_point",
    "curve_trace",
    "ASYMPTOTE",
]

# common asymptote of the dividing curve in both heights
ASYMPTOTE = 2.0 / (3.0 * math.sqrt(3.0))


class RegionKind(enum.Enum):
    OMEGA0 = "Omega0"
    OMEGA_INF = "OmegaInf"
    ON_CURVE = "OnCurve"


@dataclass(frozen=True)
class RegionClass:
    kind: RegionKind
    f_value: float


def f_boundary(x, y):
    """The symmetric boundary polynomial.  Exact over ints when called
    with ints (the f(1,1) = 0 identity is an integer cancellation)."""
    return (
        27 * x * y * (x - y) ** 2
        - 4 * (x ** 3 + y ** 3)
        + 204 * x * y * (x + y)
        - 48 * (x ** 2 - 7 * x * y + y ** 2 + 4 * x + 4 * y)
        - 256
    )


def _f_term_scale(x: float, y: float) -> float:
    return (
        abs(27 * x * y * (x - y) ** 2)
        + abs(4 * (x ** 3 + y ** 3))
        + abs(204 * x * y * (x + y))
        + abs(48 * (x ** 2 - 7 * x * y + y ** 2 + 4 * x + 4 * y))
        + 256.0
    )


def classify(beta1: float, beta2: float) -> RegionClass:
    """Classify a height pair by the sign of f at the squared heights,
    with an explicit tolerance band around zero (an exact zero is
    measure-zero in floating point)."""
    if not (beta1 > 0 and beta2 > 0):
        raise ValueError("heights must be positive")
    x, y = beta1 * beta1, beta2 * beta2
    val = float(f_boundary(x, y))
    tol = 1e-9 * (1.0 + _f_term_scale(x, y))
    if abs(val) <= tol:
        kind = RegionKind.ON_CURVE
    elif val < 0:
        kind = RegionKind.OMEGA0
    else:
        kind = RegionKind.OMEGA_INF
    return RegionClass(kind, val)


def curve_point(beta1: float, y_max: float = 1e3) -> float | None:
    """The unique beta2 > 0 on the dividing curve above beta1, or None
    when beta1 is at or below the asymptote (no crossing exists there:
    the y^3 coefficient 27*beta1^2 - 4 is nonpositive and f stays
    negative)."""
    x = beta1 * beta1
    if 27.0 * x - 4.0 <= 0.0:
        return None

    def g(y: float) -> float:
        return float(f_boundary(x, y))

    lo = 1e-6
    hi = y_max
    # f(x, 0) = -4 (x + 4)^3 < 0; expand upward until the sign flips
    while g(hi) <= 0.0:
        hi *= 10.0
        if hi > 1e12:
            return None
    y_root = bisect_root(g, lo, hi, xtol=1e-14)
    return math.sqrt(y_root)


def curve_trace(beta1_grid) -> list[tuple[float, float]]:
    """(beta1, beta2) polyline of the dividing curve over a height grid;
    grid points below the asymptote are skipped."""
    out = []
    for b1 in beta1_grid:
        b2 = curve_point(float(b1))
        if b2 is not None:
            out.append((float(b1), b2))
    return out
