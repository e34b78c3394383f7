"""Reusable numerical kernels.

Four workhorses shared by the rest of the package:

- :func:`tanh_sinh_quad` -- double-exponential quadrature on a finite
  interval, tolerant of endpoint singularities up to inverse-square-root
  and logarithmic type;
- :func:`real_roots` -- real roots (with multiplicity estimates) of low
  degree polynomials via balanced companion-matrix eigenvalues plus one
  Newton polish;
- :func:`newton_solve` -- damped Newton iteration with finite-difference
  Jacobians for small dense systems;
- :func:`ode_evolve` -- adaptive Dormand-Prince 5(4) integration with
  cubic-Hermite dense output and bisection event localization.

Everything here is pure and re-entrant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "QuadResult",
    "NewtonReport",
    "OdeTrajectory",
    "RhsFailure",
    "tanh_sinh_quad",
    "real_roots",
    "newton_solve",
    "ode_evolve",
    "bisect_root",
    "RealRoot",
]

# Multiplicity detection threshold for near-double roots (declared, not hidden).
ROOT_CLUSTER_RTOL = 1e-7

# Finite-difference step scale for Newton Jacobians.
FD_STEP = 1e-7


class RhsFailure(RuntimeError):
    """Raised by an ODE right-hand side to signal an unevaluable state
    (e.g. an endpoint collision); treated as a failed step, and as a
    truncation reason once the step size underflows."""


# ---------------------------------------------------------------------------
# tanh-sinh quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    levels_used: int
    converged: bool

    def require_converged(self) -> "QuadResult":
        if not self.converged:
            raise ArithmeticError(
                f"quadrature did not converge: estimate {self.error_estimate:.3e} "
                f"after {self.levels_used} levels"
            )
        return self


# Node cache: per level k the offsets-from-endpoint and weights on the
# half-axis u > 0 (plus the center node at level 0).  Offsets are kept as
# distances from the near endpoint so nodes never round onto a singular
# endpoint.  u_max = 4.5 puts truncation error far below double precision.
_TS_UMAX = 4.5
_TS_MAX_LEVEL = 10
_ts_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _ts_nodes(level: int) -> tuple[np.ndarray, np.ndarray]:
    """(delta, weight) arrays for the new nodes introduced at `level`.

    delta is the node's distance to the interval endpoint in the reference
    variable on [-1, 1] (i.e. 1 - |tanh(pi/2 sinh u)|), weight includes the
    step h of that level.  Only u > 0 is stored; the u < 0 half is the
    mirror image.
    """
    got = _ts_cache.get(level)
    if got is not None:
        return got
    if level == 0:
        u = np.arange(0.0, _TS_UMAX + 1e-12, 1.0)
    else:
        h = 0.5 ** level
        u = np.arange(h, _TS_UMAX + 1e-12, 2.0 * h)
    v = 0.5 * math.pi * np.sinh(u)
    # 1 - tanh(v) = 2 / (1 + exp(2v)), stable for large v
    delta = 2.0 / (1.0 + np.exp(2.0 * v))
    sech2 = 4.0 * np.exp(-2.0 * v) / (1.0 + np.exp(-2.0 * v)) ** 2
    h = 1.0 if level == 0 else 0.5 ** level
    weight = h * 0.5 * math.pi * np.cosh(u) * sech2
    _ts_cache[level] = (delta, weight)
    return delta, weight


def tanh_sinh_quad(
    f: Callable[..., np.ndarray],
    a: float,
    b: float,
    tol: float = 1e-12,
    max_level: int = _TS_MAX_LEVEL,
    with_offsets: bool = False,
) -> QuadResult:
    """Integrate a vectorized integrand f over (a, b).

    In the default mode f receives a numpy array of abscissae strictly
    inside (a, b); nodes that round onto an endpoint are dropped, which
    caps the attainable accuracy near sqrt(eps) for integrands singular at
    an endpoint.  For full accuracy on such integrands pass
    ``with_offsets=True``: f is then called as ``f(x, d_lo, d_hi)`` where
    d_lo = x - a and d_hi = b - x are supplied in exact node arithmetic
    (never zero, never cancelled), and the integrand should build its
    singular factors from the offsets.

    Interior singularities are not supported.  The error estimate is the
    last level-to-level difference, conservative for this class.
    """
    if not (b > a):
        raise ValueError(f"need a < b, got a={a}, b={b}")
    half = 0.5 * (b - a)
    width = b - a
    total = 0.0
    value = math.nan
    prev = math.nan
    estimate = math.inf
    level = 0
    for level in range(max_level + 1):
        delta, weight = _ts_nodes(level)
        off = half * delta  # exact distance of each node to its near endpoint
        if level == 0:
            # center node (u = 0, delta = 1) belongs to both half-axes once
            d_lo = np.concatenate([off, width - off[1:]])
            ws = np.concatenate([weight, weight[1:]])
        else:
            d_lo = np.concatenate([off, width - off])
            ws = np.concatenate([weight, weight])
        d_hi = width - d_lo
        # right-half nodes get their small offset exactly
        if level == 0:
            d_hi[delta.size:] = off[1:]
        else:
            d_hi[delta.size:] = off
        xs = a + d_lo
        xs[d_hi < d_lo] = b - d_hi[d_hi < d_lo]
        if with_offsets:
            fx = np.asarray(f(xs, d_lo, d_hi), dtype=float)
            if not np.all(np.isfinite(fx)):
                raise ValueError("integrand returned non-finite values at interior nodes")
            contrib = half * float(np.dot(ws, fx))
        else:
            keep = (xs > a) & (xs < b)
            fx = np.asarray(f(xs[keep]), dtype=float)
            if not np.all(np.isfinite(fx)):
                raise ValueError("integrand returned non-finite values at interior nodes")
            contrib = half * float(np.dot(ws[keep], fx))
        if level == 0:
            total = contrib
            value = total
            continue
        total = 0.5 * total + contrib
        prev = value
        value = total
        estimate = abs(value - prev)
        if estimate <= tol * max(1.0, abs(value)):
            return QuadResult(value, max(estimate, abs(value) * 1e-16), level, True)
    return QuadResult(value, estimate, level, False)


# ---------------------------------------------------------------------------
# polynomial real roots
# ---------------------------------------------------------------------------

class RealRoot(NamedTuple):
    value: float
    multiplicity: int


def _polyval_and_deriv(coeffs: np.ndarray, x: complex) -> tuple[complex, complex]:
    p = 0.0 + 0.0j
    dp = 0.0 + 0.0j
    for c in coeffs:
        dp = dp * x + p
        p = p * x + c
    return p, dp


def real_roots(coeffs: Sequence[float]) -> list[RealRoot]:
    """Real roots of a polynomial, sorted ascending, with multiplicities.

    `coeffs` are in descending powers (np.roots convention).  Roots are
    extracted as eigenvalues of the balanced companion matrix, polished by
    one Newton step, and clustered: a pair closer than
    ROOT_CLUSTER_RTOL * (1 + |root|) is reported once with multiplicity 2.
    """
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise ValueError("coeffs must be a non-empty 1-d sequence")
    nz = np.flatnonzero(c != 0.0)
    if nz.size == 0:
        raise ValueError("the zero polynomial has no well-defined roots")
    c = c[nz[0]:]
    if c.size == 1:
        return []
    c = c / c[0]
    n = c.size - 1
    comp = np.zeros((n, n))
    comp[1:, :-1] = np.eye(n - 1)
    comp[0, :] = -c[1:]
    eigs = np.linalg.eigvals(comp)
    polished = []
    for r in eigs:
        for _ in range(2):
            p, dp = _polyval_and_deriv(c, r)
            if dp != 0 and np.isfinite(dp):
                step = p / dp
                if abs(step) < 0.5 * (1.0 + abs(r)):
                    r = r - step
        polished.append(r)
    reals = sorted(
        r.real for r in polished if abs(r.imag) <= ROOT_CLUSTER_RTOL * (1.0 + abs(r.real))
    )
    out: list[RealRoot] = []
    for r in reals:
        if out and abs(r - out[-1].value) <= ROOT_CLUSTER_RTOL * (1.0 + abs(r)):
            prev = out.pop()
            merged = (prev.value * prev.multiplicity + r) / (prev.multiplicity + 1)
            out.append(RealRoot(merged, prev.multiplicity + 1))
        else:
            out.append(RealRoot(r, 1))
    return out


def bisect_root(
    g: Callable[[float], float],
    lo: float,
    hi: float,
    xtol: float = 1e-14,
    max_iter: int = 200,
) -> float:
    """Plain bisection for a bracketed scalar root; g(lo) and g(hi) must
    have opposite signs (zero at an endpoint is returned directly)."""
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if glo * ghi > 0:
        raise ValueError(f"root not bracketed on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0 or (hi - lo) <= xtol * (1.0 + abs(mid)):
            return mid
        if glo * gm < 0:
            hi = mid
        else:
            lo, glo = mid, gm
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# damped Newton with finite-difference Jacobian
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NewtonReport:
    x: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    message: str = ""


def _fd_jacobian(F: Callable[[np.ndarray], np.ndarray], x: np.ndarray, fx: np.ndarray) -> np.ndarray:
    n = x.size
    J = np.empty((fx.size, n))
    for j in range(n):
        h = FD_STEP * (1.0 + abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (np.asarray(F(xp), float) - np.asarray(F(xm), float)) / (2.0 * h)
    return J


def newton_solve(
    F: Callable[[np.ndarray], np.ndarray],
    x0: Sequence[float],
    tol: float = 1e-11,
    max_iter: int = 50,
) -> NewtonReport:
    """Solve F(x) = 0 by damped Newton iteration.

    The Jacobian is approximated by central differences with step
    FD_STEP * (1 + |x_j|).  When the full step does not reduce the
    max-norm residual, the step is halved (up to 30 times).  Convergence
    means ||F(x)||_inf <= tol.
    """
    x = np.asarray(x0, dtype=float).copy()
    fx = np.asarray(F(x), dtype=float)
    if fx.shape != x.shape:
        raise ValueError("F must map R^n to R^n")
    norm = float(np.max(np.abs(fx)))
    for it in range(1, max_iter + 1):
        if norm <= tol:
            return NewtonReport(x, norm, it - 1, True)
        if not np.all(np.isfinite(fx)):
            return NewtonReport(x, norm, it - 1, False, "non-finite residual")
        J = _fd_jacobian(F, x, fx)
        if not np.all(np.isfinite(J)):
            return NewtonReport(x, norm, it - 1, False, "non-finite Jacobian")
        try:
            step = np.linalg.solve(J, -fx)
        except np.linalg.LinAlgError:
            return NewtonReport(x, norm, it - 1, False, "singular Jacobian")
        cond = np.linalg.cond(J)
        alpha = 1.0
        for _ in range(31):
            x_new = x + alpha * step
            f_new = np.asarray(F(x_new), dtype=float)
            norm_new = float(np.max(np.abs(f_new))) if np.all(np.isfinite(f_new)) else math.inf
            if norm_new < norm:
                break
            alpha *= 0.5
        else:
            msg = "stalled (30 halvings)"
            if cond > 1e14:
                msg += f"; ill-conditioned Jacobian (cond ~ {cond:.1e})"
            return NewtonReport(x, norm, it, False, msg)
        x, fx, norm = x_new, f_new, norm_new
    if norm <= tol:
        return NewtonReport(x, norm, max_iter, True)
    return NewtonReport(x, norm, max_iter, False, "max_iter exceeded")


# ---------------------------------------------------------------------------
# adaptive Runge-Kutta with event localization
# ---------------------------------------------------------------------------

# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)


@dataclass
class OdeTrajectory:
    ts: np.ndarray
    ys: np.ndarray
    status: str  # reached_end | event | rhs_failure | step_underflow | max_steps
    message: str
    event_index: int | None = None
    event_t: float | None = None
    event_y: np.ndarray | None = None
    n_accepted: int = 0
    n_rejected: int = 0


def _hermite(t0, y0, f0, t1, y1, f1, t):
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def ode_evolve(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: Sequence[float],
    t0: float,
    t1: float,
    events: Sequence[Callable[[float, np.ndarray], float]] = (),
    rtol: float = 1e-9,
    atol: float = 1e-12,
    h0: float | None = None,
    max_steps: int = 200_000,
    event_tol: float = 1e-10,
    post_step: Callable[[float, np.ndarray], np.ndarray] | None = None,
) -> OdeTrajectory:
    """Integrate y' = rhs(t, y) from t0 to t1 (either direction).

    Embedded Dormand-Prince 5(4) with PI-free step-size control.  Each
    scalar event function is monitored for sign changes across accepted
    steps; a change is localized by bisection on the cubic-Hermite dense
    output to `event_tol` in t, integration stops at the earliest crossing.
    `post_step(t, y) -> y` (if given) may adjust the accepted state, e.g.
    to re-project onto a solution manifold; it runs after event checks.

    An rhs that raises RhsFailure (or returns non-finite values) causes
    step rejection; if the step size underflows, the trajectory is
    truncated with a reason instead of raising.
    """
    y = np.asarray(y0, dtype=float).copy()
    direction = 1.0 if t1 >= t0 else -1.0
    span = abs(t1 - t0)
    if span == 0.0:
        return OdeTrajectory(np.array([t0]), np.array([y]), "reached_end", "empty span")
    h = abs(h0) if h0 else span * 1e-4
    h = min(h, span)
    t = t0
    ts = [t0]
    ys = [y.copy()]

    def _eval(tv, yv):
        out = np.asarray(rhs(tv, yv), dtype=float)
        if not np.all(np.isfinite(out)):
            raise RhsFailure("non-finite derivative")
        return out

    try:
        f = _eval(t, y)
    except RhsFailure as exc:
        return OdeTrajectory(np.array(ts), np.array(ys), "rhs_failure", str(exc))

    g_prev = [ev(t, y) for ev in events]
    n_acc = 0
    n_rej = 0
    hmin = max(span, abs(t0), abs(t1)) * 1e-14

    for _ in range(max_steps):
        if direction * (t1 - t) <= 0:
            return OdeTrajectory(
                np.array(ts), np.array(ys), "reached_end", "", None, None, None, n_acc, n_rej
            )
        h = min(h, abs(t1 - t))
        dt = direction * h
        k = [f]
        failed = False
        try:
            for i in range(1, 7):
                yi = y + dt * sum(a * ki for a, ki in zip(_DP_A[i], k))
                k.append(_eval(t + _DP_C[i] * dt, yi))
        except (RhsFailure, ZeroDivisionError, OverflowError) as exc:
            failed = True
            fail_msg = str(exc)
        if not failed:
            y_new = y + dt * sum(b * ki for b, ki in zip(_DP_B, k) if b != 0.0)
            err_vec = dt * sum(e * ki for e, ki in zip(_DP_E, k) if e != 0.0)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        if failed or not np.isfinite(err):
            n_rej += 1
            h *= 0.5
            if h < hmin:
                msg = fail_msg if failed else "non-finite error estimate"
                return OdeTrajectory(
                    np.array(ts), np.array(ys), "rhs_failure", msg, None, None, None, n_acc, n_rej
                )
            continue
        if err > 1.0:
            n_rej += 1
            h *= max(0.2, 0.9 * err ** -0.2)
            if h < hmin:
                return OdeTrajectory(
                    np.array(ts), np.array(ys), "step_underflow",
                    "step size underflow", None, None, None, n_acc, n_rej,
                )
            continue

        t_new = t + dt
        f_new = k[6]  # FSAL
        n_acc += 1

        # event localization on the accepted step
        crossing_t = None
        crossing_idx = None
        for i, ev in enumerate(events):
            g_new = ev(t_new, y_new)
            g_old = g_prev[i]
            if g_old != 0.0 and (g_new == 0.0 or (g_old > 0) != (g_new > 0)):
                lo_t, hi_t = t, t_new
                g_lo = g_old
                while abs(hi_t - lo_t) > event_tol:
                    mid_t = 0.5 * (lo_t + hi_t)
                    y_mid = _hermite(t, y, f, t_new, y_new, f_new, mid_t)
                    g_mid = ev(mid_t, y_mid)
                    if g_mid == 0.0:
                        lo_t = hi_t = mid_t
                        break
                    if (g_lo > 0) != (g_mid > 0):
                        hi_t = mid_t
                    else:
                        lo_t, g_lo = mid_t, g_mid
                t_ev = 0.5 * (lo_t + hi_t)
                if crossing_t is None or direction * (t_ev - crossing_t) < 0:
                    crossing_t, crossing_idx = t_ev, i
            g_prev[i] = g_new
        if crossing_t is not None:
            y_ev = _hermite(t, y, f, t_new, y_new, f_new, crossing_t)
            ts.append(crossing_t)
            ys.append(np.asarray(y_ev))
            return OdeTrajectory(
                np.array(ts), np.array(ys), "event",
                f"event {crossing_idx} at t={crossing_t!r}",
                crossing_idx, crossing_t, np.asarray(y_ev), n_acc, n_rej,
            )

        if post_step is not None:
            adjusted = post_step(t_new, y_new)
            if adjusted is not None:
                y_new = np.asarray(adjusted, dtype=float)
                try:
                    f_new = _eval(t_new, y_new)
                except RhsFailure as exc:
                    ts.append(t_new)
                    ys.append(y_new.copy())
                    return OdeTrajectory(
                        np.array(ts), np.array(ys), "rhs_failure",
                        f"post_step landed on bad state: {exc}",
                        None, None, None, n_acc, n_rej,
                    )
                g_prev = [ev(t_new, y_new) for ev in events]

        t, y, f = t_new, y_new, f_new
        ts.append(t)
        ys.append(y.copy())
        h *= min(5.0, max(0.2, 0.9 * (err + 1e-300) ** -0.2))

    return OdeTrajectory(
        np.array(ts), np.array(ys), "max_steps", "max_steps exceeded",
        None, None, None, n_acc, n_rej,
    )
