"""The double-root manifold of the extra density zeros and its
continuation in the mass ratio gamma.

When the extra zero pair degenerates to a real double zero b outside the
support, the residue system closes into four equations for
(a1, a2, b, t) at each gamma.  Differentiating the algebraic
representation in gamma yields explicit derivatives driven by a real
quadratic L with one root pinned at b; following them from the two-minima
window boundaries (where the state collapses onto a degenerate field
critical point at t = 0) until b collides with an endpoint produces the
outer critical ratios Gamma1 < Gamma2 bounding all two-cut behavior.  The
collision itself is resolved by a final Newton solve of the
common-zero system with gamma as an unknown.

Argument-sum identities of the residue equations (and the bounds they
imply on b and the endpoint midpoint) are exposed as runtime checkers and
verified along every continuation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ChargeConfig
from .field import DegenerateGamma, double_critical_points, phi_second
from .numerics import RhsFailure, newton_solve, ode_evolve
from .region import RegionKind, classify
from .solver import SolveError, sqrt_a_upper

__all__ = [
    "DoubleRootState",
    "MediatrixGeometry",
    "LPolynomial",
    "GammaInterval",
    "double_root_residuals",
    "gamma_continuation_rhs",
    "find_gamma_interval",
    "mediatrix_geometry",
    "arg_sum_test",
    "lemma_arg_residuals",
    "lemma_bounds_ok",
    "l_polynomial",
]

# separation at which the continuation hands over to the terminal solve
COLLISION_HANDOFF = 1e-3


@dataclass(frozen=True)
class DoubleRootState:
    """One-cut support [a1, a2] whose extra zeros coincide at the real
    point b (outside the cut), on the double-root manifold at (gamma, t)."""

    a1: float
    a2: float
    b: float
    t: float
    gamma: float

    @property
    def config(self) -> ChargeConfig:
        raise AttributeError("heights live outside this state; combine explicitly")


@dataclass(frozen=True)
class MediatrixGeometry:
    """Intersection geometry of the charge mediatrix with the real axis:
    x0 equidistant from both charges, x1 < x2 where the circle through
    them centered at x0 meets the axis."""

    x0: float
    x1: float
    x2: float
    radius: float


def mediatrix_geometry(beta1: float, beta2: float) -> MediatrixGeometry:
    x0 = (beta2 * beta2 - beta1 * beta1) / 4.0
    radius = abs(complex(-1.0, beta1) - x0)
    return MediatrixGeometry(x0, x0 - radius, x0 + radius, radius)


def arg_sum_test(z: complex, c: float, d: float) -> bool:
    """Whether Arg(z - c) + Arg(z - d) < pi; equals c + d < 2 Re z for any
    z in the upper half-plane."""
    if not z.imag > 0:
        raise ValueError("requires Im z > 0")
    return np.angle(z - c) + np.angle(z - d) < math.pi


def double_root_residuals(
    cfg: ChargeConfig, t: float, a1: float, a2: float, b: float
) -> np.ndarray:
    """Re/Im of both residue equations with the extra zeros fused into a
    real double zero at b (4 entries)."""
    z1, z2 = cfg.z1, cfg.z2
    pref = cfg.total_mass - t
    r1 = pref * (z1 - b) ** 2 * sqrt_a_upper(z1, (a1, a2)) - 1j * cfg.beta1 * (z1 - z2) * (
        z1 - z2.conjugate()
    )
    r2 = pref * (z2 - b) ** 2 * sqrt_a_upper(z2, (a1, a2)) - 1j * cfg.gamma * cfg.beta2 * (
        z2 - z1
    ) * (z2 - z1.conjugate())
    return np.array([r1.real, r1.imag, r2.real, r2.imag])


def lemma_arg_residuals(cfg: ChargeConfig, state: DoubleRootState) -> tuple[float, float]:
    """Residuals of the two argument-sum identities satisfied on the
    double-root manifold (both vanish exactly, with no branch ambiguity)."""
    geo = mediatrix_geometry(cfg.beta1, cfg.beta2)
    out = []
    for z, shift in ((cfg.z1, 1.5 * math.pi), (cfg.z2, 0.5 * math.pi)):
        val = (
            0.5 * np.angle(z - state.a1)
            + 0.5 * np.angle(z - state.a2)
            + 2.0 * np.angle(z - state.b)
            - np.angle(z - geo.x0)
            - shift
        )
        out.append(float(val))
    return out[0], out[1]


def lemma_bounds_ok(state: DoubleRootState, slack: float = 1e-9) -> bool:
    """b and the endpoint midpoint both lie in (-1, 1)."""
    mid = 0.5 * (state.a1 + state.a2)
    return abs(state.b) < 1.0 + slack and abs(mid) < 1.0 + slack


@dataclass(frozen=True)
class LPolynomial:
    """The real quadratic driving the gamma-continuation, in factored
    form lead * (x - b) * (x - ell)."""

    lead: float
    b: float
    ell: float

    def __call__(self, x):
        return self.lead * (x - self.b) * (x - self.ell)

    def deriv(self, x):
        return self.lead * (2.0 * x - self.b - self.ell)


def _h_poly(cfg: ChargeConfig, a1: float, a2: float):
    """H(x) = D2(x) + Re(sqrtA(z2) (x - conj z2)) as a callable, plus the
    sqrtA(z2) value it was built from."""
    sq = sqrt_a_upper(cfg.z2, (a1, a2))
    z2c = cfg.z2.conjugate()

    def H(x):
        return (x - 1.0) ** 2 + cfg.beta2 ** 2 + (sq * (x - z2c)).real

    return H, sq


def l_polynomial(cfg: ChargeConfig, state: DoubleRootState) -> LPolynomial:
    H, sq = _h_poly(cfg, state.a1, state.a2)
    d2b = (state.b - 1.0) ** 2 + cfg.beta2 ** 2
    tdot = H(state.b) / d2b
    lead = (sq / (cfg.z2 - state.b)).real
    # ell from Re(sqrtA(z2) (ell - conj z2) / (b - z2)) = 0
    denom = (sq / (state.b - cfg.z2)).real
    ell = (sq * cfg.z2.conjugate() / (state.b - cfg.z2)).real / denom
    del tdot
    return LPolynomial(lead, state.b, ell)


def gamma_continuation_rhs(cfg: ChargeConfig, state: DoubleRootState):
    """(da1, da2, db, dt) with respect to gamma on the double-root
    manifold.  Requires b outside the open support."""
    if state.a1 < state.b < state.a2:
        raise ValueError("double root inside the open support")
    a1, a2, b, t = state.a1, state.a2, state.b, state.t
    H, sq = _h_poly(cfg, a1, a2)
    d2 = lambda x: (x - 1.0) ** 2 + cfg.beta2 ** 2
    d1 = lambda x: (x + 1.0) ** 2 + cfg.beta1 ** 2
    tdot = H(b) / d2(b)

    def L(x):
        return H(x) - tdot * d2(x)

    # L'(b) without cancellation: H'(x) = D2'(x) + Re sqrtA(z2)
    lprime_b = 2.0 * (b - 1.0) * (1.0 - tdot) + sq.real

    pref = cfg.total_mass - t
    if pref <= 0:
        raise RhsFailure("mass exceeded total")
    da1 = -2.0 * d1(a1) * L(a1) / (pref * (a1 - a2) * (a1 - b) ** 2)
    da2 = -2.0 * d1(a2) * L(a2) / (pref * (a2 - a1) * (a2 - b) ** 2)
    db = -d1(b) * lprime_b / (2.0 * pref * (b - a1) * (b - a2))
    return float(da1), float(da2), float(db), float(tdot)


# ---------------------------------------------------------------------------
# continuation driver
# ---------------------------------------------------------------------------

def _polish_double_root(beta1, beta2, gamma, a1, a2, b, t, tol=1e-12):
    cfg = ChargeConfig(beta1, beta2, gamma)

    def F(y):
        return double_root_residuals(cfg, y[3], y[0], y[1], y[2])

    report = newton_solve(F, np.array([a1, a2, b, t]), tol=tol, max_iter=40)
    if not report.converged:
        raise SolveError(f"double-root polish failed at gamma={gamma}: {report.message}", report)
    y = report.x
    lo, hi = sorted((y[0], y[1]))
    return DoubleRootState(lo, hi, y[2], y[3], gamma)


def _seed_from_window_edge(beta1, beta2, deg: DegenerateGamma, direction: float) -> DoubleRootState:
    """Polished double-root state just inside the continuation interval,
    stepped off the degenerate t = 0 edge at gamma-tilde."""
    cfg0 = ChargeConfig(beta1, beta2, deg.gamma)
    # collapsed-support estimate of dt/dgamma at the edge
    sq0 = complex(cfg0.z2) - deg.zeta
    h_xi = (deg.xi - 1.0) ** 2 + cfg0.beta2 ** 2 + (sq0 * (deg.xi - cfg0.z2.conjugate())).real
    tdot0 = h_xi / ((deg.xi - 1.0) ** 2 + cfg0.beta2 ** 2)
    curv = phi_second(cfg0, deg.zeta)
    if curv <= 0:
        raise SolveError(f"degenerate window edge at gamma={deg.gamma}")
    last_exc = None
    for dg_rel in (1e-5, 1e-4, 1e-3):
        dgamma = direction * dg_rel * deg.gamma
        t_seed = tdot0 * dgamma
        if t_seed <= 0:
            t_seed = abs(t_seed) + 1e-9
        w = math.sqrt(2.0 * t_seed / curv)
        try:
            return _polish_double_root(
                beta1, beta2, deg.gamma + dgamma,
                deg.zeta - w, deg.zeta + w, deg.xi, t_seed,
            )
        except SolveError as exc:
            last_exc = exc
    raise SolveError(f"could not step off the window edge at gamma={deg.gamma}: {last_exc}")


def _terminal_type3(beta1, beta2, state: DoubleRootState, b_side: str) -> DoubleRootState:
    """Exact type III configuration (b equal to an endpoint) with gamma
    free, seeded from the handoff state."""
    if b_side == "right":
        x0 = np.array([state.a1, 0.5 * (state.a2 + state.b), state.t, state.gamma])

        def unpack(y):
            return y[0], y[1], y[1], y[2], y[3]
    else:
        x0 = np.array([0.5 * (state.a1 + state.b), state.a2, state.t, state.gamma])

        def unpack(y):
            return y[0], y[1], y[0], y[2], y[3]

    def F(y):
        a1, a2, b, t, gamma = unpack(y)
        if gamma <= 0 or t < 0 or t >= 1.0 + gamma:
            return np.full(4, 1e9)  # push damped Newton back into range
        cfg = ChargeConfig(beta1, beta2, gamma)
        return double_root_residuals(cfg, t, a1, a2, b)

    report = newton_solve(F, x0, tol=1e-12, max_iter=60)
    if not report.converged:
        raise SolveError(f"terminal common-zero solve failed: {report.message}", report)
    a1, a2, b, t, gamma = unpack(report.x)
    return DoubleRootState(a1, a2, b, t, gamma)


@dataclass(frozen=True)
class GammaInterval:
    """Outer critical mass ratios and the double-root states visited on
    the way to each (terminal type III states included last)."""

    gamma1: float
    gamma2: float
    states_lower: tuple[DoubleRootState, ...]
    states_upper: tuple[DoubleRootState, ...]

    @property
    def type3_lower(self) -> DoubleRootState:
        return self.states_lower[-1]

    @property
    def type3_upper(self) -> DoubleRootState:
        return self.states_upper[-1]


def _continue_side(beta1, beta2, deg: DegenerateGamma, direction: float):
    """Integrate the double-root manifold in gamma from a window edge
    until b meets an endpoint; returns the visited states with the exact
    terminal configuration appended."""
    start = _seed_from_window_edge(beta1, beta2, deg, direction)
    b_side = "right" if start.b >= start.a2 else "left"
    visited = [start]

    def rhs(g, y):
        cfg = ChargeConfig(beta1, beta2, g)
        st = DoubleRootState(min(y[0], y[1]), max(y[0], y[1]), y[2], y[3], g)
        if st.a1 < st.b < st.a2:
            raise RhsFailure("double root entered the support")
        return np.array(gamma_continuation_rhs(cfg, st))

    def separation(g, y):
        return (y[2] - y[1] if b_side == "right" else y[0] - y[2]) - COLLISION_HANDOFF

    def post_step(g, y):
        st = _polish_double_root(beta1, beta2, g, y[0], y[1], y[2], y[3])
        visited.append(st)
        return np.array([st.a1, st.a2, st.b, st.t])

    g_far = start.gamma * 1e-6 if direction < 0 else start.gamma * 1e6
    y0 = np.array([start.a1, start.a2, start.b, start.t])
    res = ode_evolve(rhs, y0, start.gamma, g_far, events=[separation], rtol=1e-10, post_step=post_step)
    if res.status != "event":
        raise SolveError(
            f"gamma-continuation from gamma={start.gamma} ended without endpoint "
            f"collision: {res.status} {res.message}"
        )
    g_ev = float(res.event_t)
    y_ev = res.event_y
    handoff = _polish_double_root(beta1, beta2, g_ev, y_ev[0], y_ev[1], y_ev[2], y_ev[3])
    visited.append(handoff)
    terminal = _terminal_type3(beta1, beta2, handoff, b_side)
    visited.append(terminal)
    return visited


def find_gamma_interval(beta1: float, beta2: float) -> GammaInterval | None:
    """(Gamma1, Gamma2) for admissible heights, None otherwise."""
    if classify(beta1, beta2).kind is not RegionKind.OMEGA0:
        return None
    degs = double_critical_points(beta1, beta2)
    if len(degs) != 2:
        raise RuntimeError(
            f"expected two window edges in the admissible region, got {len(degs)}"
        )
    lower = _continue_side(beta1, beta2, degs[0], direction=-1.0)
    upper = _continue_side(beta1, beta2, degs[1], direction=+1.0)
    return GammaInterval(
        gamma1=lower[-1].gamma,
        gamma2=upper[-1].gamma,
        states_lower=tuple(lower),
        states_upper=tuple(upper),
    )
