"""Mass-parameter evolution of solved support states.

The endpoints and extra density zeros obey an explicit first-order system
in t whose right-hand side is rational in the state (with, in the two-cut
phase, the gap point zeta defined by a vanishing period).  Transitions
are localized while integrating:

- a cut opens (type I) where the equilibrium-inequality margin of a real
  zero pair crosses zero -- a transversal crossing, localized by
  bisection;
- a gap closes (type II) and a conjugate pair lands on the axis (extrema
  birth) as square-root touchdowns: the ODE cannot cross them, so they
  fire on a tiny threshold and the touchdown time is recovered from the
  local quadratic model (the correction is O(threshold^2), far below the
  integration tolerance);
- a conjugate pair meeting an endpoint (type III) only happens at the
  critical mass ratios and is monitored with a near-miss threshold.

After every localized transition the state is re-seeded in the new phase
by a local semicircle / conjugate-split ansatz and polished by Newton;
every tenth accepted step is also re-polished on the residue system to
control drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ChargeConfig,
    ConjugatePair,
    OneCut,
    PhaseDiagram,
    PhaseInterval,
    PhaseKind,
    RealPair,
    SupportState,
    TransitionEvent,
    TransitionKind,
    TwoCut,
)
from .numerics import RhsFailure, ode_evolve, tanh_sinh_quad
from .region import RegionKind, classify
from .solver import (
    SolveError,
    onecut_validity_integral,
    solve_onecut,
    solve_state,
    solve_twocut,
)

__all__ = [
    "ZetaValue",
    "Trajectory",
    "zeta",
    "rhs_onecut",
    "rhs_twocut",
    "evolve",
    "imb_decrease_indicator",
    "limit_density",
    "limit_b_zeros",
    "phase_diagram",
    "ScenarioMismatch",
]

# thresholds for the square-root touchdown events
GAP_EPS = 1e-6
IM_EPS = 1e-6
TYPE3_EPS = 1e-7
COLLISION_EPS = 1e-12


class ScenarioMismatch(RuntimeError):
    """Detected events contradict the predicted transition scenario."""


@dataclass(frozen=True)
class ZetaValue:
    zeta: float


def zeta(a1: float, a2: float, a3: float, a4: float, tol: float = 1e-11) -> ZetaValue:
    """The unique gap point making the period of (x - zeta)/sqrt(A) over
    (a2, a3) vanish; the quartic is positive on the open gap."""
    if not (a1 < a2 < a3 < a4):
        raise ValueError("endpoints must be strictly increasing")

    def weight(x, d_lo, d_hi):
        return 1.0 / np.sqrt((x - a1) * d_lo * d_hi * (a4 - x))

    def x_weight(x, d_lo, d_hi):
        return x / np.sqrt((x - a1) * d_lo * d_hi * (a4 - x))

    i0 = tanh_sinh_quad(weight, a2, a3, tol=tol, with_offsets=True).require_converged()
    i1 = tanh_sinh_quad(x_weight, a2, a3, tol=tol, with_offsets=True).require_converged()
    return ZetaValue(i1.value / i0.value)


def _guard(*diffs):
    for d in diffs:
        if abs(d) < COLLISION_EPS * (1.0 + abs(d)):
            raise RhsFailure("collision among state points")


def rhs_onecut(cfg: ChargeConfig, t: float, state: OneCut):
    """(da1, da2, db1, db2) at a one-cut state; for a conjugate pair the
    third entry is the complex derivative of the upper zero and the
    fourth its conjugate."""
    b1, b2 = state.b_roots()
    a1, a2 = state.a1, state.a2
    pref = 1.0 / (cfg.total_mass - t)
    _guard(a1 - a2, b1 - b2, a1 - b1, a1 - b2, a2 - b1, a2 - b2)
    da1 = pref * 2.0 * cfg.d_value(a1) / ((a1 - a2) * (a1 - b1) * (a1 - b2))
    da2 = pref * 2.0 * cfg.d_value(a2) / ((a2 - a1) * (a2 - b1) * (a2 - b2))
    db1 = pref * cfg.d_value(b1) / ((b1 - b2) * (b1 - a1) * (b1 - a2))
    db2 = pref * cfg.d_value(b2) / ((b2 - b1) * (b2 - a1) * (b2 - a2))
    if isinstance(state.bzeros, ConjugatePair):
        return float(da1.real), float(da2.real), complex(db1), complex(db2)
    return float(da1), float(da2), float(db1), float(db2)


def rhs_twocut(cfg: ChargeConfig, t: float, state: TwoCut):
    """(da1, da2, da3, da4, db1) at a two-cut state."""
    a = state.endpoints
    b1 = state.b1
    z = zeta(*a).zeta
    pref = 1.0 / (cfg.total_mass - t)
    out = []
    for i in range(4):
        ai = a[i]
        aprime = 1.0
        for j in range(4):
            if j != i:
                _guard(ai - a[j])
                aprime *= ai - a[j]
        _guard(ai - b1)
        out.append(pref * 2.0 * cfg.d_value(ai) * (ai - z) / (aprime * (ai - b1)))
    a_at_b = math.prod(b1 - ai for ai in a)
    out.append(pref * cfg.d_value(b1) * (b1 - z) / a_at_b)
    return tuple(out)


def imb_decrease_indicator(cfg: ChargeConfig, state: OneCut) -> float:
    """Re(D(b)/A(b)) at the upper conjugate zero: positive exactly when
    Im b is instantaneously decreasing."""
    if not isinstance(state.bzeros, ConjugatePair):
        raise ValueError("indicator requires a conjugate pair")
    b = complex(state.bzeros.re, state.bzeros.im)
    return float((cfg.d_value(b) / ((b - state.a1) * (b - state.a2))).real)


# ---------------------------------------------------------------------------
# limit objects (t -> T)
# ---------------------------------------------------------------------------

def limit_density(charges, x, mass_total: bool = False):
    """Density of the limit measure: a mass-weighted sum of Poisson
    kernels, normalized to total mass 1 as printed (or to total mass T
    with mass_total=True)."""
    arr = np.asarray(x, dtype=float)
    total = sum(g for g, _, _ in charges)
    val = np.zeros_like(arr)
    for g, re, im in charges:
        val += g * im / ((arr - re) ** 2 + im ** 2)
    val /= math.pi * (1.0 if mass_total else total)
    if arr.ndim == 0:
        return float(val)
    return val


def limit_b_zeros(charges) -> list[complex]:
    """Limits of the extra density zeros: the upper-half roots of
    sum_j gamma_j Im z_j prod_{l != j} D_l(z), one conjugate pair
    reported per root."""
    acc = np.zeros(1)
    for j, (g, re, im) in enumerate(charges):
        term = np.array([g * im])
        for l, (_, re2, im2) in enumerate(charges):
            if l != j:
                term = np.polymul(term, np.array([1.0, -2.0 * re2, re2 ** 2 + im2 ** 2]))
        acc = np.polyadd(acc, term)
    roots = np.roots(acc)
    upper = sorted((complex(r) for r in roots if r.imag > 0), key=lambda z: z.real)
    return upper


# ---------------------------------------------------------------------------
# trajectory evolution
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    config: ChargeConfig
    states: list[SupportState] = field(default_factory=list)
    events: list[TransitionEvent] = field(default_factory=list)
    status: str = "completed"
    message: str = ""
    max_polish_drift: float = 0.0

    @property
    def t_final(self) -> float:
        return self.states[-1].t if self.states else math.nan

    def phase_segments(self) -> list[tuple[PhaseKind, list[SupportState]]]:
        segs: list[tuple[PhaseKind, list[SupportState]]] = []
        for st in self.states:
            kind = PhaseKind.TWO_CUT if isinstance(st, TwoCut) else PhaseKind.ONE_CUT
            if not segs or segs[-1][0] != kind:
                segs.append((kind, []))
            segs[-1][1].append(st)
        return segs


def _encode(state: SupportState) -> np.ndarray:
    if isinstance(state, TwoCut):
        return np.array([state.a1, state.a2, state.a3, state.a4, state.b1])
    if isinstance(state.bzeros, ConjugatePair):
        return np.array([state.a1, state.a2, state.bzeros.re, state.bzeros.im])
    return np.array([state.a1, state.a2, state.bzeros.lo, state.bzeros.hi])


def _decode(y: np.ndarray, proto: SupportState, t: float) -> SupportState:
    if isinstance(proto, TwoCut):
        return TwoCut(y[0], y[1], y[2], y[3], y[4], t)
    if isinstance(proto.bzeros, ConjugatePair):
        return OneCut(y[0], y[1], ConjugatePair(y[2], max(abs(y[3]), 1e-300)), t)
    return OneCut(y[0], y[1], RealPair(min(y[2], y[3]), max(y[2], y[3])), t)


def _vector_rhs(cfg: ChargeConfig, proto: SupportState):
    def rhs(t, y):
        try:
            state = _decode(y, proto, t)
        except ValueError as exc:  # trial stage overshot an ordering constraint
            raise RhsFailure(str(exc)) from exc
        if isinstance(state, TwoCut):
            return np.array(rhs_twocut(cfg, t, state))
        da1, da2, db1, db2 = rhs_onecut(cfg, t, state)
        if isinstance(state.bzeros, ConjugatePair):
            return np.array([da1, da2, db1.real, db1.imag])
        return np.array([da1, da2, db1, db2])

    return rhs


def _solve_with_ladder(cfg, t_base, make_seed, total_mass):
    last_exc: Exception | None = None
    for dt in (1e-7, 1e-6, 1e-5, 1e-4):
        t_new = t_base + dt * total_mass
        if t_new >= total_mass:
            break
        try:
            seed = make_seed(dt * total_mass, t_new)
            return solve_state(cfg, t_new, seed)
        except (SolveError, ValueError) as exc:
            last_exc = exc
    raise SolveError(f"re-seeding failed after transition at t={t_base}: {last_exc}")


def evolve(
    cfg: ChargeConfig,
    state0: SupportState,
    t0: float | None = None,
    t_stop: float | None = None,
    rtol: float = 1e-9,
    polish_every: int = 10,
) -> Trajectory:
    """Integrate a solved state in t, localizing and crossing transitions,
    until t_stop (default T - 1e-3 T, past which the endpoints diverge
    and the limit objects take over)."""
    T = cfg.total_mass
    if t0 is None:
        t0 = state0.t
    if t_stop is None:
        t_stop = T * (1.0 - 1e-3)
    traj = Trajectory(config=cfg)
    state = state0
    t = t0
    traj.states.append(state)
    type3_seen = False

    while t < t_stop:
        proto = state
        rhs = _vector_rhs(cfg, proto)
        events, kinds = _phase_events(cfg, proto, skip_type3=type3_seen)

        # guard against entering a phase already past its transition
        if (
            isinstance(proto, OneCut)
            and isinstance(proto.bzeros, RealPair)
            and onecut_validity_integral(cfg, t, proto) <= 0.0
        ):
            state, made = _cross_type1(cfg, t, proto, traj)
            if not made:
                return traj
            t = state.t
            traj.states.append(state)
            continue

        polish_counter = {"n": 0}

        def post_step(tv, yv, proto=proto, polish_counter=polish_counter):
            polish_counter["n"] += 1
            if polish_counter["n"] % polish_every:
                return None
            try:
                polished = solve_state(cfg, tv, _decode(yv, proto, tv), tol=1e-12)
            except SolveError:
                return None
            y_new = _encode(polished)
            traj.max_polish_drift = max(traj.max_polish_drift, float(np.max(np.abs(y_new - yv))))
            return y_new

        res = ode_evolve(rhs, _encode(state), t, t_stop, events=events, rtol=rtol, post_step=post_step)
        for tv, yv in zip(res.ts[1:], res.ys[1:]):
            traj.states.append(_decode(yv, proto, tv))

        if res.status == "reached_end":
            traj.status = "completed"
            return traj
        if res.status != "event":
            traj.status = "truncated"
            traj.message = f"{res.status}: {res.message}"
            return traj

        t_ev = float(res.event_t)
        ev_state = _decode(res.event_y, proto, t_ev)
        kind = kinds[res.event_index]
        try:
            if kind is TransitionKind.TYPE_I:
                state, made = _cross_type1(cfg, t_ev, ev_state, traj)
                if not made:
                    return traj
            elif kind is TransitionKind.TYPE_II:
                state = _cross_type2(cfg, t_ev, ev_state, traj)
            elif kind is TransitionKind.EXTREMA_BIRTH:
                state = _cross_extrema_birth(cfg, t_ev, ev_state, traj)
            else:  # near-miss of a type III configuration
                a_near = min((abs(ev_state.bzeros.re - a), a) for a in ev_state.endpoints)[1]
                traj.events.append(TransitionEvent(TransitionKind.TYPE_III, t_ev, a_near))
                type3_seen = True
                state = solve_state(cfg, t_ev, ev_state)
        except SolveError as exc:
            traj.status = "truncated"
            traj.message = str(exc)
            return traj
        t = state.t
        traj.states.append(state)

    traj.status = "completed"
    return traj


def _phase_events(cfg: ChargeConfig, proto: SupportState, skip_type3: bool = False):
    if isinstance(proto, TwoCut):
        return [lambda tv, yv: yv[2] - yv[1] - GAP_EPS], [TransitionKind.TYPE_II]
    if isinstance(proto.bzeros, ConjugatePair):
        events = [lambda tv, yv: abs(yv[3]) - IM_EPS]
        kinds = [TransitionKind.EXTREMA_BIRTH]
        if not skip_type3:
            events.append(
                lambda tv, yv: min(
                    abs(complex(yv[2], yv[3]) - yv[0]), abs(complex(yv[2], yv[3]) - yv[1])
                )
                - TYPE3_EPS
            )
            kinds.append(TransitionKind.TYPE_III)
        return events, kinds

    def validity(tv, yv):
        st = _decode(yv, proto, tv)
        return onecut_validity_integral(cfg, tv, st)

    return [validity], [TransitionKind.TYPE_I]


def _cross_type1(cfg, t_ev, state: OneCut, traj: Trajectory):
    pair = state.bzeros
    a1, a2 = state.a1, state.a2
    right_side = pair.lo >= a2
    b_out = pair.hi if right_side else pair.lo
    b_in = pair.lo if right_side else pair.hi
    T = cfg.total_mass
    curv = (
        (T - t_ev)
        * abs(pair.hi - pair.lo)
        * math.sqrt(abs((b_out - a1) * (b_out - a2)))
        / cfg.d_value(b_out)
    )
    if curv <= 0:
        traj.status = "truncated"
        traj.message = f"degenerate curvature at type I point t={t_ev}"
        return state, False
    traj.events.append(TransitionEvent(TransitionKind.TYPE_I, t_ev, b_out))

    def make_seed(dmass, t_new):
        w = math.sqrt(2.0 * dmass / curv)
        if right_side:
            return TwoCut(a1, a2, b_out - w, b_out + w, b_in, t_new)
        return TwoCut(b_out - w, b_out + w, a1, a2, b_in, t_new)

    try:
        new_state = _solve_with_ladder(cfg, t_ev, make_seed, T)
    except SolveError as exc:
        traj.status = "truncated"
        traj.message = str(exc)
        return state, False
    return new_state, True


def _cross_type2(cfg, t_ev, state: TwoCut, traj: Trajectory) -> SupportState:
    rates = rhs_twocut(cfg, t_ev, state)
    gap = state.a3 - state.a2
    rate = rates[2] - rates[1]
    t_c = t_ev + (gap / (2.0 * abs(rate)) if rate < 0 else 0.0)
    x_c = 0.5 * (state.a2 + state.a3)
    traj.events.append(TransitionEvent(TransitionKind.TYPE_II, t_c, x_c))
    T = cfg.total_mass
    b = complex(x_c, 0.0)
    ratio = (cfg.d_value(b) / ((b - state.a1) * (b - state.a4))).real
    split_rate = abs(ratio) / (2.0 * (T - t_c))

    def make_seed(dmass, t_new):
        q0 = math.sqrt(2.0 * split_rate * (t_new - t_c))
        return OneCut(state.a1, state.a4, ConjugatePair(x_c, max(q0, 1e-8)), t_new)

    return _solve_with_ladder(cfg, t_c, make_seed, T)


def _cross_extrema_birth(cfg, t_ev, state: OneCut, traj: Trajectory) -> SupportState:
    pair = state.bzeros
    q = pair.im
    b = complex(pair.re, q)
    T = cfg.total_mass
    # local model: d(Im b)^2/dt = -2 * descent, so touchdown is at
    # t_ev + q^2 / (2 descent), and the real pair separates afterwards
    # with half-width w^2 = 2 * descent * (t - t_c)
    descent = (cfg.d_value(b) / ((b - state.a1) * (b - state.a2))).real / (2.0 * (T - t_ev))
    t_c = t_ev + (q * q / (2.0 * descent) if descent > 0 else 0.0)
    traj.events.append(TransitionEvent(TransitionKind.EXTREMA_BIRTH, t_c, pair.re))

    def make_seed(dmass, t_new):
        w = math.sqrt(max(2.0 * descent * (t_new - t_c), 1e-16))
        return OneCut(state.a1, state.a2, RealPair(pair.re - w, pair.re + w), t_new)

    return _solve_with_ladder(cfg, t_c, make_seed, T)


# ---------------------------------------------------------------------------
# phase diagram assembly
# ---------------------------------------------------------------------------

def _predict_scenario(cfg: ChargeConfig, gamma_interval) -> str:
    """Expected event sequence label: 'a' window, 'b' ring, 'c' outside,
    'd' one-cut heights."""
    from .field import gamma_tilde_window

    region = classify(cfg.beta1, cfg.beta2)
    if region.kind is not RegionKind.OMEGA0:
        return "d"
    window = gamma_tilde_window(cfg.beta1, cfg.beta2)
    if window.gamma_tilde_1 < cfg.gamma < window.gamma_tilde_2:
        return "a"
    if gamma_interval is None:
        from .criticality import find_gamma_interval

        gamma_interval = find_gamma_interval(cfg.beta1, cfg.beta2)
    if gamma_interval.gamma1 < cfg.gamma < gamma_interval.gamma2:
        return "b"
    return "c"


_EXPECTED_KINDS = {
    "a": (
        (TransitionKind.TYPE_I, TransitionKind.TYPE_II),
        (TransitionKind.TYPE_II,),  # equal-minima start: T1 = 0
    ),
    "b": ((TransitionKind.EXTREMA_BIRTH, TransitionKind.TYPE_I, TransitionKind.TYPE_II),),
    "c": ((),),
    "d": ((),),
}


def phase_diagram(
    cfg: ChargeConfig,
    t0: float | None = None,
    t_stop: float | None = None,
    rtol: float = 1e-9,
    gamma_interval=None,
) -> PhaseDiagram:
    """Seed at small mass, evolve to near T, and assemble events and
    phases; the detected sequence must match the scenario predicted from
    the height region and the critical mass ratios."""
    from .solver import seed_small_t

    scenario = _predict_scenario(cfg, gamma_interval)
    state0 = seed_small_t(cfg, t0)
    traj = evolve(cfg, state0, t_stop=t_stop, rtol=rtol)
    if traj.status != "completed":
        raise ScenarioMismatch(f"trajectory truncated: {traj.message}")
    found = tuple(ev.kind for ev in traj.events)
    if found not in _EXPECTED_KINDS[scenario]:
        raise ScenarioMismatch(
            f"scenario ({scenario}) expects events in {_EXPECTED_KINDS[scenario]}, "
            f"detected {found}"
        )
    T = cfg.total_mass
    phases = []
    start_kind = PhaseKind.TWO_CUT if isinstance(state0, TwoCut) else PhaseKind.ONE_CUT
    t_prev = 0.0
    kind = start_kind
    for ev in traj.events:
        if ev.kind in (TransitionKind.TYPE_I, TransitionKind.TYPE_II):
            phases.append(PhaseInterval(kind, t_prev, ev.t))
            t_prev = ev.t
            kind = PhaseKind.TWO_CUT if kind is PhaseKind.ONE_CUT else PhaseKind.ONE_CUT
    phases.append(PhaseInterval(kind, t_prev, T))
    return PhaseDiagram(cfg, tuple(traj.events), tuple(phases))
