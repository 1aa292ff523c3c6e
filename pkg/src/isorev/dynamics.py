"""Constant generalized-curvature dynamics on a weighted surface of revolution.

State along an arclength-parametrized curve is (r, theta, alpha) plus two
accumulators: weighted length P_w = int f(r) dt and signed weighted area
A_w = int F(r) theta' dt, where F(r) = int_0^r f(s) h(s) ds.  alpha is the
counterclockwise angle from the radial direction to the tangent, kept
unwrapped so range checks on [pi/2, 3pi/2] are meaningful.

The right-hand side is

    r'     = cos(alpha)
    theta' = sin(alpha) / h(r)
    alpha' = kappa_f - (log fh)'(r) sin(alpha)

which keeps the generalized curvature kappa_f constant by construction.
Integration uses an embedded Dormand-Prince 4(5) pair with a quartic
dense-output polynomial; events are located by bisection on the dense
output down to |event function| <= 1e-12.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from .surfaces import Surface, logderiv_fh

__all__ = [
    "CurveState",
    "CurveJet2",
    "Trajectory",
    "IntegrationOptions",
    "Event",
    "axis_crossing_event",
    "alpha_level_event",
    "r_level_event",
    "curvature_polar",
    "curvature_alpha",
    "generalized_curvature",
    "jet_from_alpha",
    "ode_rhs",
    "area_primitive",
    "metric_area_primitive",
    "integrate",
    "GUARD_RADIUS",
    "QuadratureError",
    "StepSizeUnderflow",
    "UnitSpeedError",
]

# theta' = sin(alpha)/h(r) is singular at the origin; trajectories stop here
# with the origin-guard tag instead of attempting to pass through.
GUARD_RADIUS = 1e-8

# Terminate outward runs before fh overflows float range (log threshold).
_LOG_OVERFLOW = 600.0


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach its panel tolerance."""


class StepSizeUnderflow(RuntimeError):
    """The adaptive integrator drove the step size below representability."""


class UnitSpeedError(ValueError):
    """A curve jet violates r'^2 + h^2 theta'^2 = 1 beyond tolerance."""


@dataclass(frozen=True)
class CurveState:
    """Snapshot of the ODE state at arclength t."""
    t: float
    r: float
    theta: float
    alpha: float
    P_w: float = 0.0
    A_w: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.theta, self.alpha, self.P_w, self.A_w])


@dataclass(frozen=True)
class CurveJet2:
    """Second-order arclength jet (r, r', r'', theta', theta'') at one point."""
    r: float
    r_t: float
    r_tt: float
    theta_t: float
    theta_tt: float


@dataclass(frozen=True)
class IntegrationOptions:
    rtol: float = 1e-10
    atol: float = 1e-10
    max_arclength: float = 200.0
    r_cap: float = 50.0
    guard_radius: float = GUARD_RADIUS
    event_tol: float = 1e-12
    max_steps: int = 500_000


@dataclass(frozen=True)
class Event:
    """Scalar event g(t, y); a sign change of g during a step fires it."""
    tag: str
    fn: Callable[[float, np.ndarray], float]
    terminal: bool = True
    direction: int = 0  # +1 rising only, -1 falling only, 0 either


def axis_crossing_event(terminal: bool = True) -> Event:
    """sin(theta) = 0 with t > 0: the curve returns to the symmetry axis."""
    return Event("axis-crossing", lambda t, y: math.sin(y[1]), terminal=terminal)


def alpha_level_event(level: float, terminal: bool = False) -> Event:
    return Event(f"alpha-level:{level:g}", lambda t, y: y[2] - level,
                 terminal=terminal)


def r_level_event(level: float, terminal: bool = False) -> Event:
    return Event(f"r-level:{level:g}", lambda t, y: y[0] - level,
                 terminal=terminal)


# ----------------------------------------------------------------------------
# curvature formulas

def curvature_polar(surface: Surface, jet: CurveJet2) -> float:
    """Geodesic curvature from a polar-coordinate jet.

    kappa = h^2 h' theta'^3 + 2 h' r'^2 theta' + h (r' theta'' - theta' r'')
    for a unit-speed jet; refuses jets off the unit-speed constraint.
    """
    hv = float(surface.h.value(jet.r))
    speed2 = jet.r_t ** 2 + hv * hv * jet.theta_t ** 2
    if abs(speed2 - 1.0) > 1e-8:
        raise UnitSpeedError(f"jet violates unit speed: r'^2 + h^2 theta'^2 = {speed2!r}")
    hp = float(surface.h.dlog(jet.r)) * hv
    return (hv * hv * hp * jet.theta_t ** 3
            + 2.0 * hp * jet.r_t ** 2 * jet.theta_t
            + hv * (jet.r_t * jet.theta_tt - jet.theta_t * jet.r_tt))


def curvature_alpha(surface: Surface, r: float, alpha: float,
                    alpha_prime: float) -> float:
    """Geodesic curvature in angle form: (h'/h) sin(alpha) + alpha'."""
    if r <= 0.0:
        raise ValueError("curvature_alpha requires r > 0")
    return float(surface.h.dlog(r)) * math.sin(alpha) + alpha_prime


def generalized_curvature(surface: Surface, r: float, alpha: float,
                          alpha_prime: float) -> float:
    """kappa_f = (log fh)'(r) sin(alpha) + alpha'; constant along solutions."""
    if r <= 0.0:
        raise ValueError("generalized_curvature requires r > 0")
    return float(logderiv_fh(surface, r)) * math.sin(alpha) + alpha_prime


def jet_from_alpha(surface: Surface, r: float, alpha: float,
                   alpha_prime: float) -> CurveJet2:
    """Reconstruct the unit-speed polar jet from (r, alpha, alpha')."""
    hv = float(surface.h.value(r))
    hl = float(surface.h.dlog(r))
    s, c = math.sin(alpha), math.cos(alpha)
    return CurveJet2(
        r=r,
        r_t=c,
        r_tt=-s * alpha_prime,
        theta_t=s / hv,
        theta_tt=c * alpha_prime / hv - s * c * hl / hv,
    )


# ----------------------------------------------------------------------------
# area primitive F(r) = int_0^r f h, with per-surface memoized panels

_PANEL_DEG = 24

# Interpolation on Chebyshev extrema nodes u_k = cos(pi k / N): coefficient
# matrix of the discrete cosine transform, built once.
def _cheb_coef_matrix(n: int) -> np.ndarray:
    k = np.arange(n + 1)
    M = np.cos(np.pi * np.outer(k, k) / n) * (2.0 / n)
    M[:, 0] *= 0.5
    M[:, -1] *= 0.5
    M[0, :] *= 0.5
    M[-1, :] *= 0.5
    return M

_PANEL_COEF = _cheb_coef_matrix(_PANEL_DEG)
_PANEL_NODES = np.cos(np.pi * np.arange(_PANEL_DEG + 1) / _PANEL_DEG)

# Values near float max make the fit meaningless; stop the ladder there and
# report the integral as infinite beyond.
_VALUE_SATURATION = 1e280


def _clenshaw(u: float, c: list[float]) -> float:
    b1 = b2 = 0.0
    two_u = 2.0 * u
    for k in range(len(c) - 1, 0, -1):
        b1, b2 = c[k] + two_u * b1 - b2, b1
    return c[0] + u * b1 - b2


class _CumulativePrimitive:
    """Cumulative integral of a smooth positive integrand from 0.

    The axis [0, inf) is covered lazily by panels carrying a Chebyshev
    antiderivative; a panel whose coefficient tail exceeds tolerance is
    bisected.  Evaluation is a panel lookup plus one Clenshaw recurrence,
    so repeated calls inside the ODE right-hand side stay cheap.
    """

    def __init__(self, integrand: Callable[[np.ndarray], np.ndarray]):
        self.integrand = integrand
        self.ends: list[float] = []      # right edge of each panel
        self.starts: list[float] = []    # left edge of each panel
        self.bases: list[float] = []     # cumulative integral at panel start
        self.coeffs: list[list[float]] = []  # antiderivative Chebyshev series
        self.frontier = 0.0
        self.frontier_value = 0.0
        self.saturated = False           # integrand overflowed at the frontier
        self._next_width = 0.125

    def _build_panel(self, a: float, width: float) -> bool:
        """Append panels covering [a, a+width]; False when overflow halts."""
        stack = [(a, a + width)]
        while stack:
            lo, hi = stack.pop()
            half = 0.5 * (hi - lo)
            mid = 0.5 * (hi + lo)
            # keep nodes off r = 0 exactly: profiles are defined on (0, inf)
            # and products like sinh(r)/r have removable singularities there
            nodes = np.maximum(mid + half * _PANEL_NODES, 1e-300)
            vals = np.asarray(self.integrand(nodes), float)
            scale = float(np.max(np.abs(vals))) if vals.size else 0.0
            if not np.all(np.isfinite(vals)) or scale > _VALUE_SATURATION:
                self.saturated = True
                return False
            # normalized Chebyshev interpolation; tail gauges the local error.
            # Exponentially large values carry argument-rounding jitter of
            # about eps*log(value), which caps the resolvable tail.
            c = _PANEL_COEF @ (vals / max(scale, 1e-300))
            tail = float(np.max(np.abs(c[-3:])))
            noise = 1e-14 * max(1.0, 0.05 * abs(math.log(max(scale, 1e-300))))
            if tail > noise and hi - lo > 1e-9 * max(1.0, abs(lo)):
                stack.append((mid, hi))
                stack.append((lo, mid))
                continue
            anti = _cheb.chebint(c * max(scale, 1e-300), scl=half)
            anti[0] -= _cheb.chebval(-1.0, anti)
            self.starts.append(lo)
            self.ends.append(hi)
            self.bases.append(self.frontier_value)
            self.coeffs.append([float(x) for x in anti])
            self.frontier = hi
            self.frontier_value += _clenshaw(1.0, self.coeffs[-1])
        return True

    def extend_to(self, r: float) -> None:
        guard = 0
        while self.frontier < r and not self.saturated:
            width = min(self._next_width, max(r - self.frontier, 1e-12))
            before = len(self.ends)
            if not self._build_panel(self.frontier, width):
                break
            # widen quickly while panels come out clean
            if len(self.ends) == before + 1:
                self._next_width = min(self._next_width * 2.0, 2.0)
            else:
                self._next_width = max(self._next_width * 0.5, 1e-6)
            guard += 1
            if guard > 200_000:
                raise QuadratureError("quadrature ladder failed to converge")

    def __call__(self, r: float) -> float:
        if r < 0.0:
            raise ValueError("area primitive requires r >= 0")
        if r == 0.0:
            return 0.0
        if r > self.frontier:
            self.extend_to(r)
            if r > self.frontier:
                return math.inf   # saturated before reaching r
        i = bisect.bisect_left(self.ends, r)
        if i >= len(self.ends):
            i = len(self.ends) - 1
        lo, hi = self.starts[i], self.ends[i]
        u = 2.0 * (r - lo) / (hi - lo) - 1.0
        return self.bases[i] + _clenshaw(u, self.coeffs[i])


def _fh_primitive(surface: Surface) -> _CumulativePrimitive:
    prim = surface.quad_cache.get("F_fh")
    if prim is None:
        f, h = surface.f, surface.h
        prim = _CumulativePrimitive(lambda x: f.value(x) * h.value(x))
        surface.quad_cache["F_fh"] = prim
    return prim


def _h_primitive(surface: Surface) -> _CumulativePrimitive:
    prim = surface.quad_cache.get("F_h")
    if prim is None:
        h = surface.h
        prim = _CumulativePrimitive(lambda x: h.value(x))
        surface.quad_cache["F_h"] = prim
    return prim


def area_primitive(surface: Surface, r: float) -> float:
    """F(r) = int_0^r f(s) h(s) ds, absolute error <= 1e-12 (1 + F(r))."""
    return _fh_primitive(surface)(r)


def metric_area_primitive(surface: Surface, r: float) -> float:
    """Unweighted variant int_0^r h(s) ds (ball area over 2 pi)."""
    return _h_primitive(surface)(r)


# ----------------------------------------------------------------------------
# right-hand side

def ode_rhs(surface: Surface, kappa_f: float, state: CurveState,
            guard_radius: float = GUARD_RADIUS) -> tuple[float, float, float, float, float]:
    """(r', theta', alpha', P_w', A_w') at the given state."""
    if state.r <= guard_radius:
        raise ValueError(f"state at or below the origin guard r = {guard_radius}")
    r, alpha = state.r, state.alpha
    s = math.sin(alpha)
    hv = float(surface.h.value(r))
    theta_t = s / hv
    return (
        math.cos(alpha),
        theta_t,
        kappa_f - float(logderiv_fh(surface, r)) * s,
        float(surface.f.value(r)),
        area_primitive(surface, r) * theta_t,
    )


# ----------------------------------------------------------------------------
# Dormand-Prince 5(4) with quartic dense output

_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_DP_A = (
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
)
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_DP_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                  -17253 / 339200, 22 / 525, -1 / 40])
_DP_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


class Trajectory:
    """Integrated curve with dense output, events and accumulators.

    ``samples`` lists the state at every accepted step (first entry is the
    initial state, last the termination state).  ``state(t)`` interpolates
    with the per-step quartic dense polynomial; ``derivative(t)``
    differentiates it.
    """

    def __init__(self, surface: Surface, kappa_f: float):
        self.surface = surface
        self.kappa_f = kappa_f
        self.events: list[tuple[str, float, CurveState]] = []
        self.termination: str = "step-limit"
        self._t0: list[float] = []
        self._h: list[float] = []
        self._y0: list[np.ndarray] = []
        self._Q: list[np.ndarray] = []
        self._t_end: float = 0.0
        self._y_end: np.ndarray | None = None

    # -- dense output ------------------------------------------------------
    def _locate(self, t: float) -> int:
        i = bisect.bisect_right(self._t0, t) - 1
        return min(max(i, 0), len(self._t0) - 1)

    def state_array(self, t: float) -> np.ndarray:
        if not self._t0:
            raise ValueError("empty trajectory")
        t = min(max(t, self._t0[0]), self._t_end)
        i = self._locate(t)
        x = (t - self._t0[i]) / self._h[i]
        px = np.array([x, x * x, x ** 3, x ** 4])
        return self._y0[i] + self._h[i] * (self._Q[i] @ px)

    def derivative(self, t: float) -> np.ndarray:
        """dy/dt of the dense polynomial (not a fresh RHS evaluation)."""
        t = min(max(t, self._t0[0]), self._t_end)
        i = self._locate(t)
        x = (t - self._t0[i]) / self._h[i]
        dpx = np.array([1.0, 2.0 * x, 3.0 * x * x, 4.0 * x ** 3])
        return self._Q[i] @ dpx

    def state(self, t: float) -> CurveState:
        y = self.state_array(t)
        return CurveState(t, *map(float, y))

    @property
    def t_end(self) -> float:
        return self._t_end

    @property
    def end_state(self) -> CurveState:
        return CurveState(self._t_end, *map(float, self._y_end))

    @property
    def samples(self) -> list[CurveState]:
        if not self._t0:
            return []
        out = [CurveState(self._t0[0], *map(float, self._y0[0]))]
        for t0, h in zip(self._t0, self._h):
            t1 = t0 + h
            if t1 > self._t_end:
                break
            out.append(self.state(t1))
        if out[-1].t < self._t_end:
            out.append(self.end_state)
        return out

    def dense_times(self, per_step: int = 1) -> np.ndarray:
        """Accepted-step times, optionally subdivided per step."""
        ts = [self._t0[0]]
        for t0, h in zip(self._t0, self._h):
            t1 = min(t0 + h, self._t_end)
            for j in range(1, per_step + 1):
                ts.append(t0 + (t1 - t0) * j / per_step)
            if t1 >= self._t_end:
                break
        return np.unique(np.array(ts))

    # -- export -------------------------------------------------------------
    def to_csv(self, path) -> None:
        """Write `t,r,theta,alpha,P_w,A_w`, one row per accepted step."""
        from .serialize import format_float
        rows = ["t,r,theta,alpha,P_w,A_w"]
        for s in self.samples:
            rows.append(",".join(format_float(v) for v in
                                 (s.t, s.r, s.theta, s.alpha, s.P_w, s.A_w)))
        text = "\n".join(rows) + "\n"
        if hasattr(path, "write"):
            path.write(text)
        else:
            with open(path, "w", encoding="ascii", newline="\n") as fh:
                fh.write(text)


def _effective_escape(surface: Surface, r_lo: float, r_cap: float) -> float:
    """Escape radius, pulled in so log(fh) stays below overflow range."""
    def logfh(r):
        return float(surface.f.logvalue(r)) + float(surface.h.logvalue(r))
    if logfh(r_cap) <= _LOG_OVERFLOW:
        return r_cap
    lo = max(r_lo, 1e-6)
    if logfh(lo) > _LOG_OVERFLOW:
        return lo
    hi = r_cap
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-9 * max(1.0, mid):
            break
        if logfh(mid) > _LOG_OVERFLOW:
            hi = mid
        else:
            lo = mid
    return lo


def integrate(surface: Surface, kappa_f: float, init: CurveState,
              events: Sequence[Event] = (),
              opts: IntegrationOptions | None = None) -> Trajectory:
    """Integrate the constant-kappa_f system until a terminal event.

    Built-in terminal guards: origin guard at r = opts.guard_radius and
    escape at r = min(opts.r_cap, overflow radius of fh).  Reaching
    max_arclength (or the step budget) terminates with tag "step-limit";
    guard and escape are normal tagged outcomes, not errors.
    """
    opts = opts or IntegrationOptions()
    if init.r <= opts.guard_radius:
        raise ValueError("initial radius is at or below the origin guard")

    r_escape = _effective_escape(surface, init.r, opts.r_cap)
    all_events = list(events) + [
        Event("origin-guard", lambda t, y: y[0] - opts.guard_radius,
              terminal=True, direction=-1),
        Event("escape", lambda t, y: y[0] - r_escape, terminal=True, direction=+1),
    ]

    f_val, h_val = surface.f.value_s, surface.h.value_s
    m_f, m_h = surface.f.dlog_s, surface.h.dlog_s
    fprim = _fh_primitive(surface)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        r, alpha = y[0], y[2]
        s = math.sin(alpha)
        theta_t = s / h_val(r)
        return np.array([
            math.cos(alpha),
            theta_t,
            kappa_f - (m_f(r) + m_h(r)) * s,
            f_val(r),
            fprim(r) * theta_t,
        ])

    traj = Trajectory(surface, kappa_f)
    t = init.t
    t_final = init.t + opts.max_arclength
    y = init.as_array()
    k1 = rhs(t, y)
    g_prev = [ev.fn(t, y) for ev in all_events]
    t_start = t

    # initial step from the dynamics scale
    scale = opts.atol + opts.rtol * np.abs(y)
    d0 = math.sqrt(float(np.mean((y / scale) ** 2)))
    d1 = math.sqrt(float(np.mean((k1 / scale) ** 2)))
    h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
    h = min(h, opts.max_arclength)

    K = np.empty((7, 5))
    done = False
    steps = 0
    while not done:
        steps += 1
        if steps > opts.max_steps:
            traj.termination = "step-limit"
            break
        # never outrun the axis-crossing cadence: sin(theta) flips each
        # pi*h(r) of arclength when alpha ~ pi/2
        h_cap = max(0.5, 1.5 * h_val(y[0]))
        h = min(h, h_cap, t_final - t)
        if h <= 1e-14 * max(1.0, abs(t)):
            if t_final - t <= 1e-12 * max(1.0, abs(t)):
                traj.termination = "step-limit"
                break
            raise StepSizeUnderflow(f"step size underflow at t = {t}")

        K[0] = k1
        err_norm = math.inf
        ok = True
        for i in range(1, 6):
            yi = y + h * (K[:i].T @ _DP_A[i])
            if yi[0] <= 0.0:           # radial blow-through, force rejection
                ok = False
                break
            K[i] = rhs(t + _DP_C[i] * h, yi)
        if ok:
            y_new = y + h * (K[:6].T @ _DP_B)
            if y_new[0] <= 0.0:
                ok = False
            else:
                K[6] = rhs(t + h, y_new)
                err = h * (K.T @ _DP_E)
                sc = opts.atol + opts.rtol * np.maximum(np.abs(y), np.abs(y_new))
                with np.errstate(invalid="ignore", over="ignore"):
                    err_norm = math.sqrt(float(np.mean((err / sc) ** 2)))
                ok = math.isfinite(err_norm) and err_norm <= 1.0

        if not ok:
            h *= max(0.1, 0.9 * err_norm ** -0.2) if math.isfinite(err_norm) else 0.5
            continue

        # accept: dense polynomial for this step
        Q = K.T @ _DP_P
        traj._t0.append(t)
        traj._h.append(h)
        traj._y0.append(y.copy())
        traj._Q.append(Q)
        traj._t_end = t + h
        traj._y_end = y_new.copy()

        # event sweep on [t, t+h]
        t1 = t + h
        fired: list[tuple[float, int]] = []
        for iev, ev in enumerate(all_events):
            g0, g1 = g_prev[iev], ev.fn(t1, y_new)
            crossed = False
            if g0 == 0.0:
                crossed = False     # fired at the previous endpoint (or t=0 seed)
            elif g1 == 0.0 or (g0 < 0.0 < g1) or (g0 > 0.0 > g1):
                rising = g0 < 0.0 or (g0 == 0.0 and g1 > 0.0)
                if ev.direction == 0 or (ev.direction > 0) == rising:
                    crossed = True
            if crossed:
                a, b, ga = t, t1, g0
                tm, gm = b, g1
                for _ in range(200):
                    tm = 0.5 * (a + b)
                    gm = ev.fn(tm, traj.state_array(tm))
                    if abs(gm) <= opts.event_tol or (b - a) <= 1e-15 * max(1.0, abs(tm)):
                        break
                    if (gm < 0.0) == (ga < 0.0):
                        a, ga = tm, gm
                    else:
                        b = tm
                fired.append((tm, iev))
            g_prev[iev] = g1

        fired.sort()
        terminal_hit = None
        for t_ev, iev in fired:
            ev = all_events[iev]
            st = CurveState(t_ev, *map(float, traj.state_array(t_ev)))
            traj.events.append((ev.tag, t_ev, st))
            if ev.terminal:
                terminal_hit = (t_ev, ev.tag)
                break
        if terminal_hit is not None:
            t_ev, tag = terminal_hit
            traj._t_end = t_ev
            traj._y_end = traj.state_array(t_ev)
            traj.termination = tag
            done = True
            break

        t, y, k1 = t1, y_new, K[6].copy()
        if t >= t_final - 1e-14 * max(1.0, abs(t_final)):
            traj.termination = "step-limit"
            break
        h *= min(5.0, max(0.2, 0.9 * (err_norm + 1e-300) ** -0.2))

    # drop dense segments past the termination time
    while len(traj._t0) > 1 and traj._t0[-1] >= traj._t_end:
        traj._t0.pop(); traj._h.pop(); traj._y0.pop(); traj._Q.pop()
    return traj
