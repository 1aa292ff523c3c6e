"""Threshold quantities, slice inequality checks, and hypothesis audits.

The threshold pipeline computes, for a surface whose fh is eventually
log-convex and increasing:

    r0      log-convexity onset of fh
    M       inf over r > r0 of (log fh)'(r) + pi / (2 (r - r0))
    r*      the radius > r0 where (log fh)' reaches M
    V0      2 pi F(r*), the weighted volume of the centered ball at r*
    V0_ball 2 pi int_0^r* h, the unweighted metric area of that ball

V0 and V0_ball are reported side by side: the classical threshold for
the exp(r^2) density on the hyperbolic plane is the unweighted ball
area (about 31.098), while the enclosed quantity the solver matches is
weighted.  Applicability tests use the ball-area variant.

Audits check the hypotheses of the existence and boundedness theorems on
finite probe grids with three-valued verdicts: asymptotic hypotheses
cannot be certified from samples, so holds/fails are grid statements and
anything ambiguous is reported inconclusive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import GUARD_RADIUS, area_primitive, metric_area_primitive
from .shooting import Candidate
from .surfaces import R_CAP_DEFAULT, Surface, logconvexity_onset, logderiv_fh

__all__ = [
    "ThresholdReport",
    "ThresholdError",
    "OnsetNotFoundError",
    "BoundaryMinimumError",
    "TheoremVerdict",
    "SliceRow",
    "SliceReport",
    "HypothesisVerdict",
    "AuditReport",
    "thresholds",
    "theorem_applies",
    "slice_inequality",
    "audit_existence",
    "audit_boundedness",
]


class ThresholdError(RuntimeError):
    pass


class OnsetNotFoundError(ThresholdError):
    """fh has no log-convexity onset inside the probe window."""


class BoundaryMinimumError(ThresholdError):
    """The M objective is minimized at the window edge; the true infimum
    may lie beyond r_cap, so no threshold report is produced."""


@dataclass(frozen=True)
class ThresholdReport:
    r0: float
    M: float
    r_star: float
    V0: float            # weighted: 2 pi F(r*)
    V0_ball_area: float  # unweighted metric ball area: 2 pi int_0^r* h
    minimizer_r: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    def record(self) -> dict:
        return {
            "r0": self.r0,
            "M": self.M,
            "r_star": self.r_star,
            "V0": self.V0,
            "V0_ball_area": self.V0_ball_area,
            "minimizer_r": self.minimizer_r,
        }


@dataclass(frozen=True)
class TheoremVerdict:
    holds: bool
    reason: str
    report: ThresholdReport | None = None
    # the circle conclusion is conditional on the farthest boundary
    # component containing the origin
    conditional_on: str = "origin interior to the farthest boundary component"


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def thresholds(surface: Surface, r_cap: float = R_CAP_DEFAULT,
               grid_points: int = 1024) -> ThresholdReport:
    """Compute (r0, M, r*, V0) with solver diagnostics.

    The M objective is scanned on a grid log-spaced in r - r0 (the pole
    side needs resolving), then sharpened by golden-section to 1e-12 in
    r; r* follows by bisection of (log fh)' - M, which is monotone on
    [r0, r_cap] by log-convexity.
    """
    r0 = logconvexity_onset(surface, 1e-3, r_cap)
    if r0 is None:
        raise OnsetNotFoundError("no log-convexity onset in the probe window")

    def objective(r):
        return logderiv_fh(surface, r) + 0.5 * math.pi / (r - r0)

    grid = r0 + np.geomspace(1e-8, r_cap - r0, grid_points)
    vals = np.asarray(objective(grid))
    i_min = int(np.argmin(vals))
    if i_min == grid_points - 1:
        raise BoundaryMinimumError(
            f"objective minimized at the window edge r_cap = {r_cap}; "
            "the true infimum may lie beyond")
    lo = float(grid[max(i_min - 1, 0)])
    hi = float(grid[min(i_min + 1, grid_points - 1)])

    # golden-section refinement to 1e-12 in r
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = float(objective(c)), float(objective(d))
    golden_iters = 0
    while b - a > 1e-12:
        golden_iters += 1
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = float(objective(c))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = float(objective(d))
        if golden_iters > 200:
            break
    minimizer_r = 0.5 * (a + b)
    M = float(objective(minimizer_r))

    # r*: (log fh)'(r) - M is negative at the minimizer and must change
    # sign before r_cap
    def slope_gap(r):
        return float(logderiv_fh(surface, r)) - M

    lo, hi = minimizer_r, r_cap
    g_lo, g_hi = slope_gap(lo), slope_gap(hi)
    if not (g_lo < 0.0 <= g_hi):
        raise BoundaryMinimumError(
            f"(log fh)' never reaches M = {M} inside the window "
            f"(bracket gaps {g_lo}, {g_hi})")
    bracket = (lo, hi, g_lo, g_hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-14 * max(1.0, mid):
            break
        if slope_gap(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    r_star = 0.5 * (lo + hi)

    return ThresholdReport(
        r0=float(r0),
        M=M,
        r_star=r_star,
        V0=2.0 * math.pi * area_primitive(surface, r_star),
        V0_ball_area=2.0 * math.pi * metric_area_primitive(surface, r_star),
        minimizer_r=minimizer_r,
        diagnostics={
            "grid_points": grid_points,
            "golden_iterations": golden_iters,
            "r_star_bracket": [bracket[0], bracket[1]],
            "r_star_bracket_gaps": [bracket[2], bracket[3]],
            "r_cap": r_cap,
        },
    )


def theorem_applies(surface: Surface, volume: float) -> TheoremVerdict:
    """Whether the large-volume circle conclusion applies at this volume.

    Holds when the thresholds exist and volume > V0 (ball-area variant;
    equivalently the centered ball at the prescribed volume reaches past
    r*).  Failure modes fold into the verdict instead of raising.
    """
    try:
        report = thresholds(surface)
    except ThresholdError as exc:
        return TheoremVerdict(False, f"thresholds unavailable: {exc}", None)
    v0 = report.V0_ball_area
    if volume > v0:
        return TheoremVerdict(
            True, f"volume {volume:g} exceeds V0 = {v0:.6g}", report)
    return TheoremVerdict(
        False, f"volume {volume:g} does not exceed V0 = {v0:.6g}", report)


# ----------------------------------------------------------------------------
# slice inequality

@dataclass(frozen=True)
class SliceRow:
    r: float
    boundary_outside: float   # weighted boundary length outside B(r)
    slice_length: float       # weighted length of the spherical slice
    margin: float


@dataclass(frozen=True)
class SliceReport:
    hypotheses_hold: bool
    rows: list[SliceRow]
    holds: bool
    verdict: str              # holds | fails | inconclusive


def _level_crossing_times(cand: Candidate, level: float) -> list[float]:
    """Arclength times where r(t) crosses the level, from dense output."""
    traj = cand.trajectory
    times: list[float] = []
    samples = traj.samples
    for s0, s1 in zip(samples, samples[1:]):
        g0, g1 = s0.r - level, s1.r - level
        if g0 == 0.0 and s0.t == samples[0].t:
            continue
        if g1 == 0.0 or g0 * g1 < 0.0:
            a, b, ga = s0.t, s1.t, g0
            for _ in range(200):
                mid = 0.5 * (a + b)
                gm = float(traj.state_array(mid)[0]) - level
                if abs(gm) <= 1e-13 * max(1.0, level) or b - a <= 1e-15 * max(1.0, b):
                    break
                if (gm < 0.0) == (ga < 0.0):
                    a, ga = mid, gm
                else:
                    b = mid
            times.append(0.5 * (a + b))
    return times


def slice_inequality(candidate: Candidate, r_grid, slack: float = 1e-8) -> SliceReport:
    """Check boundary-outside-ball length against the spherical slice.

    For each level r the weighted boundary length outside B(r),
    P_out(r) = 2 int_{r(t) > r} f dt, must dominate the weighted slice
    S(r) = 2 dtheta_b(r) f(r) h(r), with dtheta_b read off the r-level
    crossings of the stored half-trajectory.  Requires f and fh
    nondecreasing; when that grid check fails the verdict is
    inconclusive and nothing is asserted.
    """
    if candidate.trajectory is None:
        raise ValueError("candidate carries no trajectory")
    surf = candidate.trajectory.surface

    probe = np.geomspace(1e-6, R_CAP_DEFAULT, 512)
    hyp_ok = bool(np.all(np.asarray(surf.f.dlog(probe)) >= -1e-12)
                  and np.all(np.asarray(surf.f.dlog(probe))
                             + np.asarray(surf.h.dlog(probe)) >= -1e-12))

    traj = candidate.trajectory
    end = traj.end_state
    r_lo = min(min(s.r for s in traj.samples), end.r)
    r_hi = candidate.r_start
    total_P = 2.0 * end.P_w

    rows: list[SliceRow] = []
    for level in r_grid:
        level = float(level)
        if level >= r_hi:
            p_out, dtheta = 0.0, 0.0
        elif level <= r_lo:
            p_out = total_P
            dtheta = math.pi if candidate.encloses_origin else 0.0
        else:
            # Segments along t alternate outside/inside B(level), starting
            # outside since r(0) = r_start > level.  The slice angle is the
            # alternating sum of crossing angles; produced candidates have
            # r(t) nonincreasing, so a single crossing is the generic case.
            times = _level_crossing_times(candidate, level)
            p_out, dtheta = 0.0, 0.0
            outside = True
            sign = 1.0
            P_prev = 0.0
            for tc in times:
                st = traj.state(tc)
                if outside:
                    p_out += st.P_w - P_prev
                P_prev = st.P_w
                outside = not outside
                dtheta += sign * st.theta
                sign = -sign
            if outside:  # trajectory ends outside the level
                p_out += end.P_w - P_prev
                dtheta += sign * end.theta
            p_out *= 2.0
        s_len = 2.0 * dtheta * float(surf.f.value(level)) * float(surf.h.value(level))
        rows.append(SliceRow(level, p_out, s_len, p_out - s_len))

    all_hold = all(row.margin >= -slack for row in rows)
    verdict = "inconclusive" if not hyp_ok else ("holds" if all_hold else "fails")
    return SliceReport(hyp_ok, rows, all_hold and hyp_ok, verdict)


# ----------------------------------------------------------------------------
# theorem hypothesis audits

@dataclass(frozen=True)
class HypothesisVerdict:
    name: str
    verdict: str              # holds | fails | inconclusive
    witness_r: float | None
    detail: str

    def record(self) -> dict:
        return {"name": self.name, "verdict": self.verdict,
                "witness_r": self.witness_r, "detail": self.detail}


@dataclass(frozen=True)
class AuditReport:
    theorem: str
    hypotheses: list[HypothesisVerdict]
    overall: str

    def record(self) -> dict:
        return {"theorem": self.theorem,
                "hypotheses": [h.record() for h in self.hypotheses],
                "overall": self.overall}


_AUDIT_GRID_POINTS = 4096
_MONOTONE_SLACK = 1e-12


def _audit_grid(r_cap: float) -> np.ndarray:
    return np.geomspace(GUARD_RADIUS, r_cap, _AUDIT_GRID_POINTS)


def _overall(hyps: list[HypothesisVerdict]) -> str:
    if any(h.verdict == "fails" for h in hyps):
        return "fails"
    if all(h.verdict == "holds" for h in hyps):
        return "holds"
    return "inconclusive"


def _monotone_verdict(name: str, grid: np.ndarray, logslope: np.ndarray) -> HypothesisVerdict:
    """Nondecreasing on the grid, judged through the log-derivative."""
    bad = np.nonzero(logslope < -_MONOTONE_SLACK)[0]
    if bad.size:
        r_bad = float(grid[bad[0]])
        return HypothesisVerdict(name, "fails", r_bad,
                                 f"log-derivative {float(logslope[bad[0]]):.3e} at r = {r_bad:.6g}")
    return HypothesisVerdict(name, "holds", None, "nondecreasing on the grid")


def audit_existence(surface: Surface, r_cap: float = R_CAP_DEFAULT) -> AuditReport:
    """Hypotheses for existence at every volume: h nondecreasing,
    perimeter density g divergent, and f bounded by a multiple of g."""
    grid = _audit_grid(r_cap)
    tail = grid[grid >= r_cap / 10.0]
    h, f, g = surface.h, surface.f, surface.g
    hyps = [_monotone_verdict("h nondecreasing", grid, np.asarray(h.dlog(grid)))]

    # g -> infinity: growth plus a monotone last decade, or a flat tail
    with np.errstate(over="ignore"):
        g_growth = float(g.logvalue(r_cap)) - float(g.logvalue(1.0))
        tail_slope = np.asarray(g.dlog(tail))
    if g_growth > math.log(10.0) and np.all(tail_slope >= -_MONOTONE_SLACK):
        hyps.append(HypothesisVerdict(
            "g diverges", "holds", None,
            f"g grows by a factor {math.exp(min(g_growth, 700.0)):.3g} over the window"))
    elif g_growth <= math.log(10.0) and np.all(tail_slope <= _MONOTONE_SLACK):
        hyps.append(HypothesisVerdict(
            "g diverges", "fails", float(tail[0]),
            "g is bounded on the grid with a non-increasing tail"))
    else:
        hyps.append(HypothesisVerdict(
            "g diverges", "inconclusive", float(tail[0]),
            "finite-window growth is ambiguous"))

    # f <= c g: report the grid ratio maximum as c_est
    with np.errstate(over="ignore"):
        log_ratio = np.asarray(f.logvalue(grid)) - np.asarray(g.logvalue(grid))
        ratio_slope_tail = np.asarray(f.dlog(tail)) - np.asarray(g.dlog(tail))
    c_est = math.exp(float(np.max(log_ratio))) if np.max(log_ratio) < 700.0 else math.inf
    if np.any(ratio_slope_tail > _MONOTONE_SLACK):
        hyps.append(HypothesisVerdict(
            "f <= c g", "inconclusive", float(tail[0]),
            f"f/g still increasing in the last decade; grid c_est = {c_est:.6g}"))
    else:
        hyps.append(HypothesisVerdict(
            "f <= c g", "holds", None, f"grid c_est = {c_est:.6g}"))

    return AuditReport("existence", hyps, _overall(hyps))


def audit_boundedness(surface: Surface, r_cap: float = R_CAP_DEFAULT) -> AuditReport:
    """Hypotheses for boundedness: gh nondecreasing, g^(n/(n-1))/f
    nondecreasing, and divergence of the integral of f^(1/n)."""
    n = surface.n
    if n < 2:
        raise ValueError("boundedness audit needs ambient dimension n >= 2")
    grid = _audit_grid(r_cap)
    tail = grid[grid >= r_cap / 10.0]
    h, f, g = surface.h, surface.f, surface.g
    exponent = n / (n - 1.0)

    hyps = [
        _monotone_verdict("gh nondecreasing", grid,
                          np.asarray(g.dlog(grid)) + np.asarray(h.dlog(grid))),
        _monotone_verdict(f"g^{{{n}/{n - 1}}}/f nondecreasing", grid,
                          exponent * np.asarray(g.dlog(grid)) - np.asarray(f.dlog(grid))),
    ]

    # divergence of int f^(1/n): compare f^(1/n) against c/r on the last
    # decade (holds), or detect integrable decay by chunked ratios (fails)
    with np.errstate(over="ignore"):
        log_f_tail = np.asarray(f.logvalue(tail)) / n
    fit = log_f_tail + np.log(tail)          # log of r * f^(1/n)
    c_fit = math.exp(float(np.min(fit))) if np.min(fit) < 700.0 else math.inf
    if c_fit >= 1e-3:
        hyps.append(HypothesisVerdict(
            "int f^(1/n) diverges", "holds", None,
            f"r f(r)^(1/n) >= {c_fit:.6g} on the last decade"))
    else:
        inner = grid[grid >= 1.0]
        with np.errstate(over="ignore"):
            integrand = np.exp(np.minimum(np.asarray(f.logvalue(inner)) / n, 700.0))
        chunks = np.array_split(np.arange(inner.size), 4)
        parts = [float(np.trapezoid(integrand[c], inner[c])) for c in chunks]
        decaying = all(parts[i + 1] <= 0.5 * parts[i] for i in range(3))
        if decaying:
            hyps.append(HypothesisVerdict(
                "int f^(1/n) diverges", "fails", float(inner[0]),
                "chunked integrals decay geometrically on the grid"))
        else:
            hyps.append(HypothesisVerdict(
                "int f^(1/n) diverges", "inconclusive", float(tail[0]),
                f"tail fit c = {c_fit:.3g} too small to certify divergence"))

    return AuditReport("boundedness", hyps, _overall(hyps))
