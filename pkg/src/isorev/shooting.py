"""Closed symmetric curves by shooting over the generalized curvature.

A shot starts on the positive x-axis at the prescribed radius with
alpha(0) = pi/2 and integrates until the curve returns to the axis
(sin theta = 0 with t > 0).  The closure defect is cos(alpha) there: the
mirror-doubled curve is C1 exactly when the axis meeting is
perpendicular.  Root-finding over kappa_f turns shots into closed
candidates; the shooting parameter is kappa_f itself (not alpha'(0)),
because the two are affinely related via
alpha'(0) = kappa_f - (log fh)'(r_start) and kappa_f makes the centered
circle root explicit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

from .dynamics import (
    CurveState,
    IntegrationOptions,
    Trajectory,
    _fh_primitive,
    alpha_level_event,
    area_primitive,
    axis_crossing_event,
    integrate,
)
from .surfaces import Surface, logderiv_fh

__all__ = [
    "ShotResult",
    "Candidate",
    "VolumeScan",
    "shoot",
    "find_closed",
    "find_closed_all",
    "circle_candidate",
    "circle_radius_for_volume",
    "candidates_at_volume",
    "CLOSURE_TOL",
    "CIRCLE_ALPHA_PRIME_TOL",
    "VolumeRangeError",
]

# |cos alpha| at the axis crossing below which the mirrored doubling is
# accepted as a smooth closed curve.
CLOSURE_TOL = 1e-10

# |alpha'(0)| below which a closed shot is classified as the centered circle.
CIRCLE_ALPHA_PRIME_TOL = 1e-10

# kappa_f bracket for closure searches: centered on (log fh)'(r_start),
# scanned in 64 panels so roots near the circle root are caught.
BRACKET_HALF_WIDTH = 5.0
BRACKET_PANELS = 64


class VolumeRangeError(ValueError):
    """Requested volume exceeds what the probe window can enclose."""


@dataclass(frozen=True)
class ShotResult:
    """Outcome of a single shot from the axis."""
    trajectory: Trajectory
    closure_defect: float | None     # cos(alpha) at the first axis crossing
    crossing_theta: float | None
    crossing_state: CurveState | None
    termination: str

    @property
    def alpha_end(self) -> float | None:
        return None if self.crossing_state is None else self.crossing_state.alpha

    @property
    def encloses_origin(self) -> bool | None:
        """True when the crossing sits at theta = pi (mod 2 pi)."""
        if self.crossing_theta is None:
            return None
        return round(self.crossing_theta / math.pi) % 2 == 1


@dataclass(frozen=True)
class Candidate:
    """Closed symmetric curve assembled by mirror doubling a half-shot."""
    kappa_f: float
    r_start: float
    r_end: float
    encloses_origin: bool
    P: float                      # weighted perimeter of the full curve
    V: float                      # weighted enclosed volume
    is_circle: bool
    trajectory: Trajectory | None = field(default=None, compare=False, repr=False)

    def record(self) -> dict:
        return {
            "kappa_f": self.kappa_f,
            "r_start": self.r_start,
            "r_end": self.r_end,
            "encloses_origin": self.encloses_origin,
            "P": self.P,
            "V": self.V,
            "is_circle": self.is_circle,
        }


@dataclass(frozen=True)
class VolumeScan:
    """Grid for candidates_at_volume: starting radii and enclosure classes."""
    r_starts: Sequence[float]
    enclose_classes: Sequence[bool] = (True, False)
    volume_rtol: float = 1e-6
    max_refine: int = 40


def shoot(surface: Surface, r_start: float, kappa_f: float,
          opts: IntegrationOptions | None = None,
          winding_limit: float | None = None) -> ShotResult:
    """Integrate from (r_start, theta=0, alpha=pi/2) to the first axis return.

    Guard or escape terminations yield an absent closure defect rather
    than an error.  With a winding_limit the shot is also cut off once
    the tangent angle drifts that far from pi/2: closure scans use 2 pi,
    since a curve that winds a full extra turn cannot double into an
    embedded symmetric candidate, but it would burn the whole arclength
    budget before reporting a (useless) crossing.
    """
    opts = opts or IntegrationOptions()
    if r_start <= opts.guard_radius:
        raise ValueError("r_start must exceed the origin guard radius")
    init = CurveState(t=0.0, r=r_start, theta=0.0, alpha=0.5 * math.pi)
    events = [axis_crossing_event(terminal=True)]
    if winding_limit is not None:
        events.append(alpha_level_event(0.5 * math.pi + winding_limit, terminal=True))
        events.append(alpha_level_event(0.5 * math.pi - winding_limit, terminal=True))
    traj = integrate(surface, kappa_f, init, events=events, opts=opts)
    if traj.termination != "axis-crossing":
        return ShotResult(traj, None, None, None, traj.termination)
    cross = traj.end_state
    return ShotResult(
        trajectory=traj,
        closure_defect=math.cos(cross.alpha),
        crossing_theta=cross.theta,
        crossing_state=cross,
        termination=traj.termination,
    )


def _candidate_from_shot(surface: Surface, kappa_f: float, r_start: float,
                         shot: ShotResult) -> Candidate:
    cross = shot.crossing_state
    circle = abs(kappa_f - float(logderiv_fh(surface, r_start))) <= CIRCLE_ALPHA_PRIME_TOL
    return Candidate(
        kappa_f=kappa_f,
        r_start=r_start,
        r_end=cross.r,
        encloses_origin=bool(shot.encloses_origin),
        P=2.0 * cross.P_w,
        V=2.0 * abs(cross.A_w),
        is_circle=circle,
        trajectory=shot.trajectory,
    )


def _classified_defect(surface: Surface, r_start: float, kappa: float,
                       enclose: bool, opts: IntegrationOptions):
    """(defect, shot) when the shot crosses the axis in the requested class."""
    shot = shoot(surface, r_start, kappa, opts, winding_limit=2.0 * math.pi)
    if shot.closure_defect is None or shot.encloses_origin != enclose:
        return None, shot
    return shot.closure_defect, shot


def _refine_root(surface: Surface, r_start: float, enclose: bool,
                 ka: float, fa: float, kb: float, fb: float,
                 opts: IntegrationOptions):
    """Guarded secant on the closure defect inside a sign-change bracket."""
    for _ in range(80):
        # secant proposal, bisection fallback when it leaves the bracket
        denom = fb - fa
        k_mid = kb - fb * (kb - ka) / denom if denom != 0.0 else 0.5 * (ka + kb)
        if not (min(ka, kb) < k_mid < max(ka, kb)):
            k_mid = 0.5 * (ka + kb)
        fm, shot = _classified_defect(surface, r_start, k_mid, enclose, opts)
        if fm is None:
            # shot fell out of the class mid-bracket; bisect blindly
            k_mid = 0.5 * (ka + kb)
            fm, shot = _classified_defect(surface, r_start, k_mid, enclose, opts)
            if fm is None:
                return None
        if abs(fm) <= CLOSURE_TOL:
            return _candidate_from_shot(surface, k_mid, r_start, shot)
        if (fm < 0.0) == (fa < 0.0):
            ka, fa = k_mid, fm
        else:
            kb, fb = k_mid, fm
        if abs(kb - ka) <= 1e-15 * max(1.0, abs(ka)):
            break
    return None


def find_closed_all(surface: Surface, r_start: float, enclose: bool,
                    opts: IntegrationOptions | None = None,
                    half_width: float = BRACKET_HALF_WIDTH,
                    panels: int = BRACKET_PANELS) -> list[Candidate]:
    """All closures found over the kappa_f bracket, ascending in kappa_f.

    The bracket is centered on (log fh)'(r_start) where the centered
    circle root sits; panel endpoints with a defect sign change are
    refined by secant/bisection, and panel endpoints whose defect is
    already below tolerance are accepted directly (surfaces such as the
    unweighted plane close along whole kappa intervals, which leaves no
    sign change to bracket).
    """
    opts = opts or IntegrationOptions()
    # a symmetric candidate has its farthest point at r_start, so shots that
    # wander past it cannot close in this chart; cap escape accordingly
    r_cap_local = min(opts.r_cap, max(1.2 * r_start, r_start + 1.0))
    root_opts = replace(opts, r_cap=r_cap_local)
    scan_opts = replace(root_opts, rtol=max(opts.rtol, 1e-8),
                        atol=max(opts.atol, 1e-8))
    center = float(logderiv_fh(surface, r_start))
    found: list[Candidate] = []

    def note(cand: Candidate | None):
        if cand is None:
            return
        if cand.r_end > cand.r_start + 1e-9:
            return  # start point was not the farthest point: wrong chart
        for c in found:
            if abs(c.kappa_f - cand.kappa_f) < 1e-8:
                return
        found.append(cand)

    # the centered circle is an exact root of the enclosing branch
    if enclose:
        defect, shot = _classified_defect(surface, r_start, center, enclose, root_opts)
        if defect is not None and abs(defect) <= CLOSURE_TOL:
            note(_candidate_from_shot(surface, center, r_start, shot))

    kappas = [center + half_width * (2.0 * i / panels - 1.0) for i in range(panels + 1)]
    defects: list[float | None] = []
    for k in kappas:
        d, shot = _classified_defect(surface, r_start, k, enclose, scan_opts)
        if d is not None and abs(d) <= 1e-6:
            # re-shoot at full tolerance; degenerate families accept directly
            d_full, shot_full = _classified_defect(surface, r_start, k, enclose, root_opts)
            if d_full is not None and abs(d_full) <= CLOSURE_TOL:
                note(_candidate_from_shot(surface, k, r_start, shot_full))
                defects.append(d_full)
                continue
        defects.append(d)

    for i in range(panels):
        fa, fb = defects[i], defects[i + 1]
        if fa is None or fb is None or fa * fb >= 0.0:
            continue
        note(_refine_root(surface, r_start, enclose,
                          kappas[i], fa, kappas[i + 1], fb, root_opts))

    found.sort(key=lambda c: c.kappa_f)
    return found


def find_closed(surface: Surface, r_start: float, enclose: bool,
                opts: IntegrationOptions | None = None,
                half_width: float = BRACKET_HALF_WIDTH,
                panels: int = BRACKET_PANELS) -> Candidate | None:
    """First closed curve of the requested class, or None with no root.

    For the enclosing class this is the centered circle whenever the
    direct probe at kappa_f = (log fh)'(r_start) closes.
    """
    opts = opts or IntegrationOptions()
    if enclose:
        defect, shot = _classified_defect(
            surface, r_start, float(logderiv_fh(surface, r_start)), enclose, opts)
        if defect is not None and abs(defect) <= CLOSURE_TOL:
            return _candidate_from_shot(
                surface, float(logderiv_fh(surface, r_start)), r_start, shot)
    all_found = find_closed_all(surface, r_start, enclose, opts,
                                half_width=half_width, panels=panels)
    return all_found[0] if all_found else None


# ----------------------------------------------------------------------------
# centered circles and volume matching

def circle_candidate(surface: Surface, radius: float,
                     opts: IntegrationOptions | None = None,
                     with_trajectory: bool = True) -> Candidate:
    """The centered circle of the given radius, P and V in closed form."""
    if radius <= 0.0:
        raise ValueError("circle radius must be positive")
    kappa = float(logderiv_fh(surface, radius))
    P = 2.0 * math.pi * float(surface.f.value(radius)) * float(surface.h.value(radius))
    V = 2.0 * math.pi * area_primitive(surface, radius)
    traj = None
    if with_trajectory:
        traj = shoot(surface, radius, kappa, opts).trajectory
    return Candidate(kappa_f=kappa, r_start=radius, r_end=radius,
                     encloses_origin=True, P=P, V=V, is_circle=True,
                     trajectory=traj)


def circle_radius_for_volume(surface: Surface, v_target: float,
                             r_cap: float = 50.0) -> float:
    """Solve 2 pi F(R) = v_target for R by bisection."""
    if not (v_target > 0.0 and math.isfinite(v_target)):
        raise ValueError("target volume must be positive and finite")
    vol_cap = 2.0 * math.pi * area_primitive(surface, r_cap)
    if not math.isfinite(vol_cap):
        # the quadrature ladder saturates before r_cap on overflowing
        # densities; the frontier value is the largest representable volume
        prim = _fh_primitive(surface)
        vol_cap = 2.0 * math.pi * prim.frontier_value
        r_cap = prim.frontier
    if v_target > vol_cap:
        raise VolumeRangeError(
            f"volume {v_target} exceeds 2*pi*F(r_cap) = {vol_cap}")
    lo, hi = 0.0, r_cap
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-15 * max(1.0, mid):
            break
        if 2.0 * math.pi * area_primitive(surface, mid) < v_target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _track_root_to_volume(surface: Surface, cand: Candidate, v_target: float,
                          scan: VolumeScan,
                          opts: IntegrationOptions) -> Candidate | None:
    """Continue a non-circle root in r_start until its volume matches.

    Secant on r_start drives V - v_target to zero; at each new r_start
    the kappa root is re-solved locally, seeded from the previous root.
    """
    def resolve(r_start: float, kappa_seed: float) -> Candidate | None:
        for width in (0.05, 0.2, 0.8):
            ka, kb = kappa_seed - width, kappa_seed + width
            fa, shot_a = _classified_defect(surface, r_start, ka,
                                            cand.encloses_origin, opts)
            fb, _ = _classified_defect(surface, r_start, kb,
                                       cand.encloses_origin, opts)
            if fa is None or fb is None:
                continue
            if abs(fa) <= CLOSURE_TOL:
                return _candidate_from_shot(surface, ka, r_start, shot_a)
            if fa * fb < 0.0:
                return _refine_root(surface, r_start, cand.encloses_origin,
                                    ka, fa, kb, fb, opts)
        return None

    r0, c0 = cand.r_start, cand
    e0 = c0.V - v_target
    if abs(e0) <= scan.volume_rtol * v_target:
        return c0
    r1 = r0 * (1.0 + 0.05 * (1.0 if e0 < 0.0 else -1.0))
    for _ in range(scan.max_refine):
        c1 = resolve(r1, c0.kappa_f)
        if c1 is None:
            return None
        e1 = c1.V - v_target
        if abs(e1) <= scan.volume_rtol * v_target:
            return c1
        if e1 == e0:
            return None
        r_next = r1 - e1 * (r1 - r0) / (e1 - e0)
        if not r_next > 1e-6:
            return None
        # damp wild secant jumps
        if abs(r_next - r1) > 0.5 * max(1.0, r1):
            r_next = r1 + 0.5 * math.copysign(max(1.0, r1), r_next - r1)
        r0, e0, c0 = r1, e1, c1
        r1 = r_next
    return None


def candidates_at_volume(surface: Surface, v_target: float,
                         scan: VolumeScan,
                         opts: IntegrationOptions | None = None) -> list[Candidate]:
    """Closed candidates whose weighted volume matches v_target.

    Always contains the centered circle solving 2 pi F(R) = v_target;
    the scan grid contributes any non-circle closures whose volume can be
    driven onto the target by refining r_start.  Duplicates (kappa_f and
    r_start both within 1e-8) are dropped and the result is sorted by
    (enclosure class, r_start) with the centered circle first.
    """
    opts = opts or IntegrationOptions()
    out: list[Candidate] = []

    radius = circle_radius_for_volume(surface, v_target, r_cap=opts.r_cap)
    out.append(circle_candidate(surface, radius, opts))

    extras: list[Candidate] = []
    for enclose in scan.enclose_classes:
        for r_start in scan.r_starts:
            for root in find_closed_all(surface, r_start, enclose, opts):
                if root.is_circle:
                    continue  # the centered-circle family is branch one
                matched = _track_root_to_volume(surface, root, v_target, scan, opts)
                if matched is not None:
                    extras.append(matched)

    extras.sort(key=lambda c: (not c.encloses_origin, c.r_start, c.kappa_f))
    for cand in extras:
        dup = any(abs(cand.kappa_f - c.kappa_f) < 1e-8
                  and abs(cand.r_start - c.r_start) < 1e-8 for c in out)
        if not dup:
            out.append(cand)
    return out
