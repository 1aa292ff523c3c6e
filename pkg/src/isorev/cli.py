"""Command-line front end: one process, one subcommand, files out.

Subcommands: thresholds, shoot, close, audit, circle.  Surfaces come in
as JSON (a file path or an inline document); results go to the output
directory as JSON/CSV with 17-significant-digit numbers plus a rendered
PNG, so identical inputs produce byte-identical outputs.

Exit codes: 0 success; 1 spec or I/O errors; 2 missing threshold / no
volume match; 3 an audited hypothesis fails; 4 audits only inconclusive.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from . import analysis, figures, shooting
from .dynamics import IntegrationOptions, area_primitive
from .serialize import format_float, write_json
from .surfaces import Surface, SurfaceSpecError, logderiv_fh, make_surface

__all__ = ["main", "build_parser"]


def _positive(text: str) -> float:
    value = float(text)
    if not value > 0.0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isorev",
        description="Constant generalized-curvature curves and isoperimetric "
                    "candidates on surfaces of revolution with radial density")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--surface", required=True,
                       help="surface spec: path to a JSON file or inline JSON")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--rtol", type=_positive, default=1e-10,
                       help="integrator relative tolerance")
        p.add_argument("--atol", type=_positive, default=1e-10,
                       help="integrator absolute tolerance")
        p.add_argument("--event-tol", type=_positive, default=1e-12,
                       help="event location tolerance")
        p.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering")

    p = sub.add_parser("thresholds", help="compute r0, M, r*, V0")
    common(p)

    p = sub.add_parser("shoot", help="integrate one shot from the axis")
    common(p)
    p.add_argument("--r-start", type=_positive, required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--kappa", type=float, help="generalized curvature")
    group.add_argument("--alpha-prime0", type=float,
                       help="alpha'(0); kappa follows from the start radius")

    p = sub.add_parser("close", help="enumerate closed candidates at a volume")
    common(p)
    p.add_argument("--volume", type=_positive, required=True)
    p.add_argument("--scan-start", type=_positive, default=None,
                   help="smallest starting radius scanned (default: derived)")
    p.add_argument("--scan-stop", type=_positive, default=None,
                   help="largest starting radius scanned (default: derived)")
    p.add_argument("--scan-count", type=int, default=4,
                   help="number of scanned starting radii")

    p = sub.add_parser("audit", help="audit existence/boundedness hypotheses")
    common(p)
    p.add_argument("--n", type=int, default=None,
                   help="override the ambient dimension for the audits")

    p = sub.add_parser("circle", help="print kappa_f, P, V of a centered circle")
    common(p)
    p.add_argument("--radius", type=_positive, required=True)

    return parser


def _load_surface(arg: str) -> Surface:
    text = arg.strip()
    if not text.startswith("{"):
        with open(arg, "r", encoding="utf-8") as fh:
            text = fh.read()
    return make_surface(text)


def _options(args) -> IntegrationOptions:
    return IntegrationOptions(rtol=args.rtol, atol=args.atol,
                              event_tol=args.event_tol)


def cmd_thresholds(args) -> int:
    surface = _load_surface(args.surface)
    try:
        report = analysis.thresholds(surface)
    except analysis.OnsetNotFoundError:
        print("no log-convexity onset", file=sys.stderr)
        return 2
    except analysis.BoundaryMinimumError as exc:
        print(f"threshold undefined in the window: {exc}", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    write_json(os.path.join(args.out, "thresholds.json"), report.record())
    print(f"r0 = {format_float(report.r0)}")
    print(f"M = {format_float(report.M)} at r = {format_float(report.minimizer_r)}")
    print(f"r_star = {format_float(report.r_star)}")
    print(f"V0 = {format_float(report.V0)} (weighted volume of the r* ball)")
    print(f"V0_ball_area = {format_float(report.V0_ball_area)} "
          "(unweighted metric area of the r* ball)")
    if not args.no_figures:
        figures.plot_threshold_objective(
            surface, report, os.path.join(args.out, "thresholds.png"))
    return 0


def cmd_shoot(args) -> int:
    surface = _load_surface(args.surface)
    if args.kappa is not None:
        kappa = args.kappa
    else:
        kappa = float(logderiv_fh(surface, args.r_start)) + args.alpha_prime0
    shot = shooting.shoot(surface, args.r_start, kappa, _options(args))
    os.makedirs(args.out, exist_ok=True)
    shot.trajectory.to_csv(os.path.join(args.out, "trajectory.csv"))
    summary = {
        "kappa_f": kappa,
        "r_start": args.r_start,
        "termination": shot.termination,
        "closure_defect": shot.closure_defect,
        "crossing_theta": shot.crossing_theta,
        "alpha_end": shot.alpha_end,
        "encloses_origin": shot.encloses_origin,
        "t_end": shot.trajectory.t_end,
        "P_w": shot.trajectory.end_state.P_w,
        "A_w": shot.trajectory.end_state.A_w,
    }
    write_json(os.path.join(args.out, "shot.json"), summary)
    if shot.closure_defect is None:
        print(f"termination: {shot.termination} (no axis crossing)")
    else:
        print(f"axis crossing at theta = {format_float(shot.crossing_theta)}, "
              f"closure defect = {format_float(shot.closure_defect)}")
    if not args.no_figures:
        from .surfaces import logconvexity_onset
        r0 = logconvexity_onset(surface)
        figures.plot_trajectory(shot.trajectory,
                                os.path.join(args.out, "trajectory.png"), r0=r0)
    return 0


def _default_scan(surface: Surface, volume: float, args) -> shooting.VolumeScan:
    radius = shooting.circle_radius_for_volume(surface, volume)
    lo = args.scan_start if args.scan_start is not None else max(0.5 * radius, 1e-2)
    hi = args.scan_stop if args.scan_stop is not None else 2.0 * radius
    count = max(args.scan_count, 1)
    if count == 1:
        r_starts = [lo]
    else:
        r_starts = [lo + (hi - lo) * i / (count - 1) for i in range(count)]
    return shooting.VolumeScan(r_starts=r_starts)


def cmd_close(args) -> int:
    surface = _load_surface(args.surface)
    opts = _options(args)
    try:
        scan = _default_scan(surface, args.volume, args)
        cands = shooting.candidates_at_volume(surface, args.volume, scan, opts)
    except shooting.VolumeRangeError as exc:
        print(f"no candidate matches the volume: {exc}", file=sys.stderr)
        return 2
    if not cands:
        print("no candidate matches the volume", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    write_json(os.path.join(args.out, "candidates.json"),
               [c.record() for c in cands])
    best = min(cands, key=lambda c: c.P)
    kind = "centered circle" if best.is_circle else (
        "origin-enclosing curve" if best.encloses_origin else "non-enclosing loop")
    print(f"{len(cands)} candidate(s) at V = {format_float(args.volume)}")
    print(f"winner: {kind} with P = {format_float(best.P)}, "
          f"kappa_f = {format_float(best.kappa_f)}, r_start = {format_float(best.r_start)}")
    if not args.no_figures:
        figures.plot_candidates(cands, os.path.join(args.out, "candidates.png"))
    return 0


def cmd_audit(args) -> int:
    surface = _load_surface(args.surface)
    if args.n is not None:
        surface = Surface(surface.h, surface.f,
                          g=None if surface.g is surface.f else surface.g,
                          n=args.n, name=surface.name)
    existence = analysis.audit_existence(surface)
    boundedness = analysis.audit_boundedness(surface)
    os.makedirs(args.out, exist_ok=True)
    write_json(os.path.join(args.out, "audit.json"),
               {"existence": existence.record(),
                "boundedness": boundedness.record()})
    for report in (existence, boundedness):
        print(f"{report.theorem}: {report.overall}")
        for hyp in report.hypotheses:
            print(f"  {hyp.name}: {hyp.verdict} ({hyp.detail})")
    if not args.no_figures:
        figures.plot_profiles(surface, os.path.join(args.out, "audit.png"))
    verdicts = {existence.overall, boundedness.overall}
    if "fails" in verdicts:
        return 3
    if "inconclusive" in verdicts:
        return 4
    return 0


def cmd_circle(args) -> int:
    surface = _load_surface(args.surface)
    radius = args.radius
    kappa = float(logderiv_fh(surface, radius))
    P = 2.0 * math.pi * float(surface.f.value(radius)) * float(surface.h.value(radius))
    V = 2.0 * math.pi * area_primitive(surface, radius)
    print(f"kappa_f = {format_float(kappa)}")
    print(f"P = {format_float(P)}")
    print(f"V = {format_float(V)}")
    return 0


_COMMANDS = {
    "thresholds": cmd_thresholds,
    "shoot": cmd_shoot,
    "close": cmd_close,
    "audit": cmd_audit,
    "circle": cmd_circle,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (SurfaceSpecError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
