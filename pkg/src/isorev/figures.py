"""Matplotlib renderings written next to the delimited outputs.

Everything draws through the Agg backend so report generation works
headless; each function writes one PNG and closes its figure.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import ThresholdReport
from .dynamics import Trajectory
from .shooting import Candidate
from .surfaces import Surface, logderiv_fh

__all__ = [
    "plot_trajectory",
    "plot_candidates",
    "plot_threshold_objective",
    "plot_profiles",
]

_DPI = 150


def _curve_xy(traj: Trajectory, per_step: int = 6):
    ts = traj.dense_times(per_step)
    rs = np.array([traj.state_array(t)[0] for t in ts])
    thetas = np.array([traj.state_array(t)[1] for t in ts])
    return rs * np.cos(thetas), rs * np.sin(thetas)


def plot_trajectory(traj: Trajectory, path, r0: float | None = None) -> None:
    """Half-curve, its mirror image, and the onset circle if given."""
    fig, ax = plt.subplots(figsize=(6, 6))
    x, y = _curve_xy(traj)
    ax.plot(x, y, color="tab:blue", lw=1.2, label="trajectory")
    ax.plot(x, -y, color="tab:blue", lw=1.2, ls="--", alpha=0.6, label="mirror")
    ax.plot([x[0]], [y[0]], "o", color="tab:green", ms=5, label="start")
    ax.plot([0.0], [0.0], "+", color="black", ms=8)
    if r0 is not None:
        phi = np.linspace(0.0, 2.0 * math.pi, 256)
        ax.plot(r0 * np.cos(phi), r0 * np.sin(phi), color="tab:red",
                lw=0.8, ls=":", label=r"$r_0$")
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_title(f"kappa_f = {traj.kappa_f:.6g}, termination: {traj.termination}")
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)


def plot_candidates(candidates: list[Candidate], path) -> None:
    """All candidate curves in the plane, the winner highlighted."""
    fig, ax = plt.subplots(figsize=(6, 6))
    if candidates:
        best = min(candidates, key=lambda c: c.P)
        for cand in candidates:
            if cand.trajectory is None:
                continue
            x, y = _curve_xy(cand.trajectory)
            is_best = cand is best
            color = "tab:red" if is_best else "tab:blue"
            label = None
            if is_best:
                label = f"min P = {cand.P:.6g}" + (" (centered circle)" if cand.is_circle else "")
            ax.plot(np.concatenate([x, x[::-1]]), np.concatenate([y, -y[::-1]]),
                    color=color, lw=1.6 if is_best else 0.9,
                    alpha=1.0 if is_best else 0.55, label=label)
    ax.plot([0.0], [0.0], "+", color="black", ms=8)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if candidates:
        ax.legend(loc="upper right", fontsize=8)
    ax.set_title(f"{len(candidates)} candidate(s)")
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)


def plot_threshold_objective(surface: Surface, report: ThresholdReport, path) -> None:
    """(log fh)' and the pole objective, with r0, the minimizer and r*."""
    r0, r_cap = report.r0, report.diagnostics.get("r_cap", 50.0)
    r_hi = min(r_cap, max(3.0 * report.r_star, report.r_star + 2.0))
    r = r0 + np.geomspace(1e-6, r_hi - r0, 600)
    slope = np.asarray(logderiv_fh(surface, r))
    objective = slope + 0.5 * math.pi / (r - r0)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(r, slope, color="tab:blue", label=r"$(\log fh)'$")
    ax.plot(r, objective, color="tab:orange", label=r"$(\log fh)' + \pi/2(r-r_0)$")
    ax.axhline(report.M, color="gray", lw=0.8, ls="--", label=f"M = {report.M:.4f}")
    ax.axvline(report.r0, color="tab:red", lw=0.8, ls=":", label=f"$r_0$ = {report.r0:.4f}")
    ax.axvline(report.minimizer_r, color="tab:green", lw=0.8, ls=":",
               label=f"minimizer = {report.minimizer_r:.4f}")
    ax.axvline(report.r_star, color="tab:purple", lw=0.8, ls=":",
               label=f"$r^*$ = {report.r_star:.4f}")
    ax.set_xlabel("r")
    ax.set_ylim(0.0, 3.0 * report.M)
    ax.legend(fontsize=8)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)


def plot_profiles(surface: Surface, path, r_cap: float = 50.0) -> None:
    """log-scale view of the h, f, g profiles used by the audits."""
    r = np.geomspace(1e-3, r_cap, 600)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for prof, name, color in ((surface.h, "h", "tab:blue"),
                              (surface.f, "f", "tab:orange"),
                              (surface.g, "g", "tab:green")):
        ax.plot(r, np.asarray(prof.logvalue(r)), color=color, label=f"log {name}")
    ax.plot(r, np.asarray(surface.f.logvalue(r)) + np.asarray(surface.h.logvalue(r)),
            color="tab:red", ls="--", label="log fh")
    ax.set_xscale("log")
    ax.set_xlabel("r")
    ax.set_ylabel("log value")
    ax.legend(fontsize=8)
    fig.savefig(path, dpi=_DPI, bbox_inches="tight")
    plt.close(fig)
