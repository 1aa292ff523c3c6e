import math

import pytest

from isorev.dynamics import IntegrationOptions, area_primitive
from isorev.shooting import (
    VolumeRangeError,
    VolumeScan,
    candidates_at_volume,
    circle_candidate,
    circle_radius_for_volume,
    find_closed,
    shoot,
)
from isorev.surfaces import logconvexity_onset, logderiv_fh

R0_BORELL = math.asinh(1.0 / math.sqrt(2.0))


def circle_forms(surface, R):
    P = 2.0 * math.pi * float(surface.f.value(R)) * float(surface.h.value(R))
    V = 2.0 * math.pi * area_primitive(surface, R)
    return P, V


# ----------------------------------------------------------------------------
# shoot

def test_shoot_unit_circle(euclidean_flat):
    shot = shoot(euclidean_flat, 1.0, 1.0)
    assert shot.termination == "axis-crossing"
    assert shot.crossing_theta == pytest.approx(math.pi, abs=1e-9)
    assert abs(shot.closure_defect) <= 1e-12
    assert shot.encloses_origin is True
    assert abs(math.sin(shot.crossing_state.theta)) <= 1e-12


def test_shoot_borell_circle(borell_hyperbolic):
    kappa = float(logderiv_fh(borell_hyperbolic, 2.0))
    shot = shoot(borell_hyperbolic, 2.0, kappa)
    assert shot.crossing_theta == pytest.approx(math.pi, abs=1e-9)
    assert abs(shot.closure_defect) <= 1e-10
    assert shot.crossing_state.r == pytest.approx(2.0, abs=1e-8)


def test_shoot_offset_kappa_reports_nonzero_defect(borell_hyperbolic):
    # the shot winds before returning to the axis; the defect and its sign
    # are pinned by the implementation's own halved-tolerance rerun
    kappa = float(logderiv_fh(borell_hyperbolic, 3.0)) + 1.0
    shot = shoot(borell_hyperbolic, 3.0, kappa)
    assert shot.closure_defect is not None
    assert abs(math.sin(shot.crossing_state.theta)) <= 1e-12
    assert abs(shot.closure_defect) > 1e-3
    rerun = shoot(borell_hyperbolic, 3.0, kappa,
                  IntegrationOptions(rtol=5e-11, atol=5e-11))
    assert math.copysign(1.0, rerun.closure_defect) == math.copysign(1.0, shot.closure_defect)
    assert rerun.closure_defect == pytest.approx(shot.closure_defect, abs=1e-4)


def test_shoot_escape_reports_absent_defect(euclidean_flat):
    # kappa = 0 from alpha = pi/2 is a straight tangent line: no axis return
    shot = shoot(euclidean_flat, 1.0, 0.0)
    assert shot.termination == "escape"
    assert shot.closure_defect is None
    assert shot.crossing_theta is None
    assert shot.alpha_end is None and shot.encloses_origin is None


def test_shoot_rejects_guarded_start(euclidean_flat):
    with pytest.raises(ValueError):
        shoot(euclidean_flat, 1e-9, 1.0)


# ----------------------------------------------------------------------------
# find_closed: circles in closed form

def test_find_closed_euclidean_circles(euclidean_flat):
    for R in (0.5, 1.0, 2.0):
        cand = find_closed(euclidean_flat, R, enclose=True)
        assert cand is not None and cand.is_circle and cand.encloses_origin
        assert cand.kappa_f == pytest.approx(1.0 / R, rel=1e-10)
        assert cand.P == pytest.approx(2.0 * math.pi * R, rel=1e-8)
        assert cand.V == pytest.approx(math.pi * R * R, rel=1e-8)


def test_find_closed_hyperbolic_circles(hyperbolic_flat):
    for R in (0.5, 1.0, 2.0):
        cand = find_closed(hyperbolic_flat, R, enclose=True)
        assert cand is not None and cand.is_circle
        assert cand.kappa_f == pytest.approx(1.0 / math.tanh(R), rel=1e-10)
        assert cand.P == pytest.approx(2.0 * math.pi * math.sinh(R), rel=1e-8)
        assert cand.V == pytest.approx(2.0 * math.pi * (math.cosh(R) - 1.0), rel=1e-8)


def test_circle_closed_form_across_catalog(euclidean_flat, hyperbolic_flat,
                                           exp_euclidean, borell_hyperbolic,
                                           gaussian_euclidean):
    # Borell/gaussian radii stay where the circle's exponential instability
    # keeps the integrated closure defect below the closure tolerance
    cases = [
        (euclidean_flat, (0.5, 1.0, 2.0, 3.0)),
        (hyperbolic_flat, (0.5, 1.0, 2.0, 3.0)),
        (exp_euclidean, (0.5, 1.0, 2.0, 3.0)),
        (borell_hyperbolic, (0.5, 1.0, 1.5, 2.0)),
        (gaussian_euclidean, (0.5, 1.0, 1.5, 2.0)),
    ]
    for surf, radii in cases:
        for R in radii:
            cand = find_closed(surf, R, enclose=True)
            assert cand is not None and cand.is_circle
            P, V = circle_forms(surf, R)
            assert cand.P == pytest.approx(P, rel=1e-8)
            assert cand.V == pytest.approx(V, rel=1e-8)


def test_find_closed_nonenclosing_loop_self_consistency(hyperbolic_flat):
    # metric circles off the origin close at every kappa = coth(rho); the
    # oracle is a re-integration of the found root at 10x tighter tolerance
    cand = find_closed(hyperbolic_flat, 2.0, enclose=False)
    assert cand is not None
    assert not cand.encloses_origin and not cand.is_circle
    assert 0.0 < cand.r_end < cand.r_start
    tight = shoot(hyperbolic_flat, 2.0, cand.kappa_f,
                  IntegrationOptions(rtol=1e-11, atol=1e-11))
    assert tight.termination == "axis-crossing"
    assert 2.0 * tight.crossing_state.P_w == pytest.approx(cand.P, rel=1e-8)
    assert 2.0 * abs(tight.crossing_state.A_w) == pytest.approx(cand.V, rel=1e-8)
    # hyperbolic closed form: the loop is a metric circle of radius rho
    rho = 0.5 * (cand.r_start - cand.r_end)
    assert cand.kappa_f == pytest.approx(1.0 / math.tanh(rho), rel=1e-6)
    assert cand.P == pytest.approx(2.0 * math.pi * math.sinh(rho), rel=1e-6)


def test_find_closed_none_when_no_loop_exists(gaussian_euclidean):
    # exp(r^2) has no off-origin density critical point, so no small
    # non-enclosing loop closes; the search reports absence
    assert find_closed(gaussian_euclidean, 2.0, enclose=False) is None


def test_offset_circles_keep_symmetrization_order(euclidean_circle_family):
    for cand in euclidean_circle_family:
        assert cand.encloses_origin
        assert cand.r_end <= cand.r_start + 1e-9
        assert cand.P > 0.0 and cand.V > 0.0
        # plane circles: kappa = curvature = 1/radius, r_end = 2/kappa - 1
        rho = 1.0 / cand.kappa_f
        assert cand.r_end == pytest.approx(2.0 * rho - 1.0, abs=1e-7)


def test_is_circle_dichotomy(euclidean_circle_family):
    # is_circle exactly when the dense radius pins to r_start
    assert any(c.is_circle for c in euclidean_circle_family)
    assert any(not c.is_circle for c in euclidean_circle_family)
    for cand in euclidean_circle_family:
        drift = max(abs(s.r - cand.r_start) for s in cand.trajectory.samples)
        assert cand.is_circle == (drift <= 1e-6)


def test_alpha_range_lemma_on_enclosing_candidates(euclidean_circle_family):
    # fh = r is nondecreasing, so alpha stays in [pi/2, pi] on the half-curve
    for cand in euclidean_circle_family:
        for s in cand.trajectory.samples:
            assert math.pi / 2 - 1e-9 <= s.alpha <= math.pi + 1e-9


# ----------------------------------------------------------------------------
# candidates at prescribed volume

def test_candidates_at_volume_euclidean(euclidean_flat):
    cands = candidates_at_volume(euclidean_flat, math.pi,
                                 VolumeScan(r_starts=(1.2,), enclose_classes=(True,)))
    circ = [c for c in cands if c.is_circle]
    assert len(circ) == 1
    assert circ[0].r_start == pytest.approx(1.0, abs=1e-9)
    assert circ[0].P == pytest.approx(2.0 * math.pi, rel=1e-9)


def test_candidates_at_volume_hyperbolic(hyperbolic_flat):
    v = 2.0 * math.pi * (math.cosh(1.0) - 1.0)
    cands = candidates_at_volume(hyperbolic_flat, v,
                                 VolumeScan(r_starts=(1.3,), enclose_classes=(True,)))
    circ = [c for c in cands if c.is_circle]
    assert circ[0].r_start == pytest.approx(1.0, abs=1e-9)
    assert circ[0].P == pytest.approx(2.0 * math.pi * math.sinh(1.0), rel=1e-8)


def test_candidates_at_volume_borell(borell_hyperbolic, borell_candidates_v40):
    cands = borell_candidates_v40
    circ = [c for c in cands if c.is_circle]
    assert len(circ) == 1
    assert circ[0].V == pytest.approx(40.0, rel=1e-9)
    r0 = logconvexity_onset(borell_hyperbolic)
    for cand in cands:
        if cand.encloses_origin and not cand.is_circle:
            assert cand.r_end < r0


def test_candidates_at_volume_rejects_excess_volume(borell_hyperbolic, hyperbolic_flat):
    with pytest.raises(VolumeRangeError):
        candidates_at_volume(borell_hyperbolic, 1e300,
                             VolumeScan(r_starts=(2.0,)))
    with pytest.raises(VolumeRangeError):
        candidates_at_volume(hyperbolic_flat, 1e30, VolumeScan(r_starts=(2.0,)))
    with pytest.raises(ValueError):
        circle_radius_for_volume(borell_hyperbolic, float("inf"))


def test_circle_radius_for_volume_inverts_area(borell_hyperbolic):
    R = circle_radius_for_volume(borell_hyperbolic, 40.0)
    assert 2.0 * math.pi * area_primitive(borell_hyperbolic, R) == pytest.approx(
        40.0, rel=1e-12)


def test_circle_candidate_consistency(gaussian_euclidean):
    cand = circle_candidate(gaussian_euclidean, 1.5)
    P, V = circle_forms(gaussian_euclidean, 1.5)
    assert cand.P == pytest.approx(P, rel=1e-14)
    assert cand.V == pytest.approx(V, rel=1e-14)
    assert cand.is_circle and cand.encloses_origin
    assert cand.trajectory is not None
    assert max(abs(s.r - 1.5) for s in cand.trajectory.samples) <= 1e-8


# ----------------------------------------------------------------------------
# first variation: dP/dV equals the drift at the circle radius

def test_first_variation_on_circle_families(euclidean_flat, hyperbolic_flat,
                                            exp_euclidean, borell_hyperbolic,
                                            gaussian_euclidean):
    surfaces = (euclidean_flat, hyperbolic_flat, exp_euclidean,
                borell_hyperbolic, gaussian_euclidean)
    radii = [0.5 + 0.25 * i for i in range(10)]
    for surf in surfaces:
        for R in radii:
            delta = 1e-4 * max(R, 1.0)
            P_hi, V_hi = circle_forms(surf, R + delta)
            P_lo, V_lo = circle_forms(surf, R - delta)
            dP_dV = (P_hi - P_lo) / (V_hi - V_lo)
            assert dP_dV == pytest.approx(float(logderiv_fh(surf, R)), rel=1e-6)


# ----------------------------------------------------------------------------
# near-origin dichotomy sweep

def test_borell_sweep_dichotomy(borell_hyperbolic, borell_enclosing_sweeps):
    # every enclosing closure over the 64-panel bracket is the centered
    # circle or dives below the log-convexity onset; no counterexample
    r0 = logconvexity_onset(borell_hyperbolic)
    kappa_tol = 1e-10
    for r_start, found in borell_enclosing_sweeps.items():
        for cand in found:
            center = float(logderiv_fh(borell_hyperbolic, r_start))
            is_centered = abs(cand.kappa_f - center) <= kappa_tol
            assert is_centered or cand.r_end < r0, (r_start, cand)


def test_monotonicity_lemmas_on_enclosing_candidates(
        borell_hyperbolic, gaussian_euclidean, borell_candidates_v40,
        gaussian_candidates_v30, borell_enclosing_sweeps):
    # alpha in [pi/2, pi], alpha' >= 0 and alpha' nondecreasing wherever
    # r(t) >= r0, on surfaces with fh nondecreasing and log-convex past r0
    groups = [
        (borell_hyperbolic, [c for c in borell_candidates_v40 if c.encloses_origin]
         + [c for found in borell_enclosing_sweeps.values() for c in found]
         + [circle_candidate(borell_hyperbolic, R) for R in (1.0, 1.5, 2.0)]),
        (gaussian_euclidean, [c for c in gaussian_candidates_v30 if c.encloses_origin]
         + [circle_candidate(gaussian_euclidean, R) for R in (1.0, 1.5, 2.0)]),
    ]
    checked = 0
    for surf, cands in groups:
        r0 = logconvexity_onset(surf)
        for cand in cands:
            if not cand.encloses_origin or cand.trajectory is None:
                continue
            kappa = cand.kappa_f
            alpha_primes = []
            for s in cand.trajectory.samples:
                if s.r < r0:
                    continue
                ap = kappa - float(logderiv_fh(surf, s.r)) * math.sin(s.alpha)
                assert math.pi / 2 - 1e-9 <= s.alpha <= math.pi + 1e-9
                assert ap >= -1e-9
                alpha_primes.append(ap)
            assert all(b >= a - 1e-9 for a, b in zip(alpha_primes, alpha_primes[1:]))
            checked += 1
    assert checked >= 8
