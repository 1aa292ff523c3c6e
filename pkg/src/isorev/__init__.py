"""Isoperimetric candidate curves on surfaces of revolution with density.

The package splits along the natural pipeline: ``surfaces`` defines
radial profiles with exact log-derivatives, ``dynamics`` integrates the
constant generalized-curvature system, ``shooting`` closes symmetric
curves by root-finding over the curvature, ``analysis`` evaluates the
critical thresholds and theorem-hypothesis audits, and ``cli`` wraps it
all for batch runs.
"""

from .analysis import (
    AuditReport,
    BoundaryMinimumError,
    HypothesisVerdict,
    OnsetNotFoundError,
    SliceReport,
    TheoremVerdict,
    ThresholdReport,
    audit_boundedness,
    audit_existence,
    slice_inequality,
    theorem_applies,
    thresholds,
)
from .dynamics import (
    CurveJet2,
    CurveState,
    Event,
    IntegrationOptions,
    Trajectory,
    area_primitive,
    curvature_alpha,
    curvature_polar,
    generalized_curvature,
    integrate,
    jet_from_alpha,
    metric_area_primitive,
    ode_rhs,
)
from .shooting import (
    Candidate,
    ShotResult,
    VolumeScan,
    candidates_at_volume,
    circle_candidate,
    circle_radius_for_volume,
    find_closed,
    find_closed_all,
    shoot,
)
from .surfaces import (
    RadialFunction,
    Surface,
    SurfaceSpecError,
    logconvexity_onset,
    logderiv_fh,
    make_surface,
)

__version__ = "0.1.0"
