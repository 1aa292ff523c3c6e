"""Radial profiles and surfaces of revolution with density.

A surface is the plane in polar coordinates carrying the metric
ds^2 = dr^2 + h(r)^2 dtheta^2, a volume density f(r) > 0 and an optional
separate perimeter density g(r) (defaults to f).  Profiles come from a
small closed catalog (constant, power, sinh, cosh, exp_power, plus
products and finite series of those), so the first and second
derivatives of log(value) are exact closed forms.  Finite differences
never appear in production paths; they are test-only oracles.
"""

from __future__ import annotations

import json
import math
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "SurfaceSpecError",
    "RadialFunction",
    "Surface",
    "constant",
    "power",
    "sinh_profile",
    "cosh_profile",
    "exp_power",
    "product",
    "series",
    "radial_function",
    "make_surface",
    "logderiv_fh",
    "d2log_fh",
    "logconvexity_onset",
    "R_CAP_DEFAULT",
]

# Probe grids and window defaults stop at r = 50: exp-power profiles grow
# past float range not far beyond, and everything of interest lives well
# inside.
R_CAP_DEFAULT = 50.0

# Absolute slack on d2log(fh) at a log-convexity onset; the onset often
# sits on an exact root (e.g. 2 - csch^2 r = 0) where rounding flickers.
TOL_CONVEX = 1e-12


class SurfaceSpecError(ValueError):
    """Raised for unknown profile kinds or out-of-range parameters."""


class RadialFunction:
    """Positive function of r > 0 with exact log-derivatives.

    ``value(r)``, ``dlog(r)`` and ``d2log(r)`` accept scalars or numpy
    arrays.  ``logvalue(r)`` is computed stably where the value itself
    would overflow (e.g. sinh at large r).  The ``*_s`` attributes are
    plain-float closures for ODE hot loops.  Instances are immutable and
    safe to share between threads.
    """

    __slots__ = ("kind", "params", "_value", "_logvalue", "_dlog", "_d2log",
                 "value_s", "dlog_s")

    def __init__(self, kind: str, params: dict,
                 value: Callable, logvalue: Callable,
                 dlog: Callable, d2log: Callable,
                 value_s: Callable | None = None,
                 dlog_s: Callable | None = None):
        self.kind = kind
        self.params = params
        self._value = value
        self._logvalue = logvalue
        self._dlog = dlog
        self._d2log = d2log
        self.value_s = value_s if value_s is not None else (lambda r: float(value(r)))
        self.dlog_s = dlog_s if dlog_s is not None else (lambda r: float(dlog(r)))

    def value(self, r):
        return self._value(r)

    def logvalue(self, r):
        return self._logvalue(r)

    def dlog(self, r):
        """d/dr of log value(r)."""
        return self._dlog(r)

    def d2log(self, r):
        """d^2/dr^2 of log value(r)."""
        return self._d2log(r)

    def __repr__(self):
        return f"RadialFunction(kind={self.kind!r}, params={self.params!r})"


def _require_positive(name: str, x: float) -> float:
    x = float(x)
    if not x > 0.0:
        raise SurfaceSpecError(f"parameter {name!r} must be positive, got {x}")
    return x


def constant(c: float) -> RadialFunction:
    c = _require_positive("value", c)
    logc = math.log(c)
    return RadialFunction(
        "constant", {"value": c},
        value=lambda r: c + 0.0 * np.asarray(r, float),
        logvalue=lambda r: logc + 0.0 * np.asarray(r, float),
        dlog=lambda r: 0.0 * np.asarray(r, float),
        d2log=lambda r: 0.0 * np.asarray(r, float),
        value_s=lambda r: c,
        dlog_s=lambda r: 0.0,
    )


def power(exponent: float, coeff: float = 1.0) -> RadialFunction:
    """coeff * r**exponent; the euclidean metric factor is power(1)."""
    coeff = _require_positive("coeff", coeff)
    k = float(exponent)
    logc = math.log(coeff)
    return RadialFunction(
        "power", {"exponent": k, "coeff": coeff},
        value=lambda r: coeff * np.asarray(r, float) ** k,
        logvalue=lambda r: logc + k * np.log(np.asarray(r, float)),
        dlog=lambda r: k / np.asarray(r, float),
        d2log=lambda r: -k / np.asarray(r, float) ** 2,
        value_s=lambda r: coeff * r ** k,
        dlog_s=lambda r: k / r,
    )


def sinh_profile(scale: float = 1.0) -> RadialFunction:
    """sinh(scale * r); the hyperbolic metric factor is sinh_profile(1)."""
    a = _require_positive("scale", scale)

    def logvalue(r):
        # log sinh x = x + log1p(-exp(-2x)) - log 2, stable for large x
        x = a * np.asarray(r, float)
        return x + np.log1p(-np.exp(-2.0 * x)) - math.log(2.0)

    def d2log(r):
        # -a^2 csch^2(ar) without overflowing sinh at large argument
        x = a * np.asarray(r, float)
        return -a * a * 4.0 * np.exp(-2.0 * x) / np.expm1(-2.0 * x) ** 2

    return RadialFunction(
        "sinh", {"scale": a},
        value=lambda r: np.sinh(a * np.asarray(r, float)),
        logvalue=logvalue,
        dlog=lambda r: a / np.tanh(a * np.asarray(r, float)),
        d2log=d2log,
        value_s=lambda r: math.sinh(a * r),
        dlog_s=lambda r: a / math.tanh(a * r),
    )


def cosh_profile(scale: float = 1.0) -> RadialFunction:
    a = _require_positive("scale", scale)

    def logvalue(r):
        x = a * np.asarray(r, float)
        return x + np.log1p(np.exp(-2.0 * x)) - math.log(2.0)

    def d2log(r):
        x = a * np.asarray(r, float)
        return a * a * 4.0 * np.exp(-2.0 * x) / (1.0 + np.exp(-2.0 * x)) ** 2

    return RadialFunction(
        "cosh", {"scale": a},
        value=lambda r: np.cosh(a * np.asarray(r, float)),
        logvalue=logvalue,
        dlog=lambda r: a * np.tanh(a * np.asarray(r, float)),
        d2log=d2log,
        value_s=lambda r: math.cosh(a * r),
        dlog_s=lambda r: a * math.tanh(a * r),
    )


def exp_power(a: float, p: float) -> RadialFunction:
    """exp(a * r**p) with a > 0 and p >= 1."""
    a = _require_positive("a", a)
    p = float(p)
    if p < 1.0:
        raise SurfaceSpecError(f"exp_power exponent p must be >= 1, got {p}")

    def value_s(r):
        x = a * r ** p
        return math.exp(x) if x < 709.0 else math.inf

    return RadialFunction(
        "exp_power", {"a": a, "p": p},
        value=lambda r: np.exp(a * np.asarray(r, float) ** p),
        logvalue=lambda r: a * np.asarray(r, float) ** p,
        dlog=lambda r: a * p * np.asarray(r, float) ** (p - 1.0),
        d2log=lambda r: a * p * (p - 1.0) * np.asarray(r, float) ** (p - 2.0),
        value_s=value_s,
        dlog_s=lambda r: a * p * r ** (p - 1.0),
    )


def product(factors: Sequence[RadialFunction]) -> RadialFunction:
    """Pointwise product; log-derivatives add exactly."""
    factors = tuple(factors)
    if not factors:
        raise SurfaceSpecError("product requires at least one factor")

    def value(r):
        out = factors[0].value(r)
        for fac in factors[1:]:
            out = out * fac.value(r)
        return out

    def _sum(method):
        def call(r):
            out = getattr(factors[0], method)(r)
            for fac in factors[1:]:
                out = out + getattr(fac, method)(r)
            return out
        return call

    def value_s(r):
        out = 1.0
        for fac in factors:
            out *= fac.value_s(r)
        return out

    def dlog_s(r):
        out = 0.0
        for fac in factors:
            out += fac.dlog_s(r)
        return out

    return RadialFunction(
        "product", {"factors": [f.params | {"kind": f.kind} for f in factors]},
        value=value,
        logvalue=_sum("logvalue"),
        dlog=_sum("dlog"),
        d2log=_sum("d2log"),
        value_s=value_s,
        dlog_s=dlog_s,
    )


# Basis terms allowed inside a series: (value, first derivative, second
# derivative), all plain derivatives of the value rather than of its log.
def _series_basis(spec: dict):
    kind = spec.get("kind")
    if kind == "power":
        k = float(spec.get("exponent", 1.0))
        return (lambda r: r ** k,
                lambda r: k * r ** (k - 1.0),
                lambda r: k * (k - 1.0) * r ** (k - 2.0))
    if kind == "sinh":
        a = _require_positive("scale", spec.get("scale", 1.0))
        return (lambda r: np.sinh(a * r),
                lambda r: a * np.cosh(a * r),
                lambda r: a * a * np.sinh(a * r))
    if kind == "cosh":
        a = _require_positive("scale", spec.get("scale", 1.0))
        return (lambda r: np.cosh(a * r),
                lambda r: a * np.sinh(a * r),
                lambda r: a * a * np.cosh(a * r))
    if kind == "exp_power":
        a = _require_positive("a", spec.get("a", 1.0))
        p = float(spec.get("p", 1.0))
        if p < 1.0:
            raise SurfaceSpecError(f"exp_power exponent p must be >= 1, got {p}")
        def d1(r):
            return a * p * r ** (p - 1.0) * np.exp(a * r ** p)
        def d2(r):
            u = a * p * r ** (p - 1.0)
            return (a * p * (p - 1.0) * r ** (p - 2.0) + u * u) * np.exp(a * r ** p)
        return (lambda r: np.exp(a * r ** p), d1, d2)
    raise SurfaceSpecError(f"unknown series basis kind {kind!r}")


def series(terms: Sequence[tuple[float, dict]]) -> RadialFunction:
    """Finite sum  sum_j c_j * b_j(r)  with c_j > 0 and catalog bases.

    Positive coefficients keep positivity provable by construction;
    dlog and d2log come from the exact termwise derivatives.
    """
    if not terms:
        raise SurfaceSpecError("series requires at least one term")
    parsed = []
    for coeff, base_spec in terms:
        coeff = _require_positive("coeff", coeff)
        parsed.append((coeff, _series_basis(base_spec), dict(base_spec)))

    def value(r):
        r = np.asarray(r, float)
        out = 0.0 * r
        for c, (b, _, _), _spec in parsed:
            out = out + c * b(r)
        return out

    def d1(r):
        r = np.asarray(r, float)
        out = 0.0 * r
        for c, (_, bp, _), _spec in parsed:
            out = out + c * bp(r)
        return out

    def d2(r):
        r = np.asarray(r, float)
        out = 0.0 * r
        for c, (_, _, bpp), _spec in parsed:
            out = out + c * bpp(r)
        return out

    return RadialFunction(
        "series", {"terms": [{"coeff": c, "base": spec} for c, _b, spec in parsed]},
        value=value,
        logvalue=lambda r: np.log(value(r)),
        dlog=lambda r: d1(r) / value(r),
        d2log=lambda r: d2(r) / value(r) - (d1(r) / value(r)) ** 2,
    )


# JSON kind tags -> constructors.  "euclidean" and "hyperbolic" are metric
# aliases accepted wherever a profile is expected.
def radial_function(spec: dict) -> RadialFunction:
    if not isinstance(spec, dict):
        raise SurfaceSpecError(f"profile spec must be an object, got {type(spec).__name__}")
    unknown = set(spec) - {"kind", "params"}
    if unknown:
        raise SurfaceSpecError(f"unknown profile keys {sorted(unknown)}")
    kind = spec.get("kind")
    params = spec.get("params", {})
    if not isinstance(params, dict):
        raise SurfaceSpecError("profile params must be an object")

    def take(allowed: set[str]):
        extra = set(params) - allowed
        if extra:
            raise SurfaceSpecError(f"unknown params {sorted(extra)} for kind {kind!r}")

    if kind == "euclidean":
        take(set())
        return power(1.0)
    if kind == "hyperbolic":
        take(set())
        return sinh_profile(1.0)
    if kind == "constant":
        take({"value"})
        return constant(params.get("value", 1.0))
    if kind == "power":
        take({"exponent", "coeff"})
        return power(params.get("exponent", 1.0), params.get("coeff", 1.0))
    if kind == "sinh":
        take({"scale"})
        return sinh_profile(params.get("scale", 1.0))
    if kind == "cosh":
        take({"scale"})
        return cosh_profile(params.get("scale", 1.0))
    if kind == "exp_power":
        take({"a", "p"})
        return exp_power(params.get("a", 1.0), params.get("p", 1.0))
    if kind == "product":
        take({"factors"})
        factors = params.get("factors")
        if not isinstance(factors, list) or not factors:
            raise SurfaceSpecError("product params need a non-empty 'factors' list")
        return product([radial_function(f) for f in factors])
    if kind == "series":
        take({"terms"})
        terms = params.get("terms")
        if not isinstance(terms, list) or not terms:
            raise SurfaceSpecError("series params need a non-empty 'terms' list")
        out = []
        for t in terms:
            if not isinstance(t, dict) or set(t) - {"coeff", "base"}:
                raise SurfaceSpecError("series terms are objects {coeff, base}")
            out.append((t.get("coeff", 1.0), t.get("base", {})))
        return series(out)
    raise SurfaceSpecError(f"unknown profile kind {kind!r}")


class Surface:
    """Metric factor h, volume density f, perimeter density g, dimension n.

    g defaults to f; n (ambient dimension, audits only) defaults to 2.
    Immutable after construction; the quadrature cache it carries is
    append-only and shared by design.
    """

    def __init__(self, h: RadialFunction, f: RadialFunction,
                 g: RadialFunction | None = None, n: int = 2,
                 name: str = ""):
        if n < 2:
            raise SurfaceSpecError(f"ambient dimension n must be >= 2, got {n}")
        _check_metric_factor(h)
        self.h = h
        self.f = f
        self.g = f if g is None else g
        self.n = int(n)
        self.name = name
        self.quad_cache: dict = {}

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return (f"Surface(h={self.h.kind}, f={self.f.kind}, "
                f"g={self.g.kind}, n={self.n}{tag})")


def _check_metric_factor(h: RadialFunction) -> None:
    """h(r) must vanish as r -> 0+ (checked on a decreasing probe sequence)."""
    probes = np.array([1e-2, 1e-4, 1e-8, 1e-16, 1e-64, 1e-256])
    vals = np.array([float(h.value(p)) for p in probes])
    if not np.all(np.isfinite(vals)) or np.any(vals < 0.0):
        raise SurfaceSpecError("metric factor h must be finite and nonnegative near 0")
    if np.any(np.diff(vals) > 0.0) or vals[-1] > 1e-8:
        raise SurfaceSpecError("metric factor h(r) must tend to 0 as r -> 0+")


def make_surface(spec: dict | str) -> Surface:
    """Build a Surface from a SurfaceSpec JSON document (dict or JSON text).

    Layout: {"h": {...}, "f": {...}, "g": {...}?, "n": 2?} with profile
    objects {"kind": ..., "params": {...}}.  Unknown keys are rejected.
    """
    if isinstance(spec, str):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise SurfaceSpecError(f"invalid surface JSON: {exc}") from exc
    if not isinstance(spec, dict):
        raise SurfaceSpecError("surface spec must be a JSON object")
    unknown = set(spec) - {"h", "f", "g", "n", "name"}
    if unknown:
        raise SurfaceSpecError(f"unknown surface keys {sorted(unknown)}")
    if "h" not in spec or "f" not in spec:
        raise SurfaceSpecError("surface spec requires 'h' and 'f'")
    h = radial_function(spec["h"])
    f = radial_function(spec["f"])
    g = radial_function(spec["g"]) if "g" in spec else None
    n = spec.get("n", 2)
    if not isinstance(n, int):
        raise SurfaceSpecError(f"'n' must be an integer, got {n!r}")
    return Surface(h, f, g=g, n=n, name=str(spec.get("name", "")))


def logderiv_fh(surface: Surface, r):
    """(log fh)'(r) = f.dlog(r) + h.dlog(r); the drift term of the dynamics."""
    if np.any(np.asarray(r) <= 0.0):
        raise ValueError("logderiv_fh requires r > 0")
    return surface.f.dlog(r) + surface.h.dlog(r)


def d2log_fh(surface: Surface, r):
    """(log fh)''(r); nonnegative exactly where fh is log-convex."""
    if np.any(np.asarray(r) <= 0.0):
        raise ValueError("d2log_fh requires r > 0")
    return surface.f.d2log(r) + surface.h.d2log(r)


def logconvexity_onset(surface: Surface, r_lo: float = 1e-3,
                       r_hi: float = R_CAP_DEFAULT,
                       tol_convex: float = TOL_CONVEX,
                       grid_points: int = 2048) -> float | None:
    """Smallest r0 in [r_lo, r_hi] with fh log-convex and increasing on [r0, r_hi].

    The window is scanned on a log-spaced grid for the earliest point whose
    whole suffix satisfies d2log(fh) >= -tol_convex and dlog(fh) > 0; the
    entry is then sharpened by bisection on the sign change of d2log(fh).
    Returns None when no such onset exists in the window.
    """
    if not (0.0 < r_lo < r_hi):
        raise ValueError(f"invalid window [{r_lo}, {r_hi}]")
    grid = np.geomspace(r_lo, r_hi, grid_points)
    curv = np.asarray(d2log_fh(surface, grid))
    slope = np.asarray(logderiv_fh(surface, grid))

    ok = (curv >= -tol_convex) & (slope > 0.0)
    # earliest index whose entire suffix is ok
    suffix_ok = np.flip(np.logical_and.accumulate(np.flip(ok)))
    idx = np.nonzero(suffix_ok)[0]
    if idx.size == 0:
        return None
    i0 = int(idx[0])
    if i0 == 0:
        return float(grid[0])

    # refine whichever condition flips between grid[i0-1] and grid[i0]
    a, b = float(grid[i0 - 1]), float(grid[i0])
    if float(d2log_fh(surface, a)) < -tol_convex:
        fun = lambda r: float(d2log_fh(surface, r))
    else:
        fun = lambda r: float(logderiv_fh(surface, r))
    fa = fun(a)
    for _ in range(200):
        mid = 0.5 * (a + b)
        if b - a <= 1e-14 * max(1.0, mid):
            break
        fm = fun(mid)
        if (fm < 0.0) == (fa < 0.0):
            a, fa = mid, fm
        else:
            b = mid
    r0 = 0.5 * (a + b)

    # final validation pass on a fresh refinement grid of [r0, r_hi]
    check = np.geomspace(max(r0, 1e-300), r_hi, 4096)
    check[0] = r0
    if np.all(np.asarray(d2log_fh(surface, check)) >= -tol_convex) and \
            np.all(np.asarray(logderiv_fh(surface, check)) > 0.0):
        return float(r0)
    # fall back to the grid point itself if the bisected edge flickers
    check = np.geomspace(grid[i0], r_hi, 4096)
    if np.all(np.asarray(d2log_fh(surface, check)) >= -tol_convex) and \
            np.all(np.asarray(logderiv_fh(surface, check)) > 0.0):
        return float(grid[i0])
    return None
