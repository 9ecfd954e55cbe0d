"""Spectral domains in the plane: construction, classification, tracing.

The one-parameter domain is the sublevel set {T < t} of the level
function in :mod:`brownflow.cmaps`; its boundary is extracted by
marching squares on a validated frame and each vertex is then pushed
onto the level set by bisection along the gradient.  The two-parameter
domain is the complement of the image of the exterior of the s-domain
under f_{s-t}, so its boundary is the vertexwise image of the traced
s-boundary.  Membership for the two-parameter case is an even-odd
polygon test against the traced loops; the one-parameter case just
compares T(lambda) with t.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from skimage import measure as _sk_measure

from . import cmaps
from .errors import AccuracyError, TopologyError

__all__ = [
    "DomainSpec",
    "BoundaryPolyline",
    "Classification",
    "boundary",
    "contains",
    "classify_points",
    "polyline_to_csv",
    "polyline_to_json",
]

# vertices are refined until |T - t| drops below this
_VERTEX_TOL = 1e-6
_DEFAULT_RESOLUTION = 512


@dataclass(frozen=True)
class DomainSpec:
    """Domain parameters plus the half-width of the boundary band.

    ``tol_band`` is in T-units for the one-parameter case and in plane
    distance for the two-parameter case.
    """

    params: cmaps.TimeParams
    tol_band: float = 1e-3

    def __post_init__(self):
        if self.tol_band < 0:
            raise ValueError("tol_band must be nonnegative")

    @classmethod
    def one_parameter(cls, t, tol_band=1e-3):
        return cls(cmaps.TimeParams.one_parameter(t), tol_band)

    @classmethod
    def two_parameter(cls, s, t, tol_band=1e-3):
        return cls(cmaps.TimeParams(float(s), float(t)), tol_band)


@dataclass
class BoundaryPolyline:
    """Closed loops bounding the domain.

    ``loops`` holds complex vertex arrays without a repeated endpoint;
    closure is implicit.  The outer loop is counterclockwise, hole loops
    clockwise.  One loop for s <= 4, two for s > 4.
    """

    loops: list
    spec: DomainSpec
    resolution: int
    meta: dict = field(default_factory=dict)

    def loop_count(self):
        return len(self.loops)

    def segments(self):
        """All boundary segments as (start, end) complex arrays."""
        a = []
        b = []
        for loop in self.loops:
            a.append(loop)
            b.append(np.roll(loop, -1))
        return np.concatenate(a), np.concatenate(b)


@dataclass(frozen=True)
class Classification:
    """Verdict for one point: inside / boundary_band / outside.

    ``witness`` is the signed margin driving the verdict: T(lambda) - t
    in the one-parameter case, signed plane distance to the boundary
    (negative inside) in the two-parameter case.
    """

    verdict: str
    witness: float

    @property
    def is_inside(self):
        return self.verdict == "inside"


def _signed_area(loop):
    x, y = loop.real, loop.imag
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def _orient(loops):
    """Largest loop counterclockwise, the rest clockwise."""
    if not loops:
        return loops
    areas = [abs(_signed_area(lp)) for lp in loops]
    order = np.argsort(areas)[::-1]
    out = []
    for rank, idx in enumerate(order):
        lp = loops[idx]
        ccw = _signed_area(lp) > 0
        want_ccw = rank == 0
        out.append(lp if ccw == want_ccw else lp[::-1])
    return out


def _stitch_pinch(outer, hole, pinch=-1.0 + 0.0j):
    """Join the outer and hole curves through the pinch point.

    Both curves are oriented first (outer counterclockwise, hole
    clockwise) so the concatenated traversal bounds the pinched domain.
    The exact pinch point sits on the level set, so the inserted
    vertices respect the vertex tolerance.
    """
    outer, hole = _orient([outer, hole])
    i = int(np.argmin(np.abs(outer - pinch)))
    j = int(np.argmin(np.abs(hole - pinch)))
    return np.concatenate(
        [outer[: i + 1], [pinch], hole[j:], hole[:j], [pinch], outer[i + 1 :]]
    )


def _frame_radius(t):
    """Frame radius with T > t on the frame, grown geometrically from the
    1 + t + sqrt(t) heuristic (which undershoots for t around 4)."""
    radius = 1.0 + t + np.sqrt(t)
    for _ in range(40):
        edge = np.linspace(-radius, radius, 257)
        frame = np.concatenate(
            [
                edge + 1j * radius,
                edge - 1j * radius,
                radius + 1j * edge,
                -radius + 1j * edge,
            ]
        )
        if np.min(cmaps.t_level(frame)) > t:
            return radius
        radius *= 1.5
    raise AccuracyError(f"could not find a frame with T > {t}")


def _refine_vertices(verts, t):
    """Bisect each vertex along the local T-gradient onto {T = t}.

    Returns the refined vertices and a keep-mask; vertices that cannot
    be bracketed (the pinch saddle at t = 4) are dropped rather than
    left violating the |T - t| tolerance.
    """
    v = verts.copy()
    grad = cmaps.t_level_gradient(v)
    gnorm = np.abs(grad)
    ok = gnorm > 1e-12
    u = np.where(ok, grad / np.where(ok, gnorm, 1.0), 0.0)
    d0 = cmaps.t_level(v) - t

    # walk downhill/uphill to bracket the level crossing
    lo = np.zeros(v.size)
    hi = np.where(ok, -d0 / np.where(ok, gnorm, 1.0), 0.0)
    bracketed = np.zeros(v.size, dtype=bool)
    for expand in (1.0, 2.0, 4.0, 8.0):
        trial = hi * expand
        tv = cmaps.t_level(v + trial * u) - t
        good = ok & ~bracketed & (np.sign(tv) != np.sign(d0)) & np.isfinite(tv)
        hi = np.where(good, trial, hi)
        bracketed |= good
        if bracketed.all():
            break

    a = lo.copy()
    b = np.where(bracketed, hi, 0.0)
    fa = d0.copy()
    for _ in range(60):
        mid = 0.5 * (a + b)
        fm = cmaps.t_level(v + mid * u) - t
        left = np.sign(fm) == np.sign(fa)
        a = np.where(left, mid, a)
        fa = np.where(left, fm, fa)
        b = np.where(left, b, mid)
    root = 0.5 * (a + b)
    refined = v + np.where(bracketed, root, 0.0) * u
    resid = np.abs(cmaps.t_level(refined) - t)
    keep = resid <= _VERTEX_TOL
    return refined, keep


def _trace_level_set(t, resolution, re_range=None, im_range=None):
    """Marching squares on T over a validated frame, plus bisection refinement."""
    level = t
    if re_range is None:
        radius = _frame_radius(t)
        re_range = (-radius, radius)
        im_range = (-radius, radius)
    xs = np.linspace(*re_range, resolution)
    ys = np.linspace(*im_range, resolution)
    lam = xs[None, :] + 1j * ys[:, None]
    field_vals = cmaps.t_level(lam)
    field_vals = np.minimum(field_vals, 1e6)  # keep the 0-sentinel finite for interpolation
    contours = _sk_measure.find_contours(field_vals, level=level, fully_connected="high")
    loops = []
    for c in contours:
        if c.shape[0] < 8:
            continue
        closed = np.allclose(c[0], c[-1])
        if not closed:
            continue
        rows, cols = c[:-1, 0], c[:-1, 1]
        verts = np.interp(cols, np.arange(resolution), xs) + 1j * np.interp(
            rows, np.arange(resolution), ys
        )
        refined, keep = _refine_vertices(verts, level)
        refined = refined[keep]
        if refined.size >= 8:
            loops.append(refined)
    return loops


def boundary(spec, resolution=_DEFAULT_RESOLUTION):
    """Trace the domain boundary as closed polylines.

    One-parameter: the level set {T = t}, vertices refined to
    |T - t| <= 1e-6.  Two-parameter: the s-level set mapped vertexwise
    through f_{s-t}.  For s > 4 the hole around the origin is re-traced
    on a zoomed grid so coarse global resolution cannot merge it away.
    """
    if resolution < 64:
        raise ValueError("resolution must be at least 64")
    s, t = spec.params.s, spec.params.t
    loops = _trace_level_set(s, resolution)

    meta = {"frame_validated": True}
    transitional = abs(s - 4.0) < 1e-9
    if s > 4.0 and not transitional:
        # Zoomed re-trace of the hole.  Just above s = 4 the hole is a
        # comet stretching along the negative axis (its tail reached the
        # pinch -1 at s = 4); for large s it shrinks to a disk of radius
        # about e^{-s/2} around the origin.
        if np.exp(-s / 2.0) > 0.02:
            re_rng, im_rng = (-1.02, 0.35), (-0.7, 0.7)
        else:
            r = 8.0 * float(np.exp(-s / 2.0))
            re_rng, im_rng = (-r, r), (-r, r)
        zoom = _trace_level_set(s, max(resolution // 2, 384), re_rng, im_rng)
        clip = max(abs(re_rng[0]), im_rng[1])
        loops = [lp for lp in loops if np.max(np.abs(lp)) > clip]
        if not zoom:
            raise TopologyError(
                f"no hole found for s={s} > 4; increase the resolution"
            )
        loops.append(max(zoom, key=lambda lp: abs(_signed_area(lp))))
        meta["hole_retraced"] = True

    if transitional:
        # {T = 4} is a figure-eight through the saddle at -1: an outer
        # curve plus an inner curve around the excluded region near 0
        # (whose tail runs along the negative axis to the pinch).  The
        # domain is still simply connected, so the two traced curves are
        # stitched through the pinch into the single boundary loop.
        if len(loops) != 2:
            raise TopologyError(
                f"traced {len(loops)} curves at the transitional level; "
                "increase the resolution"
            )
        loops.sort(key=lambda lp: abs(_signed_area(lp)), reverse=True)
        loops = [_stitch_pinch(loops[0], loops[1])]
        meta["pinch_stitched"] = True

    expected = 2 if (s > 4.0 and not transitional) else 1
    if len(loops) != expected:
        raise TopologyError(
            f"traced {len(loops)} loops for s={s}, expected {expected}; "
            "increase the resolution"
        )

    if s != t:
        # exterior map sends the s-boundary vertexwise onto the (s,t)-boundary
        loops = [cmaps.f_eval(s - t, lp) for lp in loops]
        meta["mapped_from_s_level"] = True

    loops = _orient(loops)
    return BoundaryPolyline(loops=loops, spec=spec, resolution=resolution, meta=meta)


_polyline_cache = {}


def _cached_boundary(spec, resolution=_DEFAULT_RESOLUTION):
    key = (spec.params.s, spec.params.t, resolution)
    if key not in _polyline_cache:
        _polyline_cache[key] = boundary(spec, resolution)
    return _polyline_cache[key]


def _crossing_parity_and_distance(points, poly):
    """Even-odd crossing parity and min distance to the polyline segments."""
    pts = points.ravel()
    a, b = poly.segments()
    ax, ay = a.real[None, :], a.imag[None, :]
    bx, by = b.real[None, :], b.imag[None, :]
    px, py = pts.real[:, None], pts.imag[:, None]

    cond = (ay > py) != (by > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_cross = ax + (py - ay) * (bx - ax) / (by - ay)
    crossing = cond & (px < x_cross)
    inside = (crossing.sum(axis=1) % 2).astype(bool)

    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    u = np.clip(((px - ax) * dx + (py - ay) * dy) / np.where(seg2 > 0, seg2, 1.0), 0.0, 1.0)
    dist = np.hypot(px - (ax + u * dx), py - (ay + u * dy)).min(axis=1)
    return inside.reshape(points.shape), dist.reshape(points.shape)


def contains(spec, lam, polyline=None, resolution=_DEFAULT_RESOLUTION):
    """Classify a single point against the domain.

    One-parameter: verdict from T(lambda) vs t inside a tol_band of
    T-units (lambda = 0 is always outside, T carries a +inf sentinel).
    Two-parameter: even-odd parity against the traced boundary with a
    plane-distance band.
    """
    lam = complex(lam)
    s, t = spec.params.s, spec.params.t
    if spec.params.is_one_parameter and polyline is None:
        witness = cmaps.t_level(lam) - t
        if witness == np.inf:
            return Classification("outside", np.inf)
        if abs(witness) <= spec.tol_band:
            return Classification("boundary_band", float(witness))
        verdict = "inside" if witness < 0 else "outside"
        return Classification(verdict, float(witness))

    poly = polyline if polyline is not None else _cached_boundary(spec, resolution)
    inside, dist = _crossing_parity_and_distance(np.asarray([lam]), poly)
    signed = float(dist[0]) * (-1.0 if inside[0] else 1.0)
    if dist[0] <= spec.tol_band:
        return Classification("boundary_band", signed)
    return Classification("inside" if inside[0] else "outside", signed)


def classify_points(spec, lams, margin=0.0, polyline=None, resolution=_DEFAULT_RESOLUTION):
    """Vectorized inside test with a dilation margin.

    One-parameter: T(lambda) <= t + margin (margin in T-units).
    Two-parameter: inside the polygon or within ``margin`` plane distance
    of it.  Returns a boolean array.
    """
    lams = np.asarray(lams, dtype=complex)
    s, t = spec.params.s, spec.params.t
    if spec.params.is_one_parameter and polyline is None:
        return cmaps.t_level(lams) <= t + margin
    poly = polyline if polyline is not None else _cached_boundary(spec, resolution)
    inside, dist = _crossing_parity_and_distance(lams, poly)
    return inside | (dist <= margin)


def polyline_to_csv(poly, path):
    """CSV export: loop_id, vertex_index, re, im."""
    with open(path, "w") as fh:
        fh.write("loop_id,vertex_index,re,im\n")
        for loop_id, loop in enumerate(poly.loops):
            for idx, v in enumerate(loop):
                fh.write(f"{loop_id},{idx},{v.real:.17g},{v.imag:.17g}\n")


def polyline_to_json(poly, path):
    """JSON mirror of the CSV with domain metadata."""
    payload = {
        "s": poly.spec.params.s,
        "t": poly.spec.params.t,
        "resolution": poly.resolution,
        "tol_band": poly.spec.tol_band,
        "vertex_tolerance": _VERTEX_TOL,
        "loops": [
            {"loop_id": i, "re": list(lp.real), "im": list(lp.imag)}
            for i, lp in enumerate(poly.loops)
        ],
        "meta": poly.meta,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
