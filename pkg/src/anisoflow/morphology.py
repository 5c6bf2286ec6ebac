"""Minkowski morphology with convex structuring elements and the two-sided
Wulff smoothing of closed curves.

Regions are shapely geometries.  Erosion and dilation are exact for polygonal
data: ``P - B = P minus (dP + (-B))`` and ``P + B = P union (dP + B)``, where
``dP + B`` is the union of the sweeps of ``B`` along the boundary edges.
Convex regions take a linear-time shortcut (half-plane shifts for erosion,
edge merging for dilation).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.geometry import MultiPolygon, Point, Polygon
from shapely.geometry.base import BaseGeometry

from .anisotropy import Anisotropy, regularize
from .curve import (
    CrystalCurve,
    CurveError,
    ParametricCurve,
    aniso_curvature_smooth,
    build_frames,
    cahn_hoffman_field,
    check_local_rw,
    hausdorff_distance,
)

__all__ = [
    "MorphologyError",
    "GraphCoverError",
    "GluingError",
    "ConvexBody",
    "as_region",
    "erode",
    "dilate",
    "opening",
    "closing",
    "region_curve",
    "GraphPiece",
    "graph_cover",
    "SmoothingReport",
    "approximate_curve",
]


class MorphologyError(ValueError):
    pass


class GraphCoverError(MorphologyError):
    pass


class GluingError(MorphologyError):
    pass


# --------------------------------------------------------------------------
# structuring elements and regions
# --------------------------------------------------------------------------


def _ccw_convex(v, tol=1e-12):
    e = np.roll(v, -1, axis=0) - v
    cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
    return bool(np.all(cross >= -tol * np.max(np.abs(v)) ** 2))


@dataclass(frozen=True, eq=False)
class ConvexBody:
    """Convex polygon ``scale * K`` with the origin in its interior."""

    vertices: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 2)
        if len(v) < 3:
            raise MorphologyError("a convex body needs at least 3 vertices")
        if shapely.area(Polygon(v)) < 0 or not Polygon(v).exterior.is_ccw:
            v = v[::-1]
        if not _ccw_convex(v):
            raise MorphologyError("structuring element must be convex")
        if not Polygon(v).contains(Point(0.0, 0.0)):
            raise MorphologyError("structuring element must contain the origin in its interior")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @classmethod
    def disk(cls, radius, n=256):
        t = 2 * np.pi * np.arange(n) / n
        return cls(radius * np.column_stack([np.cos(t), np.sin(t)]), scale=radius)

    @classmethod
    def square(cls, half):
        h = float(half)
        return cls([[h, -h], [h, h], [-h, h], [-h, -h]], scale=h)

    @classmethod
    def regular_polygon(cls, n_sides, radius, phase=0.0):
        t = phase + 2 * np.pi * np.arange(n_sides) / n_sides
        return cls(radius * np.column_stack([np.cos(t), np.sin(t)]), scale=radius)

    @classmethod
    def from_anisotropy(cls, a, scale=1.0, resolution=4096, rel_change=None):
        """``scale * W``.  Smooth kinds are sampled at uniformly spaced normal
        angles, or adaptively when ``rel_change`` is given (see
        :meth:`Anisotropy.adaptive_angles`)."""
        if a.kind == "crystalline" or rel_change is None:
            return cls(scale * a.wulff_shape(resolution).vertices, scale=scale)
        th = a.adaptive_angles(resolution, rel_change)
        return cls(scale * a.boundary_points(th), scale=scale)

    @property
    def polygon(self):
        return Polygon(self.vertices)

    def reflected(self):
        return ConvexBody(-self.vertices, self.scale)

    def support(self, nu):
        return np.max(np.asarray(nu) @ self.vertices.T, axis=-1)


def as_region(region):
    """Coerce vertex arrays, curves and geometries to a valid shapely region."""
    if isinstance(region, BaseGeometry):
        g = region
    elif isinstance(region, CrystalCurve):
        g = Polygon(region.vertices)
    elif isinstance(region, ParametricCurve):
        g = Polygon(region.points)
    else:
        g = Polygon(np.asarray(region, dtype=float))
    if not g.is_valid:
        g = shapely.make_valid(g)
    return shapely.normalize(g) if not g.is_empty else g


def _polygons(geom):
    if geom.is_empty:
        return []
    if isinstance(geom, Polygon):
        return [geom]
    if isinstance(geom, MultiPolygon):
        return list(geom.geoms)
    return [g for g in getattr(geom, "geoms", []) if isinstance(g, Polygon) and not g.is_empty]


def _ring_coords(ring):
    c = np.asarray(ring.coords)[:-1]
    return c


def _is_convex_polygon(p):
    if len(p.interiors):
        return False
    return abs(p.area - p.convex_hull.area) <= 1e-12 * max(p.area, 1e-300)


def _convex_vertices(p):
    """ccw vertices of a convex polygon with collinear points removed."""
    hull = shapely.normalize(p.convex_hull)
    v = _ring_coords(hull.exterior)
    if not hull.exterior.is_ccw:
        v = v[::-1]
    return v


def _segment_sweep(p0, p1, body):
    """Vertices of ``conv(B + p0, B + p1)`` in ccw order."""
    d = p1 - p0
    if not np.any(d):
        return body + p0
    n = np.array([-d[1], d[0]])
    h = body @ n
    i_p = int(np.argmax(h))
    i_m = int(np.argmin(h))
    k = len(body)
    back = body[(i_p + np.arange((i_m - i_p) % k + 1)) % k] + p0
    front = body[(i_m + np.arange((i_p - i_m) % k + 1)) % k] + p1
    return np.vstack([back, front])


def _boundary_sweep(geom, body):
    parts = []
    for poly in _polygons(geom):
        for ring in [poly.exterior, *poly.interiors]:
            c = _ring_coords(ring)
            for p0, p1 in zip(c, np.roll(c, -1, axis=0)):
                parts.append(Polygon(_segment_sweep(p0, p1, body)))
    if not parts:
        return Polygon()
    return shapely.unary_union(parts)


def _convex_sum(p, q):
    """Minkowski sum of two convex ccw polygons by merging edge directions."""
    def start(v):
        return int(np.lexsort((v[:, 0], v[:, 1]))[0])

    p = np.roll(p, -start(p), axis=0)
    q = np.roll(q, -start(q), axis=0)
    e = np.vstack([np.roll(p, -1, axis=0) - p, np.roll(q, -1, axis=0) - q])
    ang = np.mod(np.arctan2(e[:, 1], e[:, 0]), 2 * np.pi)
    e = e[np.argsort(ang, kind="stable")]
    pts = p[0] + q[0] + np.vstack([[0.0, 0.0], np.cumsum(e, axis=0)[:-1]])
    return Polygon(pts)


def _convex_erode(p, body):
    v = _convex_vertices(p)
    e = np.roll(v, -1, axis=0) - v
    nrm = np.column_stack([e[:, 1], -e[:, 0]]) / np.hypot(e[:, 0], e[:, 1])[:, None]
    off = np.einsum("ij,ij->i", nrm, v) - np.max(nrm @ body.T, axis=1)
    return _halfplane_polygon(nrm, off, p.bounds)


def _halfplane_polygon(nrm, off, bounds):
    """Intersection of ``{x : n_k . x <= off_k}`` clipped to a box."""
    x0, y0, x1, y1 = bounds
    span = max(x1 - x0, y1 - y0, 1.0)
    poly = shapely.box(x0 - span, y0 - span, x1 + span, y1 + span)
    big = 10 * span
    for n, o in zip(nrm, off):
        t = np.array([-n[1], n[0]])
        base = n * o
        hp = Polygon([base - big * t, base + big * t,
                      base + big * t - big * n, base - big * t - big * n])
        poly = poly.intersection(hp)
        if poly.is_empty:
            return Polygon()
    return poly


def erode(region, b):
    """``{x : x + B in region}``."""
    g = as_region(region)
    if g.is_empty:
        return Polygon()
    polys = _polygons(g)
    if len(polys) == 1 and _is_convex_polygon(polys[0]):
        out = _convex_erode(polys[0], b.vertices)
    else:
        out = g.difference(_boundary_sweep(g, b.reflected().vertices))
    return _clean(out)


def dilate(region, b):
    """``region + B``."""
    if isinstance(region, Point):
        return Polygon(b.vertices + np.asarray(region.coords[0]))
    g = as_region(region)
    if g.is_empty:
        return Polygon()
    polys = _polygons(g)
    if len(polys) == 1 and _is_convex_polygon(polys[0]):
        return _clean(_convex_sum(_convex_vertices(polys[0]), b.vertices))
    return _clean(g.union(_boundary_sweep(g, b.vertices)))


def opening(region, b):
    """Union of the translates of ``B`` contained in ``region``."""
    return dilate(erode(region, b), b)


def closing(region, b):
    return erode(dilate(region, b), b)


def _clean(g):
    if g.is_empty:
        return Polygon()
    polys = [p for p in _polygons(g) if p.area > 0]
    if not polys:
        return Polygon()
    out = polys[0] if len(polys) == 1 else MultiPolygon(polys)
    if not out.is_valid:
        out = shapely.make_valid(out)
    return shapely.normalize(out)


def region_curve(g, min_edge=1e-12):
    """Exterior boundary of a single-component region as ccw vertices."""
    polys = _polygons(g)
    if len(polys) != 1:
        raise MorphologyError(f"expected one component, got {len(polys)}")
    ring = polys[0].exterior
    v = _ring_coords(ring)
    if not ring.is_ccw:
        v = v[::-1]
    keep = np.hypot(*(np.roll(v, -1, axis=0) - v).T) > min_edge
    return v[keep]


# --------------------------------------------------------------------------
# graph cover
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GraphPiece:
    """Index arc ``start .. stop`` (inclusive, cyclic) that is a graph over the
    line orthogonal to ``direction``; ``witness`` is the sample in the overlap
    with the next piece where the switch happens."""

    start: int
    stop: int
    direction: float
    witness: int


def graph_cover(c, max_slope=2.0, kappa_tol=1e-9):
    """Cover the curve with overlapping graph pieces of slope at most
    ``max_slope``.

    Pieces are grown greedily in the normal angle; consecutive pieces overlap
    on an arc containing a curved witness sample, and no piece ends strictly
    inside a straight run.
    """
    c = build_frames(c)
    n = c.n
    theta = c.theta
    kappa = c.kappa
    period = 2 * np.pi * c.turning_number
    ext = np.concatenate([theta, theta + period, theta + 2 * period])
    curved = np.abs(np.tile(kappa, 3)) > kappa_tol
    if not np.any(curved[:n]):
        raise GraphCoverError("curve has no curved sample to anchor a cover")
    span = 2.0 * np.arctan(max_slope) * 0.95
    first = int(np.flatnonzero(curved[:n])[0])
    pieces = []
    s = first
    while True:
        e = s
        lo = hi = ext[s]
        while e + 1 < 3 * n and e + 1 - s < n:
            v = ext[e + 1]
            if max(hi, v) - min(lo, v) > span:
                break
            lo, hi = min(lo, v), max(hi, v)
            e += 1
        # do not stop inside a straight run: back up to its first sample
        while e > s and not curved[e] and not curved[e - 1]:
            e -= 1
        mid = s + (e - s) // 2
        cand = np.flatnonzero(curved[mid + 1 : e + 1]) + mid + 1
        if e - s >= n - 1:
            pieces.append(GraphPiece(s % n, e % n, 0.5 * (lo + hi), first))
            break
        if e >= first + n:
            # the cover closes on the first piece, which starts at a curved sample
            pieces.append(GraphPiece(s % n, e % n, 0.5 * (lo + hi), first))
            break
        if cand.size == 0:
            raise GraphCoverError(f"no curved witness in the overlap after sample {s % n}")
        w = int(cand[-1]) if cand[-1] < e else int(cand[0])
        pieces.append(GraphPiece(s % n, e % n, 0.5 * (lo + hi), w % n))
        if w <= s:
            raise GraphCoverError(f"cover cannot advance past sample {s % n}")
        s = w
    return pieces


# --------------------------------------------------------------------------
# two-sided smoothing
# --------------------------------------------------------------------------


@dataclass
class SmoothingReport:
    curve_out: ParametricCurve
    c_prime: float
    hausdorff_in_out: float
    pieces: list = field(default_factory=list)
    radius: float = 0.0
    input_bound: float = 0.0
    max_kappa_phi: float = 0.0
    anisotropy: Anisotropy | None = None
    rw: object = None

    @property
    def certified(self):
        return self.max_kappa_phi <= self.c_prime * (1 + 1e-2)

    def to_dict(self):
        return {"curve_out": self.curve_out.to_dict(), "c_prime": self.c_prime,
                "radius": self.radius, "input_bound": self.input_bound,
                "hausdorff_in_out": self.hausdorff_in_out,
                "max_kappa_phi": self.max_kappa_phi,
                "rw_passed": None if self.rw is None else bool(self.rw.passed),
                "pieces": [[p.start, p.stop, p.witness] for p in self.pieces]}


def _refine_edges(v, h):
    """Split edges longer than ``1.5 h`` (the straight runs) into pieces of
    length about ``h``; shorter edges are left alone."""
    out = []
    for p0, p1 in zip(v, np.roll(v, -1, axis=0)):
        ln = np.hypot(*(p1 - p0))
        k = int(round(ln / h)) if ln > 1.5 * h else 1
        out.append(p0 + np.outer(np.arange(k) / k, p1 - p0))
    return np.vstack(out)


def _binomial_smooth(v, passes=1):
    for _ in range(passes):
        v = 0.25 * np.roll(v, 1, axis=0) + 0.5 * v + 0.25 * np.roll(v, -1, axis=0)
    return v


def approximate_curve(c, a_base, epsilon, r_factor=0.9, resolution=4096, rel_change=2e-3,
                      smooth_passes=1, max_slope=2.0, check=True, probes=1024):
    """Smooth ``c`` into a curve with ``|kappa_{gamma_eps}| <= 1 / R'``.

    ``R' = r_factor / C`` where ``C`` bounds the Cahn-Hoffman field of ``c``.
    The region is opened by ``R' W_eps`` (inner side) and then closed by it
    (outer side); arcs keep the normal-uniform vertices of the body, long
    straight edges are refined and a three-cell binomial filter is applied.
    """
    if not (0 < r_factor < 1):
        raise MorphologyError("r_factor must lie in (0, 1)")
    if isinstance(c, CrystalCurve):
        c_in = build_frames(ParametricCurve(c.vertices))
        bound = cahn_hoffman_field(c, a_base).lipschitz_bound
    else:
        c_in = build_frames(c)
        bound = cahn_hoffman_field(c_in, a_base).lipschitz_bound
    if not np.isfinite(bound) or bound <= 0:
        raise CurveError("input curve has no finite Cahn-Hoffman bound")
    radius = r_factor / bound
    a_eps = a_base if a_base.kind in ("smooth", "euclidean") else regularize(a_base, epsilon)
    body = ConvexBody.from_anisotropy(a_eps, radius, resolution, rel_change)

    pieces = graph_cover(c_in, max_slope=max_slope)
    region = as_region(c_in)
    g = opening(region, body)
    polys = _polygons(g)
    if len(polys) != 1:
        raise GluingError(f"inner opening split the region into {len(polys)} components")
    if not _is_convex_polygon(polys[0]):
        g = closing(g, body)
    v = region_curve(g)
    h = float(np.max(np.hypot(*(np.roll(body.vertices, -1, axis=0) - body.vertices).T)))
    v = _binomial_smooth(_refine_edges(v, h), smooth_passes)
    out = build_frames(ParametricCurve(v))
    kphi = float(np.max(np.abs(aniso_curvature_smooth(out, a_eps))))
    rep = SmoothingReport(out, 1.0 / radius, hausdorff_distance(c_in, out), pieces,
                          radius, bound, kphi, a_eps)
    if check:
        rep.rw = check_local_rw(out, a_eps, 0.9 * radius, probes=probes)
    return rep
