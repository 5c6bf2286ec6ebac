"""Closed immersed planar curves: sampled (parametric) and crystalline polygons.

Orientation convention used throughout the package: ``nu`` is the right-hand
normal of the traversal direction, ``nu = (cos theta, sin theta)`` and
``tau = (-sin theta, cos theta)``.  For a counterclockwise convex curve ``nu``
points outward and ``kappa = d theta / ds > 0``, and the curvature flows move
points by ``-psi(theta) kappa nu`` (convex curves shrink).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from .anisotropy import Anisotropy, AnisotropyError, WulffPolygon

__all__ = [
    "CurveError",
    "ParametricCurve",
    "CrystalCurve",
    "CahnHoffmanField",
    "RWReport",
    "build_frames",
    "aniso_curvature_smooth",
    "aniso_curvature_cell",
    "aniso_curvature_crystal",
    "cahn_hoffman_field",
    "wulff_offset",
    "check_local_rw",
    "hausdorff_distance",
    "circle",
    "ellipse",
    "figure_eight",
    "wulff_curve",
    "polygon_curve",
    "resample_uniform",
    "resample_adaptive",
]

ANGLE_MATCH_TOL = 1e-8


class CurveError(ValueError):
    """Degenerate, malformed or non-admissible curve data."""


def _wrap(x):
    return (np.asarray(x) + np.pi) % (2 * np.pi) - np.pi


def _rot_right(v):
    return np.stack([v[..., 1], -v[..., 0]], axis=-1)


def _rot_left(v):
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


# --------------------------------------------------------------------------
# Parametric curves
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ParametricCurve:
    """Closed curve sampled at ``N`` points (cyclic; last != first).

    Geometric caches (frames, arc length, curvature) are computed lazily and
    never mutate ``points``.
    """

    points: np.ndarray
    min_edge: float = 1e-12

    def __post_init__(self):
        p = np.array(self.points, dtype=float)
        if p.ndim != 2 or p.shape[1] != 2:
            raise CurveError("points must have shape (N, 2)")
        if len(p) < 4:
            raise CurveError("a closed curve needs at least 4 samples")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    def __len__(self):
        return len(self.points)

    @property
    def n(self):
        return len(self.points)

    @cached_property
    def edges(self):
        return np.roll(self.points, -1, axis=0) - self.points

    @cached_property
    def edge_lengths(self):
        e = self.edges
        return np.hypot(e[:, 0], e[:, 1])

    @cached_property
    def arclength(self):
        """Arc-length ``s_i`` of each sample measured from sample 0."""
        return np.concatenate([[0.0], np.cumsum(self.edge_lengths)[:-1]])

    @property
    def length(self):
        return float(np.sum(self.edge_lengths))

    @cached_property
    def ds(self):
        """Dual (Voronoi) length attached to each sample."""
        L = self.edge_lengths
        return 0.5 * (L + np.roll(L, 1))

    @cached_property
    def tangents(self):
        d = np.roll(self.points, -1, axis=0) - np.roll(self.points, 1, axis=0)
        nrm = np.hypot(d[:, 0], d[:, 1])
        if np.any(nrm <= self.min_edge):
            raise CurveError("curve folds back onto itself at grid scale")
        return d / nrm[:, None]

    @cached_property
    def normals(self):
        return _rot_right(self.tangents)

    @cached_property
    def _lift(self):
        nu = self.normals
        raw = np.arctan2(nu[:, 1], nu[:, 0])
        inc = _wrap(np.diff(np.append(raw, raw[0])))
        total = float(np.sum(inc))
        m = int(round(total / (2 * np.pi)))
        theta = raw[0] + np.concatenate([[0.0], np.cumsum(inc[:-1])])
        return theta, m, inc

    @property
    def theta(self):
        """Continuous lift of the normal angle, ``theta[0]`` in (-pi, pi]."""
        return self._lift[0]

    @property
    def turning_number(self):
        return self._lift[1]

    @cached_property
    def kappa(self):
        """Curvature ``d theta / ds`` by centered differences of the lift."""
        inc = self._lift[2]
        dtheta = inc + np.roll(inc, 1)
        span = self.edge_lengths + np.roll(self.edge_lengths, 1)
        return dtheta / span

    @property
    def signed_area(self):
        x, y = self.points[:, 0], self.points[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def speed(self):
        """Length element ``|u_x|`` for the parameter ``x_i = 2 pi i / N``."""
        return self.ds * self.n / (2 * np.pi)

    def translated(self, v):
        return ParametricCurve(self.points + np.asarray(v, dtype=float))

    def scaled(self, r, center=(0.0, 0.0)):
        c = np.asarray(center, dtype=float)
        return ParametricCurve(c + r * (self.points - c))

    def reversed(self):
        return ParametricCurve(self.points[::-1].copy())

    def to_dict(self):
        return {"type": "parametric", "points": self.points.tolist()}

    def to_csv(self, anisotropy=None):
        """Per-sample table ``s, x, y, theta, kappa, kappa_phi``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "x", "y", "theta", "kappa", "kappa_phi"])
        kphi = (aniso_curvature_smooth(self, anisotropy)
                if anisotropy is not None else self.kappa)
        for row in zip(self.arclength, self.points[:, 0], self.points[:, 1],
                       self.theta, self.kappa, kphi):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def build_frames(c):
    """Validate ``c`` and fill its geometric caches."""
    if not isinstance(c, ParametricCurve):
        c = ParametricCurve(c)
    if np.min(c.edge_lengths) <= c.min_edge:
        raise CurveError("degenerate edge: consecutive samples coincide")
    c.tangents, c.normals, c.kappa, c.arclength, c.ds  # noqa: B018
    return c


def resample_uniform(c, n=None, method="spline"):
    """Resample at ``n`` points equally spaced in arc length.

    ``method='spline'`` interpolates with a periodic cubic spline in chord
    length (smooth curves); ``'linear'`` keeps polygon corners.
    """
    n = n or c.n
    L = c.edge_lengths
    s = np.concatenate([[0.0], np.cumsum(L)])
    closed = np.vstack([c.points, c.points[:1]])
    t = np.linspace(0.0, s[-1], n, endpoint=False)
    if method == "linear":
        x = np.interp(t, s, closed[:, 0])
        y = np.interp(t, s, closed[:, 1])
        return ParametricCurve(np.stack([x, y], axis=1))
    sp = CubicSpline(s, closed, bc_type="periodic")
    # one fixed-point pass so the spacing is uniform in spline arc length
    fine = np.linspace(0.0, s[-1], 8 * n + 1)
    d = sp(fine, 1)
    ls = np.concatenate([[0.0], np.cumsum(0.5 * (np.hypot(*d[1:].T) + np.hypot(*d[:-1].T))
                                          * np.diff(fine))])
    t = np.interp(np.linspace(0.0, ls[-1], n, endpoint=False), ls, fine)
    return ParametricCurve(sp(t))


def _graded(h, pos, period, g):
    """Largest ``h' <= h`` with ``|h'_i - h'_j| <= g |pos_i - pos_j|`` (periodic)."""
    n = len(h)
    x = np.concatenate([pos, pos + period])
    fwd = np.minimum.accumulate(np.concatenate([h, h]) - g * x)[n:] + g * x[n:]
    xr = np.concatenate([-pos[::-1], -pos[::-1] + period])
    bwd = np.minimum.accumulate(np.concatenate([h[::-1], h[::-1]]) - g * xr)[n:] + g * xr[n:]
    return np.minimum(fwd, bwd[::-1])


def resample_adaptive(c, n=None, turning_weight=0.5, grading=0.1, oversample=16,
                      anisotropy=None, rho_weight=0.25):
    """Resample at ``n`` points equidistributing arc length and turning.

    A fraction ``turning_weight`` of the nodes is spent on total absolute
    turning, so tight arcs stay resolved after redistribution.  With a smooth
    ``anisotropy``, a further fraction ``rho_weight`` follows the total
    variation of ``log(sigma + sigma'')`` along the curve, which concentrates
    nodes where the stiffness changes fastest.  The local spacing ``h`` is
    graded so that ``|dh/ds| <= grading``.
    """
    n = n or c.n
    if anisotropy is None:
        rho_weight = 0.0
    if turning_weight < 0 or rho_weight < 0 or turning_weight + rho_weight >= 1.0:
        raise ValueError("weights must be nonnegative with sum below 1")
    L = c.edge_lengths
    s = np.concatenate([[0.0], np.cumsum(L)])
    closed = np.vstack([c.points, c.points[:1]])
    sp = CubicSpline(s, closed, bc_type="periodic")
    m = max(oversample * n, c.n * 4)
    fine = np.linspace(0.0, s[-1], m + 1)
    d1, d2 = sp(fine, 1), sp(fine, 2)
    speed = np.hypot(d1[:, 0], d1[:, 1])
    kap = np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed**3
    ds = speed[:-1] * np.diff(fine)
    arc = float(np.sum(ds))
    density = np.full(m, (1.0 - turning_weight - rho_weight) / arc)
    turn = float(np.sum(kap[:-1] * ds))
    if turn > 0:
        density += turning_weight * kap[:-1] / turn
    if rho_weight > 0:
        mid = 0.5 * (d1[1:] + d1[:-1])
        theta = np.arctan2(-mid[:, 0], mid[:, 1])
        lr = np.log(anisotropy.radius_of_curvature(theta))
        var = np.abs(np.diff(np.append(lr, lr[0])))
        var = 0.5 * (var + np.roll(var, 1))
        if var.sum() > 0:
            density += rho_weight * var / ds / var.sum()
    h = 1.0 / (n * density)
    h = _graded(h, np.concatenate([[0.0], np.cumsum(ds)])[:-1], arc, grading)
    cum = np.concatenate([[0.0], np.cumsum(ds / h)])
    t = np.interp(np.linspace(0.0, cum[-1], n, endpoint=False), cum, fine)
    return ParametricCurve(sp(t))


# --------------------------------------------------------------------------
# Test curves
# --------------------------------------------------------------------------


def circle(n=256, radius=1.0, center=(0.0, 0.0), phase=0.0):
    t = phase + 2 * np.pi * np.arange(n) / n
    return ParametricCurve(np.asarray(center) + radius * np.stack([np.cos(t), np.sin(t)], 1))


def ellipse(a=2.0, b=1.0, n=256):
    t = 2 * np.pi * np.arange(n) / n
    return ParametricCurve(np.stack([a * np.cos(t), b * np.sin(t)], 1))


def figure_eight(n=256, a=1.0):
    """Gerono-type lemniscate ``(a sin t, a sin t cos t)``; turning number 0."""
    t = 2 * np.pi * (np.arange(n) + 0.5) / n
    return ParametricCurve(np.stack([a * np.sin(t), a * np.sin(t) * np.cos(t)], 1))


def wulff_curve(a, radius=1.0, n=512):
    """``radius * dW`` sampled counterclockwise at uniform arc length."""
    if a.kind == "crystalline":
        return polygon_curve(radius * a.wulff.vertices, n)
    dense = ParametricCurve(radius * a.wulff_shape(max(8 * n, 4096)).vertices)
    return resample_uniform(dense, n)


def polygon_curve(vertices, n=512):
    """Sample a closed polygon with ~``n`` points, keeping every vertex."""
    v = np.asarray(vertices, dtype=float)
    e = np.roll(v, -1, axis=0) - v
    L = np.hypot(e[:, 0], e[:, 1])
    per = np.maximum(1, np.round(n * L / L.sum()).astype(int))
    pts = [v[i] + np.outer(np.arange(k) / k, e[i]) for i, k in enumerate(per)]
    return ParametricCurve(np.vstack(pts))


# --------------------------------------------------------------------------
# Crystalline polygons
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CrystalCurve:
    """Wulff-adapted closed polygon stored as a cyclic facet list.

    Facet ``F`` has outward normal ``wulff.facet_normals[normal_index[F]]``,
    length ``lengths[F]`` and starts at the end of facet ``F - 1``; facet 0
    starts at ``anchor``.
    """

    anchor: np.ndarray
    normal_index: np.ndarray
    lengths: np.ndarray
    wulff: WulffPolygon

    def __post_init__(self):
        a = np.array(self.anchor, dtype=float).reshape(2)
        idx = np.array(self.normal_index, dtype=int).ravel()
        ln = np.array(self.lengths, dtype=float).ravel()
        if idx.shape != ln.shape or idx.size < 2:
            raise CurveError("need matching normal_index and length lists (>= 2 facets)")
        m = len(self.wulff)
        if np.any((idx < 0) | (idx >= m)):
            raise CurveError("normal_index outside the Wulff normal fan")
        for arr in (a, idx, ln):
            arr.setflags(write=False)
        object.__setattr__(self, "anchor", a)
        object.__setattr__(self, "normal_index", idx)
        object.__setattr__(self, "lengths", ln)
        self.turns  # noqa: B018  (validates admissibility)

    def __len__(self):
        return len(self.lengths)

    @property
    def normals(self):
        return self.wulff.facet_normals[self.normal_index]

    @property
    def tangents(self):
        return _rot_left(self.normals)

    @cached_property
    def turns(self):
        """+1 (convex) / -1 (concave) turn at the end of each facet."""
        m = len(self.wulff)
        d = (np.roll(self.normal_index, -1) - self.normal_index) % m
        out = np.where(d == 1, 1, np.where(d == m - 1, -1, 0))
        if np.any(out == 0):
            bad = int(np.flatnonzero(out == 0)[0])
            raise CurveError(f"non-admissible transition after facet {bad}: "
                             "consecutive normals are not adjacent in the Wulff fan")
        return out

    @cached_property
    def delta(self):
        t_in = np.roll(self.turns, 1)
        t_out = self.turns
        return np.where((t_in > 0) & (t_out > 0), 1,
                        np.where((t_in < 0) & (t_out < 0), -1, 0))

    @cached_property
    def vertices(self):
        """Start vertex of every facet."""
        steps = self.lengths[:, None] * self.tangents
        return self.anchor + np.vstack([[0.0, 0.0], np.cumsum(steps, axis=0)[:-1]])

    @property
    def closure_defect(self):
        return float(np.hypot(*np.sum(self.lengths[:, None] * self.tangents, axis=0)))

    @property
    def perimeter(self):
        return float(np.sum(self.lengths))

    @property
    def area(self):
        v = self.vertices
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @cached_property
    def vertex_field(self):
        """Cahn-Hoffman value at every vertex: the Wulff vertex shared by the
        normals of the two facets meeting there."""
        m = len(self.wulff)
        prev = np.roll(self.normal_index, 1)
        cur = self.normal_index
        # Wulff vertex k+1 is shared by Wulff edges k and k+1
        shared = np.where(((cur - prev) % m) == 1, cur, prev)
        return self.wulff.vertices[shared % m]

    def kappa_phi(self):
        return aniso_curvature_crystal(self)

    def to_parametric(self, n=512):
        return polygon_curve(self.vertices, n)

    def to_dict(self):
        return {"type": "crystal", "anchor": self.anchor.tolist(),
                "facets": [{"normal_index": int(k), "length": float(l)}
                           for k, l in zip(self.normal_index, self.lengths)]}

    @classmethod
    def from_vertices(cls, vertices, wulff, tol=ANGLE_MATCH_TOL):
        """Build from polygon vertices (ccw for convex shapes); collinear
        vertices are merged and every edge must match a Wulff normal."""
        v = np.asarray(vertices, dtype=float)
        e = np.roll(v, -1, axis=0) - v
        L = np.hypot(e[:, 0], e[:, 1])
        keep = L > 0
        v, e, L = v[keep], e[keep], L[keep]
        ang = np.arctan2(-e[:, 0], e[:, 1])  # angle of the right normal
        wang = wulff.facet_angles
        diff = np.abs(_wrap(ang[:, None] - wang[None, :]))
        idx = np.argmin(diff, axis=1)
        if np.any(diff[np.arange(len(idx)), idx] > tol):
            raise CurveError("polygon edge is not parallel to any Wulff facet")
        # merge runs of equal normals
        starts = np.flatnonzero(idx != np.roll(idx, 1))
        if starts.size == 0:
            raise CurveError("degenerate polygon")
        lens = np.add.reduceat(np.roll(L, -starts[0]), starts - starts[0])
        return cls(v[starts[0]], idx[starts], lens, wulff)

    @classmethod
    def from_dict(cls, d, wulff):
        facets = d["facets"]
        return cls(d["anchor"], [f["normal_index"] for f in facets],
                   [f["length"] for f in facets], wulff)


def aniso_curvature_smooth(c, a):
    """``kappa_phi = (sigma + sigma'')(theta) kappa`` at every sample."""
    if not a.is_smooth:
        raise AnisotropyError("crystalline anisotropy: use aniso_curvature_crystal")
    return a.radius_of_curvature(c.theta) * c.kappa


def aniso_curvature_cell(c, a):
    """``kappa_phi`` as the discrete derivative of the Cahn-Hoffman field:
    ``sigma + sigma''`` averaged over the turning ``[theta_{i-1}, theta_{i+1}]``
    of each sample times ``kappa``.  Agrees with :func:`aniso_curvature_smooth`
    to second order and stays accurate when ``sigma + sigma''`` varies on the
    sampling scale."""
    if not a.is_smooth:
        raise AnisotropyError("crystalline anisotropy: use aniso_curvature_crystal")
    th = c.theta
    inc = c._lift[2]
    lo = th - np.roll(inc, 1)
    hi = th + inc
    return a.mean_rho(lo, hi) * c.kappa


def aniso_curvature_crystal(c, a=None, w=None):
    """``kappa_phi^F = delta_F * l_W / l_F`` per facet."""
    w = w if w is not None else (a.wulff if a is not None else c.wulff)
    if np.any(c.lengths <= 0):
        raise CurveError("facet lengths must be positive")
    return c.delta * w.facet_lengths[c.normal_index] / c.lengths


# --------------------------------------------------------------------------
# Cahn-Hoffman fields
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CahnHoffmanField:
    """Cahn-Hoffman vectors at the samples of a curve.

    ``lipschitz_bound`` is ``max |N_{i+1} - N_i| / |u_{i+1} - u_i|``, the
    discrete ``||N_s||_inf``.
    """

    values: np.ndarray
    lipschitz_bound: float
    points: np.ndarray
    kappa_phi: np.ndarray = field(default=None)

    def derivative(self):
        """Forward differences ``(N_{i+1} - N_i) / |u_{i+1} - u_i|`` on edges."""
        dn = np.roll(self.values, -1, axis=0) - self.values
        e = np.roll(self.points, -1, axis=0) - self.points
        L = np.hypot(e[:, 0], e[:, 1])
        return dn / L[:, None], e / L[:, None]


def _field_lipschitz(values, points):
    dn = np.roll(values, -1, axis=0) - values
    e = np.roll(points, -1, axis=0) - points
    return float(np.max(np.hypot(*dn.T) / np.hypot(*e.T)))


def _crystal_samples(c, wulff, tol=1e-9):
    """Identify a sampled polygon as a crystalline curve.

    Returns the CrystalCurve, the index of the facet each sample lies on and
    the fraction along that facet.
    """
    p = c.points
    e = c.edges
    ang = np.arctan2(e[:, 1], e[:, 0])
    turn = np.abs(_wrap(ang - np.roll(ang, 1)))
    corners = np.flatnonzero(turn > tol)
    if corners.size < 2:
        raise CurveError("sampled curve has fewer than two corners")
    cc = CrystalCurve.from_vertices(p[corners], wulff)
    k = len(corners)
    facet = np.empty(c.n, dtype=int)
    frac = np.empty(c.n)
    for f in range(k):
        i0 = corners[f]
        i1 = corners[(f + 1) % k]
        idx = np.arange(i0, i1 if i1 > i0 else i1 + c.n) % c.n
        seg = p[corners[(f + 1) % k]] - p[i0]
        ll = float(seg @ seg)
        facet[idx] = f
        frac[idx] = (p[idx] - p[i0]) @ seg / ll
    return cc, facet, frac


def cahn_hoffman_field(c, a):
    """Energy-minimizing Cahn-Hoffman field ``N`` on ``c``.

    * smooth ``a`` and sampled ``c``: ``N_i = D gamma_polar(nu_i)``;
    * crystalline ``a`` and a Wulff-adapted polygon (a :class:`CrystalCurve`
      or a sampled polygon whose corners are samples): ``N`` interpolates
      linearly along each facet between the Wulff vertices at its ends.
    """
    if isinstance(c, CrystalCurve):
        if a.kind != "crystalline":
            raise CurveError("crystal curves need a crystalline anisotropy")
        vals = c.vertex_field
        pts = c.vertices
        lip = float(np.max(np.hypot(*(np.roll(vals, -1, 0) - vals).T) / c.lengths))
        return CahnHoffmanField(vals, lip, pts, aniso_curvature_crystal(c))
    if a.is_smooth:
        th = c.theta
        s, s1, _ = a.support_angle(th)
        vals = s[:, None] * c.normals + s1[:, None] * c.tangents
        return CahnHoffmanField(vals, _field_lipschitz(vals, c.points), c.points,
                                aniso_curvature_smooth(c, a))
    cc, facet, frac = _crystal_samples(c, a.wulff)
    nv = cc.vertex_field
    start = nv[facet]
    end = nv[(facet + 1) % len(cc)]
    vals = start + frac[:, None] * (end - start)
    kphi = aniso_curvature_crystal(cc)[facet]
    return CahnHoffmanField(vals, _field_lipschitz(vals, c.points), c.points, kphi)


def wulff_offset(c, f, d):
    """Offset curve ``u + d N`` (outward for ``d > 0``)."""
    d = float(d)
    if f.lipschitz_bound > 0 and abs(d) * f.lipschitz_bound >= 1.0:
        raise CurveError(f"offset radius exceeded: |d| = {abs(d):g} >= "
                         f"1/||N_s|| = {1.0 / f.lipschitz_bound:g}")
    pts = np.asarray(c.points if hasattr(c, "points") else c) + d * f.values
    return build_frames(ParametricCurve(pts))


# --------------------------------------------------------------------------
# RW certificates
# --------------------------------------------------------------------------


@dataclass
class RWReport:
    radius: float
    probes: np.ndarray
    inner_ok: np.ndarray
    outer_ok: np.ndarray
    inner_depth: np.ndarray
    outer_depth: np.ndarray

    @property
    def passed(self):
        return bool(np.all(self.inner_ok) and np.all(self.outer_ok))

    @property
    def inner_passed(self):
        return bool(np.all(self.inner_ok))

    @property
    def outer_passed(self):
        return bool(np.all(self.outer_ok))

    @property
    def failures(self):
        return int(np.sum(~self.inner_ok) + np.sum(~self.outer_ok))

    @property
    def worst_penetration(self):
        return float(max(self.inner_depth.max(initial=0.0), self.outer_depth.max(initial=0.0)))


def _graph_window(theta, period, i, max_turn=np.pi / 3):
    """Maximal index arc around ``i`` on which ``nu`` stays within
    ``max_turn`` of ``nu_i`` (at most one loop)."""
    n = len(theta)
    ext = np.concatenate([theta - period, theta, theta + period])
    c = i + n
    lo_cut = c - n // 2
    hi_cut = c + n // 2
    bad = np.abs(ext - ext[c]) >= max_turn
    left = np.flatnonzero(bad[lo_cut:c])
    right = np.flatnonzero(bad[c + 1 : hi_cut + 1])
    lo = lo_cut + (left[-1] + 1 if left.size else 0)
    hi = c + (right[0] if right.size else hi_cut - c)
    return np.arange(lo, hi + 1) % n


def check_local_rw(c, a, radius, probes=None, tol=1e-9, face_samples=17):
    """Local two-sided ``R W`` tangency certificate.

    At each probe the Wulff translate ``u_i -+ R n`` (``n`` from the exposed
    face of ``W`` at ``nu_i``) is placed on the inner and outer side; the probe
    passes if no sample of the local graph window lies in the open translate.
    For a segment face every sampled ``n`` on it is tried (existence of a
    tangent translate).
    """
    c = build_frames(c)
    R = float(radius)
    n = c.n
    if probes is None or probes >= n:
        idx = np.arange(n)
    else:
        idx = np.unique(np.linspace(0, n, int(probes), endpoint=False).astype(int))
    theta = c.theta
    period = 2 * np.pi * c.turning_number
    res = {k: np.zeros(len(idx)) for k in ("inner", "outer")}
    for q, i in enumerate(idx):
        win = _graph_window(theta, period, i)
        pts = c.points[win]
        face = a.cahn_hoffman(c.normals[i])
        cands = ([face.start] if face.is_point else
                 [face.point(t) for t in np.linspace(0, 1, face_samples)])
        for side, sgn in (("inner", -1.0), ("outer", 1.0)):
            best = np.inf
            for nvec in cands:
                center = c.points[i] + sgn * R * nvec
                g = a.norm(pts - center)
                depth = float(np.max(R - g))
                best = min(best, depth)
                if best <= tol * R:
                    break
            res[side][q] = max(best, 0.0)
    inner_ok = res["inner"] <= tol * max(R, 1.0)
    outer_ok = res["outer"] <= tol * max(R, 1.0)
    return RWReport(R, idx, inner_ok, outer_ok, res["inner"], res["outer"])


# --------------------------------------------------------------------------
# Hausdorff distance
# --------------------------------------------------------------------------


def _points_to_polyline(p, q, chunk=2048):
    """Distance from each point of ``p`` to the closed polyline ``q``."""
    a = q
    b = np.roll(q, -1, axis=0)
    ab = b - a
    ab2 = np.einsum("ij,ij->i", ab, ab)
    ab2 = np.where(ab2 == 0, 1.0, ab2)
    out = np.empty(len(p))
    for lo in range(0, len(p), chunk):
        x = p[lo : lo + chunk, None, :]
        t = np.clip(np.einsum("ijk,jk->ij", x - a[None], ab) / ab2, 0.0, 1.0)
        proj = a[None] + t[..., None] * ab[None]
        d = x - proj
        out[lo : lo + chunk] = np.sqrt(np.min(np.einsum("ijk,ijk->ij", d, d), axis=1))
    return out


def _as_array(c):
    return np.asarray(c.points if hasattr(c, "points") else c, dtype=float)


def hausdorff_distance(c1, c2):
    """Symmetric Hausdorff distance between two closed polylines.

    Samples and edge midpoints of each curve are measured against the other
    polyline (segment projection), so the value is robust to resolution.
    """
    p1, p2 = _as_array(c1), _as_array(c2)
    if len(p1) == 0 or len(p2) == 0:
        raise CurveError("empty curve")
    m1 = 0.5 * (p1 + np.roll(p1, -1, axis=0))
    m2 = 0.5 * (p2 + np.roll(p2, -1, axis=0))
    d12 = _points_to_polyline(np.vstack([p1, m1]), p2).max()
    d21 = _points_to_polyline(np.vstack([p2, m2]), p1).max()
    return float(max(d12, d21))
