"""Independent reference computations for the test-suite.

Nothing here imports the package: each oracle re-derives its value from
closed forms, brute force or a separate integrator.
"""

import json
import math
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

FROZEN_PATH = Path(__file__).with_name("data") / "frozen.json"


def frozen():
    with open(FROZEN_PATH, encoding="utf-8") as fh:
        return json.load(fh)


# --------------------------------------------------------------------------
# flows
# --------------------------------------------------------------------------


def homothetic_radius(t, r0=1.0):
    """``R' = -1/R``: the radius of a shrinking Wulff shape."""
    return math.sqrt(r0 * r0 - 2.0 * t)


def square_side(t, l0=2.0):
    """Side of a square under the crystalline flow of the unit-square Wulff
    shape, integrating ``l' = -4/l`` with LSODA."""
    if t == 0:
        return l0
    sol = solve_ivp(lambda _s, y: -4.0 / y, (0.0, t), [l0], method="LSODA",
                    rtol=1e-13, atol=1e-15)
    return float(sol.y[0, -1])


def square_extinction(l0=2.0):
    """Time at which ``l' = -4/l`` reaches zero (root of ``l^2`` on a fine
    integration)."""
    sol = solve_ivp(lambda _s, y: [-8.0], (0.0, 10.0), [l0 * l0], rtol=1e-13,
                    events=lambda _s, y: y[0], dense_output=True)
    return float(sol.t_events[0][0])


def ellipse_curvature(t, a=2.0, b=1.0):
    return a * b / (a * a * math.sin(t) ** 2 + b * b * math.cos(t) ** 2) ** 1.5


def cos4_support(theta, beta):
    """``(sigma, sigma', sigma'')`` of ``1 + beta cos 4 theta``."""
    return (1 + beta * math.cos(4 * theta), -4 * beta * math.sin(4 * theta),
            -16 * beta * math.cos(4 * theta))


def cos4_psi(theta, beta):
    s, _, s2 = cos4_support(theta, beta)
    return s * (s + s2)


def polar_bruteforce(vertices, x):
    """``sup{xi . x : xi in W}`` over the vertices of a polygonal Wulff shape."""
    return float(np.max(np.asarray(vertices) @ np.asarray(x)))


def gauge_bruteforce(vertices, x):
    """Gauge of a convex polygon by bisection on the radial ray."""
    v = np.asarray(vertices, dtype=float)
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        return 0.0
    e = np.roll(v, -1, axis=0) - v
    nrm = np.column_stack([e[:, 1], -e[:, 0]])
    off = np.einsum("ij,ij->i", nrm, v)
    lo, hi = 0.0, 1e6
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.all(nrm @ (x / mid) <= off + 1e-15):
            hi = mid
        else:
            lo = mid
    return hi


# --------------------------------------------------------------------------
# pointwise morphology
# --------------------------------------------------------------------------


def _segments(rings):
    p0 = np.vstack([r for r in rings])
    p1 = np.vstack([np.roll(r, -1, axis=0) for r in rings])
    return p0, p1


def _point_in_rings(pts, rings):
    """Even-odd rule over all rings (shell and holes)."""
    inside = np.zeros(len(pts), dtype=bool)
    x, y = pts[:, 0], pts[:, 1]
    for r in rings:
        x0, y0 = r[:, 0], r[:, 1]
        x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
        for a0, b0, a1, b1 in zip(x0, y0, x1, y1):
            cross = (b0 > y) != (b1 > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xi = a0 + (y - b0) * (a1 - a0) / (b1 - b0)
            inside ^= cross & (x < xi)
    return inside


def _gauge_distance(pts, p0, p1, body, chunk=2048):
    """``min over q in the segments of gauge_B(q - y)`` for every point ``y``.

    A disk body (``("disk", r)``) uses the Euclidean distance over ``r``.  A
    polygonal body uses the exact support description of the Minkowski sum
    ``S + s(-B)``: ``y`` lies in it iff ``n . y <= h_S(n) + s h_B(-n)`` for the
    facet normals of ``-B`` and the two normals of ``S``.
    """
    out = np.empty(len(pts))
    d = p1 - p0
    if body[0] == "disk":
        r = body[1]
        dd = np.einsum("ij,ij->i", d, d)
        for i in range(0, len(pts), chunk):
            y = pts[i:i + chunk]
            t = np.clip(np.einsum("kij,ij->ki", y[:, None, :] - p0[None], d) / dd, 0.0, 1.0)
            q = p0[None] + t[..., None] * d[None]
            out[i:i + chunk] = np.min(np.hypot(*(q - y[:, None, :]).transpose(2, 0, 1)), axis=1) / r
        return out
    bv = np.asarray(body[1], dtype=float)
    e = np.roll(bv, -1, axis=0) - bv
    bn = np.column_stack([e[:, 1], -e[:, 0]])
    bn /= np.hypot(bn[:, 0], bn[:, 1])[:, None]
    # facets of -B have normals -bn and the same supports
    normals = -bn
    h_negB = np.max(-normals @ bv.T, axis=1)  # h_{-B}(n) = h_B(-n)
    seg_n = np.column_stack([d[:, 1], -d[:, 0]])
    seg_n /= np.hypot(seg_n[:, 0], seg_n[:, 1])[:, None]
    for i in range(0, len(pts), 64 * chunk):
        y = pts[i:i + 64 * chunk]
        best = np.full(len(y), np.inf)
        for k in range(len(p0)):
            cand = []
            for n, hb in zip(normals, h_negB):
                hs = max(n @ p0[k], n @ p1[k])
                cand.append((y @ n - hs) / hb)
            for n in (seg_n[k], -seg_n[k]):
                hs = n @ p0[k]
                hb = np.max(-(bv @ n))
                cand.append((y @ n - hs) / hb)
            best = np.minimum(best, np.max(cand, axis=0))
        out[i:i + 64 * chunk] = np.maximum(best, 0.0)
    return out


def erosion_member(pts, rings, body):
    """``y + B`` inside the region: ``y`` inside and gauge-distance to the
    boundary at least 1."""
    p0, p1 = _segments(rings)
    return _point_in_rings(pts, rings) & (_gauge_distance(pts, p0, p1, body) >= 1.0)


def dilation_member(pts, rings, body):
    """``x`` in the region or within gauge-distance 1 of its boundary
    (distance measured with the reflected body)."""
    p0, p1 = _segments(rings)
    if body[0] == "disk":
        refl = body
    else:
        refl = ("polygon", -np.asarray(body[1], dtype=float))
    return _point_in_rings(pts, rings) | (_gauge_distance(pts, p0, p1, refl) <= 1.0)
