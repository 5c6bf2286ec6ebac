"""Planar anisotropies: norms, polars, support-angle functions and Wulff shapes.

An anisotropy is a norm ``gamma`` on the plane.  Everything the flows need is
expressed through the support-angle function

    sigma(theta) = gamma_polar(cos theta, sin theta),

which is the support function of the Wulff shape ``W = {gamma <= 1}``.

Three representations are provided:

* ``smooth``      -- sigma given as a finite cosine series (``euclidean`` is the
                     special case sigma == 1),
* ``crystalline`` -- W given as a centrally symmetric convex polygon,
* ``regularized`` -- a smooth elliptic approximation of another anisotropy
                     built by :func:`regularize`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline, PchipInterpolator

__all__ = [
    "AnisotropyError",
    "KindUnsupportedError",
    "Anisotropy",
    "WulffPolygon",
    "Face",
    "eval_norm",
    "eval_polar",
    "support_angle",
    "psi",
    "ellipticity_constant",
    "wulff_shape",
    "regularize",
    "cahn_hoffman_direction",
    "bump_kernel",
]

DEFAULT_GRID = 4096
ALGEBRAIC_TOL = 1e-9
DIFFERENCED_TOL = 1e-6


class AnisotropyError(ValueError):
    """Invalid anisotropy data or arguments."""


class KindUnsupportedError(AnisotropyError):
    """Operation needs a classical second derivative of sigma."""


def _as_points(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise AnisotropyError("planar vectors must have a trailing axis of size 2")
    return x


def _unit(theta):
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def _tangent(theta):
    # d/dtheta of the unit normal (cos, sin)
    return np.stack([-np.sin(theta), np.cos(theta)], axis=-1)


# --------------------------------------------------------------------------
# Wulff polygons
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WulffPolygon:
    """Convex polygon, vertices counterclockwise.

    Edge ``k`` runs from ``vertices[k]`` to ``vertices[k + 1]``; its outward
    unit normal is ``facet_normals[k]`` and its length ``facet_lengths[k]``.
    """

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise AnisotropyError("a polygon needs at least 3 planar vertices")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __len__(self):
        return len(self.vertices)

    @cached_property
    def edges(self):
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    @cached_property
    def facet_lengths(self):
        return np.hypot(self.edges[:, 0], self.edges[:, 1])

    @cached_property
    def facet_normals(self):
        e = self.edges / self.facet_lengths[:, None]
        return np.stack([e[:, 1], -e[:, 0]], axis=1)

    @cached_property
    def facet_angles(self):
        n = self.facet_normals
        return np.mod(np.arctan2(n[:, 1], n[:, 0]), 2 * np.pi)

    @cached_property
    def facet_offsets(self):
        """Support values ``h_k = n_k . v_k`` of the edge lines."""
        return np.einsum("ij,ij->i", self.facet_normals, self.vertices)

    @property
    def area(self):
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def gauge(self, x):
        """Minkowski gauge ``inf{r > 0 : x in r W}`` (0 must be interior)."""
        x = _as_points(x)
        vals = x @ self.facet_normals.T / self.facet_offsets
        return np.maximum(np.max(vals, axis=-1), 0.0)

    def support(self, x):
        x = _as_points(x)
        return np.max(x @ self.vertices.T, axis=-1)

    def is_convex(self, tol=1e-12):
        e = self.edges
        cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
        return bool(np.all(cross > -tol)) and self.area > 0

    def scaled(self, r, center=(0.0, 0.0)):
        return WulffPolygon(r * self.vertices + np.asarray(center, dtype=float))


@dataclass(frozen=True, eq=False)
class Face:
    """Exposed face of a Wulff shape: a point (start == end) or a segment."""

    start: np.ndarray
    end: np.ndarray

    @property
    def is_point(self):
        return bool(np.allclose(self.start, self.end, atol=1e-14, rtol=0))

    def contains(self, p, tol=1e-9):
        p = np.asarray(p, dtype=float)
        d = self.end - self.start
        dd = float(d @ d)
        if dd == 0.0:
            return float(np.linalg.norm(p - self.start)) <= tol
        t = np.clip((p - self.start) @ d / dd, 0.0, 1.0)
        return float(np.linalg.norm(p - self.start - t * d)) <= tol

    def point(self, t=0.5):
        return (1 - t) * self.start + t * self.end


# --------------------------------------------------------------------------
# Mollifier
# --------------------------------------------------------------------------

_BUMP_MASS = quad(lambda u: np.exp(-1.0 / (1.0 - u * u)), -1.0, 1.0, epsabs=1e-15)[0]


def bump_kernel(x, width):
    """C-infinity even bump supported on ``(-width, width)`` with unit mass."""
    u = np.asarray(x, dtype=float) / width
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ui * ui))
    return out / (_BUMP_MASS * width)


def _wrap(x):
    return (np.asarray(x, dtype=float) + np.pi) % (2 * np.pi) - np.pi


# --------------------------------------------------------------------------
# Anisotropy
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Anisotropy:
    """A planar norm in one of three representations.

    Use the constructors :meth:`euclidean`, :meth:`fourier`,
    :meth:`crystalline` and :func:`regularize` rather than the raw fields.
    """

    kind: str
    coeffs: np.ndarray | None = None
    wulff: WulffPolygon | None = None
    epsilon: float | None = None
    base: "Anisotropy | None" = None
    _table: dict = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    KINDS = ("euclidean", "smooth", "crystalline", "regularized")

    # -- constructors -----------------------------------------------------

    @classmethod
    def euclidean(cls):
        return cls("euclidean", coeffs=np.array([1.0]))

    @classmethod
    def fourier(cls, coeffs):
        """sigma(theta) = sum_k coeffs[k] cos(k theta); odd k must vanish."""
        c = np.array(coeffs, dtype=float).ravel()
        if c.size == 0:
            raise AnisotropyError("empty coefficient list")
        if np.any(c[1::2] != 0.0):
            raise AnisotropyError("odd cosine modes break the evenness of a norm")
        c.setflags(write=False)
        a = cls("smooth", coeffs=c)
        th = np.linspace(0, 2 * np.pi, DEFAULT_GRID, endpoint=False)
        s, _, s2 = a.support_angle(th)
        if np.min(s) <= 0:
            raise AnisotropyError("sigma must be positive")
        if np.min(s + s2) < -ALGEBRAIC_TOL:
            raise AnisotropyError("sigma + sigma'' < 0: polar is not convex")
        return a

    @classmethod
    def crystalline(cls, vertices):
        w = WulffPolygon(vertices)
        if not w.is_convex():
            raise AnisotropyError("Wulff vertices must form a convex ccw polygon")
        v = w.vertices
        n = len(v)
        if n % 2 or not np.allclose(v[: n // 2], -v[n // 2 :], atol=1e-12):
            raise AnisotropyError("Wulff polygon must be centrally symmetric")
        if np.min(w.facet_offsets) <= 0:
            raise AnisotropyError("origin must be interior to the Wulff polygon")
        return cls("crystalline", wulff=w)

    @classmethod
    def square(cls, half=1.0):
        """gamma = ||.||_inf / half, Wulff shape the square [-half, half]^2."""
        h = float(half)
        return cls.crystalline([[h, -h], [h, h], [-h, h], [-h, -h]])

    @classmethod
    def regular_polygon(cls, n_sides, radius=1.0, phase=0.0):
        if n_sides % 2 or n_sides < 4:
            raise AnisotropyError("need an even number (>= 4) of sides")
        t = phase + 2 * np.pi * np.arange(n_sides) / n_sides
        return cls.crystalline(radius * _unit(t))

    # -- basic predicates -------------------------------------------------

    @property
    def is_smooth(self):
        return self.kind != "crystalline"

    def _require_smooth(self, what):
        if not self.is_smooth:
            raise KindUnsupportedError(f"{what} is undefined for crystalline anisotropies")

    # -- sigma ------------------------------------------------------------

    def support_angle(self, theta):
        """Return ``(sigma, sigma', sigma'')`` at angle(s) ``theta``."""
        th = np.asarray(theta, dtype=float)
        if self.kind in ("euclidean", "smooth"):
            k = np.arange(self.coeffs.size)
            arg = np.multiply.outer(th, k)
            c = np.cos(arg)
            s = np.sin(arg)
            sig = c @ self.coeffs
            d1 = -(s @ (k * self.coeffs))
            d2 = -(c @ (k * k * self.coeffs))
            return sig, d1, d2
        if self.kind == "regularized":
            return self._regularized_sigma(th)
        raise KindUnsupportedError("sigma'' is a measure for crystalline anisotropies")

    def sigma(self, theta):
        th = np.asarray(theta, dtype=float)
        if self.kind == "crystalline":
            return self.wulff.support(_unit(th))
        return self.support_angle(th)[0]

    def radius_of_curvature(self, theta):
        """``sigma + sigma''``: radius of curvature of the Wulff boundary."""
        self._require_smooth("sigma + sigma''")
        if self.kind == "regularized":
            t = self._table
            return t["scale"] * (self._rho_m(np.asarray(theta, float)) + t["eps_add"])
        s, _, s2 = self.support_angle(theta)
        return s + s2

    def rho_primitive(self, theta, fine=1 << 18):
        """Lifted primitive ``int_0^theta (sigma + sigma'')``, from a tabulated
        cumulative integral (periodic part interpolated by a cubic spline)."""
        self._require_smooth("sigma + sigma''")
        tab = self._cache.get("rho_primitive")
        if tab is None:
            th = 2 * np.pi * np.arange(fine + 1) / fine
            r = self.radius_of_curvature(th)
            cum = np.concatenate([[0.0], np.cumsum(0.5 * (r[1:] + r[:-1]))]) * (th[1] - th[0])
            mean = cum[-1] / (2 * np.pi)
            per = cum - mean * th
            tab = (mean, CubicSpline(th, per, bc_type="periodic"))
            self._cache["rho_primitive"] = tab
        mean, spl = tab
        th = np.asarray(theta, dtype=float)
        return mean * th + spl(np.mod(th, 2 * np.pi))

    def mean_rho(self, lo, hi):
        """Average of ``sigma + sigma''`` over ``[lo, hi]`` (lifted angles)."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        w = hi - lo
        small = np.abs(w) < 1e-9
        safe = np.where(small, 1.0, w)
        avg = (self.rho_primitive(hi) - self.rho_primitive(lo)) / safe
        if np.any(small):
            avg = np.where(small, self.radius_of_curvature(0.5 * (lo + hi)), avg)
        return avg

    def psi(self, theta):
        self._require_smooth("psi")
        if self.kind == "euclidean":
            return np.ones_like(np.asarray(theta, dtype=float))
        return self.sigma(theta) * self.radius_of_curvature(theta)

    # -- norms ------------------------------------------------------------

    def polar(self, x):
        x = _as_points(x)
        if self.kind == "crystalline":
            return np.maximum(self.wulff.support(x), 0.0)
        r = np.hypot(x[..., 0], x[..., 1])
        th = np.arctan2(x[..., 1], x[..., 0])
        return r * self.sigma(th)

    def norm(self, x, method="table"):
        """``gamma(x)``; smooth kinds use the radial function of ``W``
        (``method="table"``) or a direct maximization (``"search"``)."""
        x = _as_points(x)
        if self.kind == "crystalline":
            return self.wulff.gauge(x)
        if self.kind == "euclidean":
            return np.hypot(x[..., 0], x[..., 1])
        if method == "search":
            return self._smooth_norm(x)
        r = np.hypot(x[..., 0], x[..., 1])
        phi = np.mod(np.arctan2(x[..., 1], x[..., 0]), 2 * np.pi)
        return r / self._radial_spline()(phi)

    def _radial_spline(self, resolution=16384):
        # radius of the boundary of W as a periodic function of polar angle
        spl = self._cache.get("radial")
        if spl is None:
            th = 2 * np.pi * np.arange(resolution) / resolution
            s, s1, _ = self.support_angle(th)
            pts = s[:, None] * _unit(th) + s1[:, None] * _tangent(th)
            phi = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * np.pi)
            k = int(np.argmin(phi))
            phi = np.roll(phi, -k)
            rad = np.roll(np.hypot(pts[:, 0], pts[:, 1]), -k)
            if np.any(np.diff(phi) <= 0):
                raise AnisotropyError("Wulff boundary is not star-shaped in polar angle")
            spl = CubicSpline(np.append(phi, phi[0] + 2 * np.pi), np.append(rad, rad[0]),
                              bc_type="periodic")
            self._cache["radial"] = spl
        return spl

    def _smooth_norm(self, x, coarse=512, iters=48):
        # gamma(x) = sup_theta x.nu(theta) / sigma(theta): grid argmax, then
        # golden-section search on the bracketing cells
        shape = x.shape[:-1]
        pts = x.reshape(-1, 2)
        out = np.zeros(len(pts))
        r = np.hypot(pts[:, 0], pts[:, 1])
        nz = np.flatnonzero(r > 0)
        if nz.size == 0:
            return out.reshape(shape)
        p = pts[nz] / r[nz, None]
        grid = 2 * np.pi * np.arange(coarse) / coarse
        h = grid[1]
        sg = self.sigma(grid)
        ug = _unit(grid)
        g = 0.5 * (np.sqrt(5.0) - 1.0)

        def f(th, q):
            return np.einsum("ij,ij->i", q, _unit(th)) / self.sigma(th)

        for lo in range(0, len(p), 4096):
            q = p[lo : lo + 4096]
            a = grid[np.argmax((q @ ug.T) / sg, axis=1)] - h
            b = a + 2 * h
            c = b - g * (b - a)
            d = a + g * (b - a)
            fc, fd = f(c, q), f(d, q)
            for _ in range(iters):
                left = fc > fd
                a = np.where(left, a, c)
                b = np.where(left, d, b)
                x_new = np.where(left, b - g * (b - a), a + g * (b - a))
                f_new = f(x_new, q)
                c, d = np.where(left, x_new, d), np.where(left, c, x_new)
                fc, fd = np.where(left, f_new, fd), np.where(left, fc, f_new)
            best = np.maximum(fc, fd)
            out[nz[lo : lo + 4096]] = best * r[nz[lo : lo + 4096]]
        return out.reshape(shape)

    # -- regularized internals -------------------------------------------

    def _rho_m(self, th):
        t = self._table
        if t["atoms"] is not None:
            ang, mass = t["atoms"]
            d = _wrap(np.subtract.outer(th, ang))
            return bump_kernel(d, self.epsilon) @ mass
        return t["rho_spline"](np.mod(th, 2 * np.pi))

    def _regularized_sigma(self, th):
        t = self._table
        thm = np.mod(th, 2 * np.pi)
        sm = t["sigma_spline"](thm)
        sm1 = t["sigma_spline"](thm, 1)
        rho = self._rho_m(th)
        c, e = t["scale"], t["eps_add"]
        sig = c * (sm + e)
        return sig, c * sm1, c * (rho - sm)

    # -- derived data -----------------------------------------------------

    def ellipticity_constant(self, grid=DEFAULT_GRID):
        self._require_smooth("ellipticity constant")
        th = np.linspace(0, 2 * np.pi, grid, endpoint=False)
        val = float(np.min(self.psi(th)))
        if val <= 0:
            raise AnisotropyError(f"anisotropy is not elliptic (min psi = {val:.3e})")
        return val

    def wulff_shape(self, resolution=DEFAULT_GRID):
        if resolution < 3:
            raise AnisotropyError("resolution must be at least 3")
        if self.kind == "crystalline":
            return self.wulff
        th = 2 * np.pi * np.arange(resolution) / resolution
        s, s1, _ = self.support_angle(th)
        pts = s[:, None] * _unit(th) + s1[:, None] * _tangent(th)
        return WulffPolygon(pts)

    def boundary_points(self, theta):
        """Points ``sigma nu + sigma' tau`` of the boundary of ``W`` with outer
        normal angle ``theta`` (smooth kinds)."""
        th = np.asarray(theta, dtype=float)
        s, s1, _ = self.support_angle(th)
        return s[..., None] * _unit(th) + s1[..., None] * _tangent(th)

    def adaptive_angles(self, resolution=4096, rel_change=2e-3, grading=0.05, fine=1 << 18):
        """Normal angles with spacing at most ``2 pi / resolution``, a relative
        change of ``sigma + sigma''`` of about ``rel_change`` per cell, and
        neighbouring spacings differing by a factor of at most ``1 + grading``."""
        self._require_smooth("adaptive sampling")
        dth = 2 * np.pi / fine
        th = dth * np.arange(fine)
        lr = np.log(np.maximum(self.radius_of_curvature(th), 1e-300))
        dlog = np.abs(np.roll(lr, -1) - np.roll(lr, 1)) / (2 * dth)
        h = 1.0 / (resolution / (2 * np.pi) + dlog / rel_change)
        # enforce |h'| <= grading: h_j = min_i h_i + grading |theta_j - theta_i|
        ramp = grading * dth * np.arange(3 * fine)
        hh = np.tile(h, 3)
        fwd = np.minimum.accumulate(hh - ramp) + ramp
        bwd = (np.minimum.accumulate((hh + ramp)[::-1]) - ramp[::-1])[::-1]
        h = np.minimum(fwd, bwd)[fine : 2 * fine]
        cum = np.concatenate([[0.0], np.cumsum(dth / h)])
        k = int(np.ceil(cum[-1]))
        inv = PchipInterpolator(cum, np.append(th, 2 * np.pi))
        return inv(cum[-1] * np.arange(k) / k)

    def cahn_hoffman(self, nu, tol=1e-12):
        """Exposed face of W in direction ``nu`` (the subdifferential of gamma_polar)."""
        nu = np.asarray(nu, dtype=float)
        nrm = float(np.hypot(*nu))
        if nrm == 0:
            raise AnisotropyError("zero direction")
        nu = nu / nrm
        if self.kind == "crystalline":
            v = self.wulff.vertices
            vals = v @ nu
            top = np.flatnonzero(vals >= vals.max() - tol * max(1.0, abs(vals.max())))
            if len(top) == 1:
                p = v[top[0]].copy()
                return Face(p, p)
            # consecutive pair in cyclic order, oriented ccw
            n = len(v)
            i, j = top[0], top[-1]
            if (i + 1) % n == j:
                return Face(v[i].copy(), v[j].copy())
            return Face(v[j].copy(), v[i].copy())
        th = float(np.arctan2(nu[1], nu[0]))
        s, s1, _ = self.support_angle(th)
        p = s * _unit(th) + s1 * _tangent(th)
        return Face(p, p.copy())

    def polar_anisotropy_psi(self, grid=DEFAULT_GRID):
        """Min over angles of rho(rho + rho'') with rho(theta) = gamma(nu(theta)).

        Positivity is the ellipticity of gamma itself, checked with second
        differences of the tabulated gauge.
        """
        self._require_smooth("dual ellipticity")
        th = np.linspace(0, 2 * np.pi, grid, endpoint=False)
        h = th[1]
        rho = self.norm(_unit(th))
        d2 = (np.roll(rho, -1) - 2 * rho + np.roll(rho, 1)) / h**2
        return float(np.min(rho * (rho + d2)))

    def to_dict(self):
        if self.kind == "euclidean":
            return {"kind": "euclidean"}
        if self.kind == "smooth":
            return {"kind": "smooth", "sigma_coeffs": [float(c) for c in self.coeffs]}
        if self.kind == "crystalline":
            return {"kind": "crystalline",
                    "wulff_vertices": [[float(a), float(b)] for a, b in self.wulff.vertices]}
        return {"kind": "regularized", "epsilon": float(self.epsilon),
                "base": self.base.to_dict()}

    @classmethod
    def from_dict(cls, d):
        try:
            kind = d["kind"]
        except (KeyError, TypeError):
            raise AnisotropyError("anisotropy spec needs a 'kind' field") from None
        if kind == "euclidean":
            return cls.euclidean()
        if kind == "smooth":
            return cls.fourier(d["sigma_coeffs"])
        if kind == "crystalline":
            return cls.crystalline(d["wulff_vertices"])
        if kind == "regularized":
            return regularize(cls.from_dict(d["base"]), float(d["epsilon"]))
        raise AnisotropyError(f"unknown anisotropy kind {kind!r}")


def _grid_size(eps):
    m = 4096
    while 2 * np.pi / m > eps / 512:
        m *= 2
    return m


def regularize(a, epsilon, grid=None):
    """Smooth elliptic ``gamma_eps >= gamma`` converging to ``gamma`` as eps -> 0.

    Recipe: mollify ``rho = sigma + sigma''`` (a sum of point masses for a
    crystalline base) with a bump of angular half-width ``epsilon``, recover
    the mollified sigma from ``rho_m`` in Fourier space, add ``epsilon`` (an
    isotropic term, making ``sigma + sigma'' >= c * epsilon``) and rescale by
    ``c = min sigma / (sigma_m + epsilon) <= 1`` so that ``W_eps`` lies inside
    ``W``.
    """
    eps = float(epsilon)
    if not (0 < eps <= 1):
        raise AnisotropyError("epsilon must lie in (0, 1]")
    if a.kind == "regularized":
        a = a.base
    m = int(grid or _grid_size(eps))
    th = 2 * np.pi * np.arange(m) / m

    if a.kind == "crystalline":
        w = a.wulff
        atoms = (w.facet_angles.copy(), w.facet_lengths.copy())
        d = _wrap(np.subtract.outer(th, atoms[0]))
        rho_m = bump_kernel(d, eps) @ atoms[1]
        sigma_base = w.support(_unit(th))
        rho_spline = None
    else:
        atoms = None
        s, _, s2 = a.support_angle(th)
        sigma_base = s
        kern = bump_kernel(_wrap(th), eps) * (2 * np.pi / m)
        rho_m = np.real(np.fft.ifft(np.fft.fft(s + s2) * np.fft.fft(kern)))
        rho_spline = CubicSpline(np.append(th, 2 * np.pi), np.append(rho_m, rho_m[0]),
                                 bc_type="periodic")

    k = np.fft.fftfreq(m, d=1.0 / m)
    rho_hat = np.fft.fft(rho_m)
    denom = 1.0 - k**2
    sig_hat = np.where(np.abs(denom) > 0.5, rho_hat / np.where(denom == 0, 1, denom), 0.0)
    sigma_m = np.real(np.fft.ifft(sig_hat))
    scale = float(np.min(sigma_base / (sigma_m + eps)))
    sigma_spline = CubicSpline(np.append(th, 2 * np.pi), np.append(sigma_m, sigma_m[0]),
                               bc_type="periodic")
    table = {"atoms": atoms, "rho_spline": rho_spline, "sigma_spline": sigma_spline,
             "scale": scale, "eps_add": eps, "grid": m}
    return Anisotropy("regularized", epsilon=eps, base=a, _table=table)


# -- functional API --------------------------------------------------------


def eval_norm(a, x):
    return a.norm(x)


def eval_polar(a, x):
    return a.polar(x)


def support_angle(a, theta):
    return a.support_angle(theta)


def psi(a, theta):
    return a.psi(theta)


def ellipticity_constant(a, grid=DEFAULT_GRID):
    return a.ellipticity_constant(grid)


def wulff_shape(a, resolution=DEFAULT_GRID):
    return a.wulff_shape(resolution)


def cahn_hoffman_direction(a, nu):
    return a.cahn_hoffman(nu)
