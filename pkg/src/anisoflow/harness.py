"""Experiment orchestration: configuration, the epsilon -> 0 convergence
study, refinement tables and deterministic output files."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .anisotropy import Anisotropy, AnisotropyError
from .crystalline_flow import CrystalFlowConfig, CrystalTrace
from .crystalline_flow import run as run_crystal
from .curve import (
    CrystalCurve,
    CurveError,
    ParametricCurve,
    circle,
    hausdorff_distance,
    resample_adaptive,
    resample_uniform,
    wulff_curve,
)
from .morphology import ConvexBody, MorphologyError, approximate_curve, as_region, _polygons
from .smooth_flow import DIAG_COLUMNS, FlowTrace, SmoothFlowConfig, curvature_bound
from .smooth_flow import run as run_smooth

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ConvergenceTable",
    "RefinementReport",
    "run_convergence_study",
    "refinement_table",
    "emit_outputs",
    "load_json",
    "curve_from_dict",
    "body_from_dict",
    "region_from_dict",
    "region_to_dict",
]

log = logging.getLogger(__name__)

KINDS = ("smooth-run", "crystal-run", "approximate", "convergence-study", "refinement-table")


class ConfigError(ValueError):
    """Missing, malformed or inconsistent experiment parameters."""


# --------------------------------------------------------------------------
# file formats
# --------------------------------------------------------------------------


def load_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def curve_from_dict(d, anisotropy=None):
    """Parametric or crystal curve from its JSON object.

    Crystal curves need a crystalline ``anisotropy`` for the facet normals.
    """
    if not isinstance(d, dict) or "type" not in d:
        raise ConfigError("curve spec needs a 'type' field")
    if d["type"] == "parametric":
        return ParametricCurve(np.asarray(d["points"], dtype=float))
    if d["type"] == "crystal":
        if anisotropy is None or anisotropy.kind != "crystalline":
            raise ConfigError("a crystal curve needs a crystalline anisotropy")
        try:
            return CrystalCurve.from_dict(d, anisotropy.wulff)
        except KeyError as exc:
            raise ConfigError(f"crystal curve is missing {exc}") from None
    raise ConfigError(f"unknown curve type {d['type']!r}")


def body_from_dict(d):
    """Convex structuring body: ``{"kind": "disk"|"square"|"regular_polygon"|
    "polygon"|"wulff", ...}``."""
    kind = d.get("kind")
    scale = float(d.get("scale", 1.0))
    if kind == "disk":
        return ConvexBody.disk(float(d.get("radius", scale)), int(d.get("n", 256)))
    if kind == "square":
        return ConvexBody.square(float(d.get("half", scale)))
    if kind == "regular_polygon":
        return ConvexBody.regular_polygon(int(d["sides"]), float(d.get("radius", scale)),
                                          float(d.get("phase", 0.0)))
    if kind == "polygon":
        return ConvexBody(np.asarray(d["vertices"], dtype=float), scale)
    if kind == "wulff":
        return ConvexBody.from_anisotropy(Anisotropy.from_dict(d["anisotropy"]), scale)
    raise ConfigError(f"unknown body kind {kind!r}")


def region_from_dict(d, anisotropy=None):
    """Region from a curve object or ``{"type": "region", "polygons":
    [{"shell": [...], "holes": [[...], ...]}, ...]}``."""
    if d.get("type") == "region":
        from shapely.geometry import MultiPolygon, Polygon

        polys = [Polygon(p["shell"], p.get("holes", [])) for p in d["polygons"]]
        return as_region(polys[0] if len(polys) == 1 else MultiPolygon(polys))
    return as_region(curve_from_dict(d, anisotropy))


def region_to_dict(g):
    polys = []
    for p in _polygons(g):
        polys.append({"shell": [list(map(float, xy)) for xy in p.exterior.coords[:-1]],
                      "holes": [[list(map(float, xy)) for xy in r.coords[:-1]]
                                for r in p.interiors]})
    return {"type": "region", "polygons": polys}


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """Parameters of one experiment.

    Only the fields relevant to ``kind`` are read.  The convergence study
    uses ``study_n``/``study_dt`` with the semi-implicit scheme.
    """

    kind: str
    anisotropy: dict | None = None
    curve: dict | None = None
    n: int = 512
    dt_cfl: float = 0.2
    t_max: float = 0.3
    scheme: str = "explicit"
    dt: float | None = None
    curvature: str = "pointwise"
    reparam: str = "uniform"
    reparam_every: int = 50
    record_every: int = 100
    kappa_stop: float = 1e6
    epsilon: float = 0.1
    r_factor: float = 0.9
    epsilons: tuple = (0.2, 0.1, 0.05)
    checkpoints: tuple = (0.2,)
    study_n: int = 1024
    study_dt: float = 2e-4
    event_tol: float = 1e-6
    dt_max: float = 0.01
    benchmark: str = "circle"
    spatial_levels: tuple = (128, 256, 512)
    temporal_levels: tuple = (0.2, 0.1, 0.05)
    temporal_n: int = 256
    workers: int | None = None
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        self.epsilons = tuple(float(e) for e in self.epsilons)
        self.checkpoints = tuple(float(t) for t in self.checkpoints)
        self.spatial_levels = tuple(int(n) for n in self.spatial_levels)
        self.temporal_levels = tuple(float(c) for c in self.temporal_levels)
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        needs = {
            "smooth-run": ("anisotropy", "curve"),
            "crystal-run": ("anisotropy", "curve"),
            "approximate": ("anisotropy", "curve"),
            "convergence-study": ("anisotropy", "curve"),
            "refinement-table": (),
        }[self.kind]
        for name in needs:
            if getattr(self, name) is None:
                raise ConfigError(f"{self.kind} needs '{name}'")
        if any(e <= 0 for e in self.epsilons):
            raise ConfigError("epsilons must be positive")
        if any(b >= a for a, b in zip(self.epsilons, self.epsilons[1:])):
            raise ConfigError("epsilons must be strictly decreasing")
        if not self.checkpoints or any(t <= 0 for t in self.checkpoints):
            raise ConfigError("checkpoints must be positive")
        if self.kind == "refinement-table":
            if self.benchmark not in ("circle", "wulff"):
                raise ConfigError("refinement needs a closed-form benchmark: circle or wulff")
            if len(self.spatial_levels) < 3 or len(self.temporal_levels) < 3:
                raise ConfigError("a refinement table needs at least 3 levels")
        if self.n < 4 or self.study_n < 4:
            raise ConfigError("need at least 4 samples")

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "kind" not in d:
            raise ConfigError("config needs 'kind'")
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None

    def to_dict(self):
        return asdict(self)

    def build_anisotropy(self):
        try:
            return Anisotropy.from_dict(self.anisotropy)
        except (AnisotropyError, KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad anisotropy spec: {exc}") from None

    def build_curve(self, a=None):
        try:
            return curve_from_dict(self.curve, a)
        except (CurveError, KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad curve spec: {exc}") from None

    def smooth_config(self):
        return SmoothFlowConfig(dt_cfl=self.dt_cfl, t_max=self.t_max, reparam_every=self.reparam_every,
                                kappa_stop=self.kappa_stop, record_every=self.record_every,
                                scheme=self.scheme, dt=self.dt, curvature=self.curvature,
                                reparam=self.reparam)

    def crystal_config(self, t_max=None):
        return CrystalFlowConfig(dt_max=self.dt_max, event_tol=self.event_tol,
                                 t_max=t_max or self.t_max)


# --------------------------------------------------------------------------
# convergence study
# --------------------------------------------------------------------------


@dataclass
class ConvergenceTable:
    """Rows of ``(epsilon, t, hausdorff, max_kappa_phi, ...)`` grouped by
    checkpoint; ``horizon`` is the common window ``min 1 / (2 C'^2)``."""

    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict, repr=False)

    COLUMNS = ("epsilon", "t", "hausdorff", "max_kappa_phi", "c_prime", "kappa_bound",
               "bound_ratio", "within_window", "bound_ok", "status")

    def column(self, name, t=None):
        rows = [r for r in self.rows if t is None or r["t"] == t]
        return np.array([np.nan if r[name] is None else r[name] for r in rows], dtype=float)

    def checkpoints(self):
        return sorted({r["t"] for r in self.rows})

    def nonincreasing(self, t):
        """Whether the distance column at checkpoint ``t`` is nonincreasing
        along the (decreasing) epsilon sweep, plus the offending rows."""
        rows = [r for r in self.rows if r["t"] == t and r["hausdorff"] is not None]
        bad = [rows[k + 1]["epsilon"] for k in range(len(rows) - 1)
               if rows[k + 1]["hausdorff"] > rows[k]["hausdorff"]]
        return not bad, bad

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(r[k]) for k in self.COLUMNS])
        return buf.getvalue()


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _crystal_at(c0, a, cfg, t):
    tr = run_crystal(c0, a, cfg.crystal_config(t_max=t))
    if tr.stop != "t_max":
        return None
    return tr.final.vertices


def _study_row(cfg, eps, targets):
    """One epsilon row: regularize, approximate, flow, compare."""
    a = cfg.build_anisotropy()
    c0 = cfg.build_curve(a)
    row = {"epsilon": eps, "status": "ok"}
    try:
        rep = approximate_curve(c0, a, eps, r_factor=cfg.r_factor, check=False)
        ae = rep.anisotropy
        cur = resample_adaptive(rep.curve_out, cfg.study_n)
        scfg = dict(scheme="semi-implicit", dt=cfg.study_dt, reparam_every=20, record_every=25,
                    curvature="cell", reparam="adaptive", kappa_stop=cfg.kappa_stop)
        times, g, kmax, frames = [], [], [], {}
        t0 = 0.0
        for t in sorted(targets):
            tr = run_smooth(cur, ae, SmoothFlowConfig(t_max=t - t0, **scfg))
            off = 0 if not times else 1  # first frame repeats the previous final one
            times.extend(t0 + np.asarray(tr.times[off:]))
            g.extend(tr.column("g")[off:])
            kmax.extend(tr.column("max_kappa_phi")[off:])
            cur, t0 = tr.final, t
            frames[t] = cur
            if tr.event != "t_max":
                row["status"] = f"stopped: {tr.event} at t={t0 + tr.times[-1]:.6g}"
                break
        return {"epsilon": eps, "c_prime": rep.c_prime, "times": times, "g": g,
                "kmax": kmax, "frames": {t: f.points for t, f in frames.items()},
                "status": row["status"]}
    except (CurveError, MorphologyError, AnisotropyError, RuntimeError, ValueError) as exc:
        log.warning("epsilon %g row failed: %s", eps, exc)
        return {"epsilon": eps, "status": f"failed: {exc}"}


def run_convergence_study(cfg, bound_tol=0.0):
    """Compare the regularized smooth flows with the crystalline flow.

    For each epsilon the anisotropy is regularized, the crystalline initial
    curve approximated by a Wulff-opening, evolved by the smooth flow and
    compared (Hausdorff distance of the supports) with the crystalline flow
    at every checkpoint.  Rows record the largest ``kappa_phi`` up to the
    checkpoint against ``curvature_bound(C', t)`` and, per run, the ratio of
    ``max kappa_phi^2`` to ``g0 / (1 - 2 t g0)``.
    """
    if cfg.kind != "convergence-study":
        raise ConfigError("run_convergence_study needs kind='convergence-study'")
    a = cfg.build_anisotropy()
    if a.kind != "crystalline":
        raise ConfigError("the convergence study needs a crystalline anisotropy")
    c0 = cfg.build_curve(a)
    if not isinstance(c0, CrystalCurve):
        raise ConfigError("the convergence study needs a crystal curve")
    targets = tuple(sorted(cfg.checkpoints))
    crystal = {t: _crystal_at(c0, a, cfg, t) for t in targets}
    workers = cfg.workers if cfg.workers is not None else min(len(cfg.epsilons), os.cpu_count() or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_study_row, [cfg] * len(cfg.epsilons), cfg.epsilons,
                                  [targets] * len(cfg.epsilons)))
    else:
        results = [_study_row(cfg, e, targets) for e in cfg.epsilons]
    cps = [r["c_prime"] for r in results if "c_prime" in r]
    horizon = min(1.0 / (2.0 * c**2) for c in cps) if cps else 0.0
    table = ConvergenceTable(metadata={"N": cfg.study_n, "dt": cfg.study_dt,
                                       "scheme": "semi-implicit", "curvature": "cell",
                                       "reparam": "adaptive", "horizon": horizon,
                                       "r_factor": cfg.r_factor, "seed": cfg.seed})
    for t in targets:
        for res in results:
            row = dict.fromkeys(ConvergenceTable.COLUMNS)
            row.update(epsilon=res["epsilon"], t=t, status=res["status"],
                       within_window=bool(t < horizon))
            if not row["within_window"]:
                row["status"] += "; outside the curvature-bound window"
            if "c_prime" in res and t in res["frames"]:
                times = np.asarray(res["times"])
                upto = times <= t * (1 + 1e-12)
                g = np.asarray(res["g"])
                g0 = g[0]
                q = 1.0 - 2.0 * times[upto] * g0
                ratio = float(np.max(np.where(q > 0, g[upto] * q / g0, np.inf)))
                row.update(
                    hausdorff=(hausdorff_distance(res["frames"][t], crystal[t])
                               if crystal[t] is not None else None),
                    max_kappa_phi=float(np.max(np.asarray(res["kmax"])[upto])),
                    c_prime=res["c_prime"],
                    kappa_bound=curvature_bound(res["c_prime"], t),
                    bound_ratio=ratio,
                )
                row["bound_ok"] = bool(ratio <= 1.0 + bound_tol)
                table.traces[(res["epsilon"], t)] = res["frames"][t]
            table.rows.append(row)
    for t in targets:
        ok, bad = table.nonincreasing(t)
        if not ok:
            log.warning("distance column at t=%g increases at epsilon %s", t, bad)
    return table


# --------------------------------------------------------------------------
# refinement tables
# --------------------------------------------------------------------------


@dataclass
class RefinementReport:
    """Oracle errors over spatial and temporal refinement levels.

    Orders come from successive error differences (Richardson), which
    cancel the error component that is not being refined.
    """

    benchmark: str
    t: float
    rows: list = field(default_factory=list)
    spatial_order: float = math.nan
    temporal_order: float = math.nan

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sweep", "N", "dt_cfl", "steps", "error"])
        for r in self.rows:
            w.writerow([r["sweep"], r["N"], _fmt(r["dt_cfl"]), r["steps"], _fmt(r["error"])])
        w.writerow(["order", "spatial", "", "", _fmt(self.spatial_order)])
        w.writerow(["order", "temporal", "", "", _fmt(self.temporal_order)])
        return buf.getvalue()


def richardson_orders(errors, ratio=2.0):
    """Orders ``log_r |(e_k - e_{k+1}) / (e_{k+1} - e_{k+2})|`` of a sequence
    refined by the factor ``ratio``."""
    e = np.asarray(errors, dtype=float)
    d = np.abs(np.diff(e))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(d[:-1] / d[1:]) / np.log(ratio)


def _oracle_error(a, n, dt_cfl, t, cfg, kind):
    if kind == "circle":
        c0 = circle(n)
    else:
        c0 = resample_uniform(wulff_curve(a, 1.0, 4 * n), n)
    scfg = SmoothFlowConfig(dt_cfl=dt_cfl, t_max=t, reparam_every=cfg.reparam_every if kind == "wulff" else 0,
                            record_every=0, kappa_stop=math.inf)
    tr = run_smooth(c0, a, scfg)
    if tr.event != "t_max":
        raise RuntimeError(f"benchmark run stopped early: {tr.event}")
    # homothetic oracle: gamma(u) = R(t) on every sample
    err = float(np.mean(a.norm(tr.final.points))) - math.sqrt(1.0 - 2.0 * t)
    return err, tr.steps


def refinement_table(cfg):
    """Spatial sweep over ``spatial_levels`` at a common time step (the CFL
    number scales with ``N^-2``) and temporal sweep over ``temporal_levels``
    at ``temporal_n`` samples, against the homothetic radius ``sqrt(1-2t)``."""
    if cfg.kind != "refinement-table":
        raise ConfigError("refinement_table needs kind='refinement-table'")
    if cfg.benchmark == "circle":
        a = Anisotropy.euclidean()
    else:
        a = cfg.build_anisotropy() if cfg.anisotropy else None
        if a is None or not a.is_smooth or a.kind == "regularized":
            raise ConfigError("the Wulff benchmark needs a smooth anisotropy")
    t = cfg.t_max
    rep = RefinementReport(cfg.benchmark, t)
    n_fine = max(cfg.spatial_levels)
    errs = []
    for n in cfg.spatial_levels:
        dt_cfl = cfg.dt_cfl * (n / n_fine) ** 2
        e, steps = _oracle_error(a, n, dt_cfl, t, cfg, cfg.benchmark)
        rep.rows.append({"sweep": "spatial", "N": n, "dt_cfl": dt_cfl, "steps": steps, "error": e})
        errs.append(e)
    ratios = [cfg.spatial_levels[k + 1] / cfg.spatial_levels[k] for k in range(len(errs) - 1)]
    rep.spatial_order = float(np.median(richardson_orders(errs, ratios[0])))
    errs = []
    for dt_cfl in cfg.temporal_levels:
        e, steps = _oracle_error(a, cfg.temporal_n, dt_cfl, t, cfg, cfg.benchmark)
        rep.rows.append({"sweep": "temporal", "N": cfg.temporal_n, "dt_cfl": dt_cfl,
                         "steps": steps, "error": e})
        errs.append(e)
    rep.temporal_order = float(np.median(richardson_orders(
        errs, cfg.temporal_levels[0] / cfg.temporal_levels[1])))
    return rep


# --------------------------------------------------------------------------
# outputs
# --------------------------------------------------------------------------


def _write(path, text):
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=True) + "\n"


def _diag_csv(columns, diag):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in zip(*(diag[k] for k in columns)):
        w.writerow([_fmt(float(v)) for v in row])
    return buf.getvalue()


def _svg(points, box):
    x0, y0, x1, y1 = box
    w, h = x1 - x0, y1 - y0
    sw = 0.004 * max(w, h)
    pts = " ".join(f"{x:.6g},{-y:.6g}" for x, y in points)
    return (
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{x0:.6g} {-y1:.6g} {w:.6g} {h:.6g}">\n'
        f'<polygon points="{pts}" fill="none" stroke="black" stroke-width="{sw:.3g}"/>\n'
        "</svg>\n"
    )


def _frame_points(c):
    return c.vertices if isinstance(c, CrystalCurve) else c.points


def _emit_frames(curves, out, svg, put):
    if not svg or not curves:
        return
    p = _frame_points(curves[0])
    lo, hi = p.min(axis=0), p.max(axis=0)
    pad = 0.1 * np.maximum(hi - lo, 1e-12)
    box = (*(lo - pad), *(hi + pad))
    for k, c in enumerate(curves):
        put(out / f"frame_{k:04d}.svg", _svg(_frame_points(c), box))


def emit_outputs(obj, out_dir, svg=True):
    """Write a trace or table to ``out_dir`` and return the written paths.

    Smooth traces give ``diag.csv``, ``frames.json`` and ``frame_%04d.svg``;
    crystal traces add ``events.json``; convergence tables and refinement
    reports give ``table.csv`` (plus ``table.json``).  Output is byte-stable.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out}: {exc.strerror or exc}") from exc
    written = []

    def put(path, text):
        _write(path, text)
        written.append(path)

    if isinstance(obj, FlowTrace):
        put(out / "diag.csv", _diag_csv(DIAG_COLUMNS, obj.diag))
        put(out / "frames.json", _dumps({
            "kind": "smooth", "event": obj.event, "steps": obj.steps,
            "anisotropy": obj.anisotropy.to_dict() if obj.anisotropy is not None else None,
            "times": [float(t) for t in obj.times], "epochs": list(obj.epochs),
            "frames": [c.to_dict() for c in obj.curves]}))
        _emit_frames(obj.curves, out, svg, put)
    elif isinstance(obj, CrystalTrace):
        cols = ("t", "perimeter", "area", "max_kappa_phi", "facets")
        put(out / "diag.csv", _diag_csv(cols, obj.diag))
        put(out / "frames.json", _dumps({
            "kind": "crystal", "stop": obj.stop,
            "wulff_vertices": obj.curves[0].wulff.vertices.tolist() if obj.curves else [],
            "times": [float(t) for t in obj.times],
            "frames": [c.to_dict() for c in obj.curves]}))
        put(out / "events.json", _dumps({"extinction_time": obj.extinction_time,
                                            "events": obj.events}))
        _emit_frames(obj.curves, out, svg, put)
    elif isinstance(obj, ConvergenceTable):
        put(out / "table.csv", obj.to_csv())
        put(out / "table.json", _dumps({"metadata": obj.metadata, "rows": obj.rows}))
        for k, ((eps, t), pts) in enumerate(sorted(obj.traces.items())):
            sub = out / f"row_{k:02d}_eps{eps:g}_t{t:g}"
            sub.mkdir(exist_ok=True)
            put(sub / "frames.json", _dumps({"epsilon": eps, "t": t,
                                                "frames": [ParametricCurve(pts).to_dict()]}))
    elif isinstance(obj, RefinementReport):
        put(out / "table.csv", obj.to_csv())
    else:
        raise TypeError(f"cannot emit {type(obj).__name__}")
    return written
