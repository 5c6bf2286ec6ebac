"""Command line interface.

Exit codes: 0 ok, 2 configuration error, 3 numerical event (with
``--strict``: blow-up, degeneration or extinction before ``t_max``), 4 I/O.
Errors are reported as one JSON object on standard error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .anisotropy import Anisotropy, AnisotropyError, regularize
from .crystalline_flow import CrystalFlowError
from .crystalline_flow import run as run_crystal
from .curve import CrystalCurve, CurveError, resample_uniform
from .harness import (
    ConfigError,
    ExperimentConfig,
    body_from_dict,
    curve_from_dict,
    emit_outputs,
    load_json,
    refinement_table,
    region_from_dict,
    region_to_dict,
    run_convergence_study,
)
from .morphology import MorphologyError, approximate_curve, closing, dilate, erode, opening
from .smooth_flow import FlowError, SmoothFlowConfig
from .smooth_flow import run as run_smooth

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("anisoflow")


class NumericalEvent(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _spec(value, what):
    """A JSON object given inline (from ``--config``) or as a file path."""
    if value is None:
        raise ConfigError(f"missing --{what}")
    if isinstance(value, dict):
        return value
    try:
        return load_json(value)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{value}: invalid JSON ({exc})") from None


def _anisotropy(args):
    try:
        return Anisotropy.from_dict(_spec(args.anisotropy, "anisotropy"))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad anisotropy spec: {exc}") from None


def _curve(args, a):
    try:
        return curve_from_dict(_spec(args.curve, "curve"), a)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad curve spec: {exc}") from None


def _emit_json(obj, out):
    text = json.dumps(obj, sort_keys=True, indent=1) + "\n"
    if out:
        path = Path(out)
        try:
            if path.parent != Path(""):
                path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return text


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_simulate_smooth(args):
    a = _anisotropy(args)
    c = _curve(args, a)
    if isinstance(c, CrystalCurve):
        c = c.to_parametric(args.n or 512)
    elif args.n:
        c = resample_uniform(c, args.n)
    cfg = SmoothFlowConfig(dt_cfl=args.dt_cfl, t_max=args.t_max, reparam_every=args.reparam_every,
                           kappa_stop=args.kappa_stop, record_every=args.record_every,
                           scheme=args.scheme, dt=args.dt, curvature=args.curvature,
                           reparam=args.reparam)
    tr = run_smooth(c, a, cfg)
    if args.out:
        emit_outputs(tr, args.out, svg=not args.no_svg)
    summary = {"event": tr.event, "t": tr.times[-1], "steps": tr.steps, "frames": len(tr),
               "length": tr.final.length, "area": tr.final.signed_area}
    if args.strict and tr.event != "t_max":
        raise NumericalEvent(f"run stopped by {tr.event} at t={tr.times[-1]:.6g}")
    return summary


def cmd_simulate_crystal(args):
    a = _anisotropy(args)
    if a.kind != "crystalline":
        raise ConfigError("simulate-crystal needs a crystalline anisotropy")
    c = _curve(args, a)
    if not isinstance(c, CrystalCurve):
        c = CrystalCurve.from_vertices(c.points, a.wulff)
    cfg = ExperimentConfig(kind="crystal-run", anisotropy=a.to_dict(), curve=c.to_dict(),
                           t_max=args.t_max, dt_max=args.dt_max, event_tol=args.event_tol)
    tr = run_crystal(c, a, cfg.crystal_config())
    if args.out:
        emit_outputs(tr, args.out, svg=not args.no_svg)
    summary = {"stop": tr.stop, "t": tr.times[-1], "events": len(tr.events),
               "extinction_time": tr.extinction_time, "facets": len(tr.final)}
    if args.strict and tr.stop != "t_max":
        raise NumericalEvent(f"crystalline run stopped by {tr.stop} at t={tr.times[-1]:.6g}")
    return summary


def cmd_approximate_curve(args):
    a = _anisotropy(args)
    c = _curve(args, a)
    rep = approximate_curve(c, a, args.epsilon, r_factor=args.r_factor, check=not args.no_check)
    d = rep.to_dict()
    d["certified"] = bool(rep.certified)
    d["epsilon"] = args.epsilon
    d["r_factor"] = args.r_factor
    _emit_json(d, args.out)
    return {k: d[k] for k in ("c_prime", "hausdorff_in_out", "max_kappa_phi", "rw_passed",
                              "certified")}


def cmd_regularize_anisotropy(args):
    a = _anisotropy(args)
    ae = regularize(a, args.epsilon)
    d = {"anisotropy": ae.to_dict(), "ellipticity": float(ae.ellipticity_constant())}
    _emit_json(d, args.out)
    return d


def cmd_convergence_study(args):
    cfg = ExperimentConfig(kind="convergence-study", anisotropy=_spec(args.anisotropy, "anisotropy"),
                           curve=_spec(args.curve, "curve"), epsilons=args.epsilons,
                           checkpoints=args.checkpoints, study_n=args.n, study_dt=args.dt,
                           r_factor=args.r_factor, workers=args.workers, seed=args.seed)
    tab = run_convergence_study(cfg)
    if args.out:
        emit_outputs(tab, args.out)
    return {"metadata": tab.metadata, "rows": tab.rows}


def cmd_refinement_table(args):
    cfg = ExperimentConfig(kind="refinement-table", benchmark=args.benchmark,
                           anisotropy=(_spec(args.anisotropy, "anisotropy")
                                       if args.anisotropy else None),
                           t_max=args.t_max, dt_cfl=args.dt_cfl, spatial_levels=args.levels,
                           temporal_levels=args.dt_levels, temporal_n=args.n)
    rep = refinement_table(cfg)
    if args.out:
        emit_outputs(rep, args.out)
    return {"benchmark": rep.benchmark, "t": rep.t, "spatial_order": rep.spatial_order,
            "temporal_order": rep.temporal_order, "rows": rep.rows}


_OPS = {"open": opening, "close": closing, "erode": erode, "dilate": dilate}


def cmd_morph(args):
    try:
        anis = Anisotropy.from_dict(_spec(args.anisotropy, "anisotropy")) if args.anisotropy else None
        region = region_from_dict(_spec(args.region, "region"), anis)
        body = body_from_dict(_spec(args.body, "body"))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad morphology input: {exc}") from None
    out = _OPS[args.op](region, body)
    d = region_to_dict(out)
    d["area"] = float(out.area)
    _emit_json(d, args.out)
    return {"op": args.op, "area": d["area"], "components": len(d["polygons"])}


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file whose keys override the inline flags")
    common.add_argument("--out", help="output directory (traces, tables) or file (reports)")
    common.add_argument("--quiet", action="store_true", help="suppress the summary on stdout")
    common.add_argument("--strict", action="store_true",
                        help="exit 3 when a run stops before t_max")

    p = _Parser(prog="anisoflow", description="Anisotropic and crystalline curvature flow of "
                                                "planar curves.", parents=[common])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate-smooth", parents=[common], help="smooth anisotropic flow")
    s.add_argument("--anisotropy")
    s.add_argument("--curve")
    s.add_argument("--dt-cfl", type=float, default=0.2)
    s.add_argument("--t-max", type=float, default=0.3)
    s.add_argument("--n", type=int, default=None, help="resample to N points first")
    s.add_argument("--scheme", choices=("explicit", "semi-implicit"), default="explicit")
    s.add_argument("--dt", type=float, default=None)
    s.add_argument("--curvature", choices=("pointwise", "cell"), default="pointwise")
    s.add_argument("--reparam", choices=("uniform", "adaptive"), default="uniform")
    s.add_argument("--reparam-every", type=int, default=50)
    s.add_argument("--record-every", type=int, default=100)
    s.add_argument("--kappa-stop", type=float, default=1e6)
    s.add_argument("--no-svg", action="store_true")
    s.set_defaults(func=cmd_simulate_smooth)

    s = sub.add_parser("simulate-crystal", parents=[common], help="crystalline facet flow")
    s.add_argument("--anisotropy")
    s.add_argument("--curve")
    s.add_argument("--t-max", type=float, default=0.5)
    s.add_argument("--dt-max", type=float, default=0.01)
    s.add_argument("--event-tol", type=float, default=1e-6)
    s.add_argument("--no-svg", action="store_true")
    s.set_defaults(func=cmd_simulate_crystal)

    s = sub.add_parser("approximate-curve", parents=[common],
                       help="smooth a curve by Wulff-shape opening and closing")
    s.add_argument("--anisotropy")
    s.add_argument("--curve")
    s.add_argument("--epsilon", type=float, default=0.1)
    s.add_argument("--r-factor", type=float, default=0.9)
    s.add_argument("--no-check", action="store_true", help="skip the two-sided Wulff test")
    s.set_defaults(func=cmd_approximate_curve)

    s = sub.add_parser("regularize-anisotropy", parents=[common],
                       help="smooth elliptic approximation of an anisotropy")
    s.add_argument("--anisotropy")
    s.add_argument("--epsilon", type=float, default=0.1)
    s.set_defaults(func=cmd_regularize_anisotropy)

    s = sub.add_parser("convergence-study", parents=[common],
                       help="regularized flows against the crystalline flow")
    s.add_argument("--anisotropy")
    s.add_argument("--curve")
    s.add_argument("--epsilons", type=float, nargs="+", default=[0.2, 0.1, 0.05])
    s.add_argument("--checkpoints", type=float, nargs="+", default=[0.2])
    s.add_argument("--n", type=int, default=1024)
    s.add_argument("--dt", type=float, default=2e-4)
    s.add_argument("--r-factor", type=float, default=0.9)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_convergence_study)

    s = sub.add_parser("refinement-table", parents=[common],
                       help="convergence orders against a homothetic oracle")
    s.add_argument("--benchmark", choices=("circle", "wulff"), default="circle")
    s.add_argument("--anisotropy", help="smooth anisotropy for the wulff benchmark")
    s.add_argument("--t-max", type=float, default=0.25)
    s.add_argument("--dt-cfl", type=float, default=0.2)
    s.add_argument("--levels", type=int, nargs="+", default=[128, 256, 512])
    s.add_argument("--dt-levels", type=float, nargs="+", default=[0.2, 0.1, 0.05])
    s.add_argument("--n", type=int, default=256, help="samples for the temporal sweep")
    s.set_defaults(func=cmd_refinement_table)

    s = sub.add_parser("morph", parents=[common], help="erosion, dilation, opening, closing")
    s.add_argument("--op", choices=tuple(_OPS), required=True)
    s.add_argument("--region")
    s.add_argument("--body")
    s.add_argument("--anisotropy", help="needed for crystal-curve regions")
    s.set_defaults(func=cmd_morph)
    return p


def _apply_config(args, parser):
    if not args.config:
        return args
    try:
        cfg = load_json(args.config)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise ConfigError("--config must hold a JSON object")
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest in ("command", "func", "config") or not hasattr(args, dest):
            raise ConfigError(f"unknown config key {key!r} for {args.command}")
        setattr(args, dest, value)
    return args


def _error(kind, exc, code):
    sys.stderr.write(json.dumps({"error": kind, "message": str(exc), "exit_code": code}) + "\n")
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _apply_config(args, parser)
        logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                            format="%(levelname)s %(name)s: %(message)s")
        summary = args.func(args)
    except NumericalEvent as exc:
        return _error("numerical-event", exc, EXIT_NUMERIC)
    except (ConfigError, AnisotropyError, CurveError, MorphologyError) as exc:
        return _error("config", exc, EXIT_CONFIG)
    except (FlowError, CrystalFlowError) as exc:
        return _error("numerical", exc, EXIT_NUMERIC)
    except OSError as exc:
        return _error("io", exc, EXIT_IO)
    except ValueError as exc:
        return _error("config", exc, EXIT_CONFIG)
    if not args.quiet:
        sys.stdout.write(json.dumps(summary, sort_keys=True, default=float) + "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
