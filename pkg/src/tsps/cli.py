"""Command-line front end: ``tsps sample|build|verify|export|lift|ts``.

Exit codes: 0 success, 2 input error, 3 construction failure, 4 invariant failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional

import numpy as np

from . import io
from .errors import GeometryError, InputError, TspsError
from .forms import FormsField, chebyshev_constancy_report, forms_field_from_immersion
from .ksurface import CauchyData, SurfaceMesh, build_from_cauchy, invariant_report, report_rows
from .samples import (amsler_cauchy_data, chebyshev_forms_from_omega, cylinder_immersion,
                      perturbed_cauchy_data, pseudosphere_chebyshev_immersion,
                      semidiscrete_amsler_surface, soliton_omega_field, sphere_immersion,
                      tractroid_immersion)
from .timescale import GridDomain, GridFunction, TimeScale, delta_derivative, nabla_derivative
from .tssurface import TimeScaleSurface, conjecture_constancy_report, verify_ts_chebyshev
from .tssurface import report_rows as ts_report_rows

EXIT_OK, EXIT_INPUT, EXIT_BUILD, EXIT_INVARIANT = 0, 2, 3, 4

MESH_CSV = ("m", "n", "phi", "psi", "theta", "K", "edge_residual", "coplanarity_residual")
TS_CSV = ("u", "v", "point_class_1", "point_class_2", "K_time", "unit_res_1", "unit_res_2",
          "tangency_res_1", "tangency_res_2")
FORMS_CSV = ("index_u", "index_v", "K_extrinsic", "K_intrinsic", "codazzi_1", "codazzi_2")

FUNCTIONS = {
    "poly2": lambda t: t * t,
    "poly3": lambda t: t * t * t,
    "sin": math.sin,
    "exp": math.exp,
}


class CliError(Exception):
    def __init__(self, message, code=EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _finite(name):
    def conv(text):
        try:
            x = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}")
        if not math.isfinite(x):
            raise argparse.ArgumentTypeError(f"{name} must be finite")
        return x
    return conv


def _positive(name):
    base = _finite(name)

    def conv(text):
        x = base(text)
        if x <= 0:
            raise argparse.ArgumentTypeError(f"{name} must be positive")
        return x
    return conv


def _count(text):
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if k < 2:
        raise argparse.ArgumentTypeError("need at least 2 points")
    return k


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}


def _meta(args):
    return io.make_metadata(_config(args), getattr(args, "seed", None), not args.no_timestamp)


def _write(args, kind, payload):
    try:
        io.write_json(args.output, kind, payload, _meta(args))
    except OSError as exc:
        raise CliError(f"cannot write {args.output}: {exc}")


# ---------------------------------------------------------------------------
# sample


def _window(args):
    return GridDomain.continuum((args.umin, args.umax), (args.vmin, args.vmax), args.h)


def cmd_sample(args) -> int:
    g = args.generator
    if g == "amsler":
        data = amsler_cauchy_data(args.gamma, args.a, args.n1, args.n2, theta=args.theta, b=args.b)
        _write(args, "cauchy", data.to_json())
    elif g == "perturbed":
        data = perturbed_cauchy_data(args.seed, args.a, args.n, args.amplitude, theta=args.theta,
                                     gamma=args.gamma)
        _write(args, "cauchy", data.to_json())
    elif g == "soliton-forms":
        vmin = args.umin if args.vmin is None else args.vmin
        vmax = args.umax if args.vmax is None else args.vmax
        om = soliton_omega_field((args.umin, args.umax), (vmin, vmax), args.h, args.shift)
        _write(args, "forms", chebyshev_forms_from_omega(om, args.eps).to_json())
    elif g in ("sphere", "cylinder"):
        fn = sphere_immersion if g == "sphere" else cylinder_immersion
        _write(args, "grid_function", fn(args.R, _window(args), warp=args.warp).to_json())
    elif g == "tractroid":
        _write(args, "grid_function", tractroid_immersion(_window(args)).to_json())
    elif g == "pseudosphere":
        _write(args, "ts_surface", pseudosphere_chebyshev_immersion(_window(args)).to_json())
    elif g == "semidiscrete":
        s = semidiscrete_amsler_surface(args.h, args.b, args.umax, args.vmax, theta=args.theta)
        _write(args, "ts_surface", s.to_json())
    print(f"wrote {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# build / verify / export / lift


def _load_mesh(path) -> SurfaceMesh:
    return SurfaceMesh.from_json(io.read_json(path, ("mesh",)))


def cmd_build(args) -> int:
    doc = io.read_json(args.input, ("cauchy",))
    data = CauchyData.from_json(doc)
    try:
        mesh = build_from_cauchy(data, tol=args.tol)
    except (GeometryError, InputError) as exc:
        where = getattr(exc, "index", None)
        suffix = f" at quad {where}" if where is not None else ""
        raise CliError(f"construction failed{suffix}: {exc}", EXIT_BUILD)
    _write(args, "mesh", mesh.to_json())
    rep = invariant_report(mesh, args.tol) if min(mesh.shape) >= 3 else None
    if rep is None:
        print(f"wrote {args.output} ({mesh.rows}x{mesh.cols}, too small to verify)")
        return EXIT_OK
    print(json.dumps(io._clean(rep.as_dict()), sort_keys=True))
    return EXIT_OK if rep.passed else EXIT_INVARIANT


def _verify_mesh(args, doc) -> int:
    mesh = SurfaceMesh.from_json(doc)
    try:
        rep = invariant_report(mesh, args.tol)
    except GeometryError as exc:
        raise CliError(f"mesh is degenerate: {exc}", EXIT_INVARIANT)
    if args.output:
        io.write_csv(args.output, MESH_CSV, report_rows(mesh))
    print(json.dumps(io._clean(rep.as_dict()), sort_keys=True))
    if not rep.passed:
        print(f"invariant failure: edge residual {rep.max_edge_residual:.3e} at {rep.worst_edge}, "
              f"coplanarity {rep.max_coplanarity_residual:.3e} at {rep.worst_coplanarity}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def _verify_ts(args, doc) -> int:
    s = TimeScaleSurface.from_json(doc)
    rep = verify_ts_chebyshev(s, args.tol)
    if args.output:
        io.write_csv(args.output, TS_CSV, ts_report_rows(s, args.tol))
    out = {"max_unit_residual": rep.max_unit_residual, "max_tangency_residual": rep.max_tangency_residual,
           "mixed_residual": rep.mixed_residual, "sampling_irregularity": rep.sampling_irregularity,
           "passed": rep.passed}
    if rep.passed:
        # the conjecture audit is informational and never changes the exit code
        out["conjecture_audit"] = conjecture_constancy_report(s, args.tol, args.threshold, args.target).summary()
    print(json.dumps(io._clean(out), sort_keys=True))
    return EXIT_OK if rep.passed else EXIT_INVARIANT


def _verify_forms(args, field: FormsField, chebyshev: bool) -> int:
    if args.output:
        io.write_csv(args.output, FORMS_CSV, field.report_rows())
    out = {}
    code = EXIT_OK
    if chebyshev:
        rep = chebyshev_constancy_report(field, tol=args.tol)
        out = {k: v for k, v in rep.__dict__.items()}
        code = EXIT_OK if rep.passed else EXIT_INVARIANT
    m = field.interior_mask()
    if m.any():
        c1, c2 = field.codazzi
        out["max_abs_K_extrinsic_minus_intrinsic"] = float(np.max(np.abs(field.K - field.K_intrinsic)[m]))
        out["max_abs_codazzi"] = float(max(np.abs(c1)[m].max(), np.abs(c2)[m].max()))
    print(json.dumps(io._clean(out), sort_keys=True))
    return code


def cmd_verify(args) -> int:
    doc = io.read_json(args.input, ("mesh", "ts_surface", "forms", "grid_function"))
    kind = doc["kind"]
    if kind == "mesh":
        return _verify_mesh(args, doc)
    if kind == "ts_surface":
        return _verify_ts(args, doc)
    if kind == "forms":
        return _verify_forms(args, FormsField.from_json(doc), True)
    return _verify_forms(args, forms_field_from_immersion(GridFunction.from_json(doc)), False)


def cmd_export(args) -> int:
    doc = io.read_json(args.input, ("mesh", "ts_surface"))
    fmt = args.format or ("obj" if str(args.output).lower().endswith(".obj") else "csv")
    try:
        if doc["kind"] == "mesh":
            mesh = SurfaceMesh.from_json(doc)
            if fmt == "obj":
                io.write_obj(args.output, mesh.vertices)
            else:
                io.write_csv(args.output, MESH_CSV, report_rows(mesh))
        else:
            s = TimeScaleSurface.from_json(doc)
            if fmt == "obj":
                io.write_obj(args.output, s.r.values)
            else:
                io.write_csv(args.output, TS_CSV, ts_report_rows(s, args.tol))
    except OSError as exc:
        raise CliError(f"cannot write {args.output}: {exc}")
    print(f"wrote {args.output}")
    return EXIT_OK


def cmd_lift(args) -> int:
    mesh = _load_mesh(args.input)
    _write(args, "ts_surface", TimeScaleSurface.from_mesh(mesh).to_json())
    print(f"wrote {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# ts


def _ts_rows(ts: TimeScale, f, lo, hi, step, tol):
    pts, _ = ts.realize(lo, hi, step)
    for t in pts:
        t = float(t)
        cls = ts.classify(t).kind
        vals = []
        for op in (delta_derivative, nabla_derivative):
            try:
                vals.append(op(ts, f, t, tol))
            except InputError:
                vals.append(None)
        yield (t, cls, vals[0], vals[1])


def cmd_ts(args) -> int:
    if args.function not in FUNCTIONS:
        raise CliError(f"unknown function {args.function!r}; choose from {', '.join(FUNCTIONS)}")
    doc = io.read_json(args.input, ("time_scale",))
    ts = TimeScale.from_json(doc)
    if args.window is not None:
        lo, hi = args.window
    elif ts.bounded:
        lo, hi = ts.pieces[0][0], ts.pieces[-1][1]
    else:
        raise CliError("a periodic time scale needs --window LO HI")
    rows = _ts_rows(ts, FUNCTIONS[args.function], lo, hi, args.step, args.tol)
    header = ("t", "class", "delta", "nabla")
    if args.output in (None, "-"):
        import csv
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([io.fmt(x) for x in r])
    else:
        try:
            io.write_csv(args.output, header, rows)
        except OSError as exc:
            raise CliError(f"cannot write {args.output}: {exc}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _common(p, output_required=True):
    p.add_argument("-o", "--output", required=output_required)
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp from output metadata")


def _window_args(p, h_default=0.01, umin=None, umax=None, vmin=None, vmax=None):
    p.add_argument("--umin", type=_finite("umin"), default=umin, required=umin is None)
    p.add_argument("--umax", type=_finite("umax"), default=umax, required=umax is None)
    p.add_argument("--vmin", type=_finite("vmin"), default=vmin, required=vmin is None)
    p.add_argument("--vmax", type=_finite("vmax"), default=vmax, required=vmax is None)
    p.add_argument("--h", type=_positive("h"), default=h_default)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tsps", description="Pseudospherical nets on time scales.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="generate test data")
    gens = sp.add_subparsers(dest="generator", required=True)

    g = gens.add_parser("amsler", help="straight-strip Cauchy data")
    g.add_argument("--gamma", type=_finite("gamma"), required=True)
    g.add_argument("--a", type=_positive("a"), required=True)
    g.add_argument("--n1", type=_count, default=30)
    g.add_argument("--n2", type=_count, default=30)
    g.add_argument("--theta", type=_positive("theta"), default=None)
    g.add_argument("--b", type=_positive("b"), default=None)
    g.add_argument("--seed", type=int, default=0)
    _common(g)

    g = gens.add_parser("perturbed", help="random curved-strip Cauchy data")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--a", type=_positive("a"), default=0.1)
    g.add_argument("--n", type=_count, default=12)
    g.add_argument("--amplitude", type=_finite("amplitude"), default=0.1)
    g.add_argument("--theta", type=_positive("theta"), default=None)
    g.add_argument("--gamma", type=_finite("gamma"), default=math.pi / 2)
    _common(g)

    g = gens.add_parser("soliton-forms", help="Chebyshev forms of the sine-Gordon one-soliton")
    g.add_argument("--umin", type=_finite("umin"), required=True)
    g.add_argument("--umax", type=_finite("umax"), required=True)
    g.add_argument("--vmin", type=_finite("vmin"), default=None)
    g.add_argument("--vmax", type=_finite("vmax"), default=None)
    g.add_argument("--h", type=_positive("h"), default=0.01)
    g.add_argument("--shift", type=_finite("shift"), default=0.0)
    g.add_argument("--eps", type=_positive("eps"), default=0.05)
    g.add_argument("--seed", type=int, default=0)
    _common(g)

    for name, umin, umax, vmin, vmax in (("sphere", 0.0, 1.0, 1.0, 2.0), ("cylinder", 0.0, 1.0, 0.0, 1.0)):
        g = gens.add_parser(name, help=f"{name} immersion samples")
        g.add_argument("--R", type=_positive("R"), default=2.0 if name == "sphere" else 1.0)
        g.add_argument("--warp", type=_finite("warp"), default=0.0)
        _window_args(g, 0.01, umin, umax, vmin, vmax)
        g.add_argument("--seed", type=int, default=0)
        _common(g)

    g = gens.add_parser("tractroid", help="pseudosphere in (s, phi) coordinates")
    _window_args(g, 0.01, 0.5, 1.5, 0.0, 1.0)
    g.add_argument("--seed", type=int, default=0)
    _common(g)

    g = gens.add_parser("pseudosphere", help="pseudosphere in Chebyshev coordinates, as a surface on R x R")
    _window_args(g, 0.01, -1.1, -0.1, -1.1, -0.1)
    g.add_argument("--seed", type=int, default=0)
    _common(g)

    g = gens.add_parser("semidiscrete", help="Amsler net on [0, umax] x bZ")
    g.add_argument("--h", type=_positive("h"), default=0.01)
    g.add_argument("--b", type=_positive("b"), default=0.1)
    g.add_argument("--umax", type=_positive("umax"), default=1.0)
    g.add_argument("--vmax", type=_positive("vmax"), default=1.0)
    g.add_argument("--theta", type=_positive("theta"), default=None)
    g.add_argument("--seed", type=int, default=0)
    _common(g)
    sp.set_defaults(func=cmd_sample)

    p = sub.add_parser("build", help="build a net from Cauchy data")
    p.add_argument("input")
    p.add_argument("--tol", type=_positive("tol"), default=1e-8)
    _common(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("verify", help="check invariants; writes a CSV report with -o")
    p.add_argument("input")
    p.add_argument("--tol", type=_positive("tol"), default=1e-8)
    p.add_argument("--threshold", type=_positive("threshold"), default=None)
    p.add_argument("--target", type=_finite("target"), default=None)
    _common(p, output_required=False)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export", help="export a mesh as OBJ or CSV")
    p.add_argument("input")
    p.add_argument("--format", choices=("obj", "csv"), default=None)
    p.add_argument("--tol", type=_positive("tol"), default=1e-8)
    _common(p)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("lift", help="view a net as a surface on aZ x aZ")
    p.add_argument("input")
    _common(p)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("ts", help="delta and nabla derivatives of a built-in function on a time scale")
    p.add_argument("input")
    p.add_argument("--function", required=True)
    p.add_argument("--window", type=_finite("window"), nargs=2, default=None, metavar=("LO", "HI"))
    p.add_argument("--step", type=_positive("step"), default=None)
    p.add_argument("--tol", type=_positive("tol"), default=1e-10)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_ts)
    return ap


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"tsps: error: {exc}", file=sys.stderr)
        return exc.code
    except InputError as exc:
        print(f"tsps: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GeometryError as exc:
        print(f"tsps: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BUILD
    except (TspsError, ValueError) as exc:
        print(f"tsps: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
