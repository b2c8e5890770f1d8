"""Command-line entry point: mesh generation, gradient runs, studies.

Exit status 0 on success, 2 on usage/configuration errors, 1 on runtime
failures; errors print a single machine-parsable "code: message" line.
Output files are written atomically (temp file + rename).
"""

from __future__ import annotations

import argparse
import io
import os
import sys
import tempfile

import numpy as np

from . import fields as fields_mod
from . import gradients, mesh as mesh_mod, meshgen, study
from .errors import ConfigConflict, FvgradError, UsageError
from .numerics import PrecisionMode


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_family_flags(p, required=True):
    g = p.add_argument_group("grid family")
    g.add_argument("--family", choices=meshgen.FAMILIES, required=required,
                   help="grid family to generate")
    g.add_argument("--level", type=int, required=required,
                   help="refinement level l (spacing halves per level)")
    g.add_argument("--n0", type=int, default=meshgen.DEFAULT_N0,
                   help="base cells per direction at l=0 for planar families "
                        "(default: %(default)s)")
    g.add_argument("--domain", type=float, nargs=4,
                   metavar=("X0", "X1", "Y0", "Y1"),
                   default=list(meshgen.DEFAULT_DOMAIN),
                   help="planar domain extents (default: %(default)s)")
    g.add_argument("--amplitude", type=float, default=meshgen.DEFAULT_AMPLITUDE,
                   help="smooth-mapped wave amplitude in [0, 0.25] "
                        "(default: %(default)s)")
    g.add_argument("--beta", type=float, default=meshgen.DEFAULT_BETA,
                   help="perturbed-family displacement bound as a fraction "
                        "of h (default: %(default)s)")
    g.add_argument("--seed", type=int, default=None,
                   help="random seed; required for the perturbed family "
                        "(default: %(default)s)")
    g.add_argument("--radius", type=float, default=meshgen.DEFAULT_R,
                   help="annulus inner radius R (default: %(default)s)")
    g.add_argument("--aspect", type=float, default=meshgen.DEFAULT_A,
                   help="annulus cell aspect ratio A (default: %(default)s)")
    g.add_argument("--dtheta0", type=float, default=meshgen.DEFAULT_DTHETA0,
                   help="annulus circumferential spacing at l=0 "
                        "(default: %(default)s)")
    g.add_argument("--oblique", type=float, default=meshgen.DEFAULT_OBLIQUE_DEG,
                   help="harco shear angle in degrees (default: %(default)s)")


def _family_params(args) -> dict:
    fam = args.family
    if fam == "perturbed" and args.seed is None:
        raise UsageError("--seed is required for the perturbed family")
    params = {}
    if fam in ("cartesian", "smooth-mapped", "locally-refined", "perturbed"):
        params["n0"] = args.n0
        params["domain"] = tuple(args.domain)
    if fam == "smooth-mapped":
        params["amplitude"] = args.amplitude
    if fam == "perturbed":
        params["seed"] = args.seed
        params["beta"] = args.beta
    if fam in ("harc", "harco"):
        params["R"] = args.radius
        params["A"] = args.aspect
        params["dtheta0"] = args.dtheta0
    if fam == "harco":
        params["oblique_deg"] = args.oblique
    return params


def _add_field_flags(p):
    g = p.add_argument_group("test field")
    g.add_argument("--field", choices=fields_mod.FIELD_KINDS,
                   default="tanh-product",
                   help="analytic test field (default: %(default)s)")
    g.add_argument("--field-param", action="append", default=[],
                   metavar="KEY=VALUE",
                   help="field parameter override, repeatable (default: none)")


def _build_field(args):
    kv = {}
    for item in args.field_param:
        if "=" not in item:
            raise UsageError(f"--field-param needs KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        try:
            kv[k] = float(v)
        except ValueError:
            raise UsageError(f"--field-param value {v!r} is not a number")
    try:
        if args.field == "tanh-product":
            if kv:
                raise UsageError("tanh-product takes no parameters")
            return fields_mod.tanh_product()
        if args.field == "radial-tanh":
            return fields_mod.radial_tanh(**kv)
        if args.field == "circumferential-tanh":
            return fields_mod.circumferential_tanh(**kv)
        if args.field == "linear":
            return fields_mod.linear(kv.get("a", 0.0), kv.get("b", 1.0),
                                     kv.get("c", 1.0))
        coeffs = tuple(kv.get(k, 0.0) for k in ("c0", "cx", "cy",
                                                "cxx", "cxy", "cyy"))
        return fields_mod.quadratic(coeffs)
    except TypeError as e:
        raise UsageError(str(e))


def _precision(name: str) -> PrecisionMode:
    return PrecisionMode(name)


def _atomic_write(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".fvgrad-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        _atomic_write(path, text)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fvgrad",
                description="Finite-volume gradient reconstruction toolkit: "
                            "grid generators, a 15-scheme gradient catalog, "
                            "and convergence studies.")
    sub = p.add_subparsers(dest="command", metavar="{mesh,grad,study}")

    pm = sub.add_parser("mesh", help="generate a grid and write it out",
                        description="Generate one grid and write it in the "
                                    "plain-text mesh interchange format.")
    _add_family_flags(pm)
    pm.add_argument("-o", "--output", default="-",
                    help="mesh output path, '-' for stdout (default: stdout)")
    pm.add_argument("--metrics", metavar="PATH", default=None,
                    help="also write a quality-metric summary CSV "
                         "(default: no)")

    pg = sub.add_parser("grad", help="compute per-cell gradients",
                        description="Reconstruct cell gradients of an "
                                    "analytic field on one grid and write a "
                                    "per-cell CSV.")
    _add_family_flags(pg)
    _add_field_flags(pg)
    pg.add_argument("--scheme", default="LS(1)",
                    help="scheme name from the catalog, e.g. GG, LS(1), "
                         "TG(2), iTG(0), GG+LS(1) (default: %(default)s)")
    pg.add_argument("--q", type=int, default=None,
                    help="distance-weighting exponent for LS/LSA/TG/iTG "
                         "given without one (default: %(default)s)")
    pg.add_argument("--precision", choices=["double", "extended"],
                    default="double",
                    help="arithmetic mode (default: %(default)s)")
    pg.add_argument("--backend", choices=["auto", "numba", "numpy"],
                    default=None,
                    help="kernel backend (default: FVGRAD_BACKEND or auto)")
    pg.add_argument("-o", "--output", default="-",
                    help="CSV output path, '-' for stdout (default: stdout)")

    ps = sub.add_parser("study", help="run a convergence study",
                        description="Sweep levels x schemes x precisions and "
                                    "emit a long-form CSV of error norms and "
                                    "observed orders.")
    ps.add_argument("--preset", choices=list(study.PRESETS), default=None,
                    help="canned experiment preset; overrides family/"
                         "field/levels/schemes (default: none)")
    _add_family_flags(ps, required=False)
    _add_field_flags(ps)
    ps.add_argument("--levels", type=int, nargs=2, metavar=("L0", "L1"),
                    default=None,
                    help="inclusive level range (default: level..level, or "
                         "the preset's range)")
    ps.add_argument("--schemes", default=None,
                    help="comma-separated scheme names "
                         "(default: the full 15-scheme catalog)")
    ps.add_argument("--precision", default="double",
                    help="comma-separated arithmetic modes out of "
                         "double,extended (default: %(default)s)")
    ps.add_argument("--backend", choices=["auto", "numba", "numpy"],
                    default=None,
                    help="kernel backend (default: FVGRAD_BACKEND or auto)")
    ps.add_argument("--area-weighted", action="store_true",
                    help="area-weight the mean error (default: unweighted)")
    ps.add_argument("--gnuplot", metavar="PATH", default=None,
                    help="also write two-column gnuplot data blocks "
                         "(default: no)")
    ps.add_argument("-o", "--output", default="-",
                    help="CSV output path, '-' for stdout (default: stdout)")
    return p


def _resolve_scheme(name: str, q) -> gradients.SchemeSpec:
    name = name.strip()
    try:
        spec = gradients.scheme_by_name(name)
    except ValueError:
        spec = None
    if q is None:
        if spec is None:
            raise UsageError(f"unknown scheme {name!r}")
        return spec
    if spec is not None and spec.family in ("gg", "gg-corrected"):
        raise ConfigConflict(f"--q does not apply to {spec.name}")
    base = name.upper()
    try:
        return gradients.scheme_by_name(f"{name}({q})")
    except ValueError:
        raise UsageError(f"no catalog scheme {base}({q})")


def _cmd_mesh(args):
    m = meshgen.generate(meshgen.GridFamilySpec(
        args.family, args.level, _family_params(args)))
    buf = io.StringIO()
    mesh_mod.write_mesh(m, buf)
    _emit(args.output, buf.getvalue())
    if args.metrics is not None:
        s = mesh_mod.quality(m).summary()
        text = ",".join(s) + "\n" + ",".join(repr(v) for v in s.values()) + "\n"
        _emit(args.metrics, text)
    return 0


def _cmd_grad(args):
    scheme = _resolve_scheme(args.scheme, args.q)
    m = meshgen.generate(meshgen.GridFamilySpec(
        args.family, args.level, _family_params(args)))
    field = _build_field(args)
    prec = _precision(args.precision)
    res = gradients.compute(m, field, scheme, prec, args.backend)
    P = m.cell_centroid
    gx, gy = fields_mod.exact_gradient(field, P[:, 0], P[:, 1])
    g = res.grad + res.grad_lo
    err = np.hypot(g[:, 0] - gx, g[:, 1] - gy)
    lines = ["cell_id,px,py,gx,gy,exact_gx,exact_gy,err_norm,cond,flag"]
    for i in range(m.n_cells):
        lines.append(",".join((
            str(i), repr(float(P[i, 0])), repr(float(P[i, 1])),
            repr(float(g[i, 0])), repr(float(g[i, 1])),
            repr(float(gx[i])), repr(float(gy[i])),
            repr(float(err[i])), repr(float(res.cond[i])),
            str(int(res.flags[i])))))
    _emit(args.output, "\n".join(lines) + "\n")
    return 0


def _cmd_study(args):
    if args.preset is not None:
        kw = study.preset(args.preset, seed=args.seed)
        if args.levels is not None:
            kw["levels"] = range(args.levels[0], args.levels[1] + 1)
        if args.schemes is not None:
            kw["schemes"] = [_resolve_scheme(s, None)
                             for s in args.schemes.split(",")]
    else:
        if args.family is None or args.level is None:
            raise UsageError("--family and --level are required "
                             "without --preset")
        levels = (args.levels if args.levels is not None
                  else [args.level, args.level])
        schemes = (gradients.scheme_catalog() if args.schemes is None else
                   [_resolve_scheme(s, None) for s in args.schemes.split(",")])
        precisions = tuple(_precision(s.strip())
                           for s in args.precision.split(","))
        kw = dict(cases=[(args.family, _family_params(args))],
                  levels=range(levels[0], levels[1] + 1),
                  schemes=schemes, fields=[_build_field(args)],
                  precisions=precisions)
    report = study.run_study(backend=args.backend,
                             area_weighted=args.area_weighted, **kw)
    _emit(args.output, report.to_csv())
    if args.gnuplot is not None:
        _emit(args.gnuplot, report.gnuplot())
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required: mesh, grad or study")
        if args.command == "study":
            # a preset supplies family/level, so they are optional here
            if args.preset is None and (args.family is None
                                        or args.level is None):
                raise UsageError("--family and --level are required "
                                 "without --preset")
        return {"mesh": _cmd_mesh, "grad": _cmd_grad,
                "study": _cmd_study}[args.command](args)
    except (UsageError, ConfigConflict) as e:
        print(f"{e.code}: {e}", file=sys.stderr)
        return 2
    except FvgradError as e:
        print(f"{e.code}: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"fvgrad: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
