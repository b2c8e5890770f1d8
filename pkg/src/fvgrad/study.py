"""Convergence studies: error norms, observed orders, precision breakdown.

A study sweeps (grid family, level, scheme, field, precision) combinations,
reports mean/max gradient errors with observed convergence orders, and
flags levels where the binary64 run has lost convergence that the
double-double run retains.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import math
import os

import numpy as np

from . import fields as fields_mod
from . import gradients, meshgen
from .errors import NonPositiveError, UsageError
from .mesh import Mesh
from .numerics import PrecisionMode

NOMINAL_ORDER = 2.0
BREAKDOWN_DOUBLE_BELOW = NOMINAL_ORDER - 0.7
BREAKDOWN_EXTENDED_AT_LEAST = NOMINAL_ORDER - 0.3


def error_norms(result: gradients.GradientResult, field, mesh: Mesh,
                area_weighted: bool = False):
    """(mean, max, n_excluded) of per-cell Euclidean gradient errors.

    Cells flagged singular or insufficient are left out of the norms and
    counted; mean is unweighted over cells unless area_weighted.
    """
    P = mesh.cell_centroid
    gx, gy = field_exact(field, P)
    ex = (result.grad[:, 0] + result.grad_lo[:, 0]) - gx
    ey = (result.grad[:, 1] + result.grad_lo[:, 1]) - gy
    err = np.hypot(ex, ey)
    ok = (result.flags == gradients.FLAG_OK) | (result.flags == gradients.FLAG_EXCLUDED)
    n_bad = int(np.sum(~ok))
    if not np.any(ok):
        return math.nan, math.nan, n_bad
    if area_weighted:
        w = mesh.cell_area[ok]
        mean = float(np.sum(err[ok] * w) / np.sum(w))
    else:
        mean = float(err[ok].mean())
    return mean, float(err[ok].max()), n_bad


def field_exact(field, P):
    return fields_mod.exact_gradient(field, P[:, 0], P[:, 1])


def observed_order(err_coarse: float, err_fine: float) -> float:
    """p = log2(E_coarse / E_fine) for a refinement factor of 2."""
    if not (err_coarse > 0.0 and err_fine > 0.0):
        raise NonPositiveError("observed order needs positive errors")
    return math.log2(err_coarse / err_fine)


@dataclasses.dataclass
class StudyRow:
    family: str
    level: int
    h: float
    n_cells: int
    scheme: str
    precision: str
    mean_err: float
    max_err: float
    order_mean: float   # nan at the coarsest level
    order_max: float
    max_cond: float
    n_singular: int
    gamma: float        # nan for planar families
    breakdown: bool


@dataclasses.dataclass
class StudyReport:
    rows: list

    CSV_COLUMNS = ("family", "level", "h", "n_cells", "scheme", "precision",
                   "mean_err", "max_err", "order_mean", "order_max",
                   "max_cond", "n_singular", "gamma", "breakdown")

    def to_csv(self) -> str:
        out = [",".join(self.CSV_COLUMNS)]
        for r in self.rows:
            vals = []
            for c in self.CSV_COLUMNS:
                v = getattr(r, c)
                if isinstance(v, float):
                    vals.append("" if math.isnan(v) else repr(v))
                elif isinstance(v, bool):
                    vals.append("1" if v else "0")
                else:
                    vals.append(str(v))
            out.append(",".join(vals))
        return "\n".join(out) + "\n"

    def gnuplot(self, value: str = "mean_err") -> str:
        """Two-column (h, value) data blocks, one block per curve."""
        blocks = []
        key = None
        lines = []
        for r in self.rows:
            k = (r.family, r.scheme, r.precision)
            if k != key:
                if lines:
                    blocks.append("\n".join(lines))
                key = k
                lines = [f"# {r.family} {r.scheme} {r.precision}"]
            lines.append(f"{r.h!r} {getattr(r, value)!r}")
        if lines:
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n"

    def find(self, **kw):
        rows = self.rows
        for k, v in kw.items():
            rows = [r for r in rows if getattr(r, k) == v]
        return rows


def _grid_h(family, params, level, mesh):
    if family in ("harc", "harco"):
        R = params.get("R", meshgen.DEFAULT_R)
        dtheta0 = params.get("dtheta0", meshgen.DEFAULT_DTHETA0)
        return dtheta0 / 2**level * R
    x0, x1, y0, y1 = params.get("domain", meshgen.DEFAULT_DOMAIN)
    return math.sqrt((x1 - x0) * (y1 - y0) / mesh.n_cells)


def _grid_gamma(family, params, level):
    if family not in ("harc", "harco"):
        return math.nan
    A = params.get("A", meshgen.DEFAULT_A)
    dtheta0 = params.get("dtheta0", meshgen.DEFAULT_DTHETA0)
    return A * dtheta0 / 2**level / 2.0


def _n_workers(threads):
    if threads is None:
        threads = int(os.environ.get("FVGRAD_THREADS", "0"))
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def default_field_for(family: str):
    if family in ("harc", "harco"):
        return fields_mod.radial_tanh()
    return fields_mod.tanh_product()


def run_study(cases, levels, schemes, fields, precisions=(PrecisionMode.DOUBLE,),
              backend=None, area_weighted=False, threads=None) -> StudyReport:
    """Full sweep; cases are (family, params) pairs, params without level.

    Rows are ordered (case, field, precision, scheme, level);
    per-combination failures are recorded as nan rows rather than aborting.
    """
    levels = list(levels)
    meshes = {}
    for family, params in cases:
        for l in levels:
            meshes[(family, l)] = meshgen.generate(
                meshgen.GridFamilySpec(family, l, dict(params)))

    fields = list(fields)
    samples = {}
    for family, params in cases:
        for i, f in enumerate(fields):
            for prec in precisions:
                for l in levels:
                    samples[(family, l, i, prec)] = fields_mod.sample(
                        f, meshes[(family, l)], prec)

    combos = [(family, params, i, prec, s)
              for family, params in cases
              for i in range(len(fields))
              for prec in precisions
              for s in schemes]

    def run_combo(combo):
        family, params, i, prec, scheme = combo
        f = fields[i]
        out = []
        for l in levels:
            mesh = meshes[(family, l)]
            cf = samples[(family, l, i, prec)]
            try:
                res = gradients.compute(mesh, cf, scheme, prec, backend)
                mean, mx, nsing = error_norms(res, f, mesh, area_weighted)
                incl = ((res.flags == gradients.FLAG_OK)
                        | (res.flags == gradients.FLAG_EXCLUDED))
                cond = float(res.cond[incl].max()) if np.any(incl) else math.inf
            except Exception:
                mean = mx = cond = math.nan
                nsing = -1
            out.append(StudyRow(
                family=family, level=l,
                h=_grid_h(family, params, l, mesh), n_cells=mesh.n_cells,
                scheme=scheme.name, precision=prec.value,
                mean_err=mean, max_err=mx,
                order_mean=math.nan, order_max=math.nan,
                max_cond=cond, n_singular=nsing,
                gamma=_grid_gamma(family, params, l), breakdown=False))
        for prev, cur in zip(out, out[1:]):
            if prev.mean_err > 0 and cur.mean_err > 0:
                cur.order_mean = observed_order(prev.mean_err, cur.mean_err)
            if prev.max_err > 0 and cur.max_err > 0:
                cur.order_max = observed_order(prev.max_err, cur.max_err)
        return out

    n = _n_workers(threads)
    if n > 1 and len(combos) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=n) as ex:
            results = list(ex.map(run_combo, combos))
    else:
        results = [run_combo(c) for c in combos]

    rows = [r for chunk in results for r in chunk]
    _mark_breakdown(rows)
    return StudyReport(rows)


def _mark_breakdown(rows):
    ext = {}
    for r in rows:
        if r.precision == PrecisionMode.EXTENDED.value:
            ext[(r.family, r.scheme, r.level)] = r.order_mean
    for r in rows:
        if r.precision != PrecisionMode.DOUBLE.value:
            continue
        e = ext.get((r.family, r.scheme, r.level))
        if e is None or math.isnan(e) or math.isnan(r.order_mean):
            continue
        r.breakdown = (r.order_mean < BREAKDOWN_DOUBLE_BELOW
                       and e >= BREAKDOWN_EXTENDED_AT_LEAST)


# ---------------------------------------------------------------------------
# Canned experiment presets

FIG6_GROUP1 = ("iTG(0)", "TG(1)", "iTG(2)", "GG", "LS(1)", "LSA(1)",
               "GG+iTG(0)", "GG+LS(1)")
FIG6_GROUP2 = ("TG(2)", "LS(2)", "LSA(2)")


def preset(name: str, seed=None) -> dict:
    """run_study keyword arguments for one canned experiment sweep."""
    catalog = gradients.scheme_catalog()
    planar = {
        "fig3": ("smooth-mapped", {}),
        "fig4": ("locally-refined", {}),
        "fig5": ("perturbed", {"seed": seed}),
    }
    annular = {
        "fig6": ("harc", fields_mod.radial_tanh()),
        "fig7": ("harc", fields_mod.radial_tanh()),
        "fig8": ("harc", fields_mod.circumferential_tanh()),
        "fig10": ("harco", fields_mod.radial_tanh()),
        "fig11": ("harco", fields_mod.circumferential_tanh()),
    }
    if name in planar:
        family, params = planar[name]
        if family == "perturbed" and seed is None:
            raise UsageError("the perturbed family needs a seed")
        return dict(cases=[(family, params)], levels=range(2, 7),
                    schemes=catalog, fields=[fields_mod.tanh_product()],
                    precisions=(PrecisionMode.DOUBLE,))
    if name in annular:
        family, field = annular[name]
        return dict(cases=[(family, {})], levels=range(0, 10),
                    schemes=catalog, fields=[field],
                    precisions=(PrecisionMode.DOUBLE, PrecisionMode.EXTENDED))
    raise UsageError(f"unknown preset {name!r}")


PRESETS = ("fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig10", "fig11")
