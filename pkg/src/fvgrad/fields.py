"""Analytic test fields, their exact gradients, and mesh sampling.

Each field evaluates in either binary64 or compensated double-double
arithmetic; sampling fills cell-centre values plus boundary-face-centre
values, which is all a gradient scheme needs.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from . import dd
from .mesh import Mesh, cell_centroid_dd, face_centroid_dd
from .numerics import PrecisionMode

FIELD_KINDS = ("tanh-product", "radial-tanh", "circumferential-tanh",
               "linear", "quadratic")


@dataclasses.dataclass(frozen=True)
class AnalyticField:
    kind: str
    params: dict = dataclasses.field(default_factory=dict)


def tanh_product() -> AnalyticField:
    return AnalyticField("tanh-product")


def radial_tanh(fmin=1.0, fmax=3.0, rmin=1.0, rmax=1.0005) -> AnalyticField:
    return AnalyticField("radial-tanh",
                         {"fmin": fmin, "fmax": fmax, "rmin": rmin, "rmax": rmax})


def circumferential_tanh(fmin=1.0, fmax=3.0, tmin=None, tmax=None,
                         half_extent=0.256) -> AnalyticField:
    """Varies in theta = atan2(y, x); default extents match the annular
    generators, whose sector is centred on the +y axis (theta = pi/2)."""
    if tmin is None:
        tmin = math.pi / 2 - half_extent
    if tmax is None:
        tmax = math.pi / 2 + half_extent
    return AnalyticField("circumferential-tanh",
                         {"fmin": fmin, "fmax": fmax, "tmin": tmin, "tmax": tmax})


def linear(a, b, c) -> AnalyticField:
    return AnalyticField("linear", {"a": a, "b": b, "c": c})


def quadratic(coeffs) -> AnalyticField:
    """coeffs = (c0, cx, cy, cxx, cxy, cyy) for
    c0 + cx*x + cy*y + cxx*x^2 + cxy*x*y + cyy*y^2."""
    return AnalyticField("quadratic", {"coeffs": tuple(float(c) for c in coeffs)})


def _ramp(p, tkey0, tkey1):
    slope = (p["fmax"] - p["fmin"]) / (p[tkey1] - p[tkey0])
    return slope


def evaluate(field: AnalyticField, x, y):
    """Field value at (x, y); accepts scalars or arrays."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    p = field.params
    if field.kind == "tanh-product":
        return np.tanh(x) * np.tanh(y)
    if field.kind == "radial-tanh":
        r = np.hypot(x, y)
        f = p["fmin"] + _ramp(p, "rmin", "rmax") * (r - p["rmin"])
        return np.tanh(f)
    if field.kind == "circumferential-tanh":
        th = np.arctan2(y, x)
        f = p["fmin"] + _ramp(p, "tmin", "tmax") * (th - p["tmin"])
        return np.tanh(f)
    if field.kind == "linear":
        return p["a"] + p["b"] * x + p["c"] * y
    if field.kind == "quadratic":
        c0, cx, cy, cxx, cxy, cyy = p["coeffs"]
        return c0 + cx * x + cy * y + cxx * x * x + cxy * x * y + cyy * y * y
    raise ValueError(f"unknown field kind {field.kind!r}")


def exact_gradient(field: AnalyticField, x, y):
    """Closed-form gradient; returns (gx, gy)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    p = field.params
    if field.kind == "tanh-product":
        return (np.tanh(y) / np.cosh(x)**2, np.tanh(x) / np.cosh(y)**2)
    if field.kind == "radial-tanh":
        r = np.hypot(x, y)
        slope = _ramp(p, "rmin", "rmax")
        f = p["fmin"] + slope * (r - p["rmin"])
        mag = slope / np.cosh(f)**2
        return (mag * x / r, mag * y / r)
    if field.kind == "circumferential-tanh":
        r2 = x * x + y * y
        th = np.arctan2(y, x)
        slope = _ramp(p, "tmin", "tmax")
        f = p["fmin"] + slope * (th - p["tmin"])
        mag = slope / np.cosh(f)**2
        return (-mag * y / r2, mag * x / r2)
    if field.kind == "linear":
        shape = np.broadcast(x, y).shape
        return (np.full(shape, p["b"]), np.full(shape, p["c"]))
    if field.kind == "quadratic":
        _, cx, cy, cxx, cxy, cyy = p["coeffs"]
        return (cx + 2.0 * cxx * x + cxy * y, cy + cxy * x + 2.0 * cyy * y)
    raise ValueError(f"unknown field kind {field.kind!r}")


def evaluate_dd(field: AnalyticField, x, y):
    """Double-double field value; points may be float arrays or dd pairs."""
    x = x if isinstance(x, tuple) else dd.from_double(np.asarray(x, dtype=np.float64))
    y = y if isinstance(y, tuple) else dd.from_double(np.asarray(y, dtype=np.float64))
    p = field.params
    if field.kind == "tanh-product":
        return dd.mul(dd.tanh(x), dd.tanh(y))
    if field.kind == "radial-tanh":
        r = dd.norm2(x, y)
        return dd.tanh(_ramp_dd(p, "rmin", "rmax", r))
    if field.kind == "circumferential-tanh":
        th = dd.atan2(y, x)
        return dd.tanh(_ramp_dd(p, "tmin", "tmax", th))
    if field.kind == "linear":
        return dd.add(dd.add_d(dd.mul_d(x, p["b"]), p["a"]), dd.mul_d(y, p["c"]))
    if field.kind == "quadratic":
        c0, cx, cy, cxx, cxy, cyy = p["coeffs"]
        acc = dd.add_d(dd.mul_d(x, cx), c0)
        acc = dd.add(acc, dd.mul_d(y, cy))
        acc = dd.add(acc, dd.mul_d(dd.sqr(x), cxx))
        acc = dd.add(acc, dd.mul_d(dd.mul(x, y), cxy))
        return dd.add(acc, dd.mul_d(dd.sqr(y), cyy))
    raise ValueError(f"unknown field kind {field.kind!r}")


def _ramp_dd(p, tkey0, tkey1, t):
    span = dd.sub(dd.from_double(p["fmax"]), dd.from_double(p["fmin"]))
    width = dd.sub(dd.from_double(p[tkey1]), dd.from_double(p[tkey0]))
    slope = dd.div(span, width)
    off = dd.sub(t, dd.from_double(p[tkey0]))
    return dd.add_d(dd.mul(slope, off), p["fmin"])


@dataclasses.dataclass
class CellField:
    """phi sampled at cell centroids plus boundary-face centroids.

    The lo arrays hold the double-double tails (all zero in double mode).
    """
    cell_values: np.ndarray
    cell_values_lo: np.ndarray
    boundary_values: np.ndarray
    boundary_values_lo: np.ndarray
    precision: PrecisionMode


def sample(field: AnalyticField, mesh: Mesh,
           precision: PrecisionMode = PrecisionMode.DOUBLE) -> CellField:
    P = mesh.cell_centroid
    bf = mesh.boundary_faces
    B = mesh.face_centroid[bf]
    if precision is PrecisionMode.DOUBLE:
        cv = evaluate(field, P[:, 0], P[:, 1])
        bv = evaluate(field, B[:, 0], B[:, 1])
        return CellField(cv, np.zeros_like(cv), bv, np.zeros_like(bv), precision)
    # extended mode samples at the compensated centroids so that phi
    # differences stay consistent with the compensated geometry
    ccx, ccy = cell_centroid_dd(mesh)
    fcx, fcy = face_centroid_dd(mesh)
    cv = evaluate_dd(field, ccx, ccy)
    bv = evaluate_dd(field, (fcx[0][bf], fcx[1][bf]), (fcy[0][bf], fcy[1][bf]))
    return CellField(cv[0], cv[1], bv[0], bv[1], precision)
