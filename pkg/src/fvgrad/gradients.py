"""Cell-centred gradient reconstruction.

All schemes are instances of one framework: pick a point N_f per face,
set R_f = N_f - P, choose a weight vector V_f, then solve

    [sum_f V_f R_f^T] grad = [sum_f V_f (phi(N_f) - phi(P))]

per cell.  The catalog covers the least-squares family LS(q)/LSA(q)
(V along d_hat), the Taylor-Gauss family TG(q)/iTG(q) (V along the face
normal), the Green-Gauss divergence form GG, and GG corrected with an
auxiliary gradient pass.  Everything runs in binary64 or double-double
precision and on either kernel backend.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import dd, fields, kernels
from .errors import ConfigConflict, InsufficientFaces
from .mesh import (Mesh, NfPolicy, cell_centroid_dd, cell_face_geom,
                   cellface_table, cellface_table_dd, face_centroid_dd)
from .numerics import EPS_SING, PrecisionMode, cond2, solve2

FLAG_OK = kernels.FLAG_OK
FLAG_SINGULAR = kernels.FLAG_SINGULAR
FLAG_EXCLUDED = kernels.FLAG_EXCLUDED
FLAG_INSUFFICIENT = kernels.FLAG_INSUFFICIENT

BOUNDARY_USE_VALUE = "use-boundary-value"
BOUNDARY_EXCLUDE = "exclude-boundary-faces"


@dataclasses.dataclass(frozen=True)
class SchemeSpec:
    name: str
    family: str                 # gg | gg-corrected | ls | lsa | tg | itg
    q: int | None = None
    aux: str | None = None      # gg-corrected only: "iTG(0)" or "LS(1)"
    boundary: str = BOUNDARY_USE_VALUE
    interpolation: str = "linear"   # itg only; "nearest" is a diagnostic mode

    @property
    def nf_policy(self):
        if self.family == "itg":
            return NfPolicy.PROJECTED_FACE_CENTROID
        return NfPolicy.NEIGHBOUR_CENTROID


def scheme_catalog() -> list[SchemeSpec]:
    """The full tested roster of 15 schemes."""
    out = [SchemeSpec("GG", "gg"),
           SchemeSpec("GG+iTG(0)", "gg-corrected", aux="iTG(0)"),
           SchemeSpec("GG+LS(1)", "gg-corrected", aux="LS(1)")]
    for q in (-1, 1, 2):
        out.append(SchemeSpec(f"LS({q})", "ls", q=q))
    for fam in ("lsa", "tg", "itg"):
        for q in (0, 1, 2):
            name = {"lsa": "LSA", "tg": "TG", "itg": "iTG"}[fam]
            out.append(SchemeSpec(f"{name}({q})", fam, q=q))
    return out


def scheme_by_name(name: str) -> SchemeSpec:
    for s in scheme_catalog():
        if s.name.lower() == name.lower():
            return s
    raise ValueError(f"unknown scheme {name!r}")


@dataclasses.dataclass
class GradientResult:
    grad: np.ndarray          # (n_cells, 2), hi part
    grad_lo: np.ndarray       # double-double tails (zero in double mode)
    flags: np.ndarray         # per-cell kernel flags
    cond: np.ndarray          # condition number of sum(V R^T); 1.0 for GG
    scheme: SchemeSpec
    precision: PrecisionMode


def _as_cellfield(field, mesh, precision):
    if isinstance(field, fields.CellField):
        return field
    return fields.sample(field, mesh, precision)


def _wpow(x, p):
    """x**p for small integer p (double arrays)."""
    if p == 0:
        return np.ones_like(x)
    if p == 1:
        return x.copy()
    if p == 2:
        return x * x
    if p == -1:
        return 1.0 / x
    return x**p


def _wpow_dd(x, p):
    one = (np.ones_like(x[0]), np.zeros_like(x[0]))
    if p == 0:
        return one
    if p > 0:
        r = x
        for _ in range(p - 1):
            r = dd.mul(r, x)
        return r
    r = _wpow_dd(x, -p)
    return dd.div(one, r)


def _entry_values(mesh, cf, t):
    """(phi(P), phi(P_f or c_f)) per CSR entry, binary64 parts."""
    bpos = mesh.boundary_pos[t.face]
    safe_nb = np.where(t.is_bnd, 0, t.nb)
    safe_bpos = np.where(t.is_bnd, bpos, 0)
    phiP = cf.cell_values[t.cell]
    phiN = np.where(t.is_bnd, cf.boundary_values[safe_bpos], cf.cell_values[safe_nb])
    return phiP, phiN


def _entry_values_dd(mesh, cf, t):
    bpos = mesh.boundary_pos[t.face]
    safe_nb = np.where(t.is_bnd, 0, t.nb)
    safe_bpos = np.where(t.is_bnd, bpos, 0)
    phiP = (cf.cell_values[t.cell], cf.cell_values_lo[t.cell])
    phiN = (np.where(t.is_bnd, cf.boundary_values[safe_bpos], cf.cell_values[safe_nb]),
            np.where(t.is_bnd, cf.boundary_values_lo[safe_bpos], cf.cell_values_lo[safe_nb]))
    return phiP, phiN


def _framework_entries_double(mesh, cf, scheme):
    """Per-entry (Vx, Vy, Rx, Ry, dphi) for one framework scheme."""
    t = cellface_table(mesh)
    phiP, phiN = _entry_values(mesh, cf, t)
    dphi = phiN - phiP
    alpha = np.where(t.is_bnd, 1.0, t.alpha)
    if scheme.family == "itg":
        Rx = np.where(t.is_bnd, t.Dx, alpha * t.Dx)
        Ry = np.where(t.is_bnd, t.Dy, alpha * t.Dy)
        normR = np.where(t.is_bnd, t.normD, alpha * t.normD)
        if scheme.interpolation == "nearest":
            dphi = np.where(t.is_bnd, dphi, np.where(alpha >= 0.5, dphi, 0.0))
        else:
            dphi = np.where(t.is_bnd, dphi, alpha * dphi)
    else:
        Rx, Ry, normR = t.Dx, t.Dy, t.normD
    q = scheme.q
    if scheme.family in ("ls", "lsa"):
        # V = |R|^(-q) * d_hat  (optionally * S_f)
        w = _wpow(normR, -q - 1)
        if scheme.family == "lsa":
            w = w * t.S
        Vx, Vy = w * Rx, w * Ry
    else:
        w = t.S * _wpow(normR, -q)
        Vx, Vy = w * t.snx, w * t.sny
    return t, Vx, Vy, Rx, Ry, dphi


def _framework_entries_dd(mesh, cf, scheme):
    t = cellface_table(mesh)
    td = cellface_table_dd(mesh)
    phiP, phiN = _entry_values_dd(mesh, cf, t)
    dphi = dd.sub(phiN, phiP)
    alpha = (np.where(t.is_bnd, 1.0, td.alpha[0]), np.where(t.is_bnd, 0.0, td.alpha[1]))
    if scheme.family == "itg":
        aDx = dd.mul(alpha, td.Dx)
        aDy = dd.mul(alpha, td.Dy)
        Rx = (np.where(t.is_bnd, td.Dx[0], aDx[0]), np.where(t.is_bnd, td.Dx[1], aDx[1]))
        Ry = (np.where(t.is_bnd, td.Dy[0], aDy[0]), np.where(t.is_bnd, td.Dy[1], aDy[1]))
        aN = dd.mul(alpha, td.normD)
        normR = (np.where(t.is_bnd, td.normD[0], aN[0]),
                 np.where(t.is_bnd, td.normD[1], aN[1]))
        if scheme.interpolation == "nearest":
            zero = np.zeros_like(dphi[0])
            keep = t.is_bnd | (alpha[0] >= 0.5)
            dphi = (np.where(keep, dphi[0], zero), np.where(keep, dphi[1], zero))
        else:
            adp = dd.mul(alpha, dphi)
            dphi = (np.where(t.is_bnd, dphi[0], adp[0]), np.where(t.is_bnd, dphi[1], adp[1]))
    else:
        Rx, Ry, normR = td.Dx, td.Dy, td.normD
    q = scheme.q
    if scheme.family in ("ls", "lsa"):
        w = _wpow_dd(normR, -q - 1)
        if scheme.family == "lsa":
            w = dd.mul(w, td.S)
        Vx, Vy = dd.mul(w, Rx), dd.mul(w, Ry)
    else:
        w = dd.mul(td.S, _wpow_dd(normR, -q))
        Vx, Vy = dd.mul(w, td.snx), dd.mul(w, td.sny)
    return t, Vx, Vy, Rx, Ry, dphi


def _apply_use(t, arrays, exclude_boundary):
    """Zero out unused entries; returns (masked arrays, nused, excluded_mask)."""
    ptr_counts = np.diff  # noqa: F841  (documentation aid)
    if not exclude_boundary:
        return arrays, None
    use = ~t.is_bnd
    out = []
    for a in arrays:
        if isinstance(a, tuple):
            out.append((np.where(use, a[0], 0.0), np.where(use, a[1], 0.0)))
        else:
            out.append(np.where(use, a, 0.0))
    return out, use


def compute(mesh: Mesh, field, scheme: SchemeSpec,
            precision: PrecisionMode = PrecisionMode.DOUBLE,
            backend: str | None = None) -> GradientResult:
    """Per-cell gradients of a sampled (or analytic) field under one scheme."""
    cf = _as_cellfield(field, mesh, precision)
    if scheme.family in ("gg", "gg-corrected"):
        if scheme.boundary == BOUNDARY_EXCLUDE:
            raise ConfigConflict("Green-Gauss forms need every face of the cell")
        return _compute_gg(mesh, cf, scheme, precision, backend)
    t0 = cellface_table(mesh)
    counts = np.diff(mesh.cell_face_ptr)
    if scheme.boundary == BOUNDARY_EXCLUDE:
        nused = counts - np.add.reduceat(t0.is_bnd.astype(np.int64), mesh.cell_face_ptr[:-1])
    else:
        nused = counts
    eps = EPS_SING[precision]
    if precision is PrecisionMode.DOUBLE:
        t, Vx, Vy, Rx, Ry, dphi = _framework_entries_double(mesh, cf, scheme)
        (Vx, Vy, Rx, Ry, dphi), use = _apply_use(t, (Vx, Vy, Rx, Ry, dphi),
                                                 scheme.boundary == BOUNDARY_EXCLUDE)
        grad, flags, cond = kernels.framework_double(
            mesh.cell_face_ptr, Vx, Vy, Rx, Ry, dphi, nused, eps, backend)
        grad_lo = np.zeros_like(grad)
    else:
        t, Vx, Vy, Rx, Ry, dphi = _framework_entries_dd(mesh, cf, scheme)
        (Vx, Vy, Rx, Ry, dphi), use = _apply_use(t, (Vx, Vy, Rx, Ry, dphi),
                                                 scheme.boundary == BOUNDARY_EXCLUDE)
        grad, grad_lo, flags, cond = kernels.framework_dd(
            mesh.cell_face_ptr, Vx, Vy, Rx, Ry, dphi, nused, eps, backend)
    if scheme.boundary == BOUNDARY_EXCLUDE:
        had_bnd = np.add.reduceat(t.is_bnd.astype(np.int64), mesh.cell_face_ptr[:-1]) > 0
        flags = np.where((flags == FLAG_OK) & had_bnd, FLAG_EXCLUDED, flags)
    return GradientResult(grad, grad_lo, flags, cond, scheme, precision)


def _face_owner_alpha(mesh, t):
    """alpha of the owning cell per face (defines the face-value interp)."""
    alpha_f = np.empty(mesh.n_faces)
    own = t.sign > 0
    alpha_f[t.face[own]] = t.alpha[own]
    return alpha_f


def _compute_gg(mesh, cf, scheme, precision, backend):
    t = cellface_table(mesh)
    bface = mesh.boundary_faces
    bnd = mesh.face_neighbour < 0
    own = mesh.face_owner
    ngb = np.where(bnd, 0, mesh.face_neighbour)
    alpha_f = _face_owner_alpha(mesh, t)

    if scheme.family == "gg-corrected":
        aux_scheme = scheme_by_name(scheme.aux)
        aux = compute(mesh, cf, aux_scheme, precision, backend)
        gx, gy = aux.grad[:, 0], aux.grad[:, 1]
        gxl, gyl = aux.grad_lo[:, 0], aux.grad_lo[:, 1]
    else:
        gx = gy = gxl = gyl = None

    if precision is PrecisionMode.DOUBLE:
        # phi at c'_f by linear interpolation, once per face
        phif = (1.0 - alpha_f) * cf.cell_values[own] + alpha_f * cf.cell_values[ngb]
        if gx is not None:
            gfx = (1.0 - alpha_f) * gx[own] + alpha_f * gx[ngb]
            gfy = (1.0 - alpha_f) * gy[own] + alpha_f * gy[ngb]
            # owner-side projected point c'_f and offset to c_f
            ocp = np.empty((mesh.n_faces, 2))
            ocp[t.face[t.sign > 0], 0] = t.cpx[t.sign > 0]
            ocp[t.face[t.sign > 0], 1] = t.cpy[t.sign > 0]
            phif = phif + gfx * (mesh.face_centroid[:, 0] - ocp[:, 0]) \
                        + gfy * (mesh.face_centroid[:, 1] - ocp[:, 1])
        phif[bface] = cf.boundary_values
        pf_entries = phif[t.face]
        grad = kernels.green_gauss_double(mesh.cell_face_ptr, t.svx, t.svy,
                                          pf_entries, mesh.cell_area, backend)
        grad_lo = np.zeros_like(grad)
    else:
        td = cellface_table_dd(mesh)
        alpha_fd = _face_alpha_dd(mesh, t, td)
        one_m = dd.add_d(dd.neg(alpha_fd), 1.0)
        phio = (cf.cell_values[own], cf.cell_values_lo[own])
        phin = (cf.cell_values[ngb], cf.cell_values_lo[ngb])
        phif = dd.add(dd.mul(one_m, phio), dd.mul(alpha_fd, phin))
        if gx is not None:
            gox = dd.add(dd.mul(one_m, (gx[own], gxl[own])), dd.mul(alpha_fd, (gx[ngb], gxl[ngb])))
            goy = dd.add(dd.mul(one_m, (gy[own], gyl[own])), dd.mul(alpha_fd, (gy[ngb], gyl[ngb])))
            offx, offy = _face_offset_dd(mesh, t, td)
            phif = dd.add(phif, dd.add(dd.mul(gox, offx), dd.mul(goy, offy)))
        phif = (phif[0].copy(), phif[1].copy())
        phif[0][bface] = cf.boundary_values
        phif[1][bface] = cf.boundary_values_lo
        pf = (phif[0][t.face], phif[1][t.face])
        gh, gl = kernels.green_gauss_dd(mesh.cell_face_ptr, td.svx, td.svy,
                                        pf, td.omega, backend)
        grad, grad_lo = gh, gl
    nc = mesh.n_cells
    return GradientResult(grad, grad_lo, np.zeros(nc, dtype=np.int64),
                          np.ones(nc), scheme, precision)


def _face_alpha_dd(mesh, t, td):
    own = t.sign > 0
    hi = np.empty(mesh.n_faces)
    lo = np.empty(mesh.n_faces)
    hi[t.face[own]] = td.alpha[0][own]
    lo[t.face[own]] = td.alpha[1][own]
    return hi, lo


def _face_offset_dd(mesh, t, td):
    """c_f - c'_f per face in double-double (owner-side projection)."""
    own = t.sign > 0
    fown = t.face[own]
    oc = t.cell[own]
    ccx, ccy = cell_centroid_dd(mesh)
    fcx, fcy = face_centroid_dd(mesh)
    # c'_f = P + alpha D; offset = (c_f - P) - alpha D
    gx = dd.sub((fcx[0][fown], fcx[1][fown]), (ccx[0][oc], ccx[1][oc]))
    gy = dd.sub((fcy[0][fown], fcy[1][fown]), (ccy[0][oc], ccy[1][oc]))
    a = (td.alpha[0][own], td.alpha[1][own])
    ox = dd.sub(gx, dd.mul(a, (td.Dx[0][own], td.Dx[1][own])))
    oy = dd.sub(gy, dd.mul(a, (td.Dy[0][own], td.Dy[1][own])))
    hx = np.empty(mesh.n_faces); lx = np.empty(mesh.n_faces)
    hy = np.empty(mesh.n_faces); ly = np.empty(mesh.n_faces)
    hx[fown], lx[fown] = ox
    hy[fown], ly[fown] = oy
    return (hx, lx), (hy, ly)


def gg_corrected(mesh: Mesh, field, aux: str,
                 precision: PrecisionMode = PrecisionMode.DOUBLE,
                 backend: str | None = None) -> GradientResult:
    spec = SchemeSpec(f"GG+{aux}", "gg-corrected", aux=aux)
    return compute(mesh, field, spec, precision, backend)


# ---------------------------------------------------------------------------
# Scalar reference path (tests and small diagnostics)


def framework_gradient(mesh: Mesh, cf: fields.CellField, cell: int,
                       Vf, nf_policy: NfPolicy,
                       boundary: str = BOUNDARY_USE_VALUE,
                       precision: PrecisionMode = PrecisionMode.DOUBLE):
    """One-cell reference solve with caller-supplied per-face V vectors.

    Vf maps face id -> (vx, vy).  Returns (grad (2,), cond).  Raises
    SingularSystem / InsufficientFaces instead of flagging.
    """
    bpos = mesh.boundary_pos
    M = np.zeros((2, 2))
    rhs = np.zeros(2)
    nused = 0
    phiP = cf.cell_values[cell]
    for f in mesh.cell_faces(cell):
        g = cell_face_geom(mesh, cell, f, nf_policy)
        is_bnd = g.D is None
        if is_bnd and boundary == BOUNDARY_EXCLUDE:
            continue
        if is_bnd:
            dphi = cf.boundary_values[bpos[f]] - phiP
        else:
            nb = mesh.face_neighbour[f] if mesh.face_owner[f] == cell else mesh.face_owner[f]
            dphi = cf.cell_values[nb] - phiP
            if nf_policy is NfPolicy.PROJECTED_FACE_CENTROID:
                dphi = g.alpha * dphi
            elif nf_policy is NfPolicy.MIDPOINT:
                dphi = 0.5 * dphi
        v = np.asarray(Vf[f], dtype=np.float64)
        M += np.outer(v, g.R)
        rhs += v * dphi
        nused += 1
    if nused < 2:
        raise InsufficientFaces(f"cell {cell}: only {nused} usable faces")
    x = solve2(M, rhs, precision)
    if precision is PrecisionMode.EXTENDED:
        x = x[:, 0] + x[:, 1]
    return x, cond2(M)


def scheme_vf(mesh: Mesh, cell: int, scheme: SchemeSpec) -> dict:
    """Per-face V vectors of a catalog framework scheme for one cell."""
    out = {}
    for f in mesh.cell_faces(cell):
        g = cell_face_geom(mesh, cell, f, scheme.nf_policy)
        normR = np.linalg.norm(g.R)
        S = mesh.face_length[f]
        if scheme.family in ("ls", "lsa"):
            v = normR**(-scheme.q) * (g.R / normR)
            if scheme.family == "lsa":
                v = S * v
        else:
            v = (S / normR**scheme.q) * g.s_hat
        out[f] = v
    return out
