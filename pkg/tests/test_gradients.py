"""Gradient schemes against independent oracles and exactness identities."""

import mpmath as mp
import numpy as np
import pytest

from fvgrad import fields as F
from fvgrad import gradients
from fvgrad.errors import ConfigConflict
from fvgrad.gradients import (BOUNDARY_EXCLUDE, FLAG_EXCLUDED, FLAG_OK,
                              SchemeSpec, compute, framework_gradient,
                              scheme_by_name, scheme_catalog, scheme_vf)
from fvgrad.mesh import NfPolicy, cellface_table
from fvgrad.meshgen import (GridFamilySpec, gen_cartesian, gen_harc,
                            gen_perturbed, gen_smooth_mapped, generate)
from fvgrad.numerics import PrecisionMode

mp.mp.dps = 40

CATALOG = {s.name: s for s in scheme_catalog()}
ALL_FAMILIES = [GridFamilySpec("cartesian", 3, {}),
                GridFamilySpec("smooth-mapped", 3, {}),
                GridFamilySpec("locally-refined", 3, {}),
                GridFamilySpec("perturbed", 3, {"seed": 7}),
                GridFamilySpec("harc", 3, {}),
                GridFamilySpec("harco", 3, {})]


def total(res):
    return res.grad + res.grad_lo


def grad_errors(res, field, mesh):
    P = mesh.cell_centroid
    gx, gy = F.exact_gradient(field, P[:, 0], P[:, 1])
    g = total(res)
    return np.hypot(g[:, 0] - gx, g[:, 1] - gy)


# ---------------------------------------------------------------------------
# Independent oracles


def mpmath_framework_oracle(mesh, cf, scheme, cell):
    """Re-solve one cell's system from scratch at 40 digits."""
    t = cellface_table(mesh)
    sel = np.where(t.cell == cell)[0]
    M = mp.matrix(2, 2)
    b = mp.matrix(2, 1)
    bpos = mesh.boundary_pos
    for e in sel:
        is_bnd = bool(t.is_bnd[e])
        if is_bnd:
            R = mp.matrix([mp.mpf(t.cfx[e]) - mp.mpf(mesh.cell_centroid[cell, 0]),
                           mp.mpf(t.cfy[e]) - mp.mpf(mesh.cell_centroid[cell, 1])])
            dphi = mp.mpf(cf.boundary_values[bpos[t.face[e]]]) \
                - mp.mpf(cf.cell_values[cell])
        else:
            D = mp.matrix([mp.mpf(t.Dx[e]), mp.mpf(t.Dy[e])])
            dphi = mp.mpf(cf.cell_values[t.nb[e]]) - mp.mpf(cf.cell_values[cell])
            if scheme.family == "itg":
                alpha = mp.mpf(t.alpha[e])
                R = alpha * D
                dphi = alpha * dphi
            else:
                R = D
        nr = mp.sqrt(R[0] ** 2 + R[1] ** 2)
        q = scheme.q
        if scheme.family in ("ls", "lsa"):
            w = nr ** (-q - 1)
            if scheme.family == "lsa":
                w *= mp.mpf(t.S[e])
            V = mp.matrix([w * R[0], w * R[1]])
        else:
            w = mp.mpf(t.S[e]) * nr ** (-q)
            V = mp.matrix([w * mp.mpf(t.snx[e]), w * mp.mpf(t.sny[e])])
        for i in range(2):
            for j in range(2):
                M[i, j] += V[i] * R[j]
            b[i] += V[i] * dphi
    x = mp.lu_solve(M, b)
    return float(x[0]), float(x[1])


@pytest.mark.parametrize("name", ["LS(1)", "LS(-1)", "LSA(2)", "TG(0)",
                                  "TG(2)", "iTG(1)"])
def test_compute_matches_mpmath_oracle(name):
    mesh = gen_smooth_mapped(2)
    field = F.tanh_product()
    scheme = CATALOG[name]
    res = compute(mesh, field, scheme)
    cf = F.sample(field, mesh)
    rng = np.random.default_rng(0)
    for cell in rng.choice(mesh.n_cells, size=8, replace=False):
        gx, gy = mpmath_framework_oracle(mesh, cf, scheme, int(cell))
        scale = max(1.0, abs(gx), abs(gy))
        assert abs(res.grad[cell, 0] - gx) / scale < 1e-13
        assert abs(res.grad[cell, 1] - gy) / scale < 1e-13


@pytest.mark.parametrize("q", [-1, 1, 2])
def test_ls_matches_normal_equation_oracle(q):
    # weighted least squares min sum w_f (R_f . g - dphi_f)^2 via numpy
    mesh = gen_perturbed(2, seed=3)
    field = F.tanh_product()
    scheme = CATALOG[f"LS({q})"]
    res = compute(mesh, field, scheme)
    cf = F.sample(field, mesh)
    t = cellface_table(mesh)
    bpos = mesh.boundary_pos
    for cell in (0, 17, 40, 63):
        sel = np.where(t.cell == cell)[0]
        A, rhs, w = [], [], []
        for e in sel:
            if t.is_bnd[e]:
                R = np.array([t.cfx[e], t.cfy[e]]) - mesh.cell_centroid[cell]
                dphi = cf.boundary_values[bpos[t.face[e]]] - cf.cell_values[cell]
            else:
                R = np.array([t.Dx[e], t.Dy[e]])
                dphi = cf.cell_values[t.nb[e]] - cf.cell_values[cell]
            A.append(R)
            rhs.append(dphi)
            # V = |R|^(-q) d_hat against row R gives weight |R|^(-q-1)
            w.append(np.linalg.norm(R) ** (-q - 1))
        A = np.asarray(A) * np.sqrt(w)[:, None]
        rhs = np.asarray(rhs) * np.sqrt(w)
        ref, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        assert np.allclose(res.grad[cell], ref, rtol=1e-12, atol=1e-12)


def test_scalar_reference_path_matches_vectorized():
    mesh = gen_smooth_mapped(2)
    field = F.tanh_product()
    cf = F.sample(field, mesh)
    for name in ("LS(1)", "TG(2)", "iTG(0)"):
        scheme = CATALOG[name]
        res = compute(mesh, field, scheme)
        for cell in (0, 25, 50):
            vf = scheme_vf(mesh, cell, scheme)
            g, cond = framework_gradient(mesh, cf, cell, vf, scheme.nf_policy)
            assert np.allclose(g, res.grad[cell], rtol=1e-12)
            assert cond == pytest.approx(res.cond[cell], rel=1e-9)


# ---------------------------------------------------------------------------
# Exactness and identity properties


@pytest.mark.parametrize("spec", ALL_FAMILIES,
                         ids=[s.family for s in ALL_FAMILIES])
def test_linear_exactness_extended_all_schemes(spec):
    mesh = generate(spec)
    field = F.linear(1.0, 2.0, -3.0)
    for scheme in scheme_catalog():
        if scheme.family == "gg":
            continue     # plain GG is not linear-exact on skewed grids
        res = compute(mesh, field, scheme, PrecisionMode.EXTENDED)
        err = grad_errors(res, field, mesh)
        assert err.max() == 0.0, scheme.name


def test_gg_linear_exact_on_cartesian_only():
    field = F.linear(0.0, 1.0, 1.0)
    gg = CATALOG["GG"]
    err_cart = grad_errors(compute(gen_cartesian(3), field, gg),
                           field, gen_cartesian(3))
    assert err_cart.max() < 1e-13
    skew = gen_smooth_mapped(3)
    assert grad_errors(compute(skew, field, gg), field, skew).max() > 1e-3


def test_quadratic_centroid_exactness_on_uniform_grid():
    # on a uniform grid the +R/-R stencil symmetry cancels the second-order
    # truncation term, so interior centroid gradients of a quadratic are
    # exact for every framework scheme
    mesh = gen_cartesian(3)
    field = F.quadratic((0.5, 1.0, -2.0, 3.0, 1.5, -0.5))
    interior = np.ones(mesh.n_cells, dtype=bool)
    t = cellface_table(mesh)
    interior[t.cell[t.is_bnd]] = False
    for name in ("LS(1)", "LS(2)", "LSA(0)", "TG(2)", "iTG(1)"):
        res = compute(mesh, field, CATALOG[name])
        err = grad_errors(res, field, mesh)
        assert err[interior].max() < 1e-11, name


def test_itg0_equals_gg_on_cartesian():
    mesh = gen_cartesian(3)
    field = F.tanh_product()
    a = compute(mesh, field, CATALOG["iTG(0)"])
    b = compute(mesh, field, CATALOG["GG"])
    assert np.abs(a.grad - b.grad).max() < 1e-12


def test_itg1_equals_tg1():
    # alpha cancels between weight and compressed dphi at q = 1
    for mesh in (gen_smooth_mapped(2), gen_perturbed(2, seed=11)):
        field = F.tanh_product()
        a = compute(mesh, field, CATALOG["iTG(1)"])
        b = compute(mesh, field, CATALOG["TG(1)"])
        assert np.abs(a.grad - b.grad).max() < 1e-12


def test_tg_midpoint_equals_neighbour_centroid_point():
    # V does not depend on N_f for TG, and dphi scales linearly along D, so
    # the midpoint policy reproduces the same system up to rounding
    mesh = gen_smooth_mapped(2)
    field = F.tanh_product()
    cf = F.sample(field, mesh)
    scheme = CATALOG["TG(1)"]
    for cell in (0, 13, 42):
        vf = scheme_vf(mesh, cell, scheme)
        g_nb, _ = framework_gradient(mesh, cf, cell, vf,
                                     NfPolicy.NEIGHBOUR_CENTROID)
        vf_mid = {f: 2.0 * np.asarray(v) for f, v in vf.items()
                  if mesh.face_neighbour[f] >= 0 and
                  mesh.face_owner[f] != -1}
        for f in vf:
            if f not in vf_mid:
                vf_mid[f] = vf[f]
        g_mid, _ = framework_gradient(mesh, cf, cell, vf_mid,
                                      NfPolicy.MIDPOINT)
        assert np.abs(g_nb - g_mid).max() < 1e-13


def test_gg_is_conservative_bitwise():
    # sum of Omega * grad over cells telescopes to the boundary flux
    # because each interior face product enters exactly twice with
    # opposite signs
    mesh = gen_perturbed(3, seed=2)
    field = F.tanh_product()
    res = compute(mesh, field, CATALOG["GG"])
    cf = F.sample(field, mesh)
    t = cellface_table(mesh)
    cell_sum = (mesh.cell_area[:, None] * res.grad).sum(axis=0)
    bnd = mesh.boundary_faces
    sv = np.stack([mesh.face_normal[bnd, 0] * mesh.face_length[bnd],
                   mesh.face_normal[bnd, 1] * mesh.face_length[bnd]], axis=1)
    bnd_sum = (sv * cf.boundary_values[:, None]).sum(axis=0)
    assert np.allclose(cell_sum, bnd_sum, atol=1e-12)


def test_nearest_interpolation_does_not_converge():
    # snapping face values to the nearer cell is inconsistent: order < 0.3
    field = F.tanh_product()
    spec = SchemeSpec("iTG(0)-nearest", "itg", q=0, interpolation="nearest")
    errs = []
    for level in (3, 4, 5):
        mesh = gen_perturbed(level, seed=9)
        errs.append(grad_errors(compute(mesh, field, spec), field, mesh).mean())
    order = np.log2(errs[-2] / errs[-1])
    assert order < 0.3


def test_ls_minus_one_harc_underestimation_factor():
    # on high-aspect annular cells the symmetric circumferential sag makes
    # unweighted LS see a diagonal system whose radial entry is gamma^2+1
    # times too large: the radial gradient comes out as g / (gamma^2 + 1)
    level = 4
    mesh = gen_harc(level)
    gamma = 1000.0 * 0.256 / 2 ** level / 2.0
    field = F.radial_tanh()
    res = compute(mesh, field, CATALOG["LS(-1)"])
    P = mesh.cell_centroid
    gx, gy = F.exact_gradient(field, P[:, 0], P[:, 1])
    exact_r = np.hypot(gx, gy)
    got_r = (total(res)[:, 0] * P[:, 0] + total(res)[:, 1] * P[:, 1]) \
        / np.hypot(P[:, 0], P[:, 1])
    # interior cells away from all boundaries
    n = 2 ** (level + 1)
    mask = np.ones(mesh.n_cells, dtype=bool).reshape(n, n)
    mask[:2] = mask[-2:] = False
    mask[:, :2] = mask[:, -2:] = False
    ratio = (exact_r / got_r)[mask.ravel()]
    assert np.median(ratio) == pytest.approx(gamma ** 2 + 1, rel=5e-3)


def test_boundary_exclusion_flags_cells():
    mesh = gen_cartesian(2)
    field = F.tanh_product()
    spec = SchemeSpec("LS(1)x", "ls", q=1, boundary=BOUNDARY_EXCLUDE)
    res = compute(mesh, field, spec)
    t = cellface_table(mesh)
    has_bnd = np.zeros(mesh.n_cells, dtype=bool)
    has_bnd[t.cell[t.is_bnd]] = True
    assert np.all(res.flags[has_bnd] == FLAG_EXCLUDED)
    assert np.all(res.flags[~has_bnd] == FLAG_OK)


def test_gg_rejects_boundary_exclusion():
    mesh = gen_cartesian(1)
    spec = SchemeSpec("GGx", "gg", boundary=BOUNDARY_EXCLUDE)
    with pytest.raises(ConfigConflict):
        compute(mesh, F.tanh_product(), spec)


def test_catalog_has_fifteen_schemes():
    names = [s.name for s in scheme_catalog()]
    assert len(names) == 15
    assert len(set(names)) == 15
    for expected in ("GG", "GG+iTG(0)", "GG+LS(1)", "LS(-1)", "LS(1)",
                     "LS(2)", "LSA(0)", "LSA(1)", "LSA(2)", "TG(0)",
                     "TG(1)", "TG(2)", "iTG(0)", "iTG(1)", "iTG(2)"):
        assert expected in names


def test_scheme_by_name_case_insensitive():
    assert scheme_by_name("ls(1)").name == "LS(1)"
    assert scheme_by_name("GG+ITG(0)").name == "GG+iTG(0)"
    with pytest.raises(ValueError):
        scheme_by_name("LS(7)")


def test_extended_tracks_double_on_benign_grid():
    mesh = gen_smooth_mapped(2)
    field = F.tanh_product()
    for name in ("LS(1)", "GG", "TG(2)"):
        a = compute(mesh, field, CATALOG[name], PrecisionMode.DOUBLE)
        b = compute(mesh, field, CATALOG[name], PrecisionMode.EXTENDED)
        assert np.abs(total(a) - total(b)).max() < 1e-12


def test_gg_corrected_exact_on_linear_perturbed():
    mesh = gen_perturbed(3, seed=4)
    field = F.linear(2.0, -1.0, 0.5)
    for name in ("GG+iTG(0)", "GG+LS(1)"):
        res = compute(mesh, field, CATALOG[name])
        assert grad_errors(res, field, mesh).max() < 1e-12
