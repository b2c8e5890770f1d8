"""Vectorized numpy backend.

The CSR entry arrays are scattered into zero-padded (n_cells, max_faces)
matrices and accumulated sequentially along the face axis, reproducing the
numba backend's per-cell accumulation order exactly; padded entries add an
exact zero, so the two backends agree bit for bit.
"""

from __future__ import annotations

import numpy as np

from .. import dd

FLAG_OK = 0
FLAG_SINGULAR = 1
FLAG_INSUFFICIENT = 3


def _pad(ptr, arrs):
    nc = len(ptr) - 1
    counts = np.diff(ptr)
    maxf = int(counts.max()) if nc else 0
    mask = np.arange(maxf)[None, :] < counts[:, None]
    out = []
    for a in arrs:
        p = np.zeros((nc, maxf))
        p[mask] = a
        out.append(p)
    return out, maxf


def _cond2(m00, m01, m10, m11, det):
    # plain sqrt-of-squares instead of hypot so the numba backend can
    # reproduce the exact same float sequence
    t = m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11
    da = m00 * m00 + m10 * m10 - m01 * m01 - m11 * m11
    db = 2.0 * (m00 * m01 + m10 * m11)
    disc = np.sqrt(da * da + db * db)
    smax = np.sqrt(np.maximum(0.0, (t + disc) / 2.0))
    smin = np.where(smax > 0.0, np.abs(det) / np.where(smax > 0.0, smax, 1.0), 0.0)
    return np.where(smin > 0.0, smax / np.where(smin > 0.0, smin, 1.0), np.inf)


def framework_double(ptr, vx, vy, rx, ry, dphi, nused, eps_sing):
    nc = len(ptr) - 1
    (VX, VY, RX, RY, DP), maxf = _pad(ptr, (vx, vy, rx, ry, dphi))
    m00 = np.zeros(nc); m01 = np.zeros(nc)
    m10 = np.zeros(nc); m11 = np.zeros(nc)
    bx = np.zeros(nc); by = np.zeros(nc)
    for k in range(maxf):
        m00 += VX[:, k] * RX[:, k]
        m01 += VX[:, k] * RY[:, k]
        m10 += VY[:, k] * RX[:, k]
        m11 += VY[:, k] * RY[:, k]
        bx += VX[:, k] * DP[:, k]
        by += VY[:, k] * DP[:, k]
    det = m00 * m11 - m01 * m10
    r1 = np.sqrt(m00 * m00 + m01 * m01)
    r2 = np.sqrt(m10 * m10 + m11 * m11)
    cond = _cond2(m00, m01, m10, m11, det)
    flags = np.zeros(nc, dtype=np.int64)
    flags[np.abs(det) <= eps_sing * r1 * r2] = FLAG_SINGULAR
    flags[nused < 2] = FLAG_INSUFFICIENT
    ok = flags == 0
    sd = np.where(ok, det, 1.0)
    grad = np.zeros((nc, 2))
    grad[:, 0] = np.where(ok, (m11 * bx - m01 * by) / sd, 0.0)
    grad[:, 1] = np.where(ok, (m00 * by - m10 * bx) / sd, 0.0)
    return grad, flags, cond


def framework_dd(ptr, vxh, vxl, vyh, vyl, rxh, rxl, ryh, ryl, dph, dpl,
                 nused, eps_sing):
    nc = len(ptr) - 1
    padded, maxf = _pad(ptr, (vxh, vxl, vyh, vyl, rxh, rxl, ryh, ryl, dph, dpl))
    VXH, VXL, VYH, VYL, RXH, RXL, RYH, RYL, DPH, DPL = padded
    z = np.zeros(nc)
    m00 = (z.copy(), z.copy()); m01 = (z.copy(), z.copy())
    m10 = (z.copy(), z.copy()); m11 = (z.copy(), z.copy())
    bx = (z.copy(), z.copy()); by = (z.copy(), z.copy())
    for k in range(maxf):
        vxk = (VXH[:, k], VXL[:, k]); vyk = (VYH[:, k], VYL[:, k])
        rxk = (RXH[:, k], RXL[:, k]); ryk = (RYH[:, k], RYL[:, k])
        dpk = (DPH[:, k], DPL[:, k])
        m00 = dd.add(m00, dd.mul(vxk, rxk))
        m01 = dd.add(m01, dd.mul(vxk, ryk))
        m10 = dd.add(m10, dd.mul(vyk, rxk))
        m11 = dd.add(m11, dd.mul(vyk, ryk))
        bx = dd.add(bx, dd.mul(vxk, dpk))
        by = dd.add(by, dd.mul(vyk, dpk))
    det = dd.sub(dd.mul(m00, m11), dd.mul(m01, m10))
    r1 = np.sqrt(m00[0] * m00[0] + m01[0] * m01[0])
    r2 = np.sqrt(m10[0] * m10[0] + m11[0] * m11[0])
    cond = _cond2(m00[0], m01[0], m10[0], m11[0], det[0])
    flags = np.zeros(nc, dtype=np.int64)
    flags[np.abs(det[0]) <= eps_sing * r1 * r2] = FLAG_SINGULAR
    flags[nused < 2] = FLAG_INSUFFICIENT
    ok = flags == 0
    sd = (np.where(ok, det[0], 1.0), np.where(ok, det[1], 0.0))
    gx = dd.div(dd.sub(dd.mul(m11, bx), dd.mul(m01, by)), sd)
    gy = dd.div(dd.sub(dd.mul(m00, by), dd.mul(m10, bx)), sd)
    grad_hi = np.zeros((nc, 2))
    grad_lo = np.zeros((nc, 2))
    grad_hi[:, 0] = np.where(ok, gx[0], 0.0)
    grad_lo[:, 0] = np.where(ok, gx[1], 0.0)
    grad_hi[:, 1] = np.where(ok, gy[0], 0.0)
    grad_lo[:, 1] = np.where(ok, gy[1], 0.0)
    return grad_hi, grad_lo, flags, cond


def green_gauss_double(ptr, svx, svy, phif, omega):
    nc = len(ptr) - 1
    (SX, SY, PF), maxf = _pad(ptr, (svx, svy, phif))
    gx = np.zeros(nc)
    gy = np.zeros(nc)
    for k in range(maxf):
        gx += SX[:, k] * PF[:, k]
        gy += SY[:, k] * PF[:, k]
    return np.column_stack([gx / omega, gy / omega])


def green_gauss_dd(ptr, svxh, svxl, svyh, svyl, pfh, pfl, omh, oml):
    nc = len(ptr) - 1
    padded, maxf = _pad(ptr, (svxh, svxl, svyh, svyl, pfh, pfl))
    SXH, SXL, SYH, SYL, PFH, PFL = padded
    z = np.zeros(nc)
    gx = (z.copy(), z.copy())
    gy = (z.copy(), z.copy())
    for k in range(maxf):
        pfk = (PFH[:, k], PFL[:, k])
        gx = dd.add(gx, dd.mul((SXH[:, k], SXL[:, k]), pfk))
        gy = dd.add(gy, dd.mul((SYH[:, k], SYL[:, k]), pfk))
    om = (omh, oml)
    gx = dd.div(gx, om)
    gy = dd.div(gy, om)
    return (np.column_stack([gx[0], gy[0]]), np.column_stack([gx[1], gy[1]]))
