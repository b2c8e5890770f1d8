"""Compiled scalar-loop backend.

Each kernel walks the CSR cell-face structure with njit'd loops.  The
double-double helper functions below duplicate the algorithms of the dd
module as scalars (numba cannot jit the array versions); a dedicated test
asserts the two stay bit-identical.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_SPLITTER = 134217729.0


@njit(cache=True)
def _two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


@njit(cache=True)
def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


@njit(cache=True)
def _two_prod(a, b):
    p = a * b
    t = _SPLITTER * a
    ah = t - (t - a)
    al = a - ah
    t = _SPLITTER * b
    bh = t - (t - b)
    bl = b - bh
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


@njit(cache=True)
def _add22(xh, xl, yh, yl):
    s, e = _two_sum(xh, yh)
    t, f = _two_sum(xl, yl)
    e = e + t
    s, e = _quick_two_sum(s, e)
    e = e + f
    return _quick_two_sum(s, e)


@njit(cache=True)
def _sub22(xh, xl, yh, yl):
    return _add22(xh, xl, -yh, -yl)


@njit(cache=True)
def _mul22(xh, xl, yh, yl):
    p, e = _two_prod(xh, yh)
    e = e + (xh * yl + xl * yh)
    return _quick_two_sum(p, e)


@njit(cache=True)
def _mul_d22(xh, xl, d):
    p, e = _two_prod(xh, d)
    e = e + xl * d
    return _quick_two_sum(p, e)


@njit(cache=True)
def _div22(xh, xl, yh, yl):
    q1 = xh / yh
    th, tl = _mul_d22(yh, yl, q1)
    rh, rl = _sub22(xh, xl, th, tl)
    q2 = rh / yh
    th, tl = _mul_d22(yh, yl, q2)
    rh, rl = _sub22(rh, rl, th, tl)
    q3 = rh / yh
    s, e = _quick_two_sum(q1, q2)
    return _add22(s, e, q3, 0.0)


@njit(cache=True)
def _cond2_scalar(m00, m01, m10, m11, det):
    t = m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11
    da = m00 * m00 + m10 * m10 - m01 * m01 - m11 * m11
    db = 2.0 * (m00 * m01 + m10 * m11)
    disc = np.sqrt(da * da + db * db)
    smax = np.sqrt(max(0.0, (t + disc) / 2.0))
    if smax > 0.0:
        smin = abs(det) / smax
    else:
        smin = 0.0
    if smin > 0.0:
        return smax / smin
    return np.inf


@njit(cache=True)
def framework_double(ptr, vx, vy, rx, ry, dphi, nused, eps_sing):
    nc = len(ptr) - 1
    grad = np.zeros((nc, 2))
    flags = np.zeros(nc, dtype=np.int64)
    cond = np.empty(nc)
    for c in range(nc):
        m00 = 0.0; m01 = 0.0; m10 = 0.0; m11 = 0.0
        bx = 0.0; by = 0.0
        for k in range(ptr[c], ptr[c + 1]):
            m00 += vx[k] * rx[k]
            m01 += vx[k] * ry[k]
            m10 += vy[k] * rx[k]
            m11 += vy[k] * ry[k]
            bx += vx[k] * dphi[k]
            by += vy[k] * dphi[k]
        det = m00 * m11 - m01 * m10
        r1 = np.sqrt(m00 * m00 + m01 * m01)
        r2 = np.sqrt(m10 * m10 + m11 * m11)
        cond[c] = _cond2_scalar(m00, m01, m10, m11, det)
        if abs(det) <= eps_sing * r1 * r2:
            flags[c] = 1
        if nused[c] < 2:
            flags[c] = 3
        if flags[c] == 0:
            grad[c, 0] = (m11 * bx - m01 * by) / det
            grad[c, 1] = (m00 * by - m10 * bx) / det
    return grad, flags, cond


@njit(cache=True)
def framework_dd(ptr, vxh, vxl, vyh, vyl, rxh, rxl, ryh, ryl, dph, dpl,
                 nused, eps_sing):
    nc = len(ptr) - 1
    grad_hi = np.zeros((nc, 2))
    grad_lo = np.zeros((nc, 2))
    flags = np.zeros(nc, dtype=np.int64)
    cond = np.empty(nc)
    for c in range(nc):
        m00h = 0.0; m00l = 0.0; m01h = 0.0; m01l = 0.0
        m10h = 0.0; m10l = 0.0; m11h = 0.0; m11l = 0.0
        bxh = 0.0; bxl = 0.0; byh = 0.0; byl = 0.0
        for k in range(ptr[c], ptr[c + 1]):
            th, tl = _mul22(vxh[k], vxl[k], rxh[k], rxl[k])
            m00h, m00l = _add22(m00h, m00l, th, tl)
            th, tl = _mul22(vxh[k], vxl[k], ryh[k], ryl[k])
            m01h, m01l = _add22(m01h, m01l, th, tl)
            th, tl = _mul22(vyh[k], vyl[k], rxh[k], rxl[k])
            m10h, m10l = _add22(m10h, m10l, th, tl)
            th, tl = _mul22(vyh[k], vyl[k], ryh[k], ryl[k])
            m11h, m11l = _add22(m11h, m11l, th, tl)
            th, tl = _mul22(vxh[k], vxl[k], dph[k], dpl[k])
            bxh, bxl = _add22(bxh, bxl, th, tl)
            th, tl = _mul22(vyh[k], vyl[k], dph[k], dpl[k])
            byh, byl = _add22(byh, byl, th, tl)
        ph, pl = _mul22(m00h, m00l, m11h, m11l)
        qh, ql = _mul22(m01h, m01l, m10h, m10l)
        deth, detl = _sub22(ph, pl, qh, ql)
        r1 = np.sqrt(m00h * m00h + m01h * m01h)
        r2 = np.sqrt(m10h * m10h + m11h * m11h)
        cond[c] = _cond2_scalar(m00h, m01h, m10h, m11h, deth)
        if abs(deth) <= eps_sing * r1 * r2:
            flags[c] = 1
        if nused[c] < 2:
            flags[c] = 3
        if flags[c] == 0:
            ph, pl = _mul22(m11h, m11l, bxh, bxl)
            qh, ql = _mul22(m01h, m01l, byh, byl)
            nh, nl = _sub22(ph, pl, qh, ql)
            gh, gl = _div22(nh, nl, deth, detl)
            grad_hi[c, 0] = gh
            grad_lo[c, 0] = gl
            ph, pl = _mul22(m00h, m00l, byh, byl)
            qh, ql = _mul22(m10h, m10l, bxh, bxl)
            nh, nl = _sub22(ph, pl, qh, ql)
            gh, gl = _div22(nh, nl, deth, detl)
            grad_hi[c, 1] = gh
            grad_lo[c, 1] = gl
    return grad_hi, grad_lo, flags, cond


@njit(cache=True)
def green_gauss_double(ptr, svx, svy, phif, omega):
    nc = len(ptr) - 1
    grad = np.empty((nc, 2))
    for c in range(nc):
        gx = 0.0
        gy = 0.0
        for k in range(ptr[c], ptr[c + 1]):
            gx += svx[k] * phif[k]
            gy += svy[k] * phif[k]
        grad[c, 0] = gx / omega[c]
        grad[c, 1] = gy / omega[c]
    return grad


@njit(cache=True)
def green_gauss_dd(ptr, svxh, svxl, svyh, svyl, pfh, pfl, omh, oml):
    nc = len(ptr) - 1
    grad_hi = np.empty((nc, 2))
    grad_lo = np.empty((nc, 2))
    for c in range(nc):
        gxh = 0.0; gxl = 0.0; gyh = 0.0; gyl = 0.0
        for k in range(ptr[c], ptr[c + 1]):
            th, tl = _mul22(svxh[k], svxl[k], pfh[k], pfl[k])
            gxh, gxl = _add22(gxh, gxl, th, tl)
            th, tl = _mul22(svyh[k], svyl[k], pfh[k], pfl[k])
            gyh, gyl = _add22(gyh, gyl, th, tl)
        gxh, gxl = _div22(gxh, gxl, omh[c], oml[c])
        gyh, gyl = _div22(gyh, gyl, omh[c], oml[c])
        grad_hi[c, 0] = gxh
        grad_lo[c, 0] = gxl
        grad_hi[c, 1] = gyh
        grad_lo[c, 1] = gyl
    return grad_hi, grad_lo
