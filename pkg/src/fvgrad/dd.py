"""Compensated double-double arithmetic on numpy arrays.

A value is an unevaluated sum hi + lo of two binary64 numbers with
|lo| <= ulp(hi)/2, giving an effective significand of ~106 bits.  All
operations work elementwise on scalars or numpy arrays of matching shape
and use a fixed evaluation order, so results are reproducible across
builds and backends.

The elementary functions (exp, tanh, sin, cos, atan2) cover the argument
ranges the analytic test fields need; sin/cos reduce modulo pi/2 but do
not perform large-argument reduction.
"""

from __future__ import annotations

import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1

# (hi, lo) renditions of transcendental constants.
LN2 = (0.6931471805599453, 2.3190468138462996e-17)
PI = (3.141592653589793, 1.2246467991473532e-16)
PI_2 = (1.5707963267948966, 6.123233995736766e-17)

EPS = 2.0 ** -104  # working precision of a double-double


def two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def quick_two_sum(a, b):
    """two_sum assuming |a| >= |b| (or a == 0)."""
    s = a + b
    return s, b - (s - a)


def _split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def from_double(a):
    return np.asarray(a, dtype=np.float64), np.zeros_like(np.asarray(a, dtype=np.float64))


def to_double(x):
    """Round to nearest binary64 (the hi part of a normalized pair)."""
    return x[0]


def add(x, y):
    s, e = two_sum(x[0], y[0])
    t, f = two_sum(x[1], y[1])
    e = e + t
    s, e = quick_two_sum(s, e)
    e = e + f
    return quick_two_sum(s, e)


def neg(x):
    return -x[0], -x[1]


def sub(x, y):
    return add(x, neg(y))


def add_d(x, d):
    s, e = two_sum(x[0], d)
    e = e + x[1]
    return quick_two_sum(s, e)


def mul(x, y):
    p, e = two_prod(x[0], y[0])
    e = e + (x[0] * y[1] + x[1] * y[0])
    return quick_two_sum(p, e)


def mul_d(x, d):
    p, e = two_prod(x[0], d)
    e = e + x[1] * d
    return quick_two_sum(p, e)


def mul_pwr2(x, d):
    """Multiply by an exact power of two."""
    return x[0] * d, x[1] * d


def div(x, y):
    q1 = x[0] / y[0]
    r = sub(x, mul_d(y, q1))
    q2 = r[0] / y[0]
    r = sub(r, mul_d(y, q2))
    q3 = r[0] / y[0]
    s, e = quick_two_sum(q1, q2)
    return add((s, e), (q3, np.zeros_like(q3)))


def sqrt(x):
    """Elementwise square root; zero maps to zero."""
    hi = np.asarray(x[0], dtype=np.float64)
    y0 = np.sqrt(hi)
    p, e = two_prod(y0, y0)
    d = sub(x, (p, e))
    safe = np.where(y0 == 0.0, 1.0, y0)
    corr = d[0] / (2.0 * safe)
    corr = np.where(y0 == 0.0, 0.0, corr)
    return quick_two_sum(y0, corr)


def sqr(x):
    p, e = two_prod(x[0], x[0])
    e = e + 2.0 * (x[0] * x[1])
    return quick_two_sum(p, e)


def npow(x, n: int):
    """Integer power by repeated multiplication (small |n| only)."""
    if n == 0:
        return np.ones_like(np.asarray(x[0])), np.zeros_like(np.asarray(x[0]))
    r = x
    for _ in range(abs(n) - 1):
        r = mul(r, x)
    if n < 0:
        one = from_double(np.ones_like(np.asarray(x[0])))
        r = div(one, r)
    return r


def norm2(x, y):
    """sqrt(x^2 + y^2) of two double-double components."""
    return sqrt(add(sqr(x), sqr(y)))


# ---------------------------------------------------------------------------
# Elementary functions (vectorized).

def _inv_factorials(n):
    out = [(1.0, 0.0)]
    f = (1.0, 0.0)
    for k in range(1, n + 1):
        f = div(f, from_double(float(k)))
        out.append((float(f[0]), float(f[1])))
    return out


# 1/k! to double-double accuracy; double constants would cap the series at
# ~1e-19 relative.
_INV_FACT = _inv_factorials(30)


def exp(x):
    hi = np.asarray(x[0], dtype=np.float64)
    lo = np.asarray(x[1], dtype=np.float64)
    m = np.floor(hi / LN2[0] + 0.5)
    r = sub((hi, lo), mul_d(LN2, m))
    r = mul_pwr2(r, 1.0 / 512.0)
    # Taylor series of exp(r) - 1 for |r| < ln2/1024.
    p = sqr(r)
    s = add(r, mul_pwr2(p, 0.5))
    p = mul(p, r)
    for k in range(3, 14):
        s = add(s, mul(p, _INV_FACT[k]))
        p = mul(p, r)
    # Undo the 1/512 scaling: (1+s) <- (1+s)^2, nine times.
    for _ in range(9):
        s = add(mul_pwr2(s, 2.0), sqr(s))
    s = add_d(s, 1.0)
    mi = m.astype(np.int64)
    out = (np.ldexp(s[0], mi), np.ldexp(s[1], mi))
    under = hi < -709.0
    over = hi > 709.0
    outh = np.where(under, 0.0, np.where(over, np.inf, out[0]))
    outl = np.where(under | over, 0.0, out[1])
    return outh, outl


def _sinh_taylor(x):
    """sinh by Taylor series; accurate for |x| <= ~0.1."""
    x2 = sqr(x)
    p = mul(x, x2)
    s = add(x, mul(p, _INV_FACT[3]))
    for k in range(2, 10):
        p = mul(p, x2)
        s = add(s, mul(p, _INV_FACT[2 * k + 1]))
    return s


def tanh(x):
    hi = np.asarray(x[0], dtype=np.float64)
    lo = np.asarray(x[1], dtype=np.float64)
    ax = (np.abs(hi), np.where(hi < 0, -lo, lo))
    sign = np.where(hi < 0, -1.0, 1.0)
    # Large |x|: tanh = 1 - 2/(e^{2x}+1); small |x|: sinh/cosh via Taylor.
    e2 = exp(mul_pwr2(ax, 2.0))
    big = div(from_double(np.full_like(hi, 2.0)), add_d(e2, 1.0))
    big = add_d(neg(big), 1.0)
    sh = _sinh_taylor(ax)
    ch = sqrt(add_d(sqr(sh), 1.0))
    small = div(sh, ch)
    use_small = np.abs(hi) <= 0.05
    th = np.where(use_small, small[0], big[0])
    tl = np.where(use_small, small[1], big[1])
    return sign * th, sign * tl


def _sin_taylor(x):
    """sin by Taylor series; accurate for |x| <= pi/4."""
    x2 = sqr(x)
    p = mul(x, x2)
    s = add(x, neg(mul(p, _INV_FACT[3])))
    sgn = 1.0
    for k in range(2, 13):
        p = mul(p, x2)
        c = _INV_FACT[2 * k + 1]
        s = add(s, mul(p, (sgn * c[0], sgn * c[1])))
        sgn = -sgn
    return s


def _cos_taylor(x):
    x2 = sqr(x)
    p = x2
    s = add_d(mul_pwr2(x2, -0.5), 1.0)
    sgn = 1.0
    for k in range(2, 13):
        p = mul(p, x2)
        c = _INV_FACT[2 * k]
        s = add(s, mul(p, (sgn * c[0], sgn * c[1])))
        sgn = -sgn
    return s


def sincos(x):
    """(sin x, cos x) after reduction modulo pi/2.  No large-argument
    reduction: |x| should be below ~1e8."""
    hi = np.asarray(x[0], dtype=np.float64)
    n = np.floor(hi / PI_2[0] + 0.5)
    w = sub(x, mul_d(PI_2, n))
    sw = _sin_taylor(w)
    cw = _cos_taylor(w)
    quad = np.asarray(n - 4.0 * np.floor(n / 4.0), dtype=np.int64)
    sin_h = np.select([quad == 0, quad == 1, quad == 2], [sw[0], cw[0], -sw[0]], -cw[0])
    sin_l = np.select([quad == 0, quad == 1, quad == 2], [sw[1], cw[1], -sw[1]], -cw[1])
    cos_h = np.select([quad == 0, quad == 1, quad == 2], [cw[0], -sw[0], -cw[0]], sw[0])
    cos_l = np.select([quad == 0, quad == 1, quad == 2], [cw[1], -sw[1], -cw[1]], sw[1])
    return (sin_h, sin_l), (cos_h, cos_l)


def sin(x):
    return sincos(x)[0]


def cos(x):
    return sincos(x)[1]


def atan2(y, x):
    """Newton refinement of the binary64 atan2 using sincos."""
    z = from_double(np.arctan2(np.asarray(y[0]), np.asarray(x[0])))
    for _ in range(2):
        s, c = sincos(z)
        num = sub(mul(y, c), mul(x, s))
        den = add(mul(x, c), mul(y, s))
        z = add(z, div(num, den))
    return z
