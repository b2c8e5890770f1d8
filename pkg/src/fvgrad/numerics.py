"""2x2 linear solves and conditioning estimates in two precision modes."""

from __future__ import annotations

import enum
import math

import numpy as np

from . import dd
from .errors import SingularSystem


class PrecisionMode(enum.Enum):
    DOUBLE = "double"
    EXTENDED = "extended"


# Relative singularity tolerances (|det| vs product of row norms), chosen
# scale-invariant so the same mesh at any size triggers identically.
EPS_SING = {
    PrecisionMode.DOUBLE: 1e-13,
    PrecisionMode.EXTENDED: 1e-28,
}


def det2(A: np.ndarray) -> float:
    return A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]


def _check_singular(A, det, eps):
    r1 = math.hypot(A[0, 0], A[0, 1])
    r2 = math.hypot(A[1, 0], A[1, 1])
    if abs(det) <= eps * r1 * r2:
        raise SingularSystem(f"|det| = {abs(det):.3e} below tolerance {eps:.1e} * {r1 * r2:.3e}")


def solve2(A, b, precision: PrecisionMode = PrecisionMode.DOUBLE, eps_sing: float | None = None):
    """Solve A x = b for a 2x2 system by adjugate/determinant.

    In DOUBLE mode returns a float64 array of shape (2,).  In EXTENDED mode
    the inputs are promoted to double-double, the solve is carried out in
    that precision and the result is returned as a (2, 2) array of
    (hi, lo) pairs: ``[[x_hi, x_lo], [y_hi, y_lo]]``.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise ValueError("solve2 requires finite inputs")
    eps = EPS_SING[precision] if eps_sing is None else eps_sing
    if precision is PrecisionMode.DOUBLE:
        det = det2(A)
        _check_singular(A, det, eps)
        x = (A[1, 1] * b[0] - A[0, 1] * b[1]) / det
        y = (A[0, 0] * b[1] - A[1, 0] * b[0]) / det
        return np.array([x, y])
    a00, a01, a10, a11 = (dd.from_double(A[i, j]) for i in (0, 1) for j in (0, 1))
    b0, b1 = dd.from_double(b[0]), dd.from_double(b[1])
    det = dd.sub(dd.mul(a00, a11), dd.mul(a01, a10))
    _check_singular(A, float(det[0]), eps)
    x = dd.div(dd.sub(dd.mul(a11, b0), dd.mul(a01, b1)), det)
    y = dd.div(dd.sub(dd.mul(a00, b1), dd.mul(a10, b0)), det)
    return np.array([[float(x[0]), float(x[1])], [float(y[0]), float(y[1])]])


def singular_values2(A) -> tuple[float, float]:
    """Closed-form singular values (max, min) of a 2x2 matrix."""
    a, b = float(A[0, 0]), float(A[0, 1])
    c, d = float(A[1, 0]), float(A[1, 1])
    t = a * a + b * b + c * c + d * d
    # discriminant of the eigenvalues of A^T A
    disc = math.hypot(a * a + c * c - b * b - d * d, 2.0 * (a * b + c * d))
    smax = math.sqrt(max(0.0, (t + disc) / 2.0))
    smin = math.sqrt(max(0.0, (t - disc) / 2.0))
    # recompute smin from the determinant when cancellation dominates
    det = abs(a * d - b * c)
    if smax > 0.0:
        smin = det / smax
    return smax, smin


def cond2(A) -> float:
    """2-norm condition number; +inf when the matrix is singular."""
    smax, smin = singular_values2(np.asarray(A, dtype=np.float64))
    if smin == 0.0:
        return math.inf
    return smax / smin
