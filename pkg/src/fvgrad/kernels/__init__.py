"""Hot gradient-assembly kernels with two interchangeable backends.

The numba backend runs compiled scalar loops over the CSR cell-face
structure; the numpy backend runs the same accumulation vectorized over
cells with zero-padded (n_cells, max_faces) arrays.  Both accumulate faces
in identical order, so their results are bit-identical.  Selection is via
the FVGRAD_BACKEND environment variable: "numba", "numpy" or "auto"
(numba when importable, numpy otherwise).

Per-cell flag values returned by the assembly kernels:
  0 OK, 1 singular system, 2 OK with boundary faces excluded,
  3 fewer than two usable faces.
"""

from __future__ import annotations

import os

FLAG_OK = 0
FLAG_SINGULAR = 1
FLAG_EXCLUDED = 2
FLAG_INSUFFICIENT = 3


def backend_name() -> str:
    choice = os.environ.get("FVGRAD_BACKEND", "auto")
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(f"FVGRAD_BACKEND must be auto|numba|numpy, got {choice!r}")
    if choice == "auto":
        try:
            from . import numba_backend  # noqa: F401
            return "numba"
        except ImportError:
            return "numpy"
    return choice


def get_backend(name: str | None = None):
    name = name or backend_name()
    if name == "numba":
        from . import numba_backend as mod
    else:
        from . import numpy_backend as mod
    return mod


def framework_double(ptr, vx, vy, rx, ry, dphi, nused, eps_sing, backend=None):
    """Assemble and solve sum(V R^T) grad = sum(V dphi) per cell (binary64).

    Entries not in use must be zeroed and accounted for in nused.
    Returns (grad (nc, 2), flags, cond).
    """
    return get_backend(backend).framework_double(ptr, vx, vy, rx, ry, dphi,
                                                 nused, eps_sing)


def framework_dd(ptr, vx, vy, rx, ry, dphi, nused, eps_sing, backend=None):
    """Double-double variant; the vector/scalar entry arguments are
    (hi, lo) pairs.  Returns (grad_hi, grad_lo, flags, cond)."""
    mod = get_backend(backend)
    return mod.framework_dd(ptr, vx[0], vx[1], vy[0], vy[1], rx[0], rx[1],
                            ry[0], ry[1], dphi[0], dphi[1], nused, eps_sing)


def green_gauss_double(ptr, svx, svy, phif, omega, backend=None):
    """grad = (1/omega) * sum(S_f s_hat phi_f); returns (nc, 2)."""
    return get_backend(backend).green_gauss_double(ptr, svx, svy, phif, omega)


def green_gauss_dd(ptr, svx, svy, phif, omega, backend=None):
    mod = get_backend(backend)
    return mod.green_gauss_dd(ptr, svx[0], svx[1], svy[0], svy[1],
                              phif[0], phif[1], omega[0], omega[1])
