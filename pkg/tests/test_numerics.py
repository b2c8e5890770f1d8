"""2x2 solves, closed-form singular values, condition numbers."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fvgrad.errors import SingularSystem
from fvgrad.numerics import (EPS_SING, PrecisionMode, cond2, det2,
                             singular_values2, solve2)

entry = st.floats(min_value=-1e6, max_value=1e6,
                  allow_nan=False, allow_infinity=False)


def test_det2_matches_numpy():
    rng = np.random.default_rng(3)
    for _ in range(50):
        M = rng.uniform(-10, 10, (2, 2))
        assert det2(M) == pytest.approx(np.linalg.det(M), rel=1e-12)


def test_solve2_matches_numpy():
    rng = np.random.default_rng(4)
    for _ in range(100):
        M = rng.uniform(-10, 10, (2, 2))
        if abs(det2(M)) < 1e-3:
            continue
        b = rng.uniform(-10, 10, 2)
        x = solve2(M, b, PrecisionMode.DOUBLE)
        assert np.allclose(x, np.linalg.solve(M, b), rtol=1e-10)


def test_solve2_extended_returns_pairs():
    M = np.array([[2.0, 1.0], [1.0, 3.0]])
    b = np.array([1.0, 2.0])
    x = solve2(M, b, PrecisionMode.EXTENDED)
    assert x.shape == (2, 2)
    ref = np.linalg.solve(M, b)
    assert np.allclose(x[:, 0] + x[:, 1], ref, rtol=1e-14)


def test_solve2_raises_on_singular():
    M = np.array([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(SingularSystem):
        solve2(M, np.array([1.0, 1.0]), PrecisionMode.DOUBLE)


def test_singular_detection_is_relative():
    # a well-conditioned matrix scaled down must not be flagged
    M = 1e-20 * np.array([[1.0, 0.0], [0.0, 1.0]])
    x = solve2(M, np.array([1e-20, 2e-20]), PrecisionMode.DOUBLE)
    assert np.allclose(x, [1.0, 2.0])


@given(entry, entry, entry, entry)
@settings(max_examples=200, deadline=None)
def test_singular_values_match_numpy(a, b, c, d):
    M = np.array([[a, b], [c, d]])
    smax, smin = singular_values2(M)
    ref = np.linalg.svd(M, compute_uv=False)
    assert smax == pytest.approx(ref[0], rel=1e-10, abs=1e-12)
    assert smin == pytest.approx(ref[1], rel=1e-8, abs=max(1e-12, 1e-14 * ref[0]))


def test_cond2_identity():
    assert cond2(np.eye(2)) == pytest.approx(1.0)


def test_cond2_known_ratio():
    M = np.diag([1000.0, 0.5])
    assert cond2(M) == pytest.approx(2000.0, rel=1e-12)


def test_cond2_singular_is_inf():
    assert cond2(np.array([[1.0, 2.0], [2.0, 4.0]])) == np.inf


def test_eps_sing_per_mode():
    assert EPS_SING[PrecisionMode.DOUBLE] == 1e-13
    assert EPS_SING[PrecisionMode.EXTENDED] == 1e-28
