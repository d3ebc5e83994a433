"""Randomized properties over small discrete kernels."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fredholm_minors.kernel import PointSet, discrete_kernel
from fredholm_minors.series import fredholm_determinant, minor_series

entries = st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False)


@st.composite
def kernel_and_points(draw, n_max=3):
    m = draw(st.integers(1, 5))
    N = draw(arrays(np.float64, (m, m), elements=entries))
    n = draw(st.integers(0, min(n_max, m)))
    xs = draw(st.lists(st.integers(0, m - 1), min_size=n, max_size=n))
    ys = draw(st.lists(st.integers(0, m - 1), min_size=n, max_size=n))
    lam = draw(st.floats(-1.5, 1.5, allow_nan=False))
    return discrete_kernel(N), PointSet(xs, ys), lam


@settings(max_examples=60, deadline=None)
@given(kernel_and_points())
def test_row_swap_flips_sign(data):
    K, pts, lam = data
    if pts.n < 2:
        return
    swapped = PointSet((pts.xs[1], pts.xs[0]) + pts.xs[2:], pts.ys)
    a = minor_series(K, pts, lam).value
    assert abs(minor_series(K, swapped, lam).value + a) <= 1e-12 * max(1.0, abs(a))


@settings(max_examples=60, deadline=None)
@given(kernel_and_points())
def test_transpose_swaps_rows_and_columns(data):
    K, pts, lam = data
    Kt = discrete_kernel(K.values.T)
    a = minor_series(K, pts, lam).value
    b = minor_series(Kt, PointSet(pts.ys, pts.xs), lam).value
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


@settings(max_examples=60, deadline=None)
@given(kernel_and_points(n_max=0))
def test_determinant_matches_numpy(data):
    K, _, lam = data
    ref = np.linalg.det(np.eye(K.m) - lam * K.values)
    assert abs(minor_series(K, None, lam).value - ref) <= 1e-11 * max(1.0, abs(ref))
    assert abs(fredholm_determinant(K, lam) - ref) <= 1e-11 * max(1.0, abs(ref))


@settings(max_examples=40, deadline=None)
@given(kernel_and_points(), st.floats(0.1, 3.0))
def test_scaling_kernel_rescales_lambda(data, s):
    # D_n[sN](lam) = s^n D_n[N](s lam)
    K, pts, lam = data
    Ks = discrete_kernel(s * K.values)
    a = minor_series(Ks, pts, lam).value
    b = s**pts.n * minor_series(K, pts, s * lam).value
    assert abs(a - b) <= 1e-10 * max(1.0, abs(a), abs(b))
