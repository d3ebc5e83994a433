import numpy as np
import pytest

from conftest import gl_kernel, inverse_resolvent, random_kernel
from fredholm_minors.errors import SingularAtLambda
from fredholm_minors.kernel import PointSet, discrete_kernel
from fredholm_minors.minors import (
    column_expansion_residual,
    minor_determinantal,
    normalized_minor,
    recursion_residual_column,
    recursion_residual_row,
    row_expansion_residual,
    two_point_identity_residual,
)
from fredholm_minors.series import minor_series


def test_normalized_minor_is_resolvent_determinant(rng):
    K = random_kernel(rng, 5)
    lam = -0.6
    R = inverse_resolvent(K, lam)
    pts = PointSet((0, 3), (4, 1))
    assert normalized_minor(K, pts, lam).value == pytest.approx(np.linalg.det(R[np.ix_([0, 3], [4, 1])]), rel=1e-12)


def test_determinantal_route_matches_series(rng):
    for _ in range(10):
        K = random_kernel(rng, 5)
        lam = rng.uniform(-1, 1)
        for n in range(4):
            pts = PointSet(tuple(rng.choice(5, n, replace=False)), tuple(rng.choice(5, n, replace=False)))
            s = minor_series(K, pts, lam).value
            d = minor_determinantal(K, pts, lam).value
            assert abs(s - d) <= 1e-11 * max(1.0, abs(s))


def test_determinantal_route_on_weighted_grid():
    K = gl_kernel("exp-product", 6, c=1.2)
    pts = PointSet((1, 4), (0, 5))
    assert minor_determinantal(K, pts, 0.5).value == pytest.approx(minor_series(K, pts, 0.5).value, rel=1e-12)


def test_determinantal_route_fails_at_zero_of_d():
    K = discrete_kernel(np.diag([2.0, 3.0]))
    pts = PointSet((0,), (0,))
    with pytest.raises(SingularAtLambda):
        minor_determinantal(K, pts, 0.5)
    # the series is entire and stays finite: D(0, 0; 1/2) = 2 (1 - 3/2)
    assert minor_series(K, pts, 0.5).value == pytest.approx(-1.0, abs=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_expansions_all_positions(rng, n):
    K = random_kernel(rng, 5)
    lam = 0.55
    pts = PointSet(tuple(rng.choice(5, n, replace=False)), tuple(rng.choice(5, n, replace=False)))
    for i in range(1, n + 1):
        assert row_expansion_residual(K, pts, lam, i) < 1e-12
        assert column_expansion_residual(K, pts, lam, i) < 1e-12
        assert recursion_residual_column(K, pts, lam, i) < 1e-12
        assert recursion_residual_row(K, pts, lam, i) < 1e-12


def test_expansions_on_weighted_grid():
    K = gl_kernel("exp-product", 5, c=0.6)
    pts = PointSet((0, 2), (3, 1))
    for i in (1, 2):
        assert row_expansion_residual(K, pts, 0.7, i) < 1e-12
        assert column_expansion_residual(K, pts, 0.7, i) < 1e-12


def test_n1_recursion_is_trivial(rng):
    # D * D(x, y) = D(x, y) * D
    K = random_kernel(rng, 4)
    assert recursion_residual_column(K, PointSet((1,), (2,)), 0.3, 1) < 1e-15


def test_two_point_identity(rng):
    K = random_kernel(rng, 5)
    assert two_point_identity_residual(K, 0, 3, 1, 4, 0.8) < 1e-12


def test_position_out_of_range(rng):
    K = random_kernel(rng, 3)
    with pytest.raises(ValueError):
        row_expansion_residual(K, PointSet((0,), (1,)), 0.1, 2)


def test_recursion_requires_nonzero_d():
    K = discrete_kernel(np.diag([2.0, 3.0]))
    with pytest.raises(SingularAtLambda):
        recursion_residual_column(K, PointSet((0,), (1,)), 0.5, 1)
