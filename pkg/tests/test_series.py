import math
from itertools import product

import numpy as np
import pytest

from conftest import gl_kernel, inverse_resolvent, random_kernel
from fredholm_minors.errors import SeriesNotConverged
from fredholm_minors.kernel import GAUSS_LEGENDRE, Domain, KernelSpec, PointSet, discrete_kernel, discretize, make_grid
from fredholm_minors.series import (
    SeriesOptions,
    determinant_coefficients,
    determinant_derivative,
    determinant_series,
    diagonal_trace,
    fredholm_determinant,
    hadamard_check,
    minor_series,
    polynomial_derivative,
    second_series,
    series_coefficients,
    trace_identity_residual,
    tree_sum,
)


def test_scalar_kernel_by_hand():
    # m=1, N=[c]: D = 1 - lam c and D(0, 0) = c
    K = discrete_kernel([[0.7]])
    assert minor_series(K, None, 0.4).value == pytest.approx(1 - 0.4 * 0.7, abs=1e-16)
    assert minor_series(K, PointSet((0,), (0,)), 0.4).value == 0.7


def test_series_equals_numpy_determinant(rng):
    for m in range(1, 7):
        K = random_kernel(rng, m)
        lam = rng.uniform(-2, 2)
        ref = np.linalg.det(np.eye(m) - lam * K.values)
        assert determinant_series(K, lam).value == pytest.approx(ref, rel=1e-12, abs=1e-12)
        assert fredholm_determinant(K, lam) == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_minor_equals_d_times_resolvent_determinant(rng):
    K = random_kernel(rng, 5)
    lam = 0.45
    D = np.linalg.det(np.eye(5) - lam * K.values)
    R = inverse_resolvent(K, lam)
    for xs, ys in [((0,), (3,)), ((1, 4), (0, 2)), ((0, 2, 3), (4, 1, 3))]:
        ref = D * np.linalg.det(R[np.ix_(xs, ys)])
        assert minor_series(K, PointSet(xs, ys), lam).value == pytest.approx(ref, rel=1e-11, abs=1e-13)


def test_ordered_tuple_debug_path_agrees(rng):
    K = random_kernel(rng, 4)
    pts = PointSet((1,), (2,))
    fast = minor_series(K, pts, 0.7).value
    slow = minor_series(K, pts, 0.7, SeriesOptions(ordered=True)).value
    assert fast == pytest.approx(slow, rel=1e-13)


def test_brute_force_ordered_sum_weighted_grid():
    # direct 1/p! sum over all ordered tuples, without the subset shortcut
    K = gl_kernel("exp-product", 4, c=0.8)
    lam = 0.6
    N, w = K.values, K.weights
    total = 0.0
    for p in range(0, 5):
        acc = 0.0
        for S in product(range(4), repeat=p):
            S = list(S)
            acc += np.prod(w[S]) * (np.linalg.det(N[np.ix_(S, S)]) if p else 1.0)
        total += (-lam) ** p * acc / math.factorial(p)
    assert determinant_series(K, lam).value == pytest.approx(total, rel=1e-12)


def test_duplicate_points_give_exact_zero(rng):
    K = random_kernel(rng, 4)
    assert minor_series(K, PointSet((1, 1), (0, 2)), 0.3).value == 0.0
    assert minor_series(K, PointSet((0, 1), (2, 2)), 0.3).value == 0.0


def test_lambda_zero_returns_hadamard_minor(rng):
    K = random_kernel(rng, 4)
    pts = PointSet((0, 2), (1, 3))
    v = minor_series(K, pts, 0.0)
    assert v.value == pytest.approx(np.linalg.det(K.values[np.ix_([0, 2], [1, 3])]), rel=1e-14)
    assert v.residual_estimate == 0.0
    assert fredholm_determinant(K, 0.0) == 1.0


def test_xy_closed_forms():
    K = gl_kernel("xy", 10)
    for lam in (-1.0, 0.5, 2.5):
        assert determinant_series(K, lam).value == pytest.approx(1 - lam / 3, abs=1e-14)
        # D(x, y) = x y for the rank-one kernel
        x = K.grid.nodes
        assert second_series(K, 2, 7, lam).value == pytest.approx(x[2] * x[7], abs=1e-14)


def test_separable_two_term_closed_form():
    # N = x + y: D = (1 - lam/2)^2 - lam^2/3
    g = make_grid(Domain.interval(0.0, 1.0), GAUSS_LEGENDRE, 6)
    K = discretize(KernelSpec.separable(["one", "x"], ["x", "one"]), g)
    for lam in (0.3, 1.0, -2.0):
        ref = (1 - lam / 2) ** 2 - lam**2 / 3
        assert fredholm_determinant(K, lam) == pytest.approx(ref, abs=1e-13)
        assert determinant_series(K, lam).value == pytest.approx(ref, abs=1e-13)


def test_series_coefficients_match_characteristic_polynomial(rng):
    K = random_kernel(rng, 5)
    # det(I - lam A) = prod(1 - lam mu) = sum_k (-1)^k e_k(mu) lam^k, which
    # are exactly the coefficients np.poly returns for prod(t - mu)
    expected = np.real(np.poly(np.linalg.eigvals(K.values)))
    assert np.allclose(series_coefficients(K), expected, atol=1e-12)
    assert np.allclose(determinant_coefficients(K), expected, atol=1e-12)


def test_polynomial_derivative_by_hand():
    c = [1.0, -2.0, 3.0, 0.5]
    assert polynomial_derivative(c, 2.0, 0) == 1 - 4 + 12 + 4
    assert polynomial_derivative(c, 2.0, 1) == -2 + 12 + 6
    assert polynomial_derivative(c, 2.0, 2) == 6 + 6
    assert polynomial_derivative(c, 2.0, 4) == 0.0


def test_determinant_derivative_matches_finite_difference(rng):
    K = random_kernel(rng, 4)
    lam, h = 0.3, 1e-5
    fd = (fredholm_determinant(K, lam + h) - fredholm_determinant(K, lam - h)) / (2 * h)
    assert determinant_derivative(K, lam, 1) == pytest.approx(fd, rel=1e-8)


def test_trace_identity_discrete_and_weighted(rng):
    K = random_kernel(rng, 4)
    for n in range(0, 5):
        assert trace_identity_residual(K, n, 0.6) < 1e-12
    Kg = gl_kernel("exp-product", 5, c=0.7)
    for n in range(1, 4):
        assert trace_identity_residual(Kg, n, 0.8) < 1e-12


def test_first_trace_is_integral_of_second_series(rng):
    K = random_kernel(rng, 4)
    lam = -0.4
    direct = sum(minor_series(K, PointSet((i,), (i,)), lam).value for i in range(4))
    assert diagonal_trace(K, 1, lam) == pytest.approx(direct, rel=1e-13)


def test_thread_count_does_not_change_bits():
    K = gl_kernel("exp-product", 14, c=0.3)
    pts = PointSet((1,), (5,))
    one = minor_series(K, pts, 0.9, SeriesOptions(threads=1))
    four = minor_series(K, pts, 0.9, SeriesOptions(threads=4))
    assert one.value == four.value


def test_continuum_truncation_and_tail_bound():
    K = gl_kernel("exp-product", 12, c=0.5)
    v = minor_series(K, None, 0.4)
    assert v.p_used < 12
    assert abs(v.value - fredholm_determinant(K, 0.4)) < 1e-14
    assert v.tail_bound >= 0.0


def test_budget_overrun_raises_with_partial():
    K = gl_kernel("min", 30)
    with pytest.raises(SeriesNotConverged) as info:
        minor_series(K, None, 1.0, SeriesOptions(budget=1000))
    assert info.value.partial is not None


def test_p_max_too_small_raises_in_continuum_mode():
    K = gl_kernel("exp-product", 8)
    with pytest.raises(SeriesNotConverged):
        minor_series(K, None, 1.0, SeriesOptions(p_max=1))


def test_tree_sum_is_fixed_order():
    vals = [1e16, 1.0, -1e16, 1.0]
    assert tree_sum(vals) == (1e16 + 1.0) + (-1e16 + 1.0)
    assert tree_sum([]) == 0.0


def test_hadamard_ratio_at_most_one(rng):
    K = random_kernel(rng, 5)
    assert hadamard_check(K, PointSet((0, 1, 2), (2, 3, 4))) <= 1.0


def test_min_kernel_determinant_converges_quadratically():
    # the kink of min(x, y) on the diagonal limits Nystrom to O(m^-2)
    errs = [abs(fredholm_determinant(gl_kernel("min", m), 1.0) - np.cos(1.0)) for m in (20, 40, 80)]
    assert errs[0] > errs[1] > errs[2]
    assert 3.0 < errs[0] / errs[1] < 5.0
    assert 3.0 < errs[1] / errs[2] < 5.0


def test_two_by_two_hand_expansion():
    a, b, c, d = 0.3, -1.2, 0.7, 2.0
    K = discrete_kernel([[a, b], [c, d]])
    for lam in (0.4, -1.3):
        assert determinant_series(K, lam).value == pytest.approx(1 - lam * (a + d) + lam**2 * (a * d - b * c), abs=1e-15)
        assert second_series(K, 0, 0, lam).value == pytest.approx(a - lam * (a * d - b * c), abs=1e-15)


def test_ones_discrete_series_is_linear():
    from fredholm_minors.kernel import UNIT

    K = discretize(KernelSpec.builtin("ones"), make_grid(Domain.discrete(3), UNIT, 3))
    for lam in (0.2, 1.0, -3.0):
        assert determinant_series(K, lam).value == 1 - 3 * lam
    assert np.array_equal(series_coefficients(K), [1.0, -3.0, 0.0, 0.0])


def test_second_series_is_minor_series_bitwise(rng):
    for _ in range(100):
        m = int(rng.integers(1, 6))
        K = random_kernel(rng, m)
        x, y = (int(v) for v in rng.integers(0, m, 2))
        lam = rng.uniform(-2, 2)
        assert second_series(K, x, y, lam).value == minor_series(K, PointSet((x,), (y,)), lam).value


def test_terms_beyond_grid_size_vanish(rng):
    from fredholm_minors.series import _ordered_sum

    K = random_kernel(rng, 3)
    for xs, ys in [((), ()), ((0,), (1,)), ((0, 2), (1, 0))]:
        pts = PointSet(xs, ys)
        # every ordered tuple of 3 - n + 1 points repeats a row of the minor
        assert abs(_ordered_sum(K, pts, 3 - len(xs) + 1)) < 1e-14
