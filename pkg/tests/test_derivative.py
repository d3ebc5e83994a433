import numpy as np
import pytest

from conftest import gl_kernel, inverse_resolvent, random_kernel
from fredholm_minors.derivative import (
    dD1_dN,
    dD_dN,
    dDn_dN,
    dR_dN,
    delta2_form_dR_dN,
    fd_check,
    next_minor_from_derivative,
    quotient_rule_dR_dN,
    richardson,
)
from fredholm_minors.errors import SingularAtLambda
from fredholm_minors.kernel import PointSet, discrete_kernel
from fredholm_minors.series import fredholm_determinant, minor_series


def test_scalar_kernel_by_hand():
    # m=1, N=[c]: d/dc (1 - lam c) = -lam
    K = discrete_kernel([[0.8]])
    assert dD_dN(K, 0.3, 0, 0) == pytest.approx(-0.3, abs=1e-16)


def test_lambda_zero():
    K = discrete_kernel(np.arange(9.0).reshape(3, 3))
    assert dD_dN(K, 0.0, 1, 2) == 0.0
    # D(x, y; 0) = N(x, y): derivative is the pair of deltas
    assert dDn_dN(K, PointSet((1,), (2,)), 0.0, 1, 2) == 1.0
    assert dDn_dN(K, PointSet((1,), (2,)), 0.0, 2, 1) == 0.0
    assert dR_dN(K, 0.0, 1, 2, 1, 2) == 1.0


def test_determinant_derivative_vs_numpy_fd(rng):
    K = random_kernel(rng, 3)
    lam, h = 0.6, 1e-6
    for a, b in [(0, 0), (1, 2), (2, 0)]:
        up, dn = np.array(K.values), np.array(K.values)
        up[a, b] += h
        dn[a, b] -= h
        fd = (np.linalg.det(np.eye(3) - lam * up) - np.linalg.det(np.eye(3) - lam * dn)) / (2 * h)
        assert dD_dN(K, lam, a, b) == pytest.approx(fd, rel=1e-7)


def test_n0_and_n1_paths_are_bitwise_equal(rng):
    K = random_kernel(rng, 4)
    lam = 0.45
    for a in range(4):
        for b in range(4):
            assert dD_dN(K, lam, a, b) == dDn_dN(K, PointSet((), ()), lam, a, b)
            for x in range(4):
                for y in range(4):
                    assert dD1_dN(K, x, y, lam, a, b) == dDn_dN(K, PointSet((x,), (y,)), lam, a, b)


def test_resolvent_derivative_vs_numpy_fd(rng):
    K = random_kernel(rng, 3)
    lam, h = 0.5, 1e-6
    for x, y, a, b in [(0, 1, 2, 0), (1, 1, 1, 1), (2, 0, 0, 2)]:
        up, dn = np.array(K.values), np.array(K.values)
        up[a, b] += h
        dn[a, b] -= h
        fd = (inverse_resolvent(discrete_kernel(up), lam)[x, y] - inverse_resolvent(discrete_kernel(dn), lam)[x, y]) / (2 * h)
        assert dR_dN(K, lam, x, y, a, b) == pytest.approx(fd, rel=1e-6)


def test_quotient_consistency(rng):
    K = random_kernel(rng, 4)
    lam = 0.3
    assert abs(fredholm_determinant(K, lam)) > 1e-3
    for x, y, a, b in [(0, 1, 2, 3), (1, 1, 1, 1), (3, 0, 0, 3), (2, 2, 0, 1)]:
        ref = dR_dN(K, lam, x, y, a, b)
        assert quotient_rule_dR_dN(K, lam, x, y, a, b) == pytest.approx(ref, rel=1e-10, abs=1e-12)
        assert delta2_form_dR_dN(K, lam, x, y, a, b) == pytest.approx(ref, rel=1e-10, abs=1e-12)


def test_resolvent_derivative_singular():
    K = discrete_kernel(np.diag([2.0, 1.0]))
    with pytest.raises(SingularAtLambda):
        dR_dN(K, 0.5, 0, 0, 0, 0)


def test_formula_valid_at_zero_of_d():
    K = discrete_kernel(np.array([[2.0, 0.3], [0.1, 1.0]]))
    lam = 1.0 / np.max(np.linalg.eigvals(K.values).real)
    assert abs(fredholm_determinant(K, lam)) < 1e-12
    rep = fd_check(K, PointSet((0,), (1,)), lam, 1, 0)
    assert rep.rel_error < 1e-8


def test_fd_check_random_n2():
    K = random_kernel(np.random.default_rng(4), 4)
    rep = fd_check(K, PointSet((0, 3), (2, 1)), 0.3, 1, 2)
    assert rep.rel_error < 1e-6


def test_fd_check_when_target_misses_points(rng):
    K = random_kernel(rng, 5)
    pts = PointSet((0, 1), (2, 3))
    total, blocks = dDn_dN(K, pts, 0.4, 4, 4, debug_blocks=True)
    assert blocks["NN"] == blocks["NI"] == blocks["IN"] == 0.0
    assert total == blocks["II_diag"] + blocks["II_nondiag"]
    assert fd_check(K, pts, 0.4, 4, 4).rel_error < 1e-6


def test_fd_check_weighted_grid():
    K = gl_kernel("exp-product", 5, c=0.7)
    rep = fd_check(K, PointSet((1,), (3,)), 0.8, 1, 2)
    assert rep.rel_error < 1e-6


def test_fd_lambda_zero_is_linear():
    K = random_kernel(np.random.default_rng(2), 3)
    rep = fd_check(K, PointSet((1,), (2,)), 0.0, 1, 2)
    assert rep.analytic == 1.0
    assert rep.rel_error < 1e-10


def test_fd_schedule_validated(rng):
    K = random_kernel(rng, 3)
    with pytest.raises(ValueError):
        fd_check(K, None, 0.1, 0, 0, h_schedule=())
    with pytest.raises(ValueError):
        fd_check(K, None, 0.1, 0, 0, h_schedule=(1e-6, 1e-5))


def test_richardson_removes_quadratic_error():
    f = lambda h: 3.0 + 2.0 * h**2 + 5.0 * h**4
    table = richardson([f(0.1), f(0.01), f(0.001)], ratio=10.0)
    assert table[-1][0] == pytest.approx(3.0, abs=1e-12)


def test_next_minor_recovered_from_fd(rng):
    K = random_kernel(rng, 5)
    pts = PointSet((0, 1), (2, 1))
    lam = 0.4
    fd = fd_check(K, pts, lam, 3, 4).finite_difference
    recovered = next_minor_from_derivative(K, pts, lam, 3, 4, fd)
    assert recovered == pytest.approx(minor_series(K, pts.append(4, 3), lam).value, abs=1e-8)


def test_entry_derivative_carries_weights():
    K = gl_kernel("exp-product", 4, c=0.5)
    lam, a, b, h = 0.7, 1, 3, 1e-6
    up, dn = np.array(K.values), np.array(K.values)
    up[a, b] += h
    dn[a, b] -= h
    fd = (fredholm_determinant(K.with_values(up), lam) - fredholm_determinant(K.with_values(dn), lam)) / (2 * h)
    assert dD_dN(K, lam, a, b) * K.weights[a] * K.weights[b] == pytest.approx(fd, rel=1e-7)
