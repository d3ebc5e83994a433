import numpy as np
import pytest

from conftest import gl_kernel, random_kernel
from fredholm_minors.errors import OracleTooLarge, SingularAtLambda, ValidationError
from fredholm_minors.grassmann import (
    GrassmannElement,
    berezin_integrate,
    factorial_moment,
    grassmann_correlator,
    grassmann_exp,
    grassmann_partition,
    minor_oracle,
    traced_moment_residual,
    two_point_function,
    wick_determinant,
    wick_residual,
)
from fredholm_minors.kernel import PointSet, discrete_kernel
from fredholm_minors.series import determinant_derivative, fredholm_determinant, minor_series

G = GrassmannElement


def test_generators_anticommute_and_square_to_zero():
    a, b = G.psi(2, 0), G.psi_dag(2, 1)
    assert np.array_equal((a * b).coeffs, -(b * a).coeffs)
    assert not np.any((a * a).coeffs)
    assert not np.any((b * b).coeffs)


def test_product_is_associative(rng):
    m = 2
    x, y, z = (G(m, rng.standard_normal(16)) for _ in range(3))
    assert np.allclose(((x * y) * z).coeffs, (x * (y * z)).coeffs, atol=1e-13)


def test_even_elements_commute(rng):
    q = G.psi_dag(2, 0) * G.psi(2, 1)
    r = G.psi_dag(2, 1) * G.psi(2, 0)
    assert np.array_equal((q * r).coeffs, (r * q).coeffs)


def test_exp_terminates_and_factorizes():
    q1 = G.psi_dag(2, 0) * G.psi(2, 0)
    q2 = G.psi_dag(2, 1) * G.psi(2, 1)
    lhs = grassmann_exp(q1 + q2)
    rhs = grassmann_exp(q1) * grassmann_exp(q2)
    assert np.allclose(lhs.coeffs, rhs.coeffs)
    with pytest.raises(ValidationError):
        grassmann_exp(G.psi(1, 0))


def test_scalar_partition_by_hand():
    # m=1, N=[c]: Z = 1 - lam c
    K = discrete_kernel([[0.6]])
    assert grassmann_partition(K, 0.5) == pytest.approx(0.7, abs=1e-15)


def test_berezin_picks_top_coefficient():
    top = G.psi_dag(2, 0) * G.psi(2, 0) * G.psi_dag(2, 1) * G.psi(2, 1)
    assert berezin_integrate(top) == 1.0
    assert berezin_integrate(G.scalar(2, 3.0)) == 0.0


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
def test_partition_equals_determinant(rng, m):
    K = random_kernel(rng, m)
    lam = rng.uniform(-1.5, 1.5)
    assert grassmann_partition(K, lam) == pytest.approx(np.linalg.det(np.eye(m) - lam * K.values), abs=1e-12)


def test_partition_on_weighted_grid():
    K = gl_kernel("exp-product", 4, c=0.5)
    assert grassmann_partition(K, 0.9) == pytest.approx(fredholm_determinant(K, 0.9), rel=1e-13)


def test_two_point_function_from_inverse(rng):
    K = random_kernel(rng, 4)
    lam = 0.4
    G2 = two_point_function(K, lam)
    for y in range(4):
        for x in range(4):
            assert grassmann_correlator(K, lam, [(y, x)]) == pytest.approx(G2[x, y], abs=1e-13)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_wick_factorization(rng, n):
    K = random_kernel(rng, 4)
    ys = rng.choice(4, n, replace=False).tolist()
    xs = rng.choice(4, n, replace=False).tolist()
    assert wick_residual(K, 0.3, list(zip(ys, xs))) < 1e-12


def test_wick_on_weighted_grid():
    K = gl_kernel("exp-product", 4, c=1.0)
    pairs = [(0, 2), (3, 1)]
    direct = grassmann_correlator(K, 0.4, pairs)
    assert direct == pytest.approx(wick_determinant(K, 0.4, pairs), rel=1e-12)


def test_minor_oracle_matches_series(rng):
    K = random_kernel(rng, 4)
    for pts in [PointSet((), ()), PointSet((0,), (3,)), PointSet((1, 2), (0, 3)), PointSet((0, 1, 2), (3, 2, 1))]:
        assert minor_oracle(K, pts, 0.6).value == pytest.approx(minor_series(K, pts, 0.6).value, abs=1e-12)


def test_minor_oracle_on_weighted_grid():
    K = gl_kernel("exp-product", 5, c=0.3)
    pts = PointSet((0, 4), (2, 1))
    assert minor_oracle(K, pts, 1.1).value == pytest.approx(minor_series(K, pts, 1.1).value, rel=1e-11)


def test_traced_moments_and_factorial_moments(rng):
    K = random_kernel(rng, 4)
    lam = 0.35
    for n in (1, 2):
        assert traced_moment_residual(K, lam, n) < 1e-12
        ref = (-1) ** n * determinant_derivative(K, lam, n) / fredholm_determinant(K, lam)
        assert factorial_moment(K, lam, n) == pytest.approx(ref, rel=1e-11)


def test_size_limit():
    K = random_kernel(np.random.default_rng(0), 6)
    with pytest.raises(OracleTooLarge):
        grassmann_partition(K, 0.1)


def test_correlator_at_zero_of_d():
    K = discrete_kernel(np.diag([2.0, 1.0]))
    with pytest.raises(SingularAtLambda):
        grassmann_correlator(K, 0.5, [(0, 0)])


def test_sparse_view_and_grades():
    e = G.scalar(2, 2.0) + G.psi_dag(2, 0) * G.psi(2, 1)
    assert e.terms() == {0: 2.0, 0b1001: 1.0}
    assert e.grades() == {0, 2}
    assert e.is_even
