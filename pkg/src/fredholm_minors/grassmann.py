"""Exact finite Grassmann algebra and Berezin integration on the grid.

Each grid point i carries a pair of generators psi_dag[i] (bit 2i) and
psi[i] (bit 2i+1).  An element is a dense vector of 4**m coefficients
indexed by generator subsets; a subset stands for the product of its
generators in increasing bit order.  This is a brute-force oracle: its cost
grows as 4**m, so it is limited to small grids.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _backend
from .errors import OracleTooLarge, SingularAtLambda, ValidationError
from .series import ORACLE, MinorValue, _as_points, determinant_derivative, diagonal_trace

MAX_ORACLE_SIZE = 5


def _popcount(masks):
    masks = np.asarray(masks, dtype=np.int64)
    count = np.zeros(masks.shape, dtype=np.int64)
    while np.any(masks):
        count += masks & 1
        masks = masks >> 1
    return count


@dataclass(frozen=True, eq=False)
class GrassmannElement:
    m: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (1 << (2 * self.m),):
            raise ValidationError(f"expected {1 << (2 * self.m)} coefficients for m={self.m}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def num_generators(self):
        return 2 * self.m

    @classmethod
    def zero(cls, m):
        return cls(m, np.zeros(1 << (2 * m)))

    @classmethod
    def scalar(cls, m, value=1.0):
        c = np.zeros(1 << (2 * m))
        c[0] = value
        return cls(m, c)

    @classmethod
    def generator(cls, m, bit):
        c = np.zeros(1 << (2 * m))
        c[1 << bit] = 1.0
        return cls(m, c)

    @classmethod
    def psi(cls, m, i):
        return cls.generator(m, 2 * i + 1)

    @classmethod
    def psi_dag(cls, m, i):
        return cls.generator(m, 2 * i)

    def terms(self):
        """Sparse view: {mask: coefficient} for the non-zero coefficients."""
        nz = np.flatnonzero(self.coeffs)
        return {int(k): float(self.coeffs[k]) for k in nz}

    @property
    def empty_coefficient(self):
        return float(self.coeffs[0])

    @property
    def top_coefficient(self):
        return float(self.coeffs[-1])

    def grades(self):
        return set(_popcount(np.flatnonzero(self.coeffs)).tolist())

    @property
    def is_even(self):
        return all(g % 2 == 0 for g in self.grades())

    def _check(self, other):
        if not isinstance(other, GrassmannElement) or other.m != self.m:
            raise ValidationError("Grassmann elements must live in the same algebra")

    def __add__(self, other):
        self._check(other)
        return GrassmannElement(self.m, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return GrassmannElement(self.m, self.coeffs - other.coeffs)

    def __neg__(self):
        return GrassmannElement(self.m, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating)):
            return GrassmannElement(self.m, self.coeffs * float(other))
        self._check(other)
        return GrassmannElement(self.m, _backend.grassmann_mul(self.coeffs, other.coeffs, 2 * self.m))

    def __rmul__(self, other):
        if isinstance(other, (int, float, np.floating)):
            return GrassmannElement(self.m, self.coeffs * float(other))
        return NotImplemented

    def __truediv__(self, other):
        return GrassmannElement(self.m, self.coeffs / float(other))


def grassmann_exp(q, order=None):
    """exp(q) = sum_k q^k / k! for an even element with no scalar part.

    The series terminates: q^k = 0 once 2k exceeds the number of generators.
    """
    if not q.is_even:
        raise ValidationError("grassmann_exp needs an even-graded element")
    if q.empty_coefficient != 0.0:
        raise ValidationError("grassmann_exp needs an element without a scalar part")
    order = q.m if order is None else order
    result = GrassmannElement.scalar(q.m)
    term = result
    for k in range(1, order + 1):
        term = (term * q) / k
        if not np.any(term.coeffs):
            break
        result = result + term
    return result


def _calibrate_sign():
    # m=1: exp(s psi_dag psi) integrates to s under the measure d psi_dag d psi
    s = 0.5
    e = grassmann_exp(s * (GrassmannElement.psi_dag(1, 0) * GrassmannElement.psi(1, 0)))
    return 1.0 if e.top_coefficient == s else -1.0


_MEASURE_SIGN = None


def berezin_integrate(e):
    """Coefficient of psi_dag[0] psi[0] ... psi_dag[m-1] psi[m-1] in ``e``.

    The overall sign is fixed once by requiring the one-point partition
    function to equal det(1 - lambda*a).
    """
    global _MEASURE_SIGN
    if _MEASURE_SIGN is None:
        _MEASURE_SIGN = _calibrate_sign()
    return _MEASURE_SIGN * e.top_coefficient


def _check_size(K, max_size):
    if K.m > max_size:
        raise OracleTooLarge(K.m, max_size)


def action_matrix(K, lam):
    """S[i, j] = delta_ij - lambda * N[i, j] * w[j]."""
    return np.eye(K.m) - float(lam) * K.operator


def action(K, lam):
    """The quadratic form sum_ij psi_dag[i] S[i, j] psi[j]."""
    return quadratic_form(action_matrix(K, lam))


def quadratic_form(S):
    m = S.shape[0]
    c = np.zeros(1 << (2 * m))
    for i in range(m):
        for j in range(m):
            # psi_dag[i] psi[j] in canonical order unless 2j+1 < 2i
            sign = 1.0 if i <= j else -1.0
            c[(1 << (2 * i)) | (1 << (2 * j + 1))] += sign * S[i, j]
    return GrassmannElement(m, c)


@lru_cache(maxsize=64)
def _weight_cached(m, values, weights, lam):
    N = np.frombuffer(values).reshape(m, m)
    w = np.frombuffer(weights)
    S = np.eye(m) - lam * N * w[None, :]
    return grassmann_exp(quadratic_form(S))


def boltzmann_weight(K, lam):
    """exp(S) for the grid action; cached per (kernel, lambda)."""
    return _weight_cached(K.m, K.values.tobytes(), np.asarray(K.weights).tobytes(), float(lam))


def grassmann_partition(K, lam, max_size=MAX_ORACLE_SIZE):
    """Z = integral of exp(S); equals det(I - lambda*A)."""
    _check_size(K, max_size)
    return berezin_integrate(boltzmann_weight(K, lam))


def _odd_combination(m, coeffs, dagger):
    c = np.zeros(1 << (2 * m))
    for j, a in enumerate(coeffs):
        c[1 << (2 * j + (0 if dagger else 1))] = a
    return GrassmannElement(m, c)


def field_dag(K, y):
    """psi_dag(y) on the grid, carrying the 1/w_y of a discrete delta."""
    coeffs = np.zeros(K.m)
    coeffs[y] = 1.0 / K.weights[y]
    return _odd_combination(K.m, coeffs, True)


def field(K, x):
    coeffs = np.zeros(K.m)
    coeffs[x] = 1.0
    return _odd_combination(K.m, coeffs, False)


def smeared_field(K, x):
    """(N psi)(x) = sum_j N(x, x_j) w_j psi(x_j)."""
    return _odd_combination(K.m, K.values[x] * K.weights, False)


def _integrate_product(K, lam, factors):
    weight = boltzmann_weight(K, lam)
    prod = GrassmannElement.scalar(K.m)
    for f in factors:
        prod = prod * f
    return berezin_integrate(weight * prod)


def grassmann_correlator(K, lam, pairs, max_size=MAX_ORACLE_SIZE, singular_tol=1e-12):
    """<psi_dag(y_1) psi(x_1) ... psi_dag(y_n) psi(x_n)> by direct integration.

    ``pairs`` is a sequence of (y, x) grid indices.
    """
    _check_size(K, max_size)
    pairs = [(int(y), int(x)) for y, x in pairs]
    ys = [y for y, _ in pairs]
    xs = [x for _, x in pairs]
    if len(set(ys)) < len(ys) or len(set(xs)) < len(xs):
        raise ValidationError("correlator needs distinct y indices and distinct x indices")
    Z = grassmann_partition(K, lam, max_size)
    if not abs(Z) > singular_tol:
        raise SingularAtLambda(lam, Z)
    factors = []
    for y, x in pairs:
        factors += [field_dag(K, y), field(K, x)]
    return _integrate_product(K, lam, factors) / Z


def two_point_function(K, lam):
    """G[x, y] = <psi_dag(y) psi(x)> = (I - lambda*A)^(-1)[x, y] / w_y."""
    return np.linalg.inv(action_matrix(K, lam)) / K.weights[None, :]


def wick_determinant(K, lam, pairs):
    """det_ij <psi_dag(y_i) psi(x_j)> from the two-point function."""
    if not pairs:
        return 1.0
    G = two_point_function(K, lam)
    ys = [int(y) for y, _ in pairs]
    xs = [int(x) for _, x in pairs]
    return float(np.linalg.det(G[np.ix_(xs, ys)].T))


def minor_oracle(K, pts, lam, max_size=MAX_ORACLE_SIZE):
    """D_n as the moment integral of exp(S) psi_dag(y_i) (N psi)(x_i)."""
    _check_size(K, max_size)
    pts = _as_points(K, pts)
    factors = []
    for x, y in zip(pts.xs, pts.ys):
        factors += [field_dag(K, y), smeared_field(K, x)]
    return MinorValue(_integrate_product(K, lam, factors), ORACLE, 0, 0.0)


def traced_moment_residual(K, lam, n, max_size=MAX_ORACLE_SIZE):
    """|int D_n(x; x) dx^n - (-d/dlambda)^n D| / max(1, |(-d/dlambda)^n D|),
    with the minors from the Grassmann oracle."""
    _check_size(K, max_size)
    if n == 0:
        return 0.0
    target = (-1) ** n * determinant_derivative(K, lam, n)
    traced = diagonal_trace(K, n, lam, minor=lambda p: minor_oracle(K, p, lam, max_size).value)
    return abs(traced - target) / max(1.0, abs(target))


def wick_residual(K, lam, pairs, max_size=MAX_ORACLE_SIZE):
    direct = grassmann_correlator(K, lam, pairs, max_size)
    wick = wick_determinant(K, lam, pairs)
    return abs(direct - wick) / max(1.0, abs(wick))


def factorial_moment(K, lam, n, max_size=MAX_ORACLE_SIZE):
    """<(int psi_dag (N psi))^n>, which should equal (-d/dlambda)^n D / D."""
    _check_size(K, max_size)
    bilinear = GrassmannElement.zero(K.m)
    for x in range(K.m):
        bilinear = bilinear + K.weights[x] * (field_dag(K, x) * smeared_field(K, x))
    Z = grassmann_partition(K, lam, max_size)
    if n == 0:
        return 1.0
    return _integrate_product(K, lam, [bilinear] * n) / Z
