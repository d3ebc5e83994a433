"""Fredholm's series for D(lambda) and the minors D_n, the direct
determinant det(I - lambda*A), and the trace identity linking them.

The p-fold integrals in the series are weighted grid sums.  Tuples with a
repeated integration point give a determinant with two equal rows, so only
strictly increasing index subsets are enumerated and the 1/p! of the series
cancels against the p! orderings of each subset.  Points that coincide with
one of the fixed rows or columns likewise contribute exact zeros and are
dropped from the enumeration.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations, product
from typing import Optional

import numpy as np

from . import _backend
from .errors import SeriesNotConverged, ValidationError
from .kernel import PointSet, hadamard_bound

SERIES = "series"
DETERMINANTAL = "determinantal"
ORACLE = "oracle"


@dataclass(frozen=True)
class SeriesOptions:
    """Truncation policy for the minor series.

    ``p_max=None`` sums every term that can be non-zero, which makes the
    result exact (up to rounding) for the discretized kernel.  ``budget``
    caps the number of determinants evaluated; ``ordered`` switches to the
    slow ordered-tuple summation used as a cross-check.
    """

    p_max: Optional[int] = None
    rel_tol: float = 1e-15
    budget: int = 2_000_000
    threads: int = 1
    ordered: bool = False

    def __post_init__(self):
        if self.p_max is not None and self.p_max < 0:
            raise ValidationError("p_max must be non-negative")
        if not self.rel_tol > 0:
            raise ValidationError("rel_tol must be positive")


@dataclass(frozen=True)
class MinorValue:
    value: float
    method: str
    p_used: int
    residual_estimate: float
    tail_bound: Optional[float] = None

    def __float__(self):
        return float(self.value)


def tree_sum(values):
    """Pairwise reduction in a fixed order."""
    vals = [float(v) for v in values]
    if not vals:
        return 0.0
    while len(vals) > 1:
        nxt = [vals[i] + vals[i + 1] for i in range(0, len(vals) - 1, 2)]
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return vals[0]


def _as_points(K, pts):
    if pts is None:
        pts = PointSet((), ())
    elif not isinstance(pts, PointSet):
        pts = PointSet(*pts)
    return pts.validate(K.m)


def _pool(K, pts):
    used = set(pts.xs) | set(pts.ys)
    return np.array([i for i in range(K.m) if i not in used], dtype=np.int64)


def _subset_sum(K, pts, pool, p, threads=1):
    """sum over p-subsets S of pool of prod(w[S]) * det N[xs+S, ys+S]."""
    xs = np.array(pts.xs, dtype=np.int64)
    ys = np.array(pts.ys, dtype=np.int64)
    if p == 0:
        return float(_backend.subset_minor_sums(K.values, K.weights, xs, ys, pool, 0, 0, 0)[0])
    if p > len(pool):
        return 0.0
    firsts = len(pool) - p + 1
    if threads <= 1 or firsts < 2:
        partial = _backend.subset_minor_sums(K.values, K.weights, xs, ys, pool, p, 0, firsts)
    else:
        bounds = np.linspace(0, firsts, min(threads, firsts) + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = ex.map(
                lambda lh: _backend.subset_minor_sums(K.values, K.weights, xs, ys, pool, p, lh[0], lh[1]),
                zip(bounds[:-1], bounds[1:]),
            )
            partial = np.concatenate(list(parts))
    return tree_sum(partial)


def _ordered_sum(K, pts, p):
    """Debug path: all ordered p-tuples of grid points, divided by p!."""
    if p == 0:
        return _subset_sum(K, pts, _pool(K, pts), 0)
    N, w = K.values, K.weights
    total = 0.0
    for S in product(range(K.m), repeat=p):
        rows = list(pts.xs) + list(S)
        cols = list(pts.ys) + list(S)
        total += float(np.prod(w[list(S)])) * float(np.linalg.det(N[np.ix_(rows, cols)]))
    return total / math.factorial(p)


def _tail_bound(K, n, lam, last_p, terms=400):
    """Hadamard bound on sum_{p > last_p} of the series terms."""
    M = K.bound
    V = float(np.sum(K.weights))
    if M == 0 or lam == 0:
        return 0.0
    logs = []
    for p in range(last_p + 1, last_p + 1 + terms):
        k = n + p
        logs.append(p * math.log(abs(lam) * V) - math.lgamma(p + 1) + 0.5 * k * math.log(k) + k * math.log(M))
    top = max(logs)
    return math.exp(top) * sum(math.exp(v - top) for v in logs)


def series_raw_sums(K, pts=None, p_max=None, threads=1):
    """sigma_p for p = 0..p_max, where D_n(lambda) = sum_p (-lambda)^p sigma_p.

    sigma_p is the (1/p!-normalized) p-fold weighted grid integral of the
    (n+p)-point Hadamard minors.
    """
    pts = _as_points(K, pts)
    pool = _pool(K, pts)
    last = len(pool) if p_max is None else min(p_max, len(pool))
    if pts.has_duplicates:
        return np.zeros(last + 1)
    return np.array([_subset_sum(K, pts, pool, p, threads) for p in range(last + 1)])


def series_coefficients(K, pts=None, p_max=None):
    """Polynomial coefficients c_p of D_n(lambda) = sum_p c_p lambda^p."""
    s = series_raw_sums(K, pts, p_max)
    return s * (-1.0) ** np.arange(len(s))


def minor_series(K, pts, lam, opts=None):
    """Fredholm's n-th minor D_n(xs; ys | lambda) by direct series summation.

    An empty point set gives D(lambda).  In the discrete (unit weight) mode
    the series is summed until it terminates and the result is exact up to
    rounding; on a quadrature grid it stops once two consecutive terms fall
    below ``opts.rel_tol`` relative to the running value.
    """
    opts = opts or SeriesOptions()
    pts = _as_points(K, pts)
    n = pts.n
    lam = float(lam)
    pool = _pool(K, pts)
    # every term beyond len(pool) has a repeated row or column
    exhaust = len(pool)
    p_max = K.m - n if opts.p_max is None else opts.p_max
    last = min(p_max, exhaust)

    if pts.has_duplicates:
        return MinorValue(0.0, SERIES, 0, 0.0, 0.0)

    value = 0.0
    p_used = 0
    last_term = 0.0
    small_run = 0
    spent = 0
    converged = False
    for p in range(last + 1):
        if p > 0 and lam == 0.0:
            converged = True
            break
        cost = math.comb(len(pool), p)
        spent += cost
        if spent > opts.budget:
            raise SeriesNotConverged(
                f"series for D_{n} needs more than {opts.budget} determinants at p={p} "
                f"(m={K.m}); raise the budget or lower p_max",
                partial=MinorValue(value, SERIES, p_used, abs(last_term) / max(1.0, abs(value)),
                                   _tail_bound(K, n, lam, p_used)),
            )
        raw = _ordered_sum(K, pts, p) if opts.ordered else _subset_sum(K, pts, pool, p, opts.threads)
        term = (-lam) ** p * raw
        value += term
        p_used = p
        last_term = term
        if p > 0 and not K.is_discrete:
            if abs(term) <= opts.rel_tol * max(1.0, abs(value)):
                small_run += 1
                if small_run >= 2:
                    converged = True
                    break
            else:
                small_run = 0

    exhausted = converged and lam == 0.0 or p_used >= exhaust
    if exhausted:
        residual, tail = 0.0, 0.0
    else:
        residual = abs(last_term) / max(1.0, abs(value))
        tail = _tail_bound(K, n, lam, p_used)
        if not K.is_discrete and not converged:
            raise SeriesNotConverged(
                f"series for D_{n} not converged at p_max={p_max}: "
                f"last term {residual:.2e} relative > rel_tol {opts.rel_tol:.1e}",
                partial=MinorValue(value, SERIES, p_used, residual, tail),
            )
    return MinorValue(value, SERIES, p_used, residual, tail)


def determinant_series(K, lam, opts=None):
    """D(lambda) from Fredholm's first series."""
    return minor_series(K, None, lam, opts)


def second_series(K, x, y, lam, opts=None):
    """D(x, y; lambda), the first minor."""
    return minor_series(K, PointSet((x,), (y,)), lam, opts)


def fredholm_determinant(K, lam):
    """det(I - lambda*A) with A = N W, the functional determinant on the grid.

    Symmetric kernels use the congruent form W^(1/2) N W^(1/2).
    """
    lam = float(lam)
    if lam == 0.0:
        return 1.0
    if K.is_symmetric:
        r = np.sqrt(K.weights)
        A = r[:, None] * K.values * r[None, :]
    else:
        A = K.operator
    return float(np.linalg.det(np.eye(K.m) - lam * A))


def determinant_coefficients(K):
    """Coefficients c_k of det(I - lambda*A) = sum_k c_k lambda^k.

    Faddeev-LeVerrier recursion on A = N W: the c_k are the coefficients of
    the characteristic polynomial of A read in reverse.
    """
    A = K.operator
    m = K.m
    c = np.zeros(m + 1)
    c[0] = 1.0
    Mk = np.zeros((m, m))
    eye = np.eye(m)
    for k in range(1, m + 1):
        Mk = A @ Mk + c[k - 1] * eye
        c[k] = -np.trace(A @ Mk) / k
    return c


def polynomial_derivative(coeffs, lam, order=1):
    """order-th derivative of sum_k coeffs[k] lambda^k, by Horner's rule."""
    c = np.asarray(coeffs, dtype=float)
    for _ in range(order):
        if len(c) <= 1:
            return 0.0
        c = c[1:] * np.arange(1, len(c))
    acc = 0.0
    for ck in c[::-1]:
        acc = acc * lam + ck
    return float(acc)


def determinant_derivative(K, lam, order=1):
    """d^order D / d lambda^order from the exact polynomial coefficients."""
    return polynomial_derivative(determinant_coefficients(K), float(lam), order)


def diagonal_trace(K, n, lam, opts=None, minor=None):
    """n-fold weighted grid sum of D_n(x_1..x_n; x_1..x_n | lambda).

    The diagonal minor is symmetric in the tuple and vanishes on repeated
    points, so the ordered sum is n! times the sum over subsets.
    """
    minor = minor or (lambda pts: minor_series(K, pts, lam, opts).value)
    if n == 0:
        return minor(PointSet((), ()))
    w = K.weights
    terms = [float(np.prod(w[list(S)])) * minor(PointSet.diagonal(S)) for S in combinations(range(K.m), n)]
    return math.factorial(n) * tree_sum(terms)


def trace_identity_residual(K, n, lam, opts=None):
    """Relative residual of d^nD/dlambda^n = (-1)^n * int D_n(x;x) dx^n.

    The derivative comes from the exact polynomial coefficients of
    det(I - lambda*A); the residual is divided by max(1, |d^nD|).
    """
    if n < 0 or n > 4:
        raise ValidationError(f"trace identity implemented for 0 <= n <= 4, got {n}")
    lam = float(lam)
    if n == 0:
        d = minor_series(K, None, lam, opts).value
        return abs(d - d)
    lhs = determinant_derivative(K, lam, n)
    rhs = (-1) ** n * diagonal_trace(K, n, lam, opts)
    return abs(lhs - rhs) / max(1.0, abs(lhs))


def hadamard_check(K, pts):
    """Ratio |N(xs; ys)| / (n^(n/2) M^n); at most 1 by Hadamard's inequality."""
    from .kernel import hadamard_minor
    pts = _as_points(K, pts)
    bound = hadamard_bound(pts.n, K.bound)
    if bound == 0:
        return 0.0
    return abs(hadamard_minor(K, pts.xs, pts.ys)) / bound
