"""Minors as determinants of resolvents, and the row/column identities
relating D_n to D_{n-1}.

Every check returns a residual scaled by ``max(1, |reference|)`` so callers
choose their own threshold.
"""

from dataclasses import dataclass

import numpy as np

from .kernel import PointSet
from .resolvent import SINGULAR_TOL, resolvent_kernel
from .series import DETERMINANTAL, MinorValue, _as_points, minor_series, tree_sum


@dataclass(frozen=True)
class NormalizedMinor:
    """Delta_n = D_n / D(lambda) = det R(x_i, y_j; lambda)."""

    value: float

    def __float__(self):
        return float(self.value)


def _det(mat):
    if mat.size == 0:
        return 1.0
    return float(np.linalg.det(mat))


def normalized_minor(K, pts, lam, singular_tol=SINGULAR_TOL, resolvent=None):
    pts = _as_points(K, pts)
    if pts.has_duplicates:
        return NormalizedMinor(0.0)
    R = resolvent if resolvent is not None else resolvent_kernel(K, lam, singular_tol)
    return NormalizedMinor(_det(R.values[np.ix_(pts.xs, pts.ys)]))


def minor_determinantal(K, pts, lam, singular_tol=SINGULAR_TOL, resolvent=None):
    """D_n = D(lambda) * det R(x_i, y_j; lambda).

    Needs D(lambda) != 0; at a zero of D use :func:`minor_series`, which is
    entire in lambda.
    """
    R = resolvent if resolvent is not None else resolvent_kernel(K, lam, singular_tol)
    delta = normalized_minor(K, pts, lam, resolvent=R).value
    return MinorValue(R.det_at_lambda * delta, DETERMINANTAL, 0, 0.0)


def _D(K, pts, lam, opts):
    return minor_series(K, pts, lam, opts).value


def _scaled(lhs, rhs):
    return abs(lhs - rhs) / max(1.0, abs(lhs))


def row_expansion_residual(K, pts, lam, i, opts=None):
    """Expansion of D_n along row position ``i`` (1-based).

    D_n = sum_k (-1)^(i+k) N(x_i, y_k) D_{n-1}(x_i, y_k omitted)
          + lambda * sum_s w_s N(x_i, s) D_n(x_i -> s)
    """
    pts = _as_points(K, pts)
    n = pts.n
    if not 1 <= i <= n:
        raise ValueError(f"row position must lie in 1..{n}, got {i}")
    r = i - 1
    N, w = K.values, K.weights
    xi = pts.xs[r]
    lhs = _D(K, pts, lam, opts)
    cofactors = [(-1) ** (r + k) * N[xi, pts.ys[k]] * _D(K, pts.omit(r, k), lam, opts) for k in range(n)]
    integral = [w[s] * N[xi, s] * _D(K, pts.with_row(r, s), lam, opts) for s in range(K.m)]
    return _scaled(lhs, sum(cofactors) + lam * tree_sum(integral))


def column_expansion_residual(K, pts, lam, i, opts=None):
    """Expansion of D_n along column position ``i`` (1-based)."""
    pts = _as_points(K, pts)
    n = pts.n
    if not 1 <= i <= n:
        raise ValueError(f"column position must lie in 1..{n}, got {i}")
    c = i - 1
    N, w = K.values, K.weights
    yi = pts.ys[c]
    lhs = _D(K, pts, lam, opts)
    cofactors = [(-1) ** (k + c) * N[pts.xs[k], yi] * _D(K, pts.omit(k, c), lam, opts) for k in range(n)]
    integral = [w[s] * N[s, yi] * _D(K, pts.with_col(c, s), lam, opts) for s in range(K.m)]
    return _scaled(lhs, sum(cofactors) + lam * tree_sum(integral))


def recursion_residual_column(K, pts, lam, i, opts=None, singular_tol=SINGULAR_TOL):
    """D(lambda) D_n = sum_k (-1)^(i+k) D(x_k, y_i) D_{n-1}(x_k, y_i omitted).

    ``i`` is a 1-based column position.  All minors come from the series;
    the resolvent is only used to enforce D(lambda) != 0.
    """
    pts = _as_points(K, pts)
    n = pts.n
    if not 1 <= i <= n:
        raise ValueError(f"column position must lie in 1..{n}, got {i}")
    resolvent_kernel(K, lam, singular_tol)
    c = i - 1
    D = _D(K, None, lam, opts)
    lhs = D * _D(K, pts, lam, opts)
    rhs = sum(
        (-1) ** (k + c) * _D(K, PointSet((pts.xs[k],), (pts.ys[c],)), lam, opts) * _D(K, pts.omit(k, c), lam, opts)
        for k in range(n)
    )
    return _scaled(lhs, rhs)


def recursion_residual_row(K, pts, lam, i, opts=None, singular_tol=SINGULAR_TOL):
    """Transposed form: expand along row position ``i`` with D(x_i, y_k)."""
    pts = _as_points(K, pts)
    n = pts.n
    if not 1 <= i <= n:
        raise ValueError(f"row position must lie in 1..{n}, got {i}")
    resolvent_kernel(K, lam, singular_tol)
    r = i - 1
    D = _D(K, None, lam, opts)
    lhs = D * _D(K, pts, lam, opts)
    rhs = sum(
        (-1) ** (r + k) * _D(K, PointSet((pts.xs[r],), (pts.ys[k],)), lam, opts) * _D(K, pts.omit(r, k), lam, opts)
        for k in range(n)
    )
    return _scaled(lhs, rhs)


def two_point_identity_residual(K, x1, x2, y1, y2, lam, opts=None):
    """D * D_2(x1 x2; y1 y2) = D(x1,y1) D(x2,y2) - D(x1,y2) D(x2,y1)."""
    D = _D(K, None, lam, opts)
    lhs = D * _D(K, PointSet((x1, x2), (y1, y2)), lam, opts)

    def d1(x, y):
        return _D(K, PointSet((x,), (y,)), lam, opts)

    return _scaled(lhs, d1(x1, y1) * d1(x2, y2) - d1(x1, y2) * d1(x2, y1))
