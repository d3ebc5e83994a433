"""Functional derivative of the minors with respect to the kernel.

On a grid, the delta function delta(x_i - a) becomes [x_i == a] / w_a, so
every value returned here is the continuum functional derivative.  The
derivative with respect to the matrix entry N[a, b] is that value times
w_a * w_b.

All minors inside the formula come from the series, which is entire in
lambda, so the formula also holds at zeros of D(lambda).
"""

from dataclasses import dataclass

import numpy as np

from .kernel import PointSet
from .resolvent import SINGULAR_TOL, resolvent_kernel
from .series import SeriesOptions, _as_points, minor_series

DEFAULT_STEPS = (1e-4, 1e-5, 1e-6)


@dataclass(frozen=True)
class DerivativeReport:
    analytic: float
    finite_difference: float
    rel_error: float
    h_used: float


def _delta(K, i, j):
    """Discrete delta(x_i - x_j)."""
    return 1.0 / K.weights[i] if i == j else 0.0


def _D(K, pts, lam, opts):
    return minor_series(K, pts, lam, opts).value


def derivative_terms(K, pts, lam, a, b, opts=None):
    """The five contributions to dD_n/dN(a, b), keyed by the block of the
    integrated determinant they come from.

    NN          sum_ij (-1)^(i+j) d(x_i-a) d(y_j-b) D_{n-1}(x_i, y_j omitted)
    NI          lambda sum_i d(x_i-a) D_n(x_i -> b)
    IN          lambda sum_j d(y_j-b) D_n(y_j -> a)
    II_diag     -lambda d(a-b) D_n
    II_nondiag  -lambda^2 D_{n+1}(xs + b; ys + a)
    """
    pts = _as_points(K, pts)
    n = pts.n
    lam = float(lam)
    nn = 0.0
    for i in range(n):
        for j in range(n):
            d = _delta(K, pts.xs[i], a) * _delta(K, pts.ys[j], b)
            if d:
                nn += (-1) ** (i + j) * d * _D(K, pts.omit(i, j), lam, opts)
    ni = 0.0
    for i in range(n):
        d = _delta(K, pts.xs[i], a)
        if d:
            ni += lam * d * _D(K, pts.with_row(i, b), lam, opts)
    in_ = 0.0
    for j in range(n):
        d = _delta(K, pts.ys[j], b)
        if d:
            in_ += lam * d * _D(K, pts.with_col(j, a), lam, opts)
    diag = -lam * _delta(K, a, b) * _D(K, pts, lam, opts)
    nondiag = -lam * lam * _D(K, pts.append(b, a), lam, opts)
    return {"NN": nn, "NI": ni, "IN": in_, "II_diag": diag, "II_nondiag": nondiag}


def _total(terms):
    return terms["NN"] + terms["NI"] + terms["IN"] + terms["II_diag"] + terms["II_nondiag"]


def dDn_dN(K, pts, lam, a, b, opts=None, debug_blocks=False):
    """delta D_n(xs; ys | lambda) / delta N(a, b).

    With ``debug_blocks`` the five-term breakdown is returned alongside.
    """
    terms = derivative_terms(K, pts, lam, a, b, opts)
    total = _total(terms)
    return (total, terms) if debug_blocks else total


def dD_dN(K, lam, a, b, opts=None):
    """delta D(lambda) / delta N(a, b) = -lambda d(a-b) D - lambda^2 D(b, a)."""
    lam = float(lam)
    empty = PointSet((), ())
    diag = -lam * _delta(K, a, b) * _D(K, empty, lam, opts)
    nondiag = -lam * lam * _D(K, empty.append(b, a), lam, opts)
    return 0.0 + 0.0 + 0.0 + diag + nondiag


def dD1_dN(K, x, y, lam, a, b, opts=None):
    """delta D(x, y; lambda) / delta N(a, b), the first-minor case written out."""
    lam = float(lam)
    D = _D(K, PointSet((), ()), lam, opts)
    first = _delta(K, x, a) * _delta(K, y, b)
    t1 = 0.0
    if first:
        t1 += first * D
    t2 = 0.0
    if _delta(K, x, a):
        t2 += lam * _delta(K, x, a) * _D(K, PointSet((b,), (y,)), lam, opts)
    t3 = 0.0
    if _delta(K, y, b):
        t3 += lam * _delta(K, y, b) * _D(K, PointSet((x,), (a,)), lam, opts)
    t4 = -lam * _delta(K, a, b) * _D(K, PointSet((x,), (y,)), lam, opts)
    t5 = -lam * lam * _D(K, PointSet((x, b), (y, a)), lam, opts)
    return t1 + t2 + t3 + t4 + t5


def dR_dN(K, lam, x, y, a, b, singular_tol=SINGULAR_TOL, resolvent=None):
    """delta R(x, y; lambda) / delta N(a, b) = (d(x-a) + lam R(x,a)) (d(b-y) + lam R(b,y))."""
    R = resolvent if resolvent is not None else resolvent_kernel(K, lam, singular_tol)
    lam = float(lam)
    Rv = R.values
    return (_delta(K, x, a) + lam * Rv[x, a]) * (_delta(K, b, y) + lam * Rv[b, y])


def quotient_rule_dR_dN(K, lam, x, y, a, b, opts=None):
    """delta (D_1 / D) assembled from the minor and determinant derivatives."""
    D = _D(K, None, lam, opts)
    D1 = _D(K, PointSet((x,), (y,)), lam, opts)
    dD1 = dDn_dN(K, PointSet((x,), (y,)), lam, a, b, opts)
    dD = dD_dN(K, lam, a, b, opts)
    return (dD1 * D - D1 * dD) / (D * D)


def delta2_form_dR_dN(K, lam, x, y, a, b, singular_tol=SINGULAR_TOL):
    """The same derivative written with R(x,y)R(b,a) - Delta_2(x b; y a)."""
    R = resolvent_kernel(K, lam, singular_tol).values
    lam = float(lam)
    delta2 = R[x, y] * R[b, a] - R[x, a] * R[b, y]
    return (
        _delta(K, x, a) * _delta(K, y, b)
        + lam * _delta(K, x, a) * R[b, y]
        + lam * _delta(K, y, b) * R[x, a]
        + lam * lam * (R[x, y] * R[b, a] - delta2)
    )


def _perturbed(K, a, b, h):
    values = np.array(K.values)
    values[a, b] += h
    return K.with_values(values)


def _central_difference(f, K, a, b, h):
    scale = K.weights[a] * K.weights[b]
    return (f(_perturbed(K, a, b, h)) - f(_perturbed(K, a, b, -h))) / (2.0 * h * scale)


def richardson(estimates, ratio=10.0, order=2):
    """Richardson table for estimates at steps h, h/ratio, h/ratio^2, ...

    Returns every entry of the table, the raw estimates first.
    """
    table = [list(estimates)]
    k = order
    while len(table[-1]) > 1:
        prev = table[-1]
        factor = ratio**k
        table.append([(factor * prev[i + 1] - prev[i]) / (factor - 1.0) for i in range(len(prev) - 1)])
        k += 2
    return table


def fd_check(K, pts, lam, a, b, h_schedule=DEFAULT_STEPS, opts=None):
    """Compare dDn_dN against Richardson-extrapolated central differences of
    the series under a perturbation of N[a, b]."""
    h_schedule = [float(h) for h in h_schedule]
    if not h_schedule or any(h <= 0 for h in h_schedule) or any(
        h2 >= h1 for h1, h2 in zip(h_schedule, h_schedule[1:])
    ):
        raise ValueError("h_schedule must be non-empty, positive and decreasing")
    pts = _as_points(K, pts)
    opts = opts or SeriesOptions()
    analytic = dDn_dN(K, pts, lam, a, b, opts)

    def f(Kp):
        return minor_series(Kp, pts, lam, opts).value

    raw = [_central_difference(f, K, a, b, h) for h in h_schedule]
    ratio = h_schedule[0] / h_schedule[1] if len(h_schedule) > 1 else 10.0
    table = richardson(raw, ratio)
    best = None
    for level, row in enumerate(table):
        for i, est in enumerate(row):
            err = abs(analytic - est) / max(1.0, abs(analytic))
            if best is None or err < best[0]:
                best = (err, est, h_schedule[i + level] if level else h_schedule[i])
    err, est, h = best
    return DerivativeReport(float(analytic), float(est), float(err), float(h))


def next_minor_from_derivative(K, pts, lam, a, b, derivative, opts=None):
    """Solve the derivative formula for D_{n+1}(xs + b; ys + a) given a value of
    dD_n/dN(a, b) obtained some other way (e.g. finite differences)."""
    lam = float(lam)
    if lam == 0.0:
        raise ValueError("the derivative formula determines D_{n+1} only for lambda != 0")
    t = derivative_terms(K, pts, lam, a, b, opts)
    rest = t["NN"] + t["NI"] + t["IN"] + t["II_diag"]
    return (rest - derivative) / (lam * lam)
