"""Characteristic values and the homogeneous problem at a zero of D(lambda).

At a characteristic value lambda0 of rank nu the solutions of the
homogeneous equation are built from the lowest non-vanishing minor D_nu,
and the inhomogeneous equation is solvable only for right-hand sides
orthogonal to the transposed characteristic functions.  Every minor here is
evaluated by the series, which stays valid where D(lambda0) = 0.
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Tuple

import numpy as np
import scipy.linalg as sla

from .errors import BasePointSearchFailed, NotAnEigenvalue, SolvabilityViolated, ValidationError
from .kernel import PointSet
from .series import (
    determinant_coefficients,
    fredholm_determinant,
    minor_series,
    polynomial_derivative,
)


@dataclass(frozen=True)
class EigenTolerances:
    """Thresholds for the exact dichotomies of the eigen case.

    eig_tol is relative to the largest coefficient of det(I - lambda*A);
    rank_tol is relative to the largest singular value of I - lambda0*A.
    """

    eig_tol: float = 1e-8
    rank_tol: float = 1e-9
    base_tol: float = 1e-10
    solv_tol: float = 1e-8
    # relative spread below which two eigenvalues of A count as one
    cluster_tol: float = 1e-6
    # ties in the max-volume search are resolved towards the lowest index
    tie_tol: float = 1e-8


DEFAULT_TOLERANCES = EigenTolerances()


@dataclass(frozen=True, eq=False)
class EigenCaseReport:
    lam0: float
    rank: int
    base_points: PointSet
    phi: np.ndarray
    psi: np.ndarray
    base_minor_value: float
    multiplicity: int
    residuals: Dict[str, float] = field(default_factory=dict)


def _eigenvalues(K):
    if K.is_symmetric:
        r = np.sqrt(K.weights)
        return sla.eigvalsh(r[:, None] * K.values * r[None, :]).astype(complex)
    return sla.eigvals(K.operator)


def _split(K, tols):
    mu = _eigenvalues(K)
    scale = float(np.max(np.abs(mu), initial=0.0))
    if scale == 0.0:
        return np.zeros(0), np.zeros(0, dtype=complex)
    nonzero = mu[np.abs(mu) > tols.rank_tol * scale]
    real_mask = np.abs(nonzero.imag) <= tols.cluster_tol * scale
    return np.sort(nonzero[real_mask].real), nonzero[~real_mask]


def find_characteristic_values(K, tols=DEFAULT_TOLERANCES) -> List[Tuple[float, int]]:
    """Real characteristic values lambda0 = 1/mu with their algebraic
    multiplicities, ordered by |lambda0|.

    Complex pairs are left out; see :func:`complex_characteristic_values`.
    """
    real, _ = _split(K, tols)
    clusters = []
    for mu in real:
        if clusters and abs(mu - clusters[-1][-1]) <= tols.cluster_tol * max(abs(mu), abs(clusters[-1][-1])):
            clusters[-1].append(mu)
        else:
            clusters.append([mu])
    out = [(float(1.0 / np.mean(c)), len(c)) for c in clusters]
    return sorted(out, key=lambda t: (abs(t[0]), t[0]))


def complex_characteristic_values(K, tols=DEFAULT_TOLERANCES):
    """Advisory list of non-real characteristic values."""
    _, cplx = _split(K, tols)
    return sorted((complex(1.0 / mu) for mu in cplx), key=lambda z: (abs(z), z.real, z.imag))


def _system(K, lam0):
    return np.eye(K.m) - float(lam0) * K.operator


def rank_of(K, lam0, tols=DEFAULT_TOLERANCES):
    """Dimension of the null space of I - lambda0*A from its singular values."""
    s = sla.svdvals(_system(K, lam0))
    nu = int(np.sum(s < tols.rank_tol * s[0]))
    if nu == 0:
        raise NotAnEigenvalue(f"lambda={lam0!r} is not a characteristic value (smallest singular value {s[-1]:.3e})")
    return nu


def null_bases(K, lam0, nu):
    """Right null vectors of I - lambda0*A and the transposed solutions.

    Returns (V, P), both m x nu.  Columns of V solve phi = lambda0 A phi; the
    columns of P solve psi(y) = lambda0 sum_x psi(x) w_x N(x, y).
    """
    U, _, Vt = sla.svd(_system(K, lam0))
    V = Vt[-nu:].T
    # left null vectors l satisfy l = lambda0 (N W)^T l; psi = l / w
    P = U[:, -nu:] / K.weights[:, None]
    return V, P


def polynomial_multiplicity(K, lam0, tol=1e-6):
    """Order of lambda0 as a zero of det(I - lambda*A).

    Derivatives come from the exact polynomial coefficients; the k-th Taylor
    coefficient counts as zero below tol * max|c|.
    """
    c = determinant_coefficients(K)
    scale = float(np.max(np.abs(c)))
    k = 0
    fact = 1.0
    while k < len(c) - 1:
        if abs(polynomial_derivative(c, float(lam0), k)) / fact > tol * scale:
            break
        k += 1
        fact *= k
    return k


def _greedy_rows(B, nu, tie_tol):
    """Greedy max-volume row selection: repeatedly take the row with the
    largest residual norm and project it out of the rest."""
    R = np.array(B, dtype=float)
    chosen = []
    for _ in range(nu):
        norms = np.linalg.norm(R, axis=1)
        norms[chosen] = -1.0
        top = norms.max()
        r = int(np.flatnonzero(norms >= top * (1.0 - tie_tol))[0])
        chosen.append(r)
        q = R[r] / np.linalg.norm(R[r])
        R = R - np.outer(R @ q, q)
    return chosen


def _minor(K, pts, lam0, opts):
    return minor_series(K, pts, lam0, opts).value


def _exhaustive(K, lam0, nu, opts):
    best = (0.0, None)
    for xs in combinations(range(K.m), nu):
        for ys in combinations(range(K.m), nu):
            v = abs(_minor(K, PointSet(xs, ys), lam0, opts))
            if v > best[0]:
                best = (v, PointSet(xs, ys))
    return best


def select_base_points(K, lam0, nu, tols=DEFAULT_TOLERANCES, opts=None, exhaustive=False):
    """Points (xs; ys) with |D_nu(xs; ys | lambda0)| > base_tol.

    The rows are picked by greedy max-volume pivoting on the null basis of
    I - lambda0*A and the columns on the transposed basis; D_nu at lambda0
    factors through these bases, so large volumes give a large minor.  The
    choice is confirmed with the series.  ``exhaustive`` scans all C(m, nu)^2
    sets instead (m <= 8), which is also the fallback if the greedy pick
    fails the threshold.
    """
    if nu < 1 or nu > K.m:
        raise ValidationError(f"rank must lie in 1..{K.m}, got {nu}")
    if not exhaustive:
        V, P = null_bases(K, lam0, nu)
        pts = PointSet(tuple(sorted(_greedy_rows(V, nu, tols.tie_tol))), tuple(sorted(_greedy_rows(P, nu, tols.tie_tol))))
        if abs(_minor(K, pts, lam0, opts)) > tols.base_tol:
            return pts
    if K.m > 8:
        raise BasePointSearchFailed(
            f"no base points with |D_{nu}| > {tols.base_tol:.1e} at lambda={lam0!r}; the rank may be misestimated"
        )
    value, pts = _exhaustive(K, lam0, nu, opts)
    if pts is None or value <= tols.base_tol:
        raise BasePointSearchFailed(
            f"every D_{nu} minor is at most {tols.base_tol:.1e} at lambda={lam0!r}; the rank may be misestimated"
        )
    return pts


def characteristic_functions(K, lam0, base, opts=None):
    """Phi_i(x) = D_nu(x_i -> x; ys) / D_nu(xs; ys), sampled on the grid."""
    base = PointSet(base.xs, base.ys).validate(K.m)
    d = _minor(K, base, lam0, opts)
    nu = base.n
    phi = np.empty((nu, K.m))
    for i in range(nu):
        for x in range(K.m):
            phi[i, x] = _minor(K, base.with_row(i, x), lam0, opts) / d
    return phi


def transposed_characteristic_functions(K, lam0, base, opts=None):
    """Psi_i(y) = D_nu(xs; y_i -> y) / D_nu(xs; ys)."""
    base = PointSet(base.xs, base.ys).validate(K.m)
    d = _minor(K, base, lam0, opts)
    nu = base.n
    psi = np.empty((nu, K.m))
    for i in range(nu):
        for y in range(K.m):
            psi[i, y] = _minor(K, base.with_col(i, y), lam0, opts) / d
    return psi


def solvability(K, lam0, f, psi=None, base=None, tols=DEFAULT_TOLERANCES, opts=None):
    """Orthogonality of f to the transposed characteristic functions.

    Returns (ok, defects) with defects_i = sum_j w_j Psi_i(x_j) f(x_j).
    """
    f = _check_rhs(K, f)
    if psi is None:
        if base is None:
            base = select_base_points(K, lam0, rank_of(K, lam0, tols), tols, opts)
        psi = transposed_characteristic_functions(K, lam0, base, opts)
    defects = psi @ (K.weights * f)
    fmax = float(np.max(np.abs(f), initial=0.0))
    ok = bool(np.all(np.abs(defects) <= tols.solv_tol * fmax))
    return ok, defects


def _check_rhs(K, f):
    f = np.asarray(f, dtype=float)
    if f.shape != (K.m,):
        raise ValidationError(f"right-hand side has shape {f.shape}, grid has {K.m} nodes")
    return f


def particular_solution(K, lam0, base, f, tols=DEFAULT_TOLERANCES, opts=None, check=True):
    """phi_p = f + lambda0 sum_j w_j D_{nu+1}(x, xs; x_j, ys) / D_nu(xs; ys) f(x_j).

    Raises :class:`SolvabilityViolated` when f is not orthogonal to the
    transposed characteristic functions.
    """
    f = _check_rhs(K, f)
    base = PointSet(base.xs, base.ys).validate(K.m)
    if check:
        ok, defects = solvability(K, lam0, f, base=base, tols=tols, opts=opts)
        if not ok:
            raise SolvabilityViolated(defects)
    d = _minor(K, base, lam0, opts)
    wf = K.weights * f
    support = np.flatnonzero(wf)
    kernel = np.zeros((K.m, K.m))
    for x in range(K.m):
        for j in support:
            kernel[x, j] = _minor(K, base.prepend(x, int(j)), lam0, opts)
    return f + float(lam0) * (kernel @ wf) / d


def homogeneous_residual(K, lam0, phi):
    """max_i ||(I - lambda0*A) Phi_i||_inf / ||Phi_i||_inf."""
    return _relative_images(_system(K, lam0), phi)


def transposed_residual(K, lam0, psi):
    """Same for psi = lambda0 psi W N."""
    M = np.eye(K.m) - float(lam0) * (K.weights[:, None] * K.values).T
    return _relative_images(M, psi)


def _relative_images(M, vecs):
    worst = 0.0
    for v in np.atleast_2d(vecs):
        scale = float(np.max(np.abs(v)))
        if scale > 0:
            worst = max(worst, float(np.max(np.abs(M @ v))) / scale)
    return worst


def null_projection_residual(basis, vecs):
    """Largest relative part of ``vecs`` outside the column span of ``basis``."""
    Q, _ = np.linalg.qr(basis)
    worst = 0.0
    for v in np.atleast_2d(vecs):
        r = v - Q @ (Q.T @ v)
        worst = max(worst, float(np.linalg.norm(r) / max(np.linalg.norm(v), 1e-300)))
    return worst


def normalization_residual(vecs, rows):
    """max |Phi_i(x_k) - delta_ik| over the base points."""
    vecs = np.atleast_2d(vecs)
    return float(np.max(np.abs(vecs[:, list(rows)] - np.eye(len(rows))), initial=0.0))


def eigen_case(K, lam0, tols=DEFAULT_TOLERANCES, opts=None, exhaustive=False):
    """Full report at a characteristic value: rank, base points, Phi, Psi."""
    lam0 = float(lam0)
    coeff_scale = float(np.max(np.abs(determinant_coefficients(K))))
    D = fredholm_determinant(K, lam0)
    if abs(D) > tols.eig_tol * coeff_scale:
        raise NotAnEigenvalue(f"D({lam0!r}) = {D:.3e} exceeds eig_tol; not a characteristic value")
    nu = rank_of(K, lam0, tols)
    base = select_base_points(K, lam0, nu, tols, opts, exhaustive)
    phi = characteristic_functions(K, lam0, base, opts)
    psi = transposed_characteristic_functions(K, lam0, base, opts)
    V, P = null_bases(K, lam0, nu)
    residuals = {
        "determinant": abs(D),
        "normalization_phi": normalization_residual(phi, base.xs),
        "normalization_psi": normalization_residual(psi, base.ys),
        "homogeneous": homogeneous_residual(K, lam0, phi),
        "transposed": transposed_residual(K, lam0, psi),
        "null_projection_phi": null_projection_residual(V, phi),
        "null_projection_psi": null_projection_residual(P, psi),
    }
    return EigenCaseReport(
        lam0=lam0,
        rank=nu,
        base_points=base,
        phi=phi,
        psi=psi,
        base_minor_value=_minor(K, base, lam0, opts),
        multiplicity=polynomial_multiplicity(K, lam0),
        residuals=residuals,
    )
