"""Resolvent kernel and the unique solution when D(lambda) != 0."""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import SingularAtLambda, ValidationError
from .series import determinant_derivative, fredholm_determinant

SINGULAR_TOL = 1e-12
# condition number of I - lambda*A above which a warning is emitted
COND_WARN = 1e8


class NearSingularWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class ResolventKernel:
    """R(x_i, x_j; lambda) on the grid, with the LU factors of I - lambda*A.

    The factors are kept so further right-hand sides can be solved without
    refactoring.
    """

    lam: float
    values: np.ndarray
    det_at_lambda: float
    condition: float
    lu: tuple
    system: np.ndarray

    def solve(self, rhs):
        """Solve (I - lambda*A) u = rhs with one refinement step."""
        return _refined_solve(self.lu, self.system, rhs)


def _refined_solve(lu, M, rhs):
    x = sla.lu_solve(lu, rhs)
    r = rhs - M @ x
    return x + sla.lu_solve(lu, r)


def _check_singular(K, lam, singular_tol):
    D = fredholm_determinant(K, lam)
    # D(0) = 1, so the scaled threshold is singular_tol * max(1, |D(0)|)
    if not abs(D) > singular_tol:
        raise SingularAtLambda(lam, D)
    return D


def resolvent_kernel(K, lam, singular_tol=SINGULAR_TOL):
    """R = (I - lambda*N*W)^(-1) N, from LU solves against the columns of N.

    Raises :class:`SingularAtLambda` when |D(lambda)| <= singular_tol.
    """
    lam = float(lam)
    D = _check_singular(K, lam, singular_tol)
    m = K.m
    M = np.eye(m) - lam * K.operator
    lu = sla.lu_factor(M)
    N = np.array(K.values)
    if lam == 0.0:
        R = N
        cond = 1.0
    else:
        R = _refined_solve(lu, M, N)
        cond = float(np.linalg.cond(M))
        if K.is_symmetric:
            R = 0.5 * (R + R.T)
    if cond > COND_WARN:
        warnings.warn(
            f"I - lambda*A is ill-conditioned at lambda={lam} (cond={cond:.2e})",
            NearSingularWarning,
            stacklevel=2,
        )
    R.setflags(write=False)
    return ResolventKernel(lam, R, D, cond, lu, M)


def solve_unique(K, f, lam, singular_tol=SINGULAR_TOL, resolvent=None):
    """phi = f + lambda * R W f, the unique solution of the discretized equation."""
    f = np.asarray(f, dtype=float)
    if f.shape != (K.m,):
        raise ValidationError(f"right-hand side has shape {f.shape}, grid has {K.m} nodes")
    lam = float(lam)
    R = resolvent if resolvent is not None else resolvent_kernel(K, lam, singular_tol)
    if lam == 0.0:
        return f.copy()
    return f + lam * (R.values @ (K.weights * f))


def equation_residual(K, phi, f, lam):
    """max |phi - f - lambda * N W phi|."""
    phi = np.asarray(phi, dtype=float)
    return float(np.max(np.abs(phi - f - lam * (K.operator @ phi)), initial=0.0))


def inverse_identity_residual(K, R):
    """Max entry of (I - lambda*A)(I + lambda*R W) - I and of the reversed product."""
    m = K.m
    lam = R.lam
    left = np.eye(m) - lam * K.operator
    right = np.eye(m) + lam * R.values * K.weights[None, :]
    a = np.max(np.abs(left @ right - np.eye(m)))
    b = np.max(np.abs(right @ left - np.eye(m)))
    return float(max(a, b))


def resolvent_trace_residual(K, lam, singular_tol=SINGULAR_TOL):
    """|tr(R W) + D'(lambda)/D(lambda)| / max(1, |D'/D|).

    D' comes from the exact polynomial coefficients of det(I - lambda*A).
    """
    R = resolvent_kernel(K, lam, singular_tol)
    trace = float(np.sum(K.weights * np.diag(R.values)))
    log_deriv = determinant_derivative(K, lam, 1) / R.det_at_lambda
    return abs(trace + log_deriv) / max(1.0, abs(log_deriv))


def nystrom_offgrid(K, spec, R, x, y):
    """R(x, y; lambda) at arbitrary points of the interval.

    Uses R = N + lambda N W N + lambda^2 N W R W N with the on-grid R in the
    middle; it reproduces the grid values at the nodes.
    """
    if K.is_discrete:
        raise ValidationError("off-grid evaluation needs an interval domain")
    if not spec.evaluable_off_grid:
        raise ValidationError("matrix kernels cannot be evaluated off the grid")
    nodes, w = K.grid.nodes, K.weights
    lam = R.lam
    nx = spec(float(x), nodes) * w
    ny = spec(nodes, float(y)) * w
    base = float(spec(float(x), float(y)))
    if lam == 0.0:
        return base
    return base + lam * float(nx @ spec(nodes, float(y))) + lam * lam * float(nx @ R.values @ ny)
