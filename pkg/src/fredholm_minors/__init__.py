"""Fredholm determinants, minors of arbitrary order and resolvent kernels of
linear integral equations, evaluated on quadrature grids.

Three independent routes give the minors: Fredholm's series, determinants
of the resolvent, and Berezin integration over a finite Grassmann algebra.
"""

from ._backend import BACKEND
from .derivative import DerivativeReport, dD1_dN, dD_dN, dDn_dN, dR_dN, fd_check, next_minor_from_derivative
from .eigencase import (
    EigenCaseReport,
    EigenTolerances,
    characteristic_functions,
    complex_characteristic_values,
    eigen_case,
    find_characteristic_values,
    particular_solution,
    rank_of,
    select_base_points,
    solvability,
    transposed_characteristic_functions,
)
from .errors import (
    BasePointSearchFailed,
    FredholmError,
    NotAnEigenvalue,
    NumericalFailure,
    OracleTooLarge,
    SeriesNotConverged,
    SingularAtLambda,
    SolvabilityViolated,
    ValidationError,
)
from .grassmann import GrassmannElement, berezin_integrate, grassmann_correlator, grassmann_partition, minor_oracle
from .kernel import (
    DiscreteKernel,
    Domain,
    KernelSpec,
    PointSet,
    QuadratureGrid,
    discrete_kernel,
    discretize,
    hadamard_minor,
    make_grid,
)
from .minors import NormalizedMinor, minor_determinantal, normalized_minor
from .resolvent import ResolventKernel, nystrom_offgrid, resolvent_kernel, solve_unique
from .series import (
    MinorValue,
    SeriesOptions,
    determinant_coefficients,
    determinant_derivative,
    determinant_series,
    fredholm_determinant,
    minor_series,
    second_series,
    trace_identity_residual,
)

__version__ = "0.1.0"
