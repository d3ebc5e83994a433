"""Domains, quadrature grids, kernel specifications and discretized kernels.

Every computation in the package consumes a :class:`DiscreteKernel`: the
kernel sampled on a quadrature grid together with the weights that turn
integrals over the domain into weighted sums.  A discrete domain of ``m``
points with unit weights is the exact case in which every Fredholm series
terminates.
"""

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from . import _backend
from .errors import ValidationError

DISCRETE = "discrete"
INTERVAL = "interval"

TRAPEZOID = "trapezoid"
GAUSS_LEGENDRE = "gauss-legendre"
UNIT = "unit"
RULES = (TRAPEZOID, GAUSS_LEGENDRE, UNIT)

BUILTINS = ("xy", "ones", "min", "exp-product")

# closed forms usable as factors of a separable kernel sum_k u_k(x) v_k(y)
CLOSED_FORMS = {
    "one": np.ones_like,
    "x": lambda x: np.array(x, dtype=float),
    "x2": lambda x: np.asarray(x, dtype=float) ** 2,
    "x3": lambda x: np.asarray(x, dtype=float) ** 3,
    "exp": np.exp,
    "exp-neg": lambda x: np.exp(-np.asarray(x, dtype=float)),
    "sin": np.sin,
    "cos": np.cos,
}


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Domain:
    """Either a bounded interval ``[a, b]`` or ``m`` abstract unit-weight points."""

    mode: str
    a: float = 0.0
    b: float = 1.0
    m: Optional[int] = None

    def __post_init__(self):
        if self.mode == INTERVAL:
            if not (np.isfinite(self.a) and np.isfinite(self.b) and self.a < self.b):
                raise ValidationError(f"interval needs finite a < b, got [{self.a}, {self.b}]")
        elif self.mode == DISCRETE:
            if self.m is None or int(self.m) != self.m or self.m < 1:
                raise ValidationError(f"discrete domain needs a positive size, got {self.m!r}")
        else:
            raise ValidationError(f"unknown domain mode {self.mode!r}")

    @classmethod
    def interval(cls, a, b):
        return cls(INTERVAL, a=float(a), b=float(b))

    @classmethod
    def discrete(cls, m):
        return cls(DISCRETE, m=int(m))

    @property
    def volume(self):
        return float(self.m) if self.mode == DISCRETE else self.b - self.a

    @property
    def is_discrete(self):
        return self.mode == DISCRETE


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    domain: Domain
    nodes: np.ndarray
    weights: np.ndarray
    rule: str

    def __post_init__(self):
        nodes = _readonly(self.nodes)
        weights = _readonly(self.weights)
        if nodes.ndim != 1 or nodes.shape != weights.shape or len(nodes) == 0:
            raise ValidationError("nodes and weights must be equal-length 1-d arrays")
        if np.any(np.diff(nodes) <= 0):
            raise ValidationError("quadrature nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ValidationError("quadrature weights must be positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def m(self):
        return len(self.nodes)

    @property
    def is_discrete(self):
        return self.domain.is_discrete


def make_grid(domain, rule, m):
    """Quadrature grid with ``m`` nodes on ``domain``.

    ``unit`` is the only rule allowed on a discrete domain (nodes
    ``0..m-1``, weights 1) and is rejected on an interval.
    """
    if int(m) != m or m < 1:
        raise ValidationError(f"grid size must be a positive integer, got {m!r}")
    m = int(m)
    if rule not in RULES:
        raise ValidationError(f"unknown quadrature rule {rule!r}")
    if domain.is_discrete:
        if rule != UNIT:
            raise ValidationError("discrete domains use the unit rule")
        if m != domain.m:
            raise ValidationError(f"discrete domain has {domain.m} points, grid asked for {m}")
        return QuadratureGrid(domain, np.arange(m, dtype=float), np.ones(m), UNIT)
    if rule == UNIT:
        raise ValidationError("the unit rule only applies to discrete domains")
    a, b = domain.a, domain.b
    if rule == TRAPEZOID:
        if m < 2:
            raise ValidationError("trapezoid rule needs at least 2 nodes")
        nodes = np.linspace(a, b, m)
        h = (b - a) / (m - 1)
        weights = np.full(m, h)
        weights[0] = weights[-1] = h / 2
        return QuadratureGrid(domain, nodes, weights, TRAPEZOID)
    t, wt = np.polynomial.legendre.leggauss(m)
    half = 0.5 * (b - a)
    return QuadratureGrid(domain, half * t + 0.5 * (a + b), half * wt, GAUSS_LEGENDRE)


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """How to evaluate N(x, y).

    Build with :meth:`builtin`, :meth:`separable` or :meth:`matrix`.
    Matrix literals only exist on the grid they were given for.
    """

    kind: str
    name: Optional[str] = None
    params: Mapping[str, float] = field(default_factory=dict)
    u: Sequence[str] = ()
    v: Sequence[str] = ()
    values: Optional[np.ndarray] = None

    @classmethod
    def builtin(cls, name, **params):
        if name not in BUILTINS:
            raise ValidationError(f"unknown builtin kernel {name!r}; choose from {BUILTINS}")
        allowed = {"scale"} | ({"c"} if name == "exp-product" else set())
        extra = set(params) - allowed
        if extra:
            raise ValidationError(f"builtin {name!r} does not take {sorted(extra)}")
        return cls("builtin", name=name, params=dict(params))

    @classmethod
    def separable(cls, u, v):
        u, v = tuple(u), tuple(v)
        if len(u) != len(v) or not u:
            raise ValidationError("separable kernel needs equally many u and v factors")
        for f in u + v:
            if f not in CLOSED_FORMS:
                raise ValidationError(f"unknown closed form {f!r}; choose from {sorted(CLOSED_FORMS)}")
        return cls("separable", u=u, v=v)

    @classmethod
    def matrix(cls, values):
        values = _readonly(values)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValidationError("matrix kernel must be square")
        return cls("matrix", values=values)

    @property
    def evaluable_off_grid(self):
        return self.kind != "matrix"

    def __call__(self, x, y):
        """Evaluate at points (broadcasting numpy arrays)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "builtin":
            scale = float(self.params.get("scale", 1.0))
            if self.name == "xy":
                out = x * y
            elif self.name == "ones":
                out = np.ones(np.broadcast(x, y).shape)
            elif self.name == "min":
                out = np.minimum(x, y)
            else:
                out = np.exp(float(self.params.get("c", 1.0)) * x * y)
            return scale * out
        if self.kind == "separable":
            out = 0.0
            for uf, vf in zip(self.u, self.v):
                out = out + CLOSED_FORMS[uf](x) * CLOSED_FORMS[vf](y)
            return np.broadcast_to(out, np.broadcast(x, y).shape) * 1.0
        raise ValidationError("matrix kernels cannot be evaluated off the grid")

    def analytic_bound(self, grid):
        """Sup of |N| over the domain for builtins; None otherwise."""
        if self.kind != "builtin":
            return None
        if grid.is_discrete:
            lo, hi = 0.0, float(grid.m - 1)
        else:
            lo, hi = grid.domain.a, grid.domain.b
        scale = abs(float(self.params.get("scale", 1.0)))
        r = max(abs(lo), abs(hi))
        if self.name == "xy":
            return scale * r * r
        if self.name == "ones":
            return scale
        if self.name == "min":
            return scale * r
        c = float(self.params.get("c", 1.0))
        corners = [c * s * t for s in (lo, hi) for t in (lo, hi)]
        return scale * float(np.exp(max(corners)))


@dataclass(frozen=True, eq=False)
class DiscreteKernel:
    """Kernel values ``values[i, j] = N(x_i, x_j)`` on a quadrature grid."""

    grid: QuadratureGrid
    values: np.ndarray
    bound: float
    spec: Optional[KernelSpec] = None

    def __post_init__(self):
        values = np.ascontiguousarray(_readonly(self.values))
        values.setflags(write=False)
        m = self.grid.m
        if values.shape != (m, m):
            raise ValidationError(f"kernel values have shape {values.shape}, grid has {m} nodes")
        if not np.all(np.isfinite(values)):
            raise ValidationError("kernel has non-finite values on the grid")
        object.__setattr__(self, "values", values)

    @property
    def m(self):
        return self.grid.m

    @property
    def weights(self):
        return self.grid.weights

    @property
    def operator(self):
        """Matrix of the discretized integral operator, ``N[i, j] * w[j]``."""
        return self.values * self.weights[None, :]

    @property
    def is_symmetric(self):
        return bool(np.array_equal(self.values, self.values.T))

    @property
    def is_discrete(self):
        return self.grid.is_discrete

    def with_values(self, values):
        """Same grid, new values (used for perturbations)."""
        values = np.asarray(values, dtype=float)
        return DiscreteKernel(self.grid, values, float(np.max(np.abs(values), initial=0.0)), None)


def discretize(spec, grid):
    if spec.kind == "matrix":
        values = spec.values
        if values.shape != (grid.m, grid.m):
            raise ValidationError(f"matrix kernel is {values.shape[0]}x{values.shape[1]}, grid has {grid.m} nodes")
    else:
        x = grid.nodes
        values = spec(x[:, None], x[None, :])
    values = np.array(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValidationError("kernel evaluates to a non-finite value on the grid")
    bound = spec.analytic_bound(grid)
    if bound is None:
        bound = float(np.max(np.abs(values), initial=0.0))
    return DiscreteKernel(grid, values, bound, spec)


def discrete_kernel(values):
    """Convenience: a matrix kernel on the unit-weight discrete domain."""
    values = np.asarray(values, dtype=float)
    grid = make_grid(Domain.discrete(values.shape[0]), UNIT, values.shape[0])
    return discretize(KernelSpec.matrix(values), grid)


def _check_indices(K, idx, what):
    idx = np.asarray(idx, dtype=np.int64).reshape(-1)
    if np.any(idx < 0) or np.any(idx >= K.m):
        raise ValidationError(f"{what} indices {idx.tolist()} out of range for m={K.m}")
    return np.ascontiguousarray(idx)


def hadamard_minor(K, xs, ys):
    """det_{ij} N(x_i, y_j) over grid indices."""
    xs = _check_indices(K, xs, "row")
    ys = _check_indices(K, ys, "column")
    if len(xs) != len(ys) or len(xs) == 0:
        raise ValidationError("row and column index lists must have equal positive length")
    if len(set(xs.tolist())) < len(xs) or len(set(ys.tolist())) < len(ys):
        return 0.0
    empty = np.zeros(0, dtype=np.int64)
    return float(_backend.subset_minor_sums(K.values, K.weights, xs, ys, empty, 0, 0, 0)[0])


def hadamard_bound(n, M):
    """|det| <= n^(n/2) M^n for an n x n matrix with entries bounded by M."""
    return float(n) ** (0.5 * n) * float(M) ** n


@dataclass(frozen=True)
class PointSet:
    """Row indices ``xs`` and column indices ``ys`` selecting a minor.

    Duplicates are allowed (the minor then vanishes).  The empty point set
    stands for the zeroth minor, i.e. D(lambda) itself.
    """

    xs: tuple
    ys: tuple

    def __post_init__(self):
        xs = tuple(int(i) for i in self.xs)
        ys = tuple(int(j) for j in self.ys)
        if len(xs) != len(ys):
            raise ValidationError(f"point set needs as many rows as columns, got {len(xs)} and {len(ys)}")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @classmethod
    def diagonal(cls, xs):
        return cls(tuple(xs), tuple(xs))

    def __len__(self):
        return len(self.xs)

    @property
    def n(self):
        return len(self.xs)

    @property
    def has_duplicates(self):
        return len(set(self.xs)) < self.n or len(set(self.ys)) < self.n

    def validate(self, m):
        for i in self.xs + self.ys:
            if not 0 <= i < m:
                raise ValidationError(f"point index {i} out of range for a grid of {m} nodes")
        return self

    def omit(self, i, k):
        """Drop row position ``i`` and column position ``k``."""
        return PointSet(self.xs[:i] + self.xs[i + 1:], self.ys[:k] + self.ys[k + 1:])

    def with_row(self, i, x):
        return PointSet(self.xs[:i] + (x,) + self.xs[i + 1:], self.ys)

    def with_col(self, j, y):
        return PointSet(self.xs, self.ys[:j] + (y,) + self.ys[j + 1:])

    def append(self, x, y):
        return PointSet(self.xs + (x,), self.ys + (y,))

    def prepend(self, x, y):
        return PointSet((x,) + self.xs, (y,) + self.ys)
