"""Uniform grids, mesh functions and the discrete calculus of the space E.

E is the space of mesh functions on nodes ``0..n`` that vanish at both
endpoints. Its inner product is built from forward differences,

    <u, v>_E = sum_{k=1}^{n} (u(k) - u(k-1)) (v(k) - v(k-1)),

so the Riesz map of a nodal load is a discrete Poisson solve.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

PIVOT_TOL = 1e-14


class SingularSystemError(ArithmeticError):
    """Raised when tridiagonal elimination meets a vanishing pivot."""


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform mesh of ``[0, 1]`` with ``n`` subintervals."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"grid needs an integer n >= 2, got {self.n!r}")

    @property
    def h_step(self) -> float:
        return 1.0 / self.n

    def node(self, k):
        return np.asarray(k) / self.n

    @property
    def nodes(self) -> np.ndarray:
        t = np.arange(self.n + 1) / self.n
        t[-1] = 1.0
        return t

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    def zeros(self) -> "MeshFunction":
        return MeshFunction(self, np.zeros(self.n + 1))


class MeshFunction:
    """Element of E: values at nodes ``0..n`` with zero boundary values.

    The value array is copied and frozen on construction.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.array(values, dtype=float)
        if values.shape != (grid.n + 1,):
            raise ValueError(
                f"expected {grid.n + 1} nodal values, got shape {values.shape}"
            )
        if values[0] != 0.0 or values[-1] != 0.0:
            raise ValueError("mesh function must vanish at nodes 0 and n")
        values.flags.writeable = False
        self.grid = grid
        self.values = values

    @classmethod
    def from_interior(cls, grid: Grid, interior) -> "MeshFunction":
        interior = np.asarray(interior, dtype=float)
        if interior.shape != (grid.n - 1,):
            raise ValueError(f"expected {grid.n - 1} interior values")
        return cls(grid, np.concatenate(([0.0], interior, [0.0])))

    @classmethod
    def sample(cls, grid: Grid, func) -> "MeshFunction":
        """Sample ``func`` at interior nodes; boundary values are set to zero."""
        return cls.from_interior(grid, np.asarray(func(grid.interior), dtype=float)
                                 * np.ones(grid.n - 1))

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def interior(self) -> np.ndarray:
        return self.values[1:-1]

    def __len__(self):
        return self.values.size

    def __getitem__(self, k):
        return self.values[k]

    def __add__(self, other: "MeshFunction") -> "MeshFunction":
        _check_same_grid(self, other)
        return MeshFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "MeshFunction") -> "MeshFunction":
        _check_same_grid(self, other)
        return MeshFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "MeshFunction":
        return MeshFunction(self.grid, float(scalar) * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "MeshFunction":
        return MeshFunction(self.grid, -self.values)

    def __repr__(self):
        return f"MeshFunction(n={self.n}, values={self.values!r})"


@dataclass(frozen=True)
class NodeLoad:
    """Coefficients of the functional ``y -> sum_{k=1}^{n-1} y(k) loads(k)``."""

    grid: Grid
    loads: np.ndarray

    def __post_init__(self):
        loads = np.array(self.loads, dtype=float)
        if loads.shape != (self.grid.n - 1,):
            raise ValueError(f"expected {self.grid.n - 1} loads, got {loads.shape}")
        loads.flags.writeable = False
        object.__setattr__(self, "loads", loads)


def _check_same_grid(u: MeshFunction, v: MeshFunction):
    if u.grid != v.grid:
        raise GridMismatchError(f"grid mismatch: n={u.n} vs n={v.n}")


def forward_difference(u: MeshFunction) -> np.ndarray:
    """Entries ``u(k) - u(k-1)`` for ``k = 1..n`` (array position ``k-1``)."""
    return np.diff(u.values)


def second_difference(u: MeshFunction) -> np.ndarray:
    """Entries ``u(k+1) - 2u(k) + u(k-1)`` for ``k = 1..n-1``."""
    v = u.values
    return v[2:] - 2.0 * v[1:-1] + v[:-2]


def inner_e(u: MeshFunction, v: MeshFunction) -> float:
    _check_same_grid(u, v)
    return float(np.dot(np.diff(u.values), np.diff(v.values)))


def norm_e(u: MeshFunction) -> float:
    return float(np.sqrt(np.sum(np.diff(u.values) ** 2)))


def norm_0(u: MeshFunction) -> float:
    return float(np.sqrt(np.sum(u.values[1:] ** 2)))


def tridiagonal_solve(
    sub: Sequence[float],
    diag: Sequence[float],
    sup: Sequence[float],
    rhs: Sequence[float],
) -> np.ndarray:
    """Solve a tridiagonal system by elimination without pivoting.

    Row ``i`` reads ``sub[i-1] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]``,
    so ``sub`` and ``sup`` have one entry fewer than ``diag``.

    Raises:
        SingularSystemError: if a pivot falls below ``1e-14`` in magnitude.
    """
    diag = np.asarray(diag, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    m = diag.size
    sub = np.asarray(sub, dtype=float).reshape(-1)
    sup = np.asarray(sup, dtype=float).reshape(-1)
    if rhs.shape != (m,) or sub.size != m - 1 or sup.size != m - 1:
        raise ValueError("inconsistent band lengths")

    # plain floats in the sweep; numpy scalar indexing is the bottleneck otherwise
    a = sub.tolist()
    b = diag.tolist()
    c = sup.tolist()
    d = rhs.tolist()
    cp = [0.0] * m
    dp = [0.0] * m
    piv = b[0]
    if abs(piv) < PIVOT_TOL:
        raise SingularSystemError(f"pivot {piv!r} at row 0")
    cp[0] = c[0] / piv if m > 1 else 0.0
    dp[0] = d[0] / piv
    for i in range(1, m):
        piv = b[i] - a[i - 1] * cp[i - 1]
        if abs(piv) < PIVOT_TOL:
            raise SingularSystemError(f"pivot {piv!r} at row {i}")
        if i < m - 1:
            cp[i] = c[i] / piv
        dp[i] = (d[i] - a[i - 1] * dp[i - 1]) / piv
    x = [0.0] * m
    x[-1] = dp[-1]
    for i in range(m - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return np.array(x)


def laplacian_bands(n: int):
    """Bands of ``-Delta^2`` acting on the ``n - 1`` interior unknowns."""
    m = n - 1
    return -np.ones(m - 1), 2.0 * np.ones(m), -np.ones(m - 1)


def riesz_representative(w) -> MeshFunction:
    """Element ``rho`` of E with ``<rho, y>_E = sum_k y(k) loads(k)`` for all y.

    Accepts a :class:`NodeLoad`; ``rho`` solves ``-Delta^2 rho(k-1) = loads(k)``.
    """
    grid = w.grid
    sub, diag, sup = laplacian_bands(grid.n)
    return MeshFunction.from_interior(grid, tridiagonal_solve(sub, diag, sup, w.loads))
