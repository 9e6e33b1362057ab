"""The discrete operator of the finite-difference scheme.

For a mesh function ``x`` in E the scheme reads, at interior nodes
``k = 1..n-1``,

    -Delta^2 x(k-1) + f(k/n, n Delta x(k-1), x(k)) / n^2 = h(k/n) / n^2,

with the backward difference ``n (x(k) - x(k-1))`` standing in for ``x'``.
The equation at ``k = n`` would reference node ``n + 1`` and is tested
against ``y(n) = 0`` in the weak form, so it carries no information.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Grid, MeshFunction, NodeLoad, _check_same_grid, tridiagonal_solve
from .problems import Nonlinearity, RhsFunction


class MissingPartialsError(ValueError):
    pass


@dataclass(frozen=True)
class DiscreteProblem:
    f: Nonlinearity
    h: RhsFunction
    grid: Grid

    def __post_init__(self):
        ends = np.asarray(self.h(np.array([0.0, 1.0])), dtype=float) * np.ones(2)
        if np.max(np.abs(ends)) > 1e-12:
            raise ValueError("forcing must vanish at both endpoints")

    @property
    def n(self) -> int:
        return self.grid.n

    def load(self) -> NodeLoad:
        """Nodal load ``h(k/n) / n^2`` for ``k = 1..n-1``."""
        t = self.grid.interior
        return NodeLoad(self.grid, np.asarray(self.h(t), dtype=float) * np.ones_like(t)
                        / self.n**2)

    def with_forcing(self, h: RhsFunction) -> "DiscreteProblem":
        return DiscreteProblem(self.f, h, self.grid)


@dataclass(frozen=True)
class Tridiagonal:
    """Band storage for an ``(n-1) x (n-1)`` tridiagonal matrix.

    ``sub[i]`` couples row ``i + 1`` to column ``i``; ``sup[i]`` couples row
    ``i`` to column ``i + 1``.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def __post_init__(self):
        m = len(self.diag)
        if len(self.sub) != m - 1 or len(self.sup) != m - 1:
            raise ValueError("band lengths inconsistent with diagonal")

    def solve(self, rhs) -> np.ndarray:
        return tridiagonal_solve(self.sub, self.diag, self.sup, rhs)

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = self.diag * x
        y[1:] += self.sub * x[:-1]
        y[:-1] += self.sup * x[1:]
        return y

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.sub, -1) + np.diag(self.sup, 1)


def _arguments(grid: Grid, x: MeshFunction):
    """``(t_k, n Delta x(k-1), x(k))`` at interior nodes."""
    v = x.values
    n = grid.n
    return grid.interior, n * (v[1:-1] - v[:-2]), v[1:-1]


def _f_values(f: Nonlinearity, x: MeshFunction) -> np.ndarray:
    t, slope, val = _arguments(x.grid, x)
    return np.asarray(f(t, slope, val), dtype=float) * np.ones_like(t)


def residual(p: DiscreteProblem, x: MeshFunction) -> np.ndarray:
    """Strong-form defect at ``k = 1..n-1``; zero exactly at the discrete solution."""
    if x.grid != p.grid:
        raise ValueError("mesh function lives on a different grid")
    v = x.values
    n2 = float(p.n) ** 2
    lap = -(v[2:] - 2.0 * v[1:-1] + v[:-2])
    h = np.asarray(p.h(p.grid.interior), dtype=float)
    return lap + (_f_values(p.f, x) - h) / n2


def operator_pairing(f: Nonlinearity, x: MeshFunction, y: MeshFunction) -> float:
    """``<Kx, y>`` with ``K`` the unforced discrete operator for ``f``."""
    _check_same_grid(x, y)
    n2 = float(x.n) ** 2
    return float(np.dot(np.diff(x.values), np.diff(y.values))
                 + np.dot(y.values[1:-1], _f_values(f, x)) / n2)


def weak_pairing(p: DiscreteProblem, x: MeshFunction, y: MeshFunction) -> float:
    """``<Kx, y> - (1/n^2) sum_k y(k) h(k/n)``.

    By summation by parts this equals ``sum_k y(k) residual(p, x)[k]``.
    """
    _check_same_grid(x, y)
    return operator_pairing(p.f, x, y) - float(np.dot(y.values[1:-1], p.load().loads))


def jacobian(p: DiscreteProblem, x: MeshFunction) -> Tridiagonal:
    """Derivative of :func:`residual` with respect to the interior values."""
    f = p.f
    if not f.has_partials:
        raise MissingPartialsError(f"nonlinearity {f.id!r} has no partial derivatives")
    n = float(p.n)
    t, slope, val = _arguments(p.grid, x)
    ones = np.ones_like(t)
    fv = np.asarray(f.partial_v(t, slope, val), dtype=float) * ones
    fx = np.asarray(f.partial_x(t, slope, val), dtype=float) * ones
    diag = 2.0 + fv / n + fx / n**2
    # row k couples to x(k-1) through both the Laplacian and the slope argument
    sub = -1.0 - fv[1:] / n
    sup = -np.ones(len(t) - 1)
    return Tridiagonal(sub, diag, sup)


def jacobian_row_sub(p: DiscreteProblem, x: MeshFunction) -> np.ndarray:
    """Full per-row ``sub`` coefficients, including row 1 whose column is the boundary."""
    f = p.f
    if not f.has_partials:
        raise MissingPartialsError(f"nonlinearity {f.id!r} has no partial derivatives")
    t, slope, val = _arguments(p.grid, x)
    return -1.0 - np.asarray(f.partial_v(t, slope, val), dtype=float) * np.ones_like(t) / p.n
