"""Interpolants, convergence metrics, bound reports and rate fits."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .mesh import MeshFunction, norm_0, norm_e
from .problems import sup_norm
from .system import DiscreteProblem

CHAIN_TOL = 1e-10


@dataclass(frozen=True)
class InterpolantPair:
    """Piecewise affine reconstructions of a mesh function and its slope.

    ``x_bar`` interpolates the nodal values. ``v_bar`` runs from
    ``n Delta x(k-1)`` at ``k/n`` to ``n Delta x(k)`` at ``(k+1)/n`` and is
    constant on the first cell.
    """

    source: MeshFunction

    @property
    def n(self) -> int:
        return self.source.n

    def _cell(self, t, last):
        t = np.asarray(t, dtype=float)
        return t, np.clip(np.floor(t * self.n).astype(int), 0, last)

    def x_bar(self, t):
        v = self.source.values
        n = self.n
        t, k = self._cell(t, n - 1)
        s = t * n - k
        out = (1.0 - s) * v[k] + s * v[k + 1]
        # nodes reproduce the source values bit for bit
        r = np.rint(t * n)
        on_node = (np.abs(t * n - r) <= 4 * np.finfo(float).eps * n) & (r >= 0) & (r <= n)
        return np.where(on_node, v[np.clip(r, 0, n).astype(int)], out)

    def v_bar(self, t):
        v = self.source.values
        n = self.n
        slopes = n * np.diff(v)  # slopes[k-1] = n Delta x(k-1)
        t, k = self._cell(t, n)
        km = np.maximum(k - 1, 0)
        kp = np.minimum(k, n - 1)
        out = slopes[km] + n * (slopes[kp] - slopes[km]) * (t - k / n)
        return np.where(k == 0, slopes[0], out)

    def __call__(self, t):
        return self.x_bar(t)

    def v_bar_l2_sq(self) -> float:
        """Exact ``int_0^1 v_bar^2 dt`` (v_bar is piecewise affine)."""
        n = self.n
        a = n * np.diff(self.source.values)
        left, right = a[:-1], a[1:]
        cells = (left**2 + left * right + right**2) / 3.0
        return float((a[0] ** 2 + np.sum(cells)) / n)

    def h1_seminorm(self) -> float:
        return math.sqrt(self.v_bar_l2_sq())


def interpolants(x: MeshFunction) -> InterpolantPair:
    return InterpolantPair(x)


@dataclass(frozen=True)
class ErrorPair:
    e_x: float
    e_v: float


def grid_errors(x: MeshFunction, ref) -> ErrorPair:
    """Nodal gaps to a reference: values over ``k = 0..n``, slopes over ``k = 1..n``.

    ``ref`` needs callables ``x`` and ``xdot``.
    """
    t = x.grid.nodes
    e_x = np.max(np.abs(x.values - ref.x(t)))
    slopes = x.n * np.diff(x.values)
    e_v = np.max(np.abs(slopes - ref.xdot(t[1:])))
    return ErrorPair(float(e_x), float(e_v))


@dataclass
class BoundReport:
    n: int
    norm_E: float
    norm_0: float
    sup_h: float
    ogr_rhs: float
    ogr_ratio: float
    Q_obs: float
    Q_bound: float
    N_obs: float
    N_bound: float
    sqrtn_norm_E: float
    sobolev_lhs: float
    sobolev_rhs: float
    chain_checks: dict = field(default_factory=dict)

    @property
    def chain_ok(self) -> bool:
        return all(self.chain_checks.values())

    @property
    def ogr_holds(self) -> bool:
        return self.norm_E <= self.ogr_rhs * (1 + CHAIN_TOL) + CHAIN_TOL

    def to_dict(self) -> dict:
        return asdict(self)


def _le(lhs, rhs, tol=CHAIN_TOL) -> bool:
    return bool(np.all(np.asarray(lhs) <= np.asarray(rhs) + tol * np.maximum(1.0, np.abs(rhs))))


def inequality_chain(x: MeshFunction) -> dict:
    """The norm inequalities that hold for every element of E, as pass/fail flags."""
    n = x.n
    d = np.abs(np.diff(x.values))
    ne = norm_e(x)
    k = np.arange(1, n + 1)
    pair = interpolants(x)
    return {
        "normE_le_2norm0": _le(ne, 2.0 * norm_0(x)),
        "step_le_normE": _le(d, ne),
        "partial_sums_le_sqrtk_normE": _le(np.cumsum(d), np.sqrt(k) * ne),
        "max_le_sqrtn_normE": _le(np.max(np.abs(x.values)), math.sqrt(n) * ne),
        "sobolev": _le(np.max(np.abs(x.values)), pair.h1_seminorm()),
    }


def bound_report(p: DiscreteProblem, x: MeshFunction) -> BoundReport:
    """Measured sides of the a-priori bounds for a computed solution.

    The unconditional inequalities land in ``chain_checks``; the bounds in
    terms of ``sup |h|`` are only reported through their ratios.
    """
    n = p.n
    ne = norm_e(x)
    sup_h = sup_norm(p.h)
    ogr_rhs = 2.0 * n ** -1.5 * sup_h
    pair = interpolants(x)
    return BoundReport(
        n=n,
        norm_E=ne,
        norm_0=norm_0(x),
        sup_h=sup_h,
        ogr_rhs=ogr_rhs,
        ogr_ratio=ne / ogr_rhs if ogr_rhs > 0 else 0.0,
        Q_obs=float(np.max(n * np.abs(np.diff(x.values)))),
        Q_bound=2.0 * sup_h,
        N_obs=float(np.max(np.abs(x.values))),
        N_bound=2.0 * sup_h,
        sqrtn_norm_E=math.sqrt(n) * ne,
        sobolev_lhs=float(np.max(np.abs(x.values))),
        sobolev_rhs=pair.h1_seminorm(),
        chain_checks=inequality_chain(x),
    )


@dataclass(frozen=True)
class RateFit:
    points: tuple
    slope: float
    intercept: float
    r_squared: float

    def to_dict(self) -> dict:
        return {
            "points": [list(p) for p in self.points],
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
        }


def fit_rate(points) -> RateFit:
    """Least-squares line through ``(log n, log error)``.

    Points with non-positive error are dropped with a warning.
    """
    kept = []
    for n, err in points:
        if err > 0 and np.isfinite(err):
            kept.append((float(n), float(err)))
        else:
            warnings.warn(f"dropping point n={n} with non-positive error {err!r}")
    if len(kept) < 3:
        raise ValueError(f"need at least 3 points with positive error, got {len(kept)}")
    lx = np.log([p[0] for p in kept])
    ly = np.log([p[1] for p in kept])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, min(1.0, 1.0 - float(np.sum(resid**2)) / ss_tot))
    if abs(slope) < 1e-12:
        slope = 0.0
    return RateFit(tuple(kept), float(slope), float(intercept), r2)


def strong_form_check(ref, f, h, sample_count: int = 200, spacing: float = 1e-3) -> float:
    """Largest pointwise defect ``|x'' - f(t, x', x) + h|`` of a reference solution.

    ``x''`` is a central second difference of ``ref.x`` at ``spacing``.
    """
    t = np.linspace(spacing, 1.0 - spacing, sample_count)
    xm, x0, xp = ref.x(t - spacing), ref.x(t), ref.x(t + spacing)
    xdd = (xp - 2.0 * x0 + xm) / spacing**2
    defect = xdd - f(t, ref.xdot(t), x0) + h(t)
    return float(np.max(np.abs(defect)))
