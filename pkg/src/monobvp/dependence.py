"""Continuous dependence of the solution on the forcing term.

The forcings ``h_m = h0 + A sin(m pi t) / (m pi)`` converge to ``h0``
weakly in H_0^1 but not strongly: the derivative of the perturbation,
``A cos(m pi t)``, keeps L^2 norm ``A / sqrt(2)`` for every ``m``. Solutions
are computed on one reference grid and compared with the ``h0`` solution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .analysis import interpolants
from .mesh import Grid, norm_e
from .problems import Nonlinearity, RhsFunction
from .solver import SolverOptions, solve
from .system import DiscreteProblem

DEFAULT_M_LIST = (1, 2, 4, 8, 16, 32, 64)
DEFAULT_N_REF = 2048


class NotAffineError(ValueError):
    pass


@dataclass(frozen=True)
class WeakFamily:
    h0: RhsFunction
    amplitude: float = 1.0

    def perturbation(self, m: int):
        w = m * math.pi
        a = self.amplitude
        return (lambda t: a / w * np.sin(w * np.asarray(t, dtype=float)),
                lambda t: a * np.cos(w * np.asarray(t, dtype=float)))

    def member(self, m: int) -> RhsFunction:
        return family_member(self, m)


def family_member(fam: WeakFamily, m: int) -> RhsFunction:
    """Forcing ``h0(t) + (A / (m pi)) sin(m pi t)``."""
    if m < 1:
        raise ValueError("family index must be >= 1")
    dh, ddh = fam.perturbation(m)
    h0 = fam.h0

    def h(t):
        return h0(t) + dh(t)

    def deriv(t):
        return h0.deriv(t) + ddh(t)

    return RhsFunction(f"{h0.id}+weak(m={m},A={fam.amplitude})", h,
                       deriv=deriv if h0.deriv is not None else None)


@dataclass
class DependenceRow:
    m: float
    sup_gap: float
    e_norm_gap: float
    h_sup_gap: float

    def to_dict(self) -> dict:
        return {"m": self.m, "sup_gap": self.sup_gap, "e_norm_gap": self.e_norm_gap,
                "h_sup_gap": self.h_sup_gap}


def dependence_experiment(f: Nonlinearity, fam: WeakFamily,
                          m_list: Sequence[int] = DEFAULT_M_LIST,
                          grid_ref: Optional[Grid] = None,
                          opts: Optional[SolverOptions] = None) -> list:
    """Gaps between ``x_m`` and ``x_0`` for each ``m``, plus the ``m = inf`` baseline.

    Requires ``f`` to split as ``f1(t, x) + v g(t)``.
    """
    if f.affine_decomposition is None:
        raise NotAffineError(
            f"nonlinearity {f.id!r} is not of the form f1(t, x) + v g(t); "
            "continuous dependence needs that structure"
        )
    grid_ref = grid_ref or Grid(DEFAULT_N_REF)
    base = solve(DiscreteProblem(f, fam.h0, grid_ref), opts)
    if not base.converged:
        raise RuntimeError("solver did not converge for the limit forcing")
    rows = []
    for m in sorted(m_list):
        sol = solve(DiscreteProblem(f, family_member(fam, m), grid_ref), opts)
        if not sol.converged:
            raise RuntimeError(f"solver did not converge for m={m}")
        gap = sol.x - base.x
        rows.append(DependenceRow(
            m=m,
            # both interpolants are piecewise affine on the same cells: nodal max
            sup_gap=float(np.max(np.abs(gap.values))),
            e_norm_gap=norm_e(gap),
            h_sup_gap=abs(fam.amplitude) / (m * math.pi),
        ))
    rows.append(DependenceRow(math.inf, 0.0, 0.0, 0.0))
    return rows


def h1_norm(h: RhsFunction, samples: int = 20_001) -> float:
    """``(int_0^1 h'^2 dt)^(1/2)``; adaptive quadrature when ``h.deriv`` is known."""
    if h.deriv is not None:
        val, _ = quad(lambda t: float(h.deriv(t)) ** 2, 0.0, 1.0, limit=400)
        return math.sqrt(val)
    t = np.linspace(0.0, 1.0, samples)
    d = np.diff(np.asarray(h(t), dtype=float) * np.ones_like(t)) / np.diff(t)
    return math.sqrt(float(np.sum(d**2 * np.diff(t))))


def h1_gain_ratio(f: Nonlinearity, h: RhsFunction, grid_ref: Optional[Grid] = None,
                      opts: Optional[SolverOptions] = None) -> float:
    """``||x|| / ||h||`` in the H_0^1 seminorm; diagnostic only."""
    grid_ref = grid_ref or Grid(DEFAULT_N_REF)
    denom = h1_norm(h)
    if denom == 0.0:
        raise ZeroDivisionError("forcing has zero H_0^1 norm: ratio undefined")
    sol = solve(DiscreteProblem(f, h, grid_ref), opts)
    if not sol.converged:
        raise RuntimeError("solver did not converge")
    return interpolants(sol.x).h1_seminorm() / denom


# name used by the experiment contract
lemma_ogr_c_ratio = h1_gain_ratio
