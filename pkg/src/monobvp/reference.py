"""Independent oracles for the continuous boundary value problem.

* manufactured solutions: pick ``x*`` and read off ``h = f(t, x*', x*) - x*''``;
* shooting: fixed-step RK4 on the initial value problem, root-find the slope;
* fine grid: the discrete scheme itself at a much finer mesh;
* linear direct: one tridiagonal solve when ``f = a x``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .analysis import interpolants
from .mesh import Grid, MeshFunction, laplacian_bands, tridiagonal_solve
from .problems import Nonlinearity, RhsFunction, UnknownProblemError
from .solver import SolverOptions, solve
from .system import DiscreteProblem

DEFAULT_N_REF = 8192
DEFAULT_STEPS = 100_000
DEFAULT_ROOT_TOL = 1e-12
MAX_SLOPE = 1e3


class OracleError(RuntimeError):
    pass


class ManufacturedError(ValueError):
    pass


@dataclass(frozen=True)
class ReferenceSolution:
    x: Callable
    xdot: Callable
    provenance: str
    accuracy_estimate: float = 0.0
    slope0: Optional[float] = None


@dataclass(frozen=True)
class ExactSolution:
    """A smooth ``x*`` with its first two derivatives."""

    id: str
    x: Callable
    xdot: Callable
    xddot: Callable


def _sine_solution(mode: int, name: str) -> ExactSolution:
    w = mode * math.pi
    return ExactSolution(
        name,
        lambda t: np.sin(w * np.asarray(t, dtype=float)),
        lambda t: w * np.cos(w * np.asarray(t, dtype=float)),
        lambda t: -w * w * np.sin(w * np.asarray(t, dtype=float)),
    )


_EXACT = {
    "sin": lambda: _sine_solution(1, "sin"),
    "sin2": lambda: _sine_solution(2, "sin2"),
    "poly": lambda: ExactSolution(
        "poly",
        lambda t: np.asarray(t, dtype=float) * (1.0 - np.asarray(t, dtype=float)),
        lambda t: 1.0 - 2.0 * np.asarray(t, dtype=float),
        lambda t: -2.0 + 0.0 * np.asarray(t, dtype=float),
    ),
}


def exact_solution(id: str) -> ExactSolution:
    try:
        return _EXACT[id]()
    except KeyError:
        raise UnknownProblemError(
            f"unknown manufactured solution {id!r}; known: {', '.join(_EXACT)}"
        ) from None


def manufactured(x_star: ExactSolution, f: Nonlinearity):
    """Forcing for which ``x_star`` solves the problem exactly, plus the reference."""
    if isinstance(x_star, str):
        x_star = exact_solution(x_star)
    ends = np.asarray(x_star.x(np.array([0.0, 1.0])), dtype=float)
    if np.max(np.abs(ends)) > 1e-10:
        raise ManufacturedError(f"{x_star.id!r} does not vanish at the endpoints")

    def h(t):
        t = np.asarray(t, dtype=float)
        return f(t, x_star.xdot(t), x_star.x(t)) - x_star.xddot(t)

    h_ends = np.asarray(h(np.array([0.0, 1.0])), dtype=float)
    if np.max(np.abs(h_ends)) > 1e-10:
        raise ManufacturedError(
            f"manufactured forcing for f={f.id!r}, x*={x_star.id!r} is "
            f"{h_ends.tolist()} at the endpoints; it must vanish there"
        )

    def h_clean(t):
        # endpoint roundoff would otherwise trip the 1e-12 forcing check
        t = np.asarray(t, dtype=float)
        return np.where((t == 0.0) | (t == 1.0), 0.0, h(t))

    rhs = RhsFunction(f"manufactured:{f.id}:{x_star.id}", h_clean)
    ref = ReferenceSolution(x_star.x, x_star.xdot, "manufactured", 0.0,
                            float(x_star.xdot(0.0)))
    return rhs, ref


# -- shooting -----------------------------------------------------------------


BLOWUP = 1e150


def _rk4(f: Nonlinearity, h: RhsFunction, s: float, steps: int, keep: bool = False):
    """Integrate ``x'' = f(t, x', x) - h(t)``, ``x(0) = 0``, ``x'(0) = s`` by RK4.

    Returns ``x(1)``, or ``+-inf`` if the trajectory blows up first. With
    ``keep`` the whole trajectory ``(t, x, x')`` is returned instead.
    """
    fe = f.scalar_eval or f.eval
    dt = 1.0 / steps
    half = 0.5 * dt
    tn = np.arange(steps + 1) * dt
    tn[-1] = 1.0
    h_node = (np.asarray(h(tn), dtype=float) * np.ones_like(tn)).tolist()
    h_mid = (np.asarray(h(tn[:-1] + half), dtype=float) * np.ones(steps)).tolist()
    times = tn.tolist()
    x, v = 0.0, float(s)
    try:
        return _rk4_loop(fe, times, h_node, h_mid, x, v, steps, dt, keep)
    except OverflowError:
        if keep:
            raise OracleError("shooting: trajectory overflow") from None
        # escape follows the launch direction when f is nondecreasing in x
        return math.inf if v > 0 else -math.inf


def _rk4_loop(fe, times, h_node, h_mid, x, v, steps, dt, keep):
    half = 0.5 * dt
    sixth = dt / 6.0
    if keep:
        xs = [0.0] * (steps + 1)
        vs = [0.0] * (steps + 1)
        vs[0] = v
    for i in range(steps):
        t = times[i]
        tm = t + half
        hm = h_mid[i]
        k1v = fe(t, v, x) - h_node[i]
        x2 = x + half * v
        v2 = v + half * k1v
        k2v = fe(tm, v2, x2) - hm
        x3 = x + half * v2
        v3 = v + half * k2v
        k3v = fe(tm, v3, x3) - hm
        x4 = x + dt * v3
        v4 = v + dt * k3v
        k4v = fe(times[i + 1], v4, x4) - h_node[i + 1]
        x += sixth * (v + 2.0 * v2 + 2.0 * v3 + v4)
        v += sixth * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if keep:
            xs[i + 1] = x
            vs[i + 1] = v
        elif not abs(x) < BLOWUP:
            return math.copysign(math.inf, x) if x == x else math.nan
    if keep:
        return np.array(times), np.array(xs), np.array(vs)
    return x


def shooting(f: Nonlinearity, h: RhsFunction, steps: int = DEFAULT_STEPS,
             root_tol: float = DEFAULT_ROOT_TOL) -> ReferenceSolution:
    """Reference solution by RK4 shooting on the initial slope.

    The slope is bracketed starting from ``[-10, 10]`` (doubling up to
    ``|s| <= 1e3``) and refined by secant steps kept inside the bracket.
    """
    def end(s):
        return _rk4(f, h, s, steps)

    a, b = -10.0, 10.0
    fa, fb = end(a), end(b)
    while not fa * fb <= 0.0:
        a, b = 2.0 * a, 2.0 * b
        if b > MAX_SLOPE:
            raise OracleError("shooting: no sign change for initial slopes up to 1e3")
        fa, fb = end(a), end(b)

    if abs(fa) <= root_tol:
        s = a
    elif abs(fb) <= root_tol:
        s = b
    else:
        s = None
        # secant iterates (s0, e0), (s1, e1), bracket [a, b] kept as safeguard
        s0, e0, s1, e1 = a, fa, b, fb
        for _ in range(200):
            finite = math.isfinite(e0) and math.isfinite(e1) and e1 != e0
            cand = s1 - e1 * (s1 - s0) / (e1 - e0) if finite else 0.5 * (a + b)
            if not (min(a, b) < cand < max(a, b)):
                cand = 0.5 * (a + b)
            ec = end(cand)
            if math.isnan(ec):
                raise OracleError("shooting: integration failed inside the bracket")
            if abs(ec) <= root_tol:
                s = cand
                break
            if fa * ec < 0:
                b, fb = cand, ec
            else:
                a, fa = cand, ec
            s0, e0, s1, e1 = s1, e1, cand, ec
            if abs(b - a) <= 1e-15 * max(1.0, abs(a)):
                s = cand
                break
        if s is None:
            raise OracleError("shooting: secant iteration did not converge")

    tn, xs, vs = _rk4(f, h, s, steps, keep=True)
    acc = np.asarray(f(tn, vs, xs), dtype=float) - np.asarray(h(tn), dtype=float)
    x_spline = CubicHermiteSpline(tn, xs, vs)
    v_spline = CubicHermiteSpline(tn, vs, acc)
    return ReferenceSolution(
        lambda t: x_spline(np.asarray(t, dtype=float)),
        lambda t: v_spline(np.asarray(t, dtype=float)),
        "shooting",
        float(abs(xs[-1])),
        float(s),
    )


# -- discrete references --------------------------------------------------------


def fine_grid(f: Nonlinearity, h: RhsFunction, n_ref: int = DEFAULT_N_REF,
              opts: Optional[SolverOptions] = None) -> ReferenceSolution:
    """The scheme's own solution at ``n_ref`` as a dense reference.

    ``accuracy_estimate`` is the largest nodal gap to the ``n_ref / 2`` solution.
    """
    if n_ref % 2:
        raise ValueError("n_ref must be even")
    fine = solve(DiscreteProblem(f, h, Grid(n_ref)), opts)
    coarse = solve(DiscreteProblem(f, h, Grid(n_ref // 2)), opts)
    if not (fine.converged and coarse.converged):
        raise OracleError("fine-grid reference: solver did not converge")
    gap = float(np.max(np.abs(fine.x.values[::2] - coarse.x.values)))
    pair = interpolants(fine.x)
    return ReferenceSolution(pair.x_bar, pair.v_bar, "fine-grid", gap)


def linear_direct(a: float, h: RhsFunction, grid: Grid) -> MeshFunction:
    """Discrete solution for ``f(t, v, x) = a x`` (``a >= 0``) by one tridiagonal solve."""
    if a < 0:
        raise ValueError("coefficient must be non-negative")
    n = grid.n
    sub, diag, sup = laplacian_bands(n)
    diag = diag + a / n**2
    rhs = np.asarray(h(grid.interior), dtype=float) * np.ones(n - 1) / n**2
    return MeshFunction.from_interior(grid, tridiagonal_solve(sub, diag, sup, rhs))


def discrete_reference(x: MeshFunction, provenance: str = "linear-direct",
                       accuracy_estimate: float = 0.0) -> ReferenceSolution:
    pair = interpolants(x)
    return ReferenceSolution(pair.x_bar, pair.v_bar, provenance, accuracy_estimate)
