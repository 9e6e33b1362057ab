"""Registry of nonlinearities ``f(t, v, x)`` and forcing terms ``h(t)``.

Evaluators are numpy ufunc compositions, so they accept scalars or arrays
with ``t``, ``v`` (the derivative slot) and ``x`` broadcast together.

Besides the registry this module holds seeded samplers for the two standing
hypotheses on ``f`` (integrable domination on balls, and the sign condition
``(s - t)(f(k, w, s) - f(l, z, t)) >= 0``) and for strong monotonicity of the
discrete operator, which is the property the solver actually uses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .mesh import Grid, MeshFunction

Evaluator = Callable[..., np.ndarray]

DEFAULT_TRIALS = 10_000
DEFAULT_X_RANGE = (-5.0, 5.0)
DEFAULT_V_RANGE = (-50.0, 50.0)


class UnknownProblemError(KeyError):
    def __str__(self):
        return str(self.args[0])


@dataclass(frozen=True)
class Nonlinearity:
    """The lower-order term ``f(t, v, x)`` of ``x'' = f(t, x', x) - h``.

    ``affine_decomposition`` is ``(f1, g)`` with ``f = f1(t, x) + v g(t)``;
    ``dominator(r)`` returns a function of ``t`` bounding ``|f|`` whenever
    ``|x| <= r``.
    """

    id: str
    eval: Evaluator
    partial_v: Optional[Evaluator] = None
    partial_x: Optional[Evaluator] = None
    monotone_in_x: bool = False
    depends_on_v: bool = True
    affine_decomposition: Optional[tuple] = None
    dominator: Optional[Callable[[float], Callable]] = None
    description: str = ""
    # float-only twin of ``eval`` for scalar inner loops
    scalar_eval: Optional[Callable[[float, float, float], float]] = None

    def __call__(self, t, v, x):
        return self.eval(t, v, x)

    @property
    def has_partials(self) -> bool:
        return self.partial_v is not None and self.partial_x is not None


@dataclass(frozen=True)
class RhsFunction:
    """Forcing term ``h`` with ``h(0) = h(1) = 0``."""

    id: str
    eval: Callable
    deriv: Optional[Callable] = None
    sup_norm_hint: Optional[float] = None

    def __post_init__(self):
        ends = np.asarray(self.eval(np.array([0.0, 1.0])), dtype=float) * np.ones(2)
        if np.max(np.abs(ends)) > 1e-12:
            raise ValueError(
                f"forcing {self.id!r} must vanish at t=0 and t=1, got {ends.tolist()}"
            )

    def __call__(self, t):
        return self.eval(t)


@dataclass
class ProbeReport:
    name: str
    trials: int
    min_value: float
    witness: dict
    seed: int
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "trials": self.trials,
            "min_value": self.min_value,
            "witness": self.witness,
            "seed": self.seed,
            "params": self.params,
        }


# -- weight functions ---------------------------------------------------------


def polynomial_weight(coeffs) -> Callable:
    """``t -> sum_i coeffs[i] t**i``; a bare number gives a constant weight.

    Horner form, so plain floats stay plain floats (the shooting loop relies
    on that for speed).
    """
    coeffs = [float(c) for c in np.atleast_1d(np.asarray(coeffs, dtype=float))]
    rev = coeffs[::-1]

    def weight(t):
        acc = rev[0] + 0.0 * t
        for c in rev[1:]:
            acc = acc * t + c
        return acc

    weight.coeffs = coeffs
    return weight


def default_g() -> Callable:
    return polynomial_weight([1.0, 1.0])


def default_g1() -> Callable:
    # vanishes at both ends so manufactured forcings keep h(0) = h(1) = 0
    return polynomial_weight([0.0, 4.0, -4.0])


# -- nonlinearities -----------------------------------------------------------


class _Ops:
    def __init__(self, exp, atan, absf, sign):
        self.exp, self.atan, self.abs, self.sign = exp, atan, absf, sign


_NP = _Ops(np.exp, np.arctan, np.abs, np.sign)
_MATH = _Ops(math.exp, math.atan, abs, lambda v: float((v > 0) - (v < 0)))


def _zeros(*args):
    return 0.0 * sum(np.asarray(a, dtype=float) for a in args)


def _zero(g, g1, op):
    return dict(
        eval=lambda t, v, x: _zeros(t, v, x),
        partial_v=lambda t, v, x: _zeros(t, v, x),
        partial_x=lambda t, v, x: _zeros(t, v, x),
        monotone_in_x=True,
        depends_on_v=False,
        affine_decomposition=(lambda t, x: _zeros(t, x), lambda t: _zeros(t)),
        dominator=lambda r: (lambda t: _zeros(t)),
        description="f = 0",
    )


def _linear(g, g1, op):
    return dict(
        eval=lambda t, v, x: x + 0.0 * t + 0.0 * v,
        partial_v=lambda t, v, x: _zeros(t, v, x),
        partial_x=lambda t, v, x: 1.0 + _zeros(t, v, x),
        monotone_in_x=True,
        depends_on_v=False,
        affine_decomposition=(lambda t, x: x + 0.0 * t, lambda t: _zeros(t)),
        dominator=lambda r: (lambda t: r + _zeros(t)),
        description="f = x",
    )


def _cubic(g, g1, op):
    return dict(
        eval=lambda t, v, x: g(t) * x**3 + 0.0 * v,
        partial_v=lambda t, v, x: _zeros(t, v, x),
        partial_x=lambda t, v, x: 3.0 * g(t) * x**2 + 0.0 * v,
        monotone_in_x=True,
        depends_on_v=False,
        affine_decomposition=(lambda t, x: g(t) * x**3, lambda t: _zeros(t)),
        dominator=lambda r: (lambda t: np.abs(g(t)) * r**3),
        description="f = g(t) x^3",
    )


def _atan(g, g1, op):
    return dict(
        eval=lambda t, v, x: g(t) * op.atan(x) + 0.0 * v,
        partial_v=lambda t, v, x: _zeros(t, v, x),
        partial_x=lambda t, v, x: g(t) / (1.0 + x * x) + 0.0 * v,
        monotone_in_x=True,
        depends_on_v=False,
        affine_decomposition=(lambda t, x: g(t) * np.arctan(x), lambda t: _zeros(t)),
        dominator=lambda r: (lambda t: np.abs(g(t)) * np.arctan(r)),
        description="f = g(t) arctan(x)",
    )


def _ex23a(g, g1, op):
    def f(t, v, x):
        return g(t) * op.exp(x - t * t) * op.abs(op.atan(v))

    def dominator(r):
        c1 = math.exp(r)  # max of exp on [-r, r]
        return lambda t: c1 * np.pi / 2.0 * np.abs(g(t)) * np.exp(-np.asarray(t) ** 2)

    return dict(
        eval=f,
        partial_v=lambda t, v, x: g(t) * op.exp(x - t * t) * op.sign(v) / (1.0 + v * v),
        partial_x=f,
        monotone_in_x=True,
        dominator=dominator,
        description="f = g(t) exp(x - t^2) |arctan(v)|",
    )


def _ex23b(g, g1, op):
    def dominator(r):
        return lambda t: np.abs(g(t)) * math.atan(r) * np.pi / 2.0

    return dict(
        eval=lambda t, v, x: g(t) * op.atan(x) * op.abs(op.atan(v)),
        partial_v=lambda t, v, x: g(t) * op.atan(x) * op.sign(v) / (1.0 + v * v),
        partial_x=lambda t, v, x: g(t) / (1.0 + x * x) * op.abs(op.atan(v)),
        monotone_in_x=True,
        dominator=dominator,
        description="f = g(t) arctan(x) |arctan(v)|",
    )


def _ex23c(g, g1, op):
    def dominator(r):
        c1 = math.exp(r)
        return lambda t: (np.abs(g(t)) * r**3
                          + c1 * np.pi / 2.0 * np.exp(-np.asarray(t) ** 2))

    return dict(
        eval=lambda t, v, x: g(t) * x**3 + op.exp(x - t * t) * op.abs(op.atan(v)),
        partial_v=lambda t, v, x: op.exp(x - t * t) * op.sign(v) / (1.0 + v * v),
        partial_x=lambda t, v, x: (3.0 * g(t) * x**2
                                   + op.exp(x - t * t) * op.abs(op.atan(v))),
        monotone_in_x=True,
        dominator=dominator,
        description="f = g(t) x^3 + exp(x - t^2) |arctan(v)|",
    )


def _affine(f1, f1_x, g1, description):
    return dict(
        eval=lambda t, v, x: f1(t, x) + v * g1(t),
        partial_v=lambda t, v, x: g1(t) + 0.0 * v + 0.0 * x,
        partial_x=lambda t, v, x: f1_x(t, x) + 0.0 * v,
        monotone_in_x=True,
        affine_decomposition=(f1, g1),
        description=description,
    )


def _ex24a(g, g1, op):
    # shifted by its value at x = 0 so that f(t, 0, 0) = 0
    return _affine(
        lambda t, x: g(t) * (op.exp(x - t * t) - op.exp(-t * t)),
        lambda t, x: g(t) * op.exp(x - t * t),
        g1,
        "f = g(t) (exp(x - t^2) - exp(-t^2)) + g1(t) v",
    )


def _ex24b(g, g1, op):
    return _affine(
        lambda t, x: g(t) * op.atan(x),
        lambda t, x: g(t) / (1.0 + x * x),
        g1,
        "f = g(t) arctan(x) + g1(t) v",
    )


def _ex24c(g, g1, op):
    return _affine(
        lambda t, x: g(t) * x**3 + op.exp(x - t * t) - op.exp(-t * t),
        lambda t, x: 3.0 * g(t) * x**2 + op.exp(x - t * t),
        g1,
        "f = g(t) x^3 + exp(x - t^2) - exp(-t^2) + g1(t) v",
    )


_NONLINEARITIES = {
    "zero": _zero,
    "linear": _linear,
    "cubic": _cubic,
    "atan": _atan,
    "2.3-a": _ex23a,
    "2.3-b": _ex23b,
    "2.3-c": _ex23c,
    "2.4-a": _ex24a,
    "2.4-b": _ex24b,
    "2.4-c": _ex24c,
}


def nonlinearity_ids() -> list:
    return list(_NONLINEARITIES)


def _as_weight(w, default):
    if w is None:
        return default()
    return w if callable(w) else polynomial_weight(w)


def builtin(id: str, g=None, g1=None) -> Nonlinearity:
    """Build a registered nonlinearity.

    ``g`` and ``g1`` are weight functions of ``t`` or polynomial coefficient
    lists (a bare number is a constant). Defaults: ``1 + t`` and ``4 t (1 - t)``.
    """
    try:
        factory = _NONLINEARITIES[id]
    except KeyError:
        raise UnknownProblemError(
            f"unknown nonlinearity id {id!r}; known: {', '.join(_NONLINEARITIES)}"
        ) from None
    g = _as_weight(g, default_g)
    g1 = _as_weight(g1, default_g1)
    fields = factory(g, g1, _NP)
    fields["scalar_eval"] = factory(g, g1, _MATH)["eval"]
    return Nonlinearity(id, **fields)


# -- forcing terms ------------------------------------------------------------


def _sine(mode: int, amplitude: float, name: str) -> RhsFunction:
    w = mode * np.pi

    def h(t):
        return amplitude * np.sin(w * np.asarray(t, dtype=float))

    def dh(t):
        return amplitude * w * np.cos(w * np.asarray(t, dtype=float))

    return RhsFunction(name, h, deriv=dh, sup_norm_hint=abs(amplitude))


def _zero_rhs(amplitude: float) -> RhsFunction:
    return RhsFunction(
        "zero",
        lambda t: 0.0 * np.asarray(t, dtype=float),
        deriv=lambda t: 0.0 * np.asarray(t, dtype=float),
        sup_norm_hint=0.0,
    )


def _poly_rhs(amplitude: float) -> RhsFunction:
    return RhsFunction(
        "poly",
        lambda t: amplitude * 4.0 * np.asarray(t) * (1.0 - np.asarray(t)),
        deriv=lambda t: amplitude * 4.0 * (1.0 - 2.0 * np.asarray(t)),
        sup_norm_hint=abs(amplitude),
    )


_RHS = {
    "zero": _zero_rhs,
    "sin": lambda a: _sine(1, a, "sin"),
    "sin2": lambda a: _sine(2, a, "sin2"),
    "poly": _poly_rhs,
}


def rhs_ids() -> list:
    return list(_RHS)


def builtin_rhs(id: str, amplitude: float = 1.0) -> RhsFunction:
    """Registered forcing: ``zero``, ``sin`` (A sin(pi t)), ``sin2``, ``poly`` (4A t(1-t))."""
    try:
        return _RHS[id](float(amplitude))
    except KeyError:
        raise UnknownProblemError(
            f"unknown forcing id {id!r}; known: {', '.join(_RHS)}"
        ) from None


def sup_norm(h: RhsFunction, samples: int = 20_000) -> float:
    """``max |h|`` on [0, 1]: the analytic hint when present, else dense sampling."""
    if h.sup_norm_hint is not None:
        return float(h.sup_norm_hint)
    t = np.linspace(0.0, 1.0, samples)
    return float(np.max(np.abs(h(t))))


# -- probes -------------------------------------------------------------------


def _argmin_witness(values, **columns):
    i = int(np.argmin(values))
    return float(values[i]), {k: float(c[i]) for k, c in columns.items()}


def probe_p2(f: Nonlinearity, ranges=None, trials: int = DEFAULT_TRIALS,
             seed: int = 0) -> ProbeReport:
    """Sampled minimum of ``(s - t)(f(k, w, s) - f(l, z, t))``.

    ``ranges`` maps ``"x"`` (for s, t) and ``"v"`` (for w, z) to intervals.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    ranges = dict(ranges or {})
    xlo, xhi = ranges.get("x", DEFAULT_X_RANGE)
    vlo, vhi = ranges.get("v", DEFAULT_V_RANGE)
    rng = np.random.default_rng(seed)
    k = rng.uniform(0.0, 1.0, trials)
    l = rng.uniform(0.0, 1.0, trials)
    s = rng.uniform(xlo, xhi, trials)
    t = rng.uniform(xlo, xhi, trials)
    w = rng.uniform(vlo, vhi, trials)
    z = rng.uniform(vlo, vhi, trials)
    values = (s - t) * (f(k, w, s) - f(l, z, t))
    min_value, witness = _argmin_witness(values, k=k, l=l, s=s, t=t, w=w, z=z)
    return ProbeReport("p2", trials, min_value, witness, seed,
                       {"f": f.id, "x_range": [xlo, xhi], "v_range": [vlo, vhi]})


def probe_p1(f: Nonlinearity, r: float, trials: int = DEFAULT_TRIALS, seed: int = 0,
             v_range=DEFAULT_V_RANGE) -> ProbeReport:
    """Sampled minimum of ``f_r(t) - |f(t, v, x)|`` over ``|x| <= r``."""
    if f.dominator is None:
        raise ValueError(f"nonlinearity {f.id!r} has no dominator")
    if r <= 0:
        raise ValueError("r must be positive")
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.0, 1.0, trials)
    x = rng.uniform(-r, r, trials)
    v = rng.uniform(v_range[0], v_range[1], trials)
    bound = f.dominator(r)
    values = bound(t) - np.abs(f(t, v, x))
    min_value, witness = _argmin_witness(values, t=t, v=v, x=x)
    return ProbeReport("p1", trials, min_value, witness, seed,
                       {"f": f.id, "r": r, "v_range": list(v_range)})


def probe_operator_monotonicity(f: Nonlinearity, grid: Grid, trials: int = 1000,
                                seed: int = 0, x_range=DEFAULT_X_RANGE) -> ProbeReport:
    """Sampled minimum of ``<Ku - Kw, u - w>_E / ||u - w||_E^2`` over random pairs."""
    from .system import operator_pairing  # system depends on this module

    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = x_range
    best = np.inf
    witness = {}
    for _ in range(trials):
        while True:
            u = MeshFunction.from_interior(grid, rng.uniform(lo, hi, grid.n - 1))
            w = MeshFunction.from_interior(grid, rng.uniform(lo, hi, grid.n - 1))
            d = u - w
            dd = float(np.sum(np.diff(d.values) ** 2))
            if dd > 0.0:
                break
        ratio = (operator_pairing(f, u, d) - operator_pairing(f, w, d)) / dd
        if ratio < best:
            best = ratio
            witness = {"u": u.values.tolist(), "w": w.values.tolist()}
    return ProbeReport("operator_monotonicity", trials, float(best), witness, seed,
                       {"f": f.id, "n": grid.n, "x_range": list(x_range)})
