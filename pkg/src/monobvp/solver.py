"""Iterative solution of the discrete problem with an error certificate.

If the discrete operator ``K`` is strongly monotone with constant ``c``,
then for any iterate ``x``

    ||x - x*||_E <= ||G(x)||_E / c,

where ``G(x)`` is the Riesz representative of the residual functional
``y -> <Kx, y> - load(y)``. That bound is the stopping criterion, so a
converged :class:`Solution` carries a guaranteed error bound rather than a
raw residual norm.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

from .mesh import (Grid, MeshFunction, NodeLoad, SingularSystemError, norm_e,
                   riesz_representative)
from .problems import Nonlinearity, RhsFunction
from .system import DiscreteProblem, jacobian, residual

log = logging.getLogger(__name__)

METHODS = ("preconditioned-descent", "newton", "hybrid")
MIN_STEP = 1e-16


class LineSearchError(RuntimeError):
    """Step size underflow; carries the best iterate reached."""

    def __init__(self, message, x=None, certificate=None, iterations=None):
        super().__init__(message)
        self.x = x
        self.certificate = certificate
        self.iterations = iterations


@dataclass(frozen=True)
class SolverOptions:
    method: str = "hybrid"
    tol_cert: float = 1e-10
    max_iterations: int = 100_000
    initial_step: float = 1.0
    monotonicity_constant: float = 1.0
    # hybrid mode hands over to Newton below this certificate
    newton_threshold: float = 1e-3

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not self.tol_cert > 0:
            raise ValueError("tol_cert must be positive")
        if not 0 < self.initial_step <= 1:
            raise ValueError("initial_step must lie in (0, 1]")
        if not self.monotonicity_constant > 0:
            raise ValueError("monotonicity_constant must be positive")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be non-negative")


@dataclass
class Solution:
    x: MeshFunction
    certificate: float
    iterations: int
    converged: bool
    method_used: str
    history: list = field(default_factory=list)


def _riesz_of_residual(p: DiscreteProblem, x: MeshFunction) -> MeshFunction:
    return riesz_representative(NodeLoad(p.grid, residual(p, x)))


def certificate(p: DiscreteProblem, x: MeshFunction, c: float = 1.0) -> float:
    """Upper bound on ``||x - x*||_E`` valid when ``K`` is ``c``-strongly monotone."""
    return norm_e(_riesz_of_residual(p, x)) / c


def _state(p, x, c):
    g = _riesz_of_residual(p, x)
    return g, norm_e(g) / c


def _descent_step(p, x, g, cert, opts, it):
    c = opts.monotonicity_constant
    tau = opts.initial_step
    while True:
        trial = MeshFunction(p.grid, x.values - tau * g.values)
        g_trial, cert_trial = _state(p, trial, c)
        if cert_trial <= (1.0 - tau * c / 2.0) * cert:
            return trial, g_trial, cert_trial
        tau *= 0.5
        if tau < MIN_STEP:
            raise LineSearchError(
                f"descent step underflow at iteration {it} (certificate {cert:.3e})",
                x=x, certificate=cert, iterations=it,
            )


def _newton_step(p, x, cert, opts):
    """Damped Newton step; ``None`` when no damping lowers the certificate."""
    c = opts.monotonicity_constant
    try:
        delta = jacobian(p, x).solve(-residual(p, x))
    except SingularSystemError:
        return None
    tau = 1.0
    for _ in range(30):
        trial = MeshFunction.from_interior(p.grid, x.interior + tau * delta)
        g_trial, cert_trial = _state(p, trial, c)
        if cert_trial < cert:
            return trial, g_trial, cert_trial
        tau *= 0.5
    return None


def solve(p: DiscreteProblem, opts: Optional[SolverOptions] = None,
          x0: Optional[MeshFunction] = None) -> Solution:
    """Solve the discrete problem, starting from ``x0`` (default: the zero element).

    Returns a non-converged :class:`Solution` when ``max_iterations`` is
    exhausted. Raises :class:`LineSearchError` when no step size down to
    ``1e-16`` decreases the certificate.
    """
    opts = opts or SolverOptions()
    c = opts.monotonicity_constant
    x = p.grid.zeros() if x0 is None else x0
    if x.grid != p.grid:
        raise ValueError("initial iterate lives on a different grid")
    g, cert = _state(p, x, c)
    history = [cert]
    used = set()
    it = 0
    while cert > opts.tol_cert and it < opts.max_iterations:
        it += 1
        step = None
        use_newton = opts.method == "newton" or (
            opts.method == "hybrid" and cert < opts.newton_threshold
        )
        if use_newton:
            step = _newton_step(p, x, cert, opts)
            if step is not None:
                used.add("newton")
            elif opts.method == "newton":
                raise LineSearchError(
                    f"newton step underflow at iteration {it} (certificate {cert:.3e})",
                    x=x, certificate=cert, iterations=it,
                )
        if step is None:
            step = _descent_step(p, x, g, cert, opts, it)
            used.add("preconditioned-descent")
        x, g, cert = step
        history.append(cert)
    converged = cert <= opts.tol_cert
    if not converged:
        log.warning("solver stopped after %d iterations, certificate %.3e", it, cert)
    method_used = "+".join(m for m in ("preconditioned-descent", "newton") if m in used)
    return Solution(x, cert, it, converged, method_used or "none", history)


def lipschitz_inverse_check(f: Nonlinearity, h1: RhsFunction, h2: RhsFunction,
                            grid: Grid, opts: Optional[SolverOptions] = None) -> float:
    """``||x1 - x2||_E / ||rho1 - rho2||_E`` for two forcings on the same grid.

    ``rho_i`` is the Riesz representative of the load ``h_i(k/n) / n^2``; for a
    ``c``-strongly monotone operator the ratio is at most ``1 / c``.
    """
    p1 = DiscreteProblem(f, h1, grid)
    p2 = DiscreteProblem(f, h2, grid)
    rho_gap = norm_e(riesz_representative(p1.load()) - riesz_representative(p2.load()))
    if rho_gap == 0.0:
        raise ZeroDivisionError("identical loads: Lipschitz ratio undefined")
    s1 = solve(p1, opts)
    s2 = solve(p2, opts)
    if not (s1.converged and s2.converged):
        raise RuntimeError("solver did not converge for one of the forcings")
    return norm_e(s1.x - s2.x) / rho_gap


def with_tolerance(opts: Optional[SolverOptions], tol: float) -> SolverOptions:
    return replace(opts or SolverOptions(), tol_cert=tol)
