import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from monobvp.mesh import Grid, MeshFunction, norm_e
from monobvp.problems import Nonlinearity, builtin, builtin_rhs, nonlinearity_ids
from monobvp.reference import linear_direct
from monobvp.solver import (LineSearchError, SolverOptions, certificate,
                            lipschitz_inverse_check, solve, with_tolerance)
from monobvp.system import DiscreteProblem, residual

from conftest import point_rhs, random_mesh

H9 = point_rhs(2, 9.0)
MONOTONE = ["zero", "linear", "cubic", "atan"]


def test_options_validation():
    for bad in ({"method": "sgd"}, {"tol_cert": 0.0}, {"initial_step": 0.0},
                {"initial_step": 1.5}, {"monotonicity_constant": -1.0},
                {"max_iterations": -1}):
        with pytest.raises(ValueError):
            SolverOptions(**bad)
    assert with_tolerance(None, 1e-6).tol_cert == 1e-6


class TestSolveExamples:
    @pytest.mark.parametrize("method", ["preconditioned-descent", "newton", "hybrid"])
    def test_scalar_case(self, method):
        sol = solve(DiscreteProblem(builtin("linear"), H9, Grid(2)), SolverOptions(method=method))
        assert sol.converged
        assert sol.x[1] == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("fid", nonlinearity_ids())
    def test_zero_forcing_gives_zero(self, fid):
        sol = solve(DiscreteProblem(builtin(fid), builtin_rhs("zero"), Grid(16)))
        assert sol.iterations == 0 and sol.certificate == 0.0 and sol.converged
        assert np.all(sol.x.values == 0.0)

    def test_linear_manufactured_512(self, linear_forcing):
        sol = solve(DiscreteProblem(builtin("linear"), linear_forcing, Grid(512)))
        t = Grid(512).nodes
        assert sol.converged and sol.certificate <= 1e-10
        assert np.max(np.abs(sol.x.values - np.sin(np.pi * t))) <= 1e-4

    @pytest.mark.parametrize("fid", nonlinearity_ids())
    def test_every_registry_entry_converges(self, fid, linear_forcing):
        sol = solve(DiscreteProblem(builtin(fid), linear_forcing, Grid(64)))
        assert sol.converged and sol.certificate <= 1e-10
        assert "preconditioned-descent" in sol.method_used


class TestCertificate:
    def test_hand_example(self):
        p = DiscreteProblem(builtin("linear"), H9, Grid(2))
        x = Grid(2).zeros()
        assert residual(p, x)[0] == pytest.approx(-2.25)
        cert = certificate(p, x)
        assert cert == pytest.approx(math.sqrt(2 * 1.125**2), abs=1e-14)
        assert cert == pytest.approx(1.59099, abs=1e-5)
        true_err = norm_e(x - MeshFunction(Grid(2), [0, 1, 0]))
        assert true_err == pytest.approx(math.sqrt(2)) and true_err <= cert

    def test_exact_solution_zero(self):
        p = DiscreteProblem(builtin("linear"), H9, Grid(2))
        assert certificate(p, MeshFunction(Grid(2), [0, 1, 0])) <= 1e-15

    def test_linear_in_residual(self, rng):
        # for f = zero the residual is affine in x; doubling it doubles the certificate
        n = 16
        p = DiscreteProblem(builtin("zero"), builtin_rhs("zero"), Grid(n))
        x = random_mesh(rng, n)
        assert certificate(p, x * 2.0) == pytest.approx(2 * certificate(p, x), rel=1e-12)

    def test_constant_divides(self, rng):
        p = DiscreteProblem(builtin("linear"), builtin_rhs("sin"), Grid(8))
        x = random_mesh(rng, 8)
        assert certificate(p, x, c=4.0) == pytest.approx(certificate(p, x) / 4, rel=1e-14)

    @pytest.mark.parametrize("fid", MONOTONE)
    @given(seed=st.integers(0, 2**31), n=st.sampled_from([4, 16, 48]))
    @settings(max_examples=15)
    def test_bounds_true_error(self, fid, seed, n):
        rng = np.random.default_rng(seed)
        p = DiscreteProblem(builtin(fid), builtin_rhs("sin", 5.0), Grid(n))
        exact = solve(p, SolverOptions(tol_cert=1e-13)).x
        x = exact + random_mesh(rng, n, 0.2)
        assert norm_e(x - exact) <= certificate(p, x) + 1e-12


class TestInvariants:
    def test_descent_monotone_history(self, linear_forcing):
        for fid in ("linear", "2.3-c", "2.4-b"):
            sol = solve(DiscreteProblem(builtin(fid), linear_forcing, Grid(32)),
                        SolverOptions(method="preconditioned-descent"))
            h = np.array(sol.history)
            assert sol.converged and np.all(np.diff(h) <= 0)
            assert sol.method_used == "preconditioned-descent"

    def test_deterministic(self, linear_forcing):
        p = DiscreteProblem(builtin("2.3-a"), linear_forcing, Grid(64))
        a, b = solve(p), solve(p)
        assert np.array_equal(a.x.values, b.x.values)
        assert a.history == b.history and a.iterations == b.iterations

    def test_converged_implies_tolerance(self, linear_forcing):
        for tol in (1e-4, 1e-8, 1e-12):
            sol = solve(DiscreteProblem(builtin("atan"), linear_forcing, Grid(40)),
                        SolverOptions(tol_cert=tol))
            assert sol.converged and sol.certificate <= tol

    def test_max_iterations_exhausted(self, linear_forcing):
        sol = solve(DiscreteProblem(builtin("linear"), linear_forcing, Grid(64)),
                    SolverOptions(method="preconditioned-descent", max_iterations=2))
        assert not sol.converged and sol.iterations == 2
        assert sol.certificate == pytest.approx(sol.history[-1])

    def test_uniqueness_from_random_starts(self, rng, linear_forcing):
        opts = SolverOptions()
        p = DiscreteProblem(builtin("2.3-b"), linear_forcing, Grid(48))
        finals = [solve(p, opts, x0=random_mesh(rng, 48, 2.0)).x for _ in range(5)]
        for a in finals:
            for b in finals:
                assert norm_e(a - b) <= 10 * opts.tol_cert

    def test_x0_grid_checked(self):
        p = DiscreteProblem(builtin("linear"), H9, Grid(2))
        with pytest.raises(ValueError):
            solve(p, x0=Grid(3).zeros())

    def test_line_search_failure(self):
        # anti-monotone f: no step decreases the certificate
        bad = Nonlinearity("anti", lambda t, v, x: -40.0 * np.asarray(x, dtype=float))
        p = DiscreteProblem(bad, H9, Grid(2))
        with pytest.raises(LineSearchError) as info:
            solve(p, SolverOptions(method="preconditioned-descent"))
        assert info.value.x is not None and info.value.certificate > 0

    def test_matches_linear_direct(self, linear_forcing):
        grid = Grid(128)
        sol = solve(DiscreteProblem(builtin("linear"), linear_forcing, grid))
        assert norm_e(sol.x - linear_direct(1.0, linear_forcing, grid)) <= 1e-11


class TestLipschitz:
    def test_zero_is_exactly_one(self):
        r = lipschitz_inverse_check(builtin("zero"), builtin_rhs("sin", 2.0),
                                    builtin_rhs("poly", -1.0), Grid(32),
                                    SolverOptions(tol_cert=1e-13))
        assert r == pytest.approx(1.0, abs=1e-9)

    def test_linear_below_one(self):
        r = lipschitz_inverse_check(builtin("linear"), builtin_rhs("sin", 3.0),
                                    builtin_rhs("sin2", 1.0), Grid(64))
        assert r <= 1 + 1e-8

    def test_against_zero_forcing(self, linear_forcing):
        grid = Grid(32)
        f = builtin("cubic")
        r = lipschitz_inverse_check(f, linear_forcing, builtin_rhs("zero"), grid)
        p = DiscreteProblem(f, linear_forcing, grid)
        from monobvp.mesh import riesz_representative
        x1 = solve(p).x
        assert r == pytest.approx(norm_e(x1) / norm_e(riesz_representative(p.load())), rel=1e-8)

    def test_identical_loads(self):
        with pytest.raises(ZeroDivisionError):
            lipschitz_inverse_check(builtin("linear"), builtin_rhs("sin"), builtin_rhs("sin"),
                                    Grid(8))
