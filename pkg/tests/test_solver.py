"""Time integrator checks against closed-form and manufactured solutions."""

import numpy as np
import pytest
import sympy as sp

from vwslab.functions import ConstantFunction, SmoothFunction
from vwslab.grids import Grid, field_from_callable, l2_norm
from vwslab.mollifiers import ConstantCurve, ModulatedCurve
from vwslab.solver import (
    CauchyProblemSpec,
    CoefficientSet,
    ZeroCurve,
    conservation_probe,
    solve,
    stable_dt,
)

_X = sp.Symbol("x", real=True)


@pytest.fixture(scope="module")
def grid():
    return Grid(40.0, 2048)


def gaussian_data(grid, width=1.0):
    return field_from_callable(grid, lambda x: np.exp(-x ** 2 / width))


def free_gaussian_exact(x, t):
    # d/dt u = i u_xx with u(0) = e^{-x^2/2}
    z = 1 + 2j * t
    return np.exp(-x ** 2 / (2 * z)) / np.sqrt(z)


class ForcingCurve:
    """f(t, x) built from a sympy expression in t and x."""

    is_static = False

    def __init__(self, expr, t_sym, x_sym):
        self._fn = sp.lambdify((t_sym, x_sym), expr, modules="numpy")

    def sample(self, t, x):
        return np.asarray(self._fn(t, x), dtype=complex)

    def max_abs(self, t_nodes, x):
        return max(float(np.max(np.abs(self.sample(t, x)))) for t in t_nodes)


def manufactured_problem(grid, min_steps=64):
    # u* = e^{-x^2} e^{it}; the forcing is derived symbolically from the
    # operator applied to u*
    t = sp.Symbol("t", real=True)
    u_star = sp.exp(-_X ** 2) * sp.exp(sp.I * t)
    # d/dt u = i u_xx + i f  =>  f = -i u_t - u_xx
    f = sp.simplify(-sp.I * sp.diff(u_star, t) - sp.diff(u_star, _X, 2))
    spec = CauchyProblemSpec(
        grid,
        gaussian_data(grid),
        0.25,
        forcing=ForcingCurve(f, t, _X),
        min_steps=min_steps,
        snapshot_count=1,
    )
    exact = np.exp(-grid.x ** 2) * np.exp(1j * 0.25)
    return spec, exact


class TestFreeEvolution:
    def test_matches_closed_form(self, grid):
        data = field_from_callable(grid, lambda x: np.exp(-x ** 2 / 2))
        report = solve(CauchyProblemSpec(grid, data, 0.5))
        exact = free_gaussian_exact(grid.x, 0.5)
        assert np.max(np.abs(report.final().values - exact)) < 1e-6

    def test_mass_conserved(self, grid):
        spec = CauchyProblemSpec(grid, gaussian_data(grid), 0.5)
        assert conservation_probe(spec) < 1e-12

    def test_snapshot_nodes(self, grid):
        spec = CauchyProblemSpec(grid, gaussian_data(grid), 0.4, snapshot_count=5)
        report = solve(spec)
        np.testing.assert_allclose(report.t_nodes, np.linspace(0, 0.4, 6))
        assert len(report.snapshots) == 6


class TestManufactured:
    def test_error_small(self, grid):
        spec, exact = manufactured_problem(grid)
        report = solve(spec)
        assert np.max(np.abs(report.final().values - exact)) < 1e-7

    def test_temporal_order_four(self, grid):
        errs = []
        steps = (8, 16, 32)
        for ms in steps:
            spec, exact = manufactured_problem(grid, min_steps=ms)
            report = solve(spec)
            errs.append(np.max(np.abs(report.final().values - exact)))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(np.abs(orders - 4.0) < 0.3)


class TestCoefficients:
    def test_linearity_in_data(self, grid):
        c1 = ConstantCurve(SmoothFunction(sp.I * sp.exp(-_X ** 2)))
        base = CauchyProblemSpec(
            grid, gaussian_data(grid), 0.3,
            coefficients=CoefficientSet(c1=c1),
        )
        doubled = CauchyProblemSpec(
            grid, 2.0 * gaussian_data(grid), 0.3,
            coefficients=CoefficientSet(c1=c1),
        )
        a, b = solve(base), solve(doubled)
        np.testing.assert_allclose(
            b.final().values, 2.0 * a.final().values, atol=1e-12
        )

    def test_real_potential_conserves_mass(self, grid):
        c0 = ConstantCurve(SmoothFunction(sp.cos(_X) * sp.exp(-_X ** 2 / 8)))
        spec = CauchyProblemSpec(
            grid, gaussian_data(grid), 0.4,
            coefficients=CoefficientSet(c0=c0),
        )
        assert conservation_probe(spec) < 1e-10

    def test_time_dependent_coefficient_runs(self, grid):
        c0 = ModulatedCurve(lambda t: np.cos(t), SmoothFunction(sp.exp(-_X ** 2)))
        spec = CauchyProblemSpec(
            grid, gaussian_data(grid), 0.3,
            coefficients=CoefficientSet(c0=c0),
        )
        report = solve(spec)
        assert not report.aborted
        assert np.all(np.isfinite(report.final().values))

    def test_cfl_limits_step(self, grid):
        fast = ConstantCurve(ConstantFunction(50.0))
        spec = CauchyProblemSpec(
            grid, gaussian_data(grid), 0.5,
            coefficients=CoefficientSet(c1=fast),
        )
        assert stable_dt(spec) == pytest.approx(0.5 * grid.spacing / 50.0)
        free = CauchyProblemSpec(grid, gaussian_data(grid), 0.5)
        assert stable_dt(free) == pytest.approx(0.5 / 64)


class TestGuards:
    def test_overflow_aborts(self, grid):
        # c0 = 100i makes d/dt u = +100 u: e^{100 t} crosses the 1e12 guard
        c0 = ConstantCurve(ConstantFunction(100.0j))
        spec = CauchyProblemSpec(
            grid, gaussian_data(grid), 0.5,
            coefficients=CoefficientSet(c0=c0),
        )
        report = solve(spec)
        assert report.aborted
        assert report.aborted_t is not None and report.aborted_t <= 0.5

    def test_bad_horizon_rejected(self, grid):
        with pytest.raises(ValueError):
            CauchyProblemSpec(grid, gaussian_data(grid), -1.0)

    def test_grid_mismatch_rejected(self, grid):
        other = Grid(40.0, 1024)
        with pytest.raises(ValueError):
            CauchyProblemSpec(other, gaussian_data(grid), 1.0)

    def test_zero_data_stays_zero(self, grid):
        spec = CauchyProblemSpec(
            grid, field_from_callable(grid, lambda x: 0.0 * x), 0.3
        )
        report = solve(spec)
        assert l2_norm(report.final()) == 0.0
