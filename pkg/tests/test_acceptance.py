"""Acceptance gate: ten end-to-end criteria, one printed verdict line each.

Every criterion runs the public API exactly as a user would and asserts the
advertised tolerance.  The print happens before the assert so a red run
still shows which criteria held.
"""

import time

import numpy as np
import pytest
import sympy as sp

from vwslab import distributions as dist
from vwslab.functions import SmoothFunction, default_test_family, gaussian
from vwslab.grids import Grid, field_from_callable, l2_norm
from vwslab.harness import (
    COEFF_SCALE_EPS_GRID,
    REGULARIZATION_EPS_GRID,
    run_classical,
    run_consistency,
    run_existence,
    run_uniqueness,
    template_by_name,
)
from vwslab.mollifiers import (
    IDENTITY_SCALE,
    flat_pair,
    gaussian_pair,
    regularization_error,
    regularize,
)
from vwslab.psido import (
    bessel_symbol,
    composition_residual,
    conjugation_identity_error,
    conjugation_test_sets,
    cv_bound_probe,
    garding_probe,
    multiplication_symbol,
    multiplier_symbol,
)
from vwslab.solver import CauchyProblemSpec, solve

_X = sp.Symbol("x", real=True)
_XI = sp.Symbol("xi", real=True)


def _verdict(num, label, ok):
    print(f"criterion {num:2d} [{label}]: {'PASS' if ok else 'FAIL'}")
    assert ok, f"criterion {num} ({label}) failed"


def _fit_slope(eps_grid, values):
    return float(
        np.polyfit(np.log(1 / np.asarray(eps_grid)), np.log(values), 1)[0]
    )


def test_criterion_01_delta_norm_scaling():
    start = time.perf_counter()
    pair = flat_pair()
    grid = Grid(40.0, 4096)
    eps_grid = [2.0 ** -k for k in range(2, 8)]
    norms = [
        l2_norm(dist.sample(
            regularize(dist.DiracDelta(), pair, IDENTITY_SCALE, e), grid
        ))
        for e in eps_grid
    ]
    slope = _fit_slope(eps_grid, norms)
    elapsed = time.perf_counter() - start
    _verdict(1, "delta norm slope 1/2",
             abs(slope - 0.5) <= 0.05 and elapsed < 10.0)


def test_criterion_02_mollifier_order():
    flat_errs = [
        regularization_error(gaussian(), flat_pair(), e, 0, 0)
        for e in REGULARIZATION_EPS_GRID
    ]
    flat_slope = -_fit_slope(REGULARIZATION_EPS_GRID, flat_errs)
    gauss_errs = [
        regularization_error(gaussian(), gaussian_pair(), e, 0, 0)
        for e in REGULARIZATION_EPS_GRID
    ]
    gauss_slope = -_fit_slope(REGULARIZATION_EPS_GRID, gauss_errs)
    ok = (
        flat_slope >= 2 - 0.2          # q = 2 requirement
        and flat_slope >= 4 - 0.2      # q = 4 requirement
        and abs(gauss_slope - 2.0) <= 0.3
    )
    _verdict(2, "regularization error order", ok)


def test_criterion_03_distributional_convergence():
    pair = flat_pair()
    x = np.linspace(-60, 60, 2 ** 16 + 1)
    family = default_test_family(10)
    catalog = [
        dist.DiracDelta(),
        dist.DiracDelta(order=1),
        dist.Heaviside(),
        dist.Polynomial((0.0, 1.0)),
        dist.CatalogSmooth("gaussian"),
    ]
    ok = True
    for u in catalog:
        exact = [dist.pair(u, h) for h in family]
        gaps = [[] for _ in family]
        for eps in REGULARIZATION_EPS_GRID:
            vals = regularize(u, pair, IDENTITY_SCALE, eps).eval(x)
            for j, h in enumerate(family):
                approx = np.trapezoid(vals * h.eval(x), x)
                gaps[j].append(abs(approx - exact[j]))
        for errs in gaps:
            # 5% slack plus an additive floor for roundoff-limited pairs
            monotone = all(
                b <= a * 1.05 + 1e-9 for a, b in zip(errs, errs[1:])
            )
            ok = ok and monotone and errs[-1] < 1e-3
    _verdict(3, "pairing convergence 5x10", ok)


def _manufactured(grid, min_steps):
    class Forcing:
        is_static = False

        def __init__(self):
            t = sp.Symbol("t", real=True)
            u_star = sp.exp(-_X ** 2) * sp.exp(sp.I * t)
            expr = sp.simplify(
                -sp.I * sp.diff(u_star, t) - sp.diff(u_star, _X, 2)
            )
            self._fn = sp.lambdify((t, _X), expr, modules="numpy")

        def sample(self, t, x):
            return np.asarray(self._fn(t, x), dtype=complex)

        def max_abs(self, t_nodes, x):
            return max(
                float(np.max(np.abs(self.sample(t, x)))) for t in t_nodes
            )

    data = field_from_callable(grid, lambda x: np.exp(-x ** 2))
    spec = CauchyProblemSpec(
        grid, data, 0.25, forcing=Forcing(), min_steps=min_steps,
        snapshot_count=1,
    )
    exact = np.exp(-grid.x ** 2) * np.exp(1j * 0.25)
    return spec, exact


def test_criterion_04_solver_validation():
    start = time.perf_counter()
    grid = Grid(40.0, 2048)
    data = field_from_callable(grid, lambda x: np.exp(-x ** 2 / 2))
    report = solve(CauchyProblemSpec(grid, data, 0.5))
    z = 1 + 2j * 0.5
    exact = np.exp(-grid.x ** 2 / (2 * z)) / np.sqrt(z)
    free_err = float(np.max(np.abs(report.final().values - exact)))

    errs = []
    for ms in (8, 16, 32):
        spec, target = _manufactured(grid, ms)
        errs.append(float(np.max(np.abs(solve(spec).final().values - target))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    spec, target = _manufactured(grid, 64)
    man_err = float(np.max(np.abs(solve(spec).final().values - target)))
    elapsed = time.perf_counter() - start
    ok = (
        free_err < 1e-6
        and np.all(np.abs(orders - 4.0) <= 0.3)
        and man_err < 1e-7
        and elapsed < 30.0
    )
    _verdict(4, "solver validation", ok)


def test_criterion_05_conjugation_identity():
    grid = Grid(40.0, 2048)
    v = field_from_callable(
        grid, lambda x: (1 + 0.3 * x) * np.exp(-x ** 2 / 2)
    )
    worst = max(
        conjugation_identity_error(coeffs, s, 0.0, v)
        for coeffs in conjugation_test_sets()
        for s in (0, 1, 2, 3)
    )
    _verdict(5, "weight conjugation", worst < 1e-8)


def test_criterion_06_existence_moderateness():
    start = time.perf_counter()
    ok = True
    for name in ("c0_delta", "c1_delta", "c0_heaviside"):
        res = run_existence(template_by_name(name))
        ok = ok and res["verdict"] == "moderate" and not res["aborted_eps"]
    elapsed = time.perf_counter() - start
    _verdict(6, "existence nets moderate", ok and elapsed < 600.0)


def test_criterion_07_uniqueness_negligibility():
    ok = True
    for q in (2, 4):
        res = run_uniqueness(template_by_name("regular"), q)
        ok = ok and res["verdict"] == "negligible"
        for fit in res["fits"].values():
            ok = ok and (-fit.slope >= q - 0.5)
    _verdict(7, "uniqueness perturbations", ok)


def test_criterion_08_consistency_limit_independence():
    ok = True
    for pair in (gaussian_pair(), flat_pair()):
        res = run_consistency(template_by_name("regular"), pair=pair)
        ok = (
            ok and res["verdict"] == "consistent"
            and res["monotone"] and res["final_error"] < 1e-3
        )
    _verdict(8, "consistency, both pairs", ok)


def test_criterion_09_classical_regime():
    decay = run_classical(template_by_name("classical_decay"))
    nondecay = run_classical(template_by_name("classical_nondecay"))
    ok = (
        decay["verdict"] == "uniform"
        and decay["spread"] < 0.10
        and nondecay["decay_ok"] is False
        and nondecay["verdict"] == "outside-regime"
    )
    _verdict(9, "classical regime split", ok)


def test_criterion_10_operator_probes():
    coarse, fine = Grid(20.0, 512), Grid(20.0, 1024)

    cv_a = cv_bound_probe(bessel_symbol(1), 0.0, coarse)
    cv_b = cv_bound_probe(bessel_symbol(1), 0.0, fine)
    cv_exact = abs(cv_a - 1.0) < 1e-12 and abs(cv_b - 1.0) < 1e-12

    p1 = multiplier_symbol(_XI ** 2, 2)
    p2 = multiplication_symbol(SmoothFunction(sp.exp(-_X ** 2)))
    comp_a = composition_residual(p1, p2, 3, coarse)
    comp_b = composition_residual(p1, p2, 3, fine)
    comp_ok = comp_a < 1e-10 and comp_b < 1e-10

    g_a = garding_probe(bessel_symbol(1), coarse)
    g_b = garding_probe(bessel_symbol(1), fine)
    garding_ok = g_a >= 0 and g_b >= 0
    g_stable = abs(g_a - g_b) / max(abs(g_a), abs(g_b), 1e-30) < 0.05

    _verdict(10, "operator probes",
             cv_exact and comp_ok and garding_ok and g_stable)
