"""Epsilon-net construction, power-law fitting and experiment verdicts."""

import numpy as np
import pytest

from vwslab import distributions as dist
from vwslab.harness import (
    COEFF_SCALE_EPS_GRID,
    DEFAULT_EPS_GRID,
    EpsilonNet,
    ProblemTemplate,
    build_net,
    fit_loglog,
    fit_powerlaw,
    imag_decay_ok,
    reference_solution,
    run_consistency,
    run_uniqueness,
    template_by_name,
)
from vwslab.mollifiers import IDENTITY_SCALE, gaussian_pair


class TestFitLoglog:
    def test_constant_net_is_moderate_zero(self):
        fit = fit_loglog(DEFAULT_EPS_GRID, np.full(6, 3.0))
        assert fit.verdict == "moderate"
        assert fit.rate == 0.0
        assert fit.is_moderate

    def test_power_decay_is_negligible(self):
        eps = np.asarray(DEFAULT_EPS_GRID)
        fit = fit_loglog(eps, 5.0 * eps ** 3)
        assert fit.verdict == "negligible"
        assert fit.rate == pytest.approx(3.0, abs=1e-10)
        # negligible implies moderate
        assert fit.is_moderate

    def test_power_growth_is_moderate(self):
        eps = np.asarray(DEFAULT_EPS_GRID)
        fit = fit_loglog(eps, 2.0 * eps ** -1.4)
        assert fit.verdict == "moderate"
        assert fit.rate == 2.0  # ceil of the fitted slope

    def test_noise_is_indeterminate(self):
        rng = np.random.default_rng(2)
        norms = np.exp(3 * rng.standard_normal(6))
        fit = fit_loglog(DEFAULT_EPS_GRID, norms)
        assert fit.verdict == "indeterminate"
        assert not fit.is_moderate

    def test_zero_net_is_negligible(self):
        fit = fit_loglog(DEFAULT_EPS_GRID, np.zeros(6))
        assert fit.verdict == "negligible"
        assert fit.rate == np.inf

    def test_too_few_points_rejected(self):
        with pytest.raises(ValueError):
            fit_loglog((0.5, 0.25, 0.125), (1.0, 1.0, 1.0))


class TestTemplates:
    def test_catalog_names(self):
        for name in ("c0_delta", "c1_delta", "c0_heaviside", "regular",
                     "classical_decay", "classical_nondecay", "free", "zero"):
            assert template_by_name(name).name == name
        with pytest.raises(ValueError):
            template_by_name("c0_white_noise")

    def test_singular_templates_flagged(self):
        assert dist.is_singular(template_by_name("c0_delta").c0)
        assert template_by_name("regular").is_regular
        assert not template_by_name("c0_delta").is_regular

    def test_imag_decay_classification(self):
        assert imag_decay_ok(template_by_name("classical_decay"))
        assert imag_decay_ok(template_by_name("free"))
        assert not imag_decay_ok(template_by_name("classical_nondecay"))


class TestNets:
    def test_minimum_eps_count_enforced(self):
        with pytest.raises(ValueError):
            EpsilonNet(
                template_by_name("free"), (0.5, 0.25), gaussian_pair(),
                IDENTITY_SCALE, IDENTITY_SCALE, [],
            )

    def test_free_net_slope_zero(self):
        net = build_net(template_by_name("free"), COEFF_SCALE_EPS_GRID)
        fit = fit_powerlaw(net, 0, 0)
        assert fit.verdict == "moderate"
        assert abs(fit.slope) < 0.1

    def test_delta_data_half_slope(self):
        # ||regularized delta||_{L^2} grows like eps^{-1/2}; the grid must
        # resolve the kernel width at the smallest eps
        template = ProblemTemplate(
            "delta_data", data=dist.DiracDelta(), horizon=0.1,
            half_width=10.0, points=2048,
        )
        net = build_net(template, DEFAULT_EPS_GRID,
                        coeff_scale=IDENTITY_SCALE)
        fit = fit_powerlaw(net, 0, 0, t_index=0)
        assert fit.slope == pytest.approx(0.5, abs=0.05)

    def test_zero_template_negligible(self):
        net = build_net(template_by_name("zero"), COEFF_SCALE_EPS_GRID)
        fit = fit_powerlaw(net, 0, 0)
        assert fit.verdict == "negligible"

    def test_parallel_build_matches_serial(self):
        template = template_by_name("regular")
        a = build_net(template, COEFF_SCALE_EPS_GRID)
        b = build_net(template, COEFF_SCALE_EPS_GRID, jobs=2)
        for ra, rb in zip(a.reports, b.reports):
            np.testing.assert_array_equal(
                ra.final().values, rb.final().values
            )


class TestExperiments:
    def test_uniqueness_requires_actual_decay(self):
        # q = 0 perturbations do not vanish; the verdict must not pass
        out = run_uniqueness(template_by_name("regular"), q=0)
        assert out["verdict"] == "indeterminate"

    def test_uniqueness_quadratic(self):
        out = run_uniqueness(template_by_name("regular"), q=2)
        assert out["verdict"] == "negligible"
        for fit in out["fits"].values():
            assert -fit.slope >= 1.5

    def test_consistency_regular(self):
        out = run_consistency(template_by_name("regular"))
        assert out["verdict"] == "consistent"
        assert out["monotone"]
        assert out["final_error"] < 1e-3

    def test_reference_rejects_singular(self):
        with pytest.raises(ValueError):
            reference_solution(template_by_name("c0_delta"))

    def test_reference_zero_template(self):
        report = reference_solution(template_by_name("zero"))
        assert np.all(report.final().values == 0)
