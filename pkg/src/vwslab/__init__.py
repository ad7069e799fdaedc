"""Numerical laboratory for Schrodinger-type Cauchy problems with
distributional coefficients: regularization by mollifier nets, spectral
time integration, and verdicts on moderateness / negligibility /
consistency of the resulting epsilon-families."""

from .distributions import (
    CatalogSmooth,
    DiracDelta,
    Heaviside,
    Polynomial,
    Scaled,
    Sum,
    convolve_mollifier,
    pair,
    sample,
)
from .grids import Field, Grid, l2_norm, schwartz_seminorm, weighted_sobolev_norm
from .harness import (
    EpsilonNet,
    FitResult,
    ProblemTemplate,
    build_net,
    fit_powerlaw,
    run_classical,
    run_consistency,
    run_existence,
    run_uniqueness,
    template_by_name,
)
from .mollifiers import (
    EpsilonScale,
    MollifierPair,
    flat_pair,
    gaussian_pair,
    omega,
    regularization_error,
    regularize,
)
from .psido import (
    SymbolSpec,
    composition_residual,
    conjugated_coefficients,
    cv_bound_probe,
    garding_probe,
    quantize,
)
from .solver import CauchyProblemSpec, CoefficientSet, SolveReport, solve

__version__ = "0.1.0"
