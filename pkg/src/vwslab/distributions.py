"""Closed symbolic catalog of tempered distributions on the real line.

Members: Dirac deltas (any derivative order), Heaviside steps, polynomials,
a small family of smooth catalog functions, plus complex scalings and
finite sums.  Pairing against closed-form Schwartz test functions is exact
per variant (delta derivatives evaluate the test function, Heaviside
integrates it, locally integrable variants use adaptive Gauss-Kronrod
quadrature).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

import numpy as np
from scipy.integrate import quad

from .functions import (
    FunctionHandle,
    SmoothFunction,
    gaussian,
    lorentzian,
    odd_lorentzian,
    polynomial_fn,
    sech_fn,
    sine_packet,
)

QUAD_ABS_TOL = 1e-12
QUAD_HALF_WIDTH = 60.0

CATALOG_SMOOTH_BUILDERS = {
    "gaussian": gaussian,
    "sech": sech_fn,
    "sine_pack": sine_packet,
    "lorentzian": lorentzian,
    "odd_lorentzian": odd_lorentzian,
}


class SingularSamplingError(ValueError):
    """Raised when a singular distribution is sampled pointwise."""


class QuadratureError(RuntimeError):
    """Quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class DiracDelta:
    center: float = 0.0
    order: int = 0

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("delta derivative order must be >= 0")


@dataclass(frozen=True)
class Heaviside:
    center: float = 0.0


@dataclass(frozen=True)
class Polynomial:
    coefficients: tuple  # ascending powers, complex

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coefficients)
        if not coeffs:
            raise ValueError("polynomial needs at least one coefficient")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self):
        deg = 0
        for k, c in enumerate(self.coefficients):
            if c != 0:
                deg = k
        return deg


@dataclass(frozen=True)
class CatalogSmooth:
    name: str
    params: tuple = ()

    def __post_init__(self):
        if self.name not in CATALOG_SMOOTH_BUILDERS:
            raise ValueError(f"unknown catalog function {self.name!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    def function(self) -> SmoothFunction:
        return CATALOG_SMOOTH_BUILDERS[self.name](*self.params)


@dataclass(frozen=True)
class Scaled:
    scalar: complex
    inner: "DistributionExpr"

    def __post_init__(self):
        s = complex(self.scalar)
        if s == 0:
            raise ValueError("scalar must be nonzero (use an explicit zero field)")
        object.__setattr__(self, "scalar", s)


@dataclass(frozen=True)
class Sum:
    terms: tuple

    def __post_init__(self):
        terms = tuple(self.terms)
        if len(terms) < 2:
            raise ValueError("sum needs at least two terms")
        object.__setattr__(self, "terms", terms)


DistributionExpr = (DiracDelta, Heaviside, Polynomial, CatalogSmooth, Scaled, Sum)


def weight_order(u) -> int:
    """Polynomial weight order N used in the moderateness estimates.

    Per-variant assignment: delta^(k) -> k, Heaviside -> 0, polynomial of
    degree d -> d, catalog smooth -> 0 (all bounded or <x>^1 at worst).
    """
    if isinstance(u, DiracDelta):
        return u.order
    if isinstance(u, Heaviside):
        return 0
    if isinstance(u, Polynomial):
        return u.degree
    if isinstance(u, CatalogSmooth):
        return 0
    if isinstance(u, Scaled):
        return weight_order(u.inner)
    if isinstance(u, Sum):
        return max(weight_order(t) for t in u.terms)
    raise TypeError(f"not a distribution expression: {u!r}")


def is_singular(u) -> bool:
    if isinstance(u, DiracDelta):
        return True
    if isinstance(u, Scaled):
        return is_singular(u.inner)
    if isinstance(u, Sum):
        return any(is_singular(t) for t in u.terms)
    return False


def _quad_complex(fn, a, b, points=None):
    kw = {"epsabs": QUAD_ABS_TOL, "epsrel": 1e-11, "limit": 200}
    if points is not None and np.isfinite(a) and np.isfinite(b):
        kw["points"] = points
    re, re_err = quad(lambda t: float(np.real(fn(t))), a, b, **kw)
    im, im_err = quad(lambda t: float(np.imag(fn(t))), a, b, **kw)
    if re_err + im_err > 1e-8:
        raise QuadratureError(
            f"quadrature error estimate {re_err + im_err:.2e} above tolerance"
        )
    return re + 1j * im


def pair(u, h) -> complex:
    """<u, h> for a catalog distribution u and closed-form test function h."""
    if isinstance(u, DiracDelta):
        val = h.eval(np.array([u.center]), u.order)[0]
        return complex((-1) ** u.order * val)
    if isinstance(u, Heaviside):
        lo, hi = u.center, QUAD_HALF_WIDTH + abs(u.center)
        return _quad_complex(lambda t: h.eval(np.array([t]))[0], lo, hi)
    if isinstance(u, Polynomial):
        p = np.polynomial.Polynomial(np.array(u.coefficients))
        return _quad_complex(
            lambda t: p(t) * h.eval(np.array([t]))[0],
            -QUAD_HALF_WIDTH,
            QUAD_HALF_WIDTH,
        )
    if isinstance(u, CatalogSmooth):
        f = u.function()
        return _quad_complex(
            lambda t: f.eval(np.array([t]))[0] * h.eval(np.array([t]))[0],
            -QUAD_HALF_WIDTH,
            QUAD_HALF_WIDTH,
        )
    if isinstance(u, Scaled):
        return u.scalar * pair(u.inner, h)
    if isinstance(u, Sum):
        return sum(pair(t, h) for t in u.terms)
    raise TypeError(f"not a distribution expression: {u!r}")


# ---------------------------------------------------------------------------
# Convolution with a mollifier kernel


class ConvolvedDistribution(FunctionHandle):
    """Smooth function (psi_eps * u)(x), pointwise-evaluable with derivatives.

    The kernel object must provide eval(z, order), antiderivative(z),
    moment(j) and quadrature_nodes() (nodes, weights covering its effective
    support).
    """

    def __init__(self, u, kernel, eps):
        if not 0 < eps <= np.inf:
            raise ValueError("eps must be positive")
        self.u = u
        self.kernel = kernel
        self.eps = float(eps)
        self.max_order = kernel.max_order
        self._poly_cache = None

    # -- per-variant evaluation -------------------------------------------

    def eval(self, x, order=0):
        self._check_order(order)
        x = np.asarray(x, dtype=float)
        return self._eval_variant(self.u, x, order)

    def _eval_variant(self, u, x, order):
        eps = self.eps
        if isinstance(u, DiracDelta):
            k = u.order + order
            if k > self.kernel.max_order:
                raise ValueError(
                    f"kernel derivative order {k} above table limit"
                )
            return (
                eps ** (-1 - k) * self.kernel.eval((x - u.center) / eps, k)
            ).astype(complex)
        if isinstance(u, Heaviside):
            z = (x - u.center) / eps
            if order == 0:
                return self.kernel.antiderivative(z).astype(complex)
            return (eps ** (-order) * self.kernel.eval(z, order - 1)).astype(
                complex
            )
        if isinstance(u, Polynomial):
            # psi_eps * p = sum_j p^(j)(x) (-1)^j eps^j mu_j / j!   (exact)
            q = self._convolved_polynomial(u)
            return np.polynomial.polynomial.polyval(
                x, np.polynomial.polynomial.polyder(q, order) if order else q
            ).astype(complex)
        if isinstance(u, CatalogSmooth):
            f = u.function()
            nodes, weights = self.kernel.quadrature_nodes()
            out = np.zeros(x.shape, dtype=complex)
            kv = self.kernel.eval(nodes, 0)
            block = max(1, int(2e6 // max(nodes.size, 1)))
            for i in range(0, x.size, block):
                xs = x.flat[i : i + block]
                vals = f.eval(xs[:, None] - eps * nodes[None, :], order)
                out.flat[i : i + block] = vals @ (kv * weights)
            return out
        if isinstance(u, Scaled):
            return u.scalar * self._eval_variant(u.inner, x, order)
        if isinstance(u, Sum):
            out = np.zeros(x.shape, dtype=complex)
            for t in u.terms:
                out = out + self._eval_variant(t, x, order)
            return out
        raise TypeError(f"not a distribution expression: {u!r}")

    def _convolved_polynomial(self, u):
        if self._poly_cache is None:
            p = np.array(u.coefficients, dtype=complex)
            q = np.zeros_like(p)
            for j in range(p.size):
                mu = self.kernel.moment(j)
                if mu == 0:
                    continue
                dj = p.copy()
                for _ in range(j):
                    dj = np.polynomial.polynomial.polyder(dj)
                q[: dj.size] += (
                    ((-1) ** j) * (self.eps ** j) * mu / factorial(j)
                ) * dj
            self._poly_cache = q
        return self._poly_cache


def convolve_mollifier(u, kernel, eps) -> ConvolvedDistribution:
    """(psi_eps * u) as a smooth pointwise-evaluable handle."""
    return ConvolvedDistribution(u, kernel, eps)


def sample(u, grid):
    """Pointwise samples of a locally integrable variant (or smooth handle).

    Singular variants must be mollified first.
    """
    from .grids import Field

    if isinstance(u, FunctionHandle):
        return Field(grid, np.asarray(u.eval(grid.x), dtype=complex))
    if is_singular(u):
        raise SingularSamplingError("singular: mollify first")
    return Field(grid, _sample_values(u, grid.x))


def _sample_values(u, x):
    if isinstance(u, Heaviside):
        return np.where(x >= u.center, 1.0, 0.0).astype(complex)
    if isinstance(u, Polynomial):
        return np.polynomial.polynomial.polyval(
            x, np.array(u.coefficients, dtype=complex)
        )
    if isinstance(u, CatalogSmooth):
        return np.asarray(u.function().eval(x), dtype=complex)
    if isinstance(u, Scaled):
        return u.scalar * _sample_values(u.inner, x)
    if isinstance(u, Sum):
        return sum(_sample_values(t, x) for t in u.terms)
    raise TypeError(f"not a samplable distribution: {u!r}")


def as_function(u) -> FunctionHandle:
    """Closed-form handle for a regular (non-singular) catalog member."""
    from .functions import ConstantFunction, ScaledFunction, SumFunction

    if isinstance(u, Polynomial):
        return polynomial_fn(u.coefficients)
    if isinstance(u, CatalogSmooth):
        return u.function()
    if isinstance(u, Scaled):
        return ScaledFunction(u.scalar, as_function(u.inner))
    if isinstance(u, Sum):
        return SumFunction([as_function(t) for t in u.terms])
    raise TypeError(f"no closed-form handle for {u!r}")


# ---------------------------------------------------------------------------
# JSON schema


def to_json(u) -> dict:
    if isinstance(u, DiracDelta):
        return {"variant": "dirac_delta", "center": u.center, "order": u.order}
    if isinstance(u, Heaviside):
        return {"variant": "heaviside", "center": u.center}
    if isinstance(u, Polynomial):
        return {
            "variant": "polynomial",
            "coefficients": [[c.real, c.imag] for c in u.coefficients],
        }
    if isinstance(u, CatalogSmooth):
        return {"variant": "catalog_smooth", "name": u.name, "params": list(u.params)}
    if isinstance(u, Scaled):
        return {
            "variant": "scaled",
            "scalar": [u.scalar.real, u.scalar.imag],
            "inner": to_json(u.inner),
        }
    if isinstance(u, Sum):
        return {"variant": "sum", "terms": [to_json(t) for t in u.terms]}
    raise TypeError(f"not a distribution expression: {u!r}")


def from_json(d: dict):
    variant = d["variant"]
    if variant == "dirac_delta":
        return DiracDelta(center=d.get("center", 0.0), order=d.get("order", 0))
    if variant == "heaviside":
        return Heaviside(center=d.get("center", 0.0))
    if variant == "polynomial":
        return Polynomial(tuple(complex(c[0], c[1]) for c in d["coefficients"]))
    if variant == "catalog_smooth":
        return CatalogSmooth(d["name"], tuple(d.get("params", ())))
    if variant == "scaled":
        s = d["scalar"]
        return Scaled(complex(s[0], s[1]), from_json(d["inner"]))
    if variant == "sum":
        return Sum(tuple(from_json(t) for t in d["terms"]))
    raise ValueError(f"unknown distribution variant {variant!r}")
