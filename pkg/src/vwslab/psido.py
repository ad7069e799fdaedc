"""Discrete quantization p(x, D), weight conjugation and operator probes.

Symbols live in a closed catalog: finite sums of separable terms
a(x) * w(xi) with a smooth closed-form x-part and a sympy xi-part, so both
xi-derivatives (symbolic) and x-derivatives (function-handle orders) are
exact.  Quantization offers a direct O(N^2) evaluator as ground truth and
an exact per-term fast path (multiplication in x, multiplier in xi).

Operator "norms" are maxima over the versioned 10-member Schwartz test
family; true operator norms are not computable.
"""

from __future__ import annotations

import numpy as np
import sympy as sp

from .functions import (
    ConstantFunction,
    FunctionHandle,
    ProductFunction,
    ScaledFunction,
    SmoothFunction,
    default_test_family,
)
from .grids import (
    Field,
    Grid,
    bessel_multiplier,
    derivative,
    field_from_callable,
    inner_product,
    l2_norm,
    weight_multiply,
    weighted_sobolev_norm,
)
from .mollifiers import ConstantCurve, FunctionCurve, ProductWithHandleCurve, SumCurve
from .solver import CoefficientSet

_XI = sp.Symbol("xi", real=True)
_X = sp.Symbol("x", real=True)


class SymbolTerm:
    """One separable term a(x) * w(xi); a None part means the constant 1."""

    def __init__(self, x_handle=None, xi_expr=None):
        self.x_handle = x_handle
        self.xi_expr = None if xi_expr is None else sp.sympify(xi_expr)
        self._xi_fns = {}

    def xi_values(self, xi, order=0):
        if self.xi_expr is None:
            if order == 0:
                return np.ones(np.shape(xi), dtype=complex)
            return np.zeros(np.shape(xi), dtype=complex)
        if order not in self._xi_fns:
            d = sp.diff(self.xi_expr, _XI, order)
            self._xi_fns[order] = sp.lambdify(_XI, d, modules="numpy")
        out = self._xi_fns[order](np.asarray(xi, dtype=float))
        return np.broadcast_to(np.asarray(out), np.shape(xi)).astype(complex)

    def x_values(self, x, order=0):
        if self.x_handle is None:
            if order == 0:
                return np.ones(np.shape(x), dtype=complex)
            return np.zeros(np.shape(x), dtype=complex)
        return np.asarray(self.x_handle.eval(np.asarray(x, dtype=float), order))

    @property
    def is_multiplier(self):
        return self.x_handle is None

    @property
    def is_multiplication(self):
        return self.xi_expr is None


class SymbolSpec:
    """Finite sum of separable terms with a declared order m."""

    def __init__(self, terms, order, name=None):
        self.terms = list(terms)
        self.order = float(order)
        self.name = name

    def evaluate(self, x, xi, x_order=0, xi_order=0):
        """p (or a mixed derivative of p) on the broadcast of x and xi."""
        out = None
        for term in self.terms:
            v = term.x_values(x, x_order) * term.xi_values(xi, xi_order)
            out = v if out is None else out + v
        return out

    @property
    def is_multiplier(self):
        return all(t.is_multiplier for t in self.terms)

    @property
    def is_multiplication(self):
        return all(t.is_multiplication for t in self.terms)

    def seminorm(self, ell, grid: Grid):
        """|p|^(m)_ell: max over derivative orders <= ell of the weighted
        sup of |d_xi^a d_x^b p| * <xi>^(a - m), sampled on grid x dual."""
        x = grid.x[:, None]
        xi = np.sort(grid.xi)[None, :]
        best = 0.0
        for a in range(ell + 1):
            w = (1 + xi ** 2) ** ((a - self.order) / 2)
            for b in range(ell + 1):
                vals = np.abs(self.evaluate(x, xi, x_order=b, xi_order=a))
                best = max(best, float(np.max(vals * w)))
        return best


def multiplier_symbol(xi_expr, order, name=None):
    return SymbolSpec([SymbolTerm(None, xi_expr)], order, name)

def multiplication_symbol(handle, name=None):
    return SymbolSpec([SymbolTerm(handle, None)], 0, name)

def bessel_symbol(m):
    return multiplier_symbol((1 + _XI ** 2) ** (sp.Rational(m) / 2), m,
                             name=f"<xi>^{m}")

def separable_symbol(handle, xi_expr, order, name=None):
    return SymbolSpec([SymbolTerm(handle, xi_expr)], order, name)


# ---------------------------------------------------------------------------
# Quantization


def quantize(p: SymbolSpec, u: Field, method="auto") -> Field:
    """p(x, D) u with the transform normalization of the grid module.

    ``direct`` builds the full N x N kernel (ground truth); ``fast``
    applies each separable term as multiplication o multiplier, which is
    algebraically identical for catalog symbols.
    """
    if method == "auto":
        method = "direct" if u.grid.points <= 512 else "fast"
    if method == "fast":
        return _quantize_fast(p, u)
    if method == "direct":
        return _quantize_direct(p, u)
    raise ValueError(f"unknown quantization method {method!r}")


def _quantize_fast(p: SymbolSpec, u: Field) -> Field:
    xi = u.grid.xi
    spec = np.fft.fft(u.values)
    out = np.zeros(u.grid.points, dtype=complex)
    for term in p.terms:
        filtered = np.fft.ifft(term.xi_values(xi) * spec)
        out += term.x_values(u.grid.x) * filtered
    return Field(u.grid, out)


def _quantize_direct(p: SymbolSpec, u: Field) -> Field:
    grid = u.grid
    x = grid.x
    xi = grid.xi
    # continuum transform on the grid: u_hat(xi_k) = dx e^{iL xi_k} fft(u)_k,
    # inversion weight d xi/(2 pi) = 1/(N dx)
    spec = np.fft.fft(u.values) * np.exp(1j * grid.half_width * xi)
    kernel = p.evaluate(x[:, None], xi[None, :])
    phase = np.exp(1j * np.outer(x, xi))
    out = (phase * kernel) @ spec / grid.points
    return Field(grid, out)


# ---------------------------------------------------------------------------
# Weight conjugation


def conjugated_coefficients(coeffs: CoefficientSet, s: int) -> CoefficientSet:
    """Coefficients of <x>^s (D_x^2 + c1 D_x + c0) <x>^{-s}  (one space dim).

    First order gains 2is x/<x>^2; zeroth order gains
    is <x>^{-1} c1 (x/<x>) - s(s+2) <x>^{-2} x^2/<x>^2 + s <x>^{-2}.
    """
    s = int(s)
    if s < 0:
        raise ValueError("weight exponent must be a nonnegative integer")
    if s == 0:
        return coeffs
    bracket2 = 1 + _X ** 2
    c1_extra = SmoothFunction(2 * sp.I * s * _X / bracket2)
    c0_static = SmoothFunction(
        -s * (s + 2) * _X ** 2 / bracket2 ** 2 + s / bracket2
    )
    c1_new = SumCurve([coeffs.c1, ConstantCurve(c1_extra)])
    c0_new = SumCurve(
        [
            coeffs.c0,
            ProductWithHandleCurve(
                coeffs.c1, SmoothFunction(sp.I * s * _X / bracket2)
            ),
            ConstantCurve(c0_static),
        ]
    )
    return CoefficientSet(c1=c1_new, c0=c0_new)


def apply_spatial_operator(coeffs: CoefficientSet, t: float, v: Field) -> Field:
    """(D_x^2 + c1 D_x + c0) v on the grid, D = -i d/dx."""
    x = v.grid.x
    dxx = -1 * derivative(v, 2).values
    dx = -1j * derivative(v, 1).values
    out = dxx + coeffs.c1.sample(t, x) * dx + coeffs.c0.sample(t, x) * v.values
    return Field(v.grid, out)


def conjugation_test_sets():
    """Three fixed coefficient sets exercised by the conjugation checks:
    empty, smooth decaying, and complex-valued decaying."""
    return [
        CoefficientSet(),
        CoefficientSet(
            c1=ConstantCurve(SmoothFunction(sp.I * sp.exp(-_X ** 2))),
            c0=ConstantCurve(SmoothFunction(sp.cos(_X) * sp.exp(-_X ** 2 / 4))),
        ),
        CoefficientSet(
            c1=ConstantCurve(SmoothFunction(_X / (1 + _X ** 2))),
            c0=ConstantCurve(SmoothFunction(sp.I / (1 + _X ** 2))),
        ),
    ]


def conjugation_identity_error(coeffs: CoefficientSet, s: int, t: float,
                               v: Field) -> float:
    """Relative L^2 gap of S_s(<x>^s v) vs <x>^s S(v)."""
    lhs = apply_spatial_operator(
        conjugated_coefficients(coeffs, s), t, weight_multiply(v, s)
    )
    rhs = weight_multiply(apply_spatial_operator(coeffs, t, v), s)
    denom = max(l2_norm(rhs), 1e-300)
    return l2_norm(lhs - rhs) / denom


# ---------------------------------------------------------------------------
# Operator-bound probes


def _symbol_product(p1: SymbolSpec, p2: SymbolSpec) -> SymbolSpec:
    terms = []
    for t1 in p1.terms:
        for t2 in p2.terms:
            if t1.x_handle is None:
                xh = t2.x_handle
            elif t2.x_handle is None:
                xh = t1.x_handle
            else:
                xh = ProductFunction(t1.x_handle, t2.x_handle)
            if t1.xi_expr is None:
                xe = t2.xi_expr
            elif t2.xi_expr is None:
                xe = t1.xi_expr
            else:
                xe = t1.xi_expr * t2.xi_expr
            terms.append(SymbolTerm(xh, xe))
    return SymbolSpec(terms, p1.order + p2.order)


def _term_xi_derivative(term: SymbolTerm, a: int):
    if term.xi_expr is None:
        return None
    d = sp.diff(term.xi_expr, _XI, a)
    return None if d == 0 else SymbolTerm(term.x_handle, d)


class _DerivativeHandle(FunctionHandle):
    """View of an existing handle shifted by a fixed derivative offset."""

    def __init__(self, inner, offset):
        self.inner = inner
        self.offset = int(offset)
        self.max_order = inner.max_order - self.offset

    def eval(self, x, order=0):
        return self.inner.eval(x, order + self.offset)


def _term_x_d_derivative(term: SymbolTerm, a: int):
    """D_x^a of the x-part: (-i)^a a^(a)(x)."""
    if a == 0:
        return term
    if term.x_handle is None:
        return None
    handle = ScaledFunction((-1j) ** a, _DerivativeHandle(term.x_handle, a))
    return SymbolTerm(handle, term.xi_expr)


def expansion_symbol(p1: SymbolSpec, p2: SymbolSpec, big_n: int) -> SymbolSpec:
    """q_N = sum_{a < N} (1/a!) d_xi^a p1 * D_x^a p2."""
    terms = []
    fact = 1.0
    for a in range(big_n):
        if a > 0:
            fact *= a
        for t1 in p1.terms:
            d1 = t1 if a == 0 else _term_xi_derivative(t1, a)
            if d1 is None and a > 0:
                continue
            for t2 in p2.terms:
                d2 = _term_x_d_derivative(t2, a)
                if d2 is None:
                    continue
                prod = _symbol_product(
                    SymbolSpec([d1], 0), SymbolSpec([d2], 0)
                )
                for term in prod.terms:
                    if a > 0:
                        handle = term.x_handle
                        if handle is None:
                            handle = ConstantFunction(1.0 / fact)
                        else:
                            handle = ScaledFunction(1.0 / fact, handle)
                        term = SymbolTerm(handle, term.xi_expr)
                    terms.append(term)
    return SymbolSpec(terms, p1.order + p2.order)


def test_family_fields(grid: Grid, size=10):
    return [field_from_callable(grid, h) for h in default_test_family(size)]


def composition_residual(p1: SymbolSpec, p2: SymbolSpec, big_n: int,
                         grid: Grid = None, method="fast") -> float:
    """max over the test family of ||(op(p1)op(p2) - op(q_N)) h|| / ||h||."""
    grid = grid or Grid(20.0, 512)
    q = expansion_symbol(p1, p2, big_n)
    worst = 0.0
    for h in test_family_fields(grid):
        two_step = quantize(p1, quantize(p2, h, method), method)
        one_step = quantize(q, h, method)
        worst = max(worst, l2_norm(two_step - one_step) / l2_norm(h))
    return worst


def cv_bound_probe(p: SymbolSpec, s: float, grid: Grid = None,
                   method="fast") -> float:
    """max over the test family of ||p(x,D) h||_{H^s} / ||h||_{H^{s+m}}."""
    grid = grid or Grid(20.0, 512)
    worst = 0.0
    for h in test_family_fields(grid):
        num = weighted_sobolev_norm(quantize(p, h, method), s, 0)
        den = weighted_sobolev_norm(h, s + p.order, 0)
        worst = max(worst, num / den)
    return worst


def garding_probe(p: SymbolSpec, grid: Grid = None, method="fast") -> float:
    """min over the test family of Re<p(x,D) h, h> / ||h||^2."""
    grid = grid or Grid(20.0, 512)
    best = np.inf
    for h in test_family_fields(grid):
        val = inner_product(quantize(p, h, method), h).real
        best = min(best, val / l2_norm(h) ** 2)
    return float(best)
