"""Closed-form smooth function handles with exact derivatives.

Everything that needs pointwise values *and* derivatives (test functions,
catalog coefficients, mollifier cutoffs, regularised distributions) goes
through the small ``FunctionHandle`` interface: ``eval(x, order)`` for
derivative orders up to ``MAX_DERIVATIVE``.  Closed-form members are backed
by sympy so derivatives are exact; composite handles (sums, products,
argument scalings) apply the calculus rules explicitly.
"""

from __future__ import annotations

import numpy as np
import sympy as sp

MAX_DERIVATIVE = 8

_X = sp.Symbol("x", real=True)


class FunctionHandle:
    """Pointwise-evaluable function with derivatives up to MAX_DERIVATIVE."""

    max_order = MAX_DERIVATIVE

    def eval(self, x, order=0):
        raise NotImplementedError

    def __call__(self, x):
        return self.eval(x, 0)

    def _check_order(self, order):
        if order < 0 or order > self.max_order:
            raise ValueError(
                f"derivative order {order} outside supported range "
                f"[0, {self.max_order}]"
            )


class SmoothFunction(FunctionHandle):
    """Sympy-backed closed-form function of one real variable."""

    def __init__(self, expr, max_order=MAX_DERIVATIVE):
        self.expr = sp.sympify(expr)
        self.max_order = max_order
        self._lambdified = {}

    def _fn(self, order):
        if order not in self._lambdified:
            d = sp.diff(self.expr, _X, order)
            self._lambdified[order] = sp.lambdify(_X, d, modules="numpy")
        return self._lambdified[order]

    def eval(self, x, order=0):
        self._check_order(order)
        x = np.asarray(x, dtype=float)
        out = self._fn(order)(x)
        return np.broadcast_to(np.asarray(out), x.shape).astype(complex)

    def derivative_expr(self, order):
        return sp.diff(self.expr, _X, order)

    def __repr__(self):
        return f"SmoothFunction({self.expr})"


class ConstantFunction(FunctionHandle):
    def __init__(self, value):
        self.value = complex(value)

    def eval(self, x, order=0):
        self._check_order(order)
        x = np.asarray(x, dtype=float)
        if order == 0:
            return np.full(x.shape, self.value, dtype=complex)
        return np.zeros(x.shape, dtype=complex)


class ZeroFunction(ConstantFunction):
    def __init__(self):
        super().__init__(0.0)


class ScaledFunction(FunctionHandle):
    def __init__(self, scalar, inner):
        self.scalar = complex(scalar)
        self.inner = inner
        self.max_order = inner.max_order

    def eval(self, x, order=0):
        return self.scalar * self.inner.eval(x, order)


class SumFunction(FunctionHandle):
    def __init__(self, terms):
        self.terms = list(terms)
        self.max_order = min(t.max_order for t in self.terms)

    def eval(self, x, order=0):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for t in self.terms:
            out = out + t.eval(x, order)
        return out


class ProductFunction(FunctionHandle):
    """Pointwise product; derivatives via the Leibniz rule."""

    def __init__(self, left, right):
        self.left = left
        self.right = right
        self.max_order = min(left.max_order, right.max_order)

    def eval(self, x, order=0):
        self._check_order(order)
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        from math import comb

        for j in range(order + 1):
            out = out + comb(order, j) * self.left.eval(x, j) * self.right.eval(
                x, order - j
            )
        return out


class ArgScaledFunction(FunctionHandle):
    """x -> f(a x); k-th derivative is a^k f^(k)(a x)."""

    def __init__(self, inner, a):
        self.inner = inner
        self.a = float(a)
        self.max_order = inner.max_order

    def eval(self, x, order=0):
        x = np.asarray(x, dtype=float)
        return (self.a ** order) * self.inner.eval(self.a * x, order)


class ShiftedFunction(FunctionHandle):
    """x -> f(x - c)."""

    def __init__(self, inner, c):
        self.inner = inner
        self.c = float(c)
        self.max_order = inner.max_order

    def eval(self, x, order=0):
        x = np.asarray(x, dtype=float)
        return self.inner.eval(x - self.c, order)


class BumpFunction(FunctionHandle):
    """Even smooth cutoff: 1 on [-r_in, r_in], 0 outside [-r_out, r_out].

    Transition uses the standard exp(-1/t) glue, differentiated symbolically
    on the open transition region; evenness supplies x < 0.
    """

    def __init__(self, r_in=1.0, r_out=2.0, max_order=MAX_DERIVATIVE):
        if not (0 < r_in < r_out):
            raise ValueError("need 0 < r_in < r_out")
        self.r_in = float(r_in)
        self.r_out = float(r_out)
        self.max_order = max_order
        g_up = sp.exp(-1 / (_X - r_in))      # 0 at r_in, positive beyond
        g_dn = sp.exp(-1 / (r_out - _X))     # 0 at r_out, positive before
        # keep the numerically stable quotient form; both exponentials
        # underflow (never overflow) on the open transition region
        self._trans = g_dn / (g_dn + g_up)
        self._lambdified = {}

    def _fn(self, order):
        if order not in self._lambdified:
            d = sp.diff(self._trans, _X, order)
            self._lambdified[order] = sp.lambdify(_X, d, modules="numpy")
        return self._lambdified[order]

    def eval(self, x, order=0):
        self._check_order(order)
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=float)
        ax = np.abs(x)
        if order == 0:
            out[ax <= self.r_in] = 1.0
        mask = (ax > self.r_in) & (ax < self.r_out)
        if np.any(mask):
            with np.errstate(over="ignore", under="ignore", divide="ignore"):
                vals = np.asarray(self._fn(order)(ax[mask]), dtype=float)
            sign = np.where(x[mask] < 0, (-1.0) ** order, 1.0)
            out[mask] = sign * vals
        return out.astype(complex)


# ---------------------------------------------------------------------------
# Closed-form catalogs


def gaussian(center=0.0, width=1.0):
    return SmoothFunction(sp.exp(-(((_X - center) / width) ** 2)))


def sech_fn(center=0.0, width=1.0):
    return SmoothFunction(1 / sp.cosh((_X - center) / width))


def sine_packet(wavenumber=3.0, center=0.0):
    z = _X - center
    return SmoothFunction(sp.sin(wavenumber * z) * sp.exp(-(z ** 2)))


def lorentzian(center=0.0, width=1.0):
    return SmoothFunction(1 / (1 + ((_X - center) / width) ** 2))


def odd_lorentzian(center=0.0):
    z = _X - center
    return SmoothFunction(z / (1 + z ** 2))


def polynomial_fn(coefficients):
    expr = sum(sp.sympify(c) * _X ** k for k, c in enumerate(coefficients))
    return SmoothFunction(expr)


def japanese_bracket(power):
    """<x>^power = (1 + x^2)^(power/2)."""
    return SmoothFunction((1 + _X ** 2) ** (sp.Rational(power) / 2))


class TestFunction(SmoothFunction):
    """Closed-form Schwartz function used as a pairing probe.

    Rapid decay is checked numerically at construction: the weighted
    seminorms sup <x>^M |d^b h| must be finite and the envelope at the
    probe-grid edge must be tiny.
    """

    __test__ = False  # "test function" in the distributional sense

    def __init__(self, expr, label=None, check_orders=4, probe_half_width=60.0):
        super().__init__(expr)
        self.label = label or str(expr)
        x = np.linspace(-probe_half_width, probe_half_width, 2049)
        w = (1 + x ** 2) ** (check_orders / 2)
        for b in range(check_orders + 1):
            v = np.abs(self.eval(x, b))
            if not np.all(np.isfinite(v * w)):
                raise ValueError(f"test function {self.label}: seminorm blow-up")
            edge = max(v[0] * w[0], v[-1] * w[-1])
            if edge > 1e-10:
                raise ValueError(
                    f"test function {self.label}: insufficient decay "
                    f"(edge value {edge:.2e})"
                )

    def seminorm(self, big_n, half_width=60.0, points=4096):
        """rho_N(h) = sum over |b|, M <= N of sup <x>^M |d^b h|."""
        x = np.linspace(-half_width, half_width, points)
        total = 0.0
        for b in range(big_n + 1):
            db = np.abs(self.eval(x, b))
            for m in range(big_n + 1):
                total += np.max((1 + x ** 2) ** (m / 2) * db)
        return total


def default_test_family(size=10):
    """Versioned Schwartz probe family (v1): gaussians x polynomials x
    modulations, with assorted centers and widths."""
    e = sp.exp
    members = [
        e(-_X ** 2),
        e(-((_X - 1) ** 2) / 2),
        _X * e(-_X ** 2),
        (1 - 2 * _X ** 2) * e(-_X ** 2 / 2),
        sp.cos(3 * _X) * e(-_X ** 2),
        sp.sin(2 * _X) * e(-((_X + sp.Rational(1, 2)) ** 2)),
        (_X ** 3 - _X) * e(-_X ** 2 / 3),
        e(-2 * (_X - sp.Rational(3, 2)) ** 2),
        (1 + _X) * sp.cos(_X) * e(-_X ** 2 / 2),
        _X ** 2 * e(-((_X + 1) ** 2)),
    ]
    return [TestFunction(m, label=f"v1-{k}") for k, m in enumerate(members[:size])]
