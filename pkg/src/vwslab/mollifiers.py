"""Mollifier pairs, epsilon scales and the regularization map.

Two pairs are bundled:

* ``gaussian_pair()`` -- phi(x) = exp(-x^2), psi(x) = exp(-x^2)/sqrt(pi).
  Flatness order 1 (second moments do not vanish).
* ``flat_pair()`` -- phi is a smooth bump identically 1 on [-1, 1] and
  supported in [-2, 2]; psi is the inverse Fourier transform of the same
  kind of bump, so every moment of order >= 1 vanishes (flatness order
  "infinite", reported as FLATNESS_INF).

The flat kernel has no closed form; it is evaluated from a precomputed
table (built once by FFT, cached to a binary file with a metadata header)
with cubic-spline interpolation between nodes.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.special import erf

from .distributions import ConvolvedDistribution, convolve_mollifier
from .functions import (
    MAX_DERIVATIVE,
    ArgScaledFunction,
    BumpFunction,
    FunctionHandle,
    ProductFunction,
    SmoothFunction,
    gaussian,
)

FLATNESS_INF = 10 ** 9

_TABLE_MAGIC = b"VWSTAB01"
_TABLE_HALF_WIDTH = 1024.0
_TABLE_LOG2_POINTS = 18


# ---------------------------------------------------------------------------
# Kernels


class GaussianKernel:
    """psi(x) = exp(-x^2)/sqrt(pi): unit mass, vanishing odd moments."""

    max_order = MAX_DERIVATIVE

    def __init__(self):
        self._fn = SmoothFunction(self._expr())
        self._nodes = None

    @staticmethod
    def _expr():
        import sympy as sp

        x = sp.Symbol("x", real=True)
        return sp.exp(-(x ** 2)) / sp.sqrt(sp.pi)

    def eval(self, z, order=0):
        return np.real(self._fn.eval(z, order))

    def antiderivative(self, z):
        return 0.5 * (1.0 + erf(np.asarray(z, dtype=float)))

    def moment(self, j):
        if j % 2 == 1:
            return 0.0
        # int x^j exp(-x^2)/sqrt(pi) dx = (j-1)!! / 2^(j/2)
        val = 1.0
        for k in range(1, j, 2):
            val *= k
        return val / 2 ** (j // 2)

    def quadrature_nodes(self):
        if self._nodes is None:
            n, w = np.polynomial.legendre.leggauss(120)
            r = 9.0
            self._nodes = (r * n, r * w)
        return self._nodes


class FlatKernel:
    """Band-limited kernel whose Fourier transform is a smooth bump that is
    identically 1 on [-1, 1] and supported in [-2, 2].

    All moments of order >= 1 vanish; unit mass.  Values come from a
    cached FFT-built table.
    """

    max_order = MAX_DERIVATIVE

    def __init__(self, cache_path=None):
        self.cache_path = cache_path or default_table_path()
        self._x, self._tables = _load_or_build_tables(self.cache_path)
        self._dx = self._x[1] - self._x[0]
        self._splines = {}
        self._cdf_spline = None
        self._nodes = None

    def _spline(self, order):
        if order not in self._splines:
            self._splines[order] = CubicSpline(
                self._x, self._tables[order], extrapolate=False
            )
        return self._splines[order]

    def eval(self, z, order=0):
        if order > self.max_order:
            raise ValueError(f"flat kernel table holds orders <= {self.max_order}")
        z = np.asarray(z, dtype=float)
        out = self._spline(order)(z)
        return np.nan_to_num(out, nan=0.0)

    def antiderivative(self, z):
        if self._cdf_spline is None:
            cdf = np.concatenate(
                [[0.0], np.cumsum((self._tables[0][1:] + self._tables[0][:-1]))]
            ) * (self._dx / 2)
            self._cdf_spline = CubicSpline(self._x, cdf, extrapolate=False)
        z = np.asarray(z, dtype=float)
        out = self._cdf_spline(z)
        out = np.where(z < self._x[0], 0.0, out)
        out = np.where(z > self._x[-1], 1.0, out)
        return np.asarray(out, dtype=float)

    def moment(self, j):
        # hat(psi) == 1 near 0, so every derivative of hat(psi) at 0 vanishes
        return 1.0 if j == 0 else 0.0

    def quadrature_nodes(self):
        # Table nodes restricted to |z| <= 300 with trapezoid weights; the
        # kernel is band-limited to |xi| <= 2, so step 0.5 is far below the
        # Nyquist limit and the truncated tail is ~1e-15.
        if self._nodes is None:
            step = max(1, int(round(0.5 / self._dx)))
            mask = np.abs(self._x) <= 300.0
            nodes = self._x[mask][::step]
            weights = np.full(nodes.shape, step * self._dx)
            self._nodes = (nodes, weights)
        return self._nodes

    def measured_moment(self, j):
        # Full-table trapezoid.  Certifiable to 1e-10 only for j <= 2: the
        # table carries absolute roundoff ~1e-16 and x^j amplifies it beyond
        # that level for j >= 3 regardless of truncation range.
        return float(np.sum(self._x ** j * self._tables[0]) * self._dx)


def default_table_path():
    base = os.environ.get(
        "VWSLAB_CACHE_DIR",
        os.path.join(os.path.expanduser("~"), ".cache", "vwslab"),
    )
    return os.path.join(base, "flat_kernel_table.bin")


def _build_tables():
    n = 2 ** _TABLE_LOG2_POINTS
    dx = 2 * _TABLE_HALF_WIDTH / n
    x = (np.arange(n) - n // 2) * dx
    dxi = 2 * np.pi / (n * dx)
    xi = np.fft.fftfreq(n, d=dx) * 2 * np.pi
    chi = np.real(BumpFunction(1.0, 2.0).eval(xi))
    tables = np.empty((MAX_DERIVATIVE + 1, n), dtype=float)
    for k in range(MAX_DERIVATIVE + 1):
        spec = (1j * xi) ** k * chi
        # psi^(k)(x_j) = (1/2pi) * sum spec * exp(i x_j xi) dxi
        vals = np.fft.ifft(spec) * (n * dxi / (2 * np.pi))
        tables[k] = np.fft.fftshift(np.real(vals))
    return x, tables


def _load_or_build_tables(path):
    if os.path.exists(path):
        try:
            return _read_table_file(path)
        except (ValueError, OSError):
            pass
    x, tables = _build_tables()
    try:
        os.makedirs(os.path.dirname(path), exist_ok=True)
        _write_table_file(path, x, tables)
    except OSError:
        pass
    return x, tables


def _write_table_file(path, x, tables):
    header = struct.pack(
        "<8sddqq", _TABLE_MAGIC, x[0], x[1] - x[0], x.size, tables.shape[0]
    )
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(tables.astype("<f8").tobytes())
    os.replace(tmp, path)


def _read_table_file(path):
    with open(path, "rb") as fh:
        header = fh.read(struct.calcsize("<8sddqq"))
        magic, x0, dx, n, orders = struct.unpack("<8sddqq", header)
        if magic != _TABLE_MAGIC:
            raise ValueError("bad magic")
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != n * orders:
        raise ValueError("truncated table")
    x = x0 + dx * np.arange(n)
    return x, data.reshape(orders, n).copy()


# ---------------------------------------------------------------------------
# Mollifier pairs


class MollifierPair:
    """Cutoff phi with phi(0) = 1 and kernel psi with unit mass."""

    def __init__(self, name, phi, psi, flatness_order):
        self.name = name
        self.phi = phi
        self.psi = psi
        self.flatness_order = flatness_order
        self._validate()

    def _validate(self):
        phi0 = complex(self.phi.eval(np.array([0.0]))[0])
        if abs(phi0 - 1.0) > 1e-12:
            raise ValueError(f"phi(0) = {phi0}, expected 1")
        nodes, weights = self.psi.quadrature_nodes()
        mass = float(np.sum(self.psi.eval(nodes, 0) * weights))
        if abs(mass - 1.0) > 1e-12:
            raise ValueError(f"int psi = {mass}, expected 1")

    def measured_moment(self, j):
        if hasattr(self.psi, "measured_moment"):
            return self.psi.measured_moment(j)
        nodes, weights = self.psi.quadrature_nodes()
        return float(np.sum(nodes ** j * self.psi.eval(nodes, 0) * weights))

    def measured_phi_derivative(self, order):
        return complex(self.phi.eval(np.array([0.0]), order)[0])


def gaussian_pair() -> MollifierPair:
    return MollifierPair("gaussian", gaussian(), GaussianKernel(), flatness_order=1)


_flat_pair_cache = None


def flat_pair(cache_path=None) -> MollifierPair:
    global _flat_pair_cache
    if _flat_pair_cache is None or cache_path is not None:
        pair = MollifierPair(
            "flat",
            BumpFunction(1.0, 2.0),
            FlatKernel(cache_path),
            flatness_order=FLATNESS_INF,
        )
        if cache_path is not None:
            return pair
        _flat_pair_cache = pair
    return _flat_pair_cache


def pair_by_name(name: str) -> MollifierPair:
    if name == "gaussian":
        return gaussian_pair()
    if name == "flat":
        return flat_pair()
    raise ValueError(f"unknown mollifier pair {name!r}")


# ---------------------------------------------------------------------------
# Epsilon scales


@dataclass(frozen=True)
class EpsilonScale:
    kind: str = "identity"  # identity | power | iterated_log
    power: float = 1.0
    depth: int = 1
    eps_max: float = 1.0

    def __post_init__(self):
        if self.kind not in ("identity", "power", "iterated_log"):
            raise ValueError(f"unknown scale kind {self.kind!r}")
        if self.kind == "iterated_log" and self.depth not in (1, 2, 3, 4):
            raise ValueError("iterated_log depth must be in {1, 2, 3, 4}")


def omega(scale: EpsilonScale, eps: float) -> float:
    """omega(eps) for the given scale; the iterated-log kind computes
    1 / log^(depth)(1/eps) with a domain guard log^(depth)(1/eps) > 1."""
    if not 0 < eps <= scale.eps_max:
        raise ValueError(
            f"eps = {eps} outside (0, {scale.eps_max}] for scale {scale.kind}"
        )
    if scale.kind == "identity":
        return float(eps)
    if scale.kind == "power":
        return float(eps ** scale.power)
    val = np.log(1.0 / eps)
    for _ in range(scale.depth - 1):
        if val <= 1.0:
            raise ValueError(
                f"eps = {eps} too large for iterated_log depth {scale.depth}: "
                f"requires log^({scale.depth})(1/eps) > 0, i.e. eps below the "
                "iterated-exponential threshold"
            )
        val = np.log(val)
    if val <= 0.0:
        raise ValueError(
            f"eps = {eps} too large for iterated_log depth {scale.depth}"
        )
    return float(1.0 / val)


IDENTITY_SCALE = EpsilonScale("identity")
DEFAULT_COEFF_SCALE = EpsilonScale("iterated_log", depth=1)


# ---------------------------------------------------------------------------
# Regularization


class RegularizedDistribution(ProductFunction):
    """x -> phi(omega x) * (psi_omega * u)(x), a Schwartz function handle."""

    def __init__(self, u, pair, scale, eps):
        w = omega(scale, eps)
        self.u = u
        self.pair = pair
        self.scale = scale
        self.eps = float(eps)
        self.omega_value = w
        cutoff = ArgScaledFunction(pair.phi, w)
        convolved = convolve_mollifier(u, pair.psi, w)
        super().__init__(cutoff, convolved)

    @property
    def cutoff(self):
        return self.left

    @property
    def convolved(self) -> ConvolvedDistribution:
        return self.right


def regularize(u, pair, scale, eps) -> RegularizedDistribution:
    return RegularizedDistribution(u, pair, scale, eps)


def regularization_error(u, pair, eps, weight_power, deriv_order,
                         half_width=20.0, points=4096):
    """sup over a probe grid of <x>^M |d^b {phi(eps x)(psi_eps * u) - u}|
    for a closed-form Schwartz input u (identity scale)."""
    reg = regularize(_as_expr(u), pair, IDENTITY_SCALE, eps)
    x = np.linspace(-half_width, half_width, points)
    diff = reg.eval(x, deriv_order) - u.eval(x, deriv_order)
    return float(np.max((1 + x ** 2) ** (weight_power / 2) * np.abs(diff)))


def _as_expr(u):
    """Wrap a closed-form handle so it can go through the convolution path."""
    from .distributions import CatalogSmooth, DistributionExpr

    if isinstance(u, DistributionExpr):
        return u
    if isinstance(u, FunctionHandle):
        return _HandleExpr(u)
    raise TypeError(f"cannot regularize {u!r}")


class _HandleExpr:
    """Adapter: treat an arbitrary smooth handle as a CatalogSmooth-like
    convolution target (quadrature route)."""

    def __init__(self, handle):
        self.handle = handle

    def function(self):
        return self.handle


# teach ConvolvedDistribution about the adapter without widening the catalog
_orig_eval_variant = ConvolvedDistribution._eval_variant


def _eval_variant_with_adapter(self, u, x, order):
    if isinstance(u, _HandleExpr):
        from .distributions import CatalogSmooth

        nodes, weights = self.kernel.quadrature_nodes()
        kv = self.kernel.eval(nodes, 0)
        out = np.zeros(x.shape, dtype=complex)
        block = max(1, int(2e6 // max(nodes.size, 1)))
        for i in range(0, x.size, block):
            xs = x.flat[i : i + block]
            vals = u.handle.eval(xs[:, None] - self.eps * nodes[None, :], order)
            out.flat[i : i + block] = vals @ (kv * weights)
        return out
    return _orig_eval_variant(self, u, x, order)


ConvolvedDistribution._eval_variant = _eval_variant_with_adapter


# ---------------------------------------------------------------------------
# Time curves


class DistributionCurve:
    """Continuous-in-t curve of catalog distributions: key frames with
    piecewise-linear interpolation (scalar interpolation of frames)."""

    def __init__(self, keyframes):
        frames = sorted(keyframes, key=lambda kv: kv[0])
        if not frames:
            raise ValueError("need at least one keyframe")
        self.times = [float(t) for t, _ in frames]
        self.frames = [u for _, u in frames]

    @classmethod
    def constant(cls, u):
        return cls([(0.0, u)])

    def weights_at(self, t):
        """(index pairs, scalar weights) of the linear interpolation at t."""
        ts = self.times
        if len(ts) == 1 or t <= ts[0]:
            return [(0, 1.0)]
        if t >= ts[-1]:
            return [(len(ts) - 1, 1.0)]
        j = np.searchsorted(ts, t, side="right") - 1
        theta = (t - ts[j]) / (ts[j + 1] - ts[j])
        if theta == 0.0:
            return [(j, 1.0)]
        return [(j, 1.0 - theta), (j + 1, theta)]


class FunctionCurve:
    """Curve of smooth handles, sampled as c(t, x) on demand."""

    is_static = False

    def sample(self, t, x):
        raise NotImplementedError

    def max_abs(self, t_nodes, x):
        return max(float(np.max(np.abs(self.sample(t, x)))) for t in t_nodes)


class ConstantCurve(FunctionCurve):
    is_static = True

    def __init__(self, handle):
        self.handle = handle

    def sample(self, t, x):
        return np.asarray(self.handle.eval(x), dtype=complex)


class KeyframeFunctionCurve(FunctionCurve):
    def __init__(self, keyframes):
        frames = sorted(keyframes, key=lambda kv: kv[0])
        self.times = [float(t) for t, _ in frames]
        self.handles = [h for _, h in frames]
        self.is_static = len(frames) == 1

    def sample(self, t, x):
        ts = self.times
        if len(ts) == 1 or t <= ts[0]:
            return np.asarray(self.handles[0].eval(x), dtype=complex)
        if t >= ts[-1]:
            return np.asarray(self.handles[-1].eval(x), dtype=complex)
        j = np.searchsorted(ts, t, side="right") - 1
        theta = (t - ts[j]) / (ts[j + 1] - ts[j])
        a = np.asarray(self.handles[j].eval(x), dtype=complex)
        b = np.asarray(self.handles[j + 1].eval(x), dtype=complex)
        return (1 - theta) * a + theta * b


class ModulatedCurve(FunctionCurve):
    """c(t, x) = scalar(t) * handle(x)."""

    def __init__(self, scalar_fn, handle):
        self.scalar_fn = scalar_fn
        self.handle = handle

    def sample(self, t, x):
        return complex(self.scalar_fn(t)) * np.asarray(
            self.handle.eval(x), dtype=complex
        )


class SumCurve(FunctionCurve):
    def __init__(self, curves):
        self.curves = list(curves)
        self.is_static = all(c.is_static for c in self.curves)

    def sample(self, t, x):
        out = np.zeros(np.shape(x), dtype=complex)
        for c in self.curves:
            out = out + c.sample(t, x)
        return out


class ProductWithHandleCurve(FunctionCurve):
    """t, x -> curve(t, x) * handle(x)."""

    def __init__(self, curve, handle):
        self.curve = curve
        self.handle = handle
        self.is_static = curve.is_static

    def sample(self, t, x):
        return self.curve.sample(t, x) * np.asarray(
            self.handle.eval(x), dtype=complex
        )


class ScaledCurve(FunctionCurve):
    def __init__(self, scalar, curve):
        self.scalar = complex(scalar)
        self.curve = curve
        self.is_static = curve.is_static

    def sample(self, t, x):
        return self.scalar * self.curve.sample(t, x)


def regularize_curve(curve: DistributionCurve, pair, scale, eps,
                     t_nodes=None) -> KeyframeFunctionCurve:
    """Regularize every keyframe with the shared (pair, scale, eps); linear
    interpolation commutes with the (linear) regularization map, so the
    keyframe interpolation of the regularized frames is exact."""
    frames = [
        (t, regularize(u, pair, scale, eps))
        for t, u in zip(curve.times, curve.frames)
    ]
    return KeyframeFunctionCurve(frames)
