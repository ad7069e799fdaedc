"""Uniform periodic grid fields with spectral operations.

Transforms are unitary with respect to the grid L^2 norm (measure 2L/N),
so Parseval holds exactly between ``l2_norm`` and the spectral l2 sum.
Weighted Sobolev norms H^{m,M} apply the Fourier multiplier (1+xi^2)^(m/2)
followed by the spatial weight (1+x^2)^(M/2).
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np

DECAY_TOLERANCE = 1e-8


class BoundaryDecayWarning(UserWarning):
    """Weighted norm requested on data that does not decay at the grid edge."""


@dataclass(frozen=True)
class Grid:
    half_width: float
    points: int

    def __post_init__(self):
        if self.points < 16 or self.points & (self.points - 1):
            raise ValueError("points must be a power of two >= 16")
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")

    @property
    def spacing(self):
        return 2 * self.half_width / self.points

    @property
    def x(self):
        return -self.half_width + self.spacing * np.arange(self.points)

    @property
    def xi(self):
        return 2 * np.pi * np.fft.fftfreq(self.points, d=self.spacing)


@dataclass
class Field:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.points,):
            raise ValueError("values must match grid size")
        self.values = vals

    def __add__(self, other):
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other):
        return Field(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return Field(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def copy(self):
        return Field(self.grid, self.values.copy())


@dataclass
class SpectralField:
    grid: Grid
    values: np.ndarray  # fft ordering, unitary normalization


def zero_field(grid: Grid) -> Field:
    return Field(grid, np.zeros(grid.points, dtype=complex))


def field_from_callable(grid: Grid, fn) -> Field:
    return Field(grid, np.asarray(fn(grid.x), dtype=complex))


def fourier(f: Field) -> SpectralField:
    scale = np.sqrt(f.grid.spacing / f.grid.points)
    return SpectralField(f.grid, np.fft.fft(f.values) * scale)


def inverse_fourier(fh: SpectralField) -> Field:
    scale = np.sqrt(fh.grid.spacing / fh.grid.points)
    return Field(fh.grid, np.fft.ifft(fh.values / scale))


def boundary_decay(f: Field) -> float:
    """max |values| over the outer 5% of nodes, relative to the overall max."""
    n = f.grid.points
    edge = max(1, n // 20)
    mags = np.abs(f.values)
    peak = float(np.max(mags))
    if peak == 0.0:
        return 0.0
    outer = max(float(np.max(mags[:edge])), float(np.max(mags[-edge:])))
    return outer / peak


def derivative(f: Field, order: int) -> Field:
    if order == 0:
        return f.copy()
    xi = f.grid.xi
    mult = (1j * xi) ** order
    if order % 2 == 1:
        mult = mult.copy()
        mult[f.grid.points // 2] = 0.0  # drop the unmatched Nyquist mode
    return Field(f.grid, np.fft.ifft(mult * np.fft.fft(f.values)))


def weight_multiply(f: Field, s: float) -> Field:
    """<x>^s f pointwise."""
    if s == 0:
        return f.copy()
    w = (1 + f.grid.x ** 2) ** (s / 2)
    return Field(f.grid, f.values * w)


def bessel_multiplier(f: Field, m: float) -> Field:
    """<D>^m f via the Fourier multiplier (1 + xi^2)^(m/2)."""
    if m == 0:
        return f.copy()
    mult = (1 + f.grid.xi ** 2) ** (m / 2)
    return Field(f.grid, np.fft.ifft(mult * np.fft.fft(f.values)))


def l2_norm(f: Field) -> float:
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2) * f.grid.spacing))


def inner_product(f: Field, g: Field) -> complex:
    return complex(np.sum(f.values * np.conj(g.values)) * f.grid.spacing)


def _check_decay(f: Field, weighted: bool):
    if weighted and boundary_decay(f) > DECAY_TOLERANCE:
        warnings.warn(
            "field does not decay at the grid boundary; the spatial weight "
            "is not meaningful for periodic non-decaying data",
            BoundaryDecayWarning,
            stacklevel=3,
        )


def weighted_sobolev_norm(f: Field, m: float, big_m: float) -> float:
    """|| <x>^M <D>^m f ||_{L^2} on the grid."""
    _check_decay(f, big_m > 0)
    return l2_norm(weight_multiply(bessel_multiplier(f, m), big_m))


def schwartz_seminorm(f: Field, big_m: int, beta: int) -> float:
    """sup over nodes of <x>^M |d^beta f|."""
    _check_decay(f, big_m > 0)
    d = derivative(f, beta)
    w = (1 + f.grid.x ** 2) ** (big_m / 2)
    return float(np.max(w * np.abs(d.values)))


def dealias(values: np.ndarray) -> np.ndarray:
    """2/3-rule truncation of the top third of the spectrum."""
    n = values.size
    spec = np.fft.fft(values)
    k = np.fft.fftfreq(n, d=1.0 / n)
    spec[np.abs(k) > n // 3] = 0.0
    return np.fft.ifft(spec)


# ---------------------------------------------------------------------------
# Serialization

_FIELD_MAGIC = b"VWSFLD01"


def field_to_bytes(f: Field) -> bytes:
    header = struct.pack("<8sdq", _FIELD_MAGIC, f.grid.half_width, f.grid.points)
    payload = np.empty(2 * f.grid.points, dtype="<f8")
    payload[0::2] = np.real(f.values)
    payload[1::2] = np.imag(f.values)
    return header + payload.tobytes()


def field_from_bytes(data: bytes) -> Field:
    head = struct.calcsize("<8sdq")
    magic, half_width, points = struct.unpack("<8sdq", data[:head])
    if magic != _FIELD_MAGIC:
        raise ValueError("not a field blob")
    payload = np.frombuffer(data[head:], dtype="<f8")
    if payload.size != 2 * points:
        raise ValueError("truncated field payload")
    values = payload[0::2] + 1j * payload[1::2]
    return Field(Grid(half_width, int(points)), values)


def write_field(path, f: Field):
    with open(path, "wb") as fh:
        fh.write(field_to_bytes(f))


def read_field(path) -> Field:
    with open(path, "rb") as fh:
        return field_from_bytes(fh.read())


def field_to_csv(path, f: Field):
    data = np.column_stack([f.grid.x, np.real(f.values), np.imag(f.values)])
    np.savetxt(path, data, delimiter=",", header="x,re,im", comments="")
