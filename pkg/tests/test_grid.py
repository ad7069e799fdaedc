"""Spectral grid operations: transforms, norms, serialization."""

import io
import warnings

import numpy as np
import pytest

from vwslab.grids import (
    BoundaryDecayWarning,
    Field,
    Grid,
    bessel_multiplier,
    boundary_decay,
    dealias,
    derivative,
    field_from_bytes,
    field_from_callable,
    field_to_bytes,
    field_to_csv,
    fourier,
    inner_product,
    inverse_fourier,
    l2_norm,
    read_field,
    schwartz_seminorm,
    weight_multiply,
    weighted_sobolev_norm,
    write_field,
)


@pytest.fixture
def grid():
    return Grid(20.0, 512)


class TestGrid:
    def test_geometry(self, grid):
        assert grid.spacing == pytest.approx(40.0 / 512)
        assert grid.x[0] == -20.0
        assert grid.x[-1] == pytest.approx(20.0 - grid.spacing)

    def test_power_of_two_required(self):
        with pytest.raises(ValueError):
            Grid(10.0, 100)
        with pytest.raises(ValueError):
            Grid(10.0, 8)
        with pytest.raises(ValueError):
            Grid(-1.0, 64)


class TestTransforms:
    def test_roundtrip(self, grid):
        rng = np.random.default_rng(7)
        f = Field(grid, rng.standard_normal(512) + 1j * rng.standard_normal(512))
        g = inverse_fourier(fourier(f))
        np.testing.assert_allclose(g.values, f.values, atol=1e-13)

    def test_parseval(self, grid):
        f = field_from_callable(grid, lambda x: np.exp(2j * np.pi * x / 40))
        fh = fourier(f)
        assert l2_norm(f) == pytest.approx(
            float(np.sqrt(np.sum(np.abs(fh.values) ** 2))), rel=1e-13
        )

    def test_plane_wave_norm(self, grid):
        # |e^{ikx}| = 1 on [-L, L): norm sqrt(2L)
        f = field_from_callable(grid, lambda x: np.exp(2j * np.pi * x / 40))
        assert l2_norm(f) == pytest.approx(np.sqrt(40.0), rel=1e-13)

    def test_derivative_of_sine(self, grid):
        k = 2 * np.pi / 40 * 5
        f = field_from_callable(grid, lambda x: np.sin(k * x))
        d = derivative(f, 1)
        np.testing.assert_allclose(
            np.real(d.values), k * np.cos(k * grid.x), atol=1e-11
        )

    def test_spectral_weights(self, grid):
        f = field_from_callable(grid, lambda x: np.exp(-x ** 2))
        a = bessel_multiplier(bessel_multiplier(f, 1.5), -1.5)
        np.testing.assert_allclose(a.values, f.values, atol=1e-12)


class TestNorms:
    def test_gaussian_l2_closed_form(self, grid):
        f = field_from_callable(grid, lambda x: np.exp(-x ** 2))
        # ||e^{-x^2}||_2 = (pi/2)^{1/4}
        assert l2_norm(f) == pytest.approx((np.pi / 2) ** 0.25, rel=1e-12)

    def test_weighted_norm_closed_form(self, grid):
        # || <x> e^{-x^2} ||^2 = sqrt(pi/2)(1 + 1/4) -> norm (pi/2)^{1/4} sqrt(5)/2
        f = field_from_callable(grid, lambda x: np.exp(-x ** 2))
        val = weighted_sobolev_norm(f, 0, 1)
        assert val == pytest.approx((np.pi / 2) ** 0.25 * np.sqrt(1.25), rel=1e-12)

    def test_seminorm_closed_form(self, grid):
        # sup |d/dx e^{-x^2}| = sqrt(2/e) at x = 1/sqrt(2); grid sup is close
        f = field_from_callable(grid, lambda x: np.exp(-x ** 2))
        val = schwartz_seminorm(f, 0, 1)
        assert val == pytest.approx(np.sqrt(2 / np.e), rel=1e-3)

    def test_zero_field(self, grid):
        f = Field(grid, np.zeros(512, dtype=complex))
        assert l2_norm(f) == 0.0
        assert boundary_decay(f) == 0.0

    def test_boundary_warning_for_nondecaying_weight(self, grid):
        f = field_from_callable(grid, lambda x: np.ones_like(x))
        with pytest.warns(BoundaryDecayWarning):
            weighted_sobolev_norm(f, 0, 1)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            weighted_sobolev_norm(f, 1, 0)  # no weight, no warning


class TestDealias:
    def test_top_third_removed(self, grid):
        rng = np.random.default_rng(3)
        v = rng.standard_normal(512)
        out = dealias(v)
        spec = np.fft.fft(out)
        k = np.fft.fftfreq(512, d=1.0 / 512)
        assert np.max(np.abs(spec[np.abs(k) > 512 // 3])) < 1e-10

    def test_idempotent(self, grid):
        rng = np.random.default_rng(4)
        v = rng.standard_normal(512) + 0j
        once = dealias(v)
        np.testing.assert_allclose(dealias(once), once, atol=1e-14)


class TestSerialization:
    def test_bytes_roundtrip(self, grid):
        f = field_from_callable(grid, lambda x: np.exp(-x ** 2) * (1 + 1j))
        g = field_from_bytes(field_to_bytes(f))
        assert g.grid == grid
        np.testing.assert_array_equal(g.values, f.values)

    def test_bad_magic_rejected(self):
        with pytest.raises(ValueError):
            field_from_bytes(b"NOTMAGIC" + b"\x00" * 64)

    def test_truncated_rejected(self, grid):
        blob = field_to_bytes(field_from_callable(grid, np.cos))
        with pytest.raises(ValueError):
            field_from_bytes(blob[:-8])

    def test_file_roundtrip(self, grid, tmp_path):
        f = field_from_callable(grid, lambda x: np.sin(x) + 2j * np.cos(x))
        path = tmp_path / "field.bin"
        write_field(path, f)
        g = read_field(path)
        np.testing.assert_array_equal(g.values, f.values)

    def test_csv_header(self, grid, tmp_path):
        f = field_from_callable(grid, np.cos)
        path = tmp_path / "field.csv"
        field_to_csv(path, f)
        head = path.read_text().splitlines()[0]
        assert head == "x,re,im"
