"""Grid construction and derivative-operator contracts."""
import numpy as np
import pytest

from fisher_hydro import make_grid
from fisher_hydro.grid import (
    fd_divergence4,
    fd_gradient4,
    fd_laplacian4,
    integrate,
    norm_l2,
    spectral_gradient,
    spectral_laplacian,
)


def test_make_grid_stores_exact_spacing():
    g = make_grid(1, 4096, 200.0)
    assert g.spacing * g.n == g.length
    assert g.spacing == 200.0 / 4096


def test_make_grid_smallest_legal():
    g = make_grid(1, 16, 1.0)
    assert g.n == 16


def test_make_grid_2d_for_vortex_tests():
    g = make_grid(2, 256, 20.0)
    assert g.shape == (256, 256)
    assert g.wavenumbers.shape == (256,)


@pytest.mark.parametrize("bad_n", [15, 17, 100, 12])
def test_make_grid_rejects_non_power_of_two(bad_n):
    with pytest.raises(ValueError):
        make_grid(1, bad_n, 1.0)


@pytest.mark.parametrize("bad_len", [0.0, -1.0])
def test_make_grid_rejects_nonpositive_length(bad_len):
    with pytest.raises(ValueError):
        make_grid(1, 64, bad_len)


def test_wavenumbers_antisymmetric_up_to_nyquist():
    g = make_grid(1, 64, 10.0)
    k = g.wavenumbers
    assert k[0] == 0.0
    # entries 1..n/2-1 pair with entries -1..-(n/2-1)
    assert np.allclose(k[1 : 32], -k[-1 : -32 : -1])


def test_spectral_gradient_single_mode_exact(grid1d):
    x = grid1d.axes[0]
    k = 2 * np.pi / grid1d.length
    err = spectral_gradient(np.sin(k * x), grid1d)[0] - k * np.cos(k * x)
    assert np.max(np.abs(err)) <= 1e-12


def test_spectral_gradient_constant_is_zero(grid1d):
    out = spectral_gradient(np.full(grid1d.shape, 3.7), grid1d)
    assert np.max(np.abs(out)) <= 1e-13


def test_spectral_gradient_gaussian_closed_form(grid1d_fine):
    x = grid1d_fine.axes[0] - 20.0
    sigma = 1.5
    f = np.exp(-(x**2) / sigma**2)
    expected = -(2 * x / sigma**2) * f
    err = spectral_gradient(f, grid1d_fine)[0] - expected
    assert np.max(np.abs(err)) <= 1e-10


def test_spectral_laplacian_plane_wave_exact(grid1d):
    x = grid1d.axes[0]
    k = grid1d.wavenumbers[5]
    f = np.exp(1j * k * x)
    err = spectral_laplacian(f, grid1d) + k**2 * f
    assert np.max(np.abs(err)) <= 1e-11


def test_spectral_laplacian_gaussian_closed_form(grid1d_fine):
    x = grid1d_fine.axes[0] - 20.0
    sigma = 1.5
    f = np.exp(-(x**2) / sigma**2)
    expected = (4 * x**2 / sigma**4 - 2 / sigma**2) * f
    err = spectral_laplacian(f, grid1d_fine) - expected
    assert np.max(np.abs(err)) <= 1e-9


def test_fd_gradient4_refinement_ratio():
    # an off-lattice multi-mode profile so the fourth-order error is visible
    def worst_err(n):
        g = make_grid(1, n, 10.0)
        x = g.axes[0]
        f = np.sin(2 * np.pi * x / g.length * 3 + 0.7) + 0.5 * np.cos(2 * np.pi * x / g.length * 5)
        exact = (
            3 * 2 * np.pi / g.length * np.cos(2 * np.pi * x / g.length * 3 + 0.7)
            - 2.5 * 2 * np.pi / g.length * np.sin(2 * np.pi * x / g.length * 5)
        )
        return np.max(np.abs(fd_gradient4(f, g)[0] - exact))

    ratio = worst_err(64) / worst_err(128)
    assert 14.0 <= ratio <= 18.0


def test_fd_gradient4_constant_zero(grid1d):
    assert np.max(np.abs(fd_gradient4(np.ones(grid1d.shape), grid1d))) == 0.0


def test_parseval(grid1d):
    r = np.random.default_rng(7)
    f = r.standard_normal(grid1d.shape)
    phys = np.sum(np.abs(f) ** 2) * grid1d.cell_volume
    spec = np.sum(np.abs(np.fft.fft(f)) ** 2) / grid1d.n * grid1d.cell_volume
    assert abs(phys - spec) / phys <= 1e-12


@pytest.mark.parametrize("op", [spectral_gradient, spectral_laplacian, fd_gradient4, fd_laplacian4])
def test_operators_linear(op, grid1d):
    r = np.random.default_rng(11)
    f = r.standard_normal(grid1d.shape)
    g = r.standard_normal(grid1d.shape)
    lhs = op(2.5 * f - 1.25 * g, grid1d)
    rhs = 2.5 * op(f, grid1d) - 1.25 * op(g, grid1d)
    scale = np.max(np.abs(rhs)) + 1.0
    assert np.max(np.abs(lhs - rhs)) / scale <= 1e-12


def test_spectral_and_fd4_agree_on_bandlimited(grid1d):
    # smooth field whose spectrum is negligible beyond n/8 modes
    x = grid1d.axes[0]
    f = np.exp(-((x - 20.0) ** 2) / 3.5**2) * (1.0 + 0.3 * np.sin(2 * np.pi * x / grid1d.length * 2))
    a = spectral_gradient(f, grid1d)[0]
    b = fd_gradient4(f, grid1d)[0]
    rel = np.max(np.abs(a - b)) / np.max(np.abs(a))
    assert rel <= 1e-6


def test_divergence_matches_gradient_1d(grid1d):
    r = np.random.default_rng(5)
    f = r.standard_normal(grid1d.shape)
    assert np.array_equal(fd_divergence4(f[None], grid1d), fd_gradient4(f, grid1d)[0])


def test_integrate_and_norm(grid2d):
    f = np.ones(grid2d.shape)
    assert integrate(f, grid2d) == pytest.approx(grid2d.length**2)
    assert norm_l2(f, grid2d) == pytest.approx(grid2d.length)


def test_shape_mismatch_raises(grid1d):
    with pytest.raises(ValueError):
        spectral_gradient(np.zeros(17), grid1d)
    with pytest.raises(ValueError):
        fd_gradient4(np.zeros((4, 4)), grid1d)
