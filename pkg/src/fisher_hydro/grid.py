"""Periodic uniform grids with spectral and fourth-order finite-difference operators.

Two independent discretisations live here on purpose: the spectral operators
drive the propagators, while the 5-point fourth-order stencils are reserved for
residual diagnostics, so a diagnostic never certifies the scheme that produced
the data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "make_grid",
    "spectral_gradient",
    "spectral_laplacian",
    "fd_gradient4",
    "fd_laplacian4",
    "fd_divergence4",
    "integrate",
    "norm_l2",
]


@dataclass(frozen=True)
class Grid:
    """Periodic uniform lattice in 1 or 2 dimensions.

    Wavenumbers follow the discrete Fourier ordering of ``np.fft.fftfreq`` and
    are antisymmetric about zero up to the Nyquist entry.  ``spacing * n``
    reproduces ``length`` exactly as stored.
    """

    dim: int
    n: int
    length: float
    spacing: float = field(init=False)
    wavenumbers: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "spacing", self.length / self.n)
        k1 = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)
        object.__setattr__(self, "wavenumbers", k1)
        x1 = self.spacing * np.arange(self.n)
        object.__setattr__(self, "_x1", x1)
        if self.dim == 1:
            kmesh = [k1]
            object.__setattr__(self, "_k2", k1**2)
        else:
            kmesh = [k1[:, None], k1[None, :]]
            object.__setattr__(self, "_k2", k1[:, None] ** 2 + k1[None, :] ** 2)
        object.__setattr__(self, "_kmesh", kmesh)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def axes(self) -> tuple[np.ndarray, ...]:
        """Per-axis physical coordinates in [0, length)."""
        return (self._x1,) * self.dim

    def coords(self) -> np.ndarray:
        """Coordinate meshes stacked along a leading axis, shape (dim, *shape)."""
        if self.dim == 1:
            return self._x1[None, :]
        x, y = np.meshgrid(self._x1, self._x1, indexing="ij")
        return np.stack([x, y])

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim


def make_grid(dim: int, n: int, length: float) -> Grid:
    """Build a periodic grid; n must be a power of two >= 16 (FFT sizing)."""
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    if n < 16 or (n & (n - 1)) != 0:
        raise ValueError(f"n must be a power of two >= 16, got {n}")
    if length <= 0:
        raise ValueError(f"length must be positive, got {length}")
    return Grid(dim=dim, n=n, length=float(length))


def _check_shape(f: np.ndarray, grid: Grid) -> None:
    if f.shape != grid.shape:
        raise ValueError(f"field shape {f.shape} does not match grid shape {grid.shape}")


def spectral_gradient(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Exact derivative of the trigonometric interpolant, stacked per axis.

    Returns an array of shape (dim, *grid.shape).  Real input yields real
    output; complex input stays complex.
    """
    _check_shape(f, grid)
    fh = np.fft.fftn(f)
    out = np.empty((grid.dim,) + grid.shape, dtype=complex)
    for axis, k in enumerate(grid._kmesh):
        out[axis] = np.fft.ifftn(1j * k * fh)
    if not np.iscomplexobj(f):
        return out.real.copy()
    return out


def spectral_laplacian(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Spectral Laplacian (multiplier -|k|^2)."""
    _check_shape(f, grid)
    out = np.fft.ifftn(-grid._k2 * np.fft.fftn(f))
    if not np.iscomplexobj(f):
        return out.real.copy()
    return out


def _fd_axis_derivative(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    # 5-point fourth-order centered first derivative, periodic wrap via roll.
    return (
        -np.roll(f, -2, axis=axis)
        + 8.0 * np.roll(f, -1, axis=axis)
        - 8.0 * np.roll(f, 1, axis=axis)
        + np.roll(f, 2, axis=axis)
    ) / (12.0 * h)


def fd_gradient4(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Fourth-order centered gradient, stacked per axis like spectral_gradient.

    Diagnostics-only stencil; contract assumes smooth periodic data (a sawtooth
    is out of contract, not an error).
    """
    _check_shape(f, grid)
    return np.stack([_fd_axis_derivative(f, grid.spacing, ax) for ax in range(grid.dim)])


def fd_laplacian4(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Fourth-order centered Laplacian on the same 5-point-per-axis footprint."""
    _check_shape(f, grid)
    h2 = grid.spacing**2
    out = np.zeros_like(np.asarray(f))
    for axis in range(grid.dim):
        out = out + (
            -np.roll(f, -2, axis=axis)
            + 16.0 * np.roll(f, -1, axis=axis)
            - 30.0 * f
            + 16.0 * np.roll(f, 1, axis=axis)
            - np.roll(f, 2, axis=axis)
        ) / (12.0 * h2)
    return out


def fd_divergence4(vec: np.ndarray, grid: Grid) -> np.ndarray:
    """Fourth-order divergence of a stacked vector field (dim, *shape)."""
    if vec.shape != (grid.dim,) + grid.shape:
        raise ValueError(f"vector field shape {vec.shape} does not match grid")
    out = np.zeros(grid.shape, dtype=vec.dtype)
    for axis in range(grid.dim):
        out += _fd_axis_derivative(vec[axis], grid.spacing, axis)
    return out


def integrate(f: np.ndarray, grid: Grid) -> float | complex:
    """Trapezoid quadrature; on a periodic uniform grid this is the lattice sum."""
    _check_shape(np.asarray(f), grid)
    return np.sum(f) * grid.cell_volume


def norm_l2(f: np.ndarray, grid: Grid) -> float:
    """L2 norm with the grid measure."""
    return float(np.sqrt(np.sum(np.abs(f) ** 2).real * grid.cell_volume))
