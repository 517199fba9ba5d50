"""Headline falsifiers: projective superposition residual, complexifier-rigidity
scan, time-reversal involution defect, and 2D circulation quantisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import (
    DEFAULT_EPS_MASK,
    PhysicalConstants,
    WaveField,
    phase_time_derivative,
    polar_decompose,
)
from .grid import Grid, make_grid, norm_l2, spectral_gradient, spectral_laplacian
from .propagate import EvolutionSpec, evolve
from .states import harmonic_potential

__all__ = [
    "SuperpositionConfig",
    "superposition_residual",
    "superposition_curve",
    "projective_residual",
    "complexifier_scan",
    "ComplexifierScanResult",
    "time_reversal_defect",
    "circulation",
    "FalsifierFired",
    "LoopThroughNodeError",
]


class FalsifierFired(RuntimeError):
    """A predicted behaviour was violated by the measured data."""


class LoopThroughNodeError(ValueError):
    pass


@dataclass(frozen=True)
class SuperpositionConfig:
    """Two displaced Gaussian packets in a harmonic trap, base and refined grids.

    Packet centers are offsets from the box center; the initial disjointness
    invariant requires |x1 - x2| >= 6 sigma.  The refined grid is always
    (2N, dt/2).
    """

    # coherent width for the default trap (omega = 0.2) at +-3 sigma
    x1: float = -3.0 * 5.0**0.5
    x2: float = 3.0 * 5.0**0.5
    p1: float = 0.0
    p2: float = 0.0
    sigma: float = 5.0**0.5
    beta_list: tuple[float, ...] = (0.0, 0.005, 0.01, 0.02, 0.05)
    eps_reg: float = 1e-6
    omega: float = 0.2
    t_final: float = 2.1
    dt: float = 0.005
    n_base: int = 4096
    length: float = 68.0

    def __post_init__(self) -> None:
        if abs(self.x1 - self.x2) < 6.0 * self.sigma:
            raise ValueError("packets must start disjoint: |x1 - x2| >= 6 sigma")

    def grid(self, refined: bool = False) -> Grid:
        n = 2 * self.n_base if refined else self.n_base
        return make_grid(1, n, self.length)

    def timestep(self, refined: bool = False) -> float:
        return self.dt / 2 if refined else self.dt


def _packet(grid: Grid, center: float, momentum: float, sigma: float, hbar: float) -> np.ndarray:
    x = grid.axes[0] - 0.5 * grid.length
    return (np.pi * sigma**2) ** -0.25 * np.exp(
        -((x - center) ** 2) / (2.0 * sigma**2) + 1j * momentum * (x - center) / hbar
    )


def _evolve_batch(
    batch: np.ndarray,
    V: np.ndarray,
    grid: Grid,
    dt: float,
    n_steps: int,
    beta: float,
    eps_reg: float,
    constants: PhysicalConstants,
) -> np.ndarray:
    """Strang split-step on a stack of states; the beta kick is recomputed per
    half step exactly as in the scalar stepper so beta = 0 stays bitwise linear."""
    kin = np.exp(-1j * constants.hbar * grid._k2[None, :] * dt / (2.0 * constants.m))
    half_v = np.exp(-1j * V[None, :] * dt / (2.0 * constants.hbar))
    ik = 1j * grid.wavenumbers

    def u_beta(b: np.ndarray) -> np.ndarray:
        rho = b.real**2 + b.imag**2
        grad = np.fft.ifft(ik[None, :] * np.fft.fft(rho, axis=-1), axis=-1).real
        eps = eps_reg * rho.max(axis=-1, keepdims=True)
        return beta * grad**2 / (rho + eps) ** 2

    for _ in range(n_steps):
        if beta:
            batch = batch * np.exp(-0.5j * u_beta(batch) * dt / constants.hbar)
        batch = half_v * batch
        batch = np.fft.ifft(kin * np.fft.fft(batch, axis=-1), axis=-1)
        batch = half_v * batch
        if beta:
            batch = batch * np.exp(-0.5j * u_beta(batch) * dt / constants.hbar)
    return batch


def projective_residual(a: np.ndarray, b: np.ndarray, grid: Grid) -> tuple[float, float]:
    """(residual, theta): min over global phase of || a/|a| - e^{i theta} b/|b| ||_2.

    theta comes in closed form from the argument of the inner product; no grid
    search is involved.
    """
    a = a / norm_l2(a, grid)
    b = b / norm_l2(b, grid)
    inner = complex(np.sum(np.conj(a) * b) * grid.cell_volume)
    theta = -np.angle(inner)
    diff = a - np.exp(1j * theta) * b
    return norm_l2(diff, grid), float(theta)


def superposition_residual(
    config: SuperpositionConfig,
    beta: float,
    refined: bool = False,
    constants: PhysicalConstants | None = None,
    eps_reg: float | None = None,
) -> float:
    """Evolve psi1, psi2 separately and (psi1+psi2)/sqrt(2) jointly; return the
    phase-optimised L2 distance between the joint state and the summed state."""
    c = constants or PhysicalConstants()
    grid = config.grid(refined)
    dt = config.timestep(refined)
    V = harmonic_potential(grid, config.omega, c)
    p1 = _packet(grid, config.x1, config.p1, config.sigma, c.hbar)
    p2 = _packet(grid, config.x2, config.p2, config.sigma, c.hbar)
    batch = np.stack([p1, p2, (p1 + p2) / np.sqrt(2.0)])
    batch /= np.sqrt(np.sum(np.abs(batch) ** 2, axis=-1, keepdims=True) * grid.cell_volume)
    n_steps = int(round(config.t_final / dt))
    out = _evolve_batch(
        batch, V, grid, dt, n_steps, beta, config.eps_reg if eps_reg is None else eps_reg, c
    )
    residual, _ = projective_residual(out[2], out[0] + out[1], grid)
    return residual


# Two states are orthogonal to within the residual-overlap noise once the
# projective distance reaches this plateau; ordering of two such measurements
# carries no information about the beta dependence.
_SATURATION_BAND = 1.30
_PLATEAU_JITTER = 0.05


def superposition_curve(
    config: SuperpositionConfig,
    constants: PhysicalConstants | None = None,
    monotone_tol: float = 1e-12,
) -> list[dict]:
    """Residuals over the beta list on base and refined grids.

    Raises FalsifierFired on non-monotone growth in beta beyond the tolerance
    (on either grid): monotone growth of the projective defect with the
    non-Fisher coupling is the prediction under test.  On the saturation
    plateau, where consecutive residuals are both orthogonality measurements
    near sqrt(2), only jitter beyond the overlap noise counts as a violation.
    """
    rows = []
    for beta in config.beta_list:
        rows.append(
            {
                "beta": beta,
                "base": superposition_residual(config, beta, refined=False, constants=constants),
                "refined": superposition_residual(config, beta, refined=True, constants=constants),
            }
        )
    for col in ("base", "refined"):
        vals = [r[col] for r in rows]
        for i in range(len(vals) - 1):
            tol = monotone_tol
            if vals[i] >= _SATURATION_BAND and vals[i + 1] >= _SATURATION_BAND:
                tol = _PLATEAU_JITTER
            if vals[i + 1] < vals[i] - tol:
                raise FalsifierFired(
                    f"superposition residual non-monotone in beta on {col} grid: "
                    f"beta={rows[i + 1]['beta']} gives {vals[i + 1]:.6e} < {vals[i]:.6e}"
                )
    return rows


@dataclass
class ComplexifierScanResult:
    p_grid: np.ndarray
    s_grid: np.ndarray
    defect: np.ndarray
    argmin: tuple[int, int]
    floor: float
    kappa_recovered: float
    alpha_recovered: float
    uninformative: bool = False


def complexifier_scan(
    p_grid: np.ndarray,
    s_grid: np.ndarray,
    snapshots: list[WaveField],
    V: np.ndarray,
    constants: PhysicalConstants,
    eps_mask: float = DEFAULT_EPS_MASK,
) -> ComplexifierScanResult:
    """Defect of the candidate complexifier phi = rho^p e^{i s S} against a linear
    Schrodinger step with kappa = 1/s.

    The true hydrodynamic flow supplies the instantaneous rates rho_t = -div j
    and S_t = -Re(H psi/psi); the defect is the masked, normalised residual of
    i kappa d_t phi - (-(kappa^2/2m) Lap + V) phi.  Only the polar cell
    (p, s) = (1/2, 1/hbar) linearises the flow.
    """
    p_grid = np.asarray(p_grid, dtype=float)
    s_grid = np.asarray(s_grid, dtype=float)
    total = np.zeros((len(p_grid), len(s_grid)))
    den_floor = 0.0

    for wf in snapshots:
        grid = wf.grid
        hydro = polar_decompose(wf, eps_mask, constants)
        mask = hydro.mask
        rho = hydro.rho
        s_field = hydro.S
        rho_t = np.zeros(grid.shape)
        for axis in range(grid.dim):
            rho_t += spectral_gradient(hydro.j[axis], grid)[axis]
        rho_t = -rho_t
        s_t = phase_time_derivative(wf, V, constants)
        rate_log_rho = np.zeros(grid.shape)
        np.divide(rho_t, rho, out=rate_log_rho, where=rho > 1e-13 * rho.max())
        den_floor = max(den_floor, float(np.max(np.abs(rho_t))))

        for ip, p in enumerate(p_grid):
            amp = rho**p
            for i_s, s in enumerate(s_grid):
                kappa = 1.0 / s
                phi = amp * np.exp(1j * s * s_field)
                phi_t = phi * (p * rate_log_rho + 1j * s * s_t)
                h_phi = -(kappa**2 / (2.0 * constants.m)) * spectral_laplacian(phi, grid) + V * phi
                res = 1j * kappa * phi_t - h_phi
                num = float(np.sum(np.abs(res[mask]) ** 2))
                den = float(np.sum((np.abs(kappa * phi_t[mask]) ** 2 + np.abs(h_phi[mask]) ** 2)))
                total[ip, i_s] += math.sqrt(num / den) if den > 1e-280 else 0.0

    defect = total / len(snapshots)
    argmin = np.unravel_index(int(np.argmin(defect)), defect.shape)
    kappa = 1.0 / s_grid[argmin[1]]
    return ComplexifierScanResult(
        p_grid=p_grid,
        s_grid=s_grid,
        defect=defect,
        argmin=(int(argmin[0]), int(argmin[1])),
        floor=float(defect[argmin]),
        kappa_recovered=float(kappa),
        alpha_recovered=float(kappa**2 / (2.0 * constants.m)),
        uninformative=bool(den_floor < 1e-14),
    )


def time_reversal_defect(
    psi0: WaveField,
    V: np.ndarray,
    T: float,
    D: float,
    constants: PhysicalConstants,
    dt: float = 0.01,
    eps_mask: float = DEFAULT_EPS_MASK,
) -> tuple[float, float]:
    """(defect_norm, floor_ratio) for the involution K U(T) K U(T) = I.

    K is complex conjugation (with t -> -t).  defect_norm is the L2 distance
    from the reconstructed state to psi0; floor_ratio compares the defect at
    diffusion D against the D = 0 floor on the same grid.
    """
    n_steps = int(round(T / dt))
    if n_steps and abs(n_steps * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError("T must be a multiple of dt")

    def run(diffusion: float) -> float:
        if n_steps == 0:
            return 0.0
        kind = "linear" if diffusion == 0.0 else "dg_diffusion"
        spec = EvolutionSpec(kind=kind, dt=dt, t_final=T, record_stride=max(n_steps, 1), D=diffusion)
        state = psi0
        for _ in range(2):
            traj = evolve(state, V, spec, constants)
            state = traj.snapshots[-1][1]
            state = WaveField(state.grid, np.conj(state.values), 0.0)
        return norm_l2(state.values - psi0.values, psi0.grid)

    defect = run(D)
    if D == 0.0:
        return defect, 1.0
    floor = run(0.0)
    return defect, defect / max(floor, 1e-300)


def _loop_cells(i0: int, j0: int, radius_cells: int, n: int) -> list[tuple[int, int]]:
    """Counterclockwise square lattice loop centered on (i0, j0)."""
    r = radius_cells
    cells = []
    for dj in range(-r, r):
        cells.append(((i0 + r) % n, (j0 + dj) % n))
    for di in range(r, -r, -1):
        cells.append(((i0 + di) % n, (j0 + r) % n))
    for dj in range(r, -r, -1):
        cells.append(((i0 - r) % n, (j0 + dj) % n))
    for di in range(-r, r):
        cells.append(((i0 + di) % n, (j0 - r) % n))
    return cells


def circulation(
    psi2d: WaveField,
    loop_radius: float,
    center: tuple[float, float],
    constants: PhysicalConstants,
    eps_mask: float = DEFAULT_EPS_MASK,
) -> tuple[float, float, float]:
    """(line_value, area_value, n_estimate) around a closed lattice loop.

    line_value sums local phase increments arg(psi_{k+1}/psi_k) * hbar along
    the loop (no global unwrap, so multivalued phase is handled exactly);
    area_value accumulates plaquette windings over the enclosed region; both
    equal 2 pi n hbar for an isolated enclosed vortex of winding n.
    """
    grid = psi2d.grid
    if grid.dim != 2:
        raise ValueError("circulation requires a 2D field")
    h = grid.spacing
    i0 = int(round(center[0] / h)) % grid.n
    j0 = int(round(center[1] / h)) % grid.n
    r_cells = int(round(loop_radius / h))
    if r_cells < 3:
        raise ValueError("loop must avoid the node by at least 3 cells")

    values = psi2d.values
    rho = psi2d.density()
    rho_floor = eps_mask * float(rho.max())
    cells = _loop_cells(i0, j0, r_cells, grid.n)
    path = np.array([values[c] for c in cells] + [values[cells[0]]])
    if np.any(np.abs(path) ** 2 <= rho_floor):
        raise LoopThroughNodeError("loop intersects the masked nodal region")
    increments = np.angle(path[1:] * np.conj(path[:-1]))
    line_value = constants.hbar * float(np.sum(increments))

    def plaquette(i: int, j: int) -> float:
        ip, jp = (i + 1) % grid.n, (j + 1) % grid.n
        corners = [values[i, j], values[ip, j], values[ip, jp], values[i, jp], values[i, j]]
        corners = np.array(corners)
        return float(np.sum(np.angle(corners[1:] * np.conj(corners[:-1]))))

    area_sum = 0.0
    for di in range(-r_cells, r_cells):
        for dj in range(-r_cells, r_cells):
            area_sum += plaquette((i0 + di) % grid.n, (j0 + dj) % grid.n)
    area_value = constants.hbar * area_sum

    n_estimate = line_value / (2.0 * np.pi * constants.hbar)
    return line_value, area_value, float(n_estimate)
