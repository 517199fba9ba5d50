"""Energy, entropy, Fisher information, convex regularisers and their
Euler-Lagrange derivatives, with the entropy-production and EL-necessity checks.

The directional (Gateaux) derivative test is the module's ground truth for the
EL formulas: every analytic variational derivative here is checked against
symmetric finite differences of the functional value in the test suite.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fields import HydroFields, PhysicalConstants
from .grid import Grid, integrate, spectral_gradient, spectral_laplacian
from .propagate import DensityTrajectory

__all__ = [
    "RegulariserSpec",
    "EnergyReport",
    "energy",
    "fisher_information",
    "shannon_entropy",
    "shannon_entropy_rate",
    "entropy_production_identity",
    "el_derivative",
    "fisher_laplacian_quotient",
    "regulariser_value",
    "fisher_el_necessity_report",
]

# rho below this fraction of max(rho) is round-off territory for a propagated
# field (psi tail noise ~1e-16 makes |grad rho|^2/rho order-one garbage there);
# the genuine tail contribution beyond the floor is O(1e-11) relative.
_REL_FLOOR = 1e-13


@dataclass(frozen=True)
class RegulariserSpec:
    """Convex local regulariser family f(rho) entering F[rho] = int f |grad rho|^2.

    Families: fisher(C) with f = C/rho, power(p, C) with f = C rho^p,
    constant(C), or custom with supplied f and f'.
    """

    family: str
    coefficient: float = 1.0
    power: float = 0.0
    f_custom: Callable[[np.ndarray], np.ndarray] | None = None
    fprime_custom: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self) -> None:
        if self.family not in ("fisher", "power", "constant", "custom"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.coefficient <= 0:
            raise ValueError("coefficient must be positive")
        if self.family == "custom" and (self.f_custom is None or self.fprime_custom is None):
            raise ValueError("custom family needs f and f'")

    def f(self, rho: np.ndarray) -> np.ndarray:
        if self.family == "fisher":
            return self.coefficient / rho
        if self.family == "power":
            return self.coefficient * rho**self.power
        if self.family == "constant":
            return self.coefficient * np.ones_like(rho)
        return self.f_custom(rho)

    def fprime(self, rho: np.ndarray) -> np.ndarray:
        if self.family == "fisher":
            return -self.coefficient / rho**2
        if self.family == "power":
            return self.coefficient * self.power * rho ** (self.power - 1.0)
        if self.family == "constant":
            return np.zeros_like(rho)
        return self.fprime_custom(rho)

    @property
    def is_fisher(self) -> bool:
        return self.family == "fisher" or (self.family == "power" and self.power == -1.0)


@dataclass
class EnergyReport:
    kinetic: float
    potential: float
    curvature: float
    total: float
    fisher_info: float
    shannon: float
    shannon_offmask_bound: float = 0.0


def fisher_information(rho: np.ndarray, grid: Grid) -> float:
    """I_F = int |grad rho|^2 / rho dx, guarded where rho underflows.

    Finite even through nodes of a smooth density (the integrand tends to
    4 |grad u|^2 for rho = u^2).
    """
    grad = spectral_gradient(rho, grid)
    grad_sq = np.sum(grad**2, axis=0)
    out = np.zeros_like(rho)
    np.divide(grad_sq, rho, out=out, where=rho > _REL_FLOOR * rho.max())
    return float(integrate(out, grid))


def shannon_entropy(rho: np.ndarray, grid: Grid) -> float:
    """S_Sh = -int rho ln rho dx with the integrand set to 0 where rho = 0."""
    out = np.zeros_like(rho)
    positive = rho > 0
    out[positive] = -rho[positive] * np.log(rho[positive])
    return float(integrate(out, grid))


def energy(
    hydro: HydroFields,
    V: np.ndarray,
    alpha: float,
    constants: PhysicalConstants,
) -> EnergyReport:
    """Quadrature of the kinetic, potential, and curvature densities.

    The kinetic density rho |grad S|^2 / 2m is assembled from the current
    (j^2 / rho) so it needs no unwrapped phase; rho-only densities integrate
    over the full grid with an underflow guard, since their tails are clean.
    The off-mask Shannon contribution is bounded and reported, not dropped.
    """
    if not hydro.mask.any():
        raise ValueError("energy: empty mask")
    grid = hydro.grid
    rho = hydro.rho
    rho_max = rho.max()
    safe = rho > _REL_FLOOR * rho_max

    j_sq = np.sum(hydro.j**2, axis=0)
    kin_density = np.zeros_like(rho)
    np.divide(constants.m * j_sq, 2.0 * rho, out=kin_density, where=safe)
    kinetic = float(integrate(kin_density, grid))

    potential = float(integrate(V * rho, grid))

    grad_rho = spectral_gradient(rho, grid)
    grad_sq = np.sum(grad_rho**2, axis=0)
    curv_density = np.zeros_like(rho)
    np.divide(grad_sq, 4.0 * rho, out=curv_density, where=safe)
    fisher = float(integrate(np.where(safe, grad_sq / np.maximum(rho, _REL_FLOOR * rho_max), 0.0), grid))
    curvature = alpha * float(integrate(curv_density, grid))

    eps = hydro.eps_mask
    offmask_bound = float(eps * rho_max * math.log(1.0 / max(eps * rho_max, 1e-300)) * grid.length**grid.dim)

    return EnergyReport(
        kinetic=kinetic,
        potential=potential,
        curvature=curvature,
        total=kinetic + potential + curvature,
        fisher_info=fisher,
        shannon=shannon_entropy(rho, grid),
        shannon_offmask_bound=abs(offmask_bound),
    )


def shannon_entropy_rate(
    trajectory: DensityTrajectory,
    D: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(times, measured, predicted) at interior snapshots of a diffusion run.

    measured: centered difference of S_Sh across neighbouring snapshots;
    predicted: D * I_F evaluated at the midpoint snapshot.
    """
    snaps = trajectory.snapshots
    if len(snaps) < 3:
        raise ValueError("need at least 3 snapshots")
    grid = trajectory.grid
    times, measured, predicted = [], [], []
    entropies = [shannon_entropy(rho, grid) for _, rho in snaps]
    for i in range(1, len(snaps) - 1):
        t_prev, t_next = snaps[i - 1][0], snaps[i + 1][0]
        times.append(snaps[i][0])
        measured.append((entropies[i + 1] - entropies[i - 1]) / (t_next - t_prev))
        predicted.append(D * fisher_information(snaps[i][1], grid))
    return np.array(times), np.array(measured), np.array(predicted)


def entropy_production_identity(
    rho: np.ndarray,
    v: np.ndarray | None,
    D: float,
    grid: Grid,
) -> tuple[float, float, float]:
    """(advective_rate, diffusive_rate, fisher_prediction) for the H-functional.

    Along the DG continuity law rho_t = -div(rho v) + D Lap rho the rate of
    S_Sh splits into a reversible advective part, int rho div v dx, and an
    irreversible production, -D int (1 + ln rho) Lap rho dx, which equals
    D * I_F up to quadrature; the pair (production, D*I_F) is the discrete
    form of the entropy identity checked along dg trajectories.
    """
    positive = rho > _REL_FLOOR * rho.max()
    log_term = np.zeros_like(rho)
    log_term[positive] = 1.0 + np.log(rho[positive])
    advective = 0.0
    if v is not None:
        div_v = np.zeros(grid.shape)
        for axis in range(grid.dim):
            div_v += spectral_gradient(v[axis], grid)[axis]
        advective = float(integrate(rho * div_v, grid))
    diffusive = -D * float(integrate(log_term * spectral_laplacian(rho, grid), grid))
    return advective, diffusive, D * fisher_information(rho, grid)


def regulariser_value(spec: RegulariserSpec, rho: np.ndarray, grid: Grid, mask: np.ndarray) -> float:
    """F[rho] = int f(rho) |grad rho|^2 dx over the mask."""
    grad = spectral_gradient(rho, grid)
    grad_sq = np.sum(grad**2, axis=0)
    dens = np.where(mask, spec.f(np.where(mask, rho, 1.0)) * grad_sq, 0.0)
    return float(integrate(dens, grid))


def el_derivative(spec: RegulariserSpec, rho: np.ndarray, grid: Grid, mask: np.ndarray) -> np.ndarray:
    """Euler-Lagrange field delta F / delta rho = -2 f Lap rho - f' |grad rho|^2, masked.

    For the Fisher family this equals -4C Lap sqrt(rho)/sqrt(rho) identically;
    the necessity report exercises that identity against an independently
    computed Laplacian quotient (via the signed root for node-bearing states).
    """
    lap = spectral_laplacian(rho, grid)
    grad = spectral_gradient(rho, grid)
    grad_sq = np.sum(grad**2, axis=0)
    rho_safe = np.where(mask, rho, 1.0)
    out = -2.0 * spec.f(rho_safe) * lap - spec.fprime(rho_safe) * grad_sq
    out[~mask] = 0.0
    return out


def fisher_laplacian_quotient(
    root: np.ndarray,
    coefficient: float,
    grid: Grid,
    mask: np.ndarray,
) -> np.ndarray:
    """-4C Lap(u)/u from a signed root u with rho = u^2 (independent route).

    Using the signed eigenfunction instead of sqrt(rho) keeps the field smooth
    through nodes, where |u| has a kink that would ring under spectral
    differentiation.
    """
    lap = spectral_laplacian(root, grid)
    out = np.zeros(grid.shape)
    np.divide(lap, root, out=out, where=mask & (np.abs(root) > 0))
    out *= -4.0 * coefficient
    out[~mask] = 0.0
    return out


def el_residual(spec: RegulariserSpec, rho: np.ndarray, root: np.ndarray, grid: Grid, mask: np.ndarray) -> float:
    """Masked relative L2 distance of delta F/delta rho from the pure Laplacian quotient.

    At floor only for f = C/rho: any other family leaves a |grad rho|^2
    remainder that no coefficient can cancel.
    """
    lhs = el_derivative(spec, rho, grid, mask)
    rhs = fisher_laplacian_quotient(root, spec.coefficient, grid, mask)
    num = math.sqrt(max(float(np.sum(np.where(mask, (lhs - rhs) ** 2, 0.0))), 0.0))
    den = math.sqrt(max(float(np.sum(np.where(mask, rhs**2, 0.0))), 1e-300))
    return num / den


def fisher_el_necessity_report(
    rho_library: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray, Grid]],
    spec_list: list[RegulariserSpec],
) -> list[dict]:
    """Residual table over (density, family) pairs.

    rho_library maps a label to (rho, signed_root, mask, grid); each density
    carries its own grid because the states have opposite resolution needs
    (the compact bump wants spectral headroom, the smooth states want a low
    noise ceiling).  Pass iff every Fisher-family residual is at floor
    (<= 1e-9) and every non-Fisher residual stays >= 1e-3.
    """
    rows = []
    for rho_id, (rho, root, mask, grid) in rho_library.items():
        for spec in spec_list:
            res = el_residual(spec, rho, root, grid, mask)
            rows.append(
                {
                    "rho_id": rho_id,
                    "family": spec.family if spec.family != "power" else f"power({spec.power:g})",
                    "coefficient": spec.coefficient,
                    "residual": res,
                    "is_fisher": spec.is_fisher,
                }
            )
    return rows


def necessity_report_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["rho_id", "family", "coefficient", "residual"])
    for row in rows:
        writer.writerow([row["rho_id"], row["family"], f"{row['coefficient']:.17g}", f"{row['residual']:.17g}"])
    return buf.getvalue()
