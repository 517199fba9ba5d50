"""Numerical falsifiers for Fisher-regularised information hydrodynamics.

Propagates wavefunctions with split-step spectral integrators, extracts
Madelung hydrodynamic fields, and runs the residual, symmetry-algebra, and
stress-test diagnostics that pin the linear Schrodinger equation as the
reversible fixed point of the flow.
"""

from .fields import HydroFields, PhysicalConstants, WaveField, polar_compose, polar_decompose
from .grid import Grid, make_grid
from .propagate import EvolutionSpec, Trajectory, evolve

__all__ = [
    "Grid",
    "make_grid",
    "PhysicalConstants",
    "WaveField",
    "HydroFields",
    "polar_compose",
    "polar_decompose",
    "EvolutionSpec",
    "Trajectory",
    "evolve",
]

__version__ = "0.1.0"
