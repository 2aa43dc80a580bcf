"""Radial grids on [0, R] and nodal functions defined on them.

The spatial dimension N enters only through the measure r^(N-1) dr and the
surface constant of the unit sphere.  For N = 1 the convention is the
half-interval model on [0, R] with surface constant 1 and a free derivative
at r = 0, used consistently by the energy and shooting modules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def surface_constant(N: int) -> float:
    """Area of the unit sphere in dimension N (1.0 for the half-interval model)."""
    if N == 1:
        return 1.0
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing nodes r_0 = 0 < ... < r_{n-1} = R with quadrature data.

    Cell masses integrate r^(N-1) exactly over each cell, so the nodal
    trapezoid weights sum to omega * R^N / N to machine precision.
    """

    R: float
    N: int
    r: np.ndarray
    omega: float = field(init=False)
    h: np.ndarray = field(init=False)
    cell_mass: np.ndarray = field(init=False)
    node_weight: np.ndarray = field(init=False)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        if r.ndim != 1 or r.size < 2:
            raise ValueError("grid needs at least 2 nodes")
        if r[0] != 0.0 or not np.isclose(r[-1], self.R, rtol=1e-14, atol=0.0):
            raise ValueError("nodes must start at 0 and end at R")
        if np.any(np.diff(r) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if self.N < 1:
            raise ValueError("dimension must be >= 1")
        omega = surface_constant(self.N)
        h = np.diff(r)
        cell_mass = omega * np.diff(r**self.N) / self.N
        node_weight = 0.5 * (
            np.concatenate(([0.0], cell_mass)) + np.concatenate((cell_mass, [0.0]))
        )
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "cell_mass", cell_mass)
        object.__setattr__(self, "node_weight", node_weight)

    @property
    def n(self) -> int:
        return self.r.size

    @property
    def domain_measure(self) -> float:
        """Measure of the ball, omega * R^N / N."""
        return self.omega * self.R**self.N / self.N

    @staticmethod
    def uniform(R: float, N: int, n: int) -> "RadialGrid":
        return RadialGrid(R=float(R), N=int(N), r=np.linspace(0.0, float(R), int(n)))

    @staticmethod
    def graded(R: float, N: int, n: int, power: float = 2.0) -> "RadialGrid":
        """Nodes clustered near r = R for power > 1 (boundary layers)."""
        s = np.linspace(0.0, 1.0, int(n))
        return RadialGrid(R=float(R), N=int(N), r=float(R) * (1.0 - (1.0 - s) ** float(power)))


@dataclass(frozen=True)
class GridFunction:
    """Nodal values on a radial grid."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError("values must match the grid node count")
        object.__setattr__(self, "values", v)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(self.grid, np.asarray(values, dtype=float))

    def enforce_boundary(self) -> "GridFunction":
        """Return a copy with the Dirichlet value at r = R set to zero."""
        v = self.values.copy()
        v[-1] = 0.0
        return GridFunction(self.grid, v)
