"""Uniform 1D grids and nodal functions with zero boundary values.

The interval (a, b) is split into ``n_cells`` equal cells.  A
:class:`GridFunction` stores one value per node and stands for the continuous
piecewise-linear interpolant through those values, with both endpoint values
pinned to zero.  First-order quantities (cell slopes, the p-Dirichlet energy)
are exact for that interpolant; zero-order integrals use the composite
trapezoid rule on nodal values, which keeps discrete right-hand sides
nonnegative whenever the nodal values are.

All types are immutable after construction and every operation is a pure
function, so concurrent use on shared or distinct inputs is safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

__all__ = [
    "Grid",
    "GridFunction",
    "make_grid",
    "sup_norm",
    "lp_norm",
    "w1p_seminorm",
    "trapezoid",
    "write_csv",
    "read_csv",
]


@dataclass(frozen=True)
class Grid:
    """Uniform partition of the interval (a, b) into ``n_cells`` cells.

    Nodes are x_i = a + i*h for i = 0, ..., n_cells with h = (b-a)/n_cells;
    the n_cells - 1 nodes strictly between the endpoints are "interior".
    """

    a: float
    b: float
    n_cells: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.a < self.b):
            raise ValueError(
                f"invalid-domain: need finite a < b, got a={self.a!r}, b={self.b!r}"
            )
        if int(self.n_cells) != self.n_cells or self.n_cells < 4:
            raise ValueError(
                f"invalid-domain: n_cells must be an integer >= 4, got {self.n_cells!r}"
            )

    @property
    def h(self) -> float:
        """Cell width, (b - a) / n_cells."""
        return (self.b - self.a) / self.n_cells

    @property
    def n_interior(self) -> int:
        return self.n_cells - 1

    def nodes(self) -> np.ndarray:
        """Coordinates of all n_cells + 1 nodes, endpoints included."""
        return np.linspace(self.a, self.b, self.n_cells + 1)

    def interior_nodes(self) -> np.ndarray:
        return self.nodes()[1:-1]


def make_grid(a: float, b: float, n_cells: int) -> Grid:
    """Build a uniform grid on (a, b); raises ``invalid-domain`` on bad input."""
    return Grid(float(a), float(b), int(n_cells))


@dataclass(frozen=True)
class GridFunction:
    """Nodal values of a piecewise-linear function vanishing at both endpoints.

    The boundary condition is structural: construction fails unless
    values[0] == values[-1] == 0 and every entry is finite.  The stored array
    is a read-only copy of the input.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n_cells + 1,):
            raise ValueError(
                f"grid-mismatch: expected {self.grid.n_cells + 1} nodal values, "
                f"got array of shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite-input: nodal values contain NaN or inf")
        if v[0] != 0.0 or v[-1] != 0.0:
            raise ValueError("invalid-boundary: nodal values must vanish at both endpoints")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(grid.n_cells + 1))

    @classmethod
    def from_interior(cls, grid: Grid, interior: np.ndarray) -> "GridFunction":
        """Wrap interior nodal values, padding zeros at the boundary."""
        v = np.zeros(grid.n_cells + 1)
        v[1:-1] = interior
        return cls(grid, v)

    @classmethod
    def from_callable(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        """Sample ``fn`` at the nodes.  Endpoint values are forced to zero, so
        right-hand sides like "rhs = 1" are represented by their interior
        nodal values; boundary entries never enter any pairing against a
        function that vanishes on the boundary."""
        v = np.asarray(fn(grid.nodes()), dtype=float).copy()
        v[0] = 0.0
        v[-1] = 0.0
        return cls(grid, v)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        """Same grid, new nodal values (validated)."""
        return GridFunction(self.grid, values)

    def interior(self) -> np.ndarray:
        return self.values[1:-1]

    def slopes(self) -> np.ndarray:
        """Per-cell slopes of the piecewise-linear interpolant (n_cells entries)."""
        return np.diff(self.values) / self.grid.h


def trapezoid(f: GridFunction) -> float:
    """Composite trapezoid rule applied to the nodal values of f."""
    v = f.values
    return float(f.grid.h * (0.5 * v[0] + v[1:-1].sum() + 0.5 * v[-1]))


def sup_norm(f: GridFunction) -> float:
    """Max of nodal absolute values (the discrete sup norm)."""
    return float(np.max(np.abs(f.values)))


def lp_norm(f: GridFunction, p: float) -> float:
    """Trapezoid-rule L^p norm of the nodal values, p > 1."""
    if p <= 1.0:
        raise ValueError(f"invalid-exponent: p must be > 1, got {p}")
    v = np.abs(f.values) ** p
    integral = f.grid.h * (0.5 * v[0] + v[1:-1].sum() + 0.5 * v[-1])
    return float(integral ** (1.0 / p))


def w1p_seminorm(f: GridFunction, p: float) -> float:
    """(sum_cells h |slope|^p)^(1/p); exact for piecewise-linear functions."""
    if p <= 1.0:
        raise ValueError(f"invalid-exponent: p must be > 1, got {p}")
    s = f.slopes()
    return float((f.grid.h * np.sum(np.abs(s) ** p)) ** (1.0 / p))


def write_csv(f: GridFunction, path) -> None:
    """Write ``x,value`` rows, one per node, with a header line."""
    x = f.grid.nodes()
    lines = ["x,value"]
    lines.extend(f"{xi:.17g},{vi:.17g}" for xi, vi in zip(x, f.values))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> GridFunction:
    """Read a file written by :func:`write_csv`; the grid is rebuilt from the
    x column and checked for uniformity."""
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0].strip() != "x,value":
        raise ValueError(f"invalid-csv: expected header 'x,value' in {path}")
    data = np.array([[float(tok) for tok in ln.split(",")] for ln in lines[1:]])
    x, v = data[:, 0], data[:, 1]
    n_cells = len(x) - 1
    grid = make_grid(x[0], x[-1], n_cells)
    if np.max(np.abs(x - grid.nodes())) > 1e-12 * (grid.b - grid.a):
        raise ValueError(f"invalid-csv: non-uniform x column in {path}")
    return GridFunction(grid, v)
