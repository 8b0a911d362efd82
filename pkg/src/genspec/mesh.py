"""Structured tensor-product grids on axis-aligned boxes (d = 1, 2, 3).

Nodes are numbered lexicographically with axis 0 fastest.  Boundary nodes
carry the homogeneous Dirichlet condition and are never given a DOF.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class BoxDomain:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi):
            raise ValueError(f"domain.lo and domain.hi differ in length ({len(lo)} vs {len(hi)})")
        if len(lo) not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {len(lo)}")
        for k, (a, b) in enumerate(zip(lo, hi)):
            if not (np.isfinite(a) and np.isfinite(b)) or not a < b:
                raise ValueError(f"domain requires lo < hi on axis {k}, got [{a}, {b}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def d(self) -> int:
        return len(self.lo)

    @classmethod
    def unit(cls, d: int) -> "BoxDomain":
        return cls((0.0,) * d, (1.0,) * d)

    def contains(self, x, tol: float = 1e-12) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo = np.asarray(self.lo) - tol
        hi = np.asarray(self.hi) + tol
        return np.all((x >= lo) & (x <= hi), axis=-1)


@dataclass(frozen=True)
class StructuredGrid:
    domain: BoxDomain
    cells: tuple[int, ...]
    spacing: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        cells = tuple(int(c) for c in self.cells)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(
            self,
            "spacing",
            tuple((b - a) / n for a, b, n in zip(self.domain.lo, self.domain.hi, cells)),
        )

    @property
    def d(self) -> int:
        return self.domain.d

    @property
    def node_shape(self) -> tuple[int, ...]:
        return tuple(n + 1 for n in self.cells)

    @property
    def interior_shape(self) -> tuple[int, ...]:
        return tuple(n - 1 for n in self.cells)

    @property
    def total_nodes(self) -> int:
        return int(np.prod(self.node_shape))

    @property
    def interior_dofs(self) -> int:
        return int(np.prod(self.interior_shape))

    @property
    def max_spacing(self) -> float:
        return max(self.spacing)

    def axis_coords(self, k: int) -> np.ndarray:
        """Node coordinates along axis k, exactly lo + j*h."""
        j = np.arange(self.cells[k] + 1)
        return self.domain.lo[k] + j * self.spacing[k]

    def dof_multi_index(self, dof) -> np.ndarray:
        """Lattice multi-index (j_0, .., j_{d-1}) of interior DOF(s)."""
        dof = np.asarray(dof)
        if np.any(dof < 0) or np.any(dof >= self.interior_dofs):
            raise IndexError(f"dof index out of range [0, {self.interior_dofs})")
        idx = np.unravel_index(dof, self.interior_shape, order="F")
        return np.stack([i + 1 for i in idx], axis=-1)

    def node_coords(self, dof) -> np.ndarray:
        m = self.dof_multi_index(dof)
        lo = np.asarray(self.domain.lo)
        h = np.asarray(self.spacing)
        return lo + m * h

    def interior_points(self) -> np.ndarray:
        """(interior_dofs, d) coordinates of all interior nodes in DOF order."""
        return self.node_coords(np.arange(self.interior_dofs))

    def all_node_points(self) -> np.ndarray:
        """(total_nodes, d) coordinates of every node, axis 0 fastest."""
        axes = [self.axis_coords(k) for k in range(self.d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel(order="F") for m in mesh], axis=-1)

    def cell_centroids(self) -> np.ndarray:
        axes = [self.axis_coords(k)[:-1] + 0.5 * self.spacing[k] for k in range(self.d)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel(order="F") for m in mesh], axis=-1)

    def refined(self, factor: int) -> "StructuredGrid":
        return StructuredGrid(self.domain, tuple(factor * n for n in self.cells))

    def describe(self) -> dict:
        return {
            "lo": list(self.domain.lo),
            "hi": list(self.domain.hi),
            "cells": list(self.cells),
            "interior_dofs": self.interior_dofs,
        }


def build_grid(domain: BoxDomain, cells: Sequence[int]) -> StructuredGrid:
    """Uniform grid with ``cells[k]`` cells along axis k.

    At least two cells per axis are required, otherwise there is no interior
    node to carry a degree of freedom.
    """
    cells = tuple(cells)
    if domain.d not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {domain.d}")
    if len(cells) != domain.d:
        raise ValueError(f"grid.cells has {len(cells)} entries for a {domain.d}D domain")
    for k, n in enumerate(cells):
        if int(n) != n or n < 2:
            raise ValueError(f"grid.cells[{k}] must be an integer >= 2, got {n}")
    return StructuredGrid(domain, tuple(int(n) for n in cells))


def node_coords(grid: StructuredGrid, dof_index: int) -> np.ndarray:
    return grid.node_coords(int(dof_index))
