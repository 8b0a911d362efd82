"""Q1 finite element assembly of the stiffness forms on a structured grid.

    <A u, v> = int grad v . K grad u        <L u, v> = int grad v . grad u

Boundary nodes are condensed out (homogeneous Dirichlet).  Each element
contribution is computed once per unordered local pair and scattered into a
per-offset stencil array, so A is bitwise symmetric.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .coefficients import Constant, DiagonalTensorField
from .linalg import SparseMatrix
from .mesh import StructuredGrid


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor rule on the reference cell [0, 1]^d."""

    kind: str
    points: np.ndarray
    weights: np.ndarray

    @classmethod
    def make(cls, kind: str, d: int) -> "QuadratureRule":
        if kind == "centroid":
            pts1, w1 = np.array([0.5]), np.array([1.0])
        elif kind == "gauss2":
            g = 0.5 / np.sqrt(3.0)
            pts1, w1 = np.array([0.5 - g, 0.5 + g]), np.array([0.5, 0.5])
        else:
            raise ValueError(f"unknown quadrature {kind!r} (expected 'centroid' or 'gauss2')")
        # axis 0 fastest, like the node numbering
        combos = list(itertools.product(range(pts1.size), repeat=d))
        combos = [c[::-1] for c in combos]
        points = np.array([[pts1[i] for i in c] for c in combos])
        weights = np.array([np.prod([w1[i] for i in c]) for c in combos])
        return cls(kind, points, weights)

    @property
    def size(self) -> int:
        return self.weights.size


def local_vertices(d: int) -> np.ndarray:
    """Reference-cell vertices, axis 0 fastest: vertex a has bits a_k = (a >> k) & 1."""
    return np.array([[(a >> k) & 1 for k in range(d)] for a in range(2**d)])


def q1_gradients(points: np.ndarray, spacing) -> np.ndarray:
    """G[q, a, k] = d(phi_a)/d(x_k) at reference point q on a cell of the given spacing."""
    points = np.atleast_2d(points)
    d = points.shape[1]
    verts = local_vertices(d)
    h = np.asarray(spacing, dtype=float)
    # 1D factors: value and derivative of (1 - xi) or xi
    val = np.where(verts[None, :, :] == 1, points[:, None, :], 1.0 - points[:, None, :])
    der = np.where(verts == 1, 1.0, -1.0)
    G = np.empty((points.shape[0], verts.shape[0], d))
    for k in range(d):
        prod = np.broadcast_to(der[None, :, k] / h[k], val.shape[:2])
        for j in range(d):
            if j != k:
                prod = prod * val[:, :, j]
        G[:, :, k] = prod
    return G


@lru_cache(maxsize=None)
def _pairs(d: int):
    n = 2**d
    return [(a, b) for a in range(n) for b in range(a, n)]


def quadrature_points(grid: StructuredGrid, quad: QuadratureRule) -> np.ndarray:
    """Physical quadrature points, shape (*grid.cells, nq, d)."""
    d = grid.d
    corners = np.meshgrid(*[grid.axis_coords(k)[:-1] for k in range(d)], indexing="ij")
    corner = np.stack(corners, axis=-1)
    h = np.asarray(grid.spacing)
    return corner[..., None, :] + quad.points * h


def _element_pair_values(grid: StructuredGrid, kappa: np.ndarray, quad: QuadratureRule) -> np.ndarray:
    """Per-cell values of the local stiffness entries for every pair a <= b.

    ``kappa`` has shape (*cells, nq, d); returns shape (*cells, npairs).
    """
    d = grid.d
    G = q1_gradients(quad.points, grid.spacing)
    vol = float(np.prod(grid.spacing))
    pairs = _pairs(d)
    # coef[(q, k), pair] = w_q |cell| G[q,a,k] G[q,b,k]
    coef = np.empty((quad.size, d, len(pairs)))
    for p, (a, b) in enumerate(pairs):
        coef[:, :, p] = (quad.weights * vol)[:, None] * G[:, a, :] * G[:, b, :]
    flat = kappa.reshape(-1, quad.size * d)
    vals = flat @ coef.reshape(quad.size * d, len(pairs))
    return vals.reshape(*grid.cells, len(pairs))


def _stencil_offsets(d: int):
    """All offsets in {-1,0,1}^d, sorted by their position in the node numbering."""
    offs = [tuple(reversed(o)) for o in itertools.product((-1, 0, 1), repeat=d)]
    return offs


def _is_forward(delta) -> bool:
    for c in reversed(delta):
        if c:
            return c > 0
    return True  # zero offset


def _assemble_from_kappa(grid: StructuredGrid, kappa: np.ndarray, quad: QuadratureRule) -> SparseMatrix:
    d = grid.d
    verts = local_vertices(d)
    pair_vals = _element_pair_values(grid, kappa, quad)

    stencil: dict[tuple, np.ndarray] = {}
    for p, (a, b) in enumerate(_pairs(d)):
        delta = tuple(int(x) for x in verts[b] - verts[a])
        if delta not in stencil:
            stencil[delta] = np.zeros(grid.node_shape)
        sl = tuple(slice(verts[a][k], verts[a][k] + grid.cells[k]) for k in range(d))
        stencil[delta][sl] += pair_vals[..., p]

    inner = grid.interior_shape
    N = grid.interior_dofs
    m_idx = np.meshgrid(*[np.arange(1, n) for n in grid.cells], indexing="ij")
    dof_of_node = np.full(grid.node_shape, -1, dtype=np.int64)
    dof_of_node[tuple(slice(1, n) for n in grid.cells)] = np.arange(N).reshape(inner, order="F")

    offsets = _stencil_offsets(d)
    vals = np.zeros((N, len(offsets)))
    cols = np.zeros((N, len(offsets)), dtype=np.int64)
    mask = np.zeros((N, len(offsets)), dtype=bool)
    for t, delta in enumerate(offsets):
        nb = [m_idx[k] + delta[k] for k in range(d)]
        ok = np.ones(inner, dtype=bool)
        for k in range(d):
            ok &= (nb[k] >= 1) & (nb[k] <= grid.cells[k] - 1)
        if _is_forward(delta):
            src = stencil.get(delta)
            at = tuple(m_idx)
        else:
            src = stencil.get(tuple(-c for c in delta))
            at = tuple(nb[k].clip(0, grid.cells[k]) for k in range(d))
        if src is None:
            continue
        v = src[at]
        c = dof_of_node[tuple(nb[k].clip(0, grid.cells[k]) for k in range(d))]
        vals[:, t] = v.ravel(order="F")
        cols[:, t] = c.ravel(order="F")
        mask[:, t] = ok.ravel(order="F")

    counts = mask.sum(axis=1)
    row_ptr = np.zeros(N + 1, dtype=np.int64)
    np.cumsum(counts, out=row_ptr[1:])
    return SparseMatrix(N, row_ptr, cols[mask], vals[mask])


def assemble_stiffness(
    grid: StructuredGrid, field: DiagonalTensorField, quad: QuadratureRule | str = "gauss2"
) -> SparseMatrix:
    """Matrix of <A u, v> over interior DOFs, K sampled at the quadrature points."""
    if isinstance(quad, str):
        quad = QuadratureRule.make(quad, grid.d)
    if field.d != grid.d:
        raise ValueError(f"field dimension {field.d} does not match grid dimension {grid.d}")
    pts = quadrature_points(grid, quad)
    kappa = field(pts)
    return _assemble_from_kappa(grid, kappa, quad)


def assemble_laplacian(grid: StructuredGrid, quad: QuadratureRule | str = "gauss2") -> SparseMatrix:
    """Matrix of <L u, v>.

    gauss2 integrates the Q1 gradient products exactly.  The centroid rule
    agrees with it in 1D (gradients are cellwise constant) but underintegrates
    the cross terms in 2D/3D, so the two rules differ there.
    """
    identity = Constant(grid.domain, (1.0,) * grid.d)
    return assemble_stiffness(grid, identity, quad)


def interpolate(grid: StructuredGrid, f) -> np.ndarray:
    """Nodal values of ``f`` at the interior nodes, in DOF order.

    ``f`` is called once with the (N, d) array of points; if it does not
    return N values it is evaluated point by point instead.
    """
    pts = grid.interior_points()
    try:
        vals = np.asarray(f(pts), dtype=float)
    except Exception:
        vals = None
    if vals is None or vals.shape != (pts.shape[0],):
        vals = np.array([float(f(p)) for p in pts])
    return vals
