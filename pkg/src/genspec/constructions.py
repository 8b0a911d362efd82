"""Computable versions of the approximate eigenfunctions behind the spectrum.

* v_r: equal to 1 on the flat disc D_r (normal to ``axis``, radius r, centred
  at x0), decaying linearly to 0 over a collar of thickness r^2 (the set R_r),
  zero elsewhere.  It approximates an eigenfunction for lambda = kappa_axis(x0).
* box mode: the product of sines on the scaled box S_h whose side lengths
  are tuned so that the two anisotropic second derivatives cancel for any
  lambda strictly between two constant coefficient values k1 < k2.

Axes are 0-based throughout.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import DiagonalTensorField
from .linalg import DEFAULT_CG_TOL, SparseMatrix, cg_solve, l_norm, spmv
from .mesh import StructuredGrid

# minimum collar thickness r^2, in units of the largest grid spacing
COLLAR_MIN_CELLS = 1.0
# minimum number of grid cells spanned by each edge of S_h
BOX_EDGE_MIN_CELLS = 2.0


class ProbeError(ValueError):
    pass


# ---------------------------------------------------------------- v_r geometry

def _split_axis(x, x0, axis):
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    diff = x - x0
    a = np.abs(diff[..., axis])
    planar = np.delete(diff, axis, axis=-1)
    rho = np.sqrt(np.sum(planar**2, axis=-1))
    return a, rho


def distance_to_disc(x, x0, r: float, axis: int = 0):
    """Euclidean distance from x to the closed disc D_r normal to ``axis``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise ProbeError("the disc construction is three-dimensional")
    a, rho = _split_axis(x, x0, axis)
    out = np.where(rho <= r, a, np.sqrt(a**2 + np.maximum(rho - r, 0.0) ** 2))
    return out if out.ndim else float(out)


def vr_value(x, x0, r: float, axis: int = 0):
    """Analytic v_r(x) = clamp(1 - d(x, D_r)/r^2, 0, 1)."""
    dist = distance_to_disc(x, x0, r, axis)
    return np.clip(1.0 - np.asarray(dist) / r**2, 0.0, 1.0)


def in_cylinder(x, x0, r, axis=0):
    a, rho = _split_axis(x, x0, axis)
    return (a < r**2) & (rho <= r)


def in_neighbourhood(x, x0, r, axis=0):
    return np.asarray(distance_to_disc(x, x0, r, axis)) <= r**2


def cylinder_volume(r: float) -> float:
    return 2.0 * math.pi * r**4


def collar_volume_bound(r: float) -> float:
    """Upper bound 2 pi r^5 (2 + r) on vol(R_r minus C_r)."""
    return 2.0 * math.pi * r**5 * (2.0 + r)


def neighbourhood_bbox(x0, r, axis):
    """Axis-aligned bounding box of R_r."""
    x0 = np.asarray(x0, dtype=float)
    ext = np.full(3, r + r**2)
    ext[axis] = r**2
    return x0 - ext, x0 + ext


def _check_vr_geometry(grid: StructuredGrid, x0, r, axis, collar_min_cells):
    if grid.d != 3:
        raise ProbeError("the v_r construction needs a 3D grid")
    if not 0.0 < r < 1.0:
        raise ProbeError(f"r must lie in (0, 1), got {r}")
    if axis not in (0, 1, 2):
        raise ProbeError(f"axis must be 0, 1 or 2, got {axis}")
    lo, hi = neighbourhood_bbox(x0, r, axis)
    if np.any(lo <= np.asarray(grid.domain.lo)) or np.any(hi >= np.asarray(grid.domain.hi)):
        raise ProbeError(f"R_r with r={r} around x0={list(x0)} is not strictly inside the domain")
    if r**2 < collar_min_cells * grid.max_spacing:
        raise ProbeError(
            f"resolvability rule violated: collar r^2 = {r**2:.4g} < {collar_min_cells:g} x spacing "
            f"{grid.max_spacing:.4g}; use a larger r or a finer grid"
        )


@dataclass
class VrProbe:
    x0: tuple[float, ...]
    axis: int
    r: float
    lam: float
    nodal: np.ndarray
    metrics: dict = field(default_factory=dict)


def build_vr(
    grid: StructuredGrid,
    x0,
    axis: int,
    r: float,
    lam: float = float("nan"),
    collar_min_cells: float = COLLAR_MIN_CELLS,
) -> VrProbe:
    x0 = tuple(float(v) for v in x0)
    _check_vr_geometry(grid, x0, r, axis, collar_min_cells)
    nodal = vr_value(grid.interior_points(), x0, r, axis)
    return VrProbe(x0, axis, float(r), float(lam), nodal)


def pencil_residual_norm(A: SparseMatrix, L: SparseMatrix, lam: float, v, rel_tol=DEFAULT_CG_TOL):
    """||u||_L with L u = (lam L - A) v, i.e. the L-norm of (lam I - L^-1 A) v."""
    g = lam * spmv(L, v) - spmv(A, v)
    sol = cg_solve(L, g, rel_tol=rel_tol, preconditioner="jacobi")
    return math.sqrt(max(float(sol.x @ g), 0.0)), sol


def vr_metrics(A: SparseMatrix, L: SparseMatrix, lam: float, probe: VrProbe, rel_tol=DEFAULT_CG_TOL) -> dict:
    res, sol = pencil_residual_norm(A, L, lam, probe.nodal, rel_tol)
    probe.metrics.update(
        l_norm=l_norm(L, probe.nodal),
        residual_l_norm=res,
        cg_iterations=sol.iterations,
    )
    return probe.metrics


def sample_neighbourhood(x0, r, axis, per_axis: int = 41) -> np.ndarray:
    """Lattice points of the bounding box of R_r that lie in R_r (x0 included)."""
    lo, hi = neighbourhood_bbox(x0, r, axis)
    axes = [np.linspace(lo[k], hi[k], per_axis) for k in range(3)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    dist = distance_to_disc(pts, x0, r, axis)
    pts = pts[dist <= r**2 * (1 + 1e-12)]
    return np.vstack([np.asarray(x0, dtype=float)[None, :], pts])


def vr_theoretical_bound(field: DiagonalTensorField, x0, axis: int, r: float, sampling: int = 41) -> float:
    """Continuum bound on ||u_r||_L^2:

    (2 pi + 2 pi r (2+r)) sup |k_a(x0) - k_a|^2 + 2 pi r (2+r) sum_{i != a} sup |k_a(x0) - k_i|^2,
    sups over R_r estimated on a lattice.
    """
    pts = sample_neighbourhood(x0, r, axis, sampling)
    inside = field.domain.contains(pts)
    pts = pts[inside]
    lam = float(field(np.asarray(x0, dtype=float))[axis])
    sq = (field(pts) - lam) ** 2
    sups = sq.max(axis=0)
    collar = 2.0 * math.pi * r * (2.0 + r)
    others = sum(float(sups[i]) for i in range(3) if i != axis)
    return (2.0 * math.pi + collar) * float(sups[axis]) + collar * others


# ------------------------------------------------------------------- box modes

@dataclass
class BoxModeProbe:
    x0: tuple[float, ...]
    k1: float
    k2: float
    lam: float
    h: float
    n: int
    nodal: np.ndarray
    metrics: dict = field(default_factory=dict)

    @property
    def box(self):
        return box_mode_extent(self.x0, self.k1, self.k2, self.lam, self.h)


def box_mode_extent(x0, k1, k2, lam, h):
    """(lo, hi) corners of S_h."""
    x0 = np.asarray(x0, dtype=float)
    edges = [h * math.sqrt(lam - k1), h * math.sqrt(k2 - lam)] + [h] * (x0.size - 2)
    return x0, x0 + np.asarray(edges[: x0.size])


def box_mode_value(x, x0, k1, k2, lam, h, n):
    """phi on S_h (open box), zero outside."""
    x = np.asarray(x, dtype=float)
    lo, hi = box_mode_extent(x0, k1, k2, lam, h)
    inside = np.all((x > lo) & (x < hi), axis=-1)
    phi = np.sin(n * math.pi * (x[..., 0] - lo[0]) / (h * math.sqrt(lam - k1)))
    phi = phi * np.sin(n * math.pi * (x[..., 1] - lo[1]) / (h * math.sqrt(k2 - lam)))
    return np.where(inside, phi, 0.0)


def build_box_mode(
    grid: StructuredGrid,
    x0,
    k1: float,
    k2: float,
    lam: float,
    h: float,
    n: int = 1,
    subdomain=None,
    edge_min_cells: float = BOX_EDGE_MIN_CELLS,
) -> BoxModeProbe:
    """Nodal interpolant of the box mode.

    ``subdomain`` is the (lo, hi) box on which the coefficients are constant;
    it defaults to the whole domain.
    """
    if grid.d not in (2, 3):
        raise ProbeError("box modes need a 2D or 3D grid")
    if not k1 < lam < k2:
        raise ProbeError(f"lambda must lie strictly between k1={k1} and k2={k2}, got {lam}")
    if not 0.0 < h < 1.0:
        raise ProbeError(f"h must lie in (0, 1), got {h}")
    if int(n) != n or n < 1:
        raise ProbeError(f"mode number n must be a positive integer, got {n}")
    x0 = tuple(float(v) for v in x0)
    if len(x0) != grid.d:
        raise ProbeError(f"x0 must have {grid.d} coordinates")
    lo, hi = box_mode_extent(x0, k1, k2, lam, h)
    s_lo, s_hi = (grid.domain.lo, grid.domain.hi) if subdomain is None else subdomain
    if np.any(lo < np.asarray(s_lo)) or np.any(hi > np.asarray(s_hi)):
        raise ProbeError(f"S_h = {list(lo)} .. {list(hi)} is not inside the constancy subdomain")
    cells = (hi - lo) / np.asarray(grid.spacing)
    if np.any(cells < edge_min_cells):
        raise ProbeError(
            f"S_h edges span {np.round(cells, 2).tolist()} cells; each needs at least {edge_min_cells:g}"
        )
    nodal = box_mode_value(grid.interior_points(), x0, k1, k2, lam, h, n)
    return BoxModeProbe(x0, float(k1), float(k2), float(lam), float(h), int(n), nodal)


def box_mode_metrics(A: SparseMatrix, L: SparseMatrix, lam: float, probe: BoxModeProbe, rel_tol=DEFAULT_CG_TOL):
    from .eig import rayleigh_quotient

    res, sol = pencil_residual_norm(A, L, lam, probe.nodal, rel_tol)
    probe.metrics.update(
        rayleigh=rayleigh_quotient(A, L, probe.nodal),
        residual_l_norm=res,
        l_norm=l_norm(L, probe.nodal),
        cg_iterations=sol.iterations,
    )
    return probe.metrics


def write_probe_csv(grid: StructuredGrid, nodal, path) -> None:
    """Point-value export: x, y, z (as many as the dimension), value."""
    pts = grid.interior_points()
    names = ["x", "y", "z"][: grid.d] + ["value"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for p, v in zip(pts, nodal):
            w.writerow([repr(float(c)) for c in p] + [repr(float(v))])


# ------------------------------------------------- checks on the analytic v_r

def _cylindrical_grid(x0, r, axis, rho_max, n_axial, n_radial, n_angle):
    """Midpoint nodes and weights of a cylindrical rule around x0."""
    a = (np.arange(n_axial) + 0.5) / n_axial * 2 * r**2 - r**2
    rho = (np.arange(n_radial) + 0.5) / n_radial * rho_max
    th = (np.arange(n_angle) + 0.5) / n_angle * 2 * math.pi
    A, P, T = np.meshgrid(a, rho, th, indexing="ij")
    w = P * (2 * r**2 / n_axial) * (rho_max / n_radial) * (2 * math.pi / n_angle)
    others = [k for k in range(3) if k != axis]
    pts = np.empty(A.shape + (3,))
    pts[..., axis] = x0[axis] + A
    pts[..., others[0]] = x0[others[0]] + P * np.cos(T)
    pts[..., others[1]] = x0[others[1]] + P * np.sin(T)
    return pts.reshape(-1, 3), w.ravel()


def vr_gradient(x, x0, r, axis=0, step=None):
    """Central finite-difference gradient of the analytic v_r, shape (N, 3)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    step = 1e-4 * r**2 if step is None else step
    grad = np.empty_like(x)
    for k in range(3):
        e = np.zeros(3)
        e[k] = step
        grad[:, k] = (vr_value(x + e, x0, r, axis) - vr_value(x - e, x0, r, axis)) / (2 * step)
    return grad


def vr_energy_quadrature(r, x0=(0.5, 0.5, 0.5), axis=0, region="cylinder", resolution=64):
    """int |d v_r / d x_axis|^2 over C_r (``region='cylinder'``) or
    int |grad v_r|^2 over R_r (``region='neighbourhood'``), midpoint rule in
    cylindrical coordinates applied to the analytic v_r.
    """
    x0 = np.asarray(x0, dtype=float)
    if region == "cylinder":
        pts, w = _cylindrical_grid(x0, r, axis, r, 2 * resolution, resolution, 4 * resolution)
        g = vr_gradient(pts, x0, r, axis)[:, axis]
        return float(np.sum(w * g**2))
    if region == "neighbourhood":
        pts, w = _cylindrical_grid(x0, r, axis, r + r**2, 2 * resolution, 2 * resolution, 4 * resolution)
        g = vr_gradient(pts, x0, r, axis)
        return float(np.sum(w * np.sum(g**2, axis=1)))
    raise ValueError(f"unknown region {region!r}")


def monte_carlo_volumes(r, axis=0, samples=1_000_000, seed=0, x0=(0.0, 0.0, 0.0)):
    """Monte Carlo estimates of vol(C_r) and vol(R_r minus C_r).

    Returns (vol_c, vol_collar, stderr_c, stderr_collar).
    """
    rng = np.random.default_rng(seed)
    lo, hi = neighbourhood_bbox(x0, r, axis)
    pts = lo + (hi - lo) * rng.random((samples, 3))
    box = float(np.prod(hi - lo))
    cyl = in_cylinder(pts, x0, r, axis)
    nbh = in_neighbourhood(pts, x0, r, axis)
    collar = nbh & ~cyl
    pc, pr = cyl.mean(), collar.mean()
    return (
        box * pc,
        box * pr,
        box * math.sqrt(pc * (1 - pc) / samples),
        box * math.sqrt(pr * (1 - pr) / samples),
    )


def sampled_gradient_max(r, axis=0, samples=200_000, seed=0, x0=(0.0, 0.0, 0.0)):
    """Largest |d v_r / d x_i| over random points of R_r minus C_r."""
    rng = np.random.default_rng(seed)
    lo, hi = neighbourhood_bbox(x0, r, axis)
    pts = lo + (hi - lo) * rng.random((samples, 3))
    keep = in_neighbourhood(pts, x0, r, axis) & ~in_cylinder(pts, x0, r, axis)
    g = vr_gradient(pts[keep], x0, r, axis)
    return float(np.abs(g).max()), int(keep.sum())
