"""Predicted-versus-computed spectra, interval fill and probe studies."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .assembly import QuadratureRule, assemble_laplacian, assemble_stiffness, quadrature_points
from .coefficients import DiagonalTensorField, HullEstimate, estimate_hull
from .constructions import ProbeError, _check_vr_geometry, build_vr, vr_metrics, vr_theoretical_bound, COLLAR_MIN_CELLS
from .eig import DENSE_CAP, EigenResult, dense_generalized_eig, lobpcg
from .mesh import BoxDomain, StructuredGrid, build_grid

TOL_INCL = 1e-9


@dataclass
class SpectrumReport:
    grid: dict
    field: dict
    hull: HullEstimate
    eigenvalues: np.ndarray
    inclusion_ok: bool
    max_gap: float
    metadata: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    result: EigenResult | None = None

    def to_dict(self) -> dict:
        return {
            "grid": self.grid,
            "field": self.field,
            "hull": self.hull.to_dict(),
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "inclusion_ok": bool(self.inclusion_ok),
            "max_gap": float(self.max_gap),
            "metadata": self.metadata,
            "timings": self.timings,
        }


@dataclass
class FillResult:
    ok: bool
    worst_gap: float

    def to_dict(self):
        return {"ok": bool(self.ok), "worst_gap": float(self.worst_gap)}


def interval_fill_check(eigenvalues, interval, delta: float) -> FillResult:
    """Does every width-``delta`` subinterval of [a, b] hold an eigenvalue?

    Gaps are taken between consecutive eigenvalues inside [a, b], with a and
    b themselves included as virtual endpoints.
    """
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise ValueError(f"interval needs a < b, got [{a}, {b}]")
    ev = np.sort(np.asarray(eigenvalues, dtype=float))
    inside = ev[(ev >= a) & (ev <= b)]
    pts = np.concatenate([[a], inside, [b]])
    worst = float(np.diff(pts).max())
    return FillResult(worst <= delta, worst)


def run_spectrum(
    grid: StructuredGrid,
    field: DiagonalTensorField,
    solver: str = "dense",
    quadrature: str = "gauss2",
    want_vectors: bool = False,
    seed: int = 0,
    block: int = 5,
    lobpcg_tol: float = 1e-8,
    max_iter: int = 500,
    tol_incl: float = TOL_INCL,
    oversample: int = 2,
    target_interval=None,
    dense_cap: int = DENSE_CAP,
) -> SpectrumReport:
    """Assemble the pencil, solve it, and compare against the coefficient hull.

    The hull scan includes the quadrature points, so the discrete Rayleigh
    quotient bound applies to it exactly.  With ``solver='lobpcg'`` only the
    ``block`` smallest and ``block`` largest eigenvalues are computed.
    """
    t0 = time.perf_counter()
    quad = QuadratureRule.make(quadrature, grid.d)
    A = assemble_stiffness(grid, field, quad)
    L = assemble_laplacian(grid, quad)
    t1 = time.perf_counter()
    if solver == "dense":
        res = dense_generalized_eig(A, L, want_vectors=want_vectors, dense_cap=dense_cap)
        eigs = res.eigenvalues
    elif solver == "lobpcg":
        lo = lobpcg(A, L, block, "smallest", tol=lobpcg_tol, max_iter=max_iter, seed=seed)
        hi = lobpcg(A, L, block, "largest", tol=lobpcg_tol, max_iter=max_iter, seed=seed)
        eigs = np.unique(np.concatenate([lo.eigenvalues, hi.eigenvalues]))
        vecs = np.hstack([lo.eigenvectors, hi.eigenvectors]) if want_vectors else None
        order = np.argsort(np.concatenate([lo.eigenvalues, hi.eigenvalues]), kind="stable")
        res = EigenResult(
            np.concatenate([lo.eigenvalues, hi.eigenvalues])[order],
            None if vecs is None else vecs[:, order],
            np.concatenate([lo.residuals, hi.residuals])[order],
            method="lobpcg",
            seed=seed,
            iterations=lo.iterations + hi.iterations,
            converged=lo.converged and hi.converged,
        )
        eigs = res.eigenvalues
    else:
        raise ValueError(f"unknown solver {solver!r}")
    t2 = time.perf_counter()
    hull = estimate_hull(field, grid, oversample, extra_points=quadrature_points(grid, quad))
    inclusion_ok = bool(np.all(hull.contains(eigs, tol_incl)))
    interval = (hull.lo, hull.hi) if target_interval is None else target_interval
    if interval[1] > interval[0]:
        max_gap = interval_fill_check(eigs, interval, math.inf).worst_gap
    else:
        max_gap = 0.0
    t3 = time.perf_counter()
    return SpectrumReport(
        grid=grid.describe(),
        field=field.describe(),
        hull=hull,
        eigenvalues=np.asarray(eigs),
        inclusion_ok=inclusion_ok,
        max_gap=max_gap,
        metadata={
            "solver": solver,
            "quadrature": quadrature,
            "seed": seed,
            "tol_incl": tol_incl,
            "oversample": oversample,
            "target_interval": [float(interval[0]), float(interval[1])],
            "lobpcg_tol": lobpcg_tol if solver == "lobpcg" else None,
            "block": block if solver == "lobpcg" else None,
            "converged": bool(res.converged),
            "max_residual": None if res.residuals is None else float(np.max(res.residuals)),
        },
        timings={"assemble_s": t1 - t0, "solve_s": t2 - t1, "hull_s": t3 - t2},
        result=res,
    )


VR_COLUMNS = ["r", "cells", "lambda", "l_norm", "residual", "bound", "cg_iterations"]


def vr_convergence_study(
    field: DiagonalTensorField,
    x0,
    axis: int,
    r_list,
    cells_list,
    quadrature: str = "gauss2",
    collar_min_cells: float = COLLAR_MIN_CELLS,
    bound_sampling: int = 41,
) -> list[dict]:
    """One row per (r, cells), rows ordered r-major as declared.

    Every pair is checked against the geometry and resolvability rules before
    anything is assembled.
    """
    domain: BoxDomain = field.domain
    grids = {}
    for cells in cells_list:
        cells_t = tuple(cells) if np.ndim(cells) else (int(cells),) * domain.d
        grids[cells_t] = build_grid(domain, cells_t)
    for r in r_list:
        for g in grids.values():
            _check_vr_geometry(g, x0, r, axis, collar_min_cells)

    lam = float(field(np.asarray(x0, dtype=float))[axis])
    bounds = {r: vr_theoretical_bound(field, x0, axis, r, bound_sampling) for r in r_list}
    rows = {}
    for cells_t, g in grids.items():
        quad = QuadratureRule.make(quadrature, g.d)
        A = assemble_stiffness(g, field, quad)
        L = assemble_laplacian(g, quad)
        for r in r_list:
            probe = build_vr(g, x0, axis, r, lam, collar_min_cells)
            m = vr_metrics(A, L, lam, probe)
            rows[(r, cells_t)] = {
                "r": float(r),
                "cells": cells_t[0] if len(set(cells_t)) == 1 else list(cells_t),
                "lambda": lam,
                "l_norm": m["l_norm"],
                "residual": m["residual_l_norm"],
                "bound": bounds[r],
                "cg_iterations": m["cg_iterations"],
            }
        del A, L
    return [rows[(r, c)] for r in r_list for c in grids]


LOCALITY_COLUMNS = ["lambda", "argmax_coords", "kappa"]


def eigenvector_locality_probe(result: EigenResult, field: DiagonalTensorField, grid: StructuredGrid) -> list[dict]:
    """Where each eigenvector peaks and the coefficient values there.

    Exploratory only: no claim is made about how eigenvalues pair with
    coefficient values.
    """
    if result.eigenvectors is None:
        raise ValueError("eigenvectors are required for the locality probe")
    idx = np.argmax(np.abs(result.eigenvectors), axis=0)
    coords = grid.node_coords(idx)
    kappa = field(coords)
    return [
        {"lambda": float(lam), "argmax_coords": [float(c) for c in x], "kappa": [float(k) for k in kap]}
        for lam, x, kap in zip(result.eigenvalues, coords, kappa)
    ]


def vr_energy_closed_form(r: float) -> float:
    """Exact ||v_r||_L^2 = vol(R_r) / r^4 = 2 pi + pi^2 r + 4 pi r^2 / 3.

    |grad v_r| = 1/r^2 on R_r minus D_r; R_r is the cylinder C_r plus half a
    solid torus (Pappus: half-disc of radius r^2 swept around a circle of
    radius r + 4 r^2 / (3 pi)).
    """
    return 2.0 * math.pi + math.pi**2 * r + 4.0 * math.pi * r**2 / 3.0
