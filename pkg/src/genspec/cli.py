"""Command-line front end.

    genspec spectrum     --config cfg.toml [--out DIR] [--seed N]
    genspec vr-study     --config cfg.toml
    genspec box-mode     --config cfg.toml
    genspec fill-check   --config cfg.toml
    genspec oracle-check --config cfg.toml

Exit codes: 0 ok, 1 configuration/precondition error, 2 numerical failure,
3 a checked property was falsified.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    LOCALITY_COLUMNS,
    TOL_INCL,
    VR_COLUMNS,
    eigenvector_locality_probe,
    interval_fill_check,
    run_spectrum,
    vr_convergence_study,
)
from .assembly import assemble_laplacian, assemble_stiffness
from .coefficients import Constant
from .config import ConfigError, ExperimentConfig, load_config, solver_dict
from .constructions import BOX_EDGE_MIN_CELLS, COLLAR_MIN_CELLS, ProbeError, box_mode_metrics, build_box_mode
from .eig import EigenSolverError, dense_generalized_eig
from .io import write_csv, write_json
from .linalg import CGNotConverged, NotPositiveDefiniteError, SparseMatrix
from .mesh import build_grid
from .oracle import tensor_pencil_eigenvalues

log = logging.getLogger("genspec")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ASSERT = 0, 1, 2, 3


class PropertyFailed(RuntimeError):
    pass


def _strictly_decreasing(values) -> bool:
    values = list(values)
    return all(b < a for a, b in zip(values, values[1:]))


def _header(cfg: ExperimentConfig, command: str) -> dict:
    return {
        "command": command,
        "config_hash": cfg.config_hash,
        "seed": cfg.solver.seed,
        "version": __version__,
        "solver": solver_dict(cfg),
    }


def _spectrum_rows(report):
    res = report.result.residuals if report.result is not None else None
    if res is not None and len(res) == len(report.eigenvalues):
        return ["index", "eigenvalue", "residual"], [
            (i, float(v), float(r)) for i, (v, r) in enumerate(zip(report.eigenvalues, res))
        ]
    return ["index", "eigenvalue"], [(i, float(v)) for i, v in enumerate(report.eigenvalues)]


def _run_spectrum(cfg: ExperimentConfig, **overrides):
    s = cfg.solver
    kwargs = dict(
        solver=s.method,
        quadrature=s.quadrature,
        want_vectors=s.vectors or bool(cfg.get("analysis", "locality", False)),
        seed=s.seed,
        block=s.block,
        lobpcg_tol=s.tol,
        max_iter=s.max_iter,
        tol_incl=cfg.get("analysis", "tol_incl", TOL_INCL),
        oversample=cfg.get("analysis", "oversample", 2),
        target_interval=cfg.get("analysis", "interval"),
        dense_cap=s.dense_cap,
    )
    kwargs.update(overrides)
    return run_spectrum(cfg.grid, cfg.field, **kwargs)


def cmd_spectrum(cfg: ExperimentConfig, out: Path) -> int:
    report = _run_spectrum(cfg)
    doc = {**_header(cfg, "spectrum"), "report": report.to_dict()}
    write_json(out / "report.json", doc)
    header, rows = _spectrum_rows(report)
    write_csv(out / "eigenvalues.csv", header, rows)
    if cfg.get("analysis", "locality", False):
        table = eigenvector_locality_probe(report.result, cfg.field, cfg.grid)
        write_csv(out / "locality.csv", LOCALITY_COLUMNS, [[r[c] for c in LOCALITY_COLUMNS] for r in table])
    h = report.hull
    print(f"hull [{h.lo:.12g}, {h.hi:.12g}]  eigenvalues {len(report.eigenvalues)}  "
          f"range [{report.eigenvalues.min():.12g}, {report.eigenvalues.max():.12g}]  "
          f"inclusion_ok={report.inclusion_ok}")
    if not report.inclusion_ok:
        raise PropertyFailed("eigenvalues fall outside the coefficient hull")
    return EXIT_OK


def _need(cfg, section, key):
    value = cfg.get(section, key)
    if value is None:
        raise ConfigError(f"missing required key {section}.{key}")
    return value


def cmd_vr_study(cfg: ExperimentConfig, out: Path) -> int:
    x0 = _need(cfg, "vr", "x0")
    axis = cfg.get("vr", "axis", 0)
    r_list = _need(cfg, "vr", "r_list")
    cells_list = cfg.get("vr", "cells_list", [cfg.grid.cells[0]])
    rows = vr_convergence_study(
        cfg.field, x0, axis, r_list, cells_list,
        quadrature=cfg.solver.quadrature,
        collar_min_cells=cfg.get("vr", "collar_min_cells", COLLAR_MIN_CELLS),
    )
    write_csv(out / "vr_study.csv", VR_COLUMNS, [[row[c] for c in VR_COLUMNS] for row in rows])
    for row in rows:
        print(f"r={row['r']:<6g} cells={row['cells']!s:<4} l_norm={row['l_norm']:.6f} "
              f"residual={row['residual']:.6e} bound={row['bound']:.6e}")
    failures = []
    asserts = cfg.section("assert")
    cells_seen = list(dict.fromkeys(str(r["cells"]) for r in rows))
    if asserts.get("residual_decreasing"):
        for c in cells_seen:
            sub = sorted((r for r in rows if str(r["cells"]) == c), key=lambda r: -r["r"])
            if not _strictly_decreasing(r["residual"] for r in sub):
                failures.append(f"residual not strictly decreasing in r at cells={c}")
    if asserts.get("within_bound"):
        for r in rows:
            if r["residual"] ** 2 > r["bound"]:
                failures.append(f"residual^2 exceeds bound at r={r['r']}, cells={r['cells']}")
    if asserts.get("l_norm_converging"):
        for rv in dict.fromkeys(r["r"] for r in rows):
            norms = [r["l_norm"] for r in rows if r["r"] == rv]
            diffs = np.abs(np.diff(norms))
            if len(diffs) < 2 or not _strictly_decreasing(diffs):
                failures.append(f"l_norm differences not decreasing under refinement at r={rv}")
    if failures:
        raise PropertyFailed("; ".join(failures))
    return EXIT_OK


BOX_COLUMNS = ["cells", "residual", "rayleigh", "rayleigh_error", "l_norm", "relative_residual"]


def cmd_box_mode(cfg: ExperimentConfig, out: Path) -> int:
    x0 = _need(cfg, "box", "x0")
    lam = _need(cfg, "box", "lambda")
    h = _need(cfg, "box", "h")
    n = cfg.get("box", "n", 1)
    values = getattr(cfg.field, "values", None)
    k1 = cfg.get("box", "k1", values[0] if values else None)
    k2 = cfg.get("box", "k2", values[1] if values else None)
    if k1 is None or k2 is None:
        raise ConfigError("box.k1 and box.k2 are required for non-constant fields")
    ladder = cfg.get("box", "ladder", [cfg.grid.cells[0]])
    sub = None
    if cfg.get("box", "subdomain_lo") is not None:
        sub = (_need(cfg, "box", "subdomain_lo"), _need(cfg, "box", "subdomain_hi"))
    edge_min = cfg.get("box", "edge_min_cells", BOX_EDGE_MIN_CELLS)
    grids = [build_grid(cfg.domain, (c,) * cfg.domain.d) for c in ladder]
    # every rung is validated before anything is assembled
    probes = [build_box_mode(g, x0, k1, k2, lam, h, n, sub, edge_min) for g in grids]
    if sub is not None or not isinstance(cfg.field, Constant):
        lo, hi = probes[0].box
        kap = cfg.field(np.vstack([lo, hi, 0.5 * (lo + hi)]))
        if not (np.allclose(kap[:, 0], k1) and np.allclose(kap[:, 1], k2)):
            raise ConfigError("field values on S_h do not match box.k1 / box.k2")
    rows = []
    for g, probe in zip(grids, probes):
        A = assemble_stiffness(g, cfg.field, cfg.solver.quadrature)
        L = assemble_laplacian(g, cfg.solver.quadrature)
        m = box_mode_metrics(A, L, lam, probe)
        rows.append({
            "cells": g.cells[0],
            "residual": m["residual_l_norm"],
            "rayleigh": m["rayleigh"],
            "rayleigh_error": abs(m["rayleigh"] - lam),
            "l_norm": m["l_norm"],
            "relative_residual": m["residual_l_norm"] / m["l_norm"],
        })
        print(f"cells={g.cells[0]:<4} residual={m['residual_l_norm']:.6e} rayleigh={m['rayleigh']:.15g}")
    write_csv(out / "box_mode.csv", BOX_COLUMNS, [[r[c] for c in BOX_COLUMNS] for r in rows])
    failures = []
    if cfg.get("assert", "residual_decreasing"):
        if not _strictly_decreasing(r["residual"] for r in rows):
            failures.append("box-mode residual not strictly decreasing under refinement")
    if cfg.get("assert", "rayleigh_decreasing"):
        if not _strictly_decreasing(r["rayleigh_error"] for r in rows):
            failures.append("|rayleigh - lambda| not strictly decreasing under refinement")
    if failures:
        raise PropertyFailed("; ".join(failures))
    return EXIT_OK


def _oracle_mismatch(eigs, oracle) -> float:
    return float(np.max(np.abs(eigs - oracle) / np.abs(oracle)))


def _constant_values(cfg: ExperimentConfig):
    if not isinstance(cfg.field, Constant):
        raise ConfigError("field.kind must be 'constant' for the tensor-product oracle")
    return cfg.field.values


def cmd_fill_check(cfg: ExperimentConfig, out: Path) -> int:
    delta = _need(cfg, "fill", "delta")
    report = _run_spectrum(cfg, solver="dense", want_vectors=False)
    interval = cfg.get("fill", "interval", [report.hull.lo, report.hull.hi])
    if len(interval) != 2 or not interval[0] < interval[1]:
        raise ConfigError("fill.interval must be [a, b] with a < b")
    fill = interval_fill_check(report.eigenvalues, interval, delta)
    doc = {**_header(cfg, "fill-check"), "report": report.to_dict(), "fill": fill.to_dict(),
           "interval": list(interval), "delta": delta}
    failures = []
    if isinstance(cfg.field, Constant):
        oracle = tensor_pencil_eigenvalues(cfg.field.values, cfg.grid.cells, np.subtract(cfg.domain.hi, cfg.domain.lo))
        mism = _oracle_mismatch(report.eigenvalues, oracle)
        doc["oracle_mismatch"] = mism
        if mism > cfg.get("oracle", "tol", 1e-10):
            failures.append(f"pencil spectrum disagrees with the oracle ({mism:.3e})")
    compare = cfg.get("fill", "compare_cells")
    if compare is not None:
        coarse = build_grid(cfg.domain, compare)
        rep_c = run_spectrum(coarse, cfg.field, quadrature=cfg.solver.quadrature)
        fill_c = interval_fill_check(rep_c.eigenvalues, interval, delta)
        doc["compare"] = {"cells": list(compare), "fill": fill_c.to_dict()}
        if not fill.worst_gap < fill_c.worst_gap:
            failures.append(f"worst_gap {fill.worst_gap:.6g} not below coarse-grid {fill_c.worst_gap:.6g}")
    write_json(out / "fill_report.json", doc)
    header, rows = _spectrum_rows(report)
    write_csv(out / "eigenvalues.csv", header, rows)
    print(f"interval {list(interval)} delta {delta}: ok={fill.ok} worst_gap={fill.worst_gap:.6g}")
    if not fill.ok:
        failures.append(f"interval not filled: worst gap {fill.worst_gap:.6g} > delta {delta}")
    if not report.inclusion_ok:
        failures.append("eigenvalues fall outside the coefficient hull")
    if failures:
        raise PropertyFailed("; ".join(failures))
    return EXIT_OK


def cmd_oracle_check(cfg: ExperimentConfig, out: Path) -> int:
    values = _constant_values(cfg)
    tol = cfg.get("oracle", "tol", 1e-10)
    A = assemble_stiffness(cfg.grid, cfg.field, cfg.solver.quadrature)
    L = assemble_laplacian(cfg.grid, cfg.solver.quadrature)
    if cfg.get("oracle", "corrupt", False):
        # test hook: a symmetric perturbation the oracle must catch
        vals = A.values.copy()
        diag = np.flatnonzero(A.row_indices == A.col_idx)[0]
        vals[diag] *= 1.001
        A = SparseMatrix(A.n, A.row_ptr, A.col_idx, vals)
    res = dense_generalized_eig(A, L, dense_cap=cfg.solver.dense_cap)
    oracle = tensor_pencil_eigenvalues(values, cfg.grid.cells, np.subtract(cfg.domain.hi, cfg.domain.lo))
    mism = _oracle_mismatch(res.eigenvalues, oracle)
    doc = {**_header(cfg, "oracle-check"), "grid": cfg.grid.describe(), "field": cfg.field.describe(),
           "max_relative_mismatch": mism, "tol": tol, "eigenvalues": [float(v) for v in res.eigenvalues],
           "oracle": [float(v) for v in oracle], "timings": res.timings}
    write_json(out / "oracle.json", doc)
    print(f"max relative mismatch {mism:.3e} (tol {tol:g})")
    if not mism <= tol:
        raise PropertyFailed(f"dense spectrum disagrees with the oracle: {mism:.3e} > {tol:g}")
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "vr-study": cmd_vr_study,
    "box-mode": cmd_box_mode,
    "fill-check": cmd_fill_check,
    "oracle-check": cmd_oracle_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genspec", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--out", default=None, help="output directory (default: output.dir or ./out)")
        p.add_argument("--seed", type=int, default=None, help="override solver.seed")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        cfg = load_config(args.config, seed=args.seed)
        out = Path(args.out or cfg.get("output", "dir", "out"))
        log.info("%s config_hash=%s seed=%d tol_incl=%g cg_tol=1e-10 lobpcg_tol=%g",
                 args.command, cfg.config_hash, cfg.solver.seed,
                 cfg.get("analysis", "tol_incl", TOL_INCL), cfg.solver.tol)
        return COMMANDS[args.command](cfg, out)
    except (ConfigError, ProbeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EigenSolverError, CGNotConverged, NotPositiveDefiniteError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except PropertyFailed as exc:
        print(f"property failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT


if __name__ == "__main__":
    sys.exit(main())
