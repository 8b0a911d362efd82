"""v_r probes around the cube centre: norm, residual and bound versus r and grid.

    python scripts/vr_study.py --r 0.3 0.2 0.14 --cells 32 48 64 --out out/vr
"""
import argparse
import math
from pathlib import Path

from genspec.analysis import VR_COLUMNS, vr_convergence_study, vr_energy_closed_form
from genspec.coefficients import SmoothRadial
from genspec.constructions import ProbeError, _check_vr_geometry
from genspec.io import write_csv
from genspec.mesh import BoxDomain, build_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--r", type=float, nargs="+", default=[0.3, 0.2, 0.14])
    ap.add_argument("--cells", type=int, nargs="+", default=[32, 48, 64])
    ap.add_argument("--axis", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("out/vr"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    cube = BoxDomain.unit(3)
    field = SmoothRadial(cube, (1.0, 1.5, 2.0), (0.5, 0.5, 0.5), (0.6, 0.45, 0.55), 0.4)
    x0 = (0.5, 0.5, 0.5)
    rows = []
    for r in args.r:
        # skip grids too coarse for this radius instead of aborting the sweep
        cells = []
        for n in args.cells:
            try:
                _check_vr_geometry(build_grid(cube, (n,) * 3), x0, r, args.axis, 1.0)
                cells.append(n)
            except ProbeError as exc:
                print(f"skip r={r} cells={n}: {exc}")
        if cells:
            rows += vr_convergence_study(field, x0, args.axis, [r], cells)
    for row in rows:
        cont = math.sqrt(vr_energy_closed_form(row["r"]))
        print(f"r={row['r']:<5} cells={row['cells']:<3} l_norm={row['l_norm']:.4f} "
              f"(continuum {cont:.4f}, limit {math.sqrt(2 * math.pi):.4f})  "
              f"residual^2={row['residual'] ** 2:.4f}  bound={row['bound']:.4f}")
    write_csv(args.out / "vr_study.csv", VR_COLUMNS, [[row[c] for c in VR_COLUMNS] for row in rows])


if __name__ == "__main__":
    main()
