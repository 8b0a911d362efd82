import json
import subprocess
import sys
from pathlib import Path

import pytest

from genspec.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

BASE = """\
domain.lo = [0.0, 0.0, 0.0]
domain.hi = [1.0, 1.0, 1.0]
grid.cells = [{n}, {n}, {n}]
field.kind = "constant"
field.values = [{values}]
"""


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run(cmd, cfg, out, *extra):
    return main([cmd, "--config", cfg, "--out", str(out), *extra])


def test_oracle_check_presets(tmp_path):
    assert run("oracle-check", str(CONFIGS / "oracle_constant_123.toml"), tmp_path) == 0
    doc = json.loads((tmp_path / "oracle.json").read_text())
    assert doc["max_relative_mismatch"] <= 1e-10
    cfg = write(tmp_path, BASE.format(n=6, values="2.0, 2.0, 2.0"))
    assert run("oracle-check", cfg, tmp_path / "iso") == 0
    assert json.loads((tmp_path / "iso" / "oracle.json").read_text())["max_relative_mismatch"] <= 1e-12


def test_oracle_corrupt_hook_exits_3(tmp_path):
    cfg = write(tmp_path, BASE.format(n=6, values="1.0, 2.0, 3.0") + "oracle.corrupt = true\n")
    assert run("oracle-check", cfg, tmp_path) == 3


def test_oracle_needs_constant_field(tmp_path):
    cfg = write(tmp_path, BASE.format(n=4, values="1, 1, 1").replace('"constant"', '"axis_affine"')
                + "field.slope = [1.0, 0.0, 0.0]\nfield.axis = [0]\n")
    assert run("oracle-check", cfg, tmp_path) == 1


@pytest.mark.parametrize("name", ["spectrum_isotropic", "spectrum_constant_123", "spectrum_piecewise", "spectrum_lobpcg"])
def test_spectrum_presets(tmp_path, name):
    assert run("spectrum", str(CONFIGS / f"{name}.toml"), tmp_path) == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["report"]["inclusion_ok"] is True
    header = (tmp_path / "eigenvalues.csv").read_text().splitlines()[0]
    assert header.startswith("index,eigenvalue")
    if name == "spectrum_isotropic":
        assert all(abs(v - 2.5) <= 1e-12 for v in doc["report"]["eigenvalues"])
    if name == "spectrum_constant_123":
        assert (tmp_path / "locality.csv").exists()


def test_negative_cells_names_key(tmp_path, capsys):
    cfg = write(tmp_path, BASE.format(n=-4, values="1, 2, 3"))
    assert run("spectrum", cfg, tmp_path) == 1
    assert "grid.cells" in capsys.readouterr().err


def test_unknown_key_rejected(tmp_path, capsys):
    cfg = write(tmp_path, BASE.format(n=4, values="1, 2, 3") + "solver.colour = 3\n")
    assert run("spectrum", cfg, tmp_path) == 1
    assert "solver.colour" in capsys.readouterr().err


def test_missing_file_and_bad_toml(tmp_path):
    assert run("spectrum", str(tmp_path / "nope.toml"), tmp_path) == 1
    assert run("spectrum", write(tmp_path, "grid.cells = [4,"), tmp_path) == 1


def test_solver_failure_exits_2(tmp_path):
    cfg = write(tmp_path, BASE.format(n=8, values="1, 2, 3") + "solver.dense_cap = 100\n")
    assert run("spectrum", cfg, tmp_path) == 2


def test_vr_study_constant(tmp_path):
    assert run("vr-study", str(CONFIGS / "vr_constant.toml"), tmp_path) == 0
    lines = (tmp_path / "vr_study.csv").read_text().splitlines()
    assert lines[0] == "r,cells,lambda,l_norm,residual,bound,cg_iterations"
    assert all(float(l.split(",")[4]) <= 1e-6 for l in lines[1:])


def test_vr_study_resolvability_exit_1(tmp_path, capsys):
    cfg = write(tmp_path, BASE.format(n=16, values="1, 1, 1") + "vr.x0 = [0.5, 0.5, 0.5]\nvr.r_list = [0.1]\n")
    assert run("vr-study", cfg, tmp_path) == 1
    assert "resolvability" in capsys.readouterr().err


@pytest.mark.slow
def test_vr_study_smooth_preset(tmp_path):
    assert run("vr-study", str(CONFIGS / "vr_smooth.toml"), tmp_path) == 0


BOX = BASE.format(n=8, values="1.0, 2.0, 1.5") + """\
box.x0 = [0.25, 0.25, 0.25]
box.k1 = 1.0
box.k2 = 2.0
box.lambda = {lam}
box.h = 0.5
box.ladder = [8, 16]
"""


def test_box_mode_runs(tmp_path):
    assert run("box-mode", write(tmp_path, BOX.format(lam=1.5)), tmp_path) == 0
    lines = (tmp_path / "box_mode.csv").read_text().splitlines()
    assert lines[0] == "cells,residual,rayleigh,rayleigh_error,l_norm,relative_residual"
    assert len(lines) == 3


def test_box_mode_lambda_outside_exit_1(tmp_path):
    assert run("box-mode", write(tmp_path, BOX.format(lam=2.5)), tmp_path) == 1


def test_box_mode_outside_subdomain_exit_1(tmp_path):
    text = BOX.format(lam=1.5).replace("box.x0 = [0.25, 0.25, 0.25]", "box.x0 = [0.8, 0.8, 0.8]")
    assert run("box-mode", write(tmp_path, text), tmp_path) == 1


def test_box_mode_residual_assertion_is_falsified(tmp_path):
    # the residual grows under refinement (see the acceptance suite), so the
    # asserted property is reported as failed rather than crashing
    text = BOX.format(lam=1.5) + "assert.residual_decreasing = true\n"
    assert run("box-mode", write(tmp_path, text), tmp_path) == 3


def test_fill_check_preset(tmp_path):
    assert run("fill-check", str(CONFIGS / "fill_constant_121.toml"), tmp_path) == 0
    doc = json.loads((tmp_path / "fill_report.json").read_text())
    assert doc["fill"]["ok"] and doc["oracle_mismatch"] <= 1e-10
    assert doc["fill"]["worst_gap"] < doc["compare"]["fill"]["worst_gap"]


def test_seed_override_and_logging(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "genspec", "spectrum", "--config", str(CONFIGS / "spectrum_lobpcg.toml"),
         "--out", str(tmp_path), "--seed", "7"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "config_hash=" in proc.stderr and "seed=7" in proc.stderr
    assert json.loads((tmp_path / "report.json").read_text())["seed"] == 7
