from pathlib import Path

import pytest

from genspec.assembly import assemble_laplacian, assemble_stiffness
from genspec.coefficients import AxisAffine, Constant, PiecewiseConstant, SmoothRadial
from genspec.mesh import BoxDomain, build_grid

CUBE = BoxDomain.unit(3)
CONFIGS_DIR = Path(__file__).resolve().parents[1] / "configs"

_criteria = []


def preset_fields(domain=CUBE):
    """The five built-in field presets used across the suite."""
    return {
        "isotropic": Constant(domain, (1.7, 1.7, 1.7)),
        "constant_123": Constant(domain, (1.0, 2.0, 3.0)),
        "axis_affine": AxisAffine(domain, (1.0, 1.0, 1.0), (1.0, 1.0, 1.0), (0,)),
        "piecewise": PiecewiseConstant(
            domain, (1.0, 1.0, 1.0), [{"lo": (0.25,) * 3, "hi": (0.75,) * 3, "values": (4.0, 4.0, 4.0)}]
        ),
        "smooth_radial": SmoothRadial(domain, (1.0, 1.5, 2.0), (0.5, 0.5, 0.5), (0.6, 0.45, 0.55), 0.4),
    }


@pytest.fixture(scope="session")
def cube():
    return CUBE


@pytest.fixture(scope="session")
def presets():
    return preset_fields()


@pytest.fixture(scope="session")
def pencil_123():
    g = build_grid(CUBE, (8, 8, 8))
    return g, assemble_stiffness(g, Constant(CUBE, (1.0, 2.0, 3.0))), assemble_laplacian(g)


@pytest.fixture
def criterion():
    """Record an acceptance criterion outcome; printed in the terminal summary."""

    def record(name, ok, detail=""):
        _criteria.append((name, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _criteria:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
