import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genspec.analysis import vr_energy_closed_form
from genspec.assembly import assemble_laplacian, assemble_stiffness
from genspec.coefficients import AxisAffine, Constant, SmoothRadial
from genspec.constructions import (
    ProbeError,
    box_mode_metrics,
    build_box_mode,
    build_vr,
    collar_volume_bound,
    distance_to_disc,
    in_neighbourhood,
    pencil_residual_norm,
    sample_neighbourhood,
    vr_energy_quadrature,
    vr_metrics,
    vr_theoretical_bound,
    vr_value,
    write_probe_csv,
)
from genspec.mesh import BoxDomain, build_grid

CUBE = BoxDomain.unit(3)
X0 = np.array([0.5, 0.5, 0.5])


def test_distance_examples():
    r = 0.2
    assert distance_to_disc(X0 + [0.0, 0.1, -0.05], X0, r) == 0.0
    assert distance_to_disc(X0 + [0.03, 0.0, 0.0], X0, r) == pytest.approx(0.03)
    assert distance_to_disc(X0 + [0.0, r + 0.02, 0.0], X0, r) == pytest.approx(0.02)
    assert distance_to_disc(X0 + [0.03, 0.0, r + 0.04], X0, r) == pytest.approx(0.05)


def test_distance_axis_permutation():
    p = X0 + [0.1, 0.03, -0.2]
    q = X0 + [0.03, 0.1, -0.2]
    assert distance_to_disc(p, X0, 0.15, axis=1) == pytest.approx(distance_to_disc(q, X0, 0.15, axis=0))


def test_distance_is_3d_only():
    with pytest.raises(ProbeError):
        distance_to_disc([0.5, 0.5], [0.5, 0.5], 0.2)


def test_vr_value_examples():
    r = 0.25
    assert vr_value(X0, X0, r) == 1.0
    assert vr_value(X0 + [r**2 / 2, 0, 0], X0, r) == pytest.approx(0.5)
    assert vr_value(X0 + [0, 0, r + 1.5 * r**2], X0, r) == 0.0


def test_build_vr_nodes():
    g = build_grid(CUBE, (32, 32, 32))
    p = build_vr(g, X0, 0, 0.25)
    assert p.nodal.min() >= 0.0 and p.nodal.max() <= 1.0
    pts = g.interior_points()
    centre = np.argmin(np.linalg.norm(pts - X0, axis=1))
    assert p.nodal[centre] == 1.0
    outside = ~in_neighbourhood(pts, X0, 0.25)
    assert np.all(p.nodal[outside] == 0.0)


def test_build_vr_rejections():
    g = build_grid(CUBE, (16, 16, 16))
    with pytest.raises(ProbeError, match="inside"):
        build_vr(g, (0.1, 0.5, 0.5), 1, 0.3)
    with pytest.raises(ProbeError, match="resolvability"):
        build_vr(g, X0, 0, 0.2)
    with pytest.raises(ProbeError):
        build_vr(build_grid(BoxDomain.unit(2), (16, 16)), (0.5, 0.5), 0, 0.3)


def test_vr_residual_vanishes_for_isotropic_constant():
    g = build_grid(CUBE, (24, 24, 24))
    f = Constant(CUBE, (1.7, 1.7, 1.7))
    A, L = assemble_stiffness(g, f), assemble_laplacian(g)
    p = build_vr(g, X0, 0, 0.3, 1.7)
    m = vr_metrics(A, L, 1.7, p)
    assert m["residual_l_norm"] <= 1e-6 * m["l_norm"]


def test_pencil_residual_of_exact_eigenvector_is_small():
    from genspec.eig import dense_generalized_eig

    g = build_grid(CUBE, (6, 6, 6))
    A = assemble_stiffness(g, Constant(CUBE, (1.0, 2.0, 3.0)))
    L = assemble_laplacian(g)
    res = dense_generalized_eig(A, L, want_vectors=True)
    r, _ = pencil_residual_norm(A, L, res.eigenvalues[3], res.eigenvectors[:, 3])
    assert r <= 1e-9


def test_bound_constant_field_is_zero():
    f = Constant(CUBE, (2.0, 2.0, 2.0))
    assert vr_theoretical_bound(f, X0, 0, 0.2) == 0.0


@pytest.mark.parametrize("r", [0.3, 0.2, 0.14])
def test_bound_closed_form_affine(r):
    # kappa = diag(1 + x_1, 1, 1); at the centre kappa_1(x0) = 1.5
    f = AxisAffine(CUBE, (1.0, 1.0, 1.0), (1.0, 0.0, 0.0), (0, 0, 0))
    collar = 2 * math.pi * r * (2 + r)
    # sampled sup of |x_1 - x_1^0| over R_r is the axial extent r^2
    pts = sample_neighbourhood(X0, r, 0)
    assert np.abs(pts[:, 0] - 0.5).max() == pytest.approx(r**2, rel=1e-12)
    # the other two components are identically 1
    expected = (2 * math.pi + collar) * r**4 + collar * 2 * (1.5 - 1.0) ** 2
    assert vr_theoretical_bound(f, X0, 0, r) == pytest.approx(expected, rel=1e-12)


def test_bound_decreases_with_r_for_smooth_field():
    f = SmoothRadial(CUBE, (1.0, 1.5, 2.0), (0.5, 0.5, 0.5), (0.6, 0.45, 0.55), 0.4)
    b = [vr_theoretical_bound(f, X0, 0, r) for r in (0.3, 0.2, 0.14, 0.1, 0.07)]
    assert all(y < x for x, y in zip(b, b[1:]))


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 0.4), st.integers(0, 2))
def test_energy_quadrature_on_cylinder_is_2pi(r, axis):
    e = vr_energy_quadrature(r, axis=axis, region="cylinder", resolution=32)
    assert e == pytest.approx(2 * math.pi, rel=1e-2)


def test_neighbourhood_energy_matches_closed_form():
    for r in (0.3, 0.2, 0.1):
        e = vr_energy_quadrature(r, region="neighbourhood", resolution=64)
        assert e == pytest.approx(vr_energy_closed_form(r), rel=5e-3)


def test_collar_bound_formula():
    assert collar_volume_bound(0.5) == pytest.approx(2 * math.pi * 0.5**5 * 2.5)


def test_probe_csv(tmp_path):
    g = build_grid(CUBE, (16, 16, 16))
    p = build_vr(g, X0, 2, 0.3)
    path = tmp_path / "vr.csv"
    write_probe_csv(g, p.nodal, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,z,value" and len(lines) == g.interior_dofs + 1


# ------------------------------------------------------------------ box modes

BOX = dict(x0=(0.25, 0.25, 0.25), k1=1.0, k2=2.0, lam=1.5, h=0.5)


def test_box_mode_examples():
    g = build_grid(CUBE, (16, 16, 16))
    p = build_box_mode(g, **BOX)
    lo, hi = p.box
    pts = g.interior_points()
    inside = np.all((pts > lo) & (pts < hi), axis=1)
    assert np.all(p.nodal[~inside] == 0.0)
    # centre of the (x1, x2) cross-section
    from genspec.constructions import box_mode_value

    c = 0.5 * (lo + hi)
    assert box_mode_value(c, **BOX, n=1) == pytest.approx(1.0)
    face = c.copy()
    face[0] = hi[0] - 1e-15
    assert abs(box_mode_value(face, **BOX, n=1)) < 1e-12


@pytest.mark.parametrize(
    "kw, msg",
    [
        (dict(lam=2.5), "strictly between"),
        (dict(lam=1.0), "strictly between"),
        (dict(x0=(0.8, 0.8, 0.8)), "inside"),
        (dict(lam=1.0 + 1e-4), "cells"),
    ],
)
def test_box_mode_rejections(kw, msg):
    g = build_grid(CUBE, (16, 16, 16))
    with pytest.raises(ProbeError, match=msg):
        build_box_mode(g, **{**BOX, **kw})


def test_box_mode_rayleigh_is_lambda_when_edges_balance():
    g = build_grid(CUBE, (16, 16, 16))
    f = Constant(CUBE, (1.0, 2.0, 1.5))
    A, L = assemble_stiffness(g, f), assemble_laplacian(g)
    m = box_mode_metrics(A, L, 1.5, build_box_mode(g, **BOX))
    assert m["rayleigh"] == pytest.approx(1.5, abs=1e-12)
    assert m["residual_l_norm"] > 0


def test_box_mode_residual_limit_is_nonzero():
    # characterisation of the measured behaviour: the zero-extended mode has a
    # normal flux on the x1 / x2 faces of S_h, so the residual does not vanish
    f = Constant(CUBE, (1.0, 2.0, 1.5))
    res = []
    for n in (8, 16, 32):
        g = build_grid(CUBE, (n, n, n))
        m = box_mode_metrics(assemble_stiffness(g, f), assemble_laplacian(g), 1.5, build_box_mode(g, **BOX))
        res.append(m["residual_l_norm"])
    assert np.allclose(res, [0.357, 0.443, 0.490], atol=5e-3)
