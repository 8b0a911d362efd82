import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genspec.coefficients import AxisAffine, Constant, PiecewiseConstant, SmoothRadial, estimate_hull
from genspec.mesh import BoxDomain, build_grid

CUBE = BoxDomain.unit(3)


def test_eval_examples():
    assert np.array_equal(Constant(CUBE, (1, 2, 3))([0.3, 0.1, 0.9]), [1, 2, 3])
    aff = AxisAffine(CUBE, (1, 1, 1), (1, 1, 1), (0,))
    assert np.allclose(aff([0.5, 0.0, 0.0]), [1.5, 1.5, 1.5])
    pw = PiecewiseConstant(CUBE, (1, 1, 1), [{"lo": (0.25,) * 3, "hi": (0.75,) * 3, "values": (4, 4, 4)}])
    assert np.array_equal(pw([0.5, 0.5, 0.5]), [4, 4, 4])
    assert np.array_equal(pw([0.1, 0.5, 0.5]), [1, 1, 1])


def test_vectorised_eval_matches_pointwise(presets):
    pts = np.random.default_rng(0).random((50, 3))
    for f in presets.values():
        batch = f(pts)
        assert np.array_equal(batch, np.array([f(p) for p in pts]))


def test_piecewise_face_takes_box_value_first_box_wins():
    pw = PiecewiseConstant(
        CUBE,
        (1, 1, 1),
        [
            {"lo": (0.0, 0.0, 0.0), "hi": (0.5, 1.0, 1.0), "values": (2, 2, 2)},
            {"lo": (0.5, 0.0, 0.0), "hi": (1.0, 1.0, 1.0), "values": (3, 3, 3)},
        ],
    )
    assert np.array_equal(pw([0.5, 0.2, 0.2]), [2, 2, 2])


def test_point_outside_domain_rejected():
    with pytest.raises(ValueError, match="outside"):
        Constant(CUBE, (1, 1, 1))([1.5, 0.5, 0.5])


def test_ellipticity_checked_at_construction():
    with pytest.raises(ValueError, match="elliptic"):
        AxisAffine(CUBE, (0.5, 1, 1), (-1.0, 0, 0), (0,))
    with pytest.raises(ValueError, match="elliptic"):
        Constant(CUBE, (1, 0, 1))


def test_hull_examples():
    g = build_grid(CUBE, (4, 4, 4))
    h = estimate_hull(Constant(CUBE, (1, 2, 3)), g)
    assert (h.lo, h.hi) == (1.0, 3.0)
    h = estimate_hull(AxisAffine(CUBE, (1, 1, 1), (1, 1, 1), (0,)), g)
    assert (h.lo, h.hi) == (1.0, 2.0)
    pw = PiecewiseConstant(CUBE, (1, 1, 1), [{"lo": (0.25,) * 3, "hi": (0.75,) * 3, "values": (4, 4, 4)}])
    h = estimate_hull(pw, g)
    assert (h.lo, h.hi) == (1.0, 4.0)


def test_piecewise_hull_exact_for_box_missed_by_lattice():
    # a thin box lying strictly between lattice points is still seen
    pw = PiecewiseConstant(CUBE, (1, 1, 1), [{"lo": (0.51, 0.51, 0.51), "hi": (0.52, 0.52, 0.52), "values": (9, 1, 1)}])
    h = estimate_hull(pw, build_grid(CUBE, (4, 4, 4)), oversample=1)
    assert h.hi == 9.0


def test_smooth_radial_peak_found():
    f = SmoothRadial(CUBE, (1, 1, 1), (2, 0, 0), (0.37, 0.41, 0.53), 0.1)
    h = estimate_hull(f, build_grid(CUBE, (3, 3, 3)), oversample=1)
    assert h.hi == pytest.approx(3.0, abs=1e-15)


@settings(max_examples=20, deadline=None)
@given(
    st.floats(0.1, 3.0), st.floats(-0.09, 3.0), st.integers(0, 2),
    st.integers(1, 4), st.integers(1, 4),
)
def test_hull_monotone_in_oversample_and_inside_truth(a, b, axis, m1, m2):
    f = AxisAffine(CUBE, (a, a + 1, a + 0.5), (b, -0.5 * b, 0.0), (axis,))
    g = build_grid(CUBE, (3, 3, 3))
    lo_m, hi_m = sorted((m1, m2))
    h1 = estimate_hull(f, g, lo_m)
    h2 = estimate_hull(f, g, hi_m)
    assert h2.lo <= h1.lo and h2.hi >= h1.hi
    # true hull from the corners (affine extremes)
    corners = np.array(np.meshgrid(*[[0, 1]] * 3, indexing="ij")).reshape(3, -1).T
    vals = f(corners)
    assert vals.min() <= h1.lo and h1.hi <= vals.max()


def test_scaled_field_doubles_values(presets):
    pts = np.random.default_rng(1).random((20, 3))
    for f in presets.values():
        assert np.array_equal(f.scaled(2.0)(pts), 2.0 * f(pts))
