import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genspec.mesh import BoxDomain, build_grid, node_coords


def test_interior_counts():
    assert build_grid(BoxDomain.unit(3), (2, 2, 2)).interior_dofs == 1
    assert build_grid(BoxDomain.unit(3), (4, 4, 4)).interior_dofs == 27
    g = build_grid(BoxDomain.unit(1), (8,))
    assert g.interior_dofs == 7
    assert g.spacing == (0.125,)


def test_node_coords_examples():
    assert np.allclose(node_coords(build_grid(BoxDomain.unit(3), (2, 2, 2)), 0), [0.5, 0.5, 0.5])
    assert np.allclose(node_coords(build_grid(BoxDomain.unit(1), (4,)), 0), [0.25])
    assert np.allclose(node_coords(build_grid(BoxDomain.unit(2), (3, 3)), 1), [2 / 3, 1 / 3])
    assert np.allclose(node_coords(build_grid(BoxDomain.unit(2), (3, 3)), 3), [2 / 3, 2 / 3])


def test_lattice_formula_is_exact():
    dom = BoxDomain((-1.0, 0.5), (2.0, 1.75))
    g = build_grid(dom, (6, 5))
    pts = g.interior_points()
    m = g.dof_multi_index(np.arange(g.interior_dofs))
    expect = np.asarray(dom.lo) + m * np.asarray(g.spacing)
    assert np.array_equal(pts, expect)
    assert g.total_nodes == 7 * 6


@pytest.mark.parametrize("cells", [(1,), (2, 1), (0, 4, 4)])
def test_reject_too_few_cells(cells):
    with pytest.raises(ValueError, match="cells"):
        build_grid(BoxDomain.unit(len(cells)), cells)


def test_reject_bad_domains():
    with pytest.raises(ValueError, match="dimension"):
        BoxDomain((0,) * 4, (1,) * 4)
    with pytest.raises(ValueError, match="lo < hi"):
        BoxDomain((0.0, 1.0), (1.0, 1.0))


def test_out_of_range_dof():
    g = build_grid(BoxDomain.unit(2), (3, 3))
    with pytest.raises(IndexError):
        g.node_coords(4)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(2, 6), min_size=1, max_size=3))
def test_round_trip_injective(cells):
    g = build_grid(BoxDomain.unit(len(cells)), cells)
    pts = g.interior_points()
    assert len({tuple(p) for p in pts}) == g.interior_dofs
    # every coordinate strictly inside the box
    assert np.all((pts > 0) & (pts < 1))


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(2, 5), min_size=1, max_size=3))
def test_refinement_nesting(cells):
    g = build_grid(BoxDomain.unit(len(cells)), cells)
    fine = g.refined(2)
    fine_nodes = {tuple(np.round(p, 12)) for p in fine.all_node_points()}
    assert all(tuple(np.round(p, 12)) in fine_nodes for p in g.all_node_points())
