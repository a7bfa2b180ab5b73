import numpy as np
import pytest
from hypothesis import given, strategies as st

from mhdpim.mesh import build_rect_mesh


def test_single_cell_counts():
    m = build_rect_mesh((0, 1, 0, 1), 1, 1)
    assert (m.n_vertices, m.n_triangles, len(m.boundary_edges)) == (4, 2, 4)


def test_two_by_two_counts():
    m = build_rect_mesh((0, 1, 0, 1), 2, 2)
    assert (m.n_vertices, m.n_triangles, len(m.boundary_edges)) == (9, 8, 8)


def test_channel_area_and_orientation():
    m = build_rect_mesh((0.0, 6.0, -1.0, 1.0), 48, 16)
    assert m.area == pytest.approx(12.0, rel=1e-14)
    assert np.all(m.signed_areas() > 0)
    m.check()


def test_diagonal_runs_lower_left_to_upper_right():
    m = build_rect_mesh((0, 1, 0, 1), 1, 1)
    shared = set(m.triangles[0]) & set(m.triangles[1])
    assert shared == {0, 3}


@given(st.integers(1, 12), st.integers(1, 12))
def test_euler_characteristic(nx, ny):
    m = build_rect_mesh((0, 2, 0, 1), nx, ny)
    edges, _ = m.edges()
    # V - E + F = 1 for a triangulated disc
    assert m.n_vertices - len(edges) + m.n_triangles == 1
    assert len(m.boundary_edges) == 2 * (nx + ny)


@pytest.mark.parametrize("bad", [(0, 1), (1, 0), (2.5, 1), (-1, 3)])
def test_invalid_counts(bad):
    with pytest.raises(ValueError):
        build_rect_mesh((0, 1, 0, 1), *bad)


def test_degenerate_box():
    with pytest.raises(ValueError):
        build_rect_mesh((0, 0, 0, 1), 2, 2)


def test_dump_roundtrip(tmp_path):
    m = build_rect_mesh((0, 1, 0, 1), 2, 3)
    m.dump(tmp_path / "mesh")
    assert any(tmp_path.iterdir())
