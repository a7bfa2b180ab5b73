import numpy as np
import pytest
from hypothesis import given, strategies as st

from mhdpim.errors import EvaluationFailure, InvalidArgument
from mhdpim.mesh import build_rect_mesh
from mhdpim.spaces import (build_spaces, evaluate_at_quadrature, interpolate, p2_ref_gradients,
                           p2_values)
from mhdpim.quadrature import strang_fix_7


def test_counts_single_cell():
    s = build_spaces(build_rect_mesh((0, 1, 0, 1), 1, 1))
    assert (s.n_p2, s.n_velocity_dofs, s.n_p1) == (9, 18, 4)


def test_counts_two_by_two():
    s = build_spaces(build_rect_mesh((0, 1, 0, 1), 2, 2))
    assert (s.n_p2, s.n_velocity_dofs) == (25, 50)
    # every node on the outer ring of the 5 x 5 node lattice is a boundary node
    assert len(s.boundary_nodes) == 16


def test_partition_of_unity():
    bary = strang_fix_7().points
    assert np.allclose(p2_values(bary).sum(axis=-1), 1.0)
    assert np.allclose(p2_ref_gradients(bary).sum(axis=-2), 0.0, atol=1e-13)


def test_nodal_basis():
    nodes = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1],
                      [0.5, 0.5, 0], [0, 0.5, 0.5], [0.5, 0, 0.5]])
    assert np.allclose(p2_values(nodes), np.eye(6), atol=1e-14)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2),
       st.floats(-2, 2), st.floats(-2, 2))
def test_quadratics_reproduced(a, b, c, d, e, f):
    s = build_spaces(build_rect_mesh((0, 1, 0, 1), 3, 2))

    def q(x, y, t):
        v = a + b * x + c * y + d * x * x + e * x * y + f * y * y
        return np.stack([v, -v])

    vals, grads = evaluate_at_quadrature(s, interpolate(s, q))
    ed = s.element_data()
    ex = q(ed.xq, ed.yq, 0)
    assert np.allclose(vals, ex, atol=1e-12)
    gx = b + 2 * d * ed.xq + e * ed.yq
    gy = c + e * ed.xq + 2 * f * ed.yq
    assert np.allclose(grads[0, ..., 0], gx, atol=1e-11)
    assert np.allclose(grads[1, ..., 1], -gy, atol=1e-11)


def test_interpolation_rate():
    # L2 interpolation error of a smooth field converges at order 3 for P2
    errs = []
    for n in (4, 8, 16):
        s = build_spaces(build_rect_mesh((0, 1, 0, 1), n, n))

        def f(x, y, t):
            return np.stack([np.sin(3 * x) * np.cos(2 * y), np.exp(x * y)])

        vals, _ = evaluate_at_quadrature(s, interpolate(s, f))
        ed = s.element_data()
        errs.append(np.sqrt(np.sum(ed.wdet * np.sum((vals - f(ed.xq, ed.yq, 0)) ** 2, 0))))
    rates = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(rates >= 2.8)


def test_pressure_interpolation_and_errors(unit_space):
    p = interpolate(unit_space, lambda x, y, t: x + 2 * y, kind="pressure")
    v = unit_space.mesh.vertices
    assert np.allclose(p, v[:, 0] + 2 * v[:, 1])
    with pytest.raises(InvalidArgument):
        interpolate(unit_space, lambda x, y, t: x, kind="magnetic")
    with pytest.raises(EvaluationFailure):
        interpolate(unit_space, lambda x, y, t: np.stack([np.full_like(x, np.nan), y]))


def test_check_velocity_length(unit_space):
    with pytest.raises(InvalidArgument):
        unit_space.check_velocity(np.zeros(3))


def test_boundary_dofs_geometric(unit_space):
    xy = unit_space.nodes[unit_space.boundary_nodes]
    on = (np.isclose(xy[:, 0], 0) | np.isclose(xy[:, 0], 1)
          | np.isclose(xy[:, 1], 0) | np.isclose(xy[:, 1], 1))
    assert np.all(on)
    # 6 x 5 cells -> 13 x 11 node lattice, ring of 2 * (12 + 10) nodes
    assert len(unit_space.boundary_nodes) == 44
