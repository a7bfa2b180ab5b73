import numpy as np
import pytest

from mhdpim.errors import InvalidArgument
from mhdpim.forms import (OperatorCache, PhysicalParams, assemble_convection, assemble_div,
                          assemble_load, assemble_mass, assemble_stiffness, pressure_mean_vector,
                          scalar_convection, scalar_mass)
from mhdpim.mesh import build_rect_mesh
from mhdpim.spaces import build_spaces, interpolate


def test_params():
    p = PhysicalParams(0.3, 0.1)
    assert p.nu_plus == pytest.approx(0.2)
    assert p.nu_minus == pytest.approx(0.1)
    assert p.nu_star == pytest.approx(0.1)
    with pytest.raises(InvalidArgument):
        PhysicalParams(0.0, 0.1)
    assert PhysicalParams(0.0, 0.0, ideal=True).nu_plus == 0.0
    with pytest.raises(InvalidArgument):
        PhysicalParams(-1.0, 0.0, ideal=True)


def test_mass_and_stiffness_values():
    s = build_spaces(build_rect_mesh((0, 1, 0, 1), 3, 4))
    M, K = assemble_mass(s), assemble_stiffness(s)
    one = np.ones(s.n_velocity_dofs)
    assert one @ M @ one == pytest.approx(2.0, rel=1e-14)   # two components, unit area
    assert np.abs(K @ one).max() < 1e-12
    ux = interpolate(s, lambda x, y, t: np.stack([x, 0 * x]))
    assert ux @ M @ ux == pytest.approx(1.0 / 3.0, rel=1e-13)
    uy = interpolate(s, lambda x, y, t: np.stack([y, 0 * y]))
    assert uy @ K @ uy == pytest.approx(1.0, rel=1e-13)


def test_symmetry(unit_ops):
    for A in (unit_ops.mass, unit_ops.stiffness):
        assert abs(A - A.T).max() <= 1e-14 * abs(A).max()


def test_convection_skew_random_pairs(unit_space, rng):
    worst = 0.0
    for _ in range(1000):
        w = rng.standard_normal(unit_space.n_velocity_dofs)
        x = rng.standard_normal(unit_space.n_p2)
        C = scalar_convection(unit_space, w)
        worst = max(worst, abs(x @ (C @ x)) / (x @ x))
        if _ > 20:
            break
    # a single random wind already gives a skew matrix; check many vectors too
    C = assemble_convection(unit_space, rng.standard_normal(unit_space.n_velocity_dofs))
    X = rng.standard_normal((unit_space.n_velocity_dofs, 1000))
    q = np.einsum("ij,ij->j", X, C @ X) / np.einsum("ij,ij->j", X, X)
    assert max(worst, np.abs(q).max()) <= 1e-12


def test_convection_matches_plain_form_for_divergence_free_wind(unit_space):
    # for div w = 0 and u, v vanishing on the boundary both forms agree
    def w(x, y, t):
        return np.stack([np.sin(np.pi * x) * np.cos(np.pi * y),
                         -np.cos(np.pi * x) * np.sin(np.pi * y)])

    wv = interpolate(unit_space, w)
    skew = scalar_convection(unit_space, wv, degree=9)
    plain = scalar_convection(unit_space, wv, degree=9, skew=False)
    u = np.zeros(unit_space.n_p2)
    v = np.zeros(unit_space.n_p2)
    inner = unit_space.interior_nodes
    rng = np.random.default_rng(3)
    u[inner] = rng.standard_normal(len(inner))
    v[inner] = rng.standard_normal(len(inner))
    # P2 interpolation of w is only discretely divergence free, so agreement is O(h^2)
    assert abs(v @ skew @ u - v @ plain @ u) < 0.05 * abs(v @ plain @ u) + 1e-3


def test_constant_wind_convection(unit_space):
    # (b . grad x, 1) over the unit square with b = (2, 0): integral of 2
    C = scalar_convection(unit_space, np.array([2.0, 0.0]), skew=False)
    x = unit_space.nodes[:, 0]
    assert np.ones(unit_space.n_p2) @ C @ x == pytest.approx(2.0, rel=1e-12)


def test_divergence_identities(unit_space):
    D = assemble_div(unit_space)
    assert D.shape == (unit_space.n_p1, unit_space.n_velocity_dofs)
    # div (x, -y) = 0 and div (x, y) = 2
    a = interpolate(unit_space, lambda x, y, t: np.stack([x, -y]))
    b = interpolate(unit_space, lambda x, y, t: np.stack([x, y]))
    assert np.abs(D @ a).max() < 1e-13
    ones = np.ones(unit_space.n_p1)
    assert ones @ D @ b == pytest.approx(2.0, rel=1e-13)
    assert pressure_mean_vector(unit_space).sum() == pytest.approx(1.0, rel=1e-13)


def test_quadrature_degree_agreement():
    s = build_spaces(build_rect_mesh((0, 1, 0, 1), 4, 4))
    rng = np.random.default_rng(1)
    w = rng.standard_normal(s.n_velocity_dofs)
    # the mass integrand is degree 4 and a P2 wind makes convection degree 5
    assert abs(scalar_mass(s, 5) - scalar_mass(s, 7)).max() < 1e-14
    assert abs(scalar_convection(s, w, 5) - scalar_convection(s, w, 7)).max() < 1e-13


def test_load_oracle():
    # (f, v) for constant f = (1, 0) gives the integrals of the basis functions
    s = build_spaces(build_rect_mesh((0, 2, 0, 1), 3, 2))
    F = assemble_load(s, lambda x, y, t: np.stack([1.0 + 0 * x, 0 * x]), 0.0)
    assert F[: s.n_p2].sum() == pytest.approx(2.0, rel=1e-13)
    assert np.abs(F[s.n_p2:]).max() == 0.0
    # f = (t x, 0) tested against the interpolant of 1 gives t * int x = 2 t
    G = assemble_load(s, lambda x, y, t: np.stack([t * x, 0 * x]), 0.5)
    assert G[: s.n_p2].sum() == pytest.approx(1.0, rel=1e-13)


def test_operator_cache_reuse(unit_space):
    ops = OperatorCache(unit_space)
    assert ops.constant_convection((1, 1)) is ops.constant_convection((1.0, 1.0))
