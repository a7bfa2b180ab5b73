import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mhdpim.diagnostics import (DiagnosticsTracker, convergence_rates, cross_helicity,
                                dissipation_increment, energy, error_norms, exact_invariants)
from mhdpim.forms import PhysicalParams
from mhdpim.problems import HartmannParams, hartmann
from mhdpim.spaces import interpolate
from mhdpim.stepper import Discretization


def _const(space, a, b):
    return np.concatenate([np.full(space.n_p2, a), np.full(space.n_p2, b)])


def test_energy_constant_fields(unit_space, unit_ops):
    zp, zm = _const(unit_space, 1.0, 0.0), _const(unit_space, 0.0, 2.0)
    e_els, e_prim = energy(zp, zm, unit_ops.mass)
    assert e_els == pytest.approx(0.5 * (1.0 + 4.0))
    # u = (1/2, 1), b = (1/2, -1): (|u|^2 + |b|^2) / 2 = 1.25
    assert e_prim == pytest.approx(1.25)
    # with B = b0 + b and b0 = (0, 1): |B|^2 = 1/4 + 0 -> (1.25 + 0.25) / 2
    _, e_b0 = energy(zp, zm, unit_ops.mass, (0.0, 1.0))
    assert e_b0 == pytest.approx(0.5 * (1.25 + 0.25))


def test_cross_helicity_constant_fields(unit_space, unit_ops):
    zp, zm = _const(unit_space, 1.0, 0.0), _const(unit_space, 0.0, 2.0)
    # u . b = 1/4 - 1, halved
    assert cross_helicity(zp, zm, (0, 0), unit_ops.mass) == pytest.approx(-0.375)
    assert cross_helicity(zp, zm, (2, 0), unit_ops.mass) == pytest.approx(-0.375 + 0.5)


def test_dissipation_reduces_to_nu_plus_form(unit_space, unit_ops, rng):
    zp = rng.standard_normal(unit_space.n_velocity_dofs)
    zm = rng.standard_normal(unit_space.n_velocity_dofs)
    K = unit_ops.stiffness
    for nu, nm in ((0.3, 0.1), (0.1, 0.3), (0.2, 0.2)):
        p = PhysicalParams(nu, nm)
        expected = 0.1 * (p.nu_plus * (zp @ K @ zp + zm @ K @ zm) + 2 * p.nu_minus * (zp @ K @ zm))
        assert dissipation_increment(zp, zm, 0.1, p, K) == pytest.approx(expected, rel=1e-12)
        assert dissipation_increment(zp, zm, 0.1, p, K) >= 0


def test_error_norms_zero_for_quadratics(unit_space):
    class Q:
        def __call__(self, x, y, t):
            return np.stack([x * y, t * x * x])

        def grad(self, x, y, t):
            return np.stack([np.stack([y, x]), np.stack([2 * t * x, 0 * x])])

    q = Q()
    v = interpolate(unit_space, q, 0.5)
    l2, h1 = error_norms(unit_space, v, q, 0.5)
    assert l2 < 1e-14 and h1 < 1e-13
    l2b, h1b = error_norms(unit_space, v, lambda x, y, t: np.stack([0 * x, 0 * x]), 0.5)
    assert l2b > 0 and math.isnan(h1b)


def test_convergence_rates_examples():
    assert convergence_rates([1.0, 0.25, 0.0625], [0.1, 0.05, 0.025]) == pytest.approx([2, 2])
    r = convergence_rates([1.0, 0.0, 0.1], [1, 0.5, 0.25])
    assert all(math.isnan(v) for v in r)
    with pytest.raises(ValueError):
        convergence_rates([1.0], [1.0])
    with pytest.raises(ValueError):
        convergence_rates([1.0, 0.5], [0.5, 1.0])


@given(st.floats(0.5, 4.0), st.floats(1e-6, 10.0))
def test_convergence_rates_recover_power_law(p, c):
    hs = [0.2, 0.1, 0.05]
    assert convergence_rates([c * h ** p for h in hs], hs) == pytest.approx([p, p], rel=1e-9)


def test_tracker_and_exact_invariants():
    prob = hartmann(HartmannParams(M=1), PhysicalParams(0.1, 0.1))
    d = Discretization(prob, 12)
    tr = DiagnosticsTracker(d.space, d.mass, d.stiffness, prob)
    st = d.initial_state(0.0)
    rec = tr.record(0, 0.0, st.zp, st.zm)
    ex = exact_invariants(d.space, prob, 0.0)
    assert rec.E_primitive == pytest.approx(ex["E_primitive"], rel=1e-3)
    assert rec.H_M == "n/a"
    assert tr.max_err[0] == rec.err_zp_L2 > 0
    row = rec.row()
    assert {"E_elsasser", "H_C", "D", "err_zm_H1"} <= set(row)
