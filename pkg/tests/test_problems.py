import numpy as np
import pytest
from hypothesis import given, strategies as st

from mhdpim.errors import EvaluationFailure, InvalidArgument
from mhdpim.forms import PhysicalParams
from mhdpim.problems import (HartmannParams, decaying_vortices, elsasser_from_primitive,
                             hartmann, hartmann_profiles, lindberg_G, lindberg_dG,
                             lindberg_hartmann, primitive_from_elsasser, travelling_wave)

# sixth-order central difference weights for first and second derivatives
D1 = np.array([-1, 9, -45, 0, 45, -9, 1]) / 60.0
D2 = np.array([2, -27, 270, -490, 270, -27, 2]) / 180.0
OFFS = np.arange(-3, 4)


def fd(f, x, y, t, var, h, order):
    w = D1 if order == 1 else D2
    acc = 0.0
    for o, c in zip(OFFS, w):
        if c == 0:
            continue
        args = [x, y, t]
        args[var] = args[var] + o * h
        acc = acc + c * np.asarray(f(*args), dtype=float)
    return acc / h ** order


def fd_residual(prob, sign, x, y, t, hs=1e-3, ht=1e-4):
    """Strong-form residual of one Elsasser equation from values only."""
    zs, zo, p = prob.exact(sign), prob.exact(-sign), prob.exact_p
    pr = prob.params
    gx = fd(zs.value, x, y, t, 0, hs, 1)
    gy = fd(zs.value, x, y, t, 1, hs, 1)
    lap_s = fd(zs.value, x, y, t, 0, hs, 2) + fd(zs.value, x, y, t, 1, hs, 2)
    lap_o = fd(zo.value, x, y, t, 0, hs, 2) + fd(zo.value, x, y, t, 1, hs, 2)
    w = zo.value(x, y, t)
    b0 = prob.b0
    r = (fd(zs.value, x, y, t, 2, ht, 1) - sign * (b0[0] * gx + b0[1] * gy)
         + w[0] * gx + w[1] * gy - pr.nu_plus * lap_s - pr.nu_minus * lap_o
         + np.stack([fd(p.value, x, y, t, 0, hs, 1), fd(p.value, x, y, t, 1, hs, 1)])
         - prob.forcing(sign)(x, y, t))
    return r, np.asarray(prob.forcing(sign)(x, y, t))


def _sample(box, n=25, seed=0):
    rng = np.random.default_rng(seed)
    x0, x1, y0, y1 = box
    return rng.uniform(x0, x1, n), rng.uniform(y0, y1, n)


PROBLEMS = {
    "wave_0_0": (lambda: travelling_wave(PhysicalParams(2.5e-4, 2.5e-4), (0, 0)), 0.37),
    "wave_1_1": (lambda: travelling_wave(PhysicalParams(2.5e-4, 2.5e-4), (1, 1)), 0.81),
    "wave_unequal": (lambda: travelling_wave(PhysicalParams(0.03, 0.01), (10, 10)), 0.5),
    "hartmann": (lambda: hartmann(HartmannParams(M=10), PhysicalParams(0.1, 0.1)), 0.3),
    "hartmann_unequal": (lambda: hartmann(HartmannParams(M=1), PhysicalParams(0.2, 0.05)), 0.3),
    "lindberg": (lambda: lindberg_hartmann(HartmannParams(M=100), PhysicalParams(0.1, 0.1)),
                 1.6031),
}


@pytest.mark.parametrize("name", list(PROBLEMS))
@pytest.mark.parametrize("sign", [1, -1])
def test_manufactured_residual(name, sign):
    make, t = PROBLEMS[name]
    prob = make()
    x, y = _sample(prob.domain_box)
    ht = 1e-4 if name != "lindberg" else 2e-6
    r, f = fd_residual(prob, sign, x, y, t, ht=ht)
    scale = max(1.0, np.abs(f).max())
    assert np.abs(r).max() <= 1e-6 * scale


@pytest.mark.parametrize("name", list(PROBLEMS))
def test_exact_fields_divergence_free_and_derivatives(name):
    make, t = PROBLEMS[name]
    prob = make()
    x, y = _sample(prob.domain_box, seed=1)
    for sign in (1, -1):
        z = prob.exact(sign)
        g = np.asarray(z.grad(x, y, t))
        scale = max(1.0, np.abs(g).max())
        assert np.abs(g[0, 0] + g[1, 1]).max() <= 1e-12 * scale
        assert np.allclose(g[:, 0], fd(z.value, x, y, t, 0, 1e-3, 1), atol=1e-8 * scale)
        assert np.allclose(g[:, 1], fd(z.value, x, y, t, 1, 1e-3, 1), atol=1e-8 * scale)
        lap = fd(z.value, x, y, t, 0, 1e-3, 2) + fd(z.value, x, y, t, 1, 1e-3, 2)
        assert np.allclose(z.lap(x, y, t), lap, atol=1e-6 * max(1.0, np.abs(lap).max()))


def test_wave_point_values():
    prob = travelling_wave(PhysicalParams(2.5e-4, 2.5e-4))
    assert np.allclose(prob.exact_zp(1.0, 1.0, 0.0), [1.15, 0.4])
    assert np.allclose(prob.exact_zm(1.0, 1.0, 0.0), [0.35, -0.4])


def test_hartmann_values():
    prof = hartmann_profiles(HartmannParams(), 0.1)
    u1, du1, _, b1, _, _ = prof(np.array([0.0, 1.0, -1.0]))
    # G / (nu Ha tanh Ha) (1 - 1 / cosh Ha) at the centreline
    assert u1[0] == pytest.approx(1.97323, abs=5e-6)
    assert np.allclose(u1[1:], 0.0, atol=1e-14)
    assert np.allclose(b1, 0.0, atol=1e-14)
    assert du1[0] == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(InvalidArgument):
        HartmannParams(Ha=0)


def test_hartmann_steady_and_forcing_nonzero():
    prob = hartmann(HartmannParams(M=10), PhysicalParams(0.1, 0.1))
    x, y = _sample(prob.domain_box)
    assert np.allclose(prob.exact_zp.dt(x, y, 0.3), 0.0)
    # the steady profile balances the Lorentz term only with a source
    assert np.abs(prob.forcing(1)(x, y, 0.0)).max() > 1e-3


def test_lindberg_G():
    assert lindberg_G(0.0) == pytest.approx(1.0)
    for t in (0.5, 1.59, 1.6, 1.603):
        h = 1e-7
        num = (lindberg_G(t + h) - lindberg_G(t - h)) / (2 * h)
        assert lindberg_dG(t) == pytest.approx(num, rel=1e-5)
    with pytest.raises(EvaluationFailure):
        lindberg_G(3.0)
    with pytest.raises(EvaluationFailure):
        lindberg_dG(3.0)


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=2),
       st.lists(st.floats(-5, 5), min_size=2, max_size=2))
def test_elsasser_roundtrip(u, b):
    zp, zm = elsasser_from_primitive(u, b)
    u2, b2 = primitive_from_elsasser(zp, zm)
    assert np.allclose(u2, u) and np.allclose(b2, b)


def test_vortices_not_manufactured():
    prob = decaying_vortices(PhysicalParams(0.01, 0.01))
    assert not prob.manufactured and not prob.has_forcing()
    x, y = np.array([0.0, 1.0, 0.3]), np.array([0.5, 0.2, 0.0])
    # vanishes on the boundary of the unit square
    assert np.allclose(prob.initial(1)(x, y, 0.0), 0.0, atol=1e-15)
