import numpy as np
import pytest

from mhdpim.baseline import Bdf2Stepper, bdf2ab2_step
from mhdpim.errors import InsufficientHistory, InvalidArgument
from mhdpim.forms import PhysicalParams
from mhdpim.problems import decaying_vortices
from mhdpim.stepper import Discretization, PIMStepper

from test_stepper import _linear_in_time


def test_linear_in_time_exact():
    prob = _linear_in_time(PhysicalParams(0.2, 0.05))
    d = Discretization(prob, 3)
    stp = Bdf2Stepper(d)
    st = stp.start(0.1, 0.0)
    for _ in range(3):
        st, rep = bdf2ab2_step(stp, st)
        assert rep.iterations == 1 and rep.scheme == "bdf2ab2"
    assert np.allclose(st.zp, d.interpolate(1, st.t), atol=1e-10)
    assert np.allclose(st.zm, d.interpolate(-1, st.t), atol=1e-10)


def test_convective_form_option():
    prob = _linear_in_time(PhysicalParams(0.1, 0.1))
    d = Discretization(prob, 3)
    st, _ = Bdf2Stepper(d, convection="convective").step(Bdf2Stepper(d).start(0.1))
    assert np.allclose(st.zp, d.interpolate(1, st.t), atol=1e-10)
    with pytest.raises(InvalidArgument):
        Bdf2Stepper(d, convection="upwind")


def test_start_requires_history_for_free_runs():
    prob = decaying_vortices(PhysicalParams(0.01, 0.01))
    d = Discretization(prob, 3)
    with pytest.raises(InsufficientHistory):
        Bdf2Stepper(d).start(0.1)
    st = Bdf2Stepper(d).start(0.1, pim=PIMStepper(d))
    assert st.step_index == 1 and st.t == pytest.approx(0.1)
    with pytest.raises(InvalidArgument):
        Bdf2Stepper(d).start(0.0)
