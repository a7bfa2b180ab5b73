"""Constant-step IMEX BDF2-AB2 scheme used for comparison.

(3 z_{n+1} - 4 z_n + z_{n-1}) / (2 tau) -/+ (B0 . grad) z_{n+1}
    + (w . grad) z_{n+1} - nu_plus lap z_{n+1} - nu_minus lap w + grad p = f(t_{n+1})

with the extrapolated cross field w = 2 z(-/+)_n - z(-/+)_{n-1}: one linear
solve per field and step, no inner iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientHistory, InvalidArgument
from .linsolve import build_oseen_system, solve_saddle
from .stepper import Discretization, IterationReport, StepReport


@dataclass
class Bdf2State:
    zp: np.ndarray
    zm: np.ndarray
    zp_prev: np.ndarray
    zm_prev: np.ndarray
    t: float
    tau: float
    step_index: int = 0


class Bdf2Stepper:
    scheme = "bdf2ab2"

    def __init__(self, disc: Discretization, convection: str = "skew"):
        if convection not in ("skew", "convective"):
            raise InvalidArgument(f"unknown convection form {convection!r}")
        self.disc = disc
        self.convection = convection

    def start(self, tau: float, t0: float | None = None, pim=None) -> Bdf2State:
        """Two starting levels.

        Manufactured problems take the exact solution at t0 - tau and t0.
        Otherwise one step of the ``pim`` stepper from the initial data
        supplies the second level and the returned state sits at t0 + tau.
        """
        if not tau > 0:
            raise InvalidArgument("step must be positive")
        prob = self.disc.problem
        d = self.disc
        t0 = prob.t0 if t0 is None else t0
        if prob.manufactured:
            return Bdf2State(d.interpolate(+1, t0), d.interpolate(-1, t0),
                             d.interpolate(+1, t0 - tau), d.interpolate(-1, t0 - tau), t0, tau)
        if pim is None:
            raise InsufficientHistory("BDF2-AB2 needs a second starting level")
        s0 = d.initial_state(t0)
        s1, _, _ = pim.step(s0, tau)
        return Bdf2State(s1.zp, s1.zm, s0.zp, s0.zm, s1.t, tau, step_index=1)

    def step(self, state: Bdf2State, tracker=None):
        d = self.disc
        ops, prob, tau = d.ops, d.problem, state.tau
        params = prob.params
        t_new = state.t + tau
        M, K = ops.mass, ops.stiffness
        wind_for = {+1: 2.0 * state.zm - state.zm_prev, -1: 2.0 * state.zp - state.zp_prev}
        out = {}
        for sign, z_n, z_nm1 in ((+1, state.zp, state.zp_prev), (-1, state.zm, state.zm_prev)):
            w = wind_for[sign]
            rhs = M @ ((4.0 * z_n - z_nm1) / (2.0 * tau)) + d.load(sign, t_new)
            if params.nu_minus != 0.0:
                rhs = rhs - params.nu_minus * (K @ w)
            sys = build_oseen_system(ops, params, tau, w, prob.b0, sign, rhs,
                                     bc_values=d.boundary_values(sign, t_new),
                                     mass_coeff=1.5 / tau,
                                     skew=self.convection == "skew")
            out[sign], _ = solve_saddle(sys)
        new = Bdf2State(out[+1], out[-1], state.zp, state.zm, t_new, tau, state.step_index + 1)
        if tracker is not None:
            # dissipation proxy at the new level
            tracker.add_dissipation(new.zp, new.zm, tau)
        rep = StepReport(new.step_index, t_new, tau, 1, self.scheme,
                         iteration=IterationReport(iterations=1, converged=True))
        return new, rep


def bdf2ab2_step(stepper: Bdf2Stepper, state: Bdf2State):
    return stepper.step(state)
