"""Variable-step machinery for the midpoint scheme.

The local truncation error of a PIM step is estimated by comparing it with
an explicit two-step AB2-like extrapolation built from the last three
accepted solutions. The estimate drives a clamped cube-root step controller
with accept/reject logic.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AdaptivityFailure, EstimatorSingular, InsufficientHistory, InvalidArgument
from .stepper import ElsasserState, PIMStepper, StepReport

log = logging.getLogger(__name__)

#: a midpoint step has leading error coefficient 1/24 (y''' tau^3 / 24)
MID_COEF = 1.0 / 24.0
NORM_FLOOR = 1e-14
R_FLOOR = 1e-14

STEP_COLUMNS = ("step", "t", "tau", "lte", "R", "accepted", "iterations")


@dataclass(frozen=True)
class StepHistory:
    """Last three accepted solutions, newest first: levels n, n-1, n-2."""

    zp: tuple
    zm: tuple
    t: tuple

    def __post_init__(self):
        if not (len(self.zp) == len(self.zm) == len(self.t) == 3):
            raise InsufficientHistory("three accepted levels are required")
        if not (self.t[0] > self.t[1] > self.t[2]):
            raise InvalidArgument(f"history times must increase: {self.t[::-1]}")

    @property
    def taus(self) -> tuple[float, float]:
        """(tau_{n-1}, tau_{n-2})."""
        return self.t[0] - self.t[1], self.t[1] - self.t[2]

    def push(self, zp, zm, t) -> "StepHistory":
        return StepHistory((zp,) + self.zp[:2], (zm,) + self.zm[:2], (t,) + self.t[:2])


@dataclass(frozen=True)
class ControllerConfig:
    tol: float = 1e-4
    kappa: float = 0.9
    tau_min: float = 1e-6
    tau_max: float = 1e-1
    max_rejects: int = 30
    grow: float = 1.5
    shrink: float = 0.2

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidArgument("tolerance must be positive")
        if not 0 < self.kappa <= 1:
            raise InvalidArgument("kappa must lie in (0, 1]")
        if not 0 < self.tau_min <= self.tau_max:
            raise InvalidArgument("need 0 < tau_min <= tau_max")
        if self.max_rejects < 0:
            raise InvalidArgument("max_rejects must be non-negative")


@dataclass(frozen=True)
class LTEEstimate:
    value: float
    R: float
    components: tuple[float, float]
    relative: tuple[bool, bool] = (True, True)


def ab2_predict_scalar(z_n, z_nm1, z_nm2, t_next, t_n, t_nm1, t_nm2):
    """AB2-like extrapolation of one field.

    The difference quotients over the two previous steps are the exact
    slopes at the step midpoints for quadratic-in-time data; their linear
    extrapolation is integrated from t_n to t_next.
    """
    tau1, tau2 = t_n - t_nm1, t_nm1 - t_nm2
    if not (tau1 > 0 and tau2 > 0 and t_next > t_n):
        raise InvalidArgument("times must be strictly increasing")
    th1 = 0.5 * (t_n + t_nm1)      # t_{n-1/2}
    th2 = 0.5 * (t_nm1 + t_nm2)    # t_{n-3/2}
    s1 = (np.asarray(z_n) - z_nm1) / tau1
    s2 = (np.asarray(z_nm1) - z_nm2) / tau2
    fac = (t_next - t_n) / (2.0 * (th1 - th2))
    return z_n + fac * ((t_next + t_n - 2.0 * th2) * s1 - (t_next + t_n - 2.0 * th1) * s2)


def ab2_predict(history: StepHistory, t_next: float):
    """Predicted (z+, z-) at ``t_next`` from an accepted three-level history."""
    if history is None:
        raise InsufficientHistory("no history")
    return tuple(ab2_predict_scalar(z[0], z[1], z[2], t_next, *history.t)
                 for z in (history.zp, history.zm))


def compute_R(rho_n: float, rho_nm1: float) -> float:
    """Error coefficient of the AB2-like predictor relative to the step.

    ``rho_n = tau_n / tau_{n-1}`` and ``rho_nm1 = tau_{n-1} / tau_{n-2}``.
    """
    if not (rho_n > 0 and rho_nm1 > 0):
        raise InvalidArgument("step ratios must be positive")
    a = 3.0 / rho_n * (1.0 + 1.0 / (2.0 * rho_nm1)) * (1.0 + 1.0 / (2.0 * rho_n))
    b = 3.0 / (2.0 * rho_n) * (1.0 + 1.0 / rho_n + 0.5 / (rho_nm1 * rho_n))
    return (2.0 + a + b) / 12.0


def estimator_prefactor(R: float) -> float:
    """(1/24) / |R - 1/24|."""
    gap = abs(R - MID_COEF)
    if gap <= R_FLOOR:
        raise EstimatorSingular(f"R={R!r} is too close to 1/24")
    return MID_COEF / gap


def estimate_lte(z_next, z_pred, R: float, mass) -> LTEEstimate:
    """Relative LTE estimate, the max over the two Elsasser fields.

    Norms are mass-weighted L2 norms. For a field whose norm is below
    ``NORM_FLOOR`` the absolute difference is used instead.
    """
    pre = estimator_prefactor(R)
    comps, rel = [], []
    for z, zp in zip(z_next, z_pred):
        d = np.asarray(z) - zp
        nd = math.sqrt(max(float(d @ (mass @ d)), 0.0))
        nz = math.sqrt(max(float(z @ (mass @ z)), 0.0))
        if nz > NORM_FLOOR:
            comps.append(pre * nd / nz)
            rel.append(True)
        else:
            comps.append(pre * nd)
            rel.append(False)
    return LTEEstimate(max(comps), R, (comps[0], comps[1]), (rel[0], rel[1]))


def control_factor(lte: float, cfg: ControllerConfig) -> float:
    if lte < 0 or math.isnan(lte):
        raise InvalidArgument(f"invalid error estimate {lte!r}")
    if lte == 0:
        return cfg.grow
    return min(cfg.grow, max(cfg.shrink, cfg.kappa * (cfg.tol / lte) ** (1.0 / 3.0)))


def control_step(tau_n: float, lte: float, cfg: ControllerConfig) -> float:
    """Next step size: clamped cube-root rule, then clamped to [tau_min, tau_max]."""
    if not tau_n > 0:
        raise InvalidArgument("step must be positive")
    tau = tau_n * control_factor(lte, cfg)
    return min(cfg.tau_max, max(cfg.tau_min, tau))


@dataclass
class AdaptiveResult:
    state: ElsasserState
    accepted: list = field(default_factory=list)   # StepReports of accepted steps
    log: list = field(default_factory=list)        # every attempt (dict rows)
    rejections: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.accepted])

    @property
    def taus(self) -> np.ndarray:
        return np.array([r.tau for r in self.accepted])

    def write_steps(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=STEP_COLUMNS, extrasaction="ignore")
            w.writeheader()
            w.writerows(self.log)


def _row(rep: StepReport, index: int) -> dict:
    return {"step": index, "t": repr(rep.t), "tau": repr(rep.tau), "lte": repr(rep.lte),
            "R": repr(rep.R), "accepted": int(rep.accepted), "iterations": rep.iterations}


def adaptive_loop(stepper: PIMStepper, state: ElsasserState, cfg: ControllerConfig,
                  t_end: float, tracker=None, n_bootstrap: int = 2,
                  tau0: float | None = None) -> AdaptiveResult:
    """Run the accept/reject adaptive PIM scheme from ``state`` to ``t_end``.

    ``n_bootstrap`` constant steps of ``tau_min`` build the three-level
    history first. Only accepted solutions enter the history. The last step
    is trimmed to land on ``t_end``. Rejection at ``tau_min``, or more than
    ``cfg.max_rejects`` consecutive rejections, raises
    :class:`AdaptivityFailure` carrying the last accepted state.
    """
    if not t_end > state.t:
        raise InvalidArgument("t_end must exceed the start time")
    if n_bootstrap < 2:
        raise InvalidArgument("at least two bootstrap steps are needed")
    t_eps = 1e-12 * max(1.0, abs(t_end))
    res = AdaptiveResult(state)
    mass = stepper.disc.mass

    def accept(new, rep, halves):
        if tracker is not None:
            tracker.add_dissipation(*halves, rep.tau)
            tracker.record(rep.step_index, new.t, new.zp, new.zm,
                           tau=rep.tau, iterations=rep.iterations)
        res.accepted.append(rep)
        res.log.append(_row(rep, rep.step_index))

    zs = [(state.zp, state.zm, state.t)]
    for _ in range(n_bootstrap):
        tau = min(cfg.tau_min, t_end - state.t)
        state, rep, halves = stepper.step(state, tau)
        accept(state, rep, halves)
        zs.insert(0, (state.zp, state.zm, state.t))
        if state.t >= t_end - t_eps:
            res.state = state
            return res
    hist = StepHistory(tuple(z[0] for z in zs[:3]), tuple(z[1] for z in zs[:3]),
                       tuple(z[2] for z in zs[:3]))

    tau = cfg.tau_min if tau0 is None else min(cfg.tau_max, max(cfg.tau_min, tau0))
    rejects = 0
    while state.t < t_end - t_eps:
        trimmed = state.t + tau >= t_end - t_eps
        tau_try = t_end - state.t if trimmed else tau
        new, rep, halves = stepper.step(state, tau_try)
        tau_nm1, tau_nm2 = hist.taus
        R = compute_R(tau_try / tau_nm1, tau_nm1 / tau_nm2)
        est = estimate_lte((new.zp, new.zm), ab2_predict(hist, new.t), R, mass)
        rep.lte, rep.R = est.value, R
        if est.value < cfg.tol:
            rep.accepted = True
            accept(new, rep, halves)
            hist = hist.push(new.zp, new.zm, new.t)
            state = new
            rejects = 0
            tau = control_step(tau_try, est.value, cfg)
            continue

        rep.accepted = False
        res.rejections += 1
        rejects += 1
        res.log.append(_row(rep, rep.step_index))
        log.info("reject t=%.8g tau=%.3e lte=%.3e", state.t, tau_try, est.value)
        if tau_try <= cfg.tau_min * (1.0 + 1e-12):
            res.state = state
            raise AdaptivityFailure(
                f"estimate {est.value:.3e} above tolerance {cfg.tol:.1e} at the minimum "
                f"step {cfg.tau_min:.1e} (t={state.t:.10g})", state)
        if rejects > cfg.max_rejects:
            res.state = state
            raise AdaptivityFailure(f"{rejects} consecutive rejections at t={state.t:.10g}",
                                    state)
        tau = control_step(tau_try, est.value, cfg)
    res.state = state
    return res
