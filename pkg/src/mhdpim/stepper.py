"""Partitioned implicit midpoint (PIM) time step.

A midpoint step of length tau is computed as a backward Euler solve over
[t, t + tau/2] followed by the extrapolation z_new = 2 z_half - z_old. The
half-step solve is a Picard iteration in which each sweep solves two
independent Oseen problems: the z+ system is convected by the previous
sweep's z-, and vice versa, with the cross-diffusion nu_minus lap z(-/+)
lagged onto the right-hand side.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidArgument, NonconvergenceError
from .forms import OperatorCache, PhysicalParams, assemble_load
from .linsolve import build_oseen_system, solve_saddle
from .mesh import build_rect_mesh
from .problems import ProblemSpec, mesh_counts
from .spaces import SpacePair, build_spaces, interpolate

log = logging.getLogger(__name__)

ABS_FALLBACK = 1e-14


@dataclass
class ElsasserState:
    zp: np.ndarray
    zm: np.ndarray
    t: float
    zp_prev: np.ndarray | None = None
    zm_prev: np.ndarray | None = None
    tau_prev: float | None = None
    tau_prev2: float | None = None
    step_index: int = 0

    @property
    def has_history(self) -> bool:
        return self.zp_prev is not None and self.zm_prev is not None


@dataclass
class IterationReport:
    iterations: int = 0
    rel_changes: list = field(default_factory=list)          # (rel+, rel-) per sweep
    contraction_ratios: list = field(default_factory=list)   # H1 successive-difference ratios
    converged: bool = False
    tau_bound: float = math.nan
    tau_within_bound: bool = False

    @property
    def mean_ratio(self) -> float:
        """Geometric mean of the contraction ratios (NaN if none)."""
        r = [x for x in self.contraction_ratios if x > 0 and math.isfinite(x)]
        if not r:
            return math.nan
        return math.exp(sum(math.log(x) for x in r) / len(r))


@dataclass
class StepReport:
    step_index: int
    t: float
    tau: float
    iterations: int
    scheme: str = "pim"
    accepted: bool = True
    lte: float = math.nan
    R: float = math.nan
    iteration: IterationReport | None = None

    @property
    def tau_bound(self) -> float:
        return self.iteration.tau_bound if self.iteration else math.nan


class Discretization:
    """Mesh, Taylor-Hood spaces and the cached operators for one problem."""

    def __init__(self, problem: ProblemSpec, nx: int, ny: int | None = None, degree: int = 5):
        if ny is None:
            nx, ny = mesh_counts(problem, nx)
        self.problem = problem
        self.mesh = build_rect_mesh(problem.domain_box, nx, ny)
        self.space: SpacePair = build_spaces(self.mesh)
        self.ops = OperatorCache(self.space, degree)
        bn = self.space.boundary_nodes
        self._bx, self._by = self.space.nodes[bn, 0], self.space.nodes[bn, 1]

    @property
    def mass(self):
        return self.ops.mass

    @property
    def stiffness(self):
        return self.ops.stiffness

    def boundary_values(self, sign: int, t: float) -> np.ndarray:
        """Dirichlet data at the boundary velocity dofs (zero if not manufactured)."""
        ex = self.problem.exact(sign)
        if ex is None:
            return np.zeros(2 * len(self._bx))
        v = np.asarray(ex(self._bx, self._by, t), dtype=float)
        return np.concatenate([v[0], v[1]])

    def load(self, sign: int, t: float) -> np.ndarray:
        f = self.problem.forcing(sign)
        if f is None:
            return np.zeros(self.space.n_velocity_dofs)
        return assemble_load(self.space, f, t, self.ops.degree)

    def interpolate(self, sign: int, t: float) -> np.ndarray:
        return interpolate(self.space, self.problem.initial(sign), t)

    def initial_state(self, t0: float | None = None, tau_prev: float | None = None) -> ElsasserState:
        """State at ``t0``. For manufactured problems with ``tau_prev`` the
        exact solution at ``t0 - tau_prev`` is taken as the previous level."""
        t0 = self.problem.t0 if t0 is None else t0
        st = ElsasserState(self.interpolate(+1, t0), self.interpolate(-1, t0), t0)
        if tau_prev is not None and self.problem.manufactured:
            st.zp_prev = self.interpolate(+1, t0 - tau_prev)
            st.zm_prev = self.interpolate(-1, t0 - tau_prev)
            st.tau_prev = tau_prev
        return st

    def l2(self, v) -> float:
        return math.sqrt(max(float(v @ (self.ops.mass @ v)), 0.0))

    def h1(self, v) -> float:
        return math.sqrt(max(float(v @ (self.ops.mass @ v) + v @ (self.ops.stiffness @ v)), 0.0))

    def grad_norm(self, v) -> float:
        return math.sqrt(max(float(v @ (self.ops.stiffness @ v)), 0.0))


# -- small pure pieces ---------------------------------------------------------

def initial_guess(state: ElsasserState):
    """Picard start (3/2) z_n - (1/2) z_{n-1}, or z_n without history."""
    if not state.has_history:
        return state.zp.copy(), state.zm.copy()
    return 1.5 * state.zp - 0.5 * state.zp_prev, 1.5 * state.zm - 0.5 * state.zm_prev


def extrapolate(z_n, z_half):
    """z_{n+1} = 2 z_{n+1/2} - z_n."""
    z_n = np.asarray(z_n, dtype=float)
    z_half = np.asarray(z_half, dtype=float)
    if z_n.shape != z_half.shape:
        raise InvalidArgument("fields live in different spaces")
    return 2.0 * z_half - z_n


def lebesgue_delta(d: int) -> float:
    """Constant of the L4 interpolation inequality, (2(d-1)/d^{3/2})^{d/4}."""
    return (2.0 * (d - 1) / d ** 1.5) ** (d / 4.0)


def theoretical_tau_bound(params: PhysicalParams, gamma_n: float, d: int = 2) -> float:
    """Step size below which the Picard sweeps provably contract.

    ``gamma_n`` is max(|grad z+_{n+1/2}|, |grad z-_{n+1/2}|). Returns
    ``inf`` for ``gamma_n == 0`` and 0 when a viscosity vanishes.
    """
    if d not in (2, 3):
        raise InvalidArgument(f"dimension must be 2 or 3, got {d}")
    if gamma_n < 0:
        raise InvalidArgument("gamma_n must be non-negative")
    if gamma_n == 0:
        return math.inf
    nu, nm = params.nu, params.nu_m
    if nu <= 0 or nm <= 0:
        return 0.0
    q = 4.0 - d
    delta = lebesgue_delta(d)
    return (8.0 / q
            / (delta ** 2 * gamma_n) ** (4.0 / q)
            * (nu * nu - nu * nm + nm * nm) / (nu * nu + nm * nm)
            * (2.0 * nu * nm / (d * (nu + nm))) ** (d / q))


def theoretical_rate(params: PhysicalParams) -> float:
    """Contraction factor 1 - 2 nu nu_m / (nu^2 + nu nu_m + nu_m^2)."""
    nu, nm = params.nu, params.nu_m
    if nu <= 0 or nm <= 0:
        raise InvalidArgument("viscosities must be positive")
    return 1.0 - 2.0 * nu * nm / (nu * nu + nu * nm + nm * nm)


# -- the step ------------------------------------------------------------------

class PIMStepper:
    """Partitioned implicit midpoint scheme on a fixed discretization."""

    scheme = "pim"

    def __init__(self, disc: Discretization, tol: float = 1e-6, maxit: int = 50,
                 threads: int = 1):
        if not tol > 0:
            raise InvalidArgument("Picard tolerance must be positive")
        if maxit < 1:
            raise InvalidArgument("maxit must be at least 1")
        self.disc = disc
        self.tol = tol
        self.maxit = maxit
        self.threads = threads
        self._pool = ThreadPoolExecutor(2) if threads > 1 else None

    @property
    def problem(self) -> ProblemSpec:
        return self.disc.problem

    def _solve_pair(self, jobs):
        if self._pool is None:
            return [solve_saddle(build_oseen_system(*args, **kw)) for args, kw in jobs]
        futures = [self._pool.submit(lambda a=args, k=kw: solve_saddle(build_oseen_system(*a, **k)))
                   for args, kw in jobs]
        return [f.result() for f in futures]

    def be_half_step(self, state: ElsasserState, tau: float):
        """Backward Euler over [t, t + tau/2] by partitioned Picard sweeps.

        Returns ``(zp_half, zm_half, pp, pm, IterationReport)``. Dirichlet
        data of the half-step unknown is the mean of the boundary traces at
        t and t + tau, so the extrapolated field matches the trace at t + tau.
        """
        if not tau > 0:
            raise InvalidArgument(f"step must be positive, got {tau}")
        disc, prob = self.disc, self.problem
        ops, params, b0 = disc.ops, prob.params, prob.b0
        t_half = state.t + 0.5 * tau
        M, K = ops.mass, ops.stiffness
        nu_m = params.nu_minus

        base, bcs = {}, {}
        for sign, z_n in ((+1, state.zp), (-1, state.zm)):
            base[sign] = (2.0 / tau) * (M @ z_n) + disc.load(sign, t_half)
            bcs[sign] = 0.5 * (disc.boundary_values(sign, state.t)
                               + disc.boundary_values(sign, state.t + tau))

        zp_old, zm_old = initial_guess(state)
        rep = IterationReport()
        prev_diff = None
        pp = pm = None
        for k in range(1, self.maxit + 1):
            jobs = []
            for sign, other in ((+1, zm_old), (-1, zp_old)):
                rhs = base[sign] if nu_m == 0.0 else base[sign] - nu_m * (K @ other)
                jobs.append(((ops, params, tau, other, b0, sign, rhs),
                             {"bc_values": bcs[sign]}))
            (zp_new, pp), (zm_new, pm) = self._solve_pair(jobs)

            dp, dm = zp_new - zp_old, zm_new - zm_old
            rel = []
            for d, z in ((dp, zp_new), (dm, zm_new)):
                nz = disc.l2(z)
                rel.append(disc.l2(d) / nz if nz > ABS_FALLBACK else disc.l2(d))
            rep.rel_changes.append(tuple(rel))
            diff = math.hypot(disc.h1(dp), disc.h1(dm))
            if prev_diff is not None and prev_diff > 0:
                rep.contraction_ratios.append(diff / prev_diff)
            prev_diff = diff
            zp_old, zm_old = zp_new, zm_new
            rep.iterations = k
            if max(rel) <= self.tol:
                rep.converged = True
                break

        gamma = max(disc.grad_norm(zp_old), disc.grad_norm(zm_old))
        rep.tau_bound = theoretical_tau_bound(params, gamma, 2)
        rep.tau_within_bound = tau <= rep.tau_bound
        if not rep.converged:
            raise NonconvergenceError(
                f"Picard iteration did not converge in {self.maxit} sweeps at t={state.t:.6g}, "
                f"tau={tau:.3e}; last changes {rep.rel_changes[-1]}, "
                f"last ratios {rep.contraction_ratios[-3:]}", rep)
        return zp_old, zm_old, pp, pm, rep

    def step(self, state: ElsasserState, tau: float, tracker=None):
        """One PIM step; returns ``(new_state, StepReport, (zp_half, zm_half))``."""
        zp_h, zm_h, _, _, rep = self.be_half_step(state, tau)
        new = ElsasserState(
            zp=extrapolate(state.zp, zp_h), zm=extrapolate(state.zm, zm_h),
            t=state.t + tau,
            zp_prev=state.zp, zm_prev=state.zm,
            tau_prev=tau, tau_prev2=state.tau_prev,
            step_index=state.step_index + 1,
        )
        if tracker is not None:
            tracker.add_dissipation(zp_h, zm_h, tau)
        report = StepReport(new.step_index, new.t, tau, rep.iterations, self.scheme,
                            iteration=rep)
        log.debug("pim step %d t=%.6g tau=%.3e its=%d", new.step_index, new.t, tau,
                  rep.iterations)
        return new, report, (zp_h, zm_h)


def pim_step(stepper: PIMStepper, state: ElsasserState, tau: float):
    """Functional form of :meth:`PIMStepper.step` without diagnostics."""
    new, report, _ = stepper.step(state, tau)
    return new, report


def with_time(state: ElsasserState, t: float) -> ElsasserState:
    return replace(state, t=t)
