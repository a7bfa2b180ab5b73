"""Experiment drivers behind the command line.

Each ``run_*`` function takes a :class:`RunConfig`, writes its CSV files
(and figures, unless disabled) into ``cfg.out`` and returns the in-memory
results so tests can inspect them without re-reading files.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .adapt import ControllerConfig, STEP_COLUMNS, adaptive_loop
from .baseline import Bdf2Stepper
from .diagnostics import DiagnosticsTracker, convergence_rates, exact_invariants
from .errors import InvalidArgument, MHDError
from .forms import PhysicalParams
from .problems import (HartmannParams, ProblemSpec, decaying_vortices, hartmann,
                       lindberg_hartmann, travelling_wave)
from .stepper import Discretization, PIMStepper

log = logging.getLogger(__name__)

KINDS = ("converge", "conserve", "adapt", "compare")
SCHEMES = ("pim", "bdf2ab2")
PROBLEMS = ("wave", "hartmann", "lindberg", "vortices")

# wall-clock times are logged, not written, so reruns give identical files
TABLE_COLUMNS = ("h", "dt", "n_steps", "err_zp_L2", "rate_zp", "err_zm_L2", "rate_zm",
                 "avg_iters")
DIAG_COLUMNS = ("step", "t", "tau", "iterations", "E_elsasser", "E_primitive", "H_C", "D",
                "H_M", "E_exact", "E_err", "balance", "err_zp_L2", "err_zm_L2",
                "err_zp_H1", "err_zm_H1")

# per-problem defaults: viscosities, mean field and time window
_PROBLEM_DEFAULTS = {
    "wave": dict(nu=2.5e-4, nu_m=2.5e-4, b0=(1.0, 1.0), t0=0.0, t_end=1.0),
    "hartmann": dict(nu=0.1, nu_m=0.1, M=10.0, t0=0.0, t_end=1.0),
    "lindberg": dict(nu=0.1, nu_m=0.1, M=100.0, t0=1.59, t_end=1.604, omega=3.1),
    "vortices": dict(nu=1e-2, nu_m=1e-2, b0=(0.0, 0.0), t0=0.0, t_end=1.0),
}


@dataclass
class RunConfig:
    """One experiment. Unset (None) fields fall back to problem defaults."""

    kind: str = "converge"
    problem: str = "wave"
    scheme: str = "pim"
    schemes: tuple = SCHEMES
    nu: float | None = None
    nu_m: float | None = None
    ideal: bool = False
    b0: tuple | None = None
    M: float | None = None
    L: float = 6.0
    G: float = 1.0
    S: float = 1.0
    Ha: float = 5.0
    omega: float | None = None
    levels: tuple = (16, 32, 64)
    n: int = 16
    dt: float | None = None
    t0: float | None = None
    t_end: float | None = None
    picard_tol: float = 1e-6
    picard_maxit: int = 50
    quad_degree: int = 5
    bdf2_convection: str = "skew"
    adapt_tol: float = 1e-4
    kappa: float = 0.95
    tau_min: float = 1e-6
    tau_max: float = 1e-4
    max_rejects: int = 30
    compare_mode: str = "converge"
    run_name: str | None = None
    out: str = "."
    threads: int = 1
    plots: bool = True

    def __post_init__(self):
        d = _PROBLEM_DEFAULTS.get(self.problem)
        if d is None:
            raise InvalidArgument(f"unknown problem {self.problem!r}; choose from {PROBLEMS}")
        for key, val in d.items():
            if getattr(self, key) is None:
                setattr(self, key, val)
        if self.b0 is None:
            self.b0 = (0.0, self.M)
        self.b0 = tuple(float(v) for v in self.b0)
        self.levels = tuple(int(v) for v in self.levels)
        self.schemes = tuple(self.schemes)
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown experiment {self.kind!r}; choose from {KINDS}")
        for s in (self.scheme,) + self.schemes:
            if s not in SCHEMES:
                raise InvalidArgument(f"unknown scheme {s!r}; choose from {SCHEMES}")
        if self.kind in ("converge",) or (self.kind == "compare"
                                          and self.compare_mode == "converge"):
            if not self.levels or any(n < 1 for n in self.levels):
                raise InvalidArgument("levels must be a nonempty list of positive integers")
            if list(self.levels) != sorted(set(self.levels)):
                raise InvalidArgument("levels must be strictly increasing")
        if self.compare_mode not in ("converge", "conserve"):
            raise InvalidArgument("compare_mode must be 'converge' or 'conserve'")
        for name in ("picard_tol", "adapt_tol", "tau_min", "tau_max"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"{name} must be positive")
        if self.dt is not None and not self.dt > 0:
            raise InvalidArgument("dt must be positive")
        if not self.t_end > self.t0:
            raise InvalidArgument("t_end must exceed t0")
        if self.n < 1 or self.threads < 1:
            raise InvalidArgument("n and threads must be positive")
        if self.ideal and (self.nu != 0 or self.nu_m != 0):
            raise InvalidArgument("the ideal flag requires nu = nu_m = 0")
        if not self.ideal and (self.nu <= 0 or self.nu_m <= 0):
            raise InvalidArgument("viscosities must be positive (set ideal for nu = nu_m = 0)")

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise InvalidArgument(f"unknown configuration keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path, **overrides) -> "RunConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidArgument(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise InvalidArgument("config must be a JSON object")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(data)

    @property
    def params(self) -> PhysicalParams:
        return PhysicalParams(float(self.nu), float(self.nu_m), ideal=self.ideal)

    @property
    def b0_tag(self) -> str:
        return "_".join(f"{v:g}" for v in self.b0)

    def name(self, scheme: str, n: int) -> str:
        base = self.run_name or f"{self.problem}_{self.b0_tag}"
        return f"{base}_{scheme}_n{n}"


def make_problem(cfg: RunConfig) -> ProblemSpec:
    params = cfg.params
    if cfg.problem == "wave":
        return travelling_wave(params, cfg.b0)
    if cfg.problem == "vortices":
        return decaying_vortices(params, cfg.b0)
    hp = HartmannParams(L=cfg.L, G=cfg.G, S=cfg.S, Ha=cfg.Ha, M=cfg.b0[1])
    if cfg.b0[0] != 0.0:
        raise InvalidArgument("Hartmann problems need b0 = (0, M)")
    if cfg.problem == "hartmann":
        return hartmann(hp, params)
    return lindberg_hartmann(hp, params, omega=cfg.omega, t0=cfg.t0)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", restval="nan")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})
    return path


# -- a single constant-step run ------------------------------------------------

@dataclass
class RunResult:
    scheme: str
    n: int
    tau: float
    steps: int
    rows: list = field(default_factory=list)
    max_err: tuple = (math.nan, math.nan)
    avg_iters: float = math.nan
    seconds: float = 0.0
    state: object = None
    iteration_reports: list = field(default_factory=list)


def _diag_row(rec, e_exact, e0):
    row = rec.row()
    row["E_exact"] = e_exact
    row["E_err"] = abs(rec.E_primitive - e_exact) if math.isfinite(e_exact) else math.nan
    row["balance"] = (rec.E_elsasser + rec.D - e0) if e0 is not None else math.nan
    return row


def run_constant(cfg: RunConfig, scheme: str, n: int, tau: float | None = None,
                 n_steps: int | None = None, disc: Discretization | None = None,
                 record_every: int = 1, exact_energy: bool = True) -> RunResult:
    """Constant-step run of ``scheme`` on the ``n`` x ``n`` mesh.

    The step defaults to ``cfg.dt`` or ``1/n``; the number of steps to
    whatever reaches ``cfg.t_end``.
    """
    problem = disc.problem if disc is not None else make_problem(cfg)
    disc = disc or Discretization(problem, n, degree=cfg.quad_degree)
    span = cfg.t_end - cfg.t0
    if n_steps is None:
        tau = tau or cfg.dt or 1.0 / n
        n_steps = max(1, int(round(span / tau)))
        tau = span / n_steps
    elif tau is None:
        tau = span / n_steps
    tracker = DiagnosticsTracker(disc.space, disc.mass, disc.stiffness, problem)
    manufactured = problem.manufactured and exact_energy
    e0 = None

    def exact_e(t):
        return exact_invariants(disc.space, problem, t)["E_primitive"] if manufactured \
            else math.nan

    t_start = time.perf_counter()
    res = RunResult(scheme, n, tau, n_steps)
    if scheme == "pim":
        stepper = PIMStepper(disc, tol=cfg.picard_tol, maxit=cfg.picard_maxit,
                             threads=cfg.threads)
        state = disc.initial_state(cfg.t0, tau)
    else:
        stepper = Bdf2Stepper(disc, convection=cfg.bdf2_convection)
        state = stepper.start(tau, cfg.t0,
                              pim=PIMStepper(disc, tol=cfg.picard_tol, maxit=cfg.picard_maxit))
    rec = tracker.record(state.step_index, state.t, state.zp, state.zm, tau=tau, iterations=0)
    if not problem.manufactured:
        # unforced with homogeneous boundary data: the energy identity applies
        e0 = rec.E_elsasser
    res.rows.append(_diag_row(rec, exact_e(state.t), e0))
    iters = []
    for k in range(state.step_index, n_steps):
        if scheme == "pim":
            state, rep, _ = stepper.step(state, tau, tracker)
            res.iteration_reports.append(rep.iteration)
        else:
            state, rep = stepper.step(state, tracker)
        iters.append(rep.iterations)
        if (k + 1) % record_every == 0 or k + 1 == n_steps:
            rec = tracker.record(state.step_index, state.t, state.zp, state.zm,
                                 tau=tau, iterations=rep.iterations)
            res.rows.append(_diag_row(rec, exact_e(state.t), e0))
    res.seconds = time.perf_counter() - t_start
    res.max_err = tuple(tracker.max_err) if tracker.compute_errors else (math.nan, math.nan)
    res.avg_iters = float(np.mean(iters)) if iters else math.nan
    res.state = state
    return res


# -- experiments ---------------------------------------------------------------

def _table_rows(results: list[RunResult]) -> list[dict]:
    hs = [1.0 / r.n for r in results]
    ep = [r.max_err[0] for r in results]
    em = [r.max_err[1] for r in results]
    rp = [math.nan] + (convergence_rates(ep, hs) if len(results) > 1 else [])
    rm = [math.nan] + (convergence_rates(em, hs) if len(results) > 1 else [])
    return [dict(h=h, dt=r.tau, n_steps=r.steps, err_zp_L2=r.max_err[0], rate_zp=a,
                 err_zm_L2=r.max_err[1], rate_zm=b, avg_iters=r.avg_iters)
            for h, r, a, b in zip(hs, results, rp, rm)]


def run_converge(cfg: RunConfig, scheme: str | None = None) -> dict:
    """Refinement study with dt = h over ``cfg.levels``; writes the table CSV."""
    scheme = scheme or cfg.scheme
    problem = make_problem(cfg)
    if not problem.manufactured:
        raise InvalidArgument("convergence studies need a manufactured problem")
    results = []
    for n in cfg.levels:
        try:
            r = run_constant(cfg, scheme, n, tau=cfg.dt or 1.0 / n, exact_energy=False)
        except MHDError as exc:
            exc.args = (f"level n={n}: {exc}",)
            raise
        log.info("%s n=%d errors %.4e %.4e its %.2f (%.1fs)", scheme, n, *r.max_err,
                 r.avg_iters, r.seconds)
        results.append(r)
    rows = _table_rows(results)
    out = Path(cfg.out)
    path = write_csv(out / f"table_{cfg.problem}_{scheme}_{cfg.b0_tag}.csv", TABLE_COLUMNS,
                     rows)
    files = [path]
    if cfg.plots:
        from .report import plot_convergence

        files.append(plot_convergence(rows, path.with_suffix(".png"),
                                      f"{cfg.problem} {scheme} B0=({cfg.b0_tag})"))
    return {"rows": rows, "results": results, "files": files}


def run_conserve(cfg: RunConfig, scheme: str | None = None) -> dict:
    """Constant-step run on the ``cfg.n`` mesh with per-step diagnostics."""
    scheme = scheme or cfg.scheme
    r = run_constant(cfg, scheme, cfg.n, tau=cfg.dt)
    name = cfg.name(scheme, cfg.n)
    out = Path(cfg.out)
    files = [write_csv(out / f"diag_{name}.csv", DIAG_COLUMNS, r.rows)]
    if cfg.plots:
        from .report import plot_diagnostics

        files.append(plot_diagnostics({scheme: r.rows}, out / f"diag_{name}.png", name))
    return {"result": r, "rows": r.rows, "files": files}


def run_adapt(cfg: RunConfig) -> dict:
    """Adaptive PIM run plus a constant-step run with the same step count."""
    problem = make_problem(cfg)
    disc = Discretization(problem, cfg.n, degree=cfg.quad_degree)
    ctrl = ControllerConfig(tol=cfg.adapt_tol, kappa=cfg.kappa, tau_min=cfg.tau_min,
                            tau_max=cfg.tau_max, max_rejects=cfg.max_rejects)
    stepper = PIMStepper(disc, tol=cfg.picard_tol, maxit=cfg.picard_maxit, threads=cfg.threads)
    tracker = DiagnosticsTracker(disc.space, disc.mass, disc.stiffness, problem)
    state = disc.initial_state(cfg.t0, cfg.tau_min)
    tracker.record(0, state.t, state.zp, state.zm, tau=math.nan, iterations=0)
    t_start = time.perf_counter()
    res = adaptive_loop(stepper, state, ctrl, cfg.t_end, tracker)
    seconds = time.perf_counter() - t_start

    def exact_e(t):
        return exact_invariants(disc.space, problem, t)["E_primitive"] \
            if problem.manufactured else math.nan

    adapt_rows = [_diag_row(rec, exact_e(rec.t), None) for rec in tracker.records]
    n_acc = len(res.accepted)
    const = run_constant(cfg, "pim", cfg.n, n_steps=n_acc, disc=disc)
    name = cfg.name("pim-adaptive", cfg.n)
    cname = cfg.name("pim-constant", cfg.n)
    out = Path(cfg.out)
    files = [write_csv(out / f"steps_{name}.csv", STEP_COLUMNS, res.log),
             write_csv(out / f"diag_{name}.csv", DIAG_COLUMNS, adapt_rows),
             write_csv(out / f"diag_{cname}.csv", DIAG_COLUMNS, const.rows)]
    if cfg.plots:
        from .report import plot_diagnostics, plot_steps

        files.append(plot_steps(res.log, out / f"steps_{name}.png", ctrl.tol, name))
        files.append(plot_diagnostics({"adaptive": adapt_rows, "constant": const.rows},
                                      out / f"diag_{name}.png", name))
    summary = {
        "accepted": n_acc,
        "rejected": res.rejections,
        "seconds": seconds,
        "final_E_err_adaptive": adapt_rows[-1]["E_err"],
        "final_E_err_constant": const.rows[-1]["E_err"],
        "max_lte": max((r.lte for r in res.accepted if math.isfinite(r.lte)), default=math.nan),
    }
    return {"adaptive": res, "adaptive_rows": adapt_rows, "constant": const,
            "summary": summary, "files": files, "disc": disc}


def run_compare(cfg: RunConfig) -> dict:
    """The same problem through each scheme in ``cfg.schemes``; merged CSV."""
    merged, per_scheme, files = [], {}, []
    for scheme in cfg.schemes:
        if cfg.compare_mode == "converge":
            r = run_converge(cfg, scheme)
        else:
            r = run_conserve(cfg, scheme)
        per_scheme[scheme] = r
        files += r["files"]
        merged += [dict(scheme=scheme, **row) for row in r["rows"]]
    out = Path(cfg.out)
    if cfg.compare_mode == "converge":
        path = write_csv(out / f"table_{cfg.problem}_compare_{cfg.b0_tag}.csv",
                         ("scheme",) + TABLE_COLUMNS, merged)
    else:
        base = cfg.run_name or f"{cfg.problem}_{cfg.b0_tag}"
        path = write_csv(out / f"diag_{base}_compare_n{cfg.n}.csv", ("scheme",) + DIAG_COLUMNS,
                         merged)
        if cfg.plots:
            from .report import plot_diagnostics

            files.append(plot_diagnostics({s: per_scheme[s]["rows"] for s in cfg.schemes},
                                          path.with_suffix(".png"), base))
    files.append(path)
    return {"schemes": per_scheme, "rows": merged, "files": files}


RUNNERS = {"converge": run_converge, "conserve": run_conserve, "adapt": run_adapt,
           "compare": run_compare}


def run(cfg: RunConfig) -> dict:
    return RUNNERS[cfg.kind](cfg)


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    return replace(cfg, **kw)
