"""Discrete invariants, error norms and convergence rates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .forms import PhysicalParams
from .spaces import SpacePair, evaluate_at_quadrature


def _mnorm2(v, mass) -> float:
    return float(v @ (mass @ v))


def _integrals(v, mass) -> np.ndarray:
    """Component integrals of a component-blocked velocity field."""
    n = len(v) // 2
    ones = np.ones(len(v))
    mv = mass @ v
    return np.array([mv[:n] @ ones[:n], mv[n:] @ ones[n:]])


def energy(zp, zm, mass, b0=(0.0, 0.0)) -> tuple[float, float]:
    """``(E_elsasser, E_primitive)``.

    E_elsasser = (|z+|^2 + |z-|^2) / 2 and E_primitive = (|u|^2 + |B|^2) / 2
    with u = (z+ + z-)/2 and B = b0 + (z+ - z-)/2.
    """
    e_els = 0.5 * (_mnorm2(zp, mass) + _mnorm2(zm, mass))
    u = 0.5 * (zp + zm)
    b = 0.5 * (zp - zm)
    b0 = np.asarray(b0, dtype=float)
    e_b = _mnorm2(b, mass)
    if np.any(b0 != 0.0):
        area = 0.5 * float(np.ones(len(zp)) @ (mass @ np.ones(len(zp))))
        e_b += float(b0 @ b0) * area + 2.0 * float(b0 @ _integrals(b, mass))
    return e_els, 0.5 * (_mnorm2(u, mass) + e_b)


def cross_helicity(zp, zm, b0, mass) -> float:
    """(1/2) int u . B with B = b0 + b."""
    u = 0.5 * (zp + zm)
    b = 0.5 * (zp - zm)
    h = float(u @ (mass @ b))
    b0 = np.asarray(b0, dtype=float)
    if np.any(b0 != 0.0):
        h += float(b0 @ _integrals(u, mass))
    return 0.5 * h


def dissipation_increment(zp_half, zm_half, tau: float, params: PhysicalParams,
                          stiffness) -> float:
    """One step's share of the viscous dissipation.

    nu_star tau (|grad z+|^2 + |grad z-|^2)
    + |nu_minus| tau |grad z+ + sign(nu_minus) grad z-|^2, at the half step.
    """
    a = _mnorm2(zp_half, stiffness)
    b = _mnorm2(zm_half, stiffness)
    inc = params.nu_star * tau * (a + b)
    nm = params.nu_minus
    if nm != 0.0:
        mixed = zp_half + np.sign(nm) * zm_half
        inc += abs(nm) * tau * _mnorm2(mixed, stiffness)
    return inc


def error_norms(space: SpacePair, field_vec, exact, t: float,
                degree: int = 5) -> tuple[float, float]:
    """L2 error and H1-seminorm error of a P2 field against ``exact``.

    ``exact`` is a callable ``(x, y, t) -> (2, ...)``; if it also has a
    ``grad`` attribute the H1 seminorm error is computed, otherwise NaN.
    """
    ed = space.element_data(degree)
    vals, grads = evaluate_at_quadrature(space, field_vec, degree)
    ex = np.asarray(exact(ed.xq, ed.yq, t), dtype=float)
    ex = np.broadcast_to(ex, vals.shape)
    l2 = math.sqrt(float(np.sum(ed.wdet * np.sum((vals - ex) ** 2, axis=0))))
    grad_fn = getattr(exact, "grad", None)
    if grad_fn is None:
        return l2, math.nan
    gx = np.asarray(grad_fn(ed.xq, ed.yq, t), dtype=float)   # (2, 2, ne, nq)
    gx = np.moveaxis(np.broadcast_to(gx, (2, 2) + ed.wdet.shape), 1, -1)
    h1 = math.sqrt(float(np.sum(ed.wdet * np.sum((grads - gx) ** 2, axis=(0, 3)))))
    return l2, h1


def exact_invariants(space: SpacePair, problem, t: float, degree: int = 5) -> dict:
    """Energies and cross-helicity of the exact fields, by quadrature."""
    ed = space.element_data(degree)
    zp = np.asarray(problem.exact_zp(ed.xq, ed.yq, t))
    zm = np.asarray(problem.exact_zm(ed.xq, ed.yq, t))
    b0 = np.asarray(problem.b0, dtype=float)[:, None, None]
    u = 0.5 * (zp + zm)
    B = b0 + 0.5 * (zp - zm)

    def integral(f):
        return float(np.sum(ed.wdet * f))

    return {
        "E_elsasser": 0.5 * integral(np.sum(zp ** 2 + zm ** 2, axis=0)),
        "E_primitive": 0.5 * integral(np.sum(u ** 2 + B ** 2, axis=0)),
        "H_C": 0.5 * integral(np.sum(u * B, axis=0)),
    }


def convergence_rates(errors, hs) -> list[float]:
    """Observed orders log(e[i-1]/e[i]) / log(h[i-1]/h[i]).

    Entries involving a zero or non-finite error are NaN.
    """
    errors = [float(e) for e in errors]
    hs = [float(h) for h in hs]
    if len(errors) != len(hs) or len(errors) < 2:
        raise ValueError("need matching error and h lists of length >= 2")
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise ValueError("mesh sizes must be strictly decreasing")
    rates = []
    for (e0, e1), (h0, h1) in zip(zip(errors, errors[1:]), zip(hs, hs[1:])):
        if e0 > 0 and e1 > 0 and math.isfinite(e0) and math.isfinite(e1):
            rates.append(math.log(e0 / e1) / math.log(h0 / h1))
        else:
            rates.append(math.nan)
    return rates


@dataclass
class DiagnosticRecord:
    step: int
    t: float
    E_elsasser: float
    E_primitive: float
    H_C: float
    D: float
    H_M: str = "n/a"
    err_zp_L2: float = math.nan
    err_zm_L2: float = math.nan
    err_zp_H1: float = math.nan
    err_zm_H1: float = math.nan
    extra: dict = field(default_factory=dict)

    def row(self) -> dict:
        d = asdict(self)
        d.update(d.pop("extra"))
        return d


class DiagnosticsTracker:
    """Accumulates per-step records, the running dissipation and the
    running maxima of the L2 errors (the discrete L-infinity-in-time norm)."""

    def __init__(self, space: SpacePair, mass, stiffness, problem, compute_errors=True):
        self.space = space
        self.mass = mass
        self.stiffness = stiffness
        self.problem = problem
        self.compute_errors = compute_errors and problem.manufactured
        self.D = 0.0
        self.records: list[DiagnosticRecord] = []
        self.max_err = [0.0, 0.0]

    def add_dissipation(self, zp_half, zm_half, tau):
        inc = dissipation_increment(zp_half, zm_half, tau, self.problem.params, self.stiffness)
        self.D += inc
        return inc

    def record(self, step, t, zp, zm, **extra) -> DiagnosticRecord:
        e_els, e_prim = energy(zp, zm, self.mass, self.problem.b0)
        rec = DiagnosticRecord(step, t, e_els, e_prim,
                               cross_helicity(zp, zm, self.problem.b0, self.mass),
                               self.D, extra=extra)
        if self.compute_errors:
            lp, hp = error_norms(self.space, zp, self.problem.exact_zp, t)
            lm, hm = error_norms(self.space, zm, self.problem.exact_zm, t)
            rec.err_zp_L2, rec.err_zp_H1 = lp, hp
            rec.err_zm_L2, rec.err_zm_H1 = lm, hm
            self.max_err = [max(self.max_err[0], lp), max(self.max_err[1], lm)]
        self.records.append(rec)
        return rec
