"""Manufactured MHD problems in Elsasser variables.

Every exact field is given together with closed-form first and second
derivatives; the forcing of each Elsasser equation is assembled from them as

    f(+/-) = dt z(+/-) -/+ (B0 . grad) z(+/-) + (z(-/+) . grad) z(+/-)
             - nu_plus lap z(+/-) - nu_minus lap z(-/+) + grad p.

Callables take ``(x, y, t)`` with array ``x`` and ``y`` and return stacked
components: vectors have shape (2, ...), gradients (2, 2, ...) indexed
[component, direction].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import EvaluationFailure, InvalidArgument
from .forms import PhysicalParams

Array = np.ndarray


@dataclass(frozen=True)
class ExactVector:
    """A space-time vector field with its derivatives."""

    value: Callable
    grad: Callable
    dt: Callable
    lap: Callable

    def __call__(self, x, y, t):
        return self.value(x, y, t)


@dataclass(frozen=True)
class ExactScalar:
    value: Callable
    grad: Callable

    def __call__(self, x, y, t):
        return self.value(x, y, t)


@dataclass
class ProblemSpec:
    """Physical setup of one run.

    For manufactured problems ``exact_zp``, ``exact_zm`` and ``exact_p`` are
    set and the forcings are derived from them. Otherwise initial data come
    from ``initial_zp``/``initial_zm`` and boundary data are homogeneous.
    """

    name: str
    params: PhysicalParams
    b0: tuple[float, float]
    domain_box: tuple[float, float, float, float]
    exact_zp: ExactVector | None = None
    exact_zm: ExactVector | None = None
    exact_p: ExactScalar | None = None
    forcing_zp: Callable | None = None
    forcing_zm: Callable | None = None
    initial_zp: Callable | None = None
    initial_zm: Callable | None = None
    t0: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def manufactured(self) -> bool:
        return self.exact_zp is not None

    def exact(self, sign: int) -> ExactVector | None:
        return self.exact_zp if sign > 0 else self.exact_zm

    def forcing(self, sign: int) -> Callable | None:
        return self.forcing_zp if sign > 0 else self.forcing_zm

    def initial(self, sign: int) -> Callable:
        if self.manufactured:
            return self.exact(sign).value
        init = self.initial_zp if sign > 0 else self.initial_zm
        if init is None:
            return _zero_vector
        return init

    def has_forcing(self) -> bool:
        return self.forcing_zp is not None or self.forcing_zm is not None


def _zero_vector(x, y, t):
    z = np.zeros(np.broadcast(x, y).shape)
    return np.stack([z, z])


# -- Elsasser / primitive conversions ---------------------------------------

def elsasser_from_primitive(u, b):
    """z+ = u + b, z- = u - b for the velocity and the magnetic fluctuation."""
    u = np.asarray(u, dtype=float)
    b = np.asarray(b, dtype=float)
    return u + b, u - b


def primitive_from_elsasser(zp, zm):
    """u = (z+ + z-)/2, b = (z+ - z-)/2."""
    zp = np.asarray(zp, dtype=float)
    zm = np.asarray(zm, dtype=float)
    return 0.5 * (zp + zm), 0.5 * (zp - zm)


# -- forcing from exact fields ------------------------------------------------

def derive_forcing(params: PhysicalParams, b0, zs: ExactVector, zo: ExactVector,
                   p: ExactScalar, sign: int) -> Callable:
    """Forcing of the ``sign`` equation; ``zs`` is that field, ``zo`` the other."""
    b0x, b0y = (float(v) for v in b0)
    nu_p, nu_m = params.nu_plus, params.nu_minus

    def f(x, y, t):
        g = zs.grad(x, y, t)
        w = zo.value(x, y, t)
        along_b0 = b0x * g[:, 0] + b0y * g[:, 1]
        conv = w[0] * g[:, 0] + w[1] * g[:, 1]
        out = (zs.dt(x, y, t) - sign * along_b0 + conv
               - nu_p * zs.lap(x, y, t) - nu_m * zo.lap(x, y, t) + p.grad(x, y, t))
        return out

    return f


def _combine(a: ExactVector, b: ExactVector, sign: int) -> ExactVector:
    return ExactVector(
        value=lambda x, y, t: a.value(x, y, t) + sign * b.value(x, y, t),
        grad=lambda x, y, t: a.grad(x, y, t) + sign * b.grad(x, y, t),
        dt=lambda x, y, t: a.dt(x, y, t) + sign * b.dt(x, y, t),
        lap=lambda x, y, t: a.lap(x, y, t) + sign * b.lap(x, y, t),
    )


def _manufactured(name, params, b0, box, zp, zm, p, **kw) -> ProblemSpec:
    return ProblemSpec(
        name=name, params=params, b0=tuple(float(v) for v in b0), domain_box=box,
        exact_zp=zp, exact_zm=zm, exact_p=p,
        forcing_zp=derive_forcing(params, b0, zp, zm, p, +1),
        forcing_zm=derive_forcing(params, b0, zm, zp, p, -1),
        **kw,
    )


# -- travelling wave ----------------------------------------------------------

WAVE_BOX = (0.5, 1.5, 0.5, 1.5)


def travelling_wave(params: PhysicalParams, b0=(1.0, 1.0)) -> ProblemSpec:
    """Electrically conducting travelling wave on [0.5, 1.5]^2.

    z(+/-) = (3/4, 0) + W +/- C with a Taylor-Green wave W moving along
    (1, 1) and C = 0.1 e^(nu_m t) ((y + 1)^2, (x + 1)^2).
    """
    nu, nu_m = params.nu, params.nu_m
    k = 2.0 * np.pi
    amp = 0.25

    def _decay(t):
        return amp * np.exp(-2.0 * k * k * nu * t)

    def w_val(x, y, t):
        X, Y = k * (x - t), k * (y - t)
        e = _decay(t)
        return np.stack([0.75 + e * np.cos(X) * np.sin(Y), -e * np.sin(X) * np.cos(Y)])

    def w_grad(x, y, t):
        X, Y = k * (x - t), k * (y - t)
        e = k * _decay(t)
        sxsy, cxcy = np.sin(X) * np.sin(Y), np.cos(X) * np.cos(Y)
        return np.stack([
            np.stack([-e * sxsy, e * cxcy]),
            np.stack([-e * cxcy, e * sxsy]),
        ])

    def w_lap(x, y, t):
        v = w_val(x, y, t)
        v[0] = v[0] - 0.75
        return -2.0 * k * k * v

    def w_dt(x, y, t):
        v = w_val(x, y, t)
        v[0] = v[0] - 0.75
        g = w_grad(x, y, t)
        return -2.0 * k * k * nu * v - (g[:, 0] + g[:, 1])

    def c_val(x, y, t):
        q = 0.1 * np.exp(nu_m * t)
        return np.stack([q * (y + 1) ** 2, q * (x + 1) ** 2])

    def c_grad(x, y, t):
        q = 0.1 * np.exp(nu_m * t)
        zero = np.zeros(np.broadcast(x, y).shape)
        return np.stack([
            np.stack([zero, 2 * q * (y + 1) + zero]),
            np.stack([2 * q * (x + 1) + zero, zero]),
        ])

    def c_lap(x, y, t):
        q = 0.1 * np.exp(nu_m * t)
        full = np.full(np.broadcast(x, y).shape, 2 * q)
        return np.stack([full, full])

    W = ExactVector(w_val, w_grad, w_dt, w_lap)
    C = ExactVector(c_val, c_grad, lambda x, y, t: nu_m * c_val(x, y, t), c_lap)

    def p_val(x, y, t):
        return -(1.0 / 64.0) * (np.cos(2 * k * (x - t)) + np.cos(2 * k * (y - t))) \
            * np.exp(-4.0 * k * k * nu * t)

    def p_grad(x, y, t):
        s = (2 * k / 64.0) * np.exp(-4.0 * k * k * nu * t)
        return np.stack([s * np.sin(2 * k * (x - t)), s * np.sin(2 * k * (y - t))])

    return _manufactured(
        "wave", params, b0, WAVE_BOX, _combine(W, C, +1), _combine(W, C, -1),
        ExactScalar(p_val, p_grad))


# -- Hartmann flow ----------------------------------------------------------

@dataclass(frozen=True)
class HartmannParams:
    L: float = 6.0
    G: float = 1.0
    S: float = 1.0
    Ha: float = 5.0
    M: float = 1.0

    def __post_init__(self):
        for name in ("L", "G", "S", "Ha", "M"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"Hartmann parameter {name} must be positive")

    @property
    def box(self):
        return (0.0, self.L, -1.0, 1.0)


def hartmann_profiles(hp: HartmannParams, nu: float):
    """Velocity u1(y) and field fluctuation b1(y) with two derivatives each.

    Returns a function ``y -> (u1, du1, d2u1, b1, db1, d2b1)``.
    """
    G, S, Ha = hp.G, hp.S, hp.Ha
    cu = G / (nu * Ha * np.tanh(Ha))
    cb = G / S
    ch, sh = np.cosh(Ha), np.sinh(Ha)

    def profiles(y):
        cy, sy = np.cosh(y * Ha), np.sinh(y * Ha)
        u1 = cu * (1.0 - cy / ch)
        du1 = -cu * Ha * sy / ch
        d2u1 = -cu * Ha * Ha * cy / ch
        b1 = cb * (sy / sh - y)
        db1 = cb * (Ha * cy / sh - 1.0)
        d2b1 = cb * Ha * Ha * sy / sh
        return u1, du1, d2u1, b1, db1, d2b1

    return profiles


def _hartmann_fields(hp: HartmannParams, params: PhysicalParams, amp, damp):
    """Elsasser fields amp(t) * (u1 +/- b1, 0) and pressure amp(t) * p0."""
    prof = hartmann_profiles(hp, params.nu)

    def make(sign):
        def val(x, y, t):
            u1, _, _, b1, _, _ = prof(y)
            v = amp(t) * (u1 + sign * b1) + 0 * x
            return np.stack([v, np.zeros_like(v)])

        def grad(x, y, t):
            _, du1, _, _, db1, _ = prof(y)
            dy = amp(t) * (du1 + sign * db1) + 0 * x
            zero = np.zeros_like(dy)
            return np.stack([np.stack([zero, dy]), np.stack([zero, zero])])

        def lap(x, y, t):
            _, _, d2u1, _, _, d2b1 = prof(y)
            v = amp(t) * (d2u1 + sign * d2b1) + 0 * x
            return np.stack([v, np.zeros_like(v)])

        def dt(x, y, t):
            u1, _, _, b1, _, _ = prof(y)
            v = damp(t) * (u1 + sign * b1) + 0 * x
            return np.stack([v, np.zeros_like(v)])

        return ExactVector(val, grad, dt, lap)

    def p_val(x, y, t):
        b1 = prof(y)[3]
        return amp(t) * (-hp.G * x - 0.5 * hp.S * b1 ** 2)

    def p_grad(x, y, t):
        _, _, _, b1, db1, _ = prof(y)
        gy = amp(t) * (-hp.S * b1 * db1) + 0 * x
        return np.stack([np.full_like(gy, -hp.G * amp(t)), gy])

    return make(+1), make(-1), ExactScalar(p_val, p_grad)


def hartmann(hp: HartmannParams, params: PhysicalParams) -> ProblemSpec:
    """Steady Hartmann channel flow on [0, L] x [-1, 1] with B0 = (0, M)."""
    zp, zm, p = _hartmann_fields(hp, params, lambda t: 1.0, lambda t: 0.0)
    return _manufactured("hartmann", params, (0.0, hp.M), hp.box, zp, zm, p,
                         meta={"hartmann": hp})


# -- Lindberg modulation ------------------------------------------------------

_EXP_LIMIT = 700.0


def _lindberg_exponents(t, omega):
    s = 10.0 ** omega
    et = np.exp(-t)
    g1 = s * (t + 2.0 * et - 2.0)
    g2 = s * (1.0 - et - t * np.exp(-1.0))
    dg1 = s * (1.0 - 2.0 * et)
    dg2 = s * (et - np.exp(-1.0))
    return g1, g2, dg1, dg2


def lindberg_G(t, omega: float = 3.1):
    """Time modulation exp(g1) (cos g2 + sin g2) of the Lindberg stiff system."""
    g1, g2, _, _ = _lindberg_exponents(np.asarray(t, dtype=float), omega)
    if np.any(g1 > _EXP_LIMIT):
        raise EvaluationFailure(f"exp(g1) overflows at t={t} (g1 > {_EXP_LIMIT})")
    return np.exp(g1) * (np.cos(g2) + np.sin(g2))


def lindberg_dG(t, omega: float = 3.1):
    g1, g2, dg1, dg2 = _lindberg_exponents(np.asarray(t, dtype=float), omega)
    if np.any(g1 > _EXP_LIMIT):
        raise EvaluationFailure(f"exp(g1) overflows at t={t} (g1 > {_EXP_LIMIT})")
    e = np.exp(g1)
    return e * (dg1 * (np.cos(g2) + np.sin(g2)) + dg2 * (np.cos(g2) - np.sin(g2)))


def lindberg_hartmann(hp: HartmannParams, params: PhysicalParams,
                      omega: float = 3.1, t0: float = 1.59) -> ProblemSpec:
    """Hartmann fields and pressure multiplied by the Lindberg modulation."""
    zp, zm, p = _hartmann_fields(hp, params,
                                 lambda t: float(lindberg_G(t, omega)),
                                 lambda t: float(lindberg_dG(t, omega)))
    return _manufactured("lindberg", params, (0.0, hp.M), hp.box, zp, zm, p, t0=t0,
                         meta={"hartmann": hp, "omega": omega})


# -- non-manufactured runs ----------------------------------------------------

UNIT_BOX = (0.0, 1.0, 0.0, 1.0)


def _bubble_curl(ax, ay, x, y):
    """Curl of psi = sin^2(ax pi x) sin^2(ay pi y) / pi on the unit square."""
    sx, cx = np.sin(ax * np.pi * x), np.cos(ax * np.pi * x)
    sy, cy = np.sin(ay * np.pi * y), np.cos(ay * np.pi * y)
    u = 2 * ay * sx ** 2 * sy * cy
    v = -2 * ax * sy ** 2 * sx * cx
    return np.stack([u, v])


def decaying_vortices(params: PhysicalParams, b0=(0.0, 0.0)) -> ProblemSpec:
    """Unforced flow on the unit square from two distinct vortex patterns.

    Homogeneous Dirichlet data; used for the energy balance and the ideal
    conservation checks.
    """
    def zp0(x, y, t):
        return _bubble_curl(1, 1, x, y)

    def zm0(x, y, t):
        return 0.5 * _bubble_curl(2, 1, x, y) + 0.3 * _bubble_curl(1, 1, x, y)

    return ProblemSpec("vortices", params, tuple(float(v) for v in b0), UNIT_BOX,
                       initial_zp=zp0, initial_zm=zm0)


def mesh_counts(problem: ProblemSpec, n: int) -> tuple[int, int]:
    """Cell counts for refinement level ``n``: n cells along each side."""
    return n, n
