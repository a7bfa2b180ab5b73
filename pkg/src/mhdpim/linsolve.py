"""Oseen-type saddle-point systems for one Elsasser field.

Unknowns are ordered (velocity, pressure, multiplier). Dirichlet velocity
dofs are eliminated; the pressure mean is fixed by one Lagrange-multiplier
row enforcing int(p) = 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InvalidArgument, LinearSolveFailure
from .forms import OperatorCache, PhysicalParams, scalar_convection

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class SaddleSystem:
    """Reduced saddle system ``matrix @ x = rhs`` over free dofs.

    ``velocity_block`` is the full (unreduced) velocity operator, kept for
    diagnostics. ``bc_values`` holds the prescribed values at
    ``bc_dofs``.
    """

    matrix: sp.csc_matrix
    rhs: np.ndarray
    free_dofs: np.ndarray
    bc_dofs: np.ndarray
    bc_values: np.ndarray
    n_velocity: int
    n_pressure: int
    velocity_block: sp.csr_matrix

    def dump(self, path) -> None:
        """Matrix-market dump of the reduced matrix (debugging aid)."""
        from scipy.io import mmwrite

        mmwrite(str(path), self.matrix)


def velocity_operator(ops: OperatorCache, params: PhysicalParams, mass_coeff: float,
                      wind, b0, sign: int, skew: bool = True) -> sp.csr_matrix:
    """Scalar block ``mass_coeff * M + nu_plus * K + C(wind) - sign * C(b0)``.

    ``sign`` is +1 for z+ and -1 for z-. ``skew=False`` switches the
    wind term to the plain convective form (the constant B0 term is skew
    either way, since a constant field is divergence free).
    """
    if not mass_coeff > 0:
        raise InvalidArgument(f"mass coefficient must be positive, got {mass_coeff}")
    if sign not in (1, -1):
        raise InvalidArgument(f"sign must be +1 or -1, got {sign}")
    if not np.all(np.isfinite(wind)):
        raise InvalidArgument("wind contains non-finite values")
    a = mass_coeff * ops.mass_s + params.nu_plus * ops.stiff_s
    if np.any(np.asarray(b0, dtype=float) != 0.0):
        a = a - sign * ops.constant_convection(b0)
    if not (np.ndim(wind) == 0 and wind == 0):
        a = a + scalar_convection(ops.space, wind, ops.degree, skew=skew)
    return a


def build_oseen_system(ops: OperatorCache, params: PhysicalParams, tau: float, wind,
                       b0, sign: int, rhs: np.ndarray, bc_values=None,
                       mass_coeff: float | None = None, skew: bool = True) -> SaddleSystem:
    """Assemble the Oseen system of one Picard sweep.

    The velocity operator is ``mass_coeff * M + nu_plus * K + C(wind) -
    sign * C(b0)`` with ``mass_coeff = 2 / tau`` by default (backward Euler
    over half a step). ``rhs`` is the full velocity right-hand side;
    ``bc_values`` the Dirichlet values at ``space.boundary_velocity_dofs``
    (zero when omitted). The wind is a P2 field, a constant 2-vector, or 0.
    """
    space = ops.space
    if mass_coeff is None:
        if not tau > 0:
            raise InvalidArgument(f"step must be positive, got {tau}")
        mass_coeff = 2.0 / tau
    a_s = velocity_operator(ops, params, mass_coeff, wind, b0, sign, skew)
    A = sp.block_diag([a_s, a_s], format="csr")
    nv, npr = space.n_velocity_dofs, space.n_pressure_dofs
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (nv,):
        raise InvalidArgument(f"rhs has shape {rhs.shape}, expected ({nv},)")

    bc = space.boundary_velocity_dofs
    g = np.zeros(len(bc)) if bc_values is None else np.asarray(bc_values, dtype=float)
    mask = np.ones(nv, dtype=bool)
    mask[bc] = False
    free = np.flatnonzero(mask)

    D = ops.div
    A_ff = A[free][:, free]
    D_f = D[:, free]
    m = sp.csr_matrix(ops.p_mean[None, :])
    K = sp.bmat([
        [A_ff, -D_f.T, None],
        [-D_f, None, m.T],
        [None, m, None],
    ], format="csc")

    z_bc = np.zeros(nv)
    z_bc[bc] = g
    r_v = rhs[free] - A[free] @ z_bc
    r_p = D @ z_bc
    b = np.concatenate([r_v, r_p, [0.0]])
    return SaddleSystem(K, b, free, bc, g, nv, npr, A)


def _factor_solve(system: SaddleSystem, pivot: float, check: bool):
    """One LU attempt; returns ``(x, rel_residual)`` or raises LinearSolveFailure."""
    try:
        # minimum degree on A^T + A: the zero pressure block makes COLAMD
        # fill in 3-10x more
        lu = spla.splu(system.matrix, permc_spec="MMD_AT_PLUS_A",
                       diag_pivot_thresh=pivot, options=dict(SymmetricMode=True))
        x = lu.solve(system.rhs)
    except RuntimeError as exc:
        raise LinearSolveFailure(f"factorization failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise LinearSolveFailure("solution contains non-finite entries")
    if not check:
        return x, float("nan")
    scale = np.linalg.norm(system.rhs)
    res = system.matrix @ x - system.rhs
    rel = np.linalg.norm(res) / scale if scale > 0 else np.linalg.norm(res)
    if rel > RESIDUAL_TOL:
        # one step of iterative refinement before giving up
        x = x - lu.solve(res)
        res = system.matrix @ x - system.rhs
        rel = np.linalg.norm(res) / scale if scale > 0 else np.linalg.norm(res)
        if rel > RESIDUAL_TOL:
            raise LinearSolveFailure(
                f"relative residual {rel:.3e} exceeds {RESIDUAL_TOL:.0e} "
                f"(n={system.matrix.shape[0]}, pivot threshold {pivot})")
    return x, rel


#: diagonal pivoting keeps the symmetric fill-reducing order intact; strong
#: advection (large B0) makes threshold pivoting triple the fill, so it is
#: only the fallback
PIVOT_THRESHOLDS = (0.0, 0.1)


def solve_saddle(system: SaddleSystem, check: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Sparse direct solve; returns (velocity, pressure) on the full dof sets.

    Diagonal pivoting is tried first; on breakdown or a residual above
    ``RESIDUAL_TOL`` the factorization is repeated with threshold pivoting.
    """
    for k, pivot in enumerate(PIVOT_THRESHOLDS):
        try:
            x, rel = _factor_solve(system, pivot, check)
            break
        except LinearSolveFailure as exc:
            if k == len(PIVOT_THRESHOLDS) - 1:
                raise
            log.info("retrying with pivot threshold %g: %s", PIVOT_THRESHOLDS[k + 1], exc)
    log.debug("saddle solve n=%d rel_residual=%.3e", system.matrix.shape[0], rel)

    nf = len(system.free_dofs)
    z = np.zeros(system.n_velocity)
    z[system.free_dofs] = x[:nf]
    z[system.bc_dofs] = system.bc_values
    p = x[nf:nf + system.n_pressure]
    return z, p
