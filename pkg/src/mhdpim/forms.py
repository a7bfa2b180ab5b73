"""Discrete operators for the Elsasser weak form.

Scalar P2 matrices act identically on each velocity component, so the
vector operators are two-block diagonal. Global sums are formed with
``np.bincount`` over a precomputed CSR pattern, which fixes the reduction
order and keeps results bit-stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgument
from .spaces import SpacePair, evaluate_at_quadrature


@dataclass(frozen=True)
class PhysicalParams:
    """Kinematic viscosity ``nu`` and magnetic resistivity ``nu_m``.

    Zero values are only accepted with ``ideal=True`` (inviscid test path).
    """

    nu: float
    nu_m: float
    ideal: bool = False

    def __post_init__(self):
        if self.ideal:
            if self.nu < 0 or self.nu_m < 0:
                raise InvalidArgument("viscosities must be non-negative")
        elif not (self.nu > 0 and self.nu_m > 0):
            raise InvalidArgument(
                f"nu and nu_m must be positive (got {self.nu}, {self.nu_m}); "
                "pass ideal=True for the inviscid path")

    @property
    def nu_plus(self) -> float:
        return 0.5 * (self.nu + self.nu_m)

    @property
    def nu_minus(self) -> float:
        return 0.5 * (self.nu - self.nu_m)

    @property
    def nu_star(self) -> float:
        return min(self.nu, self.nu_m)


class _Pattern:
    """CSR sparsity of an element-by-element product of two dof maps."""

    def __init__(self, rows_map, cols_map, shape):
        ne, nr = rows_map.shape
        nc = cols_map.shape[1]
        rows = np.repeat(rows_map, nc, axis=1).ravel()
        cols = np.tile(cols_map, (1, nr)).ravel()
        keys = rows.astype(np.int64) * shape[1] + cols
        uniq, inverse = np.unique(keys, return_inverse=True)
        self.shape = shape
        self.slot = inverse.ravel()
        self.nnz = len(uniq)
        r = uniq // shape[1]
        self.indices = (uniq % shape[1]).astype(np.int32)
        self.indptr = np.zeros(shape[0] + 1, dtype=np.int64)
        np.add.at(self.indptr, r + 1, 1)
        self.indptr = np.cumsum(self.indptr)

    def matrix(self, local: np.ndarray) -> sp.csr_matrix:
        data = np.bincount(self.slot, weights=local.ravel(), minlength=self.nnz)
        return sp.csr_matrix((data, self.indices.copy(), self.indptr.copy()), shape=self.shape)


def _p2_pattern(space: SpacePair) -> _Pattern:
    if "p2p2" not in space._cache:
        dm = space.velocity_dofmap
        space._cache["p2p2"] = _Pattern(dm, dm, (space.n_p2, space.n_p2))
    return space._cache["p2p2"]


def _blockdiag(a: sp.csr_matrix) -> sp.csr_matrix:
    return sp.block_diag([a, a], format="csr")


# -- scalar P2 kernels -----------------------------------------------------

def scalar_mass(space: SpacePair, degree: int = 5) -> sp.csr_matrix:
    ed = space.element_data(degree)
    local = np.einsum("eq,qi,qj->eij", ed.wdet, ed.phi, ed.phi)
    return _p2_pattern(space).matrix(local)


def scalar_stiffness(space: SpacePair, degree: int = 5) -> sp.csr_matrix:
    ed = space.element_data(degree)
    local = np.einsum("eq,eqid,eqjd->eij", ed.wdet, ed.dphi, ed.dphi)
    return _p2_pattern(space).matrix(local)


def _wind_at_quadrature(space: SpacePair, wind, degree: int) -> np.ndarray:
    ed = space.element_data(degree)
    w = np.asarray(wind, dtype=float)
    if w.shape == (2,):
        return np.broadcast_to(w[:, None, None], (2,) + ed.wdet.shape)
    if w.shape != (space.n_velocity_dofs,):
        raise InvalidArgument(
            f"wind must be a constant 2-vector or a velocity field of length "
            f"{space.n_velocity_dofs}, got shape {w.shape}")
    vals, _ = evaluate_at_quadrature(space, w, degree)
    return vals


def scalar_convection(space: SpacePair, wind, degree: int = 5,
                      skew: bool = True) -> sp.csr_matrix:
    """Matrix of 1/2 (w.grad u, v) - 1/2 (w.grad v, u) on one component.

    Row ``i`` is the test function, column ``j`` the trial function. With
    ``skew=False`` the plain convective form (w.grad u, v) is returned.
    """
    ed = space.element_data(degree)
    w = _wind_at_quadrature(space, wind, degree)
    # w . grad phi_j at each point, (ne, nq, 6)
    adv = w[0][..., None] * ed.dphi[..., 0] + w[1][..., None] * ed.dphi[..., 1]
    s = np.einsum("eq,qi,eqj->eij", ed.wdet, ed.phi, adv)
    local = 0.5 * (s - np.transpose(s, (0, 2, 1))) if skew else s
    return _p2_pattern(space).matrix(local)


# -- public vector operators -----------------------------------------------

def assemble_mass(space: SpacePair, degree: int = 5) -> sp.csr_matrix:
    """L2 inner product on the two-component P2 space."""
    return _blockdiag(scalar_mass(space, degree))


def assemble_stiffness(space: SpacePair, degree: int = 5) -> sp.csr_matrix:
    """(grad u, grad v) on the two-component P2 space."""
    return _blockdiag(scalar_stiffness(space, degree))


def assemble_convection(space: SpacePair, wind, degree: int = 5) -> sp.csr_matrix:
    """Skew-symmetric convection N(w, u, v) with a P2 or constant wind."""
    return _blockdiag(scalar_convection(space, wind, degree))


def assemble_div(space: SpacePair, degree: int = 5) -> sp.csr_matrix:
    """Matrix of (q, div v): rows are P1 pressure dofs, columns velocity dofs."""
    key = ("div", degree)
    if key not in space._cache:
        ed = space.element_data(degree)
        pm = space.pressure_dofmap
        vm = space.velocity_dofmap
        pat = _Pattern(pm, np.hstack([vm, vm + space.n_p2]),
                       (space.n_p1, space.n_velocity_dofs))
        # (ne, 3, 6) per component
        bx = np.einsum("eq,qa,eqk->eak", ed.wdet, ed.psi, ed.dphi[..., 0])
        by = np.einsum("eq,qa,eqk->eak", ed.wdet, ed.psi, ed.dphi[..., 1])
        space._cache[key] = pat.matrix(np.concatenate([bx, by], axis=2))
    return space._cache[key]


def pressure_mass(space: SpacePair, degree: int = 5) -> sp.csr_matrix:
    ed = space.element_data(degree)
    local = np.einsum("eq,qa,qb->eab", ed.wdet, ed.psi, ed.psi)
    pat = _Pattern(space.pressure_dofmap, space.pressure_dofmap, (space.n_p1, space.n_p1))
    return pat.matrix(local)


def pressure_mean_vector(space: SpacePair, degree: int = 5) -> np.ndarray:
    """Entries int(psi_q): the row of the constraint int(p) = 0."""
    ed = space.element_data(degree)
    local = np.einsum("eq,qa->ea", ed.wdet, ed.psi)
    return np.bincount(space.pressure_dofmap.ravel(), weights=local.ravel(),
                       minlength=space.n_p1)


def assemble_load(space: SpacePair, f, t: float, degree: int = 5) -> np.ndarray:
    """Load vector int(f . phi_i) for a forcing ``f(x, y, t) -> (fx, fy)``."""
    ed = space.element_data(degree)
    vals = np.asarray(f(ed.xq, ed.yq, t), dtype=float)
    out = np.empty(space.n_velocity_dofs)
    for c in range(2):
        fc = np.broadcast_to(vals[c], ed.wdet.shape)
        local = (ed.wdet * fc) @ ed.phi                     # (ne, 6)
        out[c * space.n_p2:(c + 1) * space.n_p2] = np.bincount(
            space.velocity_dofmap.ravel(), weights=local.ravel(), minlength=space.n_p2)
    return out


class OperatorCache:
    """Wind-independent operators of one space, built once."""

    def __init__(self, space: SpacePair, degree: int = 5):
        self.space = space
        self.degree = degree
        self.mass_s = scalar_mass(space, degree)
        self.stiff_s = scalar_stiffness(space, degree)
        self.mass = _blockdiag(self.mass_s)
        self.stiffness = _blockdiag(self.stiff_s)
        self.div = assemble_div(space, degree)
        self.p_mean = pressure_mean_vector(space, degree)
        self.p_mass = pressure_mass(space, degree)
        self._b0_conv = {}

    def constant_convection(self, b0) -> sp.csr_matrix:
        key = tuple(float(v) for v in b0)
        if key not in self._b0_conv:
            self._b0_conv[key] = scalar_convection(self.space, np.array(key), self.degree)
        return self._b0_conv[key]
