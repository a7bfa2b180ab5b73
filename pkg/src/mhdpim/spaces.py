"""Taylor-Hood P2-P1 spaces on a triangular mesh.

Velocity-type fields are stored component-blocked: entry ``c * n_nodes + k``
is component ``c`` at P2 node ``k``. P2 nodes are the mesh vertices followed
by the edge midpoints, the latter ordered lexicographically by (y, x).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationFailure, InvalidArgument
from .mesh import Mesh
from .quadrature import QuadRule, get_rule

# local edge k joins local vertices EDGE_VERTS[k]
EDGE_VERTS = ((0, 1), (1, 2), (2, 0))


def p2_values(bary: np.ndarray) -> np.ndarray:
    """P2 shape functions at barycentric points, shape (npts, 6)."""
    l0, l1, l2 = bary[:, 0], bary[:, 1], bary[:, 2]
    return np.column_stack([
        l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
        4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0,
    ])


_DLAMBDA = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])


def p2_ref_gradients(bary: np.ndarray) -> np.ndarray:
    """Reference-coordinate gradients of P2 shape functions, shape (npts, 6, 2)."""
    lam = bary
    g = np.empty((len(bary), 6, 2))
    for i in range(3):
        g[:, i, :] = (4 * lam[:, i] - 1)[:, None] * _DLAMBDA[i]
    for k, (a, b) in enumerate(EDGE_VERTS):
        g[:, 3 + k, :] = 4 * (lam[:, a][:, None] * _DLAMBDA[b] + lam[:, b][:, None] * _DLAMBDA[a])
    return g


@dataclass
class ElementData:
    """Per-element quantities at the points of one quadrature rule."""

    rule: QuadRule
    phi: np.ndarray        # (nq, 6) P2 values
    psi: np.ndarray        # (nq, 3) P1 values
    dphi: np.ndarray       # (ne, nq, 6, 2) physical P2 gradients
    dpsi: np.ndarray       # (ne, 3, 2) physical P1 gradients
    wdet: np.ndarray       # (ne, nq) weight * |det J|
    xq: np.ndarray         # (ne, nq) physical x of quadrature points
    yq: np.ndarray         # (ne, nq)


@dataclass
class SpacePair:
    mesh: Mesh
    velocity_dofmap: np.ndarray      # (ne, 6) P2 node indices
    pressure_dofmap: np.ndarray      # (ne, 3) P1 node indices
    nodes: np.ndarray                # (n_p2, 2) P2 node coordinates
    boundary_nodes: np.ndarray       # sorted P2 node indices on the boundary
    _elem: dict = field(default_factory=dict, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_p2(self) -> int:
        return len(self.nodes)

    @property
    def n_p1(self) -> int:
        return self.mesh.n_vertices

    @property
    def n_velocity_dofs(self) -> int:
        return 2 * self.n_p2

    @property
    def n_pressure_dofs(self) -> int:
        return self.n_p1

    @property
    def boundary_velocity_dofs(self) -> np.ndarray:
        return np.concatenate([self.boundary_nodes, self.boundary_nodes + self.n_p2])

    @property
    def interior_nodes(self) -> np.ndarray:
        mask = np.ones(self.n_p2, dtype=bool)
        mask[self.boundary_nodes] = False
        return np.flatnonzero(mask)

    @property
    def h(self) -> float:
        return self.mesh.h

    def element_data(self, degree: int = 5) -> ElementData:
        if degree not in self._elem:
            self._elem[degree] = _element_data(self, get_rule(degree))
        return self._elem[degree]

    def check_velocity(self, vec, name="field") -> np.ndarray:
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.n_velocity_dofs,):
            raise InvalidArgument(
                f"{name} has shape {vec.shape}, expected ({self.n_velocity_dofs},)")
        return vec

    def components(self, vec) -> tuple[np.ndarray, np.ndarray]:
        vec = self.check_velocity(vec)
        return vec[: self.n_p2], vec[self.n_p2:]


def build_spaces(mesh: Mesh) -> SpacePair:
    """P2 vector / P1 scalar spaces with a deterministic global numbering."""
    edges, tri_edges = mesh.edges()
    mid = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    order = np.lexsort((mid[:, 0], mid[:, 1]))
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    tri_edges = rank[tri_edges]
    mid = mid[order]

    nv = mesh.n_vertices
    dofmap = np.hstack([mesh.triangles, nv + tri_edges])
    nodes = np.vstack([mesh.vertices, mid])

    x0, x1, y0, y1 = mesh.domain_box
    tol = 1e-12 * max(1.0, abs(x0), abs(x1), abs(y0), abs(y1))
    on_bnd = (
        (np.abs(nodes[:, 0] - x0) <= tol) | (np.abs(nodes[:, 0] - x1) <= tol)
        | (np.abs(nodes[:, 1] - y0) <= tol) | (np.abs(nodes[:, 1] - y1) <= tol)
    )
    return SpacePair(mesh, dofmap, mesh.triangles.copy(), nodes, np.flatnonzero(on_bnd))


def _element_data(space: SpacePair, rule: QuadRule) -> ElementData:
    mesh = space.mesh
    p = mesh.vertices[mesh.triangles]                       # (ne, 3, 2)
    J = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)  # columns
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    invJ = np.empty_like(J)
    invJ[:, 0, 0] = J[:, 1, 1] / det
    invJ[:, 0, 1] = -J[:, 0, 1] / det
    invJ[:, 1, 0] = -J[:, 1, 0] / det
    invJ[:, 1, 1] = J[:, 0, 0] / det

    ref_grad = p2_ref_gradients(rule.points)                # (nq, 6, 2)
    # physical gradient = J^{-T} reference gradient
    dphi = np.einsum("eji,qkj->eqki", invJ, ref_grad)
    dpsi = np.einsum("eji,kj->eki", invJ, _DLAMBDA)
    xy = np.einsum("qv,evd->eqd", rule.points, p)
    return ElementData(
        rule=rule,
        phi=p2_values(rule.points),
        psi=rule.points.copy(),
        dphi=dphi,
        dpsi=dpsi,
        wdet=np.abs(det)[:, None] * rule.weights[None, :],
        xq=xy[..., 0],
        yq=xy[..., 1],
    )


def _evaluate(f, x, y, t):
    vals = np.asarray(f(x, y, t), dtype=float)
    if np.any(~np.isfinite(vals)):
        raise EvaluationFailure("function returned non-finite values")
    return vals


def interpolate(space: SpacePair, f, t: float = 0.0, kind: str = "velocity") -> np.ndarray:
    """Nodal interpolant of ``f(x, y, t)``.

    For ``kind="velocity"`` ``f`` returns a pair (fx, fy) of arrays; for
    ``kind="pressure"`` a single array evaluated at the P1 nodes.
    """
    if kind == "velocity":
        x, y = space.nodes[:, 0], space.nodes[:, 1]
        vals = _evaluate(f, x, y, t)
        out = np.empty(space.n_velocity_dofs)
        out[: space.n_p2] = np.broadcast_to(vals[0], x.shape)
        out[space.n_p2:] = np.broadcast_to(vals[1], x.shape)
        return out
    if kind == "pressure":
        v = space.mesh.vertices
        vals = _evaluate(f, v[:, 0], v[:, 1], t)
        return np.array(np.broadcast_to(vals, (space.n_p1,)), dtype=float)
    raise InvalidArgument(f"unknown field kind {kind!r}")


def evaluate_at_quadrature(space: SpacePair, vec, degree: int = 5):
    """Values and gradients of a velocity field at quadrature points.

    Returns ``(vals, grads)`` with shapes (2, ne, nq) and (2, ne, nq, 2).
    """
    ed = space.element_data(degree)
    ux, uy = space.components(vec)
    out_v, out_g = [], []
    for comp in (ux, uy):
        loc = comp[space.velocity_dofmap]                   # (ne, 6)
        out_v.append(loc @ ed.phi.T)
        out_g.append(np.einsum("ek,eqkd->eqd", loc, ed.dphi))
    return np.stack(out_v), np.stack(out_g)
