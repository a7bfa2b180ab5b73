"""Structured triangulations of rectangles."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SIDES = ("bottom", "right", "top", "left")


@dataclass(frozen=True)
class Mesh:
    """Conforming triangulation of ``domain_box = (x0, x1, y0, y1)``.

    Triangles are vertex triples in counter-clockwise order. Boundary edges
    are vertex pairs; ``boundary_tags[i]`` indexes :data:`SIDES`.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    domain_box: tuple[float, float, float, float]
    nx: int = 0
    ny: int = 0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def area(self) -> float:
        x0, x1, y0, y1 = self.domain_box
        return (x1 - x0) * (y1 - y0)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def h(self) -> float:
        """Largest triangle diameter."""
        p = self.vertices[self.triangles]
        lengths = [np.linalg.norm(p[:, i] - p[:, (i + 1) % 3], axis=1) for i in range(3)]
        return float(np.max(lengths))

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Unique edges and the triangle-to-edge map.

        Returns ``(edges, tri_edges)`` where ``edges`` is (n_edges, 2) with
        sorted vertex pairs and ``tri_edges[t, k]`` is the edge joining local
        vertices ``k`` and ``(k + 1) % 3``.
        """
        if "edges" not in self._cache:
            local = np.stack(
                [self.triangles[:, [0, 1]], self.triangles[:, [1, 2]], self.triangles[:, [2, 0]]],
                axis=1,
            )
            flat = np.sort(local.reshape(-1, 2), axis=1)
            edges, inverse = np.unique(flat, axis=0, return_inverse=True)
            self._cache["edges"] = (edges, inverse.reshape(-1, 3))
        return self._cache["edges"]

    def check(self) -> None:
        """Raise ``ValueError`` if the mesh violates its invariants."""
        areas = self.signed_areas()
        if np.any(areas <= 0.0):
            raise ValueError("mesh has non-positive triangle areas")
        edges, tri_edges = self.edges()
        counts = np.bincount(tri_edges.ravel(), minlength=len(edges))
        if np.any((counts < 1) | (counts > 2)):
            raise ValueError("mesh is not edge-to-edge conforming")
        n_boundary = int(np.sum(counts == 1))
        if n_boundary != len(self.boundary_edges):
            raise ValueError("boundary edge list disagrees with edge multiplicities")
        if abs(areas.sum() - self.area) > 1e-12 * self.area:
            raise ValueError("triangle areas do not sum to the domain area")

    def dump(self, path) -> None:
        """Write plain-text vertex and triangle lists (debugging aid)."""
        with open(path, "w") as fh:
            fh.write(f"{self.n_vertices} {self.n_triangles}\n")
            for x, y in self.vertices:
                fh.write(f"{x:.17g} {y:.17g}\n")
            for a, b, c in self.triangles:
                fh.write(f"{a} {b} {c}\n")


def build_rect_mesh(box, nx: int, ny: int) -> Mesh:
    """Uniform ``nx`` by ``ny`` grid of cells, each cut along its
    lower-left to upper-right diagonal.

    Vertices are numbered row by row, i.e. lexicographically by (y, x).
    """
    x0, x1, y0, y1 = (float(v) for v in box)
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise ValueError(f"cell counts must be positive integers, got nx={nx}, ny={ny}")
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate box {box}")
    nx, ny = int(nx), int(ny)

    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    v00 = j * (nx + 1) + i
    v10 = v00 + 1
    v01 = v00 + nx + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    bottom = np.column_stack([np.arange(nx), np.arange(1, nx + 1)])
    top_row = ny * (nx + 1)
    top = np.column_stack([top_row + np.arange(nx), top_row + np.arange(1, nx + 1)])
    left = np.column_stack([np.arange(ny) * (nx + 1), np.arange(1, ny + 1) * (nx + 1)])
    right = left + nx
    boundary_edges = np.vstack([bottom, right, top, left])
    tags = np.repeat(np.arange(4), [nx, ny, nx, ny])

    return Mesh(vertices, triangles, boundary_edges, tags, (x0, x1, y0, y1), nx, ny)
