"""Quadrature rules on the reference triangle {(x, y): x, y >= 0, x + y <= 1}."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

REFERENCE_AREA = 0.5


@dataclass(frozen=True)
class QuadRule:
    """Points in barycentric coordinates and weights summing to the reference area.

    ``points[:, 0]`` is the weight of vertex (0, 0), ``points[:, 1]`` of
    (1, 0) and ``points[:, 2]`` of (0, 1).
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def xy(self) -> np.ndarray:
        """Reference (x, y) coordinates of the points, shape (nq, 2)."""
        return self.points[:, 1:3]

    def __len__(self) -> int:
        return len(self.weights)


def _from_xy(xy, weights, degree):
    xy = np.asarray(xy, dtype=float)
    bary = np.column_stack([1.0 - xy[:, 0] - xy[:, 1], xy[:, 0], xy[:, 1]])
    return QuadRule(bary, np.asarray(weights, dtype=float), degree)


@lru_cache(maxsize=None)
def strang_fix_7() -> QuadRule:
    """Seven-point rule, exact for polynomials of degree 5."""
    s15 = np.sqrt(15.0)
    a1 = (6.0 - s15) / 21.0
    a2 = (6.0 + s15) / 21.0
    w1 = (155.0 - s15) / 1200.0
    w2 = (155.0 + s15) / 1200.0
    bary = [
        (1 / 3, 1 / 3, 1 / 3),
        (a1, a1, 1 - 2 * a1), (a1, 1 - 2 * a1, a1), (1 - 2 * a1, a1, a1),
        (a2, a2, 1 - 2 * a2), (a2, 1 - 2 * a2, a2), (1 - 2 * a2, a2, a2),
    ]
    w = np.array([9.0 / 40.0] + [w1] * 3 + [w2] * 3) * REFERENCE_AREA
    return QuadRule(np.array(bary), w, 5)


@lru_cache(maxsize=None)
def collapsed_gauss(degree: int) -> QuadRule:
    """Tensor Gauss-Jacobi rule mapped onto the triangle by the Duffy collapse.

    Exact for total degree ``degree``. Used where a rule independent of the
    default seven-point rule is wanted (oracles, exactness checks).
    """
    n = degree // 2 + 1
    # x-direction carries the (1 - s) Jacobian factor of the collapse
    s, ws = roots_jacobi(n, 1.0, 0.0)
    r, wr = roots_jacobi(n, 0.0, 0.0)
    s = 0.5 * (s + 1.0)
    ws = ws / 4.0
    r = 0.5 * (r + 1.0)
    wr = wr / 2.0
    S, R = np.meshgrid(s, r, indexing="ij")
    WS, WR = np.meshgrid(ws, wr, indexing="ij")
    x = S.ravel()
    y = ((1.0 - S) * R).ravel()
    w = (WS * WR).ravel()
    return _from_xy(np.column_stack([x, y]), w, degree)


def get_rule(degree: int = 5) -> QuadRule:
    if degree < 0:
        raise ValueError(f"quadrature degree must be non-negative, got {degree}")
    if degree <= 5:
        return strang_fix_7()
    return collapsed_gauss(degree)


def monomial_integral(a: int, b: int) -> float:
    """Closed form of the integral of x**a * y**b over the reference triangle."""
    from math import factorial

    return factorial(a) * factorial(b) / factorial(a + b + 2)
