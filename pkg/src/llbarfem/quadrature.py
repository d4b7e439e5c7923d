"""Quadrature rules on the reference simplex in barycentric coordinates.

A rule is stored as barycentric points (nq, dim+1) and weights (nq,) summing
to one, so that ``measure * sum(w * f(points))`` integrates f over any
element.
"""

from dataclasses import dataclass
from math import sqrt

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@dataclass(frozen=True)
class QuadratureRule:
    """Barycentric points and normalised weights for one simplex dimension."""

    name: str
    degree: int
    points: np.ndarray
    weights: np.ndarray

    @property
    def n_points(self) -> int:
        return self.weights.size


def _segment_gauss(n: int, degree: int, name: str) -> QuadratureRule:
    x, w = roots_legendre(n)
    s = (x + 1.0) / 2.0
    return QuadratureRule(name, degree, np.column_stack([1.0 - s, s]), w / 2.0)


def _triangle_midpoints() -> QuadratureRule:
    points = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
    return QuadratureRule("triangle_midpoint", 2, points, np.full(3, 1.0 / 3.0))


def _triangle_six_point() -> QuadratureRule:
    # Symmetric degree-4 rule with two orbits of three points each.
    root = sqrt(38.0 - 44.0 * sqrt(2.0 / 5.0))
    a = (8.0 - sqrt(10.0) + root) / 18.0
    b = (8.0 - sqrt(10.0) - root) / 18.0
    wroot = sqrt(213125.0 - 53320.0 * sqrt(10.0))
    wa = (620.0 + wroot) / 3720.0
    wb = (620.0 - wroot) / 3720.0

    def orbit(c: float) -> list[list[float]]:
        return [[c, c, 1.0 - 2.0 * c], [c, 1.0 - 2.0 * c, c], [1.0 - 2.0 * c, c, c]]

    points = np.array(orbit(a) + orbit(b))
    weights = np.array([wa] * 3 + [wb] * 3)
    return QuadratureRule("triangle_six_point", 4, points, weights)


def collapsed_gauss_rule(dim: int, n: int) -> QuadratureRule:
    """Tensor Gauss rule collapsed onto the simplex, exact to degree 2n - 1.

    Uses Gauss-Jacobi points in the collapsed direction; any degree is
    available, which makes it a convenient independent oracle.
    """
    if dim == 1:
        return _segment_gauss(n, 2 * n - 1, f"gauss_{n}")
    xg, wg = roots_legendre(n)
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    s = (xg + 1.0) / 2.0
    t = (xj + 1.0) / 2.0
    # (x, y) = (t, (1 - t) s) on the triangle (0,0)-(1,0)-(0,1)
    tt, ss = np.meshgrid(t, s, indexing="ij")
    x = tt.ravel()
    y = ((1.0 - tt) * ss).ravel()
    weights = np.outer(wj, wg).ravel() / 4.0
    points = np.column_stack([1.0 - x - y, x, y])
    return QuadratureRule(f"collapsed_gauss_{n}", 2 * n - 1, points, weights / weights.sum())


def low_rule(dim: int) -> QuadratureRule:
    """Rule exact for polynomials of degree 2 (mass and stiffness assembly)."""
    if dim == 1:
        return _segment_gauss(2, 3, "gauss_2")
    return _triangle_midpoints()


def high_rule(dim: int) -> QuadratureRule:
    """Rule exact for polynomials of degree 4 (all nonlinear and energy integrands)."""
    if dim == 1:
        return _segment_gauss(3, 5, "gauss_3")
    return _triangle_six_point()
