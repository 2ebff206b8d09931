"""Fixed quadrature rules on triangles and segments."""
from __future__ import annotations

import numpy as np

# Dunavant 6-point rule, exact for bivariate polynomials of degree 4.
# Rows are barycentric coordinates; weights are normalized to sum to 1.
_D6_A1 = 0.445948490915965
_D6_A2 = 0.091576213509771
TRI_DEG4_BARY = np.array(
    [
        [1.0 - 2.0 * _D6_A1, _D6_A1, _D6_A1],
        [_D6_A1, 1.0 - 2.0 * _D6_A1, _D6_A1],
        [_D6_A1, _D6_A1, 1.0 - 2.0 * _D6_A1],
        [1.0 - 2.0 * _D6_A2, _D6_A2, _D6_A2],
        [_D6_A2, 1.0 - 2.0 * _D6_A2, _D6_A2],
        [_D6_A2, _D6_A2, 1.0 - 2.0 * _D6_A2],
    ]
)
TRI_DEG4_WEIGHTS = np.array(
    [
        0.223381589678011,
        0.223381589678011,
        0.223381589678011,
        0.109951743655322,
        0.109951743655322,
        0.109951743655322,
    ]
)

# Edge-midpoint rule, exact for degree 2.
TRI_DEG2_BARY = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
TRI_DEG2_WEIGHTS = np.array([1.0, 1.0, 1.0]) / 3.0

# Two-point Gauss-Legendre on [0, 1], exact for degree 3.
SEG_GAUSS2_T = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
SEG_GAUSS2_W = np.array([0.5, 0.5])


def triangle_points(tri: np.ndarray, bary: np.ndarray) -> np.ndarray:
    """Map barycentric rule nodes onto a physical triangle.

    tri: (3, 2) vertices; bary: (n, 3). Returns (n, 2) points.
    """
    return bary @ tri


def triangle_area(tri: np.ndarray) -> float:
    d1 = tri[1] - tri[0]
    d2 = tri[2] - tri[0]
    return 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])


def integrate_triangle(tri: np.ndarray, f, bary=TRI_DEG4_BARY, weights=TRI_DEG4_WEIGHTS) -> float:
    """Quadrature of a vectorized integrand f((n,2)) -> (n,) over one triangle."""
    pts = triangle_points(tri, bary)
    return triangle_area(tri) * float(weights @ np.asarray(f(pts), dtype=float))


def segment_points(p0: np.ndarray, p1: np.ndarray, t: np.ndarray = SEG_GAUSS2_T) -> np.ndarray:
    """Points p0 + t*(p1 - p0) for rule parameters t; returns (n, 2)."""
    return p0[None, :] + np.outer(t, p1 - p0)


def gauss_legendre_01(n: int):
    """n-point Gauss-Legendre nodes/weights on [0, 1] (used by oracles)."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w
