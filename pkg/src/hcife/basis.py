"""Coupled piecewise-linear basis on cut cells.

On a cut cell the three nodal basis functions are linear on each side of
the interface, matched so that at the arc midpoint x0 the value and the
tangential derivative are continuous and the diffusive flux rho * d_n is
conserved.  In barycentric representation w_i^s = sum_j a_{i,j}^s
lambda_j this yields, per basis function, a 6x6 linear system over the
six coefficients.  A selectable "two-point" alternative replaces the two
matching conditions at x0 by value continuity at the two points where
the interface crosses the cell boundary, keeping the flux condition.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BasisConstructionError, DomainError, ParameterError
from .geometry import Classification, CutElement, Side

VARIANT_MIDPOINT = "midpoint-tangent"
VARIANT_TWOPOINT = "two-point"


def bary_transform(tri: np.ndarray) -> np.ndarray:
    """Affine coefficients C with lambda_j(x) = C[0,j] + C[1,j]x + C[2,j]y."""
    m = np.column_stack([np.ones(3), np.asarray(tri, dtype=float)])
    return np.linalg.inv(m)


def bary_coords(tri: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of points, shape (n, 3)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    c = bary_transform(tri)
    return np.column_stack([np.ones(len(pts)), pts]) @ c


def bary_gradients(tri: np.ndarray) -> np.ndarray:
    """Constant gradients of the barycentric coordinates, shape (3, 2)."""
    return bary_transform(tri)[1:, :].T


@dataclass(frozen=True)
class UpsilonMap:
    """Linear extension across the interface frame at x0.

    Maps a PLUS-side linear function to the MINUS side preserving the
    value and tangential slope at x0 while scaling the normal slope by
    rho_plus / rho_minus (flux conservation).
    """

    x0: np.ndarray
    n0: np.ndarray
    t0: np.ndarray
    rho_minus: float
    rho_plus: float

    def __post_init__(self):
        if self.rho_minus <= 0.0 or self.rho_plus <= 0.0:
            raise ParameterError("diffusion coefficients must be positive")


def upsilon_apply(m: UpsilonMap, coeffs) -> np.ndarray:
    """Apply the extension map to an affine function (c0, cx, cy)."""
    c0, cx, cy = (float(v) for v in coeffs)
    g = np.array([cx, cy])
    gt = float(g @ m.t0)
    gn = float(g @ m.n0) * (m.rho_plus / m.rho_minus)
    g_new = gt * m.t0 + gn * m.n0
    value_x0 = c0 + cx * m.x0[0] + cy * m.x0[1]
    return np.array([value_x0 - float(g_new @ m.x0), g_new[0], g_new[1]])


@dataclass(frozen=True)
class IFEBasis:
    """Per-cell coupled basis: coefficients and constant side gradients.

    coeff_minus/plus[i, j] is the weight of lambda_j in w_i on that side;
    grad_minus/plus[i] is the constant gradient of w_i there.
    """

    cell: int
    tri: np.ndarray
    variant: str
    coeff_minus: np.ndarray
    coeff_plus: np.ndarray
    grad_minus: np.ndarray
    grad_plus: np.ndarray

    def coeff(self, side: Side) -> np.ndarray:
        return self.coeff_minus if side is Side.MINUS else self.coeff_plus

    def grad(self, side: Side) -> np.ndarray:
        return self.grad_minus if side is Side.MINUS else self.grad_plus


def build_local_basis(tri: np.ndarray, cut: CutElement, rho_minus: float,
                      rho_plus: float, variant: str = VARIANT_MIDPOINT,
                      cond_limit: float = 1e12) -> IFEBasis:
    """Solve the 6x6 coefficient system of one cut cell.

    Row layout: three nodal conditions w_i(x_j) = delta_ij (each imposed
    on the side holding the vertex, on-curve vertices on MINUS), value
    and tangential-derivative continuity at x0, and flux conservation
    rho^+ d_n w^+ = rho^- d_n w^- at x0.  The two-point variant swaps the
    first two matching rows for value continuity at the boundary
    crossings.  Unknown order: (a^+_1..3, a^-_1..3); the same matrix
    serves all three right-hand sides.
    """
    if rho_minus <= 0.0 or rho_plus <= 0.0:
        raise ParameterError("diffusion coefficients must be positive")
    if variant not in (VARIANT_MIDPOINT, VARIANT_TWOPOINT):
        raise ParameterError(f"unknown basis variant {variant!r}")
    if cut.classification is not Classification.CUT:
        raise BasisConstructionError("cell is not cut", cut.cell, cut)

    tri = np.asarray(tri, dtype=float)
    grads = bary_gradients(tri)  # (3, 2)
    a = np.zeros((6, 6))
    for j, side in enumerate(cut.vertex_sides):
        a[j, j if side is Side.PLUS else 3 + j] = 1.0

    dn = grads @ cut.n0
    if variant == VARIANT_MIDPOINT:
        lam0 = bary_coords(tri, cut.x0)[0]
        dt = grads @ cut.t0
        a[3, :3], a[3, 3:] = lam0, -lam0
        a[4, :3], a[4, 3:] = dt, -dt
    else:
        lam1 = bary_coords(tri, cut.p1)[0]
        lam2 = bary_coords(tri, cut.p2)[0]
        a[3, :3], a[3, 3:] = lam1, -lam1
        a[4, :3], a[4, 3:] = lam2, -lam2
    a[5, :3], a[5, 3:] = rho_plus * dn, -rho_minus * dn

    rhs = np.zeros((6, 3))
    rhs[:3, :] = np.eye(3)

    # Row equilibration before the conditioning gate and solve; the gate
    # turns genuinely degenerate cut configurations into explicit errors.
    scale = np.abs(a).max(axis=1)
    if np.any(scale == 0.0):
        raise BasisConstructionError("singular basis system", cut.cell, cut)
    a_eq = a / scale[:, None]
    cond = np.linalg.cond(a_eq)
    if not np.isfinite(cond) or cond > cond_limit:
        raise BasisConstructionError(
            f"basis system condition estimate {cond:.3e} exceeds {cond_limit:.1e}",
            cut.cell, cut,
        )
    try:
        x = np.linalg.solve(a_eq, rhs / scale[:, None])
    except np.linalg.LinAlgError as exc:
        raise BasisConstructionError(f"basis solve failed: {exc}", cut.cell, cut)

    coeff_plus = x[:3, :].T.copy()  # [i, j]
    coeff_minus = x[3:, :].T.copy()
    return IFEBasis(
        cell=cut.cell,
        tri=tri,
        variant=variant,
        coeff_minus=coeff_minus,
        coeff_plus=coeff_plus,
        grad_minus=coeff_minus @ grads,
        grad_plus=coeff_plus @ grads,
    )


def eval_basis(basis: IFEBasis, x, side: Side, tol: float = 1e-9):
    """Values and gradients of the three basis functions at x on a side.

    tol is the allowed barycentric slack for points on the cell boundary.
    """
    lam = bary_coords(basis.tri, x)[0]
    if lam.min() < -tol or lam.max() > 1.0 + tol:
        raise DomainError(f"point {np.asarray(x)} outside cell {basis.cell}")
    return basis.coeff(side) @ lam, basis.grad(side).copy()


def standard_basis(tri: np.ndarray, cell: int = -1) -> IFEBasis:
    """Uncut-cell view of the same record: plain hat functions."""
    tri = np.asarray(tri, dtype=float)
    eye = np.eye(3)
    grads = bary_gradients(tri)
    return IFEBasis(
        cell=cell,
        tri=tri,
        variant="standard",
        coeff_minus=eye,
        coeff_plus=eye,
        grad_minus=grads,
        grad_plus=grads,
    )
