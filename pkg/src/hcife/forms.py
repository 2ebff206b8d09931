"""Bilinear-form variants, problem data, and local matrix contributions.

Five method variants share the volume and consistency terms and differ in
the penalty weights on edges of cut cells:

    tag     value-jump weight      gradient stabilization
    main    gamma*rho^s/|e^s|      rho^s*|e^s| on the normal jump
    e2      gamma*rho^s/|e|        none
    e4      gamma*rho^s/|e^s|      none
    e5      gamma*rho^s/|e^s|      gamma_F*rho^s*|e| on the normal jump
    e3      gamma*rho^s/|e|        gamma_F*rho^s*|e| on the full gradient jump

Sub-edge traces use each adjacent cell's branch on the sub-edge's side;
an empty sub-edge contributes nothing (its weight is never formed).
Every edge integrand is a polynomial of degree <= 2 along the edge, so
two-point Gauss per sub-edge is exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ParameterError
from .fields import cell_trace
from .geometry import (
    Classification,
    CircleInterface,
    CutTopology,
    Side,
    integrate_cut_region,
    split_segment,
)
from .mesh import TriMesh
from .quadrature import SEG_GAUSS2_T, SEG_GAUSS2_W, TRI_DEG4_BARY, TRI_DEG4_WEIGHTS
from .basis import bary_coords

VARIANT_TAGS = ("main", "e2", "e3", "e4", "e5")


@dataclass(frozen=True)
class MethodVariant:
    """Penalty configuration of one bilinear-form variant."""

    tag: str
    gamma: float = 10.0
    gamma_f: float = 10.0

    def __post_init__(self):
        if self.tag not in VARIANT_TAGS:
            raise ParameterError(f"unknown method variant {self.tag!r}")
        if self.gamma <= 0.0:
            raise ParameterError("gamma must be positive")
        if self.tag in ("e3", "e5") and self.gamma_f <= 0.0:
            raise ParameterError("gamma_f must be positive for this variant")

    @property
    def per_subedge_value_weight(self) -> bool:
        """True when the value-jump penalty scales with 1/|e^s|."""
        return self.tag in ("main", "e4", "e5")


@dataclass(frozen=True)
class ProblemSpec:
    """Interface problem data: coefficients, exact solution, load.

    u, grad_u and f are vectorized side-resolved callables over (n, 2)
    point arrays; f_const short-circuits exact constant-load integration.
    dirichlet supplies the boundary trace.
    """

    rho_minus: float
    rho_plus: float
    curve: CircleInterface
    u: Callable
    grad_u: Callable
    f: Callable
    dirichlet: Callable
    f_const: float | None = None
    name: str = ""

    def __post_init__(self):
        if self.rho_minus <= 0.0 or self.rho_plus <= 0.0:
            raise ParameterError("diffusion coefficients must be positive")

    def rho(self, side: Side) -> float:
        return self.rho_minus if side is Side.MINUS else self.rho_plus


def exact_solution_case1(rho_minus: float, rho_plus: float, alpha: float = 2.0,
                         r0: float = 1.0 / 3.0, center=(0.0, 0.0),
                         inclusion: Side = Side.MINUS) -> ProblemSpec:
    """Radial benchmark: u = R^alpha / rho inside the circular inclusion.

    The outside branch carries the constant r0^alpha (1/rho_in - 1/rho_out)
    so that u is continuous across R = r0 while the flux rho d_R u matches
    exactly; the load is -alpha^2 R^(alpha-2), i.e. the constant -4 for
    alpha = 2.  Boundary data is the trace of the outer branch (nonzero).
    inclusion selects which side occupies the disk.
    """
    if rho_minus <= 0.0 or rho_plus <= 0.0:
        raise ParameterError("diffusion coefficients must be positive")
    curve = CircleInterface(tuple(center), r0, interior=inclusion)
    rho = {Side.MINUS: rho_minus, Side.PLUS: rho_plus}
    inner, outer = inclusion, inclusion.other
    shift = r0**alpha * (1.0 / rho[inner] - 1.0 / rho[outer])
    c = np.asarray(center, dtype=float)

    def radius(pts):
        return np.linalg.norm(np.atleast_2d(pts) - c, axis=1)

    def u(pts, side: Side):
        r = radius(pts)
        if side is inner:
            return r**alpha / rho[inner]
        return r**alpha / rho[outer] + shift

    def grad_u(pts, side: Side):
        pts = np.atleast_2d(pts)
        r = radius(pts)
        scale = alpha * r ** (alpha - 2.0) / rho[side]
        return scale[:, None] * (pts - c)

    def f(pts, side: Side):
        r = radius(pts)
        return -(alpha**2) * r ** (alpha - 2.0)

    return ProblemSpec(
        rho_minus=rho_minus,
        rho_plus=rho_plus,
        curve=curve,
        u=u,
        grad_u=grad_u,
        f=f,
        dirichlet=lambda pts: u(pts, outer),
        f_const=-4.0 if alpha == 2.0 else None,
        name=f"radial-r0={r0}-alpha={alpha}-inclusion={inclusion.name.lower()}",
    )


def linear_solution_spec(curve: CircleInterface, rho: float = 1.0,
                         slope=(1.0, 0.0), offset: float = 0.0) -> ProblemSpec:
    """Manufactured globally linear solution (patch test): f = 0."""
    a = np.asarray(slope, dtype=float)

    def u(pts, side: Side):
        return np.atleast_2d(pts) @ a + offset

    return ProblemSpec(
        rho_minus=rho,
        rho_plus=rho,
        curve=curve,
        u=u,
        grad_u=lambda pts, side: np.broadcast_to(a, (len(np.atleast_2d(pts)), 2)).copy(),
        f=lambda pts, side: np.zeros(len(np.atleast_2d(pts))),
        dirichlet=lambda pts: u(pts, Side.PLUS),
        f_const=0.0,
        name="linear-patch",
    )


def check_interface_compatibility(spec: ProblemSpec, n_samples: int = 32) -> tuple:
    """Max value/flux mismatch of the exact solution across the interface."""
    thetas = np.linspace(0.0, 2.0 * np.pi, n_samples, endpoint=False)
    pts = np.array([spec.curve.point_at(t) for t in thetas])
    du = np.abs(spec.u(pts, Side.MINUS) - spec.u(pts, Side.PLUS))
    normal = (pts - np.asarray(spec.curve.center)) / spec.curve.radius
    fm = spec.rho_minus * np.einsum("ij,ij->i", spec.grad_u(pts, Side.MINUS), normal)
    fp = spec.rho_plus * np.einsum("ij,ij->i", spec.grad_u(pts, Side.PLUS), normal)
    return float(du.max()), float(np.abs(fm - fp).max())


# -- local contributions ------------------------------------------------------


def volume_term(mesh: TriMesh, topo: CutTopology, bases: dict, spec: ProblemSpec,
                cell: int) -> np.ndarray:
    """Local stiffness block: gradients are constant per side, so the
    side areas make the integral exact."""
    cls = topo.classification(cell)
    if cls is Classification.CUT:
        b = bases[int(cell)]
        rec = topo.cuts[int(cell)]
        k = spec.rho_minus * rec.area_minus * (b.grad_minus @ b.grad_minus.T)
        k += spec.rho_plus * rec.area_plus * (b.grad_plus @ b.grad_plus.T)
        return k
    side = Side.MINUS if cls is Classification.MINUS else Side.PLUS
    g = mesh.hat_gradients[cell]
    return spec.rho(side) * float(mesh.cell_areas[cell]) * (g @ g.T)


def load_vector(mesh: TriMesh, topo: CutTopology, bases: dict, spec: ProblemSpec,
                cell: int) -> np.ndarray:
    """Local load: exact for constant f via side areas and centroids,
    degree-4 plus arc-refined quadrature otherwise."""
    tri = mesh.cell_vertices(cell)
    cls = topo.classification(cell)
    if cls is not Classification.CUT:
        side = Side.MINUS if cls is Classification.MINUS else Side.PLUS
        area = float(mesh.cell_areas[cell])
        if spec.f_const is not None:
            return np.full(3, spec.f_const * area / 3.0)
        pts = TRI_DEG4_BARY @ tri
        fv = np.asarray(spec.f(pts, side), dtype=float)
        return area * (TRI_DEG4_WEIGHTS * fv) @ TRI_DEG4_BARY

    rec = topo.cuts[int(cell)]
    b = bases[int(cell)]
    out = np.zeros(3)
    for side in (Side.MINUS, Side.PLUS):
        area = rec.area(side)
        if area <= 0.0:
            continue
        coeff = b.coeff(side)
        if spec.f_const is not None:
            w_at_centroid = coeff @ bary_coords(tri, rec.centroid(side))[0]
            out += spec.f_const * area * w_at_centroid
        else:
            for i in range(3):
                def fi(pts, i=i, side=side):
                    lam = bary_coords(tri, pts)
                    return np.asarray(spec.f(pts, side)) * (lam @ coeff[i])
                out[i] += integrate_cut_region(tri, rec, side, fi, topo.curve)
    return out


def _outward_normal(mesh: TriMesh, cell: int, a_pt: np.ndarray, b_pt: np.ndarray):
    d = b_pt - a_pt
    n = np.array([d[1], -d[0]]) / np.linalg.norm(d)
    centroid = mesh.cell_vertices(cell).mean(axis=0)
    if float(n @ (centroid - a_pt)) > 0.0:
        n = -n
    return n


def _union_dofs(mesh: TriMesh, c0: int, c1: int):
    v0 = mesh.cells[c0]
    v1 = mesh.cells[c1]
    union = list(v0) + [v for v in v1 if v not in set(v0)]
    pos1 = [union.index(v) for v in v1]
    return np.asarray(union), [0, 1, 2], pos1


def edge_terms(mesh: TriMesh, topo: CutTopology, bases: dict, spec: ProblemSpec,
               variant: MethodVariant, edge: int):
    """Local edge block over the union DOFs of the two adjacent cells.

    Assembles, per sub-edge e^s: the symmetric consistency terms, the
    value-jump penalty and the variant's gradient stabilization.  The
    jump orientation is fixed by the lower cell index; every term is
    orientation invariant.
    """
    c0, c1 = (int(v) for v in mesh.edge_cells[edge])
    if c1 < 0:
        raise ParameterError(f"edge {edge} lies on the outer boundary")
    a_idx, b_idx = mesh.edges[edge]
    a_pt, b_pt = mesh.vertices[a_idx], mesh.vertices[b_idx]
    len_e = float(np.linalg.norm(b_pt - a_pt))
    n1 = _outward_normal(mesh, c0, a_pt, b_pt)

    splits = topo.edge_splits.get(int(edge))
    if splits is None:
        splits = split_segment(topo.curve, a_pt, b_pt, topo.eps)

    union, pos0, pos1 = _union_dofs(mesh, c0, c1)
    nd = len(union)
    k = np.zeros((nd, nd))
    tri0 = mesh.cell_vertices(c0)
    tri1 = mesh.cell_vertices(c1)

    for side, t0, t1 in splits:
        len_s = (t1 - t0) * len_e
        if len_s <= 0.0:
            continue
        rho_s = spec.rho(side)
        t_g = t0 + (t1 - t0) * SEG_GAUSS2_T
        x_g = a_pt[None, :] + np.outer(t_g, b_pt - a_pt)
        w_g = len_s * SEG_GAUSS2_W

        _, coeff0, grad0 = cell_trace(mesh, topo, bases, c0, side)
        _, coeff1, grad1 = cell_trace(mesh, topo, bases, c1, side)
        vals0 = bary_coords(tri0, x_g) @ coeff0.T  # (2, 3)
        vals1 = bary_coords(tri1, x_g) @ coeff1.T

        v0u = np.zeros((2, nd))
        v1u = np.zeros((2, nd))
        v0u[:, pos0] = vals0
        v1u[:, pos1] = vals1
        g0u = np.zeros((nd, 2))
        g1u = np.zeros((nd, 2))
        g0u[pos0] = grad0
        g1u[pos1] = grad1

        jump = v0u - v1u  # (2, nd), scalar jump relative to n1
        int_jump = w_g @ jump  # (nd,)
        avg_flux = 0.5 * rho_s * (g0u + g1u) @ n1  # (nd,)
        k -= np.outer(avg_flux, int_jump) + np.outer(int_jump, avg_flux)

        den = len_s if variant.per_subedge_value_weight else len_e
        k += (variant.gamma * rho_s / den) * (jump.T * w_g) @ jump

        if variant.tag == "main":
            fj = (g0u - g1u) @ n1
            k += rho_s * len_s * len_s * np.outer(fj, fj)
        elif variant.tag == "e5":
            fj = (g0u - g1u) @ n1
            k += variant.gamma_f * rho_s * len_e * len_s * np.outer(fj, fj)
        elif variant.tag == "e3":
            dg = g0u - g1u
            k += variant.gamma_f * rho_s * len_e * len_s * (dg @ dg.T)
    return union, k
