"""Error measures, diagnostic mesh-dependent norms, and convergence orders.

The max-norm errors follow the evaluation-point rule of the study: on an
uncut cell, the three vertices plus the centroid; on a cut cell, the
three vertices plus the two edge/interface crossing points.  At crossing
points both branches are evaluated and the larger deviation is kept.
The interface-flux error samples the crossing points and the arc
midpoint of every cut cell.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assembly import SolveReport
from .basis import bary_coords
from .errors import ParameterError
from .fields import DiscreteField, cell_trace
from .forms import ProblemSpec
from .geometry import Classification, CutTopology, Side, integrate_cut_region
from .mesh import TriMesh
from .quadrature import SEG_GAUSS2_T, SEG_GAUSS2_W, TRI_DEG4_BARY, TRI_DEG4_WEIGHTS


@dataclass
class ErrorReport:
    """All error measures of one solve, plus run metadata."""

    level: int
    h: float
    dofs: int
    e0: float
    einf: float
    e1: float
    e1inf: float
    ebar1: float
    ebar1inf: float
    etilde1inf: float
    en_inf: float
    solve: SolveReport | None = None


def _side_groups(mesh: TriMesh, topo: CutTopology):
    for side, cval in ((Side.MINUS, Classification.MINUS), (Side.PLUS, Classification.PLUS)):
        sel = np.nonzero(topo.cell_class == cval)[0]
        if len(sel):
            yield side, sel


def l2_error(mesh: TriMesh, topo: CutTopology, bases: dict, spec: ProblemSpec,
             u_h: np.ndarray) -> float:
    """L2 norm of u - u_h, exact on straight pieces to quadrature degree 4."""
    field = DiscreteField(mesh, topo, bases, u_h)
    total = 0.0
    for side, sel in _side_groups(mesh, topo):
        tri = mesh.vertices[mesh.cells[sel]]
        pts = np.einsum("qk,nkd->nqd", TRI_DEG4_BARY, tri)
        uv = np.asarray(spec.u(pts.reshape(-1, 2), side)).reshape(len(sel), -1)
        uh = u_h[mesh.cells[sel]] @ TRI_DEG4_BARY.T
        err2 = (uv - uh) ** 2
        total += float(mesh.cell_areas[sel] @ (err2 @ TRI_DEG4_WEIGHTS))
    for c in topo.cut_cells:
        c = int(c)
        tri = mesh.cell_vertices(c)
        rec = topo.cuts[c]
        for side in (Side.MINUS, Side.PLUS):
            if rec.area(side) <= 0.0:
                continue

            def integrand(p, side=side):
                return (np.asarray(spec.u(p, side)) - field.cell_values(c, p, side)) ** 2

            total += integrate_cut_region(tri, rec, side, integrand, topo.curve)
    return math.sqrt(max(total, 0.0))


def energy_errors(mesh: TriMesh, topo: CutTopology, bases: dict, spec: ProblemSpec,
                  u_h: np.ndarray):
    """(e1, ebar1): gradient L2 errors weighted by sqrt(rho) and rho."""
    field = DiscreteField(mesh, topo, bases, u_h)
    acc1 = 0.0
    acc2 = 0.0
    for side, sel in _side_groups(mesh, topo):
        rho = spec.rho(side)
        tri = mesh.vertices[mesh.cells[sel]]
        pts = np.einsum("qk,nkd->nqd", TRI_DEG4_BARY, tri)
        gu = np.asarray(spec.grad_u(pts.reshape(-1, 2), side)).reshape(len(sel), -1, 2)
        gh = np.einsum("nk,nkd->nd", u_h[mesh.cells[sel]], mesh.hat_gradients[sel])
        diff2 = ((gu - gh[:, None, :]) ** 2).sum(axis=2)
        cell_int = mesh.cell_areas[sel] * (diff2 @ TRI_DEG4_WEIGHTS)
        s = float(cell_int.sum())
        acc1 += rho * s
        acc2 += rho * rho * s
    for c in topo.cut_cells:
        c = int(c)
        tri = mesh.cell_vertices(c)
        rec = topo.cuts[c]
        for side in (Side.MINUS, Side.PLUS):
            if rec.area(side) <= 0.0:
                continue
            rho = spec.rho(side)
            gh = field.cell_gradient(c, side)

            def integrand(p, side=side, gh=gh):
                d = np.asarray(spec.grad_u(p, side)) - gh
                return (d * d).sum(axis=1)

            s = integrate_cut_region(tri, rec, side, integrand, topo.curve)
            acc1 += rho * s
            acc2 += rho * rho * s
    return math.sqrt(max(acc1, 0.0)), math.sqrt(max(acc2, 0.0))


def maxnorm_errors(mesh: TriMesh, topo: CutTopology, bases: dict, spec: ProblemSpec,
                   u_h: np.ndarray):
    """(einf, e1inf, ebar1inf, etilde1inf, en_inf) over the evaluation sets."""
    field = DiscreteField(mesh, topo, bases, u_h)
    einf = e1inf = ebar1inf = etilde = en_inf = 0.0

    for side, sel in _side_groups(mesh, topo):
        rho = spec.rho(side)
        cells_v = mesh.cells[sel]
        tri = mesh.vertices[cells_v]
        centroid = tri.mean(axis=1)
        pts = np.concatenate([tri, centroid[:, None, :]], axis=1)  # (n, 4, 2)
        flat = pts.reshape(-1, 2)
        uv = np.asarray(spec.u(flat, side)).reshape(len(sel), 4)
        uh = np.concatenate(
            [u_h[cells_v], u_h[cells_v].mean(axis=1, keepdims=True)], axis=1
        )
        einf = max(einf, float(np.abs(uv - uh).max(initial=0.0)))
        gu = np.asarray(spec.grad_u(flat, side)).reshape(len(sel), 4, 2)
        gh = np.einsum("nk,nkd->nd", u_h[cells_v], mesh.hat_gradients[sel])
        gerr = np.linalg.norm(gu - gh[:, None, :], axis=2).max(initial=0.0)
        e1inf = max(e1inf, math.sqrt(rho) * float(gerr))
        ebar1inf = max(ebar1inf, rho * float(gerr))
        etilde = max(etilde, rho * float(gerr))

    for c in topo.cut_cells:
        c = int(c)
        rec = topo.cuts[c]
        tri = mesh.cell_vertices(c)
        for k in range(3):
            side = rec.vertex_sides[k]
            x = tri[k]
            uval = float(np.asarray(spec.u(x[None, :], side))[0])
            uhval = float(field.cell_values(c, x[None, :], side)[0])
            einf = max(einf, abs(uval - uhval))
            gd = float(np.linalg.norm(
                np.asarray(spec.grad_u(x[None, :], side))[0] - field.cell_gradient(c, side)
            ))
            rho = spec.rho(side)
            e1inf = max(e1inf, math.sqrt(rho) * gd)
            ebar1inf = max(ebar1inf, rho * gd)
        for x in (rec.p1, rec.p2):
            for side in (Side.MINUS, Side.PLUS):
                rho = spec.rho(side)
                uval = float(np.asarray(spec.u(x[None, :], side))[0])
                uhval = float(field.cell_values(c, x[None, :], side)[0])
                einf = max(einf, abs(uval - uhval))
                gd = float(np.linalg.norm(
                    np.asarray(spec.grad_u(x[None, :], side))[0] - field.cell_gradient(c, side)
                ))
                e1inf = max(e1inf, math.sqrt(rho) * gd)
                ebar1inf = max(ebar1inf, rho * gd)
        # Interface flux error at the crossings and the arc midpoint.
        cc = np.asarray(topo.curve.center)
        for x in (rec.p1, rec.p2, rec.x0):
            nvec = (x - cc) / np.linalg.norm(x - cc)
            for side in (Side.MINUS, Side.PLUS):
                rho = spec.rho(side)
                gd = np.asarray(spec.grad_u(x[None, :], side))[0] - field.cell_gradient(c, side)
                en_inf = max(en_inf, rho * abs(float(gd @ nvec)))
    return einf, e1inf, ebar1inf, etilde, en_inf


def _edge_jump_terms(mesh: TriMesh, topo: CutTopology, bases: dict,
                     rho_minus: float, rho_plus: float, v: np.ndarray,
                     with_average: bool):
    """Edge sums of the V norm; optionally the flux-average term of W."""
    jump_sq = 0.0
    flux_sq = 0.0
    avg_sq = 0.0
    rho = {Side.MINUS: rho_minus, Side.PLUS: rho_plus}
    for e in topo.gamma_edges:
        c0, c1 = (int(x) for x in mesh.edge_cells[e])
        if c1 < 0:
            continue
        a_idx, b_idx = mesh.edges[e]
        a_pt, b_pt = mesh.vertices[a_idx], mesh.vertices[b_idx]
        len_e = float(np.linalg.norm(b_pt - a_pt))
        d = b_pt - a_pt
        n1 = np.array([d[1], -d[0]]) / len_e
        for side, t0, t1 in topo.edge_splits[int(e)]:
            len_s = (t1 - t0) * len_e
            if len_s <= 0.0:
                continue
            t_g = t0 + (t1 - t0) * SEG_GAUSS2_T
            x_g = a_pt[None, :] + np.outer(t_g, d)
            w_g = len_s * SEG_GAUSS2_W
            verts0, coeff0, grad0 = cell_trace(mesh, topo, bases, c0, side)
            verts1, coeff1, grad1 = cell_trace(mesh, topo, bases, c1, side)
            vals0 = (bary_coords(mesh.cell_vertices(c0), x_g) @ coeff0.T) @ v[verts0]
            vals1 = (bary_coords(mesh.cell_vertices(c1), x_g) @ coeff1.T) @ v[verts1]
            jump_sq += rho[side] / len_s * float(w_g @ (vals0 - vals1) ** 2)
            g0 = v[verts0] @ grad0
            g1 = v[verts1] @ grad1
            fj = float((g0 - g1) @ n1)
            flux_sq += rho[side] * len_s * len_s * fj * fj
            if with_average:
                av = 0.5 * float((g0 + g1) @ n1)
                avg_sq += rho[side] * len_s * len_s * av * av
    return jump_sq, flux_sq, avg_sq


def _grad_energy(mesh: TriMesh, topo: CutTopology, bases: dict,
                 rho_minus: float, rho_plus: float, v: np.ndarray) -> float:
    field = DiscreteField(mesh, topo, bases, v)
    rho = {Side.MINUS: rho_minus, Side.PLUS: rho_plus}
    total = 0.0
    for side, sel in _side_groups(mesh, topo):
        gh = np.einsum("nk,nkd->nd", v[mesh.cells[sel]], mesh.hat_gradients[sel])
        total += rho[side] * float(mesh.cell_areas[sel] @ (gh * gh).sum(axis=1))
    for c in topo.cut_cells:
        rec = topo.cuts[int(c)]
        for side in (Side.MINUS, Side.PLUS):
            area = rec.area(side)
            if area <= 0.0:
                continue
            g = field.cell_gradient(int(c), side)
            total += rho[side] * area * float(g @ g)
    return total


def v_norm(mesh: TriMesh, topo: CutTopology, bases: dict, rho_minus: float,
           rho_plus: float, v: np.ndarray) -> float:
    """Energy norm: weighted broken gradient, value jumps, flux jumps."""
    grad = _grad_energy(mesh, topo, bases, rho_minus, rho_plus, v)
    jump_sq, flux_sq, _ = _edge_jump_terms(mesh, topo, bases, rho_minus, rho_plus, v, False)
    return math.sqrt(grad + jump_sq + flux_sq)


def w_norm(mesh: TriMesh, topo: CutTopology, bases: dict, rho_minus: float,
           rho_plus: float, v: np.ndarray) -> float:
    """Augmented norm: the energy norm plus weighted flux averages."""
    grad = _grad_energy(mesh, topo, bases, rho_minus, rho_plus, v)
    jump_sq, flux_sq, avg_sq = _edge_jump_terms(mesh, topo, bases, rho_minus, rho_plus, v, True)
    return math.sqrt(grad + jump_sq + flux_sq + avg_sq)


def eoc(errors, hs) -> np.ndarray:
    """Estimated orders of convergence between consecutive levels.

    Nonpositive error entries yield NaN markers instead of failing.
    """
    errors = np.asarray(errors, dtype=float)
    hs = np.asarray(hs, dtype=float)
    if len(errors) != len(hs):
        raise ParameterError("errors and mesh sizes must have equal length")
    if np.any(hs <= 0.0) or np.any(np.diff(hs) >= 0.0):
        raise ParameterError("mesh sizes must be positive and strictly decreasing")
    out = np.full(max(len(errors) - 1, 0), np.nan)
    for i in range(len(out)):
        if errors[i] > 0.0 and errors[i + 1] > 0.0:
            out[i] = math.log(errors[i + 1] / errors[i]) / math.log(hs[i + 1] / hs[i])
    return out


def compute_error_report(mesh: TriMesh, topo: CutTopology, bases: dict,
                         spec: ProblemSpec, u_h: np.ndarray,
                         solve_report: SolveReport | None = None) -> ErrorReport:
    e0 = l2_error(mesh, topo, bases, spec, u_h)
    e1, ebar1 = energy_errors(mesh, topo, bases, spec, u_h)
    einf, e1inf, ebar1inf, etilde, en_inf = maxnorm_errors(mesh, topo, bases, spec, u_h)
    return ErrorReport(
        level=mesh.level,
        h=mesh.h,
        dofs=int((~mesh.boundary_vertex).sum()),
        e0=e0,
        einf=einf,
        e1=e1,
        e1inf=e1inf,
        ebar1=ebar1,
        ebar1inf=ebar1inf,
        etilde1inf=etilde,
        en_inf=en_inf,
        solve=solve_report,
    )
