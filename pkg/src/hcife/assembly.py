"""Global assembly over vertex DOFs and a Jacobi-preconditioned CG solver.

One degree of freedom per mesh vertex: functions are continuous across
edges away from the interface band, and the cut-edge discontinuities
live entirely inside the edge penalty blocks.  Dirichlet data is imposed
by nodal interpolation at boundary vertices with symmetric lifting, so
the final matrix stays symmetric.  Assembly traverses cells and edges in
a fixed order; results are reproducible bit for bit.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import IndefiniteSystemError, NonConvergenceError, ParameterError
from .forms import MethodVariant, ProblemSpec, edge_terms, load_vector, volume_term
from .geometry import Classification, CutTopology, Side
from .mesh import TriMesh
from .quadrature import TRI_DEG4_BARY, TRI_DEG4_WEIGHTS


@dataclass
class SparseSystem:
    """Assembled CSR system with boundary bookkeeping.

    matrix/rhs are post-lifting when lifted is True: boundary rows and
    columns are cleared, unit diagonal, rhs pinned to the boundary data.
    dof_of_vertex is the (identity) vertex -> DOF map.
    """

    matrix: sp.csr_matrix
    rhs: np.ndarray
    boundary: np.ndarray
    dirichlet_values: np.ndarray
    dof_of_vertex: np.ndarray
    lifted: bool

    @property
    def n_dofs(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_interior(self) -> int:
        return int((~self.boundary).sum())


@dataclass
class SolveReport:
    iterations: int
    residual: float
    wall_time: float


def assemble(mesh: TriMesh, topo: CutTopology, bases: dict, spec: ProblemSpec,
             variant: MethodVariant, lift: bool = True) -> SparseSystem:
    """Assemble the global matrix and load vector.

    Uncut-cell contributions are computed in one vectorized sweep; cut
    cells and interface-band edges are accumulated individually.
    Boundary edges never enter the edge sums.
    """
    nv = mesh.n_vertices
    cls = topo.cell_class
    uncut = cls != Classification.CUT
    rho_cell = np.where(cls == Classification.MINUS, spec.rho_minus, spec.rho_plus)

    rows = []
    cols = []
    vals = []
    rhs = np.zeros(nv)

    # Volume terms, uncut cells in one sweep.
    g = mesh.hat_gradients[uncut]
    coef = (rho_cell * mesh.cell_areas)[uncut]
    k_loc = np.einsum("c,cid,cjd->cij", coef, g, g)
    cu = mesh.cells[uncut]
    rows.append(np.repeat(cu, 3, axis=1).ravel())
    cols.append(np.tile(cu, (1, 3)).ravel())
    vals.append(k_loc.ravel())

    # Loads, uncut cells.
    if spec.f_const is not None:
        if spec.f_const != 0.0:
            contrib = spec.f_const * mesh.cell_areas[uncut] / 3.0
            np.add.at(rhs, cu.ravel(), np.repeat(contrib, 3))
    else:
        for side, sval in ((Side.MINUS, Classification.MINUS), (Side.PLUS, Classification.PLUS)):
            sel = cls == sval
            if not sel.any():
                continue
            tri = mesh.vertices[mesh.cells[sel]]  # (n, 3, 2)
            pts = np.einsum("qk,nkd->nqd", TRI_DEG4_BARY, tri)
            fv = np.asarray(spec.f(pts.reshape(-1, 2), side)).reshape(len(tri), -1)
            loc = mesh.cell_areas[sel][:, None] * ((fv * TRI_DEG4_WEIGHTS) @ TRI_DEG4_BARY)
            np.add.at(rhs, mesh.cells[sel].ravel(), loc.ravel())

    # Cut cells.
    for c in topo.cut_cells:
        c = int(c)
        k = volume_term(mesh, topo, bases, spec, c)
        verts = mesh.cells[c]
        rows.append(np.repeat(verts, 3))
        cols.append(np.tile(verts, 3))
        vals.append(k.ravel())
        rhs[verts] += load_vector(mesh, topo, bases, spec, c)

    # Interface-band edges (interior only).
    for e in topo.gamma_edges:
        if mesh.boundary_edge[e]:
            continue
        dofs, k = edge_terms(mesh, topo, bases, spec, variant, int(e))
        nd = len(dofs)
        rows.append(np.repeat(dofs, nd))
        cols.append(np.tile(dofs, nd))
        vals.append(k.ravel())

    a = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(nv, nv),
    ).tocsr()

    bdry = mesh.boundary_vertex
    g_b = np.zeros(nv)
    g_b[bdry] = np.asarray(spec.dirichlet(mesh.vertices[bdry]), dtype=float)

    if lift:
        rhs = rhs - a @ g_b
        keep = sp.diags((~bdry).astype(float))
        a = keep @ a @ keep + sp.diags(bdry.astype(float))
        a = a.tocsr()
        rhs[bdry] = g_b[bdry]

    return SparseSystem(
        matrix=a,
        rhs=rhs,
        boundary=bdry,
        dirichlet_values=g_b,
        dof_of_vertex=np.arange(nv),
        lifted=lift,
    )


def solve(system: SparseSystem, tol: float = 1e-12, max_iter: int | None = None,
          preconditioned: bool = True):
    """Conjugate gradients with diagonal (Jacobi) preconditioning.

    Converges on the relative preconditioned residual.  A non-positive
    curvature direction aborts with IndefiniteSystemError (the usual
    symptom of an insufficient penalty); exhausting max_iter raises
    NonConvergenceError carrying the residual-history tail.
    """
    if not 0.0 < tol < 1.0:
        raise ParameterError(f"tolerance must lie in (0, 1), got {tol}")
    a = system.matrix
    b = system.rhs
    n = a.shape[0]
    if max_iter is None:
        max_iter = max(1000, 10 * n)

    start = time.perf_counter()
    diag = a.diagonal()
    if preconditioned:
        if np.any(diag <= 0.0):
            raise IndefiniteSystemError("non-positive diagonal entry; Jacobi unavailable")
        inv_diag = 1.0 / diag
    else:
        inv_diag = np.ones(n)

    x = np.zeros(n)
    r = b.copy()
    z = inv_diag * r
    rz = float(r @ z)
    b_norm = np.sqrt(float(b @ (inv_diag * b)))
    if b_norm == 0.0:
        return x, SolveReport(0, 0.0, time.perf_counter() - start)

    p = z.copy()
    history = []
    res = np.sqrt(max(rz, 0.0)) / b_norm
    for it in range(1, max_iter + 1):
        ap = a @ p
        p_ap = float(p @ ap)
        if p_ap <= 0.0:
            raise IndefiniteSystemError(
                f"non-positive curvature p^T A p = {p_ap:.3e} at iteration {it}"
            )
        alpha = rz / p_ap
        x += alpha * p
        r -= alpha * ap
        z = inv_diag * r
        rz_new = float(r @ z)
        res = np.sqrt(max(rz_new, 0.0)) / b_norm
        history.append(res)
        if res <= tol:
            return x, SolveReport(it, res, time.perf_counter() - start)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NonConvergenceError(
        f"CG did not reach {tol:.1e} in {max_iter} iterations (residual {res:.3e})",
        history,
    )


def write_matrix_market(matrix: sp.spmatrix, path) -> None:
    """Dump in MatrixMarket coordinate format with the symmetric header."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(matrix), symmetry="symmetric")
