"""Evaluation helpers for global discrete functions over the vertex DOFs.

A global function is determined by one value per mesh vertex: plain hat
functions on uncut cells, the coupled basis on cut cells.  Traces on a
cut cell are side-resolved; an uncut cell has a single branch used for
either requested side.
"""
from __future__ import annotations

import numpy as np

from .basis import IFEBasis, bary_coords, build_local_basis
from .geometry import Classification, CutTopology, Side
from .mesh import TriMesh

_EYE3 = np.eye(3)


def build_bases(mesh: TriMesh, topo: CutTopology, rho_minus: float, rho_plus: float,
                variant: str = "midpoint-tangent") -> dict[int, IFEBasis]:
    """Construct the coupled basis of every cut cell (pure per cell)."""
    return {
        int(c): build_local_basis(mesh.cell_vertices(int(c)), topo.cuts[int(c)],
                                  rho_minus, rho_plus, variant)
        for c in topo.cut_cells
    }


def cell_trace(mesh: TriMesh, topo: CutTopology, bases: dict, cell: int, side: Side):
    """Per-DOF coefficient table of a cell's branch on one side.

    Returns (vertex_ids (3,), coeff (3, 3), grad (3, 2)) so that DOF k of
    the cell contributes coeff[k] @ lambda(x) to the trace value and
    grad[k] to its gradient.  Uncut cells expose their single linear
    branch regardless of the requested side.
    """
    verts = mesh.cells[cell]
    if topo.is_cut(cell):
        b = bases[int(cell)]
        return verts, b.coeff(side), b.grad(side)
    return verts, _EYE3, mesh.hat_gradients[cell]


class DiscreteField:
    """A coefficient vector over vertices, evaluable per cell and side."""

    def __init__(self, mesh: TriMesh, topo: CutTopology, bases: dict, coeffs: np.ndarray):
        self.mesh = mesh
        self.topo = topo
        self.bases = bases
        self.coeffs = np.asarray(coeffs, dtype=float)

    def cell_values(self, cell: int, pts, side: Side) -> np.ndarray:
        verts, coeff, _ = cell_trace(self.mesh, self.topo, self.bases, cell, side)
        lam = bary_coords(self.mesh.cell_vertices(cell), pts)
        return (lam @ coeff.T) @ self.coeffs[verts]

    def cell_gradient(self, cell: int, side: Side) -> np.ndarray:
        verts, _, grad = cell_trace(self.mesh, self.topo, self.bases, cell, side)
        return self.coeffs[verts] @ grad

    def side_of_cell(self, cell: int) -> Side:
        cls = self.topo.classification(cell)
        if cls is Classification.CUT:
            raise ValueError(f"cell {cell} is cut; request an explicit side")
        return Side.MINUS if cls is Classification.MINUS else Side.PLUS
