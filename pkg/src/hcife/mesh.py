"""Structured uniform triangulations of the square (-1, 1)^2.

The family is indexed by a refinement level l >= 1. The square is divided
into N x N axis-aligned cells with N = 2**(l+3), and each cell is split
into two right triangles along its bottom-left to top-right diagonal.
The diagonal is the longest edge, so the mesh size is

    h = (2 / N) * sqrt(2) = 2**-(l + 3/2).

Meshes are immutable after construction and safe to share between
workers; vertex, cell and edge numbering is row-major and deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceError

DEFAULT_MAX_BYTES = 4 * 2**30


def mesh_size(level: int) -> float:
    """Mesh size h = 2**-(l + 3/2) of the level-l member of the family."""
    return 2.0 ** -(level + 1.5)


def subdivisions(level: int) -> int:
    """Number of square cells per side, N = 2**(l+3)."""
    return 2 ** (level + 3)


@dataclass(frozen=True)
class TriMesh:
    """Conforming triangulation with vertex/cell/edge topology.

    cells are counterclockwise vertex triples. edges hold sorted vertex
    pairs; edge_cells holds the one or two adjacent cells (lower index
    first, -1 marks a missing neighbour). cell_edges[c, k] is the edge
    between local vertices k and (k+1) % 3 of cell c.
    """

    level: int
    h: float
    vertices: np.ndarray
    cells: np.ndarray
    edges: np.ndarray
    edge_cells: np.ndarray
    cell_edges: np.ndarray
    boundary_edge: np.ndarray
    boundary_vertex: np.ndarray
    _hat_grads: np.ndarray = field(repr=False, default=None)
    _areas: np.ndarray = field(repr=False, default=None)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def cell_vertices(self, cell: int) -> np.ndarray:
        """Coordinates of a cell's three vertices, shape (3, 2)."""
        return self.vertices[self.cells[cell]]

    def edge_length(self, edge: int) -> float:
        a, b = self.edges[edge]
        return float(np.linalg.norm(self.vertices[b] - self.vertices[a]))

    @property
    def hat_gradients(self) -> np.ndarray:
        """Constant gradients of the P1 hat functions, shape (nc, 3, 2)."""
        return self._hat_grads

    @property
    def cell_areas(self) -> np.ndarray:
        """Signed (positive, CCW) cell areas, shape (nc,)."""
        return self._areas


def _estimate_bytes(n: int) -> int:
    nv = (n + 1) ** 2
    nc = 2 * n * n
    ne = 3 * n * n + 2 * n
    # vertices + cells + edges + adjacency + per-cell gradients/areas
    return 16 * nv + 12 * nc + (8 + 8 + 12) * ne + 56 * nc


def build_uniform_mesh(level: int, max_bytes: int = DEFAULT_MAX_BYTES) -> TriMesh:
    """Build the level-l member of the uniform mesh family on (-1, 1)^2.

    Raises ResourceError when the estimated memory footprint exceeds
    max_bytes, and ValueError for level < 1.
    """
    if level < 1:
        raise ValueError(f"mesh level must be >= 1, got {level}")
    n = subdivisions(level)
    est = _estimate_bytes(n)
    if est > max_bytes:
        raise ResourceError(
            f"level {level} mesh needs ~{est / 2**20:.0f} MiB, over the "
            f"{max_bytes / 2**20:.0f} MiB budget"
        )

    coords = -1.0 + 2.0 * np.arange(n + 1) / n
    xx, yy = np.meshgrid(coords, coords)  # row-major in y (j), then x (i)
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    ii, jj = np.meshgrid(np.arange(n), np.arange(n))
    i = ii.ravel()
    j = jj.ravel()
    v00 = j * (n + 1) + i
    v10 = v00 + 1
    v01 = v00 + (n + 1)
    v11 = v01 + 1
    # Diagonal v00 -> v11 shared by both triangles; both CCW.
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    cells = np.empty((2 * n * n, 3), dtype=np.int32)
    cells[0::2] = lower
    cells[1::2] = upper

    # Edge set from cell sides, deduplicated on sorted vertex pairs.
    raw = np.concatenate(
        [cells[:, [0, 1]], cells[:, [1, 2]], cells[:, [2, 0]]], axis=0
    )
    raw_sorted = np.sort(raw, axis=1)
    edges, inverse = np.unique(raw_sorted, axis=0, return_inverse=True)
    inverse = inverse.reshape(3, -1).T  # (nc, 3): edge of local side k
    cell_edges = inverse.astype(np.int32)

    ne = len(edges)
    edge_cells = np.full((ne, 2), -1, dtype=np.int32)
    side_edges = cell_edges.ravel(order="F")
    side_cells = np.tile(np.arange(len(cells), dtype=np.int32), 3)
    order = np.lexsort((side_cells, side_edges))
    se, sc = side_edges[order], side_cells[order]
    first = np.ones(len(se), dtype=bool)
    first[1:] = se[1:] != se[:-1]
    edge_cells[se[first], 0] = sc[first]
    second = ~first
    edge_cells[se[second], 1] = sc[second]

    boundary_edge = edge_cells[:, 1] < 0
    bv = np.zeros(len(vertices), dtype=bool)
    idx_i = np.tile(np.arange(n + 1), n + 1)
    idx_j = np.repeat(np.arange(n + 1), n + 1)
    bv[(idx_i == 0) | (idx_i == n) | (idx_j == 0) | (idx_j == n)] = True

    tri = vertices[cells]  # (nc, 3, 2)
    d1 = tri[:, 1] - tri[:, 0]
    d2 = tri[:, 2] - tri[:, 0]
    twice_area = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    areas = 0.5 * twice_area
    # grad(lambda_k) = perp of the opposite edge / (2A)
    opp = np.stack(
        [tri[:, 2] - tri[:, 1], tri[:, 0] - tri[:, 2], tri[:, 1] - tri[:, 0]], axis=1
    )
    grads = np.empty_like(opp)
    grads[:, :, 0] = -opp[:, :, 1]
    grads[:, :, 1] = opp[:, :, 0]
    grads /= twice_area[:, None, None]

    return TriMesh(
        level=level,
        h=mesh_size(level),
        vertices=vertices,
        cells=cells,
        edges=edges.astype(np.int32),
        edge_cells=edge_cells,
        cell_edges=cell_edges,
        boundary_edge=boundary_edge,
        boundary_vertex=bv,
        _hat_grads=grads,
        _areas=areas,
    )


def edge_patch(mesh: TriMesh, edge: int):
    """Adjacent cell(s) of an edge: (cell, other_cell or None), lower first."""
    a, b = mesh.edge_cells[edge]
    return (int(a), None) if b < 0 else (int(a), int(b))


def write_mesh(mesh: TriMesh, path) -> None:
    """Plain-text dump: one 'v x y' line per vertex, one 'c i j k' per cell."""
    with open(path, "w") as fh:
        for x, y in mesh.vertices:
            fh.write(f"v {x!r} {y!r}\n")
        for a, b, c in mesh.cells:
            fh.write(f"c {a} {b} {c}\n")
