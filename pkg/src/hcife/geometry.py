"""Interface geometry: classification of cells against a closed curve and
exact integration over the resulting cut regions.

The curve is a closed C2 interface that must not touch the outer boundary.
The circle is the provided realization; everything downstream only uses
the operations exposed by CircleInterface (side test, segment crossings,
arc operations, analytic arc moments), so further curve types can be
added without touching the cut machinery.

Conventions
-----------
* label_distance(x) is negative on the Omega^- side, positive on
  Omega^+; for the circle it equals the true signed distance to the
  curve.  Points on the curve belong to the closure of Omega^- (ties
  break to MINUS).
* All point-on-curve and tangency tie-breaks use eps = 1e-12 * h;
  crossings closer than eps to a cell vertex are snapped to the vertex
  so that sliver sub-edges shorter than eps never reach the 1/|e^s|
  penalty weights.
* n0 is the unit normal at the arc midpoint x0 pointing out of Omega^+,
  t0 its 90-degree clockwise rotation.

All operations are pure functions of immutable inputs.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateArcError, GeometryError, QuadratureError
from .mesh import TriMesh
from .quadrature import TRI_DEG4_BARY, TRI_DEG4_WEIGHTS, triangle_area


class Side(enum.Enum):
    MINUS = -1
    PLUS = 1

    @property
    def other(self) -> "Side":
        return Side.PLUS if self is Side.MINUS else Side.MINUS


class Classification(enum.IntEnum):
    MINUS = -1
    CUT = 0
    PLUS = 1


def eps_geom(h: float) -> float:
    """Geometric tie-break tolerance for a mesh of size h."""
    return 1e-12 * h


@dataclass(frozen=True)
class CircleInterface:
    """Circle realization of the closed C2 interface.

    interior labels the side occupied by the disk; by default the disk
    is Omega^-.
    """

    center: tuple[float, float]
    radius: float
    interior: Side = Side.MINUS

    def __post_init__(self):
        if self.radius <= 0.0:
            raise GeometryError("interface radius must be positive")

    @property
    def curvature(self) -> float:
        return 1.0 / self.radius

    @property
    def tubular_radius(self) -> float:
        # Existence-only in general; for a circle the normal segments of
        # length 2r first collide at the center, so r0 itself is used.
        return self.radius

    def is_admissible(self, h: float) -> bool:
        """Mesh-size admissibility proxy: h < r/2, i.e. kappa*h < 1/2."""
        return h < 0.5 * self.tubular_radius

    def label_distance(self, pts) -> np.ndarray | float:
        """Signed distance, negative on Omega^-, positive on Omega^+."""
        p = np.asarray(pts, dtype=float)
        d = np.linalg.norm(p - np.asarray(self.center), axis=-1) - self.radius
        if self.interior is Side.PLUS:
            d = -d
        return d

    def side_of(self, x, eps: float = 0.0) -> Side:
        """Side containing x; on-curve points count as Omega^- closure."""
        return Side.MINUS if self.label_distance(x) <= eps else Side.PLUS

    # -- segment crossings -------------------------------------------------

    def segment_crossings(self, a, b, eps: float):
        """Transversal crossings of segment a->b with the curve.

        Returns a list of (t, point) sorted by t in the caller's
        parameterization, at most two entries.  The roots are computed in
        a lexicographically canonical orientation so that both cells
        sharing an edge observe bit-identical crossing points.  Tangential
        contact (the two roots closer than eps) reports no crossing;
        crossings within eps of an endpoint are snapped onto it.
        """
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        flip = (b[0], b[1]) < (a[0], a[1])
        p, q = (b, a) if flip else (a, b)
        c = np.asarray(self.center)
        d = q - p
        aa = float(d @ d)
        if aa == 0.0:
            return []
        length = math.sqrt(aa)
        pc = p - c
        bb = 2.0 * float(d @ pc)
        cc = float(pc @ pc) - self.radius**2
        disc = bb * bb - 4.0 * aa * cc
        if disc <= 0.0 or math.sqrt(disc) / math.sqrt(aa) < eps:
            return []  # no contact, or tangential within tolerance
        sq = math.sqrt(disc)
        qq = -0.5 * (bb + math.copysign(sq, bb)) if bb != 0.0 else 0.5 * sq
        roots = sorted({qq / aa, cc / qq if qq != 0.0 else -qq / aa})
        out = []
        for t in roots:
            if t * length < -eps or (t - 1.0) * length > eps:
                continue
            if abs(t) * length < eps:
                t, pt = 0.0, p.copy()
            elif abs(1.0 - t) * length < eps:
                t, pt = 1.0, q.copy()
            else:
                pt = p + t * d
            out.append((t, pt))
        # Both roots snapped onto the same endpoint collapse to one.
        if len(out) == 2 and out[0][0] == out[1][0]:
            out = out[:1]
        if flip:
            out = [(1.0 - t, pt) for t, pt in out]
            out.sort(key=lambda r: r[0])
        return out

    # -- arc operations ----------------------------------------------------

    def angle_of(self, x) -> float:
        c = self.center
        return math.atan2(x[1] - c[1], x[0] - c[0])

    def point_at(self, theta: float) -> np.ndarray:
        c = self.center
        return np.array(
            [c[0] + self.radius * math.cos(theta), c[1] + self.radius * math.sin(theta)]
        )

    def _select_arc(self, p1, p2, hint):
        """Angle range (theta1, dtheta) of the arc p1->p2 nearest hint."""
        if float(np.linalg.norm(np.asarray(p1) - np.asarray(p2))) == 0.0:
            raise DegenerateArcError("arc endpoints coincide")
        th1 = self.angle_of(p1)
        th2 = self.angle_of(p2)
        d = math.remainder(th2 - th1, 2.0 * math.pi)
        if d == 0.0:
            raise DegenerateArcError("arc endpoints coincide in angle")
        alt = d - math.copysign(2.0 * math.pi, d)
        hint = np.asarray(hint, dtype=float)
        mid_near = self.point_at(th1 + 0.5 * d)
        mid_far = self.point_at(th1 + 0.5 * alt)
        if np.linalg.norm(mid_far - hint) < np.linalg.norm(mid_near - hint):
            d = alt
        return th1, d

    def arc_midpoint(self, p1, p2, hint):
        """Arc-length midpoint x0 of the arc through the cell, with frame.

        Returns (x0, n0, t0): n0 points out of Omega^+ and t0 is the
        clockwise rotation of n0.
        """
        th1, d = self._select_arc(p1, p2, hint)
        x0 = self.point_at(th1 + 0.5 * d)
        radial = (x0 - np.asarray(self.center)) / self.radius
        n0 = radial if self.interior is Side.PLUS else -radial
        t0 = np.array([n0[1], -n0[0]])
        return x0, n0, t0

    def arc_length(self, p1, p2, hint) -> float:
        _, d = self._select_arc(p1, p2, hint)
        return self.radius * abs(d)

    def arc_point(self, p1, p2, frac: float, hint) -> np.ndarray:
        """Point at parameter frac in [0, 1] along the selected arc."""
        th1, d = self._select_arc(p1, p2, hint)
        return self.point_at(th1 + frac * d)

    def arc_green_terms(self, pa, pb, hint):
        """Line integrals along the selected arc from pa to pb.

        Returns (area, mx, my) with area = 1/2 * int(x dy - y dx),
        mx = int(x^2/2 dy), my = -int(y^2/2 dx), all in closed form.
        """
        th1, d = self._select_arc(pa, pb, hint)
        th2 = th1 + d
        cx, cy = self.center
        r = self.radius
        s1, c1 = math.sin(th1), math.cos(th1)
        s2, c2 = math.sin(th2), math.cos(th2)
        area = 0.5 * (r * r * d + r * cx * (s2 - s1) - r * cy * (c2 - c1))
        # int cos = sin, int cos^2 = th/2 + sin(2th)/4, int cos^3 = sin - sin^3/3
        i_c = s2 - s1
        i_c2 = 0.5 * d + 0.25 * (math.sin(2 * th2) - math.sin(2 * th1))
        i_c3 = (s2 - s2**3 / 3.0) - (s1 - s1**3 / 3.0)
        mx = 0.5 * r * (cx * cx * i_c + 2.0 * cx * r * i_c2 + r * r * i_c3)
        # int sin = -cos, int sin^2 = th/2 - sin(2th)/4, int sin^3 = -cos + cos^3/3
        i_s = c1 - c2
        i_s2 = 0.5 * d - 0.25 * (math.sin(2 * th2) - math.sin(2 * th1))
        i_s3 = (-c2 + c2**3 / 3.0) - (-c1 + c1**3 / 3.0)
        my = 0.5 * r * (cy * cy * i_s + 2.0 * cy * r * i_s2 + r * r * i_s3)
        return area, mx, my


@dataclass
class CutElement:
    """Geometric record of one classified cell.

    For CUT cells all fields are populated; for uncut cells (produced by
    guarded calls) only the areas, centroids and sub-edge lengths are
    meaningful and the interface fields are None.
    """

    cell: int
    classification: Classification
    vertex_sides: tuple = (Side.MINUS, Side.MINUS, Side.MINUS)
    p1: np.ndarray | None = None
    p2: np.ndarray | None = None
    p_edges: tuple[int, int] | None = None
    x0: np.ndarray | None = None
    n0: np.ndarray | None = None
    t0: np.ndarray | None = None
    area_minus: float = 0.0
    area_plus: float = 0.0
    centroid_minus: np.ndarray | None = None
    centroid_plus: np.ndarray | None = None
    arc_length: float = 0.0
    sub_minus: np.ndarray | None = None
    sub_plus: np.ndarray | None = None
    poly_minus: np.ndarray | None = None
    poly_plus: np.ndarray | None = None

    def area(self, side: Side) -> float:
        return self.area_minus if side is Side.MINUS else self.area_plus

    def centroid(self, side: Side):
        return self.centroid_minus if side is Side.MINUS else self.centroid_plus

    def sub_lengths(self, side: Side) -> np.ndarray:
        return self.sub_minus if side is Side.MINUS else self.sub_plus


def _segment_green(a, b):
    """Green's-theorem terms of the straight segment a->b."""
    ax, ay = a
    bx, by = b
    area = 0.5 * (ax * by - bx * ay)
    mx = (by - ay) / 6.0 * (ax * ax + ax * bx + bx * bx)
    my = -(bx - ax) / 6.0 * (ay * ay + ay * by + by * by)
    return area, mx, my


def classify_triangle(tri: np.ndarray, curve: CircleInterface, eps: float, cell: int = -1):
    """Classify one triangle and collect its boundary crossings.

    Returns (classification, crossings) where crossings is a list of
    (local_edge, t, point, key); key identifies snapped-to-vertex
    crossings so that a crossing sitting on a vertex is counted once.
    Raises GeometryError when the admissibility assumption (at most two
    crossings, on different edges) is violated.
    """
    sd = curve.label_distance(tri)
    crossings = []
    seen = set()
    for k in range(3):
        a, b = tri[k], tri[(k + 1) % 3]
        hits = curve.segment_crossings(a, b, eps)
        interior = [(t, pt) for t, pt in hits if 0.0 < t < 1.0]
        if len(interior) == 2:
            raise GeometryError("interface crosses one edge twice", cell)
        for t, pt in hits:
            if t == 0.0:
                key = ("v", k)
            elif t == 1.0:
                key = ("v", (k + 1) % 3)
            else:
                key = ("e", k, t)
            if key in seen:  # vertex crossings are seen from both edges
                continue
            seen.add(key)
            crossings.append((k, t, pt, key))
    if len(crossings) > 2:
        raise GeometryError("more than two boundary crossings", cell)

    if len(crossings) == 2:
        pa, pb = crossings[0][2], crossings[1][2]
        if float(np.linalg.norm(pa - pb)) >= eps:
            # Guard: the near arc must actually pass through the cell.
            hint = tri.mean(axis=0)
            mid = curve.arc_point(pa, pb, 0.5, hint)
            if _point_in_triangle(tri, mid, eps):
                return Classification.CUT, crossings
    if np.all(sd <= eps):
        return Classification.MINUS, crossings
    if np.all(sd >= -eps):
        return Classification.PLUS, crossings
    raise GeometryError("inconsistent classification: mixed signs without a cut", cell)


def _point_in_triangle(tri, x, eps) -> bool:
    v0 = tri[1] - tri[0]
    v1 = tri[2] - tri[0]
    den = v0[0] * v1[1] - v0[1] * v1[0]
    w = x - tri[0]
    l1 = (w[0] * v1[1] - w[1] * v1[0]) / den
    l2 = (v0[0] * w[1] - v0[1] * w[0]) / den
    tol = eps / math.sqrt(abs(den))
    return l1 >= -tol and l2 >= -tol and l1 + l2 <= 1.0 + tol


def cut_triangle(tri: np.ndarray, curve: CircleInterface, cell: int = -1,
                 eps: float | None = None) -> CutElement:
    """Compute the full geometric record of one triangle against the curve.

    Uncut triangles yield a degenerate record with the whole measure on
    their own side (guarded-call semantics).  Cut triangles get exact
    sub-areas/centroids via Green's theorem over the straight boundary
    chains plus the analytic arc integrals, sub-edge lengths, the arc
    length, and the (x0, n0, t0) frame at the arc-length midpoint.
    """
    tri = np.asarray(tri, dtype=float)
    if eps is None:
        edge_max = max(np.linalg.norm(tri[(k + 1) % 3] - tri[k]) for k in range(3))
        eps = eps_geom(edge_max)
    cls, crossings = classify_triangle(tri, curve, eps, cell)
    total = triangle_area(tri)
    centroid = tri.mean(axis=0)
    edge_len = np.array([np.linalg.norm(tri[(k + 1) % 3] - tri[k]) for k in range(3)])
    vsides = tuple(curve.side_of(tri[k], eps) for k in range(3))

    if cls is not Classification.CUT:
        minus = cls is Classification.MINUS
        return CutElement(
            cell=cell,
            classification=cls,
            vertex_sides=vsides,
            area_minus=total if minus else 0.0,
            area_plus=0.0 if minus else total,
            centroid_minus=centroid if minus else None,
            centroid_plus=None if minus else centroid,
            sub_minus=edge_len if minus else np.zeros(3),
            sub_plus=np.zeros(3) if minus else edge_len,
        )

    # Ordered boundary walk: vertices and interior crossings, CCW.
    walk = []  # (point, is_crossing, local_edge_of_next_segment)
    for k in range(3):
        vkey = ("v", k)
        is_x = any(c[3] == vkey for c in crossings)
        walk.append([tri[k], is_x, k])
        for ck, t, pt, key in crossings:
            if key[0] == "e" and ck == k:
                walk.append([pt, True, k])
    m = len(walk)

    # Side of each boundary sub-segment from its midpoint.
    seg_side = []
    for i in range(m):
        a = walk[i][0]
        b = walk[(i + 1) % m][0]
        seg_side.append(Side.MINUS if curve.label_distance(0.5 * (a + b)) <= 0.0 else Side.PLUS)

    # Exit leaves MINUS, enter returns to it, walking CCW.
    exit_pt = enter_pt = None
    for i in range(m):
        if not walk[i][1]:
            continue
        before = seg_side[(i - 1) % m]
        after = seg_side[i]
        if before is Side.MINUS and after is Side.PLUS:
            exit_pt = walk[i][0]
        elif before is Side.PLUS and after is Side.MINUS:
            enter_pt = walk[i][0]
    if exit_pt is None or enter_pt is None:
        raise GeometryError("could not orient interface crossings", cell)

    hint = centroid
    sub = {Side.MINUS: np.zeros(3), Side.PLUS: np.zeros(3)}
    green = {Side.MINUS: np.zeros(3), Side.PLUS: np.zeros(3)}
    polys = {Side.MINUS: [], Side.PLUS: []}
    # Sub-segment i starts at walk entry i and lies on that entry's edge.
    for i in range(m):
        a, b = walk[i][0], walk[(i + 1) % m][0]
        s = seg_side[i]
        k = walk[i][2]
        sub[s][k] += float(np.linalg.norm(b - a))
        green[s] += _segment_green(a, b)
        for side in (Side.MINUS, Side.PLUS):
            if s is side:
                if not polys[side] or not np.array_equal(polys[side][-1], a):
                    polys[side].append(a)
                polys[side].append(b)

    arc = np.array(curve.arc_green_terms(exit_pt, enter_pt, hint))
    green[Side.MINUS] += arc
    # The arc traversed in the opposite direction closes the PLUS side.
    green[Side.PLUS] -= arc

    area_minus, mx_minus, my_minus = green[Side.MINUS]
    area_plus, mx_plus, my_plus = green[Side.PLUS]
    area_minus = min(max(area_minus, 0.0), total)
    area_plus = min(max(area_plus, 0.0), total)

    def _centroid(area, mx, my, fallback):
        if area <= 0.0:
            return fallback
        return np.array([mx / area, my / area])

    chord_mid = 0.5 * (exit_pt + enter_pt)
    x0, n0, t0 = curve.arc_midpoint(exit_pt, enter_pt, hint)
    p_sorted = sorted(crossings, key=lambda c: (c[0], c[1]))
    poly_arrays = {}
    for side in (Side.MINUS, Side.PLUS):
        pts = polys[side]
        if pts and np.array_equal(pts[0], pts[-1]):
            pts = pts[:-1]
        poly_arrays[side] = np.array(pts) if pts else np.zeros((0, 2))

    return CutElement(
        cell=cell,
        classification=Classification.CUT,
        vertex_sides=vsides,
        p1=p_sorted[0][2],
        p2=p_sorted[1][2],
        p_edges=(p_sorted[0][0], p_sorted[1][0]),
        x0=x0,
        n0=n0,
        t0=t0,
        area_minus=float(area_minus),
        area_plus=float(area_plus),
        centroid_minus=_centroid(area_minus, mx_minus, my_minus, chord_mid),
        centroid_plus=_centroid(area_plus, mx_plus, my_plus, chord_mid),
        arc_length=curve.arc_length(exit_pt, enter_pt, hint),
        sub_minus=sub[Side.MINUS],
        sub_plus=sub[Side.PLUS],
        poly_minus=poly_arrays[Side.MINUS],
        poly_plus=poly_arrays[Side.PLUS],
    )


def split_segment(curve: CircleInterface, a, b, eps: float):
    """Partition segment a->b into per-side pieces [(side, t0, t1), ...].

    Crossings snapped onto an endpoint do not split the segment; each
    piece's side comes from its midpoint (on-curve midpoints count as
    Omega^-, a measure-zero tie).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ts = [t for t, _ in curve.segment_crossings(a, b, eps) if 0.0 < t < 1.0]
    knots = [0.0] + sorted(ts) + [1.0]
    pieces = []
    for t0, t1 in zip(knots[:-1], knots[1:]):
        if t1 <= t0:
            continue
        mid = a + 0.5 * (t0 + t1) * (b - a)
        side = Side.MINUS if curve.label_distance(mid) <= 0.0 else Side.PLUS
        pieces.append((side, t0, t1))
    return pieces


# -- integration over cut regions -------------------------------------------


def _quad_triangle(tri_pts, f) -> float:
    """Degree-4 quadrature over an arbitrary (possibly CW) triangle."""
    pts = TRI_DEG4_BARY @ tri_pts
    return triangle_area(tri_pts) * float(TRI_DEG4_WEIGHTS @ np.asarray(f(pts), dtype=float))


def _cap_integral(curve, a, b, hint, f, tol_abs, depth, max_depth):
    m = curve.arc_point(a, b, 0.5, hint)
    tri = np.array([a, m, b])
    val = _quad_triangle(tri, f)
    if abs(val) <= tol_abs:
        return val
    if depth >= max_depth:
        raise QuadratureError(f"cap refinement exceeded {max_depth} levels")
    half = 0.5 * tol_abs
    return (
        val
        + _cap_integral(curve, a, m, 0.5 * (a + m), f, half, depth + 1, max_depth)
        + _cap_integral(curve, m, b, 0.5 * (m + b), f, half, depth + 1, max_depth)
    )


def integrate_cut_region(tri, cut: CutElement, side: Side, f, curve: CircleInterface = None,
                         rel_tol: float = 1e-12, max_depth: int = 30) -> float:
    """Integral of f over (triangle) intersect (Omega^side).

    f is a vectorized callable (n, 2) -> (n,); polynomials of degree <= 4
    are integrated exactly on the straight pieces, and the curved cap is
    refined until its leftover is below rel_tol relative to the total.
    Uncut records integrate over the whole triangle or return 0.
    """
    tri = np.asarray(tri, dtype=float)
    if cut.classification is not Classification.CUT:
        if (cut.classification is Classification.MINUS) == (side is Side.MINUS):
            return _quad_triangle(tri, f)
        return 0.0
    if curve is None:
        raise ValueError("curve is required for cut cells")

    poly = cut.poly_minus if side is Side.MINUS else cut.poly_plus
    total = 0.0
    for i in range(1, len(poly) - 1):
        total += _quad_triangle(np.array([poly[0], poly[i], poly[i + 1]]), f)

    hint = tri.mean(axis=0)
    cap_tri = np.array([cut.p1, curve.arc_point(cut.p1, cut.p2, 0.5, hint), cut.p2])
    first_cap = _quad_triangle(cap_tri, f)
    scale = max(abs(total), abs(first_cap), 1e-300)
    cap = _cap_integral(curve, cut.p1, cut.p2, hint, f, rel_tol * scale, 0, max_depth)
    # The cap between chord and arc belongs to the disk side.
    sign = 1.0 if side is curve.interior else -1.0
    return total + sign * cap


# -- mesh-level topology -----------------------------------------------------


@dataclass
class CutTopology:
    """Classification of every cell plus cut records and edge splits."""

    curve: CircleInterface
    eps: float
    cell_class: np.ndarray  # (nc,) values of Classification
    cut_cells: np.ndarray
    cuts: dict
    gamma_edges: np.ndarray  # indices of edges of cut cells
    edge_splits: dict  # edge index -> ((side, t0, t1), ...)

    def classification(self, cell: int) -> Classification:
        return Classification(int(self.cell_class[cell]))

    def is_cut(self, cell: int) -> bool:
        return self.cell_class[cell] == Classification.CUT

    def side_area(self, mesh: TriMesh, cell: int, side: Side) -> float:
        cls = self.classification(cell)
        if cls is Classification.CUT:
            return self.cuts[cell].area(side)
        if (cls is Classification.MINUS) == (side is Side.MINUS):
            return float(mesh.cell_areas[cell])
        return 0.0


def classify_cell(mesh: TriMesh, curve: CircleInterface, cell: int) -> Classification:
    """Classify one cell of a mesh against the curve."""
    cls, _ = classify_triangle(mesh.cell_vertices(cell), curve, eps_geom(mesh.h), cell)
    return cls


def cut_measures(mesh: TriMesh, curve: CircleInterface, cell: int) -> CutElement:
    """Full cut-geometry record of one mesh cell (guarded for uncut cells)."""
    return cut_triangle(mesh.cell_vertices(cell), curve, cell, eps_geom(mesh.h))


def segment_curve_intersections(p, q, curve: CircleInterface, eps: float = 0.0):
    """Points where segment p->q crosses the curve (0, 1 or 2 points)."""
    if np.array_equal(np.asarray(p, dtype=float), np.asarray(q, dtype=float)):
        raise ValueError("segment endpoints coincide")
    if eps <= 0.0:
        eps = eps_geom(float(np.linalg.norm(np.asarray(q, float) - np.asarray(p, float))))
    return [pt for _, pt in curve.segment_crossings(p, q, eps)]


def arc_midpoint(curve: CircleInterface, p1, p2, interior_hint):
    """Arc-length midpoint frame (x0, n0, t0) of the arc nearest the hint."""
    return curve.arc_midpoint(p1, p2, interior_hint)


def build_topology(mesh: TriMesh, curve: CircleInterface) -> CutTopology:
    """Classify all cells, cut the crossed ones, and split the edges.

    Candidate cells are prefiltered vectorially: a cell can only be cut
    if some vertex pair straddles the curve or some edge has an endpoint
    within one edge length of the curve (|label_distance| is a true
    distance for the circle, so farther segments cannot reach it).
    """
    eps = eps_geom(mesh.h)
    sd_v = curve.label_distance(mesh.vertices)
    sd_cells = sd_v[mesh.cells]
    straddle = (sd_cells.min(axis=1) <= eps) & (sd_cells.max(axis=1) >= -eps)

    ev = mesh.edges
    elen = np.linalg.norm(mesh.vertices[ev[:, 1]] - mesh.vertices[ev[:, 0]], axis=1)
    edge_near = np.abs(sd_v[ev]).min(axis=1) <= elen + eps
    candidates = straddle | edge_near[mesh.cell_edges].any(axis=1)

    cell_class = np.where(sd_cells.max(axis=1) <= eps, Classification.MINUS,
                          Classification.PLUS).astype(np.int8)
    cuts = {}
    for c in np.nonzero(candidates)[0]:
        rec = cut_triangle(mesh.cell_vertices(c), curve, int(c), eps)
        cell_class[c] = rec.classification
        if rec.classification is Classification.CUT:
            cuts[int(c)] = rec

    cut_cells = np.array(sorted(cuts), dtype=np.int64)
    if len(cut_cells):
        gamma_edges = np.unique(mesh.cell_edges[cut_cells].ravel())
    else:
        gamma_edges = np.array([], dtype=np.int64)

    edge_splits = {}
    for e in gamma_edges:
        a, b = mesh.edges[e]
        edge_splits[int(e)] = tuple(
            split_segment(curve, mesh.vertices[a], mesh.vertices[b], eps)
        )
    return CutTopology(
        curve=curve,
        eps=eps,
        cell_class=cell_class,
        cut_cells=cut_cells,
        cuts=cuts,
        gamma_edges=gamma_edges,
        edge_splits=edge_splits,
    )


# -- geometric diagnostics ---------------------------------------------------


def arc_chord_ratio(cut: CutElement) -> float:
    """|T_Gamma| over the chord length between the two crossings."""
    chord = float(np.linalg.norm(cut.p2 - cut.p1))
    return cut.arc_length / chord


def interface_sum_area(topo: CutTopology, mesh: TriMesh) -> float:
    """Total MINUS-side measure (cut sub-areas plus whole minus cells)."""
    total = float(mesh.cell_areas[np.nonzero(topo.cell_class == Classification.MINUS)[0]].sum())
    total += sum(rec.area_minus for rec in topo.cuts.values())
    return total


def twotri_theta(mesh: TriMesh, topo: CutTopology) -> float:
    """Worst ratio |e^s|^2 / max(|T_1^s|, |T_2^s|) over interior cut edges."""
    worst = 0.0
    for e in topo.gamma_edges:
        c0, c1 = mesh.edge_cells[e]
        if c1 < 0:
            continue
        a, b = mesh.edges[e]
        length = float(np.linalg.norm(mesh.vertices[b] - mesh.vertices[a]))
        for side, t0, t1 in topo.edge_splits[int(e)]:
            sub = (t1 - t0) * length
            if sub <= topo.eps:
                continue
            amax = max(topo.side_area(mesh, int(c0), side), topo.side_area(mesh, int(c1), side))
            if amax > 0.0:
                worst = max(worst, sub * sub / amax)
    return worst
