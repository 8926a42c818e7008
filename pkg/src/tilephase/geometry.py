"""Tile shapes on the square lattice.

Two shape kinds share one exact engine:

* polyomino cell sets (a cell ``(x, y)`` is the unit square ``[x,x+1] x [y,y+1]``),
* simple polygons with integer vertices whose edges have slope 0, +1, -1 or
  infinity.

The slope restriction means every polygon is an exact union of *quarter
cells*: each unit square is cut by its two diagonals into four triangles
E/N/W/S, and every tile edge runs along that skeleton.  Overlap tests, tiling
search and coverage bookkeeping therefore operate on sets of integer quarter
ids ``(x, y, q)`` -- no floating point anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

Vec = tuple[int, int]
Quarter = tuple[int, int, int]  # (cell x, cell y, q) with q in 0..3 = E,N,W,S

_QUARTER_CENTROIDS = (
    (Fraction(5, 6), Fraction(1, 2)),  # E
    (Fraction(1, 2), Fraction(5, 6)),  # N
    (Fraction(1, 6), Fraction(1, 2)),  # W
    (Fraction(1, 2), Fraction(1, 6)),  # S
)

# Matrices for the dihedral group of the square: r = ccw quarter turn,
# m = reflection across the y axis.  Row-major (m00, m01, m10, m11).
ROT90 = (0, -1, 1, 0)
IDENT = (1, 0, 0, 1)
MIRROR = (-1, 0, 0, 1)


def mat_mul(a, b):
    return (
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    )


def mat_apply(m, v: Vec) -> Vec:
    return (m[0] * v[0] + m[1] * v[1], m[2] * v[0] + m[3] * v[1])


def group_elements(reflections: bool) -> list[tuple[str, tuple[int, int, int, int]]]:
    """Dihedral symmetries of the lattice: 4 rotations, optionally 8 with mirrors."""
    out = []
    m = IDENT
    for k in range(4):
        out.append((f"r{k}", m))
        m = mat_mul(ROT90, m)
    if reflections:
        m = MIRROR
        for k in range(4):
            out.append((f"mr{k}", m))
            m = mat_mul(ROT90, m)
    return out


# ---------------------------------------------------------------------------
# quarter / cell transforms
# ---------------------------------------------------------------------------

def rotate_cell(c: Vec) -> Vec:
    """Image of unit square (x, y) under a ccw quarter turn about the origin."""
    x, y = c
    return (-y - 1, x)


def reflect_cell(c: Vec) -> Vec:
    x, y = c
    return (-x - 1, y)


def rotate_quarter(q: Quarter) -> Quarter:
    x, y, k = q
    return (-y - 1, x, (k + 1) % 4)


def reflect_quarter(q: Quarter) -> Quarter:
    x, y, k = q
    return (-x - 1, y, (2 - k) % 4)  # E<->W, N and S fixed


def translate_quarter(q: Quarter, d: Vec) -> Quarter:
    return (q[0] + d[0], q[1] + d[1], q[2])


# ---------------------------------------------------------------------------
# exact polygon predicates
# ---------------------------------------------------------------------------

def shoelace_twice(vertices: Sequence[Vec]) -> int:
    s = 0
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        s += x1 * y2 - x2 * y1
    return s


def point_strictly_inside(pt, vertices: Sequence[Vec]) -> bool:
    """Crossing-number test for points known not to lie on the boundary."""
    x, y = pt
    inside = False
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xin = x1 + Fraction(x2 - x1) * Fraction(y - y1, y2 - y1)
            if xin > x:
                inside = not inside
    return inside


def _on_segment(pt, a: Vec, b: Vec) -> bool:
    (px, py), (ax, ay), (bx, by) = pt, a, b
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    if cross != 0:
        return False
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


def point_in_closed_polygon(pt, vertices: Sequence[Vec]) -> bool:
    n = len(vertices)
    for i in range(n):
        if _on_segment(pt, vertices[i], vertices[(i + 1) % n]):
            return True
    x, y = pt
    # nudge off any vertex level exactly: use a half-open crossing rule
    inside = False
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xin = x1 + Fraction(x2 - x1) * Fraction(y - y1, y2 - y1)
            if xin > x:
                inside = not inside
    return inside


def dist2_point_segment(pt, a: Vec, b: Vec) -> Fraction:
    px, py = Fraction(pt[0]), Fraction(pt[1])
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    t = ((px - ax) * dx + (py - ay) * dy) / L2
    if t < 0:
        t = Fraction(0)
    elif t > 1:
        t = Fraction(1)
    qx, qy = ax + t * dx, ay + t * dy
    return (px - qx) ** 2 + (py - qy) ** 2


def dist2_point_polygon(pt, vertices: Sequence[Vec]) -> Fraction:
    """Exact squared euclidean distance from a point to a closed polygon."""
    if point_in_closed_polygon(pt, vertices):
        return Fraction(0)
    best = None
    n = len(vertices)
    for i in range(n):
        d = dist2_point_segment(pt, vertices[i], vertices[(i + 1) % n])
        if best is None or d < best:
            best = d
    return best


def _orient(a: Vec, b: Vec, c: Vec) -> int:
    v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return (v > 0) - (v < 0)


def segments_intersect(a: Vec, b: Vec, c: Vec, d: Vec) -> bool:
    """Closed segment intersection (touching endpoints count)."""
    o1, o2 = _orient(a, b, c), _orient(a, b, d)
    o3, o4 = _orient(c, d, a), _orient(c, d, b)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and _on_segment(c, a, b):
        return True
    if o2 == 0 and _on_segment(d, a, b):
        return True
    if o3 == 0 and _on_segment(a, c, d):
        return True
    if o4 == 0 and _on_segment(b, c, d):
        return True
    return False


def closed_polygons_intersect(p: Sequence[Vec], q: Sequence[Vec]) -> bool:
    """Do two closed polygon regions share at least one point?"""
    for v in p:
        if point_in_closed_polygon(v, q):
            return True
    for v in q:
        if point_in_closed_polygon(v, p):
            return True
    n, m = len(p), len(q)
    for i in range(n):
        for j in range(m):
            if segments_intersect(p[i], p[(i + 1) % n], q[j], q[(j + 1) % m]):
                return True
    return False


# ---------------------------------------------------------------------------
# shapes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TileShape:
    """A tile: either a polyomino cell set or a restricted integer polygon.

    Exactly one of ``cells`` / ``vertices`` is set.  The anchor is the lattice
    origin; shapes used in verification must contain the origin in their
    closed region (checked by the system builder, not here).
    """

    cells: frozenset | None = None
    vertices: tuple | None = None

    # -- constructors --------------------------------------------------------

    @staticmethod
    def from_cells(cells: Iterable[Vec]) -> "TileShape":
        cs = frozenset((int(x), int(y)) for x, y in cells)
        if not cs:
            raise ValueError("empty cell set")
        return TileShape(cells=cs).normalized()

    @staticmethod
    def from_polygon(vertices: Sequence[Vec]) -> "TileShape":
        vs = [(int(x), int(y)) for x, y in vertices]
        if len(vs) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        for i in range(len(vs)):
            dx = vs[(i + 1) % len(vs)][0] - vs[i][0]
            dy = vs[(i + 1) % len(vs)][1] - vs[i][1]
            if (dx, dy) == (0, 0):
                raise ValueError("repeated polygon vertex")
            if dx != 0 and dy != 0 and abs(dx) != abs(dy):
                raise ValueError("polygon edges must have slope 0, +-1 or infinity")
        tw = shoelace_twice(vs)
        if tw == 0:
            raise ValueError("degenerate polygon")
        if tw < 0:
            vs.reverse()
        shape = TileShape(vertices=tuple(vs))
        if 4 * shape.area != len(shape.quarters):
            raise ValueError("polygon is not simple")
        return shape

    # -- derived geometry -----------------------------------------------------

    @property
    def is_polyomino(self) -> bool:
        return self.cells is not None

    @cached_property
    def quarters(self) -> frozenset:
        if self.cells is not None:
            return frozenset((x, y, k) for x, y in self.cells for k in range(4))
        out = []
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        for x in range(min(xs), max(xs)):
            for y in range(min(ys), max(ys)):
                for k in range(4):
                    cx, cy = _QUARTER_CENTROIDS[k]
                    if point_strictly_inside((x + cx, y + cy), self.vertices):
                        out.append((x, y, k))
        return frozenset(out)

    @cached_property
    def area(self) -> Fraction:
        if self.cells is not None:
            return Fraction(len(self.cells))
        return Fraction(abs(shoelace_twice(self.vertices)), 2)

    @cached_property
    def outline(self) -> tuple:
        """Boundary vertices (polygon) or the raw cell squares (polyomino)."""
        if self.vertices is not None:
            return self.vertices
        return tuple(sorted(self.cells))

    @cached_property
    def outer_radius2(self) -> int:
        """Max squared distance from the anchor to any point of the tile."""
        if self.vertices is not None:
            return max(x * x + y * y for x, y in self.vertices)
        return max(
            max((x + dx) ** 2 + (y + dy) ** 2 for dx in (0, 1) for dy in (0, 1))
            for x, y in self.cells
        )

    @cached_property
    def closed_polygon(self) -> tuple:
        """A polygon (or list of unit squares) usable for closed-set tests."""
        if self.vertices is not None:
            return (self.vertices,)
        return tuple(
            ((x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1)) for x, y in sorted(self.cells)
        )

    def contains_anchor(self) -> bool:
        if self.cells is not None:
            return (0, 0) in self.cells
        return point_in_closed_polygon((0, 0), self.vertices)

    # -- transforms ----------------------------------------------------------

    def normalized(self) -> "TileShape":
        """Polyominoes: leftmost cell of the bottom row moves to the origin."""
        if self.cells is None:
            return self
        ymin = min(y for _, y in self.cells)
        xmin = min(x for x, y in self.cells if y == ymin)
        return TileShape(cells=frozenset((x - xmin, y - ymin) for x, y in self.cells))

    def transformed(self, mat, normalize: bool = True) -> "TileShape":
        if self.cells is not None:
            cs = set()
            for c in self.cells:
                # a dihedral matrix maps the unit square at c to the square
                # spanned by the images of two opposite corners
                x0, y0 = mat_apply(mat, c)
                x1, y1 = mat_apply(mat, (c[0] + 1, c[1] + 1))
                cs.add((min(x0, x1), min(y0, y1)))
            out = TileShape(cells=frozenset(cs))
            return out.normalized() if normalize else out
        vs = [mat_apply(mat, v) for v in self.vertices]
        if shoelace_twice(vs) < 0:
            vs.reverse()
        return TileShape(vertices=tuple(vs))

    def translated(self, d: Vec) -> "TileShape":
        if self.cells is not None:
            return TileShape(cells=frozenset((x + d[0], y + d[1]) for x, y in self.cells))
        return TileShape(vertices=tuple((x + d[0], y + d[1]) for x, y in self.vertices))

    def translation_key(self):
        """Canonical key identifying the shape up to integer translation."""
        qs = self.quarters
        x0 = min(q[0] for q in qs)
        y0 = min(q[1] for q in qs)
        return frozenset((x - x0, y - y0, k) for x, y, k in qs), (x0, y0)
