"""Exact planar primitives for outer billiards.

Coordinates are :class:`fractions.Fraction` by default so that every
orientation test is a certificate.  The same functions accept floats; the
sweep code uses that for speed.

Orientation convention (fixed here, imported everywhere else): polygons are
stored clockwise, and a point ``w`` lies *left* of the ray ``x -> v`` when
``cross(v - x, w - x) > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, NamedTuple, Sequence


class GeometryError(ValueError):
    pass


class DomainError(GeometryError):
    """Parameters outside the region where the construction makes sense."""


class NonConvex(GeometryError):
    pass


class DegenerateMap(GeometryError):
    pass


class InsidePolygon(GeometryError):
    """The map is undefined on the closed table."""


class SingularHit(GeometryError):
    """The point lies on a singular ray, so the supporting vertex is ambiguous.

    ``rays`` holds the indices ``i`` of the rays ``A_i -> A_{i+1}`` that
    contain the point and ``candidates`` the vertices that a one-sided
    continuous extension could use.
    """

    def __init__(self, point, rays, candidates):
        super().__init__(f"{point} lies on singular ray(s) {list(rays)}")
        self.point = point
        self.rays = tuple(rays)
        self.candidates = tuple(candidates)


def to_q(value) -> Fraction:
    """Convert ``value`` to a Fraction, reading floats by their shortest repr.

    ``to_q(0.3) == Fraction(3, 10)``, unlike ``Fraction(0.3)``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(str(value).strip())


@dataclass(frozen=True, slots=True)
class Point:
    x: object
    y: object

    def __add__(self, other: "Point") -> "Point":
        return Point(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Point") -> "Point":
        return Point(self.x - other.x, self.y - other.y)

    def __mul__(self, k) -> "Point":
        return Point(self.x * k, self.y * k)

    __rmul__ = __mul__

    def __truediv__(self, k) -> "Point":
        return Point(self.x / k, self.y / k)

    def __neg__(self) -> "Point":
        return Point(-self.x, -self.y)

    def __iter__(self):
        yield self.x
        yield self.y

    def __repr__(self) -> str:
        return f"Point({self.x}, {self.y})"

    def to_float(self) -> "Point":
        return Point(float(self.x), float(self.y))

    def exact(self) -> "Point":
        return Point(to_q(self.x), to_q(self.y))


def P(x, y) -> Point:
    """Exact point from anything :func:`to_q` understands."""
    return Point(to_q(x), to_q(y))


def cross(u: Point, v: Point):
    return u.x * v.y - u.y * v.x


def orient(o: Point, p: Point, q: Point):
    """Twice the signed area of (o, p, q); positive for a left turn."""
    return (p.x - o.x) * (q.y - o.y) - (p.y - o.y) * (q.x - o.x)


def left_of_ray(x: Point, v: Point, w: Point):
    """Signed test: > 0 iff ``w`` is strictly left of the ray from x through v."""
    return orient(x, v, w)


def max_norm(p: Point, center: Point | None = None):
    if center is not None:
        p = p - center
    return max(abs(p.x), abs(p.y))


def line_intersection(p1: Point, p2: Point, q1: Point, q2: Point) -> Point:
    """Intersection of line p1p2 with line q1q2."""
    d1 = p2 - p1
    d2 = q2 - q1
    den = cross(d1, d2)
    if den == 0:
        raise GeometryError("parallel lines")
    t = cross(q1 - p1, d2) / den
    return p1 + d1 * t


def on_segment(p: Point, a: Point, b: Point) -> bool:
    if orient(a, b, p) != 0:
        return False
    return (min(a.x, b.x) <= p.x <= max(a.x, b.x)
            and min(a.y, b.y) <= p.y <= max(a.y, b.y))


class SingularRay(NamedTuple):
    index: int       # ray from vertex ``index`` through vertex ``index + 1``
    origin: Point    # the second vertex; the singular part starts here
    direction: Point


@dataclass(frozen=True)
class ConvexPolygon:
    """Strictly convex polygon with clockwise vertices."""

    vertices: tuple

    def __init__(self, vertices: Iterable[Point]):
        verts = tuple(vertices)
        object.__setattr__(self, "vertices", verts)
        n = len(verts)
        if n < 3:
            raise NonConvex("a polygon needs at least 3 vertices")
        # every other vertex strictly on the right of each edge: this gives
        # strict convexity, clockwise orientation and simplicity at once
        for i in range(n):
            a, b = verts[i], verts[(i + 1) % n]
            for j in range(n):
                if j in (i, (i + 1) % n):
                    continue
                if orient(a, b, verts[j]) >= 0:
                    raise NonConvex(
                        f"vertex {j} is not strictly right of edge {i}->{(i + 1) % n}")

    @classmethod
    def hull_of(cls, points: Iterable[Point]) -> "ConvexPolygon":
        """Clockwise polygon from points already in convex position.

        Duplicates and vertices in the middle of a straight edge are dropped;
        counterclockwise input is reversed.
        """
        pts = []
        for p in points:
            if not pts or pts[-1] != p:
                pts.append(p)
        while len(pts) > 1 and pts[0] == pts[-1]:
            pts.pop()
        changed = True
        while changed and len(pts) >= 3:
            changed = False
            for i in range(len(pts)):
                if orient(pts[i - 1], pts[i], pts[(i + 1) % len(pts)]) == 0:
                    del pts[i]
                    changed = True
                    break
        if len(pts) >= 3 and signed_area(pts) > 0:
            pts.reverse()
        return cls(pts)

    def __len__(self) -> int:
        return len(self.vertices)

    def __getitem__(self, i: int) -> Point:
        return self.vertices[i % len(self.vertices)]

    def edges(self):
        n = len(self.vertices)
        return [(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)]

    @property
    def singular_rays(self) -> list[SingularRay]:
        n = len(self.vertices)
        return [SingularRay(i, self[i + 1], self[i + 1] - self[i]) for i in range(n)]

    def area(self):
        return -signed_area(self.vertices)

    def bounding_box(self):
        xs = [v.x for v in self.vertices]
        ys = [v.y for v in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)

    def centroid(self) -> Point:
        n = len(self.vertices)
        s = self.vertices[0]
        for v in self.vertices[1:]:
            s = s + v
        return s / n

    def contains(self, other) -> bool:
        return contains(self, other)


def signed_area(pts: Sequence[Point]):
    n = len(pts)
    s = 0
    for i in range(n):
        s += cross(pts[i], pts[(i + 1) % n])
    return s / 2


def rectangle(x0, y0, x1, y1) -> ConvexPolygon:
    """Axis-aligned rectangle [x0, x1] x [y0, y1], clockwise from the top left."""
    return ConvexPolygon([Point(x0, y1), Point(x1, y1), Point(x1, y0), Point(x0, y0)])


def point_in_polygon(poly: ConvexPolygon, p: Point) -> bool:
    """Closed containment (boundary counts as inside)."""
    for a, b in poly.edges():
        if orient(a, b, p) > 0:
            return False
    return True


def contains(outer: ConvexPolygon, inner) -> bool:
    if isinstance(inner, Point):
        return point_in_polygon(outer, inner)
    return all(point_in_polygon(outer, v) for v in inner.vertices)


def violations(outer: ConvexPolygon, inner: ConvexPolygon) -> list[Point]:
    """Vertices of ``inner`` lying outside ``outer``."""
    return [v for v in inner.vertices if not point_in_polygon(outer, v)]


def interiors_disjoint(p: ConvexPolygon, q: ConvexPolygon) -> bool:
    """True iff the open interiors do not meet (separating-axis test).

    Two convex polygons have disjoint interiors iff one of their edges
    supports a closed half-plane containing the other polygon.
    """
    for first, second in ((p, q), (q, p)):
        for a, b in first.edges():
            if all(orient(a, b, v) >= 0 for v in second.vertices):
                return True
    return False


def clip(poly: ConvexPolygon, p: Point, q: Point, keep: str = "right"):
    """Part of ``poly`` on one closed side of the line ``p q``, or ``None``.

    Returns ``None`` when the part has empty interior.
    """
    sign = -1 if keep == "right" else 1
    verts = poly.vertices
    out = []
    n = len(verts)
    for i in range(n):
        u, w = verts[i], verts[(i + 1) % n]
        su, sw = sign * orient(p, q, u), sign * orient(p, q, w)
        if su >= 0:
            out.append(u)
        if (su > 0 > sw) or (su < 0 < sw):
            out.append(line_intersection(p, q, u, w))
    try:
        return ConvexPolygon.hull_of(out)
    except (NonConvex, GeometryError):
        return None


def same_polygon(p: ConvexPolygon, q: ConvexPolygon) -> bool:
    """Equality as point sets (same vertices, any starting vertex)."""
    return set(p.vertices) == set(q.vertices)


# ---------------------------------------------------------------------------
# supporting vertex


def _neighbour_signs(poly: ConvexPolygon, x: Point, i: int):
    v = poly[i]
    return left_of_ray(x, v, poly[i + 1]), left_of_ray(x, v, poly[i - 1])


def supporting_vertex(poly: ConvexPolygon, x: Point) -> int:
    """Index of the vertex v with the polygon strictly left of the ray x -> v.

    Raises :class:`InsidePolygon` when ``x`` is in the closed polygon and
    :class:`SingularHit` when ``x`` is on a singular ray.  Checking the two
    neighbours of ``v`` suffices by convexity.
    """
    if point_in_polygon(poly, x):
        raise InsidePolygon(f"{x} is inside the polygon")
    candidates = []
    for i in range(len(poly)):
        s1, s2 = _neighbour_signs(poly, x, i)
        if s1 > 0 and s2 > 0:
            return i
        if s1 >= 0 and s2 >= 0:
            candidates.append(i)
    rays = [r.index for r in poly.singular_rays if _on_ray(x, r)]
    raise SingularHit(x, rays, candidates)


def _on_ray(x: Point, ray: SingularRay) -> bool:
    d = x - ray.origin
    return cross(ray.direction, d) == 0 and (
        ray.direction.x * d.x + ray.direction.y * d.y) >= 0


def resolve_singular(poly: ConvexPolygon, hit: SingularHit, convention: str) -> int:
    """Vertex used by the one-sided extension of the map at a singular point.

    On the ray ``A_i -> A_{i+1}`` the side to the *left* of the ray direction
    reflects on ``A_i`` and the right side on ``A_{i+1}``.  Points on two
    rays at once have no one-sided resolution.
    """
    if convention not in ("left", "right") or len(hit.rays) != 1:
        raise hit
    i = hit.rays[0]
    return i % len(poly) if convention == "left" else (i + 1) % len(poly)


def branch_region_contains(poly: ConvexPolygon, v: int, region) -> bool:
    """Whether ``region`` lies in the closure of the set that reflects on ``v``.

    That set is the open wedge at vertex ``v`` cut out by the lines of the two
    edges through ``v``; on its closure the branch map at ``v`` is the
    continuous extension of the billiard map.
    """
    pts = region.vertices if isinstance(region, ConvexPolygon) else [region]
    for x in pts:
        s1, s2 = _neighbour_signs(poly, x, v)
        if s1 < 0 or s2 < 0:
            return False
    return True


# ---------------------------------------------------------------------------
# affine maps


@dataclass(frozen=True)
class AffineMap2D:
    """``p -> linear @ p + offset`` with a 2x2 matrix given row by row."""

    linear: tuple
    offset: Point

    def __call__(self, p: Point) -> Point:
        (a, b), (c, d) = self.linear
        return Point(a * p.x + b * p.y + self.offset.x,
                     c * p.x + d * p.y + self.offset.y)

    def __matmul__(self, other: "AffineMap2D") -> "AffineMap2D":
        """``self @ other`` applies ``other`` first."""
        (a, b), (c, d) = self.linear
        (e, f), (g, h) = other.linear
        lin = ((a * e + b * g, a * f + b * h), (c * e + d * g, c * f + d * h))
        return AffineMap2D(lin, self(other.offset))

    @property
    def det(self):
        (a, b), (c, d) = self.linear
        return a * d - b * c

    def inverse(self) -> "AffineMap2D":
        det = self.det
        if det == 0:
            raise DegenerateMap("singular linear part")
        (a, b), (c, d) = self.linear
        lin = ((d / det, -b / det), (-c / det, a / det))
        inv = AffineMap2D(lin, Point(0, 0))
        return AffineMap2D(lin, -inv(self.offset))

    @classmethod
    def identity(cls) -> "AffineMap2D":
        one, zero = Fraction(1), Fraction(0)
        return cls(((one, zero), (zero, one)), Point(zero, zero))

    @classmethod
    def homothety(cls, k, center: Point) -> "AffineMap2D":
        """``p -> center + k (p - center)``."""
        zero = k * 0
        return cls(((k, zero), (zero, k)), center * (1 - k))

    @classmethod
    def from_triangles(cls, src: Sequence[Point], dst: Sequence[Point]) -> "AffineMap2D":
        """The affine map sending src[i] to dst[i] for i = 0, 1, 2."""
        s0, s1, s2 = src
        d0, d1, d2 = dst
        u1, u2 = s1 - s0, s2 - s0
        w1, w2 = d1 - d0, d2 - d0
        den = cross(u1, u2)
        if den == 0:
            raise DegenerateMap("source points are collinear")
        # solve M [u1 u2] = [w1 w2]
        inv = ((u2.y / den, -u2.x / den), (-u1.y / den, u1.x / den))
        lin = ((w1.x * inv[0][0] + w2.x * inv[1][0], w1.x * inv[0][1] + w2.x * inv[1][1]),
               (w1.y * inv[0][0] + w2.y * inv[1][0], w1.y * inv[0][1] + w2.y * inv[1][1]))
        m = cls(lin, Point(0, 0))
        return cls(lin, d0 - m(s0))


def affine_image(m: AffineMap2D, poly: ConvexPolygon) -> ConvexPolygon:
    if m.det == 0:
        raise DegenerateMap("cannot map a polygon through a singular map")
    verts = [m(v) for v in poly.vertices]
    if m.det < 0:
        verts.reverse()
    return ConvexPolygon(verts)


# ---------------------------------------------------------------------------
# the quadrilateral family


class QuadParams(NamedTuple):
    a: Fraction
    b: Fraction


def quad_from_params(a, b) -> ConvexPolygon:
    """The quadrilateral A=(0,1), B=(a,1), C=(1,b), D=(0,0).

    The three inequalities a > 0, b < 1, ab < 1 are exactly the turning
    conditions at A, B and C, so they are checked up front.
    """
    a, b = to_q(a), to_q(b)
    if not (a > 0 and b < 1 and a * b < 1):
        raise DomainError(f"(a, b) = ({a}, {b}) needs a > 0, b < 1, ab < 1")
    one, zero = Fraction(1), Fraction(0)
    return ConvexPolygon([Point(zero, one), Point(a, one), Point(one, b), Point(zero, zero)])


def cyclic_relabel(a, b) -> QuadParams:
    """Parameters after renaming (A, B, C, D) -> (D, A, B, C)."""
    a, b = to_q(a), to_q(b)
    if a == 0 or b == 1:
        raise DomainError("relabelling needs a != 0 and b != 1")
    return QuadParams(1 - b, (1 - 1 / a) / (1 - b))


def relabel_map(a, b) -> AffineMap2D:
    """Orientation-preserving affine map from quad (a, b) onto its relabelling.

    The old vertex A is renamed D, B is renamed A, and so on, so old
    B, C, D, A go to the new A, B, C, D respectively.
    """
    a, b = to_q(a), to_q(b)
    a2, b2 = cyclic_relabel(a, b)
    old = quad_from_params(a, b).vertices
    new = quad_from_params(a2, b2).vertices
    return AffineMap2D.from_triangles([old[1], old[2], old[3]], [new[0], new[1], new[2]])
