"""Outer billiards with contraction: the map T, orbits and periodic orbits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .geometry import (
    AffineMap2D,
    ConvexPolygon,
    InsidePolygon,
    Point,
    SingularHit,
    affine_image,
    branch_region_contains,
    clip,
    max_norm,
    orient,
    resolve_singular,
    supporting_vertex,
    to_q,
)

DEFAULT_BUDGET = 10**6
FLOAT_RETURN_TOL = 1e-9


class NotFound(LookupError):
    """No periodic itinerary was found within the iteration budget."""


class InvalidOrbit(ValueError):
    """A candidate periodic orbit fails the supporting-vertex validation."""


@dataclass(frozen=True)
class BilliardSystem:
    polygon: ConvexPolygon
    lam: Fraction
    mu: Fraction = field(init=False)

    def __post_init__(self):
        lam = to_q(self.lam) if not isinstance(self.lam, Fraction) else self.lam
        if not 0 < lam < 1:
            raise ValueError(f"contraction factor {lam} must lie in (0, 1)")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", 1 / lam)

    @property
    def vertex_names(self) -> str:
        return "ABCDEFGHIJKLMNOPQRSTUVWXYZ"[: len(self.polygon)]

    def name(self, word: Sequence[int]) -> str:
        return "".join(self.vertex_names[i] for i in word)


def branch_map(sys: BilliardSystem, v: int) -> AffineMap2D:
    """The reflection-with-contraction ``w -> (1+lam) v - lam w``."""
    lam = sys.lam
    zero = Fraction(0)
    return AffineMap2D(((-lam, zero), (zero, -lam)), sys.polygon[v] * (1 + lam))


def compose_word(sys: BilliardSystem, word: Sequence[int]) -> AffineMap2D:
    """Branch maps of ``word`` composed in order (``word[0]`` acts first)."""
    m = AffineMap2D.identity()
    for v in word:
        m = branch_map(sys, v) @ m
    return m


def apply_vertex(sys: BilliardSystem, v: int, x: Point) -> Point:
    return sys.polygon[v] * (1 + sys.lam) - x * sys.lam


def step(sys: BilliardSystem, x: Point, convention: str | None = None):
    """One iterate of T.  Returns ``(Tx, vertex index)``.

    Raises :class:`SingularHit` on the singular set unless a one-sided
    ``convention`` ("left" or "right") resolves it.
    """
    try:
        v = supporting_vertex(sys.polygon, x)
    except SingularHit as hit:
        if convention is None:
            raise
        v = resolve_singular(sys.polygon, hit, convention)
    return apply_vertex(sys, v, x), v


@dataclass
class OrbitRecord:
    points: list
    itinerary: list
    status: str                 # "completed", "singular" or "cycle"
    singular_step: int | None = None
    preperiod: int | None = None
    period: int | None = None


def orbit(sys: BilliardSystem, x: Point, n: int = DEFAULT_BUDGET,
          convention: str | None = None) -> OrbitRecord:
    """Iterate up to ``n`` steps, stopping at a singular point or a repeat.

    Cycle detection hashes points, so it only fires in exact arithmetic
    (or when a float orbit repeats bit for bit).
    """
    points = [x]
    itinerary: list[int] = []
    seen = {x: 0}
    for k in range(n):
        try:
            x, v = step(sys, x, convention)
        except SingularHit:
            return OrbitRecord(points, itinerary, "singular", singular_step=k)
        points.append(x)
        itinerary.append(v)
        if x in seen:
            pre = seen[x]
            return OrbitRecord(points, itinerary, "cycle",
                               preperiod=pre, period=k + 1 - pre)
        seen[x] = k + 1
    return OrbitRecord(points, itinerary, "completed")


# ---------------------------------------------------------------------------
# periodic orbits


@dataclass(frozen=True)
class PeriodicOrbit:
    points: tuple
    itinerary: tuple
    period: int
    degenerate: bool

    def word(self, sys: BilliardSystem) -> str:
        return sys.name(self.itinerary)


def primitive_root(word: Sequence[int]) -> tuple:
    word = tuple(word)
    n = len(word)
    for d in range(1, n + 1):
        if n % d == 0 and word[:d] * (n // d) == word:
            return word[:d]
    return word


def cycle_points(sys: BilliardSystem, word: Sequence[int]) -> list[Point]:
    """Exact points of the cycle following ``word``.

    The composed map has linear part ``(-lam)^q`` times the identity, so its
    fixed point ``c / (1 - (-lam)^q)`` always exists and is unique.
    """
    m = compose_word(sys, word)
    k = 1 - m.linear[0][0]
    w = m.offset / k
    pts = [w]
    for v in word[:-1]:
        w = apply_vertex(sys, v, w)
        pts.append(w)
    return pts


def certify_cycle(sys: BilliardSystem, word: Sequence[int],
                  convention: str | None = None) -> PeriodicOrbit:
    """Exact periodic orbit with itinerary ``word`` or :class:`InvalidOrbit`.

    With a one-sided convention, a cycle point where T is undefined (on a
    singular ray, or on an edge of the table) is accepted when it lies in the
    closed branch wedge of its claimed vertex, i.e. the claimed image is a
    one-sided limit of T.  The orbit is then flagged degenerate.
    """
    word = primitive_root(word)
    pts = cycle_points(sys, word)
    poly = sys.polygon
    degenerate = False
    for k, (w, v) in enumerate(zip(pts, word)):
        try:
            u = supporting_vertex(poly, w)
        except (InsidePolygon, SingularHit):
            if (convention is None or w in poly.vertices
                    or not branch_region_contains(poly, v, w)
                    or _strictly_inside(poly, w)):
                raise InvalidOrbit(f"cycle point {k} = {w} is not a regular point "
                                   f"and not a one-sided limit") from None
            degenerate = True
            continue
        if u != v:
            raise InvalidOrbit(
                f"cycle point {k} reflects on {sys.vertex_names[u]}, "
                f"not {sys.vertex_names[v]}")
    return PeriodicOrbit(tuple(pts), word, len(word), degenerate)


def _strictly_inside(poly: ConvexPolygon, w: Point) -> bool:
    return all(orient(a, b, w) < 0 for a, b in poly.edges())


def _float_vertices(sys: BilliardSystem):
    return [(float(v.x), float(v.y)) for v in sys.polygon.vertices]


def _float_support(verts, x, y):
    """Supporting vertex in floating point; -1 on a (numerically) singular point."""
    n = len(verts)
    for i in range(n):
        vx, vy = verts[i]
        ax, ay = verts[(i + 1) % n]
        bx, by = verts[i - 1]
        dx, dy = vx - x, vy - y
        if dx * (ay - y) - dy * (ax - x) > 0 and dx * (by - y) - dy * (bx - x) > 0:
            return i
    return -1


def _tail_period(itinerary: list[int], qmax: int, reps: int = 3) -> int | None:
    n = len(itinerary)
    for q in range(1, min(qmax, n // reps) + 1):
        tail = itinerary[n - q:]
        if all(itinerary[n - (r + 1) * q:n - r * q] == tail for r in range(1, reps)):
            return q
    return None


def detect_periodic(sys: BilliardSystem, x: Point, budget: int = DEFAULT_BUDGET,
                    convention: str | None = None, qmax: int = 400,
                    exact: bool = False) -> PeriodicOrbit:
    """Find the periodic orbit attracting ``x`` and certify it exactly.

    The orbit is followed in floating point (or exactly, if ``exact``).  A
    cycle is declared when the point returns within ``FLOAT_RETURN_TOL`` of
    itself with a repeating itinerary; it is then certified by solving the
    exact affine fixed point of the cycle word.  If the float orbit lands on
    the singular set first, the repeating tail of its itinerary is tried.
    """
    if exact:
        return _detect_exact(sys, x, budget, convention, qmax)
    verts = _float_vertices(sys)
    lam = float(sys.lam)
    px, py = float(x.x), float(x.y)
    xs, ys, itin = [px], [py], []
    tried = set()
    for k in range(budget):
        v = _float_support(verts, px, py)
        if v < 0:
            # numerically singular: resolve exactly at the float point
            try:
                _, v = step(sys, Point(to_q(px), to_q(py)), convention)
            except (SingularHit, InsidePolygon):
                q = _tail_period(itin, qmax)
                if q is not None:
                    try:
                        return certify_cycle(sys, itin[-q:], convention)
                    except InvalidOrbit:
                        pass
                raise NotFound(f"orbit became singular at step {k}") from None
        vx, vy = verts[v]
        px, py = (1 + lam) * vx - lam * px, (1 + lam) * vy - lam * py
        xs.append(px)
        ys.append(py)
        itin.append(v)
        n = len(itin)
        for q in range(1, min(qmax, n // 2) + 1):
            if (abs(xs[n] - xs[n - q]) < FLOAT_RETURN_TOL
                    and abs(ys[n] - ys[n - q]) < FLOAT_RETURN_TOL
                    and itin[n - q:] == itin[n - 2 * q:n - q]):
                word = tuple(itin[n - q:])
                key = primitive_root(word)
                if key in tried:
                    break
                tried.add(key)
                try:
                    return certify_cycle(sys, word, convention)
                except InvalidOrbit:
                    break
    raise NotFound(f"no certified cycle within {budget} steps")


def _detect_exact(sys, x, budget, convention, qmax):
    tried = set()
    itin: list[int] = []
    for k in range(budget):
        try:
            x, v = step(sys, x, convention)
        except SingularHit:
            raise NotFound(f"orbit became singular at step {k}") from None
        itin.append(v)
        q = _tail_period(itin, qmax)
        if q is not None:
            key = primitive_root(itin[-q:])
            if key not in tried:
                tried.add(key)
                try:
                    return certify_cycle(sys, key, convention)
                except InvalidOrbit:
                    pass
    raise NotFound(f"no certified cycle within {budget} steps")


def region_route(sys: BilliardSystem, region: ConvexPolygon, steps: int) -> tuple:
    """Itinerary of a convex region for ``steps`` iterates, from branch wedges.

    At every step the whole (image) region must lie in the closed wedge of a
    single vertex, otherwise the singular set cuts it and ``InvalidOrbit`` is
    raised.  Returns the word and the final image.
    """
    poly = sys.polygon
    word = []
    cur = region
    for k in range(steps):
        vs = [v for v in range(len(poly)) if branch_region_contains(poly, v, cur)]
        if len(vs) != 1:
            raise InvalidOrbit(f"step {k}: region lies in wedges {vs}")
        word.append(vs[0])
        cur = affine_image(branch_map(sys, vs[0]), cur)
    return tuple(word), cur


def region_pieces(sys: BilliardSystem, region: ConvexPolygon, steps: int) -> list:
    """``T^steps`` of a convex region as ``[(word, image)]`` pieces.

    Each region is cut into its parts in the closed branch wedges (parts
    without interior are dropped) and every part is followed on its own.
    """
    poly = sys.polygon
    n = len(poly)
    pieces = [((), region)]
    for _ in range(steps):
        nxt = []
        for word, cur in pieces:
            for v in range(n):
                part = clip(cur, poly[v], poly[v + 1], "left")
                if part is not None:
                    part = clip(part, poly[v], poly[v - 1], "left")
                if part is not None:
                    nxt.append((word + (v,), affine_image(branch_map(sys, v), part)))
        pieces = nxt
    return pieces


def triangular_orbit(sys: BilliardSystem, skipped: int,
                     convention: str | None = None) -> PeriodicOrbit:
    """The period-3 orbit that never reflects on vertex ``skipped``.

    T turns counterclockwise around a clockwise table, so the cycle visits
    the three remaining vertices in decreasing index order.
    """
    if len(sys.polygon) != 4:
        raise ValueError("triangular orbits are defined for quadrilaterals")
    others = [i for i in range(4) if i != skipped % 4]
    return certify_cycle(sys, list(reversed(others)), convention)


def trapping_radius(sys: BilliardSystem, center: Point):
    """Radius ``(1+lam)/(1-lam) max |v_i - center|`` of the absorbing max-norm ball."""
    lam = sys.lam
    r = max(max_norm(v, center) for v in sys.polygon.vertices)
    return (1 + lam) / (1 - lam) * r


def burn_in_steps(sys: BilliardSystem, x: Point, center: Point, slack=1e-3) -> int:
    """Steps after which an orbit from ``x`` is within ``slack`` of the trapping ball.

    Outside the ball the excess over the radius shrinks at least by ``lam``
    per step.
    """
    excess = float(max_norm(x, center) - trapping_radius(sys, center))
    if excess <= slack:
        return 0
    return math.ceil(math.log(excess / slack) / math.log(1 / float(sys.lam)))
