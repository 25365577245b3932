"""Global attraction for b = 0.4 (lambda = 3/5), 0.4 <= a <= 0.5.

Every orbit outside the table enters the max-norm ball of radius 2 about
(1/2, 1/2), the ball is covered by seven zones that reach the funnel zone
Z0 within three steps, and Z0 feeds the rectangles around EA.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .dynamics import (
    BilliardSystem,
    _float_support,
    _float_vertices,
    burn_in_steps,
    region_pieces,
    region_route,
)
from .family import FamilyParams, construct_points, family_constants
from .geometry import (
    ConvexPolygon,
    DomainError,
    InsidePolygon,
    Point,
    SingularHit,
    clip,
    contains,
    interiors_disjoint,
    line_intersection,
    orient,
    point_in_polygon,
    quad_from_params,
    rectangle,
    same_polygon,
    supporting_vertex,
    to_q,
)

B_FIXED = Fraction(2, 5)
LAM = Fraction(3, 5)
MU = 1 / LAM
A_RANGE = (Fraction(2, 5), Fraction(1, 2))
BALL_CENTER = Point(Fraction(1, 2), Fraction(1, 2))
BALL_RADIUS = Fraction(2)
A_, B_, C_, D_ = range(4)


def _check_a(a) -> Fraction:
    a = to_q(a)
    if not A_RANGE[0] <= a <= A_RANGE[1]:
        raise DomainError(f"a = {a} outside [0.4, 0.5]")
    return a


def system(a) -> BilliardSystem:
    return BilliardSystem(quad_from_params(_check_a(a), B_FIXED), LAM)


def _scale_through(center: Point, p: Point) -> Point:
    """The point on ray p -> center beyond it with |X center| : |center p| = 1/lam."""
    return center + (center - p) * MU


@dataclass(frozen=True)
class GlobalPoints:
    D1: Point
    C1: Point
    D2: Point
    L: Point
    L1: Point
    C2: Point
    E: Point
    E1: Point
    M: Point
    M1: Point
    A1: Point
    A2: Point
    N1: Point
    N2: Point
    N3: Point
    N4: Point
    G: Point

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def global_points(a) -> GlobalPoints:
    """All auxiliary points, built from their incidences (exact)."""
    a = _check_a(a)
    A, B, C, D = quad_from_params(a, B_FIXED).vertices
    one = Fraction(1)
    D1 = _scale_through(A, D)
    C1 = _scale_through(D, C)
    D2 = _scale_through(C, D1)
    L = line_intersection(B, C, D2, D2 + Point(0, one))
    L1 = _scale_through(D, L)
    C2 = _scale_through(A, C1)
    E = line_intersection(A, B, L1, C1)
    E1 = _scale_through(A, E)
    # the line through C2 and E1 (the undefined J1 read as E1)
    M = line_intersection(C2, E1, C, D)
    M1 = _scale_through(C, M)
    A1 = _scale_through(B, A)
    A2 = _scale_through(C, A1)
    N1 = line_intersection(A1, A1 + Point(0, one), B, C)
    N2 = line_intersection(A2, A2 + Point(0, one), D, C)
    N3 = line_intersection(A2, A2 + Point(one, 0), D, C)
    N4 = Point(L1.x, D1.y)
    G = C + (C - B) * MU
    return GlobalPoints(D1, C1, D2, L, L1, C2, E, E1, M, M1, A1, A2, N1, N2, N3, N4, G)


def listed_points(a) -> dict:
    """Coordinates in the closed forms quoted for the construction.

    E carries the corrected (negative) sign; M uses the quoted closed form.
    """
    a = _check_a(a)
    r = (34 * a - 49) / (2 * a - 5)
    F = Fraction
    return {
        "D1": Point(F(0), F(8, 3)),
        "C1": Point(F(-5, 3), F(-2, 3)),
        "D2": Point(F(8, 3), F(-152, 45)),
        "L": Point(F(8, 3), -(2 * a + 3) / (5 * (1 - a))),
        "L1": Point(F(-40, 9), (2 * a + 3) / (3 * (1 - a))),
        "C2": Point(F(25, 9), F(34, 9)),
        "E": Point(-F(5, 9) * (8 - 5 * a), F(1)),
        "E1": Point(F(25, 27) * (8 - 5 * a), F(1)),
        "M": Point(F(5, 9) * r, F(2, 9) * r),
        "M1": Point(-F(25, 27) * r + F(8, 3), -F(10, 27) * r + F(16, 15)),
        "A1": Point(8 * a / 3, F(1)),
        "A2": Point(-40 * a / 9 + F(8, 3), F(-3, 5)),
        "N3": Point(F(-3, 2), F(-3, 5)),
        "N4": Point(F(-40, 9), F(8, 3)),
    }


def point_discrepancies(a) -> dict:
    """Points whose construction differs from the quoted closed form."""
    pts = global_points(a).as_dict()
    return {k: (pts[k], v) for k, v in listed_points(a).items() if pts[k] != v}


def incidence_failures(a) -> list[str]:
    """Re-check every defining incidence of the auxiliary points."""
    a = _check_a(a)
    A, B, C, D = quad_from_params(a, B_FIXED).vertices
    g = global_points(a)
    out = []

    def scaled(name, x, center, p):
        if not (orient(p, center, x) == 0 and x - center == (center - p) * MU):
            out.append(name)

    scaled("D1", g.D1, A, D)
    scaled("C1", g.C1, D, C)
    scaled("D2", g.D2, C, g.D1)
    scaled("L1", g.L1, D, g.L)
    scaled("C2", g.C2, A, g.C1)
    scaled("E1", g.E1, A, g.E)
    scaled("M1", g.M1, C, g.M)
    scaled("A1", g.A1, B, A)
    scaled("A2", g.A2, C, g.A1)
    checks = {
        "L on BC": orient(B, C, g.L) == 0 and g.L.x == g.D2.x,
        "E on AB and L1C1": orient(A, B, g.E) == 0 and orient(g.L1, g.C1, g.E) == 0,
        "M on C2E1 and CD": orient(g.C2, g.E1, g.M) == 0 and orient(C, D, g.M) == 0,
        "N1": g.N1.x == g.A1.x and orient(B, C, g.N1) == 0,
        "N2": g.N2.x == g.A2.x and orient(D, C, g.N2) == 0,
        "N3": g.N3.y == g.A2.y and orient(D, C, g.N3) == 0,
        "N4": g.N4.x == g.L1.x and g.N4.y == g.D1.y,
        "y(D1) >= y(L1)": g.D1.y >= g.L1.y,
        "x(A1) > x(C)": g.A1.x > C.x,
        "E = (-l, 1)": g.E == Point(-family_constants(a, B_FIXED)[0], Fraction(1)),
        "G as in the family construction": g.G == construct_points(FamilyParams(a, B_FIXED)).G,
    }
    out.extend(k for k, ok in checks.items() if not ok)
    return out


# ---------------------------------------------------------------------------
# zones


@dataclass(frozen=True)
class ZoneSet:
    Z: tuple                 # Z0 ... Z6
    Z0plus: ConvexPolygon
    Z0minus: ConvexPolygon

    def __getitem__(self, i: int) -> ConvexPolygon:
        return self.Z[i]


def zones(a) -> ZoneSet:
    a = _check_a(a)
    A, B, C, D = quad_from_params(a, B_FIXED).vertices
    g = global_points(a)
    Z0 = ConvexPolygon.hull_of([g.L1, g.N4, g.D1, D, g.C1])
    Z = (
        Z0,
        ConvexPolygon([g.D1, g.C2, g.E1, A]),
        ConvexPolygon([g.A1, g.E1, g.L, g.N1]),
        ConvexPolygon([B, g.A1, g.N1]),
        ConvexPolygon([g.N2, g.A2, g.N3]),
        ConvexPolygon([g.N3, g.G, g.L, g.D2, g.M1]),
        ConvexPolygon([g.N2, C, g.G, g.A2]),
    )
    # EA runs from E to A; "left" of E -> A is above
    plus = clip(Z0, g.E, A, "left")
    minus = clip(Z0, g.E, A, "right")
    return ZoneSet(Z, plus, minus)


def zones_overlap(zs: ZoneSet) -> list[tuple[int, int]]:
    """Pairs of zones whose interiors meet (empty when the zones tile)."""
    return [(i, j) for i in range(7) for j in range(i + 1, 7)
            if not interiors_disjoint(zs[i], zs[j])]


# ---------------------------------------------------------------------------
# verification reports


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class Report:
    a: Fraction
    checks: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]


def ball_inequalities(a) -> list[Check]:
    g = global_points(a)
    lim = Fraction(3, 2)
    corner = Point(Fraction(5, 2), Fraction(5, 2))
    return [
        Check("x(C1) < -1.5", g.C1.x < -lim),
        Check("y(M1) < -1.5", g.M1.y < -lim),
        Check("y(D2) < -1.5", g.D2.y < -lim),
        Check("x(L) > 2.5", g.L.x > Fraction(5, 2)),
        Check("y(D1) > 2.5", g.D1.y > Fraction(5, 2)),
        # C2 is left of E1 going down-right; below the line means right of C2 -> E1
        Check("(2.5, 2.5) below line C2E1", orient(g.C2, g.E1, corner) < 0
              if g.C2.x < g.E1.x else orient(g.E1, g.C2, corner) > 0),
    ]


def _float_polys(polys):
    out = []
    for poly in polys:
        v = np.array([[float(p.x), float(p.y)] for p in poly.vertices])
        out.append(v)
    return out


def _inside(vs: np.ndarray, pts: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Closed containment in a clockwise convex polygon, vectorised."""
    ok = np.ones(len(pts), dtype=bool)
    n = len(vs)
    for i in range(n):
        a, b = vs[i], vs[(i + 1) % n]
        o = (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0])
        ok &= o <= tol
    return ok


def _strict_inside(vs: np.ndarray, pts: np.ndarray) -> np.ndarray:
    ok = np.ones(len(pts), dtype=bool)
    n = len(vs)
    for i in range(n):
        a, b = vs[i], vs[(i + 1) % n]
        o = (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0])
        ok &= o < 0
    return ok


def _float_step_many(verts: np.ndarray, lam: float, pts: np.ndarray) -> np.ndarray:
    """One float iterate of T on many points; rows that are singular become nan."""
    n = len(verts)
    out = np.full_like(pts, np.nan)
    done = np.zeros(len(pts), dtype=bool)
    x, y = pts[:, 0], pts[:, 1]
    for i in range(n):
        vx, vy = verts[i]
        ax, ay = verts[(i + 1) % n]
        bx, by = verts[i - 1]
        dx, dy = vx - x, vy - y
        s1 = dx * (ay - y) - dy * (ax - x)
        s2 = dx * (by - y) - dy * (bx - x)
        sel = (s1 > 0) & (s2 > 0) & ~done
        out[sel, 0] = (1 + lam) * vx - lam * x[sel]
        out[sel, 1] = (1 + lam) * vy - lam * y[sel]
        done |= sel
    return out


def sample_ball(n: int, seed: int = 0, radius=BALL_RADIUS, a=None) -> np.ndarray:
    """Uniform samples of the max-norm ball about (1/2, 1/2), outside the table."""
    rng = np.random.default_rng(seed)
    r = float(radius)
    pts = np.empty((0, 2))
    table = None
    if a is not None:
        table = _float_polys([quad_from_params(_check_a(a), B_FIXED)])[0]
    while len(pts) < n:
        cand = 0.5 + rng.uniform(-r, r, size=(2 * n, 2))
        if table is not None:
            cand = cand[~_inside(table, cand, tol=0.0)]
        pts = np.vstack([pts, cand])
    return pts[:n]


def verify_ball_cover(a, samples: int = 10**5, seed: int = 0, radius=BALL_RADIUS) -> Report:
    """The five inequalities (exact) plus a sampling check of the zone cover.

    Sampled points of the ball (minus the table) must each lie in some zone
    and reach Z0 within three iterates.
    """
    a = _check_a(a)
    rep = Report(a)
    rep.checks.extend(ball_inequalities(a))
    zs = zones(a)
    polys = _float_polys(zs.Z)
    pts = sample_ball(samples, seed, radius, a)
    covered = np.zeros(len(pts), dtype=bool)
    for vs in polys:
        covered |= _inside(vs, pts)
    uncovered = int((~covered).sum())
    rep.checks.append(Check("sampled points lie in the zones", uncovered == 0,
                            f"{uncovered} of {len(pts)} uncovered"))
    steps = steps_to_zone(a, pts, polys[0], 3)
    late = int((steps < 0).sum())
    rep.checks.append(Check("sampled points reach Z0 within 3 steps", late == 0,
                            f"{late} of {len(pts)} did not"))
    rep.data["samples"] = len(pts)
    rep.data["max_steps_to_Z0"] = int(steps.max()) if len(steps) else 0
    return rep


def steps_to_zone(a, pts: np.ndarray, zone: np.ndarray, limit: int) -> np.ndarray:
    """First k <= limit with T^k(x) in ``zone`` (closed), else -1."""
    sys = system(a)
    verts = np.array(_float_vertices(sys))
    lam = float(sys.lam)
    res = np.full(len(pts), -1)
    cur = pts.copy()
    for k in range(limit + 1):
        hit = (res < 0) & _inside(zone, cur)
        res[hit] = k
        if k < limit:
            cur = _float_step_many(verts, lam, cur)
    return res


def steps_to_rectangles(a, pts: np.ndarray, eps=Fraction(1, 1000), limit: int = 2000) -> np.ndarray:
    """First k with T^k(x) in R1 ∪ R2 (float), else -1."""
    sys = system(a)
    verts = np.array(_float_vertices(sys))
    lam = float(sys.lam)
    l = float(family_constants(a, B_FIXED)[0])
    e = float(eps)
    box = np.array([[-l + e, 1 + e * e], [0.0, 1 + e * e], [0.0, 1 - e * e], [-l + e, 1 - e * e]])
    res = np.full(len(pts), -1)
    cur = pts.copy()
    for k in range(limit + 1):
        hit = (res < 0) & _inside(box, cur, tol=0.0)
        res[hit] = k
        if (res >= 0).all():
            break
        cur = _float_step_many(verts, lam, cur)
    return res


def _transition(sys, name, src, steps, dst, equal=False, expected=None) -> Check:
    pieces = region_pieces(sys, src, steps)
    routes = sorted({sys.name(w) for w, _ in pieces})
    detail = "route " + "/".join(routes)
    if expected is not None and routes != [expected]:
        return Check(name, False, f"{detail}, expected {expected}")
    if equal:
        ok = len(pieces) == 1 and same_polygon(pieces[0][1], dst)
    else:
        ok = bool(pieces) and all(contains(dst, img) for _, img in pieces)
    return Check(name, ok, detail)


def verify_zone_transitions(a) -> Report:
    """The six zone transitions and the two forward-iteration containments.

    The first forward containment is checked on Z0+ itself.  Its bounding
    rectangle (corners N4, D1, A) also contains points outside Z0 whose
    orbit takes a different route; that piece is reported in ``data`` only.
    """
    a = _check_a(a)
    sys = system(a)
    zs = zones(a)
    g = global_points(a)
    A, D = sys.polygon[A_], sys.polygon[D_]
    Z = zs.Z
    rep = Report(a)
    rep.checks += [
        _transition(sys, "T(Z1) = Z0-", Z[1], 1, zs.Z0minus, equal=True, expected="A"),
        _transition(sys, "T(Z2) in Z0+", Z[2], 1, zs.Z0plus, expected="B"),
        _transition(sys, "T^2(Z3) in Z0-", Z[3], 2, zs.Z0minus),
        _transition(sys, "T(Z4) in Z2", Z[4], 1, Z[2], expected="C"),
        _transition(sys, "T(Z5) in Z1", Z[5], 1, Z[1]),
        _transition(sys, "T(Z6) in Z3", Z[6], 1, Z[3]),
        _transition(sys, "T^3(Z0+) in Z0-", zs.Z0plus, 3, zs.Z0minus, expected="DCA"),
    ]
    box = rectangle(g.N4.x, A.y, g.D1.x, g.D1.y)
    rep.data["rectangle_N4_D1_A"] = [
        (sys.name(w), contains(zs.Z0minus, img)) for w, img in region_pieces(sys, box, 3)]
    pieces = region_pieces(sys, zs.Z0minus, 3)
    left_ok, right_ok, details = True, True, []
    for w, img in pieces:
        details.append(sys.name(w))
        left = clip(img, D, A, "left")      # x <= 0
        right = clip(img, D, A, "right")    # x >= 0
        if left is not None and not contains(zs.Z0plus, left):
            left_ok = False
        if right is not None:
            c = _transition(sys, "", right, 1, zs.Z0minus)
            right_ok &= c.passed
            details.append(c.detail)
    rep.checks.append(Check("T^3(Z0-) = Z' + Z'' with Z' in Z0+ and T(Z'') in Z0-",
                            left_ok and right_ok, "; ".join(details)))
    return rep


def offset_contraction(a) -> dict:
    """Largest |y - 1| before and after the two returns to Z0 (the proof's contraction)."""
    sys = system(a)
    zs = zones(a)
    A = sys.polygon[A_]

    def height(poly):
        return max(abs(v.y - 1) for v in poly.vertices)

    w3, img3 = region_route(sys, zs.Z0plus, 3)
    wm, imgm = region_route(sys, zs.Z0minus, 3)
    right = clip(imgm, sys.polygon[D_], A, "right")
    out = {"Z0plus": (height(zs.Z0plus), height(img3))}
    if right is not None:
        w1, img4 = region_route(sys, right, 1)
        out["Z0minus"] = (height(zs.Z0minus), height(img4))
    return out


# ---------------------------------------------------------------------------
# Birkhoff averages


@dataclass(frozen=True)
class ErgodicReport:
    observable: str
    starts: list
    averages: list
    spread: float
    n: int
    burn_in: list


def _resolve_side(sys: BilliardSystem, x: float, y: float, sigma: int) -> int:
    """Vertex for a float point that sits numerically on the singular set.

    The true orbit is displaced from the float orbit, and every branch maps
    displacements by ``-lam``, so the side of the line y = 1 alternates.
    The side is resolved exactly at a point nudged by ``sigma``.
    """
    px, py = Fraction(x), Fraction(y)
    nudge = Fraction(sigma if sigma else 1, 10**40)
    for cand in (Point(px, py + nudge), Point(px + nudge, py + nudge)):
        try:
            return supporting_vertex(sys.polygon, cand)
        except (SingularHit, InsidePolygon):
            continue
    raise SingularHit(Point(px, py), [], [])


def birkhoff_average(sys: BilliardSystem, observable: Callable[[float, float], float],
                     x: Point, n: int, burn_in: int | None = None) -> float:
    """``(1/n) sum_{i<n} observable(T^i y)`` with ``y`` the start after burn-in.

    Burn-in defaults to the steps needed to reach the trapping ball (within
    10^-3) plus 1000.  Iteration is in floating point; when a float orbit
    lands numerically on the singular line y = 1 (orbits converge to it
    exponentially) it is continued on the side of the true orbit, tracked by
    the sign of its last visible offset from that line, which flips every step.
    """
    return _birkhoff(sys, observable, x, n, burn_in)[0]


def _birkhoff(sys, observable, x, n, burn_in):
    if burn_in is None:
        c = sys.polygon.centroid()
        burn_in = burn_in_steps(sys, x, c) + 1000
    verts = _float_vertices(sys)
    lam = float(sys.lam)
    px, py = float(x.x), float(x.y)
    sigma = 0
    total = 0.0
    sides: dict = {}
    for k in range(burn_in + n):
        if k >= burn_in:
            total += observable(px, py)
        d = py - 1.0
        if d != 0.0 and abs(d) < 1e-6:
            sigma = 1 if d > 0 else -1
        v = _float_support(verts, px, py)
        if v < 0:
            key = (px, py, sigma)
            v = sides.get(key)
            if v is None:
                v = sides[key] = _resolve_side(sys, px, py, sigma)
        vx, vy = verts[v]
        px, py = (1 + lam) * vx - lam * px, (1 + lam) * vy - lam * py
        sigma = -sigma
    return total / n, burn_in


def random_starts(sys: BilliardSystem, k: int, seed: int = 0, box: float = 10.0) -> list[Point]:
    """``k`` seeded random starts in [-box, box]^2 outside the table."""
    rng = random.Random(seed)
    out = []
    while len(out) < k:
        p = Point(Fraction(rng.uniform(-box, box)), Fraction(rng.uniform(-box, box)))
        if not point_in_polygon(sys.polygon, p):
            out.append(p)
    return out


def ergodic_report(a, n: int = 10**5, starts: int = 5, seed: int = 0,
                   observable: str = "x") -> ErgodicReport:
    sys = system(a)
    obs = {"x": lambda x, y: x, "y": lambda x, y: y, "one": lambda x, y: 1.0}[observable]
    pts = random_starts(sys, starts, seed)
    avgs, burns = [], []
    for p in pts:
        avg, burn = _birkhoff(sys, obs, p, n, None)
        avgs.append(avg)
        burns.append(burn)
    spread = max(avgs) - min(avgs)
    return ErgodicReport(observable, pts, avgs, spread, n, burns)


def trapping_entry_bound(sys: BilliardSystem, x: Point, margin: int = 2) -> int:
    """Steps bound for entering the radius-2 max-norm ball about (1/2, 1/2)."""
    d = float(max(abs(x.x - BALL_CENTER.x), abs(x.y - BALL_CENTER.y)))
    if d <= 2:
        return margin
    return math.ceil(math.log(d / 2) / math.log(1 / float(sys.lam))) + margin
