"""The quadrilateral family A=(0,1), B=(a,1), C=(1,b), D=(0,0) at lambda = 1 - b.

Orbits near the segment EA on the line y = 1 return to it along three fixed
routes, which turns the planar map into two piecewise-affine circle maps:
``g`` (first return below EA) and ``f`` (first return above EA).

Points of EA are parametrised by ``s = 1 + X/l`` in (0, 1], so E is s = 0
and A is s = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from . import circle
from .circle import (
    IntervalCover,
    MonotoneLift,
    OverlappingImages,
    RationalCertificate,
    RotationEnclosure,
)
from .dynamics import (
    BilliardSystem,
    InvalidOrbit,
    PeriodicOrbit,
    certify_cycle,
    compose_word,
    region_route,
    step,
)
from .geometry import (
    ConvexPolygon,
    DomainError,
    Point,
    affine_image,
    branch_region_contains,
    contains,
    interiors_disjoint,
    line_intersection,
    orient,
    quad_from_params,
    rectangle,
    to_q,
    violations,
)

DEFAULT_EPS = Fraction(1, 1000)
A_, B_, C_, D_ = range(4)

# routes fixed by the containment lemma (vertex indices; word[0] acts first)
ROUTE_R1 = (D_, C_, A_)         # R1 -> R2, 3 steps
ROUTE_R2L = (D_, C_, B_, A_)    # R2l -> R2r, 4 steps
ROUTE_R2R = (D_, C_, B_)        # R2r -> R1, 3 steps


class RouteError(RuntimeError):
    """A region does not follow a single branch, or not the expected one."""


class EpsilonTooLarge(ValueError):
    pass


class InjectivityFailure(OverlappingImages):
    pass


@dataclass(frozen=True)
class FamilyParams:
    a: Fraction
    b: Fraction
    lam: Fraction = None
    eps: Fraction = DEFAULT_EPS

    def __post_init__(self):
        object.__setattr__(self, "a", to_q(self.a))
        object.__setattr__(self, "b", to_q(self.b))
        lam = 1 - self.b if self.lam is None else to_q(self.lam)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "eps", to_q(self.eps))

    @property
    def mu(self) -> Fraction:
        return 1 / self.lam

    @property
    def polygon(self) -> ConvexPolygon:
        return quad_from_params(self.a, self.b)

    @property
    def system(self) -> BilliardSystem:
        return BilliardSystem(self.polygon, self.lam)

    def problems(self) -> list[str]:
        a, b, lam = self.a, self.b, self.lam
        out = []
        if not (0 < a < 1 and 0 < b < 1):
            out.append("need 0 < a, b < 1")
        if a + b > 1:
            out.append("need a + b <= 1")
        if lam != 1 - b:
            out.append("lambda must equal 1 - b")
        if not a < upper_a(b):
            out.append("need a < 1 + lambda - lambda^3 - lambda^4")
        if self.eps <= 0:
            out.append("epsilon must be positive")
        return out

    @property
    def valid(self) -> bool:
        return not self.problems()

    def check(self) -> "FamilyParams":
        probs = self.problems()
        if probs:
            raise DomainError(f"(a, b) = ({self.a}, {self.b}): " + "; ".join(probs))
        return self


def upper_a(b) -> Fraction:
    lam = 1 - to_q(b)
    return 1 + lam - lam**3 - lam**4


def family(a, b, eps=DEFAULT_EPS) -> FamilyParams:
    """Validated parameters at the critical coupling lambda = 1 - b."""
    return FamilyParams(a, b, eps=eps).check()


def in_domain(a, b) -> bool:
    a, b = to_q(a), to_q(b)
    return 0 < a < 1 and 0 < b < 1 and a + b <= 1 and a < upper_a(b)


# ---------------------------------------------------------------------------
# constants and construction


def family_constants(a, b):
    """``(l, h, y_const)`` of the closed-form return map."""
    a, b = to_q(a), to_q(b)
    lam = 1 - b
    mu = 1 / lam
    l = mu + (1 - a) * mu**2
    h = l - a * mu**3
    y = lam * (1 + lam) * (1 + a * lam**2 - lam**3)
    return l, h, y


@dataclass(frozen=True)
class ConstructionPoints:
    F: Point
    G: Point
    E: Point
    H: Point
    I: Point
    Iprime: Point
    l: Fraction
    h: Fraction
    y_const: Fraction

    @property
    def breakpoint(self) -> Fraction:
        return 1 - self.h / self.l


def construct_points(p: FamilyParams) -> ConstructionPoints:
    """Auxiliary points, each from its geometric definition.

    F is on ray AD with |DF| = lam |AD|; G is the reflection image of B through
    C scaled by mu; E and H are where lines DG and FC meet line AB; I' is
    the image of B under the point reflection with ratio mu about A; and I on
    EA is the point sent to I' by the branch maps of D then C.
    """
    p.check()
    poly = p.polygon
    A, B, C, D = poly.vertices
    lam, mu = p.lam, p.mu
    F = D + (D - A) * lam
    G = C + (C - B) * mu
    E = line_intersection(A, B, D, G)
    H = line_intersection(A, B, F, C)
    Iprime = Point(p.a * (1 + mu), Fraction(1))
    # T^2(-t, 1) via D then C is (1 + lam - lam^2 t, 1)
    sys = p.system
    two = compose_word(sys, (D_, C_))
    # solve two(X, 1).x = Iprime.x; the linear part is lam^2 * identity
    x0 = two(Point(Fraction(0), Fraction(1))).x
    X = (Iprime.x - x0) / two.linear[0][0]
    I = Point(X, Fraction(1))
    l, h, y = family_constants(p.a, p.b)
    return ConstructionPoints(F, G, E, H, I, Iprime, l, h, y)


# ---------------------------------------------------------------------------
# the circle maps


def _lift_or_fail(branches) -> MonotoneLift:
    try:
        return MonotoneLift(branches)
    except OverlappingImages as exc:
        raise InjectivityFailure(str(exc)) from None


def g_map(p: FamilyParams) -> MonotoneLift:
    """Closed-form first return below EA, as a lift.

    ``g(s) = lam^4 (s - 1 + h/l) + 1`` on (0, 1 - h/l] and
    ``g(s) = lam^6 (s - 1) + 1 - y/l`` on (1 - h/l, 1]; the second branch of
    the lift is raised by 1.
    """
    lam = p.lam
    l, h, y = family_constants(p.a, p.b)
    t = 1 - h / l
    if not 0 < t <= 1:
        raise DomainError(f"breakpoint {t} outside (0, 1]")
    if t == 1:
        # a + b = 1: h = 0, so R2r is empty and g is a single contraction
        return _lift_or_fail([(lam**4, lam**4 * (h / l - 1) + 1, 0, 1)])
    return _lift_or_fail([
        (lam**4, lam**4 * (h / l - 1) + 1, 0, t),
        (lam**6, 1 - lam**6 - y / l + 1, t, 1),
    ])


def to_s(p: FamilyParams, X) -> Fraction:
    l = family_constants(p.a, p.b)[0]
    return 1 + X / l


def from_s(p: FamilyParams, s) -> Fraction:
    l = family_constants(p.a, p.b)[0]
    return (s - 1) * l


def _route_s_map(p: FamilyParams, word):
    """``s -> slope * s + intercept`` for a route, exact."""
    m = compose_word(p.system, word)
    k = m.linear[0][0]
    if k + m.offset.y != 1:
        raise RouteError(f"route {word} does not preserve the line y = 1")
    l = family_constants(p.a, p.b)[0]
    c = m.offset.x
    # s' = 1 + (k l (s - 1) + c)/l = k s + 1 - k + c/l
    return k, 1 - k + c / l


def routes(p: FamilyParams) -> dict:
    """Route words discovered on the rectangles and checked against the lemma."""
    rects = build_rectangles(p)
    found = {
        "R1": discover_route(p, rects.R1, 3),
        "R2l": discover_route(p, rects.R2l, 4),
        "R2r": discover_route(p, rects.R2r, 3),
    }
    expected = {"R1": ROUTE_R1, "R2l": ROUTE_R2L, "R2r": ROUTE_R2R}
    for key, word in found.items():
        if word != expected[key]:
            raise RouteError(f"{key} follows {word}, expected {expected[key]}")
    return found


def f_map(p: FamilyParams, max_loops: int = 64) -> MonotoneLift:
    """First return above EA, composed from the three routes.

    ``R1 -> R2`` reverses orientation; from R2 a point goes round R2l
    (4 steps, back into R2) until it lands in R2r, which takes it up to R1
    (3 steps).  For b = 0.2 at most one R2l round occurs, giving slopes
    lam^6 and lam^10 (one of the two pieces may be empty).
    """
    routes(p)
    k1, c1 = _route_s_map(p, ROUTE_R1)
    kl, cl = _route_s_map(p, ROUTE_R2L)
    kr, cr = _route_s_map(p, ROUTE_R2R)
    l, h, _ = family_constants(p.a, p.b)
    t = 1 - h / l
    zero, one = Fraction(0), Fraction(1)
    # pieces (k, c, lo, hi): s on (lo, hi] currently sits at k s + c in R2
    work = [(k1, c1, zero, one)]
    done = []
    for _ in range(max_loops):
        nxt = []
        for k, c, lo, hi in work:
            ends = sorted((k * lo + c, k * hi + c))
            if ends[0] < 0 or ends[1] > 1:
                raise RouteError("a route image leaves EA")
            cut = (t - c) / k
            parts = [(lo, hi)] if not lo < cut < hi else [(lo, cut), (cut, hi)]
            for a, b in parts:
                mid = k * (a + b) / 2 + c
                if mid <= t:
                    nxt.append((kl * k, kl * c + cl, a, b))
                else:
                    done.append((kr * k, kr * c + cr, a, b))
        work = nxt
        if not work:
            break
    else:
        raise RouteError(f"no return to R1 within {max_loops} rounds of R2l")
    done.sort(key=lambda pc: pc[2])
    return _lift_or_fail(_stack_lift(_join(done)))


def _join(pieces):
    """Merge neighbouring pieces that carry the same affine map."""
    out = []
    for pc in pieces:
        if out and out[-1][:2] == pc[:2] and out[-1][3] == pc[2]:
            out[-1] = (pc[0], pc[1], out[-1][2], pc[3])
        else:
            out.append(pc)
    return out


def _stack_lift(pieces):
    """Choose integer shifts so consecutive circle pieces form an increasing lift."""
    out = []
    shift = 0
    prev_end = None
    for k, c, lo, hi in pieces:
        start = k * lo + c + shift
        if prev_end is not None and start < prev_end:
            shift += 1
        out.append((k, c + shift, lo, hi))
        prev_end = k * hi + c + shift
    return out


def g_route_map(p: FamilyParams) -> MonotoneLift:
    """g recomposed from the routes (used to cross-check the closed form)."""
    routes(p)
    kl, cl = _route_s_map(p, ROUTE_R2L)
    k1, c1 = _route_s_map(p, ROUTE_R1)
    kr, cr = _route_s_map(p, ROUTE_R2R)
    l, h, _ = family_constants(p.a, p.b)
    t = 1 - h / l
    pieces = [(kl, cl, Fraction(0), t), (k1 * kr, k1 * cr + c1, t, Fraction(1))]
    return _lift_or_fail(_stack_lift(pieces))


# ---------------------------------------------------------------------------
# rectangles and containments


@dataclass(frozen=True)
class Rectangles:
    R1: ConvexPolygon
    R2: ConvexPolygon
    R2l: ConvexPolygon
    R2r: ConvexPolygon
    EA: tuple
    eps: Fraction


def _rectangles(p: FamilyParams, eps) -> Rectangles:
    l, h, _ = family_constants(p.a, p.b)
    one, zero = Fraction(1), Fraction(0)
    e2 = eps * eps
    R1 = rectangle(-l + eps, one, zero, one + e2)
    R2 = rectangle(-l + eps, one - e2, zero, one)
    R2l = rectangle(-l + eps, one - e2, -h, one)
    R2r = rectangle(-h, one - e2, zero, one)
    return Rectangles(R1, R2, R2l, R2r, (Point(-l, one), Point(zero, one)), eps)


def _below_bc_failures(p: FamilyParams, rects: Rectangles) -> list:
    poly = p.polygon
    A, B, C, D = poly.vertices
    bad = []
    for R in (rects.R1, rects.R2):
        if not branch_region_contains(poly, D_, R):
            bad.extend(R.vertices)
            continue
        img = affine_image(compose_word(p.system, (D_,)), R)
        bad.extend(v for v in img.vertices if not orient(B, C, v) < 0)
    return bad


def build_rectangles(p: FamilyParams, auto_shrink: bool = False) -> Rectangles:
    """R1 above EA, its mirror R2 below, and R2 split at I into R2l, R2r.

    Raises EpsilonTooLarge unless R1 and R2 reflect on D and their image lies
    strictly below line BC; with ``auto_shrink`` epsilon is halved until it does.
    """
    eps = p.eps
    l, h, _ = family_constants(p.a, p.b)
    for _ in range(64):
        if 0 < eps < l - h:
            rects = _rectangles(p, eps)
            bad = _below_bc_failures(p, rects)
            if not bad:
                return rects
        else:
            bad = ["epsilon must lie in (0, l - h)"]
        if not auto_shrink:
            raise EpsilonTooLarge(f"epsilon {eps} too large: {bad[:2]}")
        eps /= 2
    raise EpsilonTooLarge("no admissible epsilon found")


def discover_route(p: FamilyParams, region: ConvexPolygon, steps: int) -> tuple:
    """Itinerary of ``region`` for ``steps`` iterates, read off the branch wedges."""
    try:
        return region_route(p.system, region, steps)[0]
    except InvalidOrbit as exc:
        raise RouteError(str(exc)) from None


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""
    offending: list = field(default_factory=list)


@dataclass
class ContainmentReport:
    params: FamilyParams
    checks: list
    itineraries: dict

    @property
    def ok(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]


def verify_containments(p: FamilyParams) -> ContainmentReport:
    """Exact check of T^3 R1 ⊂ R2, T^4 R2l ⊂ R2r, T^3 R2r ⊂ R1 and the disjointness
    of T^4 R2l and T^6 R2r.  Failures are reported, not raised."""
    checks: list[Check] = []
    itins: dict = {}
    try:
        rects = build_rectangles(p, auto_shrink=False)
    except (EpsilonTooLarge, DomainError) as exc:
        return ContainmentReport(p, [Check("rectangles", False, str(exc))], itins)
    sys = p.system
    cases = [("T3 R1 in R2", rects.R1, 3, rects.R2, ROUTE_R1, "R1"),
             ("T4 R2l in R2r", rects.R2l, 4, rects.R2r, ROUTE_R2L, "R2l"),
             ("T3 R2r in R1", rects.R2r, 3, rects.R1, ROUTE_R2R, "R2r")]
    images = {}
    for name, src, n, dst, expected, key in cases:
        try:
            word = discover_route(p, src, n)
        except RouteError as exc:
            checks.append(Check(name, False, f"route: {exc}"))
            continue
        itins[key] = word
        img = affine_image(compose_word(sys, word), src)
        images[key] = img
        bad = violations(dst, img)
        detail = "" if word == expected else f"route {word} differs from {expected}"
        checks.append(Check(name, not bad and word == expected, detail, bad))
    if "R2l" in images and "R2r" in images and "R1" in images:
        t4 = images["R2l"]
        t6 = affine_image(compose_word(sys, ROUTE_R1), images["R2r"])
        ok = interiors_disjoint(t4, t6) and contains(rects.R2, t6)
        checks.append(Check("T4 R2l and T6 R2r disjoint in R2", ok,
                            "" if ok else "images overlap or leave R2"))
    else:
        checks.append(Check("T4 R2l and T6 R2r disjoint in R2", False, "routes unavailable"))
    return ContainmentReport(p, checks, itins)


# ---------------------------------------------------------------------------
# the planar first return


@dataclass(frozen=True)
class Return2D:
    start: Point
    end: Point
    steps: int
    itinerary: tuple


def first_return_2d(p: FamilyParams, which: str, s, delta=None, convention=None,
                    max_steps: int = 64) -> Return2D:
    """Follow T from the point of EA at ``s``, offset by ``delta`` above (f) or
    below (g), until it first returns to the same side of EA near EA.

    The return region is the strip over EA of height ``eps^2``.
    """
    if which not in ("f", "g"):
        raise ValueError("which must be 'f' or 'g'")
    s = to_q(s)
    l = family_constants(p.a, p.b)[0]
    e2 = p.eps * p.eps
    if delta is None:
        delta = e2 / 2
    delta = to_q(delta)
    sign = 1 if which == "f" else -1
    x = Point(from_s(p, s), 1 + sign * delta)
    sys = p.system
    cur = x
    itin = []
    for k in range(1, max_steps + 1):
        cur, v = step(sys, cur, convention)
        itin.append(v)
        off = (cur.y - 1) * sign
        if 0 < off <= e2 and -l < cur.x <= 0:
            return Return2D(x, cur, k, tuple(itin))
    raise RouteError(f"no return within {max_steps} steps from s = {s}")


def first_return_1d(p: FamilyParams, which: str, s, delta=None, convention=None) -> Fraction:
    """Projected first return in (0, 1]; equals the closed-form map value."""
    r = first_return_2d(p, which, s, delta, convention)
    return to_s(p, r.end.x)


def circle_value(F: MonotoneLift, s) -> Fraction:
    """``F(s)`` reduced into (0, 1]."""
    return circle.split_unit(F(s))[1]


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class AttractorClassification:
    kind: str                         # "Periodic" or "CantorCandidate"
    rotation: object                  # RationalCertificate or RotationEnclosure
    two_d_orbit: PeriodicOrbit | None = None
    cover: IntervalCover | None = None
    enclosure: RotationEnclosure | None = None
    f_cover: IntervalCover | None = None
    g_cover: IntervalCover | None = None

    @property
    def rho(self):
        if isinstance(self.rotation, RationalCertificate):
            return self.rotation.rho
        return None


def g_word(p: FamilyParams, s) -> tuple:
    """Planar itinerary of one g-step from ``s``."""
    l, h, _ = family_constants(p.a, p.b)
    if s <= 1 - h / l:
        return ROUTE_R2L
    return ROUTE_R2R + ROUTE_R1


def unroll_cycle(p: FamilyParams, cert: RationalCertificate) -> PeriodicOrbit:
    """The planar periodic orbit through the certified g-cycle on EA.

    Orbits on the line y = 1 pass through edge AB or the singular ray beyond
    B, so the limit cycle is a one-sided (degenerate) orbit: it is accepted
    when every point lies in the closed wedge of its vertex.
    """
    word: list = []
    for s in cert.orbit:
        word.extend(g_word(p, s))
    return certify_cycle(p.system, word, "left")


def cover_union(*covers: IntervalCover) -> IntervalCover:
    ivs = [iv for c in covers for iv in c.intervals]
    return IntervalCover(max(c.depth for c in covers), circle._merge(ivs))


def classify_attractor(p: FamilyParams, Q: int = circle.DEFAULT_Q, depth: int = 30,
                       iterations: int = circle.DEFAULT_ITERATIONS) -> AttractorClassification:
    """Periodic (with the planar orbit, period > 3q) or a Cantor candidate."""
    p.check()
    G = g_map(p)
    cert = circle.certify_rational(G, Q)
    if cert is not None:
        orbit = unroll_cycle(p, cert)
        if not orbit.period > 3 * cert.q:
            raise RouteError(f"planar period {orbit.period} not above 3q = {3 * cert.q}")
        return AttractorClassification("Periodic", cert, orbit)
    enc = circle.rotation_enclosure(G, iterations)
    gc = circle.attractor_cover(G, depth)
    fc = circle.attractor_cover(f_map(p), depth)
    return AttractorClassification("CantorCandidate", enc, cover=cover_union(gc, fc),
                                   enclosure=enc, f_cover=fc, g_cover=gc)


def lift_cover_2d(p: FamilyParams, cover: IntervalCover) -> list[tuple[Point, Point]]:
    """Cover intervals as segments of EA in the plane."""
    one = Fraction(1)
    return [(Point(from_s(p, a), one), Point(from_s(p, b), one)) for a, b in cover.intervals]


def cover_forward_invariant(p: FamilyParams, cover: IntervalCover) -> bool:
    """Each piece of a g-cover, pushed along its planar route, lands in the cover.

    Pieces are cut at the breakpoint of g; each route's affine map is applied
    to the segment endpoints on EA and the images are compared with the
    lifted cover segments.
    """
    l, h, _ = family_constants(p.a, p.b)
    t = 1 - h / l
    sys = p.system
    segs = lift_cover_2d(p, cover)
    for a, b in cover.intervals:
        parts = []
        if a <= t:
            parts.append((a, min(b, t), ROUTE_R2L))
        if b > t:
            parts.append((max(a, t), b, ROUTE_R2R + ROUTE_R1))
        for lo, hi, word in parts:
            m = compose_word(sys, word)
            P0 = m(Point(from_s(p, lo), Fraction(1)))
            P1 = m(Point(from_s(p, hi), Fraction(1)))
            if P0.y != 1 or P1.y != 1:
                return False
            x0, x1 = sorted((P0.x, P1.x))
            if not any(s0.x <= x0 and x1 <= s1.x for s0, s1 in segs):
                return False
    return True
