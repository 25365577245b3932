from fractions import Fraction as Fr

import pytest
from hypothesis import given, strategies as st

from outerbilliards.geometry import (
    AffineMap2D,
    ConvexPolygon,
    DegenerateMap,
    DomainError,
    InsidePolygon,
    NonConvex,
    P,
    SingularHit,
    affine_image,
    clip,
    contains,
    cyclic_relabel,
    left_of_ray,
    quad_from_params,
    rectangle,
    relabel_map,
    resolve_singular,
    same_polygon,
    supporting_vertex,
    to_q,
)

A, B, C, D = range(4)
QUAD = quad_from_params(Fr(1, 2), Fr(1, 5))


def brute_support(poly, x):
    """Vertices with every other vertex strictly left of the ray x -> v."""
    n = len(poly)
    return [i for i in range(n)
            if all(left_of_ray(x, poly[i], poly[j]) > 0 for j in range(n) if j != i)]


def test_to_q_reads_shortest_repr():
    assert to_q(0.3) == Fr(3, 10)
    assert to_q("2/7") == Fr(2, 7)
    assert to_q(3) == 3


def test_quad_vertices():
    assert QUAD.vertices == (P(0, 1), P(Fr(1, 2), 1), P(1, Fr(1, 5)), P(0, 0))
    q = quad_from_params(Fr(3, 10), Fr(1, 5))
    assert q[B] == P(Fr(3, 10), 1)


@pytest.mark.parametrize("a, b", [(0.5, 2.5), (0, 0.2), (-1, 0.2), (2, 0.6), (0.5, 1)])
def test_quad_domain_errors(a, b):
    with pytest.raises(DomainError):
        quad_from_params(a, b)


def test_nonconvex_rejected():
    with pytest.raises(NonConvex):
        ConvexPolygon([P(0, 0), P(1, 1), P(2, 2)])
    with pytest.raises(NonConvex):  # counterclockwise
        ConvexPolygon([P(0, 0), P(1, 0), P(0, 1)])


def test_singular_rays_start_at_next_vertex():
    rays = QUAD.singular_rays
    assert rays[A].origin == QUAD[B] and rays[A].direction == QUAD[B] - QUAD[A]
    assert rays[D].origin == QUAD[A]


def test_supporting_vertex_examples():
    assert supporting_vertex(QUAD, P(-1, 2)) == D
    assert brute_support(QUAD, P(-1, 2)) == [D]
    assert supporting_vertex(QUAD, P(Fr(-1, 2), Fr(10005, 10000))) == D
    with pytest.raises(SingularHit) as hit:
        supporting_vertex(QUAD, P(Fr(3, 2), 1))
    assert hit.value.rays == (A,)
    with pytest.raises(InsidePolygon):
        supporting_vertex(QUAD, P(Fr(1, 4), Fr(1, 2)))
    with pytest.raises(InsidePolygon):  # boundary belongs to the table
        supporting_vertex(QUAD, P(Fr(1, 4), 1))


def test_ray_origin_is_singular():
    # the far side of the ray starts at the second vertex itself
    with pytest.raises((SingularHit, InsidePolygon)):
        supporting_vertex(QUAD, QUAD[B])


def test_resolve_singular_sides():
    try:
        supporting_vertex(QUAD, P(2, 1))
    except SingularHit as hit:
        assert resolve_singular(QUAD, hit, "left") == A
        assert resolve_singular(QUAD, hit, "right") == B
    with pytest.raises(SingularHit):
        resolve_singular(QUAD, SingularHit(P(0, 0), [0, 1], []), "left")


coord = st.fractions(min_value=-5, max_value=5, max_denominator=50)


@given(coord, coord)
def test_supporting_vertex_matches_brute_force(x, y):
    p = P(x, y)
    try:
        v = supporting_vertex(QUAD, p)
    except InsidePolygon:
        assert contains(QUAD, p)
        return
    except SingularHit as hit:
        assert brute_support(QUAD, p) == []
        assert hit.rays
        return
    assert brute_support(QUAD, p) == [v]


def test_contains_examples():
    unit = rectangle(0, 0, 1, 1)
    small = rectangle(Fr(1, 4), Fr(1, 4), Fr(3, 4), Fr(3, 4))
    assert contains(unit, unit)
    assert contains(unit, small) and not contains(small, unit)
    assert same_polygon(affine_image(AffineMap2D.identity(), unit), unit)


def test_degenerate_map():
    flat = AffineMap2D(((1, 0), (0, 0)), P(0, 0))
    with pytest.raises(DegenerateMap):
        affine_image(flat, QUAD)
    with pytest.raises(DegenerateMap):
        flat.inverse()


def test_reflection_reorients():
    mirror = AffineMap2D(((-1, 0), (0, 1)), P(0, 0))
    img = affine_image(mirror, QUAD)
    assert set(img.vertices) == {P(-v.x, v.y) for v in QUAD.vertices}


def test_clip():
    sq = rectangle(0, 0, 2, 2)
    left = clip(sq, P(1, 0), P(1, 1), "left")      # x <= 1
    assert same_polygon(left, rectangle(0, 0, 1, 2))
    assert clip(sq, P(3, 0), P(3, 1), "right") is None


def test_cyclic_relabel_examples():
    assert cyclic_relabel(Fr(1, 2), Fr(1, 5)) == (Fr(4, 5), Fr(-5, 4))
    assert cyclic_relabel(1, Fr(1, 3)) == (Fr(2, 3), 0)
    with pytest.raises(DomainError):
        cyclic_relabel(0, Fr(1, 2))


def _relabel_chain(a, b, times):
    m = AffineMap2D.identity()
    for _ in range(times):
        m = relabel_map(a, b) @ m
        a, b = cyclic_relabel(a, b)
    return m, (a, b)


def test_relabel_map_is_orientation_preserving_vertex_correspondence():
    a, b = Fr(1, 2), Fr(1, 5)
    m = relabel_map(a, b)
    assert m.det > 0
    old = quad_from_params(a, b)
    new = quad_from_params(*cyclic_relabel(a, b))
    assert [m(old[i]) for i in (1, 2, 3, 0)] == list(new.vertices)


def test_relabel_four_times_is_affinely_equivalent():
    a, b = Fr(1, 2), Fr(1, 5)
    m, (a4, b4) = _relabel_chain(a, b, 4)
    old, new = quad_from_params(a, b), quad_from_params(a4, b4)
    # four renamings bring every vertex back to its own label
    assert [m(v) for v in old.vertices] == list(new.vertices)


# --- random convex polygons -------------------------------------------------

def _random_poly(draw):
    pts = draw(st.lists(st.tuples(coord, coord), min_size=3, max_size=8, unique=True))
    pts = [P(x, y) for x, y in pts]
    hull = _hull(pts)
    if len(hull) < 3:
        return None
    return ConvexPolygon(hull)


def _hull(pts):
    """Monotone chain hull, clockwise, without collinear points."""
    pts = sorted(set(pts), key=lambda p: (p.x, p.y))
    if len(pts) < 3:
        return pts

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and ((out[-1] - out[-2]).x * (p - out[-2]).y
                                     - (out[-1] - out[-2]).y * (p - out[-2]).x) >= 0:
                out.pop()
            out.append(p)
        return out
    upper = half(pts)
    lower = half(reversed(pts))
    return upper[:-1] + lower[:-1]


polys = st.composite(_random_poly)()
maps = st.tuples(coord, coord, coord, coord, coord, coord)


@given(polys, maps)
def test_affine_image_stays_convex(poly, m):
    if poly is None:
        return
    a, b, c, d, e, f = m
    mp = AffineMap2D(((a, b), (c, d)), P(e, f))
    if mp.det == 0:
        return
    img = affine_image(mp, poly)
    assert len(img) == len(poly)


@given(polys, coord, coord, st.fractions(min_value=Fr(1, 10), max_value=1))
def test_contains_is_transitive(poly, cx, cy, k):
    if poly is None:
        return
    c = poly.centroid()
    inner = affine_image(AffineMap2D.homothety(k, c), poly)
    innermost = affine_image(AffineMap2D.homothety(k / 2, c), poly)
    assert contains(poly, inner) and contains(inner, innermost)
    assert contains(poly, innermost)
