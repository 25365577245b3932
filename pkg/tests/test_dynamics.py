from fractions import Fraction as Fr

import pytest
from hypothesis import given, strategies as st

from outerbilliards.dynamics import (
    BilliardSystem,
    InvalidOrbit,
    NotFound,
    branch_map,
    burn_in_steps,
    certify_cycle,
    compose_word,
    cycle_points,
    detect_periodic,
    orbit,
    primitive_root,
    region_pieces,
    region_route,
    step,
    trapping_radius,
    triangular_orbit,
)
from outerbilliards.geometry import (
    P,
    SingularHit,
    max_norm,
    quad_from_params,
    rectangle,
    supporting_vertex,
)

A, B, C, D = range(4)
QUAD = quad_from_params(Fr(1, 2), Fr(1, 5))


def system(lam):
    return BilliardSystem(QUAD, Fr(lam))


def test_system_invariants():
    s = system(Fr(3, 4))
    assert s.mu * s.lam == 1
    with pytest.raises(ValueError):
        BilliardSystem(QUAD, Fr(1))
    with pytest.raises(ValueError):
        BilliardSystem(QUAD, Fr(0))


def test_branch_map_formula():
    s = system(Fr(3, 4))
    w = P(-1, 2)
    v = QUAD[D]
    assert branch_map(s, D)(w) == v * (1 + s.lam) - w * s.lam
    # the reflected point lies on the ray from w through v, at ratio 1 : lam
    img = branch_map(s, D)(w)
    assert (v - w) * s.lam == img - v


def test_step_uses_supporting_vertex():
    s = system(Fr(3, 4))
    x = P(-1, 2)
    y, v = step(s, x)
    assert v == supporting_vertex(QUAD, x) == D
    with pytest.raises(SingularHit):
        step(s, P(2, 1))
    assert step(s, P(2, 1), "right")[1] == B


coord = st.fractions(min_value=-6, max_value=6, max_denominator=30)


@given(coord, coord, st.sampled_from([Fr(1, 2), Fr(3, 4), Fr(9, 10)]))
def test_orbit_record_consistency(x, y, lam):
    s = system(lam)
    x0 = P(x, y)
    if QUAD.contains(x0):
        return
    rec = orbit(s, x0, 30)
    assert len(rec.points) == len(rec.itinerary) + 1
    for k, v in enumerate(rec.itinerary):
        assert rec.points[k + 1] == branch_map(s, v)(rec.points[k])
    if rec.status == "singular":
        with pytest.raises(SingularHit):
            supporting_vertex(QUAD, rec.points[-1])


def test_primitive_root():
    assert primitive_root((1, 2, 1, 2)) == (1, 2)
    assert primitive_root((1, 2, 3)) == (1, 2, 3)


def test_cycle_points_are_fixed():
    s = system(Fr(3, 4))
    word = (D, C, B)
    pts = cycle_points(s, word)
    assert compose_word(s, word)(pts[0]) == pts[0]


def test_bifurcation_narrative():
    o = detect_periodic(system(Fr(3, 4)), P(-1, -1))
    assert o.period == 3 and A not in o.itinerary and not o.degenerate
    o = detect_periodic(system(Fr(17, 20)), P(-1, -1))
    assert o.period == 3 and B not in o.itinerary
    s = system(Fr(4, 5))
    o = detect_periodic(s, P(-1, -1), convention="left")
    assert o.period == 10 and o.degenerate
    with pytest.raises(NotFound):
        detect_periodic(s, P(-1, -1))


def test_exact_detection_agrees():
    s = system(Fr(3, 4))
    assert detect_periodic(s, P(-1, -1), exact=True, budget=200).itinerary == \
        detect_periodic(s, P(-1, -1)).itinerary


def test_triangular_orbits_visit_decreasing_indices():
    t = triangular_orbit(system(Fr(3, 4)), A)
    assert t.word(system(Fr(3, 4))) == "DCB"
    t = triangular_orbit(system(Fr(17, 20)), B)
    assert t.itinerary == (D, C, A)
    with pytest.raises(InvalidOrbit):
        triangular_orbit(system(Fr(3, 4)), B)


def test_certify_cycle_rejects_wrong_word():
    with pytest.raises(InvalidOrbit):
        certify_cycle(system(Fr(3, 4)), (D, B, C))


def test_trapping_ball():
    s = system(Fr(3, 4))
    c = P(Fr(1, 2), Fr(1, 2))
    r = trapping_radius(s, c)
    assert r == Fr(7, 2)                  # (1+lam)/(1-lam) * 1/2
    far = P(40, -30)
    k = burn_in_steps(s, far, c, slack=Fr(1, 10**3))
    rec = orbit(s, far, k)
    assert max_norm(rec.points[-1], c) <= r + Fr(1, 10**3)
    # the ball is forward invariant
    for x in [P(r + c.x, c.y), P(c.x - r, c.y + r), P(c.x, c.y - r)]:
        y, _ = step(s, x)
        assert max_norm(y, c) <= r


def test_region_route_and_pieces():
    s = system(Fr(3, 4))
    far = rectangle(-3, -3, -2, -2)          # entirely in the wedge of one vertex
    word, img = region_route(s, far, 1)
    assert len(word) == 1
    pieces = region_pieces(s, far, 1)
    assert [w for w, _ in pieces] == [word]
    big = rectangle(-3, -3, 3, -2)           # straddles a singular ray
    with pytest.raises(InvalidOrbit):
        region_route(s, big, 1)
    assert len(region_pieces(s, big, 1)) >= 2
