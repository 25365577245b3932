"""Acceptance suite: one PASS/FAIL line per criterion.

Run with pytest (the lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.  Criteria that cannot be met are allowed
to fail; they are marked xfail rather than weakened.
"""

import random
import sys
import time
from fractions import Fraction as Fr

import numpy as np
import pytest

from outerbilliards import circle, global_attraction as ga, sweep
from outerbilliards.circle import MonotoneLift, certify_rational, exhaustive_certify, lift_eval
from outerbilliards.dynamics import BilliardSystem, detect_periodic, triangular_orbit
from outerbilliards.family import (
    circle_value,
    classify_attractor,
    cover_forward_invariant,
    f_map,
    family,
    first_return_1d,
    g_map,
    unroll_cycle,
    verify_containments,
)
from outerbilliards.geometry import P, quad_from_params

RESULTS: dict = {}

# parameter with no periodic orbit of denominator <= 200 (found by bisecting
# on certificates toward rho = 1 - 1/(10 + golden ratio) at b = 1/50)
CANTOR_A, CANTOR_B = Fr(1221029, 12364525), Fr(1, 50)

TABLE_1 = [(Fr(30, 100), Fr(0)), (Fr(33, 100), Fr(6, 7)), (Fr(34, 100), Fr(4, 5)),
           (Fr(35, 100), Fr(3, 4)), (Fr(40, 100), Fr(2, 3)), (Fr(50, 100), Fr(1, 2))]


def record(n, ok, detail, seconds):
    RESULTS[n] = (ok, detail, seconds)
    return ok


def timed(fn):
    t = time.perf_counter()
    ok, detail = fn()
    return ok, detail, time.perf_counter() - t


def planar_period_ok(a, b, cert):
    orb = unroll_cycle(family(a, b), cert)
    return orb.period > 3 * cert.q, orb.period


# ---------------------------------------------------------------------------


def check_1():
    got = []
    for a, rho in TABLE_1:
        cert = certify_rational(g_map(family(a, Fr(15, 100))), 200)
        got.append(cert.rho if cert else None)
    ok = got == [rho for _, rho in TABLE_1]
    return ok, "rho(g) at b=0.15: " + ", ".join(str(r) for r in got)


def check_2():
    b = Fr(1, 5)
    p3, p6 = family(Fr(3, 10), b), family(Fr(6, 10), b)
    G3, G6 = g_map(p3), g_map(p6)
    cert = certify_rational(G3, 200)
    t3 = G3.breakpoints[0]
    t6 = G6.breakpoints[0]
    # the right branch has a fixed point iff its value at the breakpoint lies above it
    up3 = circle.split_unit(G3(t3, "right"))[1] - t3
    up6 = circle.split_unit(G6(t6, "right"))[1] - t6
    fixed6 = exhaustive_certify(G6, 1, None)
    enc = circle.rotation_enclosure(G6, 10**6)
    lo, hi = enc.mod1()
    excl = 0 < lo and hi < 1
    ok = (cert is not None and cert.rho == 0 and up3 > 0 and fixed6 is None and up6 < 0
          and excl and float(enc.width) <= 2e-6 + 1e-12)
    detail = (f"a=0.3: rho={cert.rho if cert else None}, g(t+)-t={float(up3):+.4f}; "
              f"a=0.6: fixed point={'none' if fixed6 is None else 'found'}, "
              f"g(t+)-t={float(up6):+.4f}, enclosure [{float(lo):.6f},{float(hi):.6f}] "
              f"width {float(enc.width):.2e} (sign test g(t)<t read as g(t+)>t)")
    return ok, detail


def check_3():
    b = Fr(2, 5)
    r = []
    for a in (Fr(2, 5), Fr(1, 2)):
        cert = certify_rational(g_map(family(a, b)), 200)
        r.append(cert.rho if cert else None)
    ok = r == [Fr(0), Fr(1, 3)]
    return ok, f"(0.4,0.4) rho={r[0]} [want 0]; (0.5,0.4) rho={r[1]} [want 1/3]"


def check_4():
    b = Fr(1, 5)
    grid = [Fr(3, 10) + Fr(3, 10) * k / 30 for k in range(31)]
    bad = [str(a) for a in grid if not verify_containments(family(a, b)).ok]
    return not bad, f"31 grid points, failures: {bad or 'none'}"


def check_5():
    b = Fr(1, 5)
    rng = random.Random(5)
    grid = [Fr(3, 10) + Fr(3, 10) * k / 30 for k in range(31)]
    mism = 0
    count = 0
    for a in grid:
        p = family(a, b)
        G, F = g_map(p), f_map(p)
        for _ in range(100):
            s = Fr(rng.randint(1, 10**6 - 1), 10**6)
            count += 2
            mism += first_return_1d(p, "g", s) != circle_value(G, s)
            mism += first_return_1d(p, "f", s) != circle_value(F, s)
    return mism == 0, f"{count} exact first returns, {mism} mismatches"


def check_6():
    grid = [Fr(2, 5) + Fr(1, 100) * k for k in range(11)]
    fails = []
    worst_rect = 0
    for a in grid:
        for c in ga.ball_inequalities(a):
            if not c.passed:
                fails.append(f"{a}:{c.name}")
        zt = ga.verify_zone_transitions(a)
        fails += [f"{a}:{c.name}" for c in zt.failures()]
        bc = ga.verify_ball_cover(a, 10**5, seed=0)
        fails += [f"{a}:{c.name}" for c in bc.failures()]
        pts = ga.sample_ball(10**5, seed=0, a=a)
        steps = ga.steps_to_rectangles(a, pts)
        if (steps < 0).any():
            fails.append(f"{a}: rectangles not reached")
        worst_rect = max(worst_rect, int(steps.max()))
    return not fails, (f"11 grid points, 10^5 samples each; max steps to R1∪R2 = {worst_rect}; "
                       f"failures: {fails or 'none'}")


def check_7():
    quad = quad_from_params(Fr(1, 2), Fr(1, 5))
    out = []
    s75 = BilliardSystem(quad, Fr(3, 4))
    o = detect_periodic(s75, P(-1, -1))
    out.append(o.period == 3 and 0 not in o.itinerary
               and set(o.itinerary) == set(triangular_orbit(s75, 0).itinerary))
    s85 = BilliardSystem(quad, Fr(17, 20))
    o2 = detect_periodic(s85, P(-1, -1))
    out.append(o2.period == 3 and 1 not in o2.itinerary)
    s80 = BilliardSystem(quad, Fr(4, 5))
    o3 = detect_periodic(s80, P(-1, -1), convention="left")
    out.append(o3.period == 10 and o3.degenerate)
    return all(out), (f"lam=0.75: {o.word(s75)}; lam=0.85: {o2.word(s85)}; "
                      f"lam=0.8: period {o3.period}, degenerate={o3.degenerate}")


def _random_lift(rng):
    q = lambda lo, hi: Fr(rng.randint(int(lo * 1000), int(hi * 1000)), 1000)
    l1, l2 = q(0.05, 0.95), q(0.05, 0.95)
    t, c1, u = q(0.05, 0.95), q(0, 0.975), q(0, 1)
    lo = l1 * t + c1 - 1 - l2 * t
    return MonotoneLift.from_five_params(l1, l2, c1, lo + u * (c1 - l2 - lo), t)


def _oracle_rho(F, n=4000):
    """Brute force: an exhaustive certificate if one with q <= 20 exists, else
    a long float orbit (error 1/n)."""
    cert = exhaustive_certify(F, 20, None)
    if cert is not None:
        return cert.rho, 0.0
    his = [float(b.hi) for b in F.branches]
    fb = [(float(b.slope), float(b.intercept)) for b in F.branches]
    y = 0.5
    for _ in range(n):
        k = np.floor(y)
        r = y - k
        i = 0 if r < his[0] else len(his) - 1
        y = fb[i][0] * r + fb[i][1] + k
    return (y - 0.5) / n, 1.0 / n


def check_8():
    parts = {}
    rng = random.Random(8)
    # (i) enclosures on 1000 random two-branch contractions
    bad = 0
    for _ in range(1000):
        F = _random_lift(rng)
        enc = circle.rotation_enclosure(F, 200)
        rho, tol = _oracle_rho(F)
        wide = enc.width > Fr(2, 200)
        if tol == 0:
            miss = not enc.contains(rho)
        else:
            miss = not (float(enc.lower) - 1e-9 <= rho + tol and rho - tol <= float(enc.upper) + 1e-9)
        bad += wide or miss
    parts["i"] = (bad == 0, f"{bad}/1000 bad")
    # (ii) nesting and length decay
    bad = 0
    for _ in range(100):
        F = _random_lift(rng)
        covers = circle.attractor_covers(F, 15)
        for k, c in enumerate(covers):
            bad += c.total_length > F.max_slope ** k
            bad += k > 0 and not covers[k - 1].covers(c)
    parts["ii"] = (bad == 0, f"{bad} violations")
    # (iii) Cantor candidate
    p = family(CANTOR_A, CANTOR_B)
    cl = classify_attractor(p, 200, 30, 10**5)
    comps = len(cl.cover) if cl.cover else 0
    inv = cl.kind == "CantorCandidate" and cover_forward_invariant(p, cl.g_cover)
    parts["iii"] = (cl.kind == "CantorCandidate" and comps >= 64 and inv,
                    f"a={CANTOR_A}, b={CANTOR_B}: {cl.kind}, {comps} components "
                    f"(g {len(cl.g_cover) if cl.g_cover else 0}, f {len(cl.f_cover) if cl.f_cover else 0}), "
                    f"forward-invariant={inv}")
    # (iv) convention insensitivity at the criteria parameters
    params = [(a, Fr(15, 100)) for a, _ in TABLE_1] + [
        (Fr(3, 10), Fr(1, 5)), (Fr(6, 10), Fr(1, 5)), (Fr(2, 5), Fr(2, 5)), (Fr(1, 2), Fr(2, 5))]
    bad = 0
    for a, b in params:
        G = g_map(family(a, b))
        encs = []
        for conv in ("left", "right"):
            x0 = G.breakpoints[0]
            x = x0
            for _ in range(400):
                x = lift_eval(G, x, conv)
            encs.append(((x - x0 - 1) / 400, (x - x0 + 1) / 400))
        bad += not (encs[0][0] <= encs[1][1] and encs[1][0] <= encs[0][1])
    parts["iv"] = (bad == 0, f"{bad}/{len(params)} disagree")
    # (v) planar period above 3q
    bad = []
    for a, b in params:
        cert = certify_rational(g_map(family(a, b)), 200)
        ok, period = planar_period_ok(a, b, cert)
        if not ok:
            bad.append((str(a), str(b), period, cert.q))
    parts["v"] = (not bad, f"{len(params) - len(bad)}/{len(params)} ok")
    ok = all(v[0] for v in parts.values())
    return ok, "; ".join(f"({k}) {'ok' if v[0] else 'FAIL'} {v[1]}" for k, v in parts.items())


# probe cells (row i: a = (i+1/2)/200, column j: b = (j+1/2)/200)
PROBES = {
    "central band rho=1/2": ([(110, 50), (125, 40)], Fr(1, 2)),
    "upper region rho=0": ([(20, 50), (60, 80)], Fr(0)),
    "lower region rho=0": ([(150, 45), (145, 50)], Fr(0)),
}


def _component(grid, value, start):
    """4-connected component of cells certified at ``value`` containing ``start``."""
    n = len(grid)
    seen = {start}
    stack = [start]
    while stack:
        i, j = stack.pop()
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            u, v = i + di, j + dj
            if 0 <= u < n and 0 <= v < n and (u, v) not in seen \
                    and grid[u][v].certified == value:
                seen.add((u, v))
                stack.append((u, v))
    return seen


def check_9():
    grid = sweep.heatmap(200)
    parts = []
    ok = True
    for name, (cells, value) in PROBES.items():
        vals = [grid[i][j].certified for i, j in cells]
        good = all(v == value for v in vals)
        if good:
            comp = _component(grid, value, cells[0])
            good = cells[1] in comp
            size = len(comp)
        else:
            size = 0
        ok &= good
        parts.append(f"{name}: {[str(v) for v in vals]} component {size} cells")
    return ok, "; ".join(parts)


def check_10():
    rep = ga.ergodic_report(Fr(9, 20), n=10**5, starts=5, seed=0)
    return rep.spread < 1e-3, f"averages {[round(v, 6) for v in rep.averages]}, spread {rep.spread:.2e}"


LIMITS = {1: 10, 2: 5, 3: 5, 4: 5, 5: 30, 6: 60, 7: 5, 8: None, 9: 600, 10: 10}
CHECKS = {1: check_1, 2: check_2, 3: check_3, 4: check_4, 5: check_5, 6: check_6,
          7: check_7, 8: check_8, 9: check_9, 10: check_10}
# criteria that fail by design (see the decisions ledger)
EXPECTED_FAIL = {3: "certified rho(0.5, 0.4) is 1/2",
                 8: "a two-branch cover at depth 30 has far fewer than 64 components",
                 9: "the lower region carries small nonzero rho, not 0"}


def run(n):
    ok, detail, secs = timed(CHECKS[n])
    lim = LIMITS[n]
    if lim is not None and secs > lim:
        ok = False
        detail += f" [over time limit {lim}s]"
    record(n, ok, detail, secs)
    return ok


@pytest.mark.parametrize("n", sorted(CHECKS))
def test_criterion(n):
    ok = run(n)
    if not ok and n in EXPECTED_FAIL:
        pytest.xfail(EXPECTED_FAIL[n])
    assert ok, RESULTS[n][1]


def summary_lines():
    out = []
    for n in sorted(RESULTS):
        ok, detail, secs = RESULTS[n]
        out.append(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} ({secs:.1f}s) {detail}")
    return out


if __name__ == "__main__":
    for n in (map(int, sys.argv[1:]) if len(sys.argv) > 1 else sorted(CHECKS)):
        run(n)
        print(summary_lines()[-1] if len(RESULTS) == 1 else
              [l for l in summary_lines() if l.startswith(f"criterion {n:2d}")][0], flush=True)
