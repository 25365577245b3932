"""Rotation theory for piecewise-affine, strictly increasing degree-1 lifts.

A lift is stored by its restriction to (0, 1] as a list of affine branches on
half-open domains ``(lo, hi]`` and extended by ``F(x + 1) = F(x) + 1``.  The
value at a breakpoint belongs to the branch on its left; the right limit is
available through ``convention="right"``.

Rotation numbers are reported in [0, 1).
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import NamedTuple, Sequence

import numpy as np

from .geometry import to_q

DEFAULT_Q = 200
DEFAULT_ITERATIONS = 10**6
# absolute outward padding per float step; values are O(1) so a few ulps
_PAD = 2.0**-46


class LiftError(ValueError):
    pass


class BadPartition(LiftError):
    pass


class NotMonotone(LiftError):
    pass


class OverlappingImages(LiftError):
    """Branch images overlap in the lifted order, so the map is not injective."""


class NotContraction(LiftError):
    pass


class Branch(NamedTuple):
    slope: Fraction
    intercept: Fraction
    lo: Fraction
    hi: Fraction

    def __call__(self, x):
        return self.slope * x + self.intercept


@dataclass(frozen=True)
class MonotoneLift:
    branches: tuple

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(Branch(*map(to_q, b)) for b in self.branches))
        bs = self.branches
        if not bs:
            raise BadPartition("no branches")
        if bs[0].lo != 0 or bs[-1].hi != 1:
            raise BadPartition("branch domains must cover (0, 1]")
        for b in bs:
            if not b.lo < b.hi:
                raise BadPartition(f"empty domain ({b.lo}, {b.hi}]")
            if b.slope <= 0:
                raise NotMonotone(f"slope {b.slope} is not positive")
            if b.slope > 1:
                raise LiftError(f"slope {b.slope} exceeds 1")
        for left, right in zip(bs, bs[1:]):
            if left.hi != right.lo:
                raise BadPartition(f"gap or overlap at {left.hi} / {right.lo}")
            if right(right.lo) < left(left.hi):
                raise OverlappingImages(f"jump down at {left.hi}")
        if bs[0](0) + 1 < bs[-1](1):
            raise OverlappingImages("F(0+) + 1 < F(1)")
        object.__setattr__(self, "_his", [float(b.hi) for b in bs])
        object.__setattr__(self, "_fb", [(float(b.slope), float(b.intercept)) for b in bs])

    # -- construction -------------------------------------------------------

    @classmethod
    def rotation(cls, theta) -> "MonotoneLift":
        return cls([(1, to_q(theta), 0, 1)])

    @classmethod
    def from_five_params(cls, l1, l2, c1, c2, t) -> "MonotoneLift":
        """``H(x) = l1 x + c1`` on (0, t] and ``l2 x + c2 + 1`` on (t, 1]."""
        t = to_q(t)
        return cls([(l1, to_q(c1), 0, t), (l2, to_q(c2) + 1, t, 1)])

    def five_params(self):
        if len(self.branches) != 2:
            raise LiftError("only two-branch lifts have the five-parameter form")
        b1, b2 = self.branches
        return b1.slope, b2.slope, b1.intercept, b2.intercept - 1, b1.hi

    @property
    def breakpoints(self) -> list:
        return [b.hi for b in self.branches]

    @property
    def max_slope(self) -> Fraction:
        return max(b.slope for b in self.branches)

    # -- evaluation ---------------------------------------------------------

    def branch_index(self, frac, convention: str = "left") -> int:
        """Branch used at ``frac`` in (0, 1]; at a breakpoint "right" moves on."""
        for i, b in enumerate(self.branches):
            if frac <= b.hi:
                if frac == b.hi and convention == "right":
                    return (i + 1) % len(self.branches)
                return i
        raise ValueError(f"{frac} outside (0, 1]")

    def __call__(self, x, convention: str = "left"):
        return lift_eval(self, x, convention)


def split_unit(x):
    """``(n, r)`` with ``x = n + r`` and ``r`` in (0, 1]."""
    n = math.ceil(x) - 1
    return n, x - n


def lift_eval(F: MonotoneLift, x, convention: str = "left"):
    """Evaluate the degree-1 extension; at a breakpoint use the one-sided limit."""
    n, r = split_unit(x)
    i = F.branch_index(r, convention)
    if convention == "right" and r == F.branches[i - 1].hi and i == 0:
        # right limit at an integer: the first branch at 0, one period up
        return F.branches[0](0) + n + 1
    return F.branches[i](r) + n


def _float_step(F: MonotoneLift, n: int, r: float):
    """One float step on the (integer, fraction) representation."""
    i = bisect_left(F._his, r)
    if i == len(F._his):
        i -= 1
    s, c = F._fb[i]
    y = s * r + c
    m = math.ceil(y) - 1
    return n + m, y - m


# ---------------------------------------------------------------------------
# enclosures


@dataclass(frozen=True)
class RotationEnclosure:
    lower: Fraction
    upper: Fraction
    iterations: int

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    def contains(self, value) -> bool:
        """Whether ``value`` (taken mod 1) lies in the enclosure."""
        value = to_q(value)
        k = math.floor(self.lower - value)
        return any(self.lower <= value + j <= self.upper for j in (k, k + 1, k + 2))

    def mod1(self) -> tuple[Fraction, Fraction]:
        k = math.floor(self.lower)
        return self.lower - k, self.upper - k

    @property
    def midpoint(self) -> Fraction:
        return ((self.lower + self.upper) / 2) % 1


def _exact_data(F: MonotoneLift) -> bool:
    return all(isinstance(v, Fraction) for b in F.branches for v in b)


def rotation_enclosure(F: MonotoneLift, n: int = DEFAULT_ITERATIONS, x0=Fraction(1, 2),
                       exact: bool | None = None) -> RotationEnclosure:
    """Enclosure ``[(F^n(x0) - x0 - 1)/n, (F^n(x0) - x0 + 1)/n]`` of the rotation number.

    For a strictly increasing degree-1 lift, ``|F^n(x) - x - n rho| < 1`` for
    every x.  In exact mode ``F^n(x0)`` is computed in rational arithmetic
    and the width is exactly ``2/n``.  In float mode a lower and an upper
    orbit are iterated with outward padding; monotonicity keeps the true
    orbit between them, and the width grows by their final gap over ``n``.
    """
    if n < 1:
        raise ValueError("need at least one iteration")
    x0 = to_q(x0)
    if exact is None:
        exact = n <= 2000 or not _float_orbit_pad_check(F)
    if exact:
        x = x0
        for _ in range(n):
            x = lift_eval(F, x)
        lo_val = hi_val = x
    else:
        lo_val, hi_val = _float_bracket(F, n, x0)
    return RotationEnclosure((lo_val - x0 - 1) / n, (hi_val - x0 + 1) / n, n)


def _float_bracket(F: MonotoneLift, n: int, x0: Fraction):
    """Rigorous bounds on ``F^n(x0)`` from two outward-rounded float orbits."""
    his, fb = F._his, F._fb
    nb = len(his)
    exact_his = [b.hi for b in F.branches]
    k0, r0 = split_unit(x0)
    nl, rl = k0, float(r0) - _PAD
    nu, ru = k0, float(r0) + _PAD
    ceil = math.ceil
    for _ in range(n):
        # lower orbit
        i = bisect_left(his, rl)
        if i < nb and abs(rl - his[i]) < 1e-9:
            i = _exact_branch(exact_his, rl)
        if i == nb:
            i = nb - 1
        s, c = fb[i]
        y = s * rl + c - _PAD
        m = ceil(y) - 1
        nl += m
        rl = y - m
        # upper orbit
        i = bisect_left(his, ru)
        if i < nb and abs(ru - his[i]) < 1e-9:
            i = _exact_branch(exact_his, ru)
        if i == nb:
            i = nb - 1
        s, c = fb[i]
        y = s * ru + c + _PAD
        m = ceil(y) - 1
        nu += m
        ru = y - m
    # float renormalisation of y - m is exact or rounds by half an ulp; the
    # padding is far above that, so the returned bounds are rigorous
    return Fraction(nl) + Fraction(rl), Fraction(nu) + Fraction(ru)


def _exact_branch(exact_his, r: float) -> int:
    q = Fraction(r)
    for i, h in enumerate(exact_his):
        if q <= h:
            return i
    return len(exact_his) - 1


def _float_orbit_pad_check(F: MonotoneLift) -> bool:
    """Guard: padding must dominate float evaluation error for these branches."""
    scale = max(max(abs(s), abs(c), 1.0) for s, c in F._fb)
    return _PAD > 16 * scale * 2.0**-52


# ---------------------------------------------------------------------------
# rational certificates


@dataclass(frozen=True)
class RationalCertificate:
    p: int
    q: int
    orbit: tuple            # q points in [0, 1]
    convention_used: str    # "none", or "right" when a point sits on a breakpoint

    @property
    def rho(self) -> Fraction:
        return Fraction(self.p % self.q, self.q) if self.q > 1 else Fraction(0)


def _check_cycle(F: MonotoneLift, steps: Sequence[tuple[int, int]]):
    """Exact periodic orbit following ``steps`` = [(branch, integer shift)].

    Returns ``(points, convention)`` or ``None``.  A point exactly on the
    open left end of its branch is accepted as a right-limit (one-sided)
    orbit point.
    """
    S, C = Fraction(1), Fraction(0)
    for j, m in steps:
        b = F.branches[j]
        S, C = b.slope * S, b.slope * C + b.intercept - m
    if S == 1:
        if C != 0:
            return None
        # rigid piece: any point of the first domain works, take its right end
        x = F.branches[steps[0][0]].hi
    else:
        x = C / (1 - S)
    pts = []
    convention = "none"
    for j, m in steps:
        b = F.branches[j]
        if not b.lo <= x <= b.hi:
            return None
        if x == b.lo:
            convention = "right"
        pts.append(x)
        x = b(x) - m
    if x != pts[0]:
        return None
    return pts, convention


def _guided_candidate(F: MonotoneLift, Q: int, x0: float, burn: int):
    """Float orbit search for a periodic cycle; returns candidate steps or None."""
    n, r = 0, x0
    for _ in range(burn):
        n, r = _float_step(F, n, r)
    rs, ns = [r], [n]
    horizon = 2 * Q + 2
    for _ in range(horizon):
        n, r = _float_step(F, n, r)
        rs.append(r)
        ns.append(n)
    last = len(rs) - 1
    for q in range(1, Q + 1):
        if q > last:
            break
        d = abs(rs[last] - rs[last - q])
        if min(d, 1 - d) < 1e-9:
            return _steps_from_floats(F, rs[last - q:last], ns[last - q:last + 1])
    return None


def _steps_from_floats(F, rs, ns):
    steps = []
    for k, r in enumerate(rs):
        i = bisect_left(F._his, r)
        if i == len(F._his):
            i -= 1
        steps.append((i, ns[k + 1] - ns[k]))
    return steps


def certify_rational(F: MonotoneLift, Q: int = DEFAULT_Q, x0=0.5, burn: int | None = None,
                     exhaustive: bool = True, enclosure_iterations: int | None = None):
    """Certified periodic orbit with rotation number p/q, q <= Q, or ``None``.

    First an orbit-guided search: iterate in floating point, read off a
    candidate cycle and its branch itinerary, and certify it by solving the
    exact affine fixed point of the composed branches.  If that fails and
    ``exhaustive`` is set, every q <= Q with some p/q inside a rotation
    enclosure is examined by enumerating the continuity pieces of ``F^q``.

    ``None`` means no periodic orbit with denominator <= Q (searched
    exhaustively only when ``exhaustive`` is set).
    """
    if burn is None:
        contraction = float(F.max_slope)
        burn = 200 if contraction >= 1 else min(
            20000, int(40 / max(1e-9, -math.log(contraction))) + 50)
    cand = _guided_candidate(F, Q, float(x0), burn)
    if cand is not None:
        cert = _certificate_from_steps(F, cand)
        if cert is not None:
            return cert
    if not exhaustive:
        return None
    n_enc = enclosure_iterations or max(1000, 4 * Q * Q)
    enc = rotation_enclosure(F, n_enc)
    return exhaustive_certify(F, Q, enc)


def _certificate_from_steps(F, steps):
    q = len(steps)
    # reduce to the minimal period
    for d in range(1, q + 1):
        if q % d == 0 and steps[:d] * (q // d) == list(steps):
            steps = steps[:d]
            break
    checked = _check_cycle(F, steps)
    if checked is None:
        return None
    pts, conv = checked
    p = sum(m for _, m in steps)
    q = len(steps)
    g = gcd(p, q)
    if g != 1:
        return None
    return RationalCertificate(p, q, tuple(pts), conv)


class Piece(NamedTuple):
    lo: Fraction       # domain (lo, hi] inside (0, 1]
    hi: Fraction
    slope: Fraction
    intercept: Fraction   # F^k(x) = slope x + intercept on the piece (lifted)
    word: tuple           # branch indices visited


def continuity_pieces(F: MonotoneLift, q: int) -> list[Piece]:
    """Continuity pieces of ``F^q`` restricted to (0, 1], exact.

    Built by pushing each piece of ``F^k`` forward and cutting it where its
    image crosses a breakpoint (mod 1).
    """
    pieces = [Piece(Fraction(0), Fraction(1), Fraction(1), Fraction(0), ())]
    for _ in range(q):
        pieces = _refine(F, pieces)
    return pieces


def _refine(F: MonotoneLift, pieces: list[Piece]) -> list[Piece]:
    out = []
    cuts = [b.hi for b in F.branches]
    for pc in pieces:
        y_lo = pc.slope * pc.lo + pc.intercept
        y_hi = pc.slope * pc.hi + pc.intercept
        # breakpoints t + k with y_lo < t + k < y_hi split the piece
        marks = []
        for k in range(math.floor(y_lo), math.ceil(y_hi) + 1):
            for t in [Fraction(0)] + cuts:
                v = t + k
                if y_lo < v < y_hi:
                    marks.append(v)
        marks = sorted(set(marks))
        ys = [y_lo] + marks + [y_hi]
        for a, b in zip(ys, ys[1:]):
            # the image segment (a, b] lies in one branch domain mod 1
            n, rb = split_unit(b)
            j = F.branch_index(rb)
            br = F.branches[j]
            xa = (a - pc.intercept) / pc.slope
            xb = (b - pc.intercept) / pc.slope
            out.append(Piece(xa, xb, br.slope * pc.slope,
                             br.slope * (pc.intercept - n) + br.intercept + n,
                             pc.word + (j,)))
    return out


def exhaustive_certify(F: MonotoneLift, Q: int, enclosure: RotationEnclosure | None = None):
    """Brute search over all q <= Q (restricted to p/q inside ``enclosure``)."""
    pieces = [Piece(Fraction(0), Fraction(1), Fraction(1), Fraction(0), ())]
    for q in range(1, Q + 1):
        pieces = _refine(F, pieces)
        ps = _candidate_numerators(q, enclosure)
        if not ps:
            continue
        for pc in pieces:
            for p in ps:
                x = _piece_fixed_point(pc, p)
                if x is None:
                    continue
                cert = _certificate_from_piece(F, pc, p)
                if cert is not None:
                    return cert
    return None


def _candidate_numerators(q, enclosure):
    if enclosure is None:
        return list(range(0, q + 1))
    lo = math.ceil(enclosure.lower * q)
    hi = math.floor(enclosure.upper * q)
    return [p for p in range(lo, hi + 1) if gcd(p, q) == 1 or q == 1]


def _piece_fixed_point(pc: Piece, p: int):
    if pc.slope == 1:
        if pc.intercept == p:
            return pc.hi
        return None
    x = (pc.intercept - p) / (1 - pc.slope)
    if pc.lo <= x <= pc.hi:
        return x
    return None


def _certificate_from_piece(F, pc: Piece, p: int):
    """Certify the cycle of a piece whose ``F^q - p`` has a fixed point.

    Integer shifts are constant on the open piece, so they are read off its
    midpoint; a fixed point on the open left end is then accepted by the
    exact check as a right-limit orbit point.
    """
    steps = []
    y = (pc.lo + pc.hi) / 2
    for j in pc.word:
        n, y = split_unit(F.branches[j](y))
        steps.append((j, n))
    if sum(m for _, m in steps) != p:
        return None
    return _certificate_from_steps(F, steps)


# ---------------------------------------------------------------------------
# attractor covers


@dataclass(frozen=True)
class IntervalCover:
    depth: int
    intervals: tuple          # sorted, pairwise disjoint closed intervals in [0, 1]

    @property
    def total_length(self) -> Fraction:
        return sum((b - a for a, b in self.intervals), Fraction(0))

    def __len__(self) -> int:
        return len(self.intervals)

    def contains(self, x) -> bool:
        return any(a <= x <= b for a, b in self.intervals)

    def covers(self, other: "IntervalCover") -> bool:
        """Point-set inclusion ``other ⊆ self``."""
        return all(any(a <= c and d <= b for a, b in self.intervals)
                   for c, d in other.intervals)


def _merge(intervals):
    intervals = sorted(intervals)
    out = []
    for a, b in intervals:
        if out and a <= out[-1][1]:
            if b > out[-1][1]:
                out[-1] = (out[-1][0], b)
        else:
            out.append((a, b))
    return tuple(out)


def _image_mod1(br: Branch, a, b):
    """Closed image of [a, b] under ``br`` reduced into [0, 1] (maybe split)."""
    ya, yb = br(a), br(b)
    k = math.floor(ya)
    ya, yb = ya - k, yb - k
    if yb <= 1:
        return [(ya, yb)]
    return [(ya, Fraction(1)), (Fraction(0), yb - 1)]


def cover_step(F: MonotoneLift, intervals) -> tuple:
    out = []
    for a, b in intervals:
        for br in F.branches:
            lo, hi = max(a, br.lo), min(b, br.hi)
            if lo <= hi:
                out.extend(_image_mod1(br, lo, hi))
    return _merge(out)


def attractor_cover(F: MonotoneLift, depth: int) -> IntervalCover:
    """Forward images of the whole circle: ``cover(k) = F^k(S^1)`` on closed pieces.

    Every omega-limit set lies in every cover.
    """
    return attractor_covers(F, depth)[-1]


def attractor_covers(F: MonotoneLift, depth: int) -> list[IntervalCover]:
    if depth < 0:
        raise ValueError("depth must be non-negative")
    if any(b.slope >= 1 for b in F.branches):
        raise NotContraction("covers need every slope < 1")
    cur = ((Fraction(0), Fraction(1)),)
    covers = [IntervalCover(0, cur)]
    for k in range(1, depth + 1):
        cur = cover_step(F, cur)
        covers.append(IntervalCover(k, cur))
    return covers


# ---------------------------------------------------------------------------
# filled graphs


def filled_graph(F: MonotoneLift) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    """Segments of Γ(F) over 0 <= x <= 1: branch graphs plus vertical jumps."""
    segs = []
    bs = F.branches
    first, last = bs[0], bs[-1]
    left_end = last(1) - 1
    segs.append(((0.0, float(left_end)), (0.0, float(first(0)))))
    for i, b in enumerate(bs):
        segs.append(((float(b.lo), float(b(b.lo))), (float(b.hi), float(b(b.hi)))))
        if i + 1 < len(bs):
            nxt = bs[i + 1]
            segs.append(((float(b.hi), float(b(b.hi))), (float(b.hi), float(nxt(b.hi)))))
    segs.append(((1.0, float(last(1))), (1.0, float(first(0) + 1))))
    return [s for s in segs]


def _dist_points_to_segments(pts: np.ndarray, segs: np.ndarray) -> np.ndarray:
    a = segs[:, 0, :]
    d = segs[:, 1, :] - a
    dd = np.einsum("ij,ij->i", d, d)
    rel = pts[:, None, :] - a[None, :, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(dd > 0, np.einsum("kij,ij->ki", rel, d) / np.where(dd > 0, dd, 1), 0.0)
    t = np.clip(t, 0.0, 1.0)
    proj = a[None, :, :] + t[:, :, None] * d[None, :, :]
    dist = np.linalg.norm(pts[:, None, :] - proj, axis=2)
    return dist.min(axis=1)


def _sample(segs: np.ndarray, h: float) -> np.ndarray:
    out = []
    for (x0, y0), (x1, y1) in segs:
        length = math.hypot(x1 - x0, y1 - y0)
        k = max(1, math.ceil(length / h))
        t = np.linspace(0.0, 1.0, k + 1)
        out.append(np.column_stack([x0 + t * (x1 - x0), y0 + t * (y1 - y0)]))
    return np.vstack(out)


def filled_graph_distance(F1: MonotoneLift, F2: MonotoneLift, resolution: float = 1e-5) -> float:
    """Hausdorff distance between Γ(F1) and Γ(F2) (Euclidean).

    Each filled graph is sampled along its segments with spacing at most
    ``resolution``; distances to the other graph are exact point-to-segment
    distances, so the result is within ``resolution / 2`` of the true value.
    """
    s1 = np.array(filled_graph(F1), dtype=float)
    s2 = np.array(filled_graph(F2), dtype=float)
    best = 0.0
    for src, dst in ((s1, s2), (s2, s1)):
        pts = _sample(src, resolution)
        for chunk in np.array_split(pts, max(1, len(pts) // 4096)):
            best = max(best, float(_dist_points_to_segments(chunk, dst).max()))
    return best
