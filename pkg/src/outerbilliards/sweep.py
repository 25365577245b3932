"""Parameter sweeps of rho(g): staircases and the (a, b) heatmap."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import circle
from .family import FamilyParams, g_map, in_domain
from .geometry import to_q

SENTINEL = 255      # graymap byte of refused cells; rho is mapped onto 0..254


@dataclass(frozen=True)
class StaircaseRow:
    a: Fraction
    b: Fraction
    rho_lower: Fraction | None
    rho_upper: Fraction | None
    certified: Fraction | None
    status: str                  # certified | enclosed | refused

    @property
    def value(self) -> Fraction | None:
        """Certified value, else the enclosure midpoint, in [0, 1)."""
        if self.certified is not None:
            return self.certified
        if self.rho_lower is None:
            return None
        return ((self.rho_lower + self.rho_upper) / 2) % 1


def rho_row(a, b, Q: int = circle.DEFAULT_Q, iterations: int = 10**5,
            exhaustive: bool = False) -> StaircaseRow:
    """Rotation number of g at (a, b): a certificate, or else an enclosure.

    A certified p/q is reported as the degenerate enclosure [p/q, p/q].
    """
    a, b = to_q(a), to_q(b)
    if not in_domain(a, b):
        return StaircaseRow(a, b, None, None, None, "refused")
    G = g_map(FamilyParams(a, b))
    cert = circle.certify_rational(G, Q, exhaustive=exhaustive)
    if cert is not None:
        return StaircaseRow(a, b, cert.rho, cert.rho, cert.rho, "certified")
    enc = circle.rotation_enclosure(G, iterations)
    lo, hi = enc.mod1()
    return StaircaseRow(a, b, lo, hi, None, "enclosed")


def _row_args(args):
    return rho_row(*args)


def run_rows(jobs: Sequence[tuple], threads: int = 1) -> list[StaircaseRow]:
    """Evaluate jobs in order; with ``threads > 1`` in worker processes.

    Results come back in job order, so output does not depend on ``threads``.
    """
    if threads <= 1:
        return [rho_row(*j) for j in jobs]
    chunk = max(1, len(jobs) // (threads * 8))
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_row_args, jobs, chunksize=chunk))


def staircase(b, a_min, a_max, steps: int = 301, Q: int = circle.DEFAULT_Q,
              iterations: int = 10**5, threads: int = 1) -> list[StaircaseRow]:
    a_min, a_max, b = to_q(a_min), to_q(a_max), to_q(b)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if steps == 1:
        grid = [a_min]
    else:
        grid = [a_min + (a_max - a_min) * k / (steps - 1) for k in range(steps)]
    return run_rows([(a, b, Q, iterations) for a in grid], threads)


def heatmap_cell(i: int, j: int, n: int) -> tuple[Fraction, Fraction]:
    """Centre of cell (row i, column j): rows run over a, columns over b."""
    return Fraction(2 * i + 1, 2 * n), Fraction(2 * j + 1, 2 * n)


def heatmap(n: int = 200, Q: int = circle.DEFAULT_Q, iterations: int = 10**4,
            threads: int = 1) -> list[list[StaircaseRow]]:
    """Grid of rho(g); row i has a = (i + 1/2)/n, column j has b = (j + 1/2)/n."""
    jobs = [heatmap_cell(i, j, n) + (Q, iterations) for i in range(n) for j in range(n)]
    rows = run_rows(jobs, threads)
    return [rows[i * n:(i + 1) * n] for i in range(n)]


def pixel(row: StaircaseRow) -> int:
    v = row.value
    if v is None:
        return SENTINEL
    return int(round(254 * float(v)))


def pgm_bytes(grid: Sequence[Sequence[StaircaseRow]]) -> bytes:
    """Binary P5 graymap, width = number of b values, height = number of a values."""
    h = len(grid)
    w = len(grid[0]) if h else 0
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    return header + bytes(pixel(r) for line in grid for r in line)


def read_pgm(data: bytes) -> tuple[int, int, bytes]:
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary graymap")
    w, h = map(int, parts[1].split())
    return w, h, parts[3]
