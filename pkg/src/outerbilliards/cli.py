"""Command line interface: ``python -m outerbilliards <command> ...``.

Exit status: 0 success, 1 verification failure, 2 domain error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import circle, dynamics, family, global_attraction, sweep
from .geometry import DomainError, GeometryError, P, SingularHit, quad_from_params, to_q

EXIT_OK, EXIT_FAIL, EXIT_DOMAIN = 0, 1, 2


def fmt(x, exact: bool) -> str:
    if x is None:
        return ""
    if exact:
        x = to_q(x)
        return str(x)
    return f"{float(x):.12g}"


def read_config(path) -> dict:
    """``key = value`` lines; blank lines and ``#`` comments are ignored."""
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {line!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--a", type=Fraction)
    p.add_argument("--b", type=Fraction)
    p.add_argument("--lambda", dest="lam", type=Fraction, help="defaults to 1 - b")
    p.add_argument("--eps", type=Fraction, default=family.DEFAULT_EPS)
    p.add_argument("--q-bound", dest="q_bound", type=int, default=circle.DEFAULT_Q)
    p.add_argument("--iters", type=int)
    p.add_argument("--grid", type=int)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="exact", action="store_true", default=True)
    mode.add_argument("--float", dest="exact", action="store_false")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="outerbilliards", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("orbit", parents=[common], help="periodic orbit or trajectory")
    p.add_argument("--start", default="-1,-1", help="x,y of the starting point")
    p.add_argument("--convention", choices=["left", "right"])
    p.add_argument("--trajectory", action="store_true", help="export the first --iters points")

    p = sub.add_parser("rotation", parents=[common], help="rho(g) at one parameter")

    p = sub.add_parser("staircase", parents=[common], help="rho(g) along a in [a-min, a-max]")
    p.add_argument("--a-min", dest="a_min", type=Fraction, default=Fraction(3, 10))
    p.add_argument("--a-max", dest="a_max", type=Fraction, default=Fraction(6, 10))
    p.add_argument("--steps", type=int, default=301)

    p = sub.add_parser("heatmap", parents=[common], help="rho(g) over the (a, b) square")

    p = sub.add_parser("verify", parents=[common], help="containment and zone certificates")
    p.add_argument("--a-min", dest="a_min", type=Fraction)
    p.add_argument("--a-max", dest="a_max", type=Fraction)
    p.add_argument("--steps", type=int)
    p.add_argument("--samples", type=int, default=10**5)

    p = sub.add_parser("attractor", parents=[common], help="classify the attractor")
    p.add_argument("--depth", type=int, default=30)

    p = sub.add_parser("ergodic", parents=[common], help="Birkhoff averages from random starts")
    p.add_argument("--starts", type=int, default=5)
    p.add_argument("--tol", type=float, default=1e-3)
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        conf = read_config(args.config)
        # re-parse with the file as defaults so explicit flags win
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for k, v in conf.items():
            k = {"lambda": "lam", "q_bound": "q_bound"}.get(k, k)
            if k not in known:
                raise ValueError(f"unknown config key {k!r}")
            act = known[k]
            if k == "exact":
                defaults[k] = v.lower() in ("1", "true", "yes", "exact")
            elif act.type is not None:
                defaults[k] = act.type(v)
            else:
                defaults[k] = v
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


# ---------------------------------------------------------------------------
# commands


def _lam(args):
    if args.b is None:
        raise DomainError("--b is required")
    return args.lam if args.lam is not None else 1 - args.b


def _need_a(args):
    if args.a is None:
        raise DomainError("--a is required")
    return args.a


def cmd_orbit(args, out, err) -> int:
    a, b = _need_a(args), args.b
    bs = dynamics.BilliardSystem(quad_from_params(a, b), _lam(args))
    x, y = args.start.split(",")
    start = P(x.strip(), y.strip())
    w = csv.writer(out, lineterminator="\n")
    if args.trajectory:
        n = args.iters or 100
        rec = dynamics.orbit(bs, start, n, args.convention)
        w.writerow(["index", "x", "y", "vertex"])
        for k, pt in enumerate(rec.points):
            v = bs.vertex_names[rec.itinerary[k]] if k < len(rec.itinerary) else ""
            w.writerow([k, fmt(pt.x, args.exact), fmt(pt.y, args.exact), v])
        if rec.status == "singular":
            err.write(f"singular point at step {rec.singular_step}\n")
        return EXIT_OK
    budget = args.iters or dynamics.DEFAULT_BUDGET
    orb = dynamics.detect_periodic(bs, start, budget, args.convention)
    w.writerow(["index", "x", "y", "vertex"])
    for k, (pt, v) in enumerate(zip(orb.points, orb.itinerary)):
        w.writerow([k, fmt(pt.x, args.exact), fmt(pt.y, args.exact), bs.vertex_names[v]])
    err.write(f"period={orb.period} word={orb.word(bs)} "
              f"degenerate={str(orb.degenerate).lower()}\n")
    return EXIT_OK


ROW_HEADER = ["a", "b", "rho_lower", "rho_upper", "certified", "status"]


def _row(r: sweep.StaircaseRow, exact: bool) -> list:
    return [fmt(r.a, exact), fmt(r.b, exact), fmt(r.rho_lower, exact),
            fmt(r.rho_upper, exact), fmt(r.certified, True) if r.certified is not None else "",
            r.status]


def cmd_rotation(args, out, err) -> int:
    a, b = _need_a(args), args.b
    family.FamilyParams(a, b, lam=_lam(args)).check()
    r = sweep.rho_row(a, b, args.q_bound, args.iters or circle.DEFAULT_ITERATIONS,
                      exhaustive=True)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(ROW_HEADER)
    w.writerow(_row(r, args.exact))
    return EXIT_OK


def cmd_staircase(args, out, err) -> int:
    if args.b is None:
        raise DomainError("--b is required")
    rows = sweep.staircase(args.b, args.a_min, args.a_max, args.steps, args.q_bound,
                           args.iters or 10**5, args.threads)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(ROW_HEADER)
    for r in rows:
        w.writerow(_row(r, args.exact))
    return EXIT_OK


HEATMAP_HEADER = ["i", "j", "a", "b", "rho", "rho_lower", "rho_upper", "certified", "status",
                  "pixel"]


def cmd_heatmap(args, out, err) -> int:
    n = args.grid or 200
    grid = sweep.heatmap(n, args.q_bound, args.iters or 10**4, args.threads)
    base = Path(args.out or "heatmap")
    if base.suffix in (".pgm", ".csv"):
        base = base.with_suffix("")
    pgm = base.with_suffix(".pgm")
    table = base.with_suffix(".csv")
    pgm.write_bytes(sweep.pgm_bytes(grid))
    with open(table, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEATMAP_HEADER)
        for i, line in enumerate(grid):
            for j, r in enumerate(line):
                w.writerow([i, j, fmt(r.a, args.exact), fmt(r.b, args.exact),
                            fmt(r.value, args.exact), fmt(r.rho_lower, args.exact),
                            fmt(r.rho_upper, args.exact),
                            str(r.certified) if r.certified is not None else "",
                            r.status, sweep.pixel(r)])
    err.write(f"wrote {pgm} and {table}\n")
    return EXIT_OK


def _grid(lo, hi, steps):
    if steps == 1:
        return [lo]
    return [lo + (hi - lo) * k / (steps - 1) for k in range(steps)]


def cmd_verify(args, out, err) -> int:
    b = args.b if args.b is not None else Fraction(1, 5)
    is_global = b == Fraction(2, 5)
    a_min = args.a_min if args.a_min is not None else (Fraction(2, 5) if is_global else Fraction(3, 10))
    a_max = args.a_max if args.a_max is not None else (Fraction(1, 2) if is_global else Fraction(3, 5))
    steps = args.steps or (11 if is_global else 31)
    lam = args.lam if args.lam is not None else 1 - b
    report = {"b": str(b), "lambda": str(lam), "containments": [], "global": []}
    ok = True
    for a in _grid(a_min, a_max, steps):
        p = family.FamilyParams(a, b, lam=lam, eps=args.eps)
        rep = family.verify_containments(p)
        ok &= rep.ok
        report["containments"].append({
            "a": str(a), "ok": rep.ok,
            "routes": {k: "".join("ABCD"[v] for v in w) for k, w in rep.itineraries.items()},
            "failures": [{"check": c.name, "detail": c.detail,
                          "offending": [str(v) for v in c.offending]} for c in rep.failures()],
        })
        if is_global and lam == Fraction(3, 5):
            zt = global_attraction.verify_zone_transitions(a)
            bc = global_attraction.verify_ball_cover(a, args.samples, args.seed)
            ok &= zt.ok and bc.ok
            report["global"].append({
                "a": str(a), "ok": zt.ok and bc.ok,
                "checks": [{"check": c.name, "passed": c.passed, "detail": c.detail}
                           for c in zt.checks + bc.checks],
                "incidence_failures": global_attraction.incidence_failures(a),
            })
    report["ok"] = ok
    out.write(json.dumps(report, indent=2) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


ATTRACTOR_HEADER = ["kind", "rho", "index", "x", "y", "x_end", "y_end", "vertex"]


def cmd_attractor(args, out, err) -> int:
    a = _need_a(args)
    p = family.FamilyParams(a, args.b, lam=_lam(args), eps=args.eps).check()
    cls = family.classify_attractor(p, args.q_bound, args.depth,
                                    args.iters or circle.DEFAULT_ITERATIONS)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(ATTRACTOR_HEADER)
    e = args.exact
    if cls.kind == "Periodic":
        orb = cls.two_d_orbit
        for k, (pt, v) in enumerate(zip(orb.points, orb.itinerary)):
            w.writerow([cls.kind, str(cls.rho), k, fmt(pt.x, e), fmt(pt.y, e), "", "",
                        "ABCD"[v]])
        err.write(f"rho={cls.rho} q={cls.rotation.q} planar period={orb.period}\n")
    else:
        enc = cls.enclosure
        lo, hi = enc.mod1()
        rho = f"[{fmt(lo, e)};{fmt(hi, e)}]"
        for k, (s, t) in enumerate(family.lift_cover_2d(p, cls.cover)):
            w.writerow([cls.kind, rho, k, fmt(s.x, e), fmt(s.y, e), fmt(t.x, e), fmt(t.y, e), ""])
        err.write(f"no periodic orbit with q <= {args.q_bound}; "
                  f"{len(cls.cover)} cover intervals at depth {args.depth}\n")
    return EXIT_OK


def cmd_ergodic(args, out, err) -> int:
    a = args.a if args.a is not None else Fraction(9, 20)
    if args.b is not None and args.b != global_attraction.B_FIXED:
        raise DomainError("ergodic runs are supported for b = 0.4 only")
    rep = global_attraction.ergodic_report(a, args.iters or 10**5, args.starts, args.seed)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["observable", "start_x", "start_y", "n", "burn_in", "average", "spread"])
    for s, avg, burn in zip(rep.starts, rep.averages, rep.burn_in):
        w.writerow([rep.observable, fmt(s.x, False), fmt(s.y, False), rep.n, burn,
                    fmt(avg, False), fmt(rep.spread, False)])
    return EXIT_OK if rep.spread < args.tol else EXIT_FAIL


COMMANDS = {
    "orbit": cmd_orbit,
    "rotation": cmd_rotation,
    "staircase": cmd_staircase,
    "heatmap": cmd_heatmap,
    "verify": cmd_verify,
    "attractor": cmd_attractor,
    "ergodic": cmd_ergodic,
}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = parse_args(argv)
    except ValueError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_DOMAIN
    buf = io.StringIO()
    try:
        code = COMMANDS[args.command](args, buf, stderr)
    except (SingularHit, dynamics.NotFound) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_FAIL
    except (DomainError, family.EpsilonTooLarge, GeometryError, ValueError) as exc:
        stderr.write(f"domain error: {exc}\n")
        return EXIT_DOMAIN
    text = buf.getvalue()
    if args.out and args.command != "heatmap":
        Path(args.out).write_text(text)
    else:
        stdout.write(text)
    return code
